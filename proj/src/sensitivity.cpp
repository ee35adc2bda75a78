#include "irof/sensitivity.hpp"

#include "irof/error.hpp"
#include "irof/parallel.hpp"

#include <spdlog/spdlog.h>

#include <array>
#include <cmath>
#include <utility>

namespace irof {

namespace {

constexpr std::array<std::pair<Evaluator, std::string_view>, 5> evaluator_names{{
    {Evaluator::IrofMean, "irof-mean"},
    {Evaluator::IrofBlack, "irof-black"},
    {Evaluator::PixelMean, "pixel-mean"},
    {Evaluator::PixelBlack, "pixel-black"},
    {Evaluator::Samek, "samek"},
}};

// Statistic of one ordering on one image, given the unmodified image's target score.
double statistic_of(const Dataset& dataset, std::size_t index, const RemovalSchedule& schedule,
                    std::size_t target, double reference, const SensitivityConfig& config,
                    ModelBackend& backend) {
    const Sample& sample = dataset.samples[index];
    const SegmentMap* segments = &dataset.segments[index];
    if (config.statistic == SensitivityStatistic::AocDifference) {
        return aoc(degradation_curve(sample.image, schedule, target, segments, backend));
    }
    DegradedSequence sequence = degrade(sample.image, schedule, segments);
    sequence.advance_to(schedule.steps().size());
    const std::vector<Image> frame{sequence.current()};
    return 1.0 - class_score(backend.predict_batch(frame)[0], target) / reference;
}

} // namespace

std::string_view to_string(Evaluator evaluator) noexcept {
    for (const auto& [e, name] : evaluator_names) {
        if (e == evaluator) {
            return name;
        }
    }
    return "unknown";
}

Evaluator parse_evaluator(std::string_view text) {
    for (const auto& [e, name] : evaluator_names) {
        if (name == text) {
            return e;
        }
    }
    throw ConfigError("unknown evaluator '" + std::string(text) +
                      "' (expected irof-mean, irof-black, pixel-mean, pixel-black or samek)");
}

Scheme scheme_of(Evaluator evaluator) noexcept {
    switch (evaluator) {
    case Evaluator::IrofMean:
        return Scheme::SegmentMean;
    case Evaluator::IrofBlack:
        return Scheme::SegmentBlack;
    case Evaluator::PixelMean:
        return Scheme::PixelMean;
    case Evaluator::PixelBlack:
        return Scheme::PixelBlack;
    case Evaluator::Samek:
        return Scheme::SamekSquares;
    }
    return Scheme::SegmentMean;
}

std::vector<Evaluator> all_evaluators() {
    std::vector<Evaluator> out;
    for (const auto& entry : evaluator_names) {
        out.push_back(entry.first);
    }
    return out;
}

std::string_view to_string(SensitivityStatistic statistic) noexcept {
    return statistic == SensitivityStatistic::AocDifference ? "aoc" : "degradation-at-fraction";
}

SensitivityStatistic parse_statistic(std::string_view text) {
    if (text == "degradation-at-fraction" || text == "degradation") {
        return SensitivityStatistic::DegradationAtFraction;
    }
    if (text == "aoc") {
        return SensitivityStatistic::AocDifference;
    }
    throw ConfigError("unknown statistic '" + std::string(text) + "' (expected degradation-at-fraction or aoc)");
}

void SensitivityConfig::validate() const {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ConfigError("fraction must lie in (0, 1], got " + std::to_string(fraction));
    }
    if (evaluators.empty()) {
        throw ConfigError("at least one evaluator is required");
    }
    if (square_size == 0) {
        throw ConfigError("square size must be positive");
    }
    if (workers == 0) {
        throw ConfigError("worker count must be positive");
    }
}

nlohmann::json describe(const SensitivityConfig& config) {
    nlohmann::json evaluators = nlohmann::json::array();
    for (Evaluator e : config.evaluators) {
        evaluators.push_back(to_string(e));
    }
    return {{"evaluators", evaluators},
            {"fraction", config.fraction},
            {"removal_count", "ceil(fraction * units); units are segments, pixels or squares"},
            {"statistic", to_string(config.statistic)},
            {"test", "paired two-sided t-test, df = n - 1, method vs random ordering of the same units"},
            {"evidence_mode", to_string(config.evidence)},
            {"square_size", config.square_size},
            {"square_edges", "truncated"},
            {"samek_noise", "per-pixel uniform over the declared value range"},
            {"seed", config.seed},
            {"rng", "pcg32 (setseq_64_xsh_rr_32); per-image seed = seed xor image index"}};
}

SensitivityReport sensitivity_report(const Dataset& dataset, std::span<const Method> methods,
                                     const SensitivityConfig& config, ModelBackend& backend) {
    config.validate();
    SensitivityReport report;
    if (methods.empty()) {
        return report;
    }
    const std::size_t n = dataset.samples.size();
    if (n == 0) {
        throw DataError("dataset is empty");
    }
    if (dataset.segments.size() != n) {
        throw DataError("dataset has not been segmented");
    }

    // Reference scores of the unmodified images, shared by every cell.
    std::vector<std::size_t> targets(n);
    std::vector<double> references(n, 0.0);
    std::vector<std::string> skip_reasons(n);
    parallel_for(n, config.workers, [&](std::size_t i) {
        const Sample& sample = dataset.samples[i];
        const std::vector<Image> frame{sample.image};
        const ClassScores scores = backend.predict_batch(frame)[0];
        targets[i] = sample.target ? *sample.target : argmax(scores);
        const double reference = class_score(scores, targets[i]);
        if (!std::isfinite(reference) || reference <= 0.0) {
            skip_reasons[i] = "reference class score " + std::to_string(reference) + " cannot normalise the curve";
        } else {
            references[i] = reference;
        }
    });
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < n; ++i) {
        if (skip_reasons[i].empty()) {
            usable.push_back(i);
        } else {
            spdlog::warn("skipping image {}: {}", dataset.samples[i].id, skip_reasons[i]);
            report.skipped.push_back({dataset.samples[i].id, skip_reasons[i]});
        }
    }

    const Method baseline = Method::random("random-baseline");
    auto run = [&](const Method& method, Evaluator evaluator, bool independent) {
        std::vector<double> values(usable.size());
        parallel_for(usable.size(), config.workers, [&](std::size_t u) {
            const std::size_t i = usable[u];
            const RemovalSchedule schedule =
                schedule_for(dataset, i, method, scheme_of(evaluator), config.evidence, config.fraction,
                             config.square_size, config.seed, independent);
            values[u] = statistic_of(dataset, i, schedule, targets[i], references[i], config, backend);
        });
        return values;
    };

    for (Evaluator evaluator : config.evaluators) {
        std::vector<double> baseline_values;
        std::string baseline_error;
        try {
            baseline_values = run(baseline, evaluator, false);
        } catch (const Error& e) {
            baseline_error = std::string("random baseline: ") + e.what();
        }
        for (const Method& method : methods) {
            SensitivityCell cell;
            cell.method_id = method.id;
            cell.evaluator = evaluator;
            for (std::size_t i : usable) {
                cell.image_ids.push_back(dataset.samples[i].id);
            }
            try {
                if (!baseline_error.empty()) {
                    throw DataError(baseline_error);
                }
                cell.method_values = run(method, evaluator, method.kind == Method::Kind::Random);
                cell.baseline_values = baseline_values;
                cell.test = paired_t_test(cell.method_values, cell.baseline_values);
            } catch (const Error& e) {
                cell.error = e.what();
                spdlog::error("method {} / evaluator {}: {}", method.id, to_string(evaluator), cell.error);
            }
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

} // namespace irof
