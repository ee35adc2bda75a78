#include "irof/engine.hpp"

#include "irof/baselines.hpp"
#include "irof/error.hpp"
#include "irof/io.hpp"
#include "irof/parallel.hpp"
#include "irof/stats.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace irof {

namespace {

double reference_or_throw(double score, const std::string& context) {
    if (!std::isfinite(score) || score <= 0.0) {
        throw UnusableReference("reference class score " + std::to_string(score) +
                                " of " + context + " cannot normalise the curve");
    }
    return score;
}

bool is_segment_scheme(Scheme s) { return s == Scheme::SegmentMean || s == Scheme::SegmentBlack; }

} // namespace

double aoc(std::span<const double> values) {
    if (values.empty()) {
        throw DataError("AOC of an empty curve");
    }
    double sum = 0.0;
    for (double f : values) {
        sum += 1.0 - f;
    }
    return sum / static_cast<double>(values.size());
}

double aoc(const DegradationCurve& curve) { return aoc(curve.values); }

std::size_t removal_count(double fraction, std::size_t units) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ConfigError("removal fraction must lie in (0, 1], got " + std::to_string(fraction));
    }
    if (units == 0) {
        return 0;
    }
    // The epsilon keeps products such as 0.1 * 300 from rounding up to 31.
    const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(units) - 1e-9));
    return std::clamp<std::size_t>(k, 1, units);
}

DegradationCurve degradation_curve(const Image& image, const RemovalSchedule& schedule,
                                   std::optional<std::size_t> target, const SegmentMap* segments,
                                   ModelBackend& backend, const FrameSink& sink) {
    DegradedSequence sequence = degrade(image, schedule, segments);
    const std::size_t batch = backend.config().batch_size;

    DegradationCurve curve;
    curve.scheme = schedule.scheme();
    curve.values.reserve(sequence.frame_count());

    std::vector<Image> pending;
    pending.reserve(batch);
    auto flush = [&] {
        const auto scores = backend.predict_batch(pending);
        for (const ClassScores& s : scores) {
            if (!target) {
                target = argmax(s);
            }
            const double score = class_score(s, *target);
            if (curve.values.empty()) {
                curve.reference_score = reference_or_throw(score, "the unmodified image");
                curve.values.push_back(1.0);
            } else {
                curve.values.push_back(score / curve.reference_score);
            }
        }
        pending.clear();
    };

    for (;;) {
        if (sink) {
            sink(sequence.position(), sequence.current());
        }
        pending.push_back(sequence.current());
        if (pending.size() == batch) {
            flush();
        }
        if (!sequence.advance()) {
            break;
        }
    }
    if (!pending.empty()) {
        flush();
    }
    curve.target_class = *target;
    return curve;
}

double degradation_at_fraction(const Image& image, const RemovalSchedule& schedule,
                               std::size_t total_units, double fraction,
                               std::optional<std::size_t> target, const SegmentMap* segments,
                               ModelBackend& backend) {
    const std::size_t k = removal_count(fraction, total_units);
    if (schedule.steps().size() < k) {
        throw DataError("schedule holds " + std::to_string(schedule.steps().size()) +
                        " units but " + std::to_string(k) + " must be removed");
    }
    DegradedSequence sequence = degrade(image, schedule, segments);
    sequence.advance_to(k);
    const std::vector<Image> frames{image, sequence.current()};
    const auto scores = backend.predict_batch(frames);
    const std::size_t y = target ? *target : argmax(scores[0]);
    const double reference = reference_or_throw(class_score(scores[0], y), "the unmodified image");
    return 1.0 - class_score(scores[1], y) / reference;
}

void prepare_dataset(Dataset& dataset, const Segmenter& segmenter, std::size_t workers) {
    if (dataset.samples.empty()) {
        throw DataError("dataset is empty");
    }
    std::vector<SegmentMap> segments(dataset.samples.size());
    parallel_for(dataset.samples.size(), workers,
                 [&](std::size_t i) { segments[i] = segmenter.segment(dataset.samples[i].image); });
    dataset.segments = std::move(segments);
    std::vector<Image> images;
    images.reserve(dataset.samples.size());
    for (const auto& s : dataset.samples) {
        images.push_back(s.image);
    }
    dataset.mean = compute_dataset_mean(images);
}

Method Method::from_heatmaps(std::string id, std::vector<RelevanceMap> maps) {
    Method m;
    m.id = std::move(id);
    m.kind = Kind::Heatmaps;
    m.heatmaps = std::move(maps);
    return m;
}

Method Method::sobel(std::string id) {
    Method m;
    m.id = std::move(id);
    m.kind = Kind::Sobel;
    return m;
}

Method Method::random(std::string id) {
    Method m;
    m.id = std::move(id);
    m.kind = Kind::Random;
    return m;
}

void EngineConfig::validate() const {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ConfigError("fraction must lie in (0, 1]");
    }
    if (square_size == 0) {
        throw ConfigError("square size must be positive");
    }
    if (workers == 0) {
        throw ConfigError("worker count must be positive");
    }
}

nlohmann::json describe(const EngineConfig& config) {
    return {{"scheme", to_string(config.scheme)},
            {"evidence_mode", to_string(config.evidence)},
            {"fraction", config.fraction},
            {"square_size", config.square_size},
            {"square_edges", "truncated"},
            {"seed", config.seed},
            {"rng", "pcg32 (setseq_64_xsh_rr_32); per-image seed = seed xor image index"},
            {"aoc", "rectangular mean of (1 - f_l) over l = 0..K inclusive, unclipped"},
            {"black", "minimum of the declared value range"},
            {"samek_noise", "per-pixel uniform over the declared value range"},
            {"dump_every", config.dump_every}};
}

std::size_t unit_count(const Dataset& dataset, std::size_t index, Scheme scheme, std::size_t square_size) {
    const Image& image = dataset.samples.at(index).image;
    switch (scheme) {
    case Scheme::SegmentMean:
    case Scheme::SegmentBlack:
        return dataset.segments.at(index).segment_count();
    case Scheme::PixelMean:
    case Scheme::PixelBlack:
        return image.pixel_count();
    case Scheme::SamekSquares:
        return SquareGrid{image.height(), image.width(), square_size}.count();
    }
    return 0;
}

RemovalSchedule schedule_for(const Dataset& dataset, std::size_t index, const Method& method,
                             Scheme scheme, EvidenceMode evidence, double fraction,
                             std::size_t square_size, std::uint64_t seed, bool independent) {
    const Sample& sample = dataset.samples.at(index);
    const Image& image = sample.image;
    const std::uint64_t per_image = image_seed(seed, index);
    const bool random = method.kind == Method::Kind::Random;

    auto relevance = [&]() -> RelevanceMap {
        if (method.kind == Method::Kind::Sobel) {
            return sobel_relevance(image);
        }
        if (index >= method.heatmaps.size()) {
            throw DataError("method " + method.id + " has no heatmap for image " + sample.id);
        }
        const RelevanceMap& map = method.heatmaps[index];
        map.check_matches(image);
        return map;
    };
    auto replacement = [&]() -> Replacement {
        if (scheme == Scheme::SegmentMean || scheme == Scheme::PixelMean) {
            return dataset.mean;
        }
        return BlackFill{};
    };

    const std::size_t units = unit_count(dataset, index, scheme, square_size);
    const std::size_t k = removal_count(fraction, units);

    if (is_segment_scheme(scheme)) {
        const SegmentMap& segments = dataset.segments.at(index);
        const SegmentRanking ranking =
            random ? random_ranking(units, per_image,
                                    independent ? RngStream::MethodSegmentOrder : RngStream::SegmentOrder)
                   : rank_segments(relevance(), segments, evidence);
        RemovalSchedule full = build_irof_schedule(ranking, replacement());
        return k < units ? full.truncated(k) : full;
    }
    if (scheme == Scheme::PixelMean || scheme == Scheme::PixelBlack) {
        if (random) {
            Pcg32 rng = make_rng(per_image, independent ? RngStream::MethodPixelOrder : RngStream::PixelOrder);
            return RemovalSchedule(scheme, random_prefix(units, k, rng), replacement());
        }
        return build_pixel_schedule(relevance(), evidence, k, replacement());
    }
    if (random) {
        Pcg32 rng = make_rng(per_image, independent ? RngStream::MethodSquareOrder : RngStream::SquareOrder);
        return RemovalSchedule(Scheme::SamekSquares, random_prefix(units, k, rng), UniformNoise{per_image},
                               SquareGrid{image.height(), image.width(), square_size});
    }
    return build_samek_schedule(relevance(), square_size, k, per_image, evidence);
}

IROFResult evaluate_irof(const Dataset& dataset, const Method& method, const EngineConfig& config,
                ModelBackend& backend) {
    config.validate();
    const std::size_t n = dataset.samples.size();
    if (n == 0) {
        throw DataError("dataset is empty");
    }
    if (dataset.segments.size() != n) {
        throw DataError("dataset has not been segmented");
    }
    if (method.kind == Method::Kind::Heatmaps && method.heatmaps.size() != n) {
        throw DataError("method " + method.id + " has " + std::to_string(method.heatmaps.size()) +
                        " heatmaps for " + std::to_string(n) + " images");
    }

    std::filesystem::path frame_dir;
    if (config.dump_every > 0) {
        frame_dir = config.dump_dir / method.id;
        std::filesystem::create_directories(frame_dir);
    }

    std::vector<std::optional<DegradationCurve>> curves(n);
    std::vector<std::string> skip_reasons(n);
    parallel_for(n, config.workers, [&](std::size_t i) {
        const Sample& sample = dataset.samples[i];
        const RemovalSchedule schedule = schedule_for(dataset, i, method, config.scheme, config.evidence,
                                                      config.fraction, config.square_size, config.seed);
        FrameSink sink;
        if (config.dump_every > 0) {
            const std::size_t last = schedule.steps().size();
            sink = [&, last](std::size_t l, const Image& frame) {
                if (l % config.dump_every == 0 || l == last) {
                    save_png(frame_dir / (sample.id + "_" + std::to_string(l) + ".png"), frame);
                }
            };
        }
        try {
            DegradationCurve curve = degradation_curve(sample.image, schedule, sample.target,
                                                       &dataset.segments[i], backend, sink);
            curve.image_id = sample.id;
            curve.method_id = method.id;
            curves[i] = std::move(curve);
        } catch (const UnusableReference& e) {
            skip_reasons[i] = e.what();
        }
    });

    IROFResult result;
    result.method_id = method.id;
    result.scheme = config.scheme;
    for (std::size_t i = 0; i < n; ++i) {
        if (curves[i]) {
            result.image_ids.push_back(dataset.samples[i].id);
            result.per_image_aoc.push_back(aoc(*curves[i]));
            result.curves.push_back(std::move(*curves[i]));
        } else {
            spdlog::warn("method {}: skipping image {}: {}", method.id, dataset.samples[i].id, skip_reasons[i]);
            result.skipped.push_back({dataset.samples[i].id, skip_reasons[i]});
        }
    }
    result.n_images = result.per_image_aoc.size();
    result.n_skipped = result.skipped.size();
    if (result.n_images == 0) {
        throw DataError("method " + method.id + ": every image was skipped");
    }
    const auto summary = mean_and_standard_error(result.per_image_aoc);
    result.irof_score = 100.0 * summary.mean;
    result.standard_error = 100.0 * summary.standard_error;
    return result;
}

} // namespace irof
