#pragma once

#include "irof/backend.hpp"
#include "irof/engine.hpp"
#include "irof/stats.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace irof {

enum class Evaluator { IrofMean, IrofBlack, PixelMean, PixelBlack, Samek };

[[nodiscard]] std::string_view to_string(Evaluator evaluator) noexcept;
[[nodiscard]] Evaluator parse_evaluator(std::string_view text);
[[nodiscard]] Scheme scheme_of(Evaluator evaluator) noexcept;
[[nodiscard]] std::vector<Evaluator> all_evaluators();

/// Per-image statistic fed to the paired t-test.
enum class SensitivityStatistic {
    DegradationAtFraction, // 1 - f_k after removing the top ceil(fraction * units) units
    AocDifference,         // AOC of the curve truncated at the same k
};

[[nodiscard]] std::string_view to_string(SensitivityStatistic statistic) noexcept;
[[nodiscard]] SensitivityStatistic parse_statistic(std::string_view text);

struct SensitivityConfig {
    std::vector<Evaluator> evaluators = all_evaluators();
    double fraction = 0.10;
    SensitivityStatistic statistic = SensitivityStatistic::DegradationAtFraction;
    EvidenceMode evidence = EvidenceMode::PositiveOnly;
    std::size_t square_size = 9;
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    void validate() const;
};

[[nodiscard]] nlohmann::json describe(const SensitivityConfig& config);

/// One (method, evaluator) entry of the p-value matrix.
struct SensitivityCell {
    std::string method_id;
    Evaluator evaluator = Evaluator::IrofMean;
    std::vector<std::string> image_ids;
    std::vector<double> method_values;
    std::vector<double> baseline_values;
    std::optional<PairedTTestResult> test;
    std::string error; // set when the cell failed; other cells are unaffected
};

struct SensitivityReport {
    std::vector<SensitivityCell> cells;
    std::vector<SkippedImage> skipped;
};

/// For every (method, evaluator) pair, compares the per-image statistic of the method against
/// the random ordering of the same evaluator's units on the same image with a paired t-test.
/// Images whose reference score is unusable are excluded from every cell.
[[nodiscard]] SensitivityReport sensitivity_report(const Dataset& dataset, std::span<const Method> methods,
                                                   const SensitivityConfig& config, ModelBackend& backend);

} // namespace irof
