#pragma once

#include "irof/engine.hpp"
#include "irof/sensitivity.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace irof {

/// {"config": ..., "methods": [{method_id, scheme, irof_score, se, n_images, n_skipped,
/// per_image, skipped}]}. Contains no timestamps, so identical runs give identical bytes.
[[nodiscard]] nlohmann::json result_json(std::span<const IROFResult> results, const nlohmann::json& config);

/// Pretty-printed JSON followed by a newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& value);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Columns image_id, method_id, scheme, l, f_l; values in shortest round-trip form.
void write_curves_csv(const std::filesystem::path& path, std::span<const IROFResult> results);
[[nodiscard]] std::vector<DegradationCurve> read_curves_csv(const std::filesystem::path& path);

/// Mean degradation curve of every method against the fraction of units removed.
[[nodiscard]] std::string curves_svg(std::span<const IROFResult> results);

[[nodiscard]] nlohmann::json sensitivity_json(const SensitivityReport& report, const nlohmann::json& config);

/// Columns method, evaluator, t, p, n.
void write_sensitivity_csv(const std::filesystem::path& path, const SensitivityReport& report);
/// Columns method, evaluator, p, log10_p for log-scale p-value charts.
void write_pvalue_plot_csv(const std::filesystem::path& path, const SensitivityReport& report);
/// log10(p) per evaluator, one line per method.
[[nodiscard]] std::string pvalue_svg(const SensitivityReport& report);

} // namespace irof
