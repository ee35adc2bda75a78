#pragma once

#include "irof/backend.hpp"
#include "irof/degradation.hpp"
#include "irof/error.hpp"
#include "irof/image.hpp"
#include "irof/ranking.hpp"
#include "irof/rng.hpp"
#include "irof/segmentation.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace irof {

/// Raised when F(X'^0)_y is zero or non-finite; the image cannot be normalised and is skipped.
class UnusableReference : public DataError {
public:
    using DataError::DataError;
};

/// f_l = F(X'^l)_y / F(X'^0)_y for l = 0..K. values[0] is exactly 1.
struct DegradationCurve {
    std::string image_id;
    std::string method_id;
    Scheme scheme = Scheme::SegmentMean;
    std::size_t target_class = 0;
    double reference_score = 0.0;
    std::vector<double> values;
};

/// Area over the curve: the rectangular mean of (1 - f_l) over every l including both ends.
/// Values above 1 are not clipped and contribute negatively.
[[nodiscard]] double aoc(std::span<const double> values);
[[nodiscard]] double aoc(const DegradationCurve& curve);

/// ceil(fraction * units), for 0 < fraction <= 1.
[[nodiscard]] std::size_t removal_count(double fraction, std::size_t units);

using FrameSink = std::function<void(std::size_t frame_index, const Image& frame)>;

/// Scores every frame of the schedule in batches of the backend's batch_size. When `target` is
/// empty the class predicted on the unmodified image is used.
[[nodiscard]] DegradationCurve degradation_curve(const Image& image, const RemovalSchedule& schedule,
                                                 std::optional<std::size_t> target,
                                                 const SegmentMap* segments, ModelBackend& backend,
                                                 const FrameSink& sink = {});

/// 1 - f_k with k = removal_count(fraction, total_units); `schedule` must hold at least k steps.
[[nodiscard]] double degradation_at_fraction(const Image& image, const RemovalSchedule& schedule,
                                             std::size_t total_units, double fraction,
                                             std::optional<std::size_t> target,
                                             const SegmentMap* segments, ModelBackend& backend);

struct Sample {
    std::string id;
    Image image;
    std::optional<std::size_t> target;
};

/// Images, their segmentations (same order) and the dataset mean colour.
struct Dataset {
    std::vector<Sample> samples;
    std::vector<SegmentMap> segments;
    DatasetMean mean;

    [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
};

/// Segments every sample (in parallel) and computes the dataset mean.
void prepare_dataset(Dataset& dataset, const Segmenter& segmenter, std::size_t workers);

/// Source of removal orderings: externally supplied heatmaps or one of the built-in baselines.
struct Method {
    enum class Kind { Heatmaps, Sobel, Random };

    std::string id;
    Kind kind = Kind::Heatmaps;
    std::vector<RelevanceMap> heatmaps; // one per sample when kind == Heatmaps

    [[nodiscard]] static Method from_heatmaps(std::string id, std::vector<RelevanceMap> maps);
    [[nodiscard]] static Method sobel(std::string id = "sobel");
    [[nodiscard]] static Method random(std::string id = "random");
};

struct EngineConfig {
    Scheme scheme = Scheme::SegmentMean;
    EvidenceMode evidence = EvidenceMode::PositiveOnly;
    /// Curves cover the first ceil(fraction * units) units; 1 gives the full IROF curve.
    double fraction = 1.0;
    std::size_t square_size = 9;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    /// Dump every k-th frame as PNG under dump_dir/<method>/ (0 disables).
    std::size_t dump_every = 0;
    std::filesystem::path dump_dir;

    void validate() const;
};

[[nodiscard]] nlohmann::json describe(const EngineConfig& config);

/// Removal schedule of one sample under `scheme` for the given ordering source.
///
/// Random orderings draw from Pcg32(image_seed(seed, index), stream); `independent` selects the
/// streams reserved for a random method under test so it never coincides with the baseline.
[[nodiscard]] RemovalSchedule schedule_for(const Dataset& dataset, std::size_t index,
                                           const Method& method, Scheme scheme,
                                           EvidenceMode evidence, double fraction,
                                           std::size_t square_size, std::uint64_t seed,
                                           bool independent = false);

/// Number of removal units of a sample under `scheme`.
[[nodiscard]] std::size_t unit_count(const Dataset& dataset, std::size_t index, Scheme scheme,
                                     std::size_t square_size);

struct SkippedImage {
    std::string image_id;
    std::string reason;
};

struct IROFResult {
    std::string method_id;
    Scheme scheme = Scheme::SegmentMean;
    std::vector<std::string> image_ids;
    std::vector<double> per_image_aoc;
    std::vector<DegradationCurve> curves;
    std::vector<SkippedImage> skipped;
    double irof_score = 0.0;     // 100 x mean AOC
    double standard_error = 0.0; // on the same 0-100 scale
    std::size_t n_images = 0;
    std::size_t n_skipped = 0;
};

/// Mean AOC over the dataset for one method, scaled to 0-100. Images whose reference score is
/// unusable are skipped and counted; throws DataError when every image is skipped.
[[nodiscard]] IROFResult evaluate_irof(const Dataset& dataset, const Method& method, const EngineConfig& config,
                              ModelBackend& backend);

} // namespace irof
