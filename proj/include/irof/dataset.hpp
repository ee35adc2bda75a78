#pragma once

#include "irof/engine.hpp"
#include "irof/image.hpp"
#include "irof/segmentation.hpp"

#include <atomic>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace irof {

/// Every `.png` and `.f32` image in `dir`, sorted by file name; the sample id is the file stem.
[[nodiscard]] std::vector<Sample> load_images(const std::filesystem::path& dir, ValueRange declared);

/// `<dir>/<id>.f32` (or `<id>.png`) for every sample, in sample order. The method id of each map
/// is overwritten with `method_id`.
[[nodiscard]] std::vector<RelevanceMap> load_heatmaps(const std::filesystem::path& dir,
                                                      std::span<const Sample> samples,
                                                      const std::string& method_id);

/// Reads `image_id,target` rows (optional header) and sets the target of matching samples.
/// Throws DataError for ids that are not in the dataset.
void apply_targets(std::vector<Sample>& samples, const std::filesystem::path& csv);

/// Segmentations stored as `<id>.labels.png` (16-bit grey) plus `<id>.labels.json` holding the
/// segmenter description. A cached map is reused only when its description matches.
class SegmentCache {
public:
    explicit SegmentCache(std::filesystem::path dir);

    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

    /// Cached map, or a fresh segmentation that is then written to the cache. Safe to call
    /// concurrently for distinct ids.
    [[nodiscard]] SegmentMap get(const std::string& id, const Image& image, const Segmenter& segmenter);
    /// True when a valid entry for `id` made by `segmenter` exists.
    [[nodiscard]] bool contains(const std::string& id, const Segmenter& segmenter) const;

    /// Number of segmentations computed (rather than read) by this instance.
    [[nodiscard]] std::size_t computed() const noexcept { return computed_; }

private:
    std::filesystem::path dir_;
    std::atomic<std::size_t> computed_{0};
};

void save_labels(const std::filesystem::path& png, const SegmentMap& map);
[[nodiscard]] SegmentMap load_labels(const std::filesystem::path& png);

/// prepare_dataset, reading and filling `cache`.
void prepare_dataset(Dataset& dataset, const Segmenter& segmenter, SegmentCache& cache, std::size_t workers);

} // namespace irof
