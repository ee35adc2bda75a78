#pragma once

#include "irof/image.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace irof {

using SegmentLabel = std::int32_t;

/// Per-pixel labels 0..L-1 partitioning an image into connected superpixels.
///
/// Invariants (checked on construction): every label in 0..L-1 occurs, and each label's pixel set
/// is a single 4-connected component.
class SegmentMap {
public:
    SegmentMap() = default;
    SegmentMap(std::size_t height, std::size_t width, std::vector<SegmentLabel> labels);

    [[nodiscard]] std::size_t height() const noexcept { return height_; }
    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] std::size_t pixel_count() const noexcept { return labels_.size(); }
    [[nodiscard]] std::size_t segment_count() const noexcept { return segment_count_; }
    [[nodiscard]] std::span<const SegmentLabel> labels() const noexcept { return labels_; }
    [[nodiscard]] SegmentLabel at(std::size_t y, std::size_t x) const { return labels_[y * width_ + x]; }

    friend bool operator==(const SegmentMap&, const SegmentMap&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t segment_count_ = 0;
    std::vector<SegmentLabel> labels_;
};

/// True when every label's pixels form one 4-connected component.
[[nodiscard]] bool labels_four_connected(std::size_t height, std::size_t width,
                                         std::span<const SegmentLabel> labels);

/// Relabels segments in row-major order of first occurrence.
[[nodiscard]] std::vector<SegmentLabel> canonicalize_labels(std::span<const SegmentLabel> labels);

struct SlicParams {
    std::size_t target_segments = 300;
    double compactness = 10.0;
    std::size_t max_iterations = 10;
    // SLIC itself is deterministic; the seed is carried so configs stay uniform across segmenters.
    std::uint64_t rng_seed = 0;

    void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const SlicParams& params);

/// Pluggable segmentation entry point.
class Segmenter {
public:
    virtual ~Segmenter() = default;
    [[nodiscard]] virtual SegmentMap segment(const Image& image) const = 0;
    /// Parameters echoed into every report.
    [[nodiscard]] virtual nlohmann::json describe() const = 0;
};

/// SLIC superpixels: k-means over (colour, x, y) with a 2S x 2S search window, CIELAB colour for
/// RGB input and 0..100 scaled intensity for grey input, followed by a connectivity pass that
/// merges small orphan components into an adjacent segment.
class SlicSegmenter final : public Segmenter {
public:
    explicit SlicSegmenter(SlicParams params = {});

    [[nodiscard]] SegmentMap segment(const Image& image) const override;
    [[nodiscard]] nlohmann::json describe() const override;
    [[nodiscard]] const SlicParams& params() const noexcept { return params_; }

private:
    SlicParams params_;
};

[[nodiscard]] SegmentMap slic_segment(const Image& image, const SlicParams& params);

/// Pixel indices of each segment, ascending within each list.
[[nodiscard]] std::vector<std::vector<std::size_t>> segment_pixel_lists(const SegmentMap& map);

} // namespace irof
