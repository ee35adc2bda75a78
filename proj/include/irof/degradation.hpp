#pragma once

#include "irof/image.hpp"
#include "irof/ranking.hpp"
#include "irof/segmentation.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace irof {

enum class Scheme { SegmentMean, SegmentBlack, PixelMean, PixelBlack, SamekSquares };

[[nodiscard]] std::string_view to_string(Scheme scheme) noexcept;
[[nodiscard]] Scheme parse_scheme(std::string_view text);

/// Minimum of the declared value range, in every channel.
struct BlackFill {};

/// Per-pixel uniform noise over the declared value range, reproducible from `seed`.
struct UniformNoise {
    std::uint64_t seed = 0;
};

using Replacement = std::variant<DatasetMean, BlackFill, UniformNoise>;

/// Non-overlapping square tiling; squares along the right and bottom edges are truncated.
struct SquareGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t square_size = 9;

    [[nodiscard]] std::size_t tiles_y() const noexcept { return (height + square_size - 1) / square_size; }
    [[nodiscard]] std::size_t tiles_x() const noexcept { return (width + square_size - 1) / square_size; }
    [[nodiscard]] std::size_t count() const noexcept { return tiles_y() * tiles_x(); }
    /// Index of the square at tile row `ty`, tile column `tx`.
    [[nodiscard]] std::size_t index(std::size_t ty, std::size_t tx) const noexcept { return ty * tiles_x() + tx; }

    struct Rect {
        std::size_t y0, y1, x0, x1; // half-open
    };
    [[nodiscard]] Rect rect(std::size_t square) const noexcept;
};

/// Ordered removal units for one evaluator. Units are segment labels, pixel indices or square
/// indices depending on the scheme; no unit appears twice.
class RemovalSchedule {
public:
    RemovalSchedule(Scheme scheme, std::vector<std::size_t> steps, Replacement replacement,
                    std::optional<SquareGrid> grid = std::nullopt);

    [[nodiscard]] Scheme scheme() const noexcept { return scheme_; }
    [[nodiscard]] const std::vector<std::size_t>& steps() const noexcept { return steps_; }
    [[nodiscard]] const Replacement& replacement() const noexcept { return replacement_; }
    [[nodiscard]] const std::optional<SquareGrid>& grid() const noexcept { return grid_; }

    /// Same scheme and replacement, keeping only the first `count` steps.
    [[nodiscard]] RemovalSchedule truncated(std::size_t count) const;

private:
    Scheme scheme_;
    std::vector<std::size_t> steps_;
    Replacement replacement_;
    std::optional<SquareGrid> grid_;
};

/// IROF schedule: the full ranking order, replaced by the dataset mean or black.
[[nodiscard]] RemovalSchedule build_irof_schedule(const SegmentRanking& ranking, const Replacement& replacement);

/// Pixel flipping: the top-`budget` pixels by preprocessed relevance, ties by ascending index.
[[nodiscard]] RemovalSchedule build_pixel_schedule(const RelevanceMap& map, EvidenceMode mode,
                                                   std::size_t budget, const Replacement& replacement);

/// Mean preprocessed relevance of every square in `grid`.
[[nodiscard]] std::vector<double> square_importance(const RelevanceMap& map, const SquareGrid& grid,
                                                    EvidenceMode mode);

/// Region perturbation: the top-`budget` squares by mean relevance, replaced with seeded noise.
[[nodiscard]] RemovalSchedule build_samek_schedule(const RelevanceMap& map, std::size_t square_size,
                                                   std::size_t budget, std::uint64_t noise_seed,
                                                   EvidenceMode mode = EvidenceMode::PositiveOnly);

/// Incrementally produced frames X'^0..X'^K of one image under one schedule.
///
/// Frame k is frame k-1 with the k-th unit's pixels overwritten by the replacement value. Only
/// the current frame is held in memory; the sequence is a single-consumer iterator.
class DegradedSequence {
public:
    DegradedSequence(const Image& source, RemovalSchedule schedule, const SegmentMap* segments);

    [[nodiscard]] std::size_t frame_count() const noexcept { return schedule_.steps().size() + 1; }
    [[nodiscard]] std::size_t position() const noexcept { return position_; }
    [[nodiscard]] const Image& source() const noexcept { return source_; }
    [[nodiscard]] const Image& current() const noexcept { return frame_; }
    [[nodiscard]] std::size_t replaced_pixels() const noexcept { return replaced_count_; }
    [[nodiscard]] bool is_replaced(std::size_t pixel) const { return replaced_[pixel]; }

    /// Moves to the next frame; false once the last frame is current.
    bool advance();
    /// Moves forward to frame `k` (k >= position()).
    void advance_to(std::size_t k);

private:
    void replace_pixel(std::size_t pixel);

    Image source_;
    Image frame_;
    RemovalSchedule schedule_;
    std::vector<std::vector<std::size_t>> segment_pixels_;
    std::vector<float> fill_;
    std::vector<float> noise_;
    std::vector<bool> replaced_;
    std::size_t replaced_count_ = 0;
    std::size_t position_ = 0;
};

/// Validates the schedule against the image (and segments, for segment schemes).
[[nodiscard]] DegradedSequence degrade(const Image& image, const RemovalSchedule& schedule,
                                       const SegmentMap* segments = nullptr);

[[nodiscard]] nlohmann::json describe(const Replacement& replacement);

} // namespace irof
