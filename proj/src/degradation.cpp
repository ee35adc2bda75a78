#include "irof/degradation.hpp"

#include "irof/error.hpp"
#include "irof/rng.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace irof {

namespace {

bool is_segment_scheme(Scheme s) { return s == Scheme::SegmentMean || s == Scheme::SegmentBlack; }
bool is_pixel_scheme(Scheme s) { return s == Scheme::PixelMean || s == Scheme::PixelBlack; }

void check_replacement(Scheme scheme, const Replacement& replacement) {
    bool ok = false;
    switch (scheme) {
    case Scheme::SegmentMean:
    case Scheme::PixelMean:
        ok = std::holds_alternative<DatasetMean>(replacement);
        break;
    case Scheme::SegmentBlack:
    case Scheme::PixelBlack:
        ok = std::holds_alternative<BlackFill>(replacement);
        break;
    case Scheme::SamekSquares:
        ok = std::holds_alternative<UniformNoise>(replacement);
        break;
    }
    if (!ok) {
        throw ConfigError("replacement does not match scheme " + std::string(to_string(scheme)));
    }
}

// Indices of the top `count` values, descending, ties by ascending index.
std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t count) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    count = std::min(count, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (values[a] != values[b]) {
                              return values[a] > values[b];
                          }
                          return a < b;
                      });
    idx.resize(count);
    return idx;
}

} // namespace

std::string_view to_string(Scheme scheme) noexcept {
    switch (scheme) {
    case Scheme::SegmentMean:
        return "segment-mean";
    case Scheme::SegmentBlack:
        return "segment-black";
    case Scheme::PixelMean:
        return "pixel-mean";
    case Scheme::PixelBlack:
        return "pixel-black";
    case Scheme::SamekSquares:
        return "samek-squares";
    }
    return "segment-mean";
}

Scheme parse_scheme(std::string_view text) {
    for (Scheme s : {Scheme::SegmentMean, Scheme::SegmentBlack, Scheme::PixelMean,
                     Scheme::PixelBlack, Scheme::SamekSquares}) {
        if (text == to_string(s)) {
            return s;
        }
    }
    throw ConfigError("unknown removal scheme '" + std::string(text) + "'");
}

SquareGrid::Rect SquareGrid::rect(std::size_t square) const noexcept {
    const std::size_t ty = square / tiles_x();
    const std::size_t tx = square % tiles_x();
    return {ty * square_size, std::min(height, (ty + 1) * square_size), tx * square_size,
            std::min(width, (tx + 1) * square_size)};
}

RemovalSchedule::RemovalSchedule(Scheme scheme, std::vector<std::size_t> steps,
                                 Replacement replacement, std::optional<SquareGrid> grid)
    : scheme_(scheme), steps_(std::move(steps)), replacement_(std::move(replacement)), grid_(grid) {
    check_replacement(scheme_, replacement_);
    if (scheme_ == Scheme::SamekSquares && !grid_) {
        throw ConfigError("square schedules need a square grid");
    }
    if (grid_ && grid_->square_size == 0) {
        throw ConfigError("square size must be positive");
    }
    std::vector<std::size_t> sorted = steps_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw DataError("removal schedule lists a unit twice");
    }
}

RemovalSchedule RemovalSchedule::truncated(std::size_t count) const {
    std::vector<std::size_t> head(steps_.begin(),
                                  steps_.begin() + static_cast<std::ptrdiff_t>(std::min(count, steps_.size())));
    return RemovalSchedule(scheme_, std::move(head), replacement_, grid_);
}

RemovalSchedule build_irof_schedule(const SegmentRanking& ranking, const Replacement& replacement) {
    ranking.validate();
    Scheme scheme;
    if (std::holds_alternative<DatasetMean>(replacement)) {
        scheme = Scheme::SegmentMean;
    } else if (std::holds_alternative<BlackFill>(replacement)) {
        scheme = Scheme::SegmentBlack;
    } else {
        throw ConfigError("IROF replaces segments with the dataset mean or black");
    }
    std::vector<std::size_t> steps(ranking.order.begin(), ranking.order.end());
    return RemovalSchedule(scheme, std::move(steps), replacement);
}

RemovalSchedule build_pixel_schedule(const RelevanceMap& map, EvidenceMode mode, std::size_t budget,
                                     const Replacement& replacement) {
    if (budget > map.pixel_count()) {
        throw ConfigError("pixel budget " + std::to_string(budget) + " exceeds the " +
                          std::to_string(map.pixel_count()) + " pixels of the map");
    }
    Scheme scheme;
    if (std::holds_alternative<DatasetMean>(replacement)) {
        scheme = Scheme::PixelMean;
    } else if (std::holds_alternative<BlackFill>(replacement)) {
        scheme = Scheme::PixelBlack;
    } else {
        throw ConfigError("pixel flipping replaces pixels with the dataset mean or black");
    }
    const RelevanceMap processed = preprocess_relevance(map, mode);
    const std::vector<double> values(processed.data().begin(), processed.data().end());
    return RemovalSchedule(scheme, top_indices(values, budget), replacement);
}

std::vector<double> square_importance(const RelevanceMap& map, const SquareGrid& grid,
                                      EvidenceMode mode) {
    if (grid.height != map.height() || grid.width != map.width()) {
        throw DataError("square grid does not match the relevance map");
    }
    const RelevanceMap processed = preprocess_relevance(map, mode);
    const auto values = processed.data();
    std::vector<double> importance(grid.count(), 0.0);
    for (std::size_t s = 0; s < grid.count(); ++s) {
        const auto r = grid.rect(s);
        double sum = 0.0;
        for (std::size_t y = r.y0; y < r.y1; ++y) {
            for (std::size_t x = r.x0; x < r.x1; ++x) {
                sum += values[y * map.width() + x];
            }
        }
        importance[s] = sum / static_cast<double>((r.y1 - r.y0) * (r.x1 - r.x0));
    }
    return importance;
}

RemovalSchedule build_samek_schedule(const RelevanceMap& map, std::size_t square_size,
                                     std::size_t budget, std::uint64_t noise_seed, EvidenceMode mode) {
    if (square_size == 0) {
        throw ConfigError("square size must be positive");
    }
    const SquareGrid grid{map.height(), map.width(), square_size};
    if (budget > grid.count()) {
        throw ConfigError("square budget " + std::to_string(budget) + " exceeds the " +
                          std::to_string(grid.count()) + " squares of the grid");
    }
    const auto importance = square_importance(map, grid, mode);
    return RemovalSchedule(Scheme::SamekSquares, top_indices(importance, budget),
                           UniformNoise{noise_seed}, grid);
}

DegradedSequence::DegradedSequence(const Image& source, RemovalSchedule schedule,
                                   const SegmentMap* segments)
    : source_(source), frame_(source), schedule_(std::move(schedule)),
      replaced_(source.pixel_count(), false) {
    const Scheme scheme = schedule_.scheme();
    const std::size_t channels = source.channels();
    std::size_t units = 0;
    if (is_segment_scheme(scheme)) {
        if (segments == nullptr) {
            throw DataError("segment schemes need the image's segment map");
        }
        if (segments->height() != source.height() || segments->width() != source.width()) {
            throw DataError("segment map does not match the image");
        }
        segment_pixels_ = segment_pixel_lists(*segments);
        units = segments->segment_count();
    } else if (is_pixel_scheme(scheme)) {
        units = source.pixel_count();
    } else {
        const SquareGrid& grid = *schedule_.grid();
        if (grid.height != source.height() || grid.width != source.width()) {
            throw DataError("square grid does not match the image");
        }
        units = grid.count();
    }
    for (std::size_t unit : schedule_.steps()) {
        if (unit >= units) {
            throw DataError("schedule unit " + std::to_string(unit) + " out of range (" +
                            std::to_string(units) + " units)");
        }
    }

    if (const auto* mean = std::get_if<DatasetMean>(&schedule_.replacement())) {
        if (mean->channels() != channels) {
            throw DataError("dataset mean has " + std::to_string(mean->channels()) +
                            " channels but the image has " + std::to_string(channels));
        }
        fill_.reserve(channels);
        for (double m : mean->per_channel) {
            fill_.push_back(std::clamp(static_cast<float>(m), source.range().min, source.range().max));
        }
    } else if (std::holds_alternative<BlackFill>(schedule_.replacement())) {
        fill_.assign(channels, source.range().min);
    } else {
        const auto& noise = std::get<UniformNoise>(schedule_.replacement());
        Pcg32 rng = make_rng(noise.seed, RngStream::SquareNoise);
        const ValueRange r = source.range();
        noise_.resize(source.data().size());
        for (float& v : noise_) {
            v = std::min(r.max, static_cast<float>(r.min + rng.uniform() * r.span()));
        }
    }
}

void DegradedSequence::replace_pixel(std::size_t pixel) {
    const std::size_t channels = frame_.channels();
    auto data = frame_.mutable_data();
    for (std::size_t c = 0; c < channels; ++c) {
        const std::size_t i = pixel * channels + c;
        data[i] = noise_.empty() ? fill_[c] : noise_[i];
    }
    if (!replaced_[pixel]) {
        replaced_[pixel] = true;
        ++replaced_count_;
    }
}

bool DegradedSequence::advance() {
    if (position_ + 1 >= frame_count()) {
        return false;
    }
    const std::size_t unit = schedule_.steps()[position_];
    switch (schedule_.scheme()) {
    case Scheme::SegmentMean:
    case Scheme::SegmentBlack:
        for (std::size_t p : segment_pixels_[unit]) {
            replace_pixel(p);
        }
        break;
    case Scheme::PixelMean:
    case Scheme::PixelBlack:
        replace_pixel(unit);
        break;
    case Scheme::SamekSquares: {
        const auto r = schedule_.grid()->rect(unit);
        for (std::size_t y = r.y0; y < r.y1; ++y) {
            for (std::size_t x = r.x0; x < r.x1; ++x) {
                replace_pixel(y * frame_.width() + x);
            }
        }
        break;
    }
    }
    ++position_;
    return true;
}

void DegradedSequence::advance_to(std::size_t k) {
    if (k < position_ || k >= frame_count()) {
        throw DataError("frame " + std::to_string(k) + " is not reachable from frame " +
                        std::to_string(position_));
    }
    while (position_ < k) {
        advance();
    }
}

DegradedSequence degrade(const Image& image, const RemovalSchedule& schedule, const SegmentMap* segments) {
    return DegradedSequence(image, schedule, segments);
}

nlohmann::json describe(const Replacement& replacement) {
    if (const auto* mean = std::get_if<DatasetMean>(&replacement)) {
        return {{"kind", "dataset-mean"}, {"per_channel", mean->per_channel}};
    }
    if (std::holds_alternative<BlackFill>(replacement)) {
        return {{"kind", "black"}, {"definition", "minimum of the declared value range"}};
    }
    return {{"kind", "uniform-noise"},
            {"seed", std::get<UniformNoise>(replacement).seed},
            {"definition", "per-pixel uniform over the declared value range"}};
}

} // namespace irof
