#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace irof {

/// Declared value range of a raster, e.g. [0,1] or [-1,1].
struct ValueRange {
    float min = 0.0f;
    float max = 1.0f;

    [[nodiscard]] float span() const noexcept { return max - min; }
    [[nodiscard]] bool contains(float v) const noexcept { return v >= min && v <= max; }
    friend bool operator==(const ValueRange&, const ValueRange&) = default;
};

/// H x W x C float raster, row-major and channel-interleaved.
///
/// Every value lies inside the declared range; construction validates it. Frames produced by
/// degradation are modified through mutable_data() and stay in range because every replacement
/// value (dataset mean, black, uniform noise) is drawn from the same range.
class Image {
public:
    Image() = default;
    Image(std::size_t height, std::size_t width, std::size_t channels, ValueRange range);
    Image(std::size_t height, std::size_t width, std::size_t channels, std::vector<float> data,
          ValueRange range);

    [[nodiscard]] std::size_t height() const noexcept { return height_; }
    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] std::size_t channels() const noexcept { return channels_; }
    [[nodiscard]] std::size_t pixel_count() const noexcept { return height_ * width_; }
    [[nodiscard]] ValueRange range() const noexcept { return range_; }

    [[nodiscard]] std::span<const float> data() const noexcept { return data_; }
    [[nodiscard]] std::span<float> mutable_data() noexcept { return data_; }

    [[nodiscard]] float at(std::size_t y, std::size_t x, std::size_t c = 0) const {
        return data_[(y * width_ + x) * channels_ + c];
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 0;
    ValueRange range_{};
    std::vector<float> data_;
};

/// Single-channel per-pixel attribution produced by one explanation method.
class RelevanceMap {
public:
    RelevanceMap() = default;
    RelevanceMap(std::size_t height, std::size_t width, std::vector<float> data,
                 std::string method_id = {});

    [[nodiscard]] std::size_t height() const noexcept { return height_; }
    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] std::size_t pixel_count() const noexcept { return height_ * width_; }
    [[nodiscard]] std::span<const float> data() const noexcept { return data_; }
    [[nodiscard]] const std::string& method_id() const noexcept { return method_id_; }

    void set_method_id(std::string id) { method_id_ = std::move(id); }

    /// Throws DataError unless the map has the image's height and width.
    void check_matches(const Image& image) const;

    friend bool operator==(const RelevanceMap&, const RelevanceMap&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<float> data_;
    std::string method_id_;
};

/// Per-channel mean colour over an image collection; the IROF replacement value.
struct DatasetMean {
    std::vector<double> per_channel;

    [[nodiscard]] std::size_t channels() const noexcept { return per_channel.size(); }
};

/// Per-channel arithmetic mean over all pixels of all images, using compensated summation.
[[nodiscard]] DatasetMean compute_dataset_mean(std::span<const Image> images);

} // namespace irof
