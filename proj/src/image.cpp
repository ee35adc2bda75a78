#include "irof/image.hpp"

#include "irof/error.hpp"

#include <cmath>
#include <string>

namespace irof {

namespace {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

void check_shape(std::size_t height, std::size_t width, std::size_t channels) {
    if (height == 0 || width == 0) {
        throw DataError("image dimensions must be positive");
    }
    if (channels != 1 && channels != 3) {
        throw DataError("image must have 1 or 3 channels, got " + std::to_string(channels));
    }
}

} // namespace

Image::Image(std::size_t height, std::size_t width, std::size_t channels, ValueRange range)
    : height_(height), width_(width), channels_(channels), range_(range),
      data_(height * width * channels, range.min) {
    check_shape(height, width, channels);
    if (!(range.min < range.max)) {
        throw DataError("value range must satisfy min < max");
    }
}

Image::Image(std::size_t height, std::size_t width, std::size_t channels, std::vector<float> data,
             ValueRange range)
    : height_(height), width_(width), channels_(channels), range_(range), data_(std::move(data)) {
    check_shape(height, width, channels);
    if (!(range.min < range.max)) {
        throw DataError("value range must satisfy min < max");
    }
    if (data_.size() != height * width * channels) {
        throw DataError("image payload has " + std::to_string(data_.size()) + " values, expected " +
                        std::to_string(height * width * channels));
    }
    for (float v : data_) {
        if (!range.contains(v)) {
            throw DataError("image value " + std::to_string(v) + " outside declared range [" +
                            std::to_string(range.min) + ", " + std::to_string(range.max) + "]");
        }
    }
}

RelevanceMap::RelevanceMap(std::size_t height, std::size_t width, std::vector<float> data,
                           std::string method_id)
    : height_(height), width_(width), data_(std::move(data)), method_id_(std::move(method_id)) {
    if (height == 0 || width == 0) {
        throw DataError("relevance map dimensions must be positive");
    }
    if (data_.size() != height * width) {
        throw DataError("relevance payload has " + std::to_string(data_.size()) +
                        " values, expected " + std::to_string(height * width));
    }
    for (float v : data_) {
        if (!std::isfinite(v)) {
            throw DataError("relevance map contains a non-finite value");
        }
    }
}

void RelevanceMap::check_matches(const Image& image) const {
    if (height_ != image.height() || width_ != image.width()) {
        throw DataError("relevance map is " + std::to_string(height_) + "x" +
                        std::to_string(width_) + " but image is " +
                        std::to_string(image.height()) + "x" + std::to_string(image.width()));
    }
}

DatasetMean compute_dataset_mean(std::span<const Image> images) {
    if (images.empty()) {
        throw DataError("cannot compute a dataset mean over an empty collection");
    }
    const std::size_t channels = images.front().channels();
    std::vector<CompensatedSum> sums(channels);
    std::size_t pixels = 0;
    for (const Image& image : images) {
        if (image.channels() != channels) {
            throw DataError("dataset mixes " + std::to_string(channels) + "- and " +
                            std::to_string(image.channels()) + "-channel images");
        }
        const auto data = image.data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            sums[i % channels].add(data[i]);
        }
        pixels += image.pixel_count();
    }
    DatasetMean mean;
    mean.per_channel.reserve(channels);
    for (const auto& s : sums) {
        mean.per_channel.push_back(s.value() / static_cast<double>(pixels));
    }
    return mean;
}

} // namespace irof
