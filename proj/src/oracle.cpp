#include "irof/oracle.hpp"

#include "irof/error.hpp"
#include "irof/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace irof {

namespace {

constexpr std::uint64_t fixture_stream = 0x0d15c;

} // namespace

Disk default_disk(std::size_t height, std::size_t width) noexcept {
    const double side = static_cast<double>(std::min(height, width));
    return {(static_cast<double>(height) - 1.0) / 2.0, (static_cast<double>(width) - 1.0) / 2.0,
            0.1875 * side};
}

ClassScores disk_model_scores(const Image& image, const Disk& disk) {
    const ValueRange range = image.range();
    const std::size_t channels = image.channels();
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t y = 0; y < image.height(); ++y) {
        for (std::size_t x = 0; x < image.width(); ++x) {
            if (!disk.contains(y, x)) {
                continue;
            }
            for (std::size_t c = 0; c < channels; ++c) {
                sum += (static_cast<double>(image.at(y, x, c)) - range.min) / range.span();
            }
            ++count;
        }
    }
    if (count == 0) {
        throw DataError("disk lies outside the " + std::to_string(image.height()) + "x" +
                        std::to_string(image.width()) + " image");
    }
    const double inside = std::clamp(sum / static_cast<double>(count * channels), 0.0, 1.0);
    return ClassScores{{1.0 - inside, inside}};
}

RelevanceMap disk_indicator(std::size_t height, std::size_t width, const Disk& disk, std::string method_id) {
    std::vector<float> values(height * width, 0.0f);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            if (disk.contains(y, x)) {
                values[y * width + x] = 1.0f;
            }
        }
    }
    return RelevanceMap(height, width, std::move(values), std::move(method_id));
}

DiskFixture make_disk_fixture(std::size_t count, std::size_t size, std::uint64_t seed) {
    if (size < 8) {
        throw ConfigError("disk fixture images must be at least 8 px wide");
    }
    DiskFixture fixture;
    fixture.disk = default_disk(size, size);
    Pcg32 rng(seed, fixture_stream);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t n = 0; n < count; ++n) {
        const double base = 0.17 + 0.14 * rng.uniform();
        const double amplitude = 0.1 * rng.uniform();
        const double fy = two_pi * (0.5 + 2.0 * rng.uniform()) / static_cast<double>(size);
        const double fx = two_pi * (0.5 + 2.0 * rng.uniform()) / static_cast<double>(size);
        const double py = two_pi * rng.uniform();
        const double px = two_pi * rng.uniform();
        const double intensity = 0.55 + 0.4 * rng.uniform();

        std::vector<float> data(size * size);
        for (std::size_t y = 0; y < size; ++y) {
            for (std::size_t x = 0; x < size; ++x) {
                double v;
                if (fixture.disk.contains(y, x)) {
                    v = intensity + 0.06 * (rng.uniform() - 0.5);
                } else {
                    v = base + amplitude * std::sin(fy * static_cast<double>(y) + py) *
                                   std::cos(fx * static_cast<double>(x) + px) +
                        0.04 * (rng.uniform() - 0.5);
                }
                data[y * size + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
        char id[32];
        std::snprintf(id, sizeof id, "disk_%03zu", n);
        fixture.samples.push_back({id, Image(size, size, 1, std::move(data), {0.0f, 1.0f}), 1});
        fixture.ground_truth.push_back(disk_indicator(size, size, fixture.disk));
    }
    return fixture;
}

} // namespace irof
