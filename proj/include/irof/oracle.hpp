#pragma once

#include "irof/backend.hpp"
#include "irof/engine.hpp"
#include "irof/image.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace irof {

/// Fixed disk read by the oracle model.
struct Disk {
    double cy = 0.0;
    double cx = 0.0;
    double radius = 0.0;

    [[nodiscard]] bool contains(std::size_t y, std::size_t x) const noexcept {
        const double dy = static_cast<double>(y) - cy;
        const double dx = static_cast<double>(x) - cx;
        return dy * dy + dx * dx <= radius * radius;
    }
};

/// Centred disk with radius 0.1875 * min(H, W) (12 px on a 64 x 64 image).
[[nodiscard]] Disk default_disk(std::size_t height, std::size_t width) noexcept;

/// Two-class oracle: score_1 is the mean normalised intensity inside the disk (averaged over
/// channels), score_0 = 1 - score_1.
[[nodiscard]] ClassScores disk_model_scores(const Image& image, const Disk& disk);

/// 1 inside the disk, 0 elsewhere.
[[nodiscard]] RelevanceMap disk_indicator(std::size_t height, std::size_t width, const Disk& disk,
                                          std::string method_id = "ground-truth");

/// Synthetic images for the disk oracle: a smooth random background in [0.05, 0.45] with a bright
/// textured disk of random intensity in [0.55, 0.95], grey, range [0, 1]. Targets are class 1.
struct DiskFixture {
    Disk disk;
    std::vector<Sample> samples;
    std::vector<RelevanceMap> ground_truth;
};

[[nodiscard]] DiskFixture make_disk_fixture(std::size_t count, std::size_t size, std::uint64_t seed);

} // namespace irof
