#pragma once

#include "irof/image.hpp"
#include "irof/rng.hpp"
#include "irof/segmentation.hpp"

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

namespace irof::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("irof-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline Image random_image(std::size_t h, std::size_t w, std::size_t c, Pcg32& rng, ValueRange range = {0.0f, 1.0f}) {
    std::vector<float> data(h * w * c);
    for (float& v : data) {
        v = range.min + static_cast<float>(rng.uniform()) * range.span();
    }
    return Image(h, w, c, std::move(data), range);
}

inline RelevanceMap random_relevance(std::size_t h, std::size_t w, Pcg32& rng, std::string id = "random") {
    std::vector<float> data(h * w);
    for (float& v : data) {
        v = static_cast<float>(2.0 * rng.uniform() - 1.0);
    }
    return RelevanceMap(h, w, std::move(data), std::move(id));
}

/// Valid segmentation made of axis-aligned rectangles from recursive guillotine cuts.
inline SegmentMap random_segmentation(std::size_t h, std::size_t w, std::size_t cuts, Pcg32& rng) {
    struct Rect {
        std::size_t y0, y1, x0, x1;
    };
    std::vector<Rect> rects{{0, h, 0, w}};
    for (std::size_t i = 0; i < cuts; ++i) {
        const std::size_t pick = rng.below(static_cast<std::uint32_t>(rects.size()));
        Rect r = rects[pick];
        const bool vertical = rng.below(2) == 0;
        if (vertical && r.x1 - r.x0 >= 2) {
            const std::size_t cut = r.x0 + 1 + rng.below(static_cast<std::uint32_t>(r.x1 - r.x0 - 1));
            rects[pick] = {r.y0, r.y1, r.x0, cut};
            rects.push_back({r.y0, r.y1, cut, r.x1});
        } else if (!vertical && r.y1 - r.y0 >= 2) {
            const std::size_t cut = r.y0 + 1 + rng.below(static_cast<std::uint32_t>(r.y1 - r.y0 - 1));
            rects[pick] = {r.y0, cut, r.x0, r.x1};
            rects.push_back({cut, r.y1, r.x0, r.x1});
        }
    }
    std::vector<SegmentLabel> labels(h * w);
    for (std::size_t l = 0; l < rects.size(); ++l) {
        for (std::size_t y = rects[l].y0; y < rects[l].y1; ++y) {
            for (std::size_t x = rects[l].x0; x < rects[l].x1; ++x) {
                labels[y * w + x] = static_cast<SegmentLabel>(l);
            }
        }
    }
    return SegmentMap(h, w, canonicalize_labels(labels));
}

} // namespace irof::test
