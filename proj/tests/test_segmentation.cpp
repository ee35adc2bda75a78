#include "irof/error.hpp"
#include "irof/segmentation.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

using namespace irof;

namespace {

Image half_black_half_white() {
    Image img(30, 30, 1, {0, 1});
    for (std::size_t y = 0; y < 30; ++y) {
        for (std::size_t x = 15; x < 30; ++x) {
            img.mutable_data()[y * 30 + x] = 1.0f;
        }
    }
    return img;
}

std::map<SegmentLabel, std::size_t> label_counts(const SegmentMap& map) {
    std::map<SegmentLabel, std::size_t> counts;
    for (SegmentLabel l : map.labels()) {
        ++counts[l];
    }
    return counts;
}

} // namespace

TEST_SUITE("segmentation") {

TEST_CASE("segment maps reject gaps and disconnected labels") {
    CHECK_NOTHROW(SegmentMap(1, 4, {0, 0, 1, 1}));
    CHECK_THROWS_AS(SegmentMap(1, 4, {0, 0, 2, 2}), DataError);
    CHECK_THROWS_AS(SegmentMap(1, 4, {0, 1, 0, 1}), DataError);
    CHECK_THROWS_AS(SegmentMap(2, 2, {0, 0, 0}), DataError);
    CHECK_THROWS_AS(SegmentMap(1, 2, {0, -1}), DataError);
    // Diagonal contact is not 4-connectivity.
    CHECK_THROWS_AS(SegmentMap(2, 2, {0, 1, 1, 0}), DataError);
}

TEST_CASE("canonical labels follow first occurrence") {
    const std::vector<SegmentLabel> raw{7, 7, 3, 3, 9};
    CHECK(canonicalize_labels(raw) == std::vector<SegmentLabel>{0, 0, 1, 1, 2});
}

TEST_CASE("a black/white split is separated near the edge") {
    const SegmentMap map = slic_segment(half_black_half_white(), SlicParams{2, 10.0, 10, 0});
    REQUIRE(map.segment_count() == 2);
    // Boundary location by brute-force count: the column where label changes, per row.
    std::size_t left_pixels = 0;
    const SegmentLabel left_label = map.at(0, 0);
    for (std::size_t y = 0; y < 30; ++y) {
        for (std::size_t x = 0; x < 30; ++x) {
            left_pixels += map.at(y, x) == left_label ? 1 : 0;
        }
    }
    const double boundary_column = static_cast<double>(left_pixels) / 30.0;
    CHECK(std::abs(boundary_column - 15.0) <= 2.0);
    for (std::size_t y = 0; y < 30; ++y) {
        std::size_t row_left = 0;
        for (std::size_t x = 0; x < 30; ++x) {
            row_left += map.at(y, x) == left_label ? 1 : 0;
        }
        CHECK(std::abs(static_cast<double>(row_left) - 15.0) <= 2.0);
    }
}

TEST_CASE("a constant image splits into roughly equal segments") {
    const Image img(20, 20, 1, std::vector<float>(400, 0.4f), {0, 1});
    const SegmentMap map = slic_segment(img, SlicParams{4, 10.0, 10, 0});
    REQUIRE(map.segment_count() == 4);
    for (const auto& [label, count] : label_counts(map)) {
        CHECK(count >= 70);
        CHECK(count <= 130);
    }
}

TEST_CASE("parameter validation") {
    const Image img(4, 4, 1, {0, 1});
    CHECK_THROWS_AS((void)slic_segment(img, SlicParams{17, 10.0, 10, 0}), ConfigError);
    CHECK_THROWS_AS((void)slic_segment(img, SlicParams{0, 10.0, 10, 0}), ConfigError);
    CHECK_THROWS_AS((void)slic_segment(img, SlicParams{4, 0.0, 10, 0}), ConfigError);
    CHECK_THROWS_AS((void)slic_segment(img, SlicParams{4, 10.0, 0, 0}), ConfigError);
    CHECK_NOTHROW((void)slic_segment(img, SlicParams{16, 10.0, 10, 0}));
}

TEST_CASE("segment_pixel_lists examples") {
    const auto lists = segment_pixel_lists(SegmentMap(1, 4, {0, 0, 1, 1}));
    CHECK(lists == std::vector<std::vector<std::size_t>>{{0, 1}, {2, 3}});
    const auto single = segment_pixel_lists(SegmentMap(2, 2, {0, 0, 0, 0}));
    CHECK(single == std::vector<std::vector<std::size_t>>{{0, 1, 2, 3}});
}

TEST_CASE("segment_pixel_lists partition every pixel") {
    Pcg32 rng(3, 3);
    for (int trial = 0; trial < 25; ++trial) {
        const SegmentMap map = test::random_segmentation(16, 16, 1 + rng.below(30), rng);
        const auto lists = segment_pixel_lists(map);
        REQUIRE(lists.size() == map.segment_count());
        std::vector<std::size_t> all;
        for (std::size_t l = 0; l < lists.size(); ++l) {
            CHECK(std::is_sorted(lists[l].begin(), lists[l].end()));
            for (std::size_t p : lists[l]) {
                CHECK(map.labels()[p] == static_cast<SegmentLabel>(l));
            }
            all.insert(all.end(), lists[l].begin(), lists[l].end());
        }
        std::sort(all.begin(), all.end());
        std::vector<std::size_t> expected(256);
        std::iota(expected.begin(), expected.end(), std::size_t{0});
        CHECK(all == expected);
    }
}

TEST_CASE("high compactness gives grid-like local segments") {
    Pcg32 rng(21, 4);
    const Image img = test::random_image(48, 48, 3, rng);
    const std::size_t target = 36;
    const SegmentMap map = slic_segment(img, SlicParams{target, 1000.0, 10, 0});
    const double bound = 4.0 * std::sqrt(48.0 * 48.0 / static_cast<double>(target));
    const auto lists = segment_pixel_lists(map);
    for (const auto& pixels : lists) {
        std::size_t y0 = 48, y1 = 0, x0 = 48, x1 = 0;
        for (std::size_t p : pixels) {
            y0 = std::min(y0, p / 48);
            y1 = std::max(y1, p / 48);
            x0 = std::min(x0, p % 48);
            x1 = std::max(x1, p % 48);
        }
        const double diag = std::hypot(static_cast<double>(y1 - y0 + 1), static_cast<double>(x1 - x0 + 1));
        CHECK(diag <= bound);
    }
}

TEST_CASE("segmentation is deterministic and the segmenter describes its parameters") {
    Pcg32 rng(8, 8);
    const Image img = test::random_image(40, 30, 3, rng);
    const SlicSegmenter segmenter(SlicParams{50, 10.0, 10, 0});
    CHECK(segmenter.segment(img) == segmenter.segment(img));
    const auto desc = segmenter.describe();
    CHECK(desc.dump() == SlicSegmenter(SlicParams{50, 10.0, 10, 0}).describe().dump());
    CHECK(desc.dump() != SlicSegmenter(SlicParams{51, 10.0, 10, 0}).describe().dump());
}

TEST_CASE("grey and colour images yield valid maps near the target count") {
    Pcg32 rng(9, 1);
    for (std::size_t c : {1u, 3u}) {
        const Image img = test::random_image(64, 64, c, rng);
        const SegmentMap map = slic_segment(img, SlicParams{100, 10.0, 10, 0});
        CHECK(labels_four_connected(64, 64, map.labels()));
        CHECK(map.segment_count() >= 50);
        CHECK(map.segment_count() <= 150);
    }
}

} // TEST_SUITE
