#include "irof/baselines.hpp"

#include "irof/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace irof {

SegmentRanking random_ranking(std::size_t segment_count, std::uint64_t seed, RngStream stream) {
    if (segment_count == 0) {
        throw DataError("random ranking needs at least one segment");
    }
    SegmentRanking ranking;
    ranking.order.resize(segment_count);
    std::iota(ranking.order.begin(), ranking.order.end(), SegmentLabel{0});
    Pcg32 rng = make_rng(seed, stream);
    shuffle(std::span<SegmentLabel>(ranking.order), rng);
    ranking.importance.resize(segment_count);
    for (std::size_t i = 0; i < segment_count; ++i) {
        ranking.importance[static_cast<std::size_t>(ranking.order[i])] =
            static_cast<double>(segment_count - i) / static_cast<double>(segment_count);
    }
    ranking.evidence_mode = EvidenceMode::Signed;
    return ranking;
}

RelevanceMap sobel_relevance(const Image& image) {
    const std::size_t h = image.height();
    const std::size_t w = image.width();
    const auto data = image.data();
    std::vector<double> lum(h * w);
    if (image.channels() == 1) {
        std::copy(data.begin(), data.end(), lum.begin());
    } else {
        for (std::size_t p = 0; p < h * w; ++p) {
            lum[p] = 0.299 * data[3 * p] + 0.587 * data[3 * p + 1] + 0.114 * data[3 * p + 2];
        }
    }
    auto at = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
        y = std::clamp<std::ptrdiff_t>(y, 0, static_cast<std::ptrdiff_t>(h) - 1);
        x = std::clamp<std::ptrdiff_t>(x, 0, static_cast<std::ptrdiff_t>(w) - 1);
        return lum[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
    };
    std::vector<float> out(h * w);
    for (std::size_t yy = 0; yy < h; ++yy) {
        for (std::size_t xx = 0; xx < w; ++xx) {
            const auto y = static_cast<std::ptrdiff_t>(yy);
            const auto x = static_cast<std::ptrdiff_t>(xx);
            const double gx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1)) -
                              (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
            const double gy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1)) -
                              (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
            out[yy * w + xx] = static_cast<float>(std::sqrt(gx * gx + gy * gy));
        }
    }
    return RelevanceMap(h, w, std::move(out), "sobel");
}

RelevanceMap paint_ranking(const SegmentRanking& ranking, const SegmentMap& segments,
                           std::string method_id) {
    if (ranking.size() != segments.segment_count()) {
        throw DataError("ranking and segment map disagree on the segment count");
    }
    std::vector<float> values(segments.pixel_count());
    const auto labels = segments.labels();
    for (std::size_t p = 0; p < values.size(); ++p) {
        values[p] = static_cast<float>(ranking.importance[static_cast<std::size_t>(labels[p])]);
    }
    return RelevanceMap(segments.height(), segments.width(), std::move(values), std::move(method_id));
}

} // namespace irof
