#include "irof/ranking.hpp"

#include "irof/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace irof {

std::string_view to_string(EvidenceMode mode) noexcept {
    switch (mode) {
    case EvidenceMode::PositiveOnly:
        return "positive";
    case EvidenceMode::Absolute:
        return "absolute";
    case EvidenceMode::Signed:
        return "signed";
    }
    return "positive";
}

EvidenceMode parse_evidence_mode(std::string_view text) {
    if (text == "positive" || text == "positive-only") {
        return EvidenceMode::PositiveOnly;
    }
    if (text == "absolute") {
        return EvidenceMode::Absolute;
    }
    if (text == "signed") {
        return EvidenceMode::Signed;
    }
    throw ConfigError("unknown evidence mode '" + std::string(text) +
                      "' (expected positive, absolute or signed)");
}

void SegmentRanking::validate() const {
    const std::size_t n = order.size();
    if (importance.size() != n) {
        throw DataError("ranking has " + std::to_string(n) + " entries but " +
                        std::to_string(importance.size()) + " importances");
    }
    std::vector<bool> seen(n, false);
    for (SegmentLabel l : order) {
        if (l < 0 || static_cast<std::size_t>(l) >= n || seen[static_cast<std::size_t>(l)]) {
            throw DataError("ranking order is not a permutation of 0..L-1 (label " +
                            std::to_string(l) + ")");
        }
        seen[static_cast<std::size_t>(l)] = true;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (importance[static_cast<std::size_t>(order[i])] <
            importance[static_cast<std::size_t>(order[i + 1])]) {
            throw DataError("ranking order is not sorted by descending importance");
        }
    }
}

RelevanceMap preprocess_relevance(const RelevanceMap& map, EvidenceMode mode) {
    std::vector<float> values(map.data().begin(), map.data().end());
    switch (mode) {
    case EvidenceMode::PositiveOnly:
        for (float& v : values) {
            v = std::max(v, 0.0f);
        }
        break;
    case EvidenceMode::Absolute:
        for (float& v : values) {
            v = std::abs(v);
        }
        break;
    case EvidenceMode::Signed:
        break;
    }
    return RelevanceMap(map.height(), map.width(), std::move(values), map.method_id());
}

SegmentRanking ranking_from_importance(std::vector<double> importance, EvidenceMode mode) {
    SegmentRanking ranking;
    ranking.order.resize(importance.size());
    std::iota(ranking.order.begin(), ranking.order.end(), SegmentLabel{0});
    std::stable_sort(ranking.order.begin(), ranking.order.end(),
                     [&](SegmentLabel a, SegmentLabel b) {
                         return importance[static_cast<std::size_t>(a)] >
                                importance[static_cast<std::size_t>(b)];
                     });
    ranking.importance = std::move(importance);
    ranking.evidence_mode = mode;
    return ranking;
}

SegmentRanking rank_segments(const RelevanceMap& map, const SegmentMap& segments, EvidenceMode mode) {
    if (map.height() != segments.height() || map.width() != segments.width()) {
        throw DataError("relevance map is " + std::to_string(map.height()) + "x" +
                        std::to_string(map.width()) + " but segment map is " +
                        std::to_string(segments.height()) + "x" + std::to_string(segments.width()));
    }
    const RelevanceMap processed = preprocess_relevance(map, mode);
    const std::size_t count = segments.segment_count();
    std::vector<double> sums(count, 0.0);
    std::vector<std::size_t> sizes(count, 0);
    const auto labels = segments.labels();
    const auto values = processed.data();
    for (std::size_t p = 0; p < labels.size(); ++p) {
        const auto l = static_cast<std::size_t>(labels[p]);
        sums[l] += values[p];
        ++sizes[l];
    }
    for (std::size_t l = 0; l < count; ++l) {
        sums[l] /= static_cast<double>(sizes[l]);
    }
    return ranking_from_importance(std::move(sums), mode);
}

nlohmann::json to_json(const SegmentRanking& ranking) {
    return {{"order", ranking.order},
            {"importance", ranking.importance},
            {"evidence_mode", to_string(ranking.evidence_mode)}};
}

} // namespace irof
