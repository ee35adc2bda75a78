#pragma once

#include "irof/image.hpp"
#include "irof/segmentation.hpp"

#include <json.hpp>

#include <string_view>
#include <vector>

namespace irof {

/// How signed attributions are treated before aggregation.
enum class EvidenceMode { PositiveOnly, Absolute, Signed };

[[nodiscard]] std::string_view to_string(EvidenceMode mode) noexcept;
[[nodiscard]] EvidenceMode parse_evidence_mode(std::string_view text);

/// Segments in removal order, most relevant first.
///
/// `order` is a permutation of 0..L-1 with importance non-increasing along it; equal importances
/// are ordered by ascending label.
struct SegmentRanking {
    std::vector<SegmentLabel> order;
    std::vector<double> importance;
    EvidenceMode evidence_mode = EvidenceMode::PositiveOnly;

    [[nodiscard]] std::size_t size() const noexcept { return order.size(); }
    /// Throws DataError if `order` is not a permutation sorted by `importance`.
    void validate() const;
};

[[nodiscard]] RelevanceMap preprocess_relevance(const RelevanceMap& map, EvidenceMode mode);

/// Sorts labels by descending importance, ties by ascending label.
[[nodiscard]] SegmentRanking ranking_from_importance(std::vector<double> importance, EvidenceMode mode);

/// Mean preprocessed relevance per segment, then ranking_from_importance.
[[nodiscard]] SegmentRanking rank_segments(const RelevanceMap& map, const SegmentMap& segments,
                                           EvidenceMode mode);

[[nodiscard]] nlohmann::json to_json(const SegmentRanking& ranking);

} // namespace irof
