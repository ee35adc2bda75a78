#pragma once

#include "irof/image.hpp"
#include "irof/ranking.hpp"
#include "irof/rng.hpp"
#include "irof/segmentation.hpp"

#include <cstdint>

namespace irof {

/// Uniformly random segment order from Pcg32(seed, stream). Importances are placeholders
/// (L - i) / L so the ranking stays sorted.
[[nodiscard]] SegmentRanking random_ranking(std::size_t segment_count, std::uint64_t seed,
                                            RngStream stream = RngStream::SegmentOrder);

/// Sobel gradient magnitude of the image's luminance (0.299 R + 0.587 G + 0.114 B for RGB),
/// with edge-replicated borders.
[[nodiscard]] RelevanceMap sobel_relevance(const Image& image);

/// Paints a ranking back onto pixels: every pixel gets its segment's importance.
[[nodiscard]] RelevanceMap paint_ranking(const SegmentRanking& ranking, const SegmentMap& segments,
                                         std::string method_id);

} // namespace irof
