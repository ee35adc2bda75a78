#pragma once

#include "irof/image.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace irof {

namespace fs = std::filesystem;

/// Contents of the JSON sidecar that accompanies every `.f32` payload.
struct RasterHeader {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;
    std::string method_id;
    std::optional<ValueRange> value_range;
};

/// `<dir>/<stem>.json` for a payload at `<dir>/<stem>.f32`.
[[nodiscard]] fs::path sidecar_path(const fs::path& payload);

[[nodiscard]] RasterHeader read_sidecar(const fs::path& sidecar);

/// Writes the little-endian float32 payload and its sidecar. Values are stored verbatim.
void save_raw(const fs::path& payload, std::span<const float> values, const RasterHeader& header);

/// Reads a payload plus sidecar, checking the value count against the header.
[[nodiscard]] std::vector<float> load_raw(const fs::path& payload, RasterHeader& header);

void save_raw(const fs::path& payload, const Image& image, const std::string& method_id = {});
void save_raw(const fs::path& payload, const RelevanceMap& map);

/// Loads an 8/16-bit grey or RGB PNG, or a raw-float raster, mapping values linearly into
/// `declared`. PNG samples map as v / (2^depth - 1); raw rasters map from their sidecar range
/// (or are taken as already in `declared` when the sidecar has none).
[[nodiscard]] Image load_image(const fs::path& path, ValueRange declared);

/// Loads a raw-float raster or a single-channel 16-bit PNG (scaled by 1/65535). Values are not
/// normalised. method_id comes from the sidecar; PNG maps without a sidecar get an empty id.
[[nodiscard]] RelevanceMap load_relevance(const fs::path& path);

/// Decoded PNG samples before any range mapping.
struct PngRaster {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    int bit_depth = 8;
    std::vector<std::uint16_t> samples;
};

[[nodiscard]] PngRaster read_png(const fs::path& path);
void write_png(const fs::path& path, const PngRaster& raster);

/// 8-bit PNG of an image, mapping its declared range onto 0..255.
void save_png(const fs::path& path, const Image& image);

} // namespace irof
