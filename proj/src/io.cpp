#include "irof/io.hpp"

#include "irof/error.hpp"

#include <json.hpp>
#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace irof {

namespace {

using FilePtr = std::unique_ptr<FILE, int (*)(FILE*)>;

FilePtr open_file(const fs::path& path, const char* mode) {
    return FilePtr(std::fopen(path.c_str(), mode), &std::fclose);
}

std::uint32_t to_little_endian(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
    }
}

float map_value(double v, double src_min, double src_span, ValueRange dst) {
    const double mapped = dst.min + (v - src_min) * (static_cast<double>(dst.span()) / src_span);
    return std::clamp(static_cast<float>(mapped), dst.min, dst.max);
}

bool has_extension(const fs::path& path, std::string_view ext) {
    std::string e = path.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e == ext;
}

} // namespace

fs::path sidecar_path(const fs::path& payload) {
    fs::path p = payload;
    p.replace_extension(".json");
    return p;
}

RasterHeader read_sidecar(const fs::path& sidecar) {
    std::ifstream in(sidecar);
    if (!in) {
        throw DataError("missing sidecar " + sidecar.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed sidecar " + sidecar.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("height") || !j.contains("width")) {
        throw DataError("sidecar " + sidecar.string() + " lacks height/width fields");
    }
    RasterHeader h;
    try {
        h.height = j.at("height").get<std::size_t>();
        h.width = j.at("width").get<std::size_t>();
        h.channels = j.value("channels", std::size_t{1});
        h.method_id = j.value("method_id", std::string{});
        if (j.contains("value_range") && !j["value_range"].is_null()) {
            const auto& r = j["value_range"];
            if (!r.is_array() || r.size() != 2) {
                throw DataError("sidecar " + sidecar.string() + ": value_range must be [min, max]");
            }
            h.value_range = ValueRange{r[0].get<float>(), r[1].get<float>()};
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed sidecar " + sidecar.string() + ": " + e.what());
    }
    return h;
}

void save_raw(const fs::path& payload, std::span<const float> values, const RasterHeader& header) {
    if (values.size() != header.height * header.width * header.channels) {
        throw DataError("raster payload size does not match its header");
    }
    {
        auto fp = open_file(payload, "wb");
        if (!fp) {
            throw DataError("cannot write " + payload.string());
        }
        std::vector<std::uint32_t> words(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            words[i] = to_little_endian(std::bit_cast<std::uint32_t>(values[i]));
        }
        if (std::fwrite(words.data(), sizeof(std::uint32_t), words.size(), fp.get()) !=
            words.size()) {
            throw DataError("short write to " + payload.string());
        }
    }
    nlohmann::json j;
    j["height"] = header.height;
    j["width"] = header.width;
    j["channels"] = header.channels;
    j["method_id"] = header.method_id;
    if (header.value_range) {
        j["value_range"] = {header.value_range->min, header.value_range->max};
    } else {
        j["value_range"] = nullptr;
    }
    std::ofstream out(sidecar_path(payload));
    if (!out) {
        throw DataError("cannot write " + sidecar_path(payload).string());
    }
    out << j.dump(2) << '\n';
}

std::vector<float> load_raw(const fs::path& payload, RasterHeader& header) {
    header = read_sidecar(sidecar_path(payload));
    auto fp = open_file(payload, "rb");
    if (!fp) {
        throw DataError("cannot open " + payload.string());
    }
    std::error_code ec;
    const auto bytes = fs::file_size(payload, ec);
    if (ec) {
        throw DataError("cannot stat " + payload.string());
    }
    const std::size_t expected = header.height * header.width * header.channels;
    if (bytes != expected * sizeof(float)) {
        throw DataError("dimension mismatch in " + payload.string() + ": sidecar says " +
                        std::to_string(header.height) + "x" + std::to_string(header.width) + "x" +
                        std::to_string(header.channels) + " but payload holds " +
                        std::to_string(bytes / sizeof(float)) + " values");
    }
    std::vector<std::uint32_t> words(expected);
    if (std::fread(words.data(), sizeof(std::uint32_t), expected, fp.get()) != expected) {
        throw DataError("short read from " + payload.string());
    }
    std::vector<float> values(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        values[i] = std::bit_cast<float>(to_little_endian(words[i]));
    }
    return values;
}

void save_raw(const fs::path& payload, const Image& image, const std::string& method_id) {
    RasterHeader h{image.height(), image.width(), image.channels(), method_id, image.range()};
    save_raw(payload, image.data(), h);
}

void save_raw(const fs::path& payload, const RelevanceMap& map) {
    RasterHeader h{map.height(), map.width(), 1, map.method_id(), std::nullopt};
    save_raw(payload, map.data(), h);
}

PngRaster read_png(const fs::path& path) {
    auto fp = open_file(path, "rb");
    if (!fp) {
        throw DataError("cannot open " + path.string());
    }
    png_byte signature[8];
    if (std::fread(signature, 1, 8, fp.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
        throw DataError(path.string() + " is not a PNG file");
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("libpng initialisation failed");
    }

    PngRaster raster;
    std::vector<png_byte> buffer;
    std::vector<png_bytep> rows;
    volatile bool unsupported = false;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("corrupt PNG " + path.string());
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);

    if (color == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
        depth = 8;
    }
    if (depth != 8 && depth != 16) {
        unsupported = true;
    } else {
        if (color & PNG_COLOR_MASK_ALPHA) {
            png_set_strip_alpha(png);
        }
        png_read_update_info(png, info);

        raster.height = height;
        raster.width = width;
        raster.bit_depth = depth;
        raster.channels = png_get_channels(png, info);
        const std::size_t row_bytes = png_get_rowbytes(png, info);
        buffer.resize(row_bytes * height);
        rows.resize(height);
        for (png_uint_32 y = 0; y < height; ++y) {
            rows[y] = buffer.data() + y * row_bytes;
        }
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);

    if (unsupported) {
        throw DataError("unsupported PNG bit depth " + std::to_string(depth) + " in " +
                        path.string());
    }
    if (raster.channels != 1 && raster.channels != 3) {
        throw DataError("unsupported PNG channel layout in " + path.string());
    }

    const std::size_t count = raster.height * raster.width * raster.channels;
    raster.samples.resize(count);
    if (raster.bit_depth == 8) {
        std::copy_n(buffer.begin(), count, raster.samples.begin());
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            raster.samples[i] =
                static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
        }
    }
    return raster;
}

void write_png(const fs::path& path, const PngRaster& raster) {
    if (raster.channels != 1 && raster.channels != 3) {
        throw DataError("PNG output supports 1 or 3 channels");
    }
    if (raster.bit_depth != 8 && raster.bit_depth != 16) {
        throw DataError("PNG output supports bit depth 8 or 16");
    }
    auto fp = open_file(path, "wb");
    if (!fp) {
        throw DataError("cannot write " + path.string());
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw DataError("libpng initialisation failed");
    }

    const std::size_t bytes_per_sample = raster.bit_depth == 16 ? 2 : 1;
    const std::size_t row_bytes = raster.width * raster.channels * bytes_per_sample;
    std::vector<png_byte> buffer(row_bytes * raster.height);
    for (std::size_t i = 0; i < raster.samples.size(); ++i) {
        if (bytes_per_sample == 2) {
            buffer[2 * i] = static_cast<png_byte>(raster.samples[i] >> 8);
            buffer[2 * i + 1] = static_cast<png_byte>(raster.samples[i] & 0xff);
        } else {
            buffer[i] = static_cast<png_byte>(raster.samples[i]);
        }
    }
    std::vector<png_bytep> rows(raster.height);
    for (std::size_t y = 0; y < raster.height; ++y) {
        rows[y] = buffer.data() + y * row_bytes;
    }

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("failed writing PNG " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(raster.width),
                 static_cast<png_uint_32>(raster.height), raster.bit_depth,
                 raster.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void save_png(const fs::path& path, const Image& image) {
    PngRaster raster;
    raster.height = image.height();
    raster.width = image.width();
    raster.channels = image.channels();
    raster.bit_depth = 8;
    raster.samples.reserve(image.data().size());
    const double span = image.range().span();
    for (float v : image.data()) {
        const double unit = (v - image.range().min) / span;
        raster.samples.push_back(static_cast<std::uint16_t>(std::lround(std::clamp(unit, 0.0, 1.0) * 255.0)));
    }
    write_png(path, raster);
}

Image load_image(const fs::path& path, ValueRange declared) {
    if (!(declared.min < declared.max)) {
        throw ConfigError("declared value range must satisfy min < max");
    }
    if (has_extension(path, ".png")) {
        const PngRaster raster = read_png(path);
        const double max_sample = raster.bit_depth == 16 ? 65535.0 : 255.0;
        std::vector<float> data(raster.samples.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            data[i] = map_value(raster.samples[i], 0.0, max_sample, declared);
        }
        return Image(raster.height, raster.width, raster.channels, std::move(data), declared);
    }
    if (has_extension(path, ".f32")) {
        RasterHeader header;
        std::vector<float> data = load_raw(path, header);
        if (header.value_range) {
            const ValueRange src = *header.value_range;
            if (!(src.min < src.max)) {
                throw DataError("sidecar value_range of " + path.string() + " is empty");
            }
            for (float& v : data) {
                if (!std::isfinite(v) || !src.contains(v)) {
                    throw DataError("value outside sidecar value_range in " + path.string());
                }
                v = map_value(v, src.min, src.span(), declared);
            }
        }
        return Image(header.height, header.width, header.channels, std::move(data), declared);
    }
    throw DataError("unsupported image format: " + path.string());
}

RelevanceMap load_relevance(const fs::path& path) {
    if (has_extension(path, ".f32")) {
        RasterHeader header;
        std::vector<float> data = load_raw(path, header);
        if (header.channels != 1) {
            throw DataError("relevance map " + path.string() + " must have one channel");
        }
        return RelevanceMap(header.height, header.width, std::move(data), header.method_id);
    }
    if (has_extension(path, ".png")) {
        const PngRaster raster = read_png(path);
        if (raster.bit_depth != 16 || raster.channels != 1) {
            throw DataError("relevance PNG " + path.string() + " must be 16-bit single-channel");
        }
        std::vector<float> data(raster.samples.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            data[i] = static_cast<float>(raster.samples[i] / 65535.0);
        }
        std::string method_id;
        if (fs::exists(sidecar_path(path))) {
            method_id = read_sidecar(sidecar_path(path)).method_id;
        }
        return RelevanceMap(raster.height, raster.width, std::move(data), std::move(method_id));
    }
    throw DataError("unsupported relevance format: " + path.string());
}

} // namespace irof
