#include "irof/dataset.hpp"

#include "irof/error.hpp"
#include "irof/io.hpp"
#include "irof/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <unordered_map>

namespace irof {

namespace fs = std::filesystem;

namespace {

bool is_image_file(const fs::path& p) {
    const auto ext = p.extension();
    return ext == ".png" || ext == ".f32";
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    const auto last = s.find_last_not_of(" \t\r");
    return first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
}

} // namespace

std::vector<Sample> load_images(const fs::path& dir, ValueRange declared) {
    if (!fs::is_directory(dir)) {
        throw DataError("image directory " + dir.string() + " does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && is_image_file(entry.path()) &&
            entry.path().filename().string().find(".labels.") == std::string::npos) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw DataError("image directory " + dir.string() + " holds no .png or .f32 images");
    }
    std::vector<Sample> samples;
    samples.reserve(files.size());
    for (const fs::path& f : files) {
        const std::string id = f.stem().string();
        if (!samples.empty() && samples.back().id == id) {
            throw DataError("image " + id + " exists both as .png and .f32 in " + dir.string());
        }
        samples.push_back({id, load_image(f, declared), std::nullopt});
    }
    return samples;
}

std::vector<RelevanceMap> load_heatmaps(const fs::path& dir, std::span<const Sample> samples,
                                        const std::string& method_id) {
    if (!fs::is_directory(dir)) {
        throw DataError("heatmap directory " + dir.string() + " for method " + method_id + " does not exist");
    }
    std::vector<RelevanceMap> maps;
    maps.reserve(samples.size());
    for (const Sample& s : samples) {
        fs::path path = dir / (s.id + ".f32");
        if (!fs::exists(path)) {
            path = dir / (s.id + ".png");
        }
        if (!fs::exists(path)) {
            throw DataError("method " + method_id + " has no heatmap for image " + s.id + " (looked for " +
                            (dir / (s.id + ".f32")).string() + ")");
        }
        RelevanceMap map = load_relevance(path);
        map.check_matches(s.image);
        map.set_method_id(method_id);
        maps.push_back(std::move(map));
    }
    return maps;
}

void apply_targets(std::vector<Sample>& samples, const fs::path& csv) {
    std::ifstream in(csv);
    if (!in) {
        throw DataError("cannot read targets file " + csv.string());
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        index.emplace(samples[i].id, i);
    }
    std::string line;
    for (std::size_t number = 1; std::getline(in, line); ++number) {
        line = trim(line);
        if (line.empty() || line.starts_with('#')) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw DataError(csv.string() + ":" + std::to_string(number) + ": expected image_id,target");
        }
        const std::string id = trim(line.substr(0, comma));
        const std::string value = trim(line.substr(comma + 1));
        std::size_t target = 0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), target);
        if (ec != std::errc() || ptr != value.data() + value.size()) {
            if (number == 1) {
                continue; // header row
            }
            throw DataError(csv.string() + ":" + std::to_string(number) + ": target '" + value +
                            "' is not a class index");
        }
        const auto it = index.find(id);
        if (it == index.end()) {
            throw DataError(csv.string() + ":" + std::to_string(number) + ": unknown image " + id);
        }
        samples[it->second].target = target;
    }
}

void save_labels(const fs::path& png, const SegmentMap& map) {
    if (map.segment_count() > 65536) {
        throw DataError("a 16-bit label image holds at most 65536 segments");
    }
    PngRaster raster;
    raster.height = map.height();
    raster.width = map.width();
    raster.channels = 1;
    raster.bit_depth = 16;
    raster.samples.assign(map.labels().begin(), map.labels().end());
    write_png(png, raster);
}

SegmentMap load_labels(const fs::path& png) {
    const PngRaster raster = read_png(png);
    if (raster.channels != 1 || raster.bit_depth != 16) {
        throw DataError(png.string() + " is not a 16-bit single-channel label image");
    }
    std::vector<SegmentLabel> labels(raster.samples.begin(), raster.samples.end());
    return SegmentMap(raster.height, raster.width, std::move(labels));
}

SegmentCache::SegmentCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

bool SegmentCache::contains(const std::string& id, const Segmenter& segmenter) const {
    const fs::path meta = dir_ / (id + ".labels.json");
    if (!fs::exists(meta) || !fs::exists(dir_ / (id + ".labels.png"))) {
        return false;
    }
    std::ifstream in(meta);
    const auto stored = nlohmann::json::parse(in, nullptr, false);
    return !stored.is_discarded() && stored.value("segmenter", nlohmann::json()) == segmenter.describe();
}

SegmentMap SegmentCache::get(const std::string& id, const Image& image, const Segmenter& segmenter) {
    const fs::path png = dir_ / (id + ".labels.png");
    if (contains(id, segmenter)) {
        SegmentMap map = load_labels(png);
        if (map.height() == image.height() && map.width() == image.width()) {
            return map;
        }
    }
    SegmentMap map = segmenter.segment(image);
    save_labels(png, map);
    std::ofstream meta(dir_ / (id + ".labels.json"));
    meta << nlohmann::json{{"segmenter", segmenter.describe()},
                           {"height", map.height()},
                           {"width", map.width()},
                           {"segment_count", map.segment_count()}}
                .dump(2)
         << '\n';
    ++computed_;
    return map;
}

void prepare_dataset(Dataset& dataset, const Segmenter& segmenter, SegmentCache& cache, std::size_t workers) {
    if (dataset.samples.empty()) {
        throw DataError("dataset is empty");
    }
    std::vector<SegmentMap> segments(dataset.samples.size());
    parallel_for(dataset.samples.size(), workers, [&](std::size_t i) {
        segments[i] = cache.get(dataset.samples[i].id, dataset.samples[i].image, segmenter);
    });
    dataset.segments = std::move(segments);
    std::vector<Image> images;
    images.reserve(dataset.samples.size());
    for (const auto& s : dataset.samples) {
        images.push_back(s.image);
    }
    dataset.mean = compute_dataset_mean(images);
}

} // namespace irof
