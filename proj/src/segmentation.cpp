#include "irof/segmentation.hpp"

#include "irof/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace irof {

namespace {

constexpr std::array<std::ptrdiff_t, 4> kDy{0, -1, 0, 1};
constexpr std::array<std::ptrdiff_t, 4> kDx{-1, 0, 1, 0};

// Flood fill over 4-neighbours sharing `label`. Marks `assigned` with `value` and returns the
// visited pixels in visiting order.
std::vector<std::size_t> flood(std::size_t start, std::size_t height, std::size_t width,
                               std::span<const SegmentLabel> labels,
                               std::vector<SegmentLabel>& assigned, SegmentLabel value) {
    const SegmentLabel label = labels[start];
    std::vector<std::size_t> component{start};
    assigned[start] = value;
    for (std::size_t head = 0; head < component.size(); ++head) {
        const std::size_t p = component[head];
        const auto y = static_cast<std::ptrdiff_t>(p / width);
        const auto x = static_cast<std::ptrdiff_t>(p % width);
        for (std::size_t n = 0; n < 4; ++n) {
            const std::ptrdiff_t ny = y + kDy[n];
            const std::ptrdiff_t nx = x + kDx[n];
            if (ny < 0 || nx < 0 || ny >= static_cast<std::ptrdiff_t>(height) ||
                nx >= static_cast<std::ptrdiff_t>(width)) {
                continue;
            }
            const std::size_t q = static_cast<std::size_t>(ny) * width + static_cast<std::size_t>(nx);
            if (assigned[q] < 0 && labels[q] == label) {
                assigned[q] = value;
                component.push_back(q);
            }
        }
    }
    return component;
}

double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

// Colour features per pixel: CIELAB (D65) for RGB, 0..100 scaled intensity for grey.
struct Features {
    std::size_t dims = 1;
    std::vector<double> values;

    [[nodiscard]] const double* at(std::size_t p) const { return values.data() + p * dims; }
};

Features colour_features(const Image& image) {
    const std::size_t n = image.pixel_count();
    const auto data = image.data();
    const double lo = image.range().min;
    const double span = image.range().span();
    Features f;
    if (image.channels() == 1) {
        f.dims = 1;
        f.values.resize(n);
        for (std::size_t p = 0; p < n; ++p) {
            f.values[p] = 100.0 * (data[p] - lo) / span;
        }
        return f;
    }
    f.dims = 3;
    f.values.resize(3 * n);
    for (std::size_t p = 0; p < n; ++p) {
        const double r = srgb_to_linear((data[3 * p] - lo) / span);
        const double g = srgb_to_linear((data[3 * p + 1] - lo) / span);
        const double b = srgb_to_linear((data[3 * p + 2] - lo) / span);
        const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
        const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
        const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
        const double fx = lab_f(x);
        const double fy = lab_f(y);
        const double fz = lab_f(z);
        f.values[3 * p] = 116.0 * fy - 16.0;
        f.values[3 * p + 1] = 500.0 * (fx - fy);
        f.values[3 * p + 2] = 200.0 * (fy - fz);
    }
    return f;
}

double colour_distance_sq(const double* a, const double* b, std::size_t dims) {
    double d = 0.0;
    for (std::size_t i = 0; i < dims; ++i) {
        const double t = a[i] - b[i];
        d += t * t;
    }
    return d;
}

struct Center {
    double y = 0.0;
    double x = 0.0;
    std::array<double, 3> colour{};
};

} // namespace

SegmentMap::SegmentMap(std::size_t height, std::size_t width, std::vector<SegmentLabel> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
    if (height == 0 || width == 0 || labels_.size() != height * width) {
        throw DataError("segment map has " + std::to_string(labels_.size()) +
                        " labels for a " + std::to_string(height) + "x" + std::to_string(width) +
                        " image");
    }
    const SegmentLabel max_label = *std::max_element(labels_.begin(), labels_.end());
    if (*std::min_element(labels_.begin(), labels_.end()) < 0) {
        throw DataError("segment labels must be non-negative");
    }
    segment_count_ = static_cast<std::size_t>(max_label) + 1;
    std::vector<bool> seen(segment_count_, false);
    for (SegmentLabel l : labels_) {
        seen[static_cast<std::size_t>(l)] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw DataError("segment labels must form the contiguous range 0..L-1");
    }
    if (!labels_four_connected(height_, width_, labels_)) {
        throw DataError("every segment must be a single 4-connected component");
    }
}

bool labels_four_connected(std::size_t height, std::size_t width,
                           std::span<const SegmentLabel> labels) {
    std::vector<SegmentLabel> assigned(labels.size(), -1);
    std::vector<bool> label_seen;
    for (std::size_t p = 0; p < labels.size(); ++p) {
        if (assigned[p] >= 0) {
            continue;
        }
        const auto l = static_cast<std::size_t>(labels[p]);
        if (l >= label_seen.size()) {
            label_seen.resize(l + 1, false);
        }
        if (label_seen[l]) {
            return false;
        }
        label_seen[l] = true;
        flood(p, height, width, labels, assigned, 0);
    }
    return true;
}

std::vector<SegmentLabel> canonicalize_labels(std::span<const SegmentLabel> labels) {
    std::vector<SegmentLabel> remap;
    std::vector<SegmentLabel> out(labels.size());
    SegmentLabel next = 0;
    for (std::size_t p = 0; p < labels.size(); ++p) {
        const auto l = static_cast<std::size_t>(labels[p]);
        if (l >= remap.size()) {
            remap.resize(l + 1, -1);
        }
        if (remap[l] < 0) {
            remap[l] = next++;
        }
        out[p] = remap[l];
    }
    return out;
}

void SlicParams::validate() const {
    if (target_segments < 2) {
        throw ConfigError("SLIC target_segments must be at least 2");
    }
    if (!(compactness > 0.0) || !std::isfinite(compactness)) {
        throw ConfigError("SLIC compactness must be positive");
    }
    if (max_iterations < 1) {
        throw ConfigError("SLIC max_iterations must be at least 1");
    }
}

nlohmann::json to_json(const SlicParams& params) {
    return {{"algorithm", "slic"},
            {"target_segments", params.target_segments},
            {"compactness", params.compactness},
            {"max_iterations", params.max_iterations},
            {"rng_seed", params.rng_seed},
            {"connectivity", "orphan components below a quarter of the grid cell merged into an "
                             "adjacent segment"}};
}

SlicSegmenter::SlicSegmenter(SlicParams params) : params_(params) { params_.validate(); }

SegmentMap SlicSegmenter::segment(const Image& image) const { return slic_segment(image, params_); }

nlohmann::json SlicSegmenter::describe() const { return to_json(params_); }

SegmentMap slic_segment(const Image& image, const SlicParams& params) {
    params.validate();
    const std::size_t height = image.height();
    const std::size_t width = image.width();
    const std::size_t n = height * width;
    if (params.target_segments > n) {
        throw ConfigError("SLIC target of " + std::to_string(params.target_segments) +
                          " segments exceeds the pixel count " + std::to_string(n));
    }

    const Features features = colour_features(image);
    const std::size_t dims = features.dims;

    // Grid of ny x nx seeds whose aspect follows the image.
    const double target = static_cast<double>(params.target_segments);
    const auto grid_y = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(std::sqrt(target * height / width))), 1, height);
    const auto grid_x = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(target / grid_y)), 1, width);
    const double step_y = static_cast<double>(height) / grid_y;
    const double step_x = static_cast<double>(width) / grid_x;
    const double grid_interval = std::sqrt(static_cast<double>(n) / (grid_x * grid_y));
    const double spatial_weight = params.compactness / grid_interval;

    auto gradient = [&](std::size_t y, std::size_t x) {
        const std::size_t xl = x > 0 ? x - 1 : x;
        const std::size_t xr = x + 1 < width ? x + 1 : x;
        const std::size_t yu = y > 0 ? y - 1 : y;
        const std::size_t yd = y + 1 < height ? y + 1 : y;
        return colour_distance_sq(features.at(y * width + xl), features.at(y * width + xr), dims) +
               colour_distance_sq(features.at(yu * width + x), features.at(yd * width + x), dims);
    };

    std::vector<Center> centers;
    centers.reserve(grid_x * grid_y);
    for (std::size_t gy = 0; gy < grid_y; ++gy) {
        for (std::size_t gx = 0; gx < grid_x; ++gx) {
            auto cy = static_cast<std::size_t>((gy + 0.5) * step_y);
            auto cx = static_cast<std::size_t>((gx + 0.5) * step_x);
            cy = std::min(cy, height - 1);
            cx = std::min(cx, width - 1);
            // Move the seed to the lowest-gradient pixel of its 3x3 neighbourhood.
            std::size_t best_y = cy;
            std::size_t best_x = cx;
            double best = gradient(cy, cx);
            for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
                for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
                    const std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(cy) + dy;
                    const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(cx) + dx;
                    if (yy < 0 || xx < 0 || yy >= static_cast<std::ptrdiff_t>(height) ||
                        xx >= static_cast<std::ptrdiff_t>(width)) {
                        continue;
                    }
                    const double g = gradient(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
                    if (g < best) {
                        best = g;
                        best_y = static_cast<std::size_t>(yy);
                        best_x = static_cast<std::size_t>(xx);
                    }
                }
            }
            Center c;
            c.y = static_cast<double>(best_y);
            c.x = static_cast<double>(best_x);
            std::copy_n(features.at(best_y * width + best_x), dims, c.colour.begin());
            centers.push_back(c);
        }
    }

    std::vector<SegmentLabel> labels(n);
    for (std::size_t y = 0; y < height; ++y) {
        const std::size_t gy = std::min(grid_y - 1, static_cast<std::size_t>(y / step_y));
        for (std::size_t x = 0; x < width; ++x) {
            const std::size_t gx = std::min(grid_x - 1, static_cast<std::size_t>(x / step_x));
            labels[y * width + x] = static_cast<SegmentLabel>(gy * grid_x + gx);
        }
    }

    std::vector<double> distance(n);
    std::vector<double> sums;
    std::vector<std::size_t> counts;
    const auto reach_y = static_cast<std::ptrdiff_t>(std::ceil(step_y));
    const auto reach_x = static_cast<std::ptrdiff_t>(std::ceil(step_x));

    for (std::size_t iteration = 0; iteration < params.max_iterations; ++iteration) {
        std::fill(distance.begin(), distance.end(), std::numeric_limits<double>::infinity());
        bool changed = false;
        for (std::size_t k = 0; k < centers.size(); ++k) {
            const Center& c = centers[k];
            const auto cy = static_cast<std::ptrdiff_t>(std::lround(c.y));
            const auto cx = static_cast<std::ptrdiff_t>(std::lround(c.x));
            const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, cy - reach_y);
            const std::ptrdiff_t y1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(height) - 1, cy + reach_y);
            const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, cx - reach_x);
            const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(width) - 1, cx + reach_x);
            for (std::ptrdiff_t y = y0; y <= y1; ++y) {
                for (std::ptrdiff_t x = x0; x <= x1; ++x) {
                    const std::size_t p = static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x);
                    const double dc = std::sqrt(colour_distance_sq(features.at(p), c.colour.data(), dims));
                    const double ddy = static_cast<double>(y) - c.y;
                    const double ddx = static_cast<double>(x) - c.x;
                    const double d = dc + spatial_weight * std::sqrt(ddy * ddy + ddx * ddx);
                    if (d < distance[p]) {
                        distance[p] = d;
                        if (labels[p] != static_cast<SegmentLabel>(k)) {
                            labels[p] = static_cast<SegmentLabel>(k);
                            changed = true;
                        }
                    }
                }
            }
        }

        const std::size_t stride = dims + 2;
        sums.assign(centers.size() * stride, 0.0);
        counts.assign(centers.size(), 0);
        for (std::size_t p = 0; p < n; ++p) {
            const auto k = static_cast<std::size_t>(labels[p]);
            double* s = sums.data() + k * stride;
            s[0] += static_cast<double>(p / width);
            s[1] += static_cast<double>(p % width);
            const double* f = features.at(p);
            for (std::size_t d = 0; d < dims; ++d) {
                s[2 + d] += f[d];
            }
            ++counts[k];
        }
        for (std::size_t k = 0; k < centers.size(); ++k) {
            if (counts[k] == 0) {
                continue;
            }
            const double inv = 1.0 / static_cast<double>(counts[k]);
            const double* s = sums.data() + k * stride;
            centers[k].y = s[0] * inv;
            centers[k].x = s[1] * inv;
            for (std::size_t d = 0; d < dims; ++d) {
                centers[k].colour[d] = s[2 + d] * inv;
            }
        }
        if (!changed && iteration > 0) {
            break;
        }
    }

    // Connectivity: every 4-connected component becomes its own segment, numbered in row-major
    // order of first occurrence. Components smaller than a quarter grid cell fold into the
    // segment adjacent to their first pixel, except the largest component of each cluster.
    const std::size_t min_size = std::max<std::size_t>(1, n / (4 * centers.size()));
    std::vector<SegmentLabel> component_of(n, -1);
    std::vector<std::vector<std::size_t>> components;
    std::vector<std::size_t> largest(centers.size(), n);
    for (std::size_t p = 0; p < n; ++p) {
        if (component_of[p] >= 0) {
            continue;
        }
        const auto id = static_cast<SegmentLabel>(components.size());
        components.push_back(flood(p, height, width, labels, component_of, id));
        const auto k = static_cast<std::size_t>(labels[p]);
        if (largest[k] == n || components.back().size() > components[largest[k]].size()) {
            largest[k] = static_cast<std::size_t>(id);
        }
    }

    std::vector<SegmentLabel> connected(n, -1);
    SegmentLabel next = 0;
    for (std::size_t id = 0; id < components.size(); ++id) {
        const auto& component = components[id];
        const std::size_t p = component.front();
        SegmentLabel adjacent = -1;
        const auto y = static_cast<std::ptrdiff_t>(p / width);
        const auto x = static_cast<std::ptrdiff_t>(p % width);
        for (std::size_t k = 0; k < 4 && adjacent < 0; ++k) {
            const std::ptrdiff_t ny = y + kDy[k];
            const std::ptrdiff_t nx = x + kDx[k];
            if (ny >= 0 && nx >= 0 && ny < static_cast<std::ptrdiff_t>(height) &&
                nx < static_cast<std::ptrdiff_t>(width)) {
                adjacent = connected[static_cast<std::size_t>(ny) * width + static_cast<std::size_t>(nx)];
            }
        }
        const bool core = largest[static_cast<std::size_t>(labels[p])] == id;
        const SegmentLabel value = component.size() < min_size && !core && adjacent >= 0 ? adjacent : next++;
        for (std::size_t q : component) {
            connected[q] = value;
        }
    }

    return SegmentMap(height, width, std::move(connected));
}

std::vector<std::vector<std::size_t>> segment_pixel_lists(const SegmentMap& map) {
    std::vector<std::vector<std::size_t>> lists(map.segment_count());
    std::vector<std::size_t> sizes(map.segment_count(), 0);
    const auto labels = map.labels();
    for (SegmentLabel l : labels) {
        ++sizes[static_cast<std::size_t>(l)];
    }
    for (std::size_t l = 0; l < lists.size(); ++l) {
        lists[l].reserve(sizes[l]);
    }
    for (std::size_t p = 0; p < labels.size(); ++p) {
        lists[static_cast<std::size_t>(labels[p])].push_back(p);
    }
    return lists;
}

} // namespace irof
