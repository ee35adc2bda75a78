#include "irof/report.hpp"

#include "irof/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace irof {

namespace {

constexpr std::array<const char*, 8> palette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    return out;
}

std::string escape_xml(std::string_view text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\r\n") == std::string::npos) {
        return text;
    }
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else if (c != '\r') {
            fields.back() += c;
        }
    }
    return fields;
}

double parse_double(const std::string& text, const std::filesystem::path& path, std::size_t line) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw DataError(path.string() + ":" + std::to_string(line) + ": not a number: '" + text + "'");
    }
    return value;
}

// Linear interpolation of a curve at relative position t in [0, 1].
double sample_curve(const std::vector<double>& values, double t) {
    if (values.size() == 1) {
        return values[0];
    }
    const double pos = t * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - w) + values[hi] * w;
}

struct Plot {
    double left = 70, right = 170, top = 30, bottom = 50, width = 640, height = 400;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

    [[nodiscard]] double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
    [[nodiscard]] double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

void svg_open(std::ostringstream& svg, const Plot& plot, std::string_view title) {
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\"" << plot.height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << plot.width / 2 << "\" y=\"18\" text-anchor=\"middle\">" << escape_xml(title) << "</text>\n"
        << "<line x1=\"" << plot.px(plot.x0) << "\" y1=\"" << plot.py(plot.y0) << "\" x2=\"" << plot.px(plot.x1)
        << "\" y2=\"" << plot.py(plot.y0) << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << plot.px(plot.x0) << "\" y1=\"" << plot.py(plot.y0) << "\" x2=\"" << plot.px(plot.x0)
        << "\" y2=\"" << plot.py(plot.y1) << "\" stroke=\"black\"/>\n";
}

void svg_legend(std::ostringstream& svg, const Plot& plot, std::size_t index, std::string_view label) {
    const double y = plot.top + 20.0 * static_cast<double>(index);
    const double x = plot.width - plot.right + 15;
    svg << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 20 << "\" y2=\"" << y << "\" stroke=\""
        << palette[index % palette.size()] << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << x + 26 << "\" y=\"" << y + 4 << "\">" << escape_xml(label) << "</text>\n";
}

} // namespace

nlohmann::json result_json(std::span<const IROFResult> results, const nlohmann::json& config) {
    nlohmann::json methods = nlohmann::json::array();
    for (const IROFResult& r : results) {
        nlohmann::json per_image = nlohmann::json::array();
        for (std::size_t i = 0; i < r.per_image_aoc.size(); ++i) {
            per_image.push_back({{"image_id", r.image_ids[i]},
                                 {"aoc", r.per_image_aoc[i]},
                                 {"target_class", r.curves[i].target_class},
                                 {"reference_score", r.curves[i].reference_score}});
        }
        nlohmann::json skipped = nlohmann::json::array();
        for (const SkippedImage& s : r.skipped) {
            skipped.push_back({{"image_id", s.image_id}, {"reason", s.reason}});
        }
        methods.push_back({{"method_id", r.method_id},
                           {"scheme", to_string(r.scheme)},
                           {"irof_score", r.irof_score},
                           {"se", r.standard_error},
                           {"n_images", r.n_images},
                           {"n_skipped", r.n_skipped},
                           {"per_image", per_image},
                           {"skipped", skipped}});
    }
    return {{"config", config}, {"methods", methods}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
    auto out = open_output(path);
    out << value.dump(2) << '\n';
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto out = open_output(path);
    out << text;
}

void write_curves_csv(const std::filesystem::path& path, std::span<const IROFResult> results) {
    auto out = open_output(path);
    out << "image_id,method_id,scheme,l,f_l\n";
    for (const IROFResult& r : results) {
        for (const DegradationCurve& c : r.curves) {
            for (std::size_t l = 0; l < c.values.size(); ++l) {
                out << csv_field(c.image_id) << ',' << csv_field(c.method_id) << ',' << to_string(c.scheme) << ',' << l << ','
                    << format_double(c.values[l]) << '\n';
            }
        }
    }
}

std::vector<DegradationCurve> read_curves_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot read " + path.string());
    }
    std::string line;
    std::getline(in, line);
    if (line != "image_id,method_id,scheme,l,f_l") {
        throw DataError(path.string() + ": unexpected header '" + line + "'");
    }
    std::vector<DegradationCurve> curves;
    for (std::size_t number = 2; std::getline(in, line); ++number) {
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 5) {
            throw DataError(path.string() + ":" + std::to_string(number) + ": expected 5 columns");
        }
        const auto l = static_cast<std::size_t>(parse_double(fields[3], path, number));
        if (l == 0) {
            DegradationCurve curve;
            curve.image_id = fields[0];
            curve.method_id = fields[1];
            curve.scheme = parse_scheme(fields[2]);
            curves.push_back(std::move(curve));
        } else if (curves.empty() || curves.back().values.size() != l || curves.back().image_id != fields[0] ||
                   curves.back().method_id != fields[1]) {
            throw DataError(path.string() + ":" + std::to_string(number) + ": curve rows out of order");
        }
        curves.back().values.push_back(parse_double(fields[4], path, number));
    }
    return curves;
}

std::string curves_svg(std::span<const IROFResult> results) {
    constexpr std::size_t samples = 101;
    std::vector<std::vector<double>> means;
    double y_max = 1.0;
    for (const IROFResult& r : results) {
        std::vector<double> mean(samples, 0.0);
        for (const DegradationCurve& c : r.curves) {
            for (std::size_t s = 0; s < samples; ++s) {
                mean[s] += sample_curve(c.values, static_cast<double>(s) / (samples - 1));
            }
        }
        for (double& v : mean) {
            v /= static_cast<double>(std::max<std::size_t>(r.curves.size(), 1));
            y_max = std::max(y_max, v);
        }
        means.push_back(std::move(mean));
    }

    Plot plot;
    plot.y1 = std::ceil(y_max * 10.0) / 10.0;
    std::ostringstream svg;
    svg_open(svg, plot, "Mean degradation curves");
    for (int tick = 0; tick <= 4; ++tick) {
        const double x = tick / 4.0;
        const double y = plot.y1 * tick / 4.0;
        svg << "<text x=\"" << plot.px(x) << "\" y=\"" << plot.py(0) + 16 << "\" text-anchor=\"middle\">" << x
            << "</text>\n"
            << "<text x=\"" << plot.px(0) - 6 << "\" y=\"" << plot.py(y) + 4 << "\" text-anchor=\"end\">" << y
            << "</text>\n";
    }
    svg << "<text x=\"" << (plot.px(0) + plot.px(1)) / 2 << "\" y=\"" << plot.height - 12
        << "\" text-anchor=\"middle\">fraction of units removed</text>\n"
        << "<text x=\"16\" y=\"" << (plot.py(0) + plot.py(plot.y1)) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << (plot.py(0) + plot.py(plot.y1)) / 2 << ")\">normalised class score</text>\n";
    for (std::size_t m = 0; m < means.size(); ++m) {
        svg << "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" << palette[m % palette.size()] << "\" points=\"";
        for (std::size_t s = 0; s < samples; ++s) {
            svg << plot.px(static_cast<double>(s) / (samples - 1)) << ',' << plot.py(means[m][s]) << ' ';
        }
        svg << "\"/>\n";
        svg_legend(svg, plot, m, results[m].method_id);
    }
    svg << "</svg>\n";
    return svg.str();
}

nlohmann::json sensitivity_json(const SensitivityReport& report, const nlohmann::json& config) {
    nlohmann::json cells = nlohmann::json::array();
    nlohmann::json matrix = nlohmann::json::object();
    for (const SensitivityCell& cell : report.cells) {
        nlohmann::json entry{{"method_id", cell.method_id}, {"evaluator", to_string(cell.evaluator)}};
        if (cell.test) {
            entry["t"] = cell.test->t_statistic;
            entry["p"] = cell.test->p_value;
            entry["n"] = cell.test->n;
            entry["mean_difference"] = cell.test->mean_difference;
            matrix[cell.method_id][std::string(to_string(cell.evaluator))] = cell.test->p_value;
        } else {
            entry["error"] = cell.error;
            matrix[cell.method_id][std::string(to_string(cell.evaluator))] = nullptr;
        }
        nlohmann::json per_image = nlohmann::json::array();
        for (std::size_t i = 0; i < cell.method_values.size() && i < cell.baseline_values.size(); ++i) {
            per_image.push_back({{"image_id", cell.image_ids[i]},
                                 {"method", cell.method_values[i]},
                                 {"random", cell.baseline_values[i]}});
        }
        entry["per_image"] = per_image;
        cells.push_back(std::move(entry));
    }
    nlohmann::json skipped = nlohmann::json::array();
    for (const SkippedImage& s : report.skipped) {
        skipped.push_back({{"image_id", s.image_id}, {"reason", s.reason}});
    }
    return {{"config", config}, {"p_values", matrix}, {"cells", cells}, {"skipped", skipped}};
}

void write_sensitivity_csv(const std::filesystem::path& path, const SensitivityReport& report) {
    auto out = open_output(path);
    out << "method,evaluator,t,p,n\n";
    for (const SensitivityCell& cell : report.cells) {
        out << csv_field(cell.method_id) << ',' << to_string(cell.evaluator) << ',';
        if (cell.test) {
            out << format_double(cell.test->t_statistic) << ',' << format_double(cell.test->p_value) << ','
                << cell.test->n << '\n';
        } else {
            out << ",," << cell.image_ids.size() << '\n';
        }
    }
}

void write_pvalue_plot_csv(const std::filesystem::path& path, const SensitivityReport& report) {
    auto out = open_output(path);
    out << "method,evaluator,p,log10_p\n";
    for (const SensitivityCell& cell : report.cells) {
        if (!cell.test) {
            continue;
        }
        const double p = std::max(cell.test->p_value, 1e-300);
        out << csv_field(cell.method_id) << ',' << to_string(cell.evaluator) << ',' << format_double(cell.test->p_value) << ','
            << format_double(std::log10(p)) << '\n';
    }
}

std::string pvalue_svg(const SensitivityReport& report) {
    std::vector<std::string> methods;
    std::vector<Evaluator> evaluators;
    double lowest = -2.0;
    for (const SensitivityCell& cell : report.cells) {
        if (std::find(methods.begin(), methods.end(), cell.method_id) == methods.end()) {
            methods.push_back(cell.method_id);
        }
        if (std::find(evaluators.begin(), evaluators.end(), cell.evaluator) == evaluators.end()) {
            evaluators.push_back(cell.evaluator);
        }
        if (cell.test) {
            lowest = std::min(lowest, std::log10(std::max(cell.test->p_value, 1e-300)));
        }
    }
    Plot plot;
    plot.x0 = -0.5;
    plot.x1 = static_cast<double>(std::max<std::size_t>(evaluators.size(), 1)) - 0.5;
    plot.y0 = std::floor(lowest);
    plot.y1 = 0.0;
    std::ostringstream svg;
    svg_open(svg, plot, "p-values against random removal (log10)");
    for (std::size_t e = 0; e < evaluators.size(); ++e) {
        svg << "<text x=\"" << plot.px(static_cast<double>(e)) << "\" y=\"" << plot.py(plot.y0) + 16
            << "\" text-anchor=\"middle\">" << to_string(evaluators[e]) << "</text>\n";
    }
    const int step = std::max(1, static_cast<int>(-plot.y0) / 8);
    for (int y = 0; y >= static_cast<int>(plot.y0); y -= step) {
        svg << "<text x=\"" << plot.px(plot.x0) - 6 << "\" y=\"" << plot.py(y) + 4 << "\" text-anchor=\"end\">1e"
            << y << "</text>\n";
    }
    const double alpha = std::log10(0.05);
    svg << "<line x1=\"" << plot.px(plot.x0) << "\" y1=\"" << plot.py(alpha) << "\" x2=\"" << plot.px(plot.x1)
        << "\" y2=\"" << plot.py(alpha) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    for (std::size_t m = 0; m < methods.size(); ++m) {
        const char* colour = palette[m % palette.size()];
        std::ostringstream points;
        for (std::size_t e = 0; e < evaluators.size(); ++e) {
            for (const SensitivityCell& cell : report.cells) {
                if (cell.method_id == methods[m] && cell.evaluator == evaluators[e] && cell.test) {
                    const double x = plot.px(static_cast<double>(e));
                    const double y = plot.py(std::log10(std::max(cell.test->p_value, 1e-300)));
                    points << x << ',' << y << ' ';
                    svg << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\" fill=\"" << colour << "\"/>\n";
                }
            }
        }
        svg << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << colour << "\" points=\"" << points.str()
            << "\"/>\n";
        svg_legend(svg, plot, m, methods[m]);
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace irof
