#include "irof/backend.hpp"
#include "irof/baselines.hpp"
#include "irof/dataset.hpp"
#include "irof/engine.hpp"
#include "irof/error.hpp"
#include "irof/io.hpp"
#include "irof/parallel.hpp"
#include "irof/report.hpp"
#include "irof/sensitivity.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

enum ExitCode { Success = 0, Failure = 1, BadConfig = 2, BackendFailure = 3, BadData = 4 };

struct DataOptions {
    std::string images;
    std::string range = "0,1";
    std::size_t segments = 300;
    double compactness = 10.0;
    std::size_t slic_iterations = 10;
    std::string segment_cache;
    std::string targets;
    std::optional<std::size_t> target;
    std::size_t workers = irof::default_worker_count();
    std::uint64_t seed = 0;
    std::string out_dir = "irof-out";
};

struct MethodOptions {
    std::vector<std::string> heatmaps;
    std::vector<std::string> baselines;
    std::string evidence = "positive";
};

struct BackendOptions {
    std::string backend;
    std::size_t batch_size = 32;
    std::size_t pool_size = 1;
    int attempts = 3;
    long timeout_ms = 60000;
    bool no_softmax = false;
    bool planar = false;
    bool skip_self_test = false;
};

void add_data_options(CLI::App& cmd, DataOptions& o, bool with_targets) {
    cmd.add_option("--images", o.images, "Directory of .png / .f32 images")->required();
    cmd.add_option("--range", o.range, "Declared value range of the images as min,max");
    cmd.add_option("--segments", o.segments, "SLIC target segment count");
    cmd.add_option("--compactness", o.compactness, "SLIC compactness");
    cmd.add_option("--slic-iterations", o.slic_iterations, "SLIC k-means iterations");
    cmd.add_option("--segment-cache", o.segment_cache, "Directory caching label maps between runs");
    cmd.add_option("--workers", o.workers, "Worker threads (default: logical CPU count)");
    cmd.add_option("--seed", o.seed, "Run seed for random orderings and noise");
    cmd.add_option("--out-dir", o.out_dir, "Output directory");
    if (with_targets) {
        cmd.add_option("--targets", o.targets, "CSV of image_id,target class");
        cmd.add_option("--target", o.target, "Target class for every image (default: predicted class)");
    }
}

void add_method_options(CLI::App& cmd, MethodOptions& o) {
    cmd.add_option("--heatmaps", o.heatmaps, "Method heatmaps as method_id=dir (repeatable)");
    cmd.add_option("--baselines", o.baselines, "Built-in methods to include: random, sobel")
        ->delimiter(',')
        ->check(CLI::IsMember({"random", "sobel"}));
    cmd.add_option("--evidence", o.evidence, "Evidence mode: positive, absolute or signed");
}

void add_backend_options(CLI::App& cmd, BackendOptions& o) {
    cmd.add_option("--backend", o.backend, "Model backend: proc:CMD, http:URL or onnx:PATH")->required();
    cmd.add_option("--batch-size", o.batch_size, "Images per backend request batch");
    cmd.add_option("--pool-size", o.pool_size, "Model processes kept for the process transport");
    cmd.add_option("--attempts", o.attempts, "Attempts per request before a transport failure is fatal");
    cmd.add_option("--timeout-ms", o.timeout_ms, "Per-request timeout");
    cmd.add_flag("--no-softmax", o.no_softmax, "Model outputs are not softmax-normalised; skip that check");
    cmd.add_flag("--planar", o.planar, "Send [C, H, W] planar data instead of [H, W, C]");
    cmd.add_flag("--skip-self-test", o.skip_self_test, "Skip the backend determinism self-test");
}

irof::ValueRange parse_range(const std::string& text) {
    const auto comma = text.find(',');
    try {
        if (comma != std::string::npos) {
            std::size_t used_min = 0, used_max = 0;
            const std::string lo = text.substr(0, comma), hi = text.substr(comma + 1);
            const float min = std::stof(lo, &used_min);
            const float max = std::stof(hi, &used_max);
            if (used_min == lo.size() && used_max == hi.size() && min < max) {
                return {min, max};
            }
        }
    } catch (const std::exception&) {
    }
    throw irof::ConfigError("--range must be min,max with min < max, got '" + text + "'");
}

irof::SlicParams slic_params(const DataOptions& o) {
    irof::SlicParams p;
    p.target_segments = o.segments;
    p.compactness = o.compactness;
    p.max_iterations = o.slic_iterations;
    p.validate();
    return p;
}

irof::Dataset load_dataset(const DataOptions& o, irof::ValueRange range) {
    irof::Dataset dataset;
    dataset.samples = irof::load_images(o.images, range);
    if (!o.targets.empty()) {
        irof::apply_targets(dataset.samples, o.targets);
    }
    if (o.target) {
        for (auto& s : dataset.samples) {
            s.target = *o.target;
        }
    }
    spdlog::info("loaded {} images from {}", dataset.size(), o.images);
    return dataset;
}

void segment_dataset(irof::Dataset& dataset, const irof::SlicSegmenter& segmenter, const DataOptions& o) {
    if (o.segment_cache.empty()) {
        irof::prepare_dataset(dataset, segmenter, o.workers);
        return;
    }
    irof::SegmentCache cache(o.segment_cache);
    irof::prepare_dataset(dataset, segmenter, cache, o.workers);
    spdlog::info("segmentation: {} computed, {} read from {}", cache.computed(),
                 dataset.size() - cache.computed(), o.segment_cache);
}

struct MethodSpec {
    irof::Method method;
    std::string source;
};

std::vector<MethodSpec> load_methods(const MethodOptions& o, const irof::Dataset& dataset) {
    std::vector<MethodSpec> out;
    std::set<std::string> seen;
    auto add = [&](irof::Method m, std::string source) {
        if (!seen.insert(m.id).second) {
            throw irof::ConfigError("method id '" + m.id + "' is declared twice");
        }
        out.push_back({std::move(m), std::move(source)});
    };
    for (const std::string& pair : o.heatmaps) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == pair.size()) {
            throw irof::ConfigError("--heatmaps expects method_id=dir, got '" + pair + "'");
        }
        const std::string id = pair.substr(0, eq);
        const std::string dir = pair.substr(eq + 1);
        add(irof::Method::from_heatmaps(id, irof::load_heatmaps(dir, dataset.samples, id)), "heatmaps:" + dir);
    }
    for (const std::string& b : o.baselines) {
        add(b == "sobel" ? irof::Method::sobel() : irof::Method::random(), "baseline:" + b);
    }
    return out;
}

std::unique_ptr<irof::ModelBackend> open_backend(const BackendOptions& o, irof::BackendConfig& config,
                                                 const irof::Dataset& dataset) {
    config = irof::BackendConfig::parse(o.backend);
    config.batch_size = o.batch_size;
    config.pool_size = o.pool_size;
    config.max_attempts = o.attempts;
    config.timeout = std::chrono::milliseconds(o.timeout_ms);
    config.softmax = !o.no_softmax;
    config.layout.order = o.planar ? irof::ChannelOrder::Planar : irof::ChannelOrder::Interleaved;
    config.validate();
    auto backend = irof::make_backend(config);
    if (!o.skip_self_test) {
        const double delta = irof::determinism_self_test(*backend, dataset.samples.front().image);
        spdlog::debug("backend determinism self-test: max |delta| = {}", delta);
    }
    return backend;
}

nlohmann::json data_echo(const DataOptions& o, irof::ValueRange range, const irof::Dataset& dataset,
                         const irof::Segmenter& segmenter) {
    nlohmann::json targets;
    if (o.target) {
        targets = "class " + std::to_string(*o.target) + " for every image";
    } else if (!o.targets.empty()) {
        targets = "from " + o.targets + "; predicted class of the unmodified image otherwise";
    } else {
        targets = "predicted class of the unmodified image";
    }
    return {{"images", o.images},
            {"n_images", dataset.size()},
            {"value_range", {range.min, range.max}},
            {"dataset_mean", dataset.mean.per_channel},
            {"segmentation", segmenter.describe()},
            {"targets", targets},
            {"random_baseline", "uniform permutation per image, seed = run seed xor image index"}};
}

nlohmann::json methods_echo(const std::vector<MethodSpec>& methods) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& m : methods) {
        out.push_back({{"method_id", m.method.id}, {"source", m.source}});
    }
    return out;
}

irof::Scheme scheme_from(const std::string& scheme, const std::string& replacement) {
    if (replacement != "mean" && replacement != "black") {
        throw irof::ConfigError("--replacement must be mean or black, got '" + replacement + "'");
    }
    const bool mean = replacement == "mean";
    if (scheme == "irof") {
        return mean ? irof::Scheme::SegmentMean : irof::Scheme::SegmentBlack;
    }
    if (scheme == "pixel") {
        return mean ? irof::Scheme::PixelMean : irof::Scheme::PixelBlack;
    }
    if (scheme == "samek") {
        return irof::Scheme::SamekSquares;
    }
    return irof::parse_scheme(scheme);
}

struct EvaluateOptions {
    DataOptions data;
    MethodOptions methods;
    BackendOptions backend;
    std::string scheme = "irof";
    std::string replacement = "mean";
    double fraction = 1.0;
    std::size_t square_size = 9;
    std::size_t dump_every = 0;
};

int cmd_evaluate(const EvaluateOptions& o) {
    const irof::ValueRange range = parse_range(o.data.range);
    irof::EngineConfig engine;
    engine.scheme = scheme_from(o.scheme, o.replacement);
    engine.evidence = irof::parse_evidence_mode(o.methods.evidence);
    engine.fraction = o.fraction;
    engine.square_size = o.square_size;
    engine.seed = o.data.seed;
    engine.workers = o.data.workers;
    engine.dump_every = o.dump_every;
    engine.dump_dir = fs::path(o.data.out_dir) / "frames";
    engine.validate();
    const irof::SlicSegmenter segmenter(slic_params(o.data));

    irof::Dataset dataset = load_dataset(o.data, range);
    const std::vector<MethodSpec> methods = load_methods(o.methods, dataset);
    segment_dataset(dataset, segmenter, o.data);

    nlohmann::json config{{"command", "evaluate"},
                          {"data", data_echo(o.data, range, dataset, segmenter)},
                          {"engine", irof::describe(engine)},
                          {"methods", methods_echo(methods)}};
    std::vector<irof::IROFResult> results;
    if (methods.empty()) {
        spdlog::warn("no methods given; writing an empty result");
    } else {
        irof::BackendConfig backend_config;
        auto backend = open_backend(o.backend, backend_config, dataset);
        config["backend"] = irof::to_json(backend_config);
        for (const auto& m : methods) {
            spdlog::info("evaluating {} ({})", m.method.id, irof::to_string(engine.scheme));
            results.push_back(irof::evaluate_irof(dataset, m.method, engine, *backend));
        }
    }

    const fs::path out(o.data.out_dir);
    irof::write_json(out / "result.json", irof::result_json(results, config));
    irof::write_curves_csv(out / "curves.csv", results);
    irof::write_text(out / "curves.svg", irof::curves_svg(results));

    std::printf("%-20s %8s %6s %6s %8s\n", "method", "IROF", "SE", "n", "skipped");
    for (const auto& r : results) {
        std::printf("%-20s %8.1f %6.1f %6zu %8zu\n", r.method_id.c_str(), r.irof_score, r.standard_error, r.n_images,
                    r.n_skipped);
    }
    return Success;
}

struct SensitivityOptions {
    DataOptions data;
    MethodOptions methods;
    BackendOptions backend;
    std::vector<std::string> evaluators;
    std::string statistic = "degradation-at-fraction";
    double fraction = 0.10;
    std::size_t square_size = 9;
};

int cmd_sensitivity(const SensitivityOptions& o) {
    const irof::ValueRange range = parse_range(o.data.range);
    irof::SensitivityConfig sens;
    if (!o.evaluators.empty()) {
        sens.evaluators.clear();
        for (const auto& e : o.evaluators) {
            sens.evaluators.push_back(irof::parse_evaluator(e));
        }
    }
    sens.fraction = o.fraction;
    sens.statistic = irof::parse_statistic(o.statistic);
    sens.evidence = irof::parse_evidence_mode(o.methods.evidence);
    sens.square_size = o.square_size;
    sens.seed = o.data.seed;
    sens.workers = o.data.workers;
    sens.validate();
    const irof::SlicSegmenter segmenter(slic_params(o.data));

    irof::Dataset dataset = load_dataset(o.data, range);
    const std::vector<MethodSpec> specs = load_methods(o.methods, dataset);
    nlohmann::json config{{"command", "sensitivity"}, {"sensitivity", irof::describe(sens)}};

    irof::SensitivityReport report;
    if (specs.empty()) {
        spdlog::warn("no methods given; writing an empty report");
    } else {
        segment_dataset(dataset, segmenter, o.data);
        irof::BackendConfig backend_config;
        auto backend = open_backend(o.backend, backend_config, dataset);
        config["backend"] = irof::to_json(backend_config);
        std::vector<irof::Method> methods;
        for (const auto& s : specs) {
            methods.push_back(s.method);
        }
        report = irof::sensitivity_report(dataset, methods, sens, *backend);
    }
    config["data"] = data_echo(o.data, range, dataset, segmenter);
    config["methods"] = methods_echo(specs);

    const fs::path out(o.data.out_dir);
    irof::write_json(out / "sensitivity.json", irof::sensitivity_json(report, config));
    irof::write_sensitivity_csv(out / "sensitivity.csv", report);
    irof::write_pvalue_plot_csv(out / "pvalues.csv", report);
    irof::write_text(out / "pvalues.svg", irof::pvalue_svg(report));

    std::printf("%-20s %-12s %10s %12s %5s\n", "method", "evaluator", "t", "p", "n");
    for (const auto& cell : report.cells) {
        if (cell.test) {
            std::printf("%-20s %-12s %10.3f %12.3e %5zu\n", cell.method_id.c_str(),
                        std::string(irof::to_string(cell.evaluator)).c_str(), cell.test->t_statistic,
                        cell.test->p_value, cell.test->n);
        } else {
            std::printf("%-20s %-12s  failed: %s\n", cell.method_id.c_str(),
                        std::string(irof::to_string(cell.evaluator)).c_str(), cell.error.c_str());
        }
    }
    return Success;
}

struct SegmentOptions {
    DataOptions data;
    bool export_raw = false;
};

int cmd_segment(const SegmentOptions& o) {
    const irof::ValueRange range = parse_range(o.data.range);
    const irof::SlicSegmenter segmenter(slic_params(o.data));
    irof::Dataset dataset;
    dataset.samples = irof::load_images(o.data.images, range);
    const fs::path cache_dir = o.data.segment_cache.empty() ? fs::path(o.data.out_dir) : fs::path(o.data.segment_cache);
    irof::SegmentCache cache(cache_dir);
    std::size_t reused = 0;
    for (const auto& s : dataset.samples) {
        reused += cache.contains(s.id, segmenter) ? 1 : 0;
    }
    irof::prepare_dataset(dataset, segmenter, cache, o.data.workers);
    if (o.export_raw) {
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            const auto labels = dataset.segments[i].labels();
            const std::vector<float> values(labels.begin(), labels.end());
            irof::save_raw(cache_dir / (dataset.samples[i].id + ".labels.f32"), values,
                           {dataset.segments[i].height(), dataset.segments[i].width(), 1, "slic-labels", std::nullopt});
        }
    }
    std::printf("segmented %zu images into %s (%zu computed, %zu reused)\n", dataset.size(), cache_dir.c_str(),
                cache.computed(), reused);
    return Success;
}

struct BaselineOptions {
    DataOptions data;
    std::string kind;
};

int cmd_baseline(const BaselineOptions& o) {
    const irof::ValueRange range = parse_range(o.data.range);
    irof::Dataset dataset;
    dataset.samples = irof::load_images(o.data.images, range);
    const fs::path out(o.data.out_dir);
    fs::create_directories(out);
    if (o.kind == "random") {
        const irof::SlicSegmenter segmenter(slic_params(o.data));
        segment_dataset(dataset, segmenter, o.data);
    }
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& sample = dataset.samples[i];
        irof::RelevanceMap map;
        if (o.kind == "sobel") {
            map = irof::sobel_relevance(sample.image);
        } else {
            const auto ranking = irof::random_ranking(dataset.segments[i].segment_count(),
                                                      irof::image_seed(o.data.seed, i),
                                                      irof::RngStream::MethodSegmentOrder);
            map = irof::paint_ranking(ranking, dataset.segments[i], "random");
        }
        irof::save_raw(out / (sample.id + ".f32"), map);
    }
    std::printf("wrote %zu %s heatmaps to %s\n", dataset.size(), o.kind.c_str(), out.c_str());
    return Success;
}

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("irof");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* level = std::getenv("IROF_LOG");
    spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
}

} // namespace

int main(int argc, char** argv) {
    configure_logging();
    CLI::App app{"IROF: evaluate attribution heatmaps by iterative removal of features"};
    app.set_config("--config", "", "TOML/INI file mirroring the command-line flags (flags override it)");
    app.require_subcommand(1);
    app.fallthrough();

    EvaluateOptions eval;
    auto* evaluate = app.add_subcommand("evaluate", "IROF score, curves and plots per method");
    add_data_options(*evaluate, eval.data, true);
    add_method_options(*evaluate, eval.methods);
    add_backend_options(*evaluate, eval.backend);
    evaluate->add_option("--scheme", eval.scheme, "Removal scheme: irof, pixel or samek");
    evaluate->add_option("--replacement", eval.replacement, "Replacement value: mean or black");
    evaluate->add_option("--fraction", eval.fraction, "Fraction of units removed along the curve (0, 1]");
    evaluate->add_option("--square-size", eval.square_size, "Square size of the samek scheme");
    evaluate->add_option("--dump-frames-every", eval.dump_every, "Write every k-th degraded frame as PNG");

    SensitivityOptions sens;
    auto* sensitivity = app.add_subcommand("sensitivity", "Paired t-tests of each method against random removal");
    add_data_options(*sensitivity, sens.data, true);
    add_method_options(*sensitivity, sens.methods);
    add_backend_options(*sensitivity, sens.backend);
    sensitivity->add_option("--evaluators", sens.evaluators,
                            "Evaluators: irof-mean, irof-black, pixel-mean, pixel-black, samek")
        ->delimiter(',');
    sensitivity->add_option("--statistic", sens.statistic, "Per-image statistic: degradation-at-fraction or aoc");
    sensitivity->add_option("--fraction", sens.fraction, "Fraction of units removed (0, 1]");
    sensitivity->add_option("--square-size", sens.square_size, "Square size of the samek evaluator");

    SegmentOptions seg;
    auto* segment = app.add_subcommand("segment", "Precompute and cache SLIC label maps");
    add_data_options(*segment, seg.data, false);
    segment->add_flag("--export-raw", seg.export_raw, "Also write labels as raw-float rasters");

    BaselineOptions base;
    auto* baseline = app.add_subcommand("baseline", "Write Sobel or random baseline heatmaps");
    baseline->add_option("kind", base.kind, "sobel or random")->required()->check(CLI::IsMember({"sobel", "random"}));
    add_data_options(*baseline, base.data, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Success : BadConfig;
    }

    try {
        if (*evaluate) {
            return cmd_evaluate(eval);
        }
        if (*sensitivity) {
            return cmd_sensitivity(sens);
        }
        if (*segment) {
            return cmd_segment(seg);
        }
        return cmd_baseline(base);
    } catch (const irof::ConfigError& e) {
        spdlog::error("configuration error: {}", e.what());
        return BadConfig;
    } catch (const irof::BackendError& e) {
        spdlog::error("backend error: {}", e.what());
        return BackendFailure;
    } catch (const irof::DataError& e) {
        spdlog::error("data error: {}", e.what());
        return BadData;
    } catch (const fs::filesystem_error& e) {
        spdlog::error("file system error: {}", e.what());
        return BadData;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return Failure;
    }
}
