#include "irof/error.hpp"
#include "irof/oracle.hpp"
#include "irof/report.hpp"
#include "irof/sensitivity.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace irof;

namespace {

FunctionBackend disk_backend() {
    return FunctionBackend([](const Image& img) { return disk_model_scores(img, default_disk(img.height(), img.width())); });
}

Dataset disk_dataset(std::size_t count, std::uint64_t seed) {
    DiskFixture fixture = make_disk_fixture(count, 48, seed);
    Dataset ds;
    ds.samples = fixture.samples;
    prepare_dataset(ds, SlicSegmenter(SlicParams{100, 10.0, 10, 0}), 1);
    return ds;
}

Method ground_truth(const Dataset& ds) {
    std::vector<RelevanceMap> maps;
    for (const Sample& s : ds.samples) {
        maps.push_back(disk_indicator(48, 48, default_disk(48, 48)));
    }
    return Method::from_heatmaps("ground-truth", maps);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_SUITE("sensitivity") {

TEST_CASE("evaluator and statistic names") {
    CHECK(all_evaluators().size() == 5);
    for (Evaluator e : all_evaluators()) {
        CHECK(parse_evaluator(to_string(e)) == e);
    }
    CHECK(to_string(Evaluator::IrofMean) == "irof-mean");
    CHECK(to_string(Evaluator::Samek) == "samek");
    CHECK(scheme_of(Evaluator::PixelBlack) == Scheme::PixelBlack);
    CHECK(scheme_of(Evaluator::Samek) == Scheme::SamekSquares);
    CHECK_THROWS_AS((void)parse_evaluator("lime"), ConfigError);
    CHECK(parse_statistic("aoc") == SensitivityStatistic::AocDifference);
    CHECK(parse_statistic("degradation-at-fraction") == SensitivityStatistic::DegradationAtFraction);
    CHECK_THROWS_AS((void)parse_statistic("mean"), ConfigError);
}

TEST_CASE("configuration validation") {
    SensitivityConfig config;
    CHECK(config.fraction == 0.10);
    CHECK_NOTHROW(config.validate());
    config.fraction = 0.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.fraction = 0.1;
    config.evaluators.clear();
    CHECK_THROWS_AS(config.validate(), ConfigError);
    CHECK(describe(SensitivityConfig{})["fraction"] == 0.1);
}

TEST_CASE("an empty method set gives an empty report") {
    Dataset ds = disk_dataset(3, 1);
    FunctionBackend model = disk_backend();
    const SensitivityReport report = sensitivity_report(ds, {}, SensitivityConfig{}, model);
    CHECK(report.cells.empty());
    CHECK(report.skipped.empty());
}

TEST_CASE("one row per evaluator and ground truth is significant everywhere") {
    Dataset ds = disk_dataset(12, 2);
    FunctionBackend model = disk_backend();
    const std::vector<Method> methods{ground_truth(ds)};
    const SensitivityReport report = sensitivity_report(ds, methods, SensitivityConfig{}, model);
    REQUIRE(report.cells.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        const SensitivityCell& cell = report.cells[i];
        CHECK(cell.evaluator == all_evaluators()[i]);
        CHECK(cell.error.empty());
        REQUIRE(cell.test);
        CHECK(cell.test->n == 12);
        CHECK(cell.test->t_statistic > 0.0);
        CHECK(cell.test->p_value < 1e-3);
        CHECK(cell.method_values.size() == cell.baseline_values.size());
    }

    const auto json = sensitivity_json(report, describe(SensitivityConfig{}));
    CHECK(json["cells"].size() == 5);
    CHECK(json["p_values"]["ground-truth"].size() == 5);

    test::TempDir dir("sens");
    write_sensitivity_csv(dir / "s.csv", report);
    write_pvalue_plot_csv(dir / "p.csv", report);
    const std::string csv = slurp(dir / "s.csv");
    CHECK(csv.rfind("method,evaluator,t,p,n\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
    CHECK(slurp(dir / "p.csv").rfind("method,evaluator,p,log10_p\n", 0) == 0);
    CHECK(pvalue_svg(report).find("<svg") != std::string::npos);
}

TEST_CASE("a failing cell does not abort the others") {
    Dataset ds = disk_dataset(6, 3);
    FunctionBackend model = disk_backend();
    Method broken = ground_truth(ds);
    broken.id = "broken";
    broken.heatmaps.pop_back();
    const std::vector<Method> methods{broken, Method::sobel()};
    SensitivityConfig config;
    config.evaluators = {Evaluator::IrofMean, Evaluator::Samek};
    const SensitivityReport report = sensitivity_report(ds, methods, config, model);
    REQUIRE(report.cells.size() == 4);
    for (const SensitivityCell& cell : report.cells) {
        if (cell.method_id == "broken") {
            CHECK_FALSE(cell.error.empty());
            CHECK_FALSE(cell.test);
        } else {
            CHECK(cell.error.empty());
            CHECK(cell.test);
        }
    }
}

TEST_CASE("a random method under test is independent of the baseline") {
    Dataset ds = disk_dataset(8, 4);
    FunctionBackend model = disk_backend();
    const std::vector<Method> methods{Method::random()};
    SensitivityConfig config;
    config.evaluators = {Evaluator::IrofMean, Evaluator::PixelMean, Evaluator::Samek};
    const SensitivityReport report = sensitivity_report(ds, methods, config, model);
    for (const SensitivityCell& cell : report.cells) {
        CHECK(cell.error.empty());
        CHECK(cell.method_values != cell.baseline_values);
    }
}

TEST_CASE("unusable images are excluded from every cell") {
    Dataset ds = disk_dataset(5, 5);
    std::fill(ds.samples[2].image.mutable_data().begin(), ds.samples[2].image.mutable_data().end(), 0.0f);
    FunctionBackend model = disk_backend();
    const std::vector<Method> methods{ground_truth(ds)};
    SensitivityConfig config;
    config.evaluators = {Evaluator::IrofBlack};
    config.statistic = SensitivityStatistic::AocDifference;
    const SensitivityReport report = sensitivity_report(ds, methods, config, model);
    REQUIRE(report.skipped.size() == 1);
    CHECK(report.skipped[0].image_id == ds.samples[2].id);
    REQUIRE(report.cells.size() == 1);
    CHECK(report.cells[0].image_ids.size() == 4);
}

TEST_CASE("results do not depend on the worker count") {
    Dataset ds = disk_dataset(6, 6);
    FunctionBackend model = disk_backend();
    const std::vector<Method> methods{Method::sobel()};
    SensitivityConfig a;
    a.evaluators = {Evaluator::IrofMean, Evaluator::Samek};
    a.seed = 9;
    SensitivityConfig b = a;
    b.workers = 3;
    const auto ra = sensitivity_report(ds, methods, a, model);
    const auto rb = sensitivity_report(ds, methods, b, model);
    for (std::size_t i = 0; i < ra.cells.size(); ++i) {
        CHECK(ra.cells[i].method_values == rb.cells[i].method_values);
        CHECK(ra.cells[i].baseline_values == rb.cells[i].baseline_values);
    }
}

} // TEST_SUITE
