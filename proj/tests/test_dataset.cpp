#include "irof/dataset.hpp"
#include "irof/error.hpp"
#include "irof/io.hpp"
#include "irof/oracle.hpp"
#include "irof/report.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace irof;
using irof::test::TempDir;

namespace {

void put(const std::filesystem::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_SUITE("dataset") {

TEST_CASE("images load sorted by name, skipping label files") {
    TempDir dir("images");
    Pcg32 rng(1, 1);
    save_raw(dir / "b.f32", test::random_image(4, 4, 1, rng));
    save_png(dir / "a.png", test::random_image(4, 4, 3, rng));
    write_png(dir / "a.labels.png", PngRaster{4, 4, 1, 16, std::vector<std::uint16_t>(16, 0)});
    put(dir / "notes.txt", "ignored");
    const auto samples = load_images(dir.path(), {0, 1});
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].id == "a");
    CHECK(samples[1].id == "b");
    CHECK_FALSE(samples[0].target);
}

TEST_CASE("image loading errors name the directory") {
    TempDir dir("noimages");
    const std::string path = dir.path().string();
    CHECK_THROWS_WITH_AS((void)load_images(dir.path(), {0, 1}), doctest::Contains(path.c_str()), DataError);
    CHECK_THROWS_WITH_AS((void)load_images(dir / "missing", {0, 1}), doctest::Contains("missing"), DataError);
}

TEST_CASE("heatmaps are matched to samples by id") {
    TempDir dir("heatmaps");
    std::vector<Sample> samples{{"x", Image(2, 2, 1, {0, 1}), std::nullopt}, {"y", Image(2, 2, 1, {0, 1}), std::nullopt}};
    save_raw(dir / "x.f32", RelevanceMap(2, 2, {1, 2, 3, 4}, "stored"));
    write_png(dir / "y.png", PngRaster{2, 2, 1, 16, {0, 65535, 0, 0}});
    const auto maps = load_heatmaps(dir.path(), samples, "sm");
    REQUIRE(maps.size() == 2);
    CHECK(maps[0].method_id() == "sm");
    CHECK(maps[0].data()[3] == 4.0f);
    CHECK(maps[1].data()[1] == 1.0f);

    std::filesystem::remove(dir / "y.png");
    CHECK_THROWS_WITH_AS((void)load_heatmaps(dir.path(), samples, "sm"), doctest::Contains("y"), DataError);
    CHECK_THROWS_WITH_AS((void)load_heatmaps(dir / "nope", samples, "sm"), doctest::Contains("nope"), DataError);

    save_raw(dir / "y.f32", RelevanceMap(3, 2, std::vector<float>(6, 0.0f)));
    CHECK_THROWS_AS((void)load_heatmaps(dir.path(), samples, "sm"), DataError);
}

TEST_CASE("targets csv") {
    TempDir dir("targets");
    std::vector<Sample> samples{{"a", Image(1, 1, 1, {0, 1}), std::nullopt}, {"b", Image(1, 1, 1, {0, 1}), std::nullopt}};
    put(dir / "t.csv", "image_id,target\na,3\n\nb, 0\n");
    apply_targets(samples, dir / "t.csv");
    CHECK(samples[0].target == 3u);
    CHECK(samples[1].target == 0u);
    put(dir / "bad.csv", "a,1\nzzz,2\n");
    CHECK_THROWS_WITH_AS(apply_targets(samples, dir / "bad.csv"), doctest::Contains("zzz"), DataError);
    put(dir / "nan.csv", "a,1\nb,x\n");
    CHECK_THROWS_AS(apply_targets(samples, dir / "nan.csv"), DataError);
    CHECK_THROWS_AS(apply_targets(samples, dir / "missing.csv"), DataError);
}

TEST_CASE("label images round trip") {
    TempDir dir("labels");
    Pcg32 rng(4, 4);
    const SegmentMap map = test::random_segmentation(20, 30, 40, rng);
    save_labels(dir / "m.labels.png", map);
    CHECK(load_labels(dir / "m.labels.png") == map);
    write_png(dir / "eight.png", PngRaster{1, 1, 1, 8, {0}});
    CHECK_THROWS_AS((void)load_labels(dir / "eight.png"), DataError);
}

TEST_CASE("segment cache is idempotent and keyed by the segmenter") {
    TempDir dir("cache");
    DiskFixture fixture = make_disk_fixture(3, 32, 1);
    const SlicSegmenter segmenter(SlicParams{40, 10.0, 10, 0});

    Dataset first;
    first.samples = fixture.samples;
    SegmentCache cache(dir / "segments");
    prepare_dataset(first, segmenter, cache, 2);
    CHECK(cache.computed() == 3);
    CHECK(cache.contains(fixture.samples[0].id, segmenter));
    const std::string before = slurp(dir / "segments" / (fixture.samples[0].id + ".labels.json"));

    Dataset second;
    second.samples = fixture.samples;
    SegmentCache reused(dir / "segments");
    prepare_dataset(second, segmenter, reused, 1);
    CHECK(reused.computed() == 0);
    CHECK(second.segments == first.segments);
    CHECK(slurp(dir / "segments" / (fixture.samples[0].id + ".labels.json")) == before);

    const SlicSegmenter other(SlicParams{41, 10.0, 10, 0});
    CHECK_FALSE(reused.contains(fixture.samples[0].id, other));
    Dataset third;
    third.samples = fixture.samples;
    prepare_dataset(third, other, reused, 1);
    CHECK(reused.computed() == 3);

    Dataset uncached;
    uncached.samples = fixture.samples;
    prepare_dataset(uncached, segmenter, 1);
    CHECK(uncached.segments == first.segments);
    CHECK(uncached.mean.per_channel == first.mean.per_channel);
}

TEST_CASE("disk fixture") {
    const DiskFixture a = make_disk_fixture(4, 64, 7);
    const DiskFixture b = make_disk_fixture(4, 64, 7);
    REQUIRE(a.samples.size() == 4);
    CHECK(a.samples[0].id == "disk_000");
    CHECK(a.samples[0].image == b.samples[0].image);
    CHECK_FALSE(a.samples[0].image == make_disk_fixture(1, 64, 8).samples[0].image);
    CHECK(a.disk.radius == 12.0);
    for (const Sample& s : a.samples) {
        CHECK(s.target == 1u);
        const double inside = disk_model_scores(s.image, a.disk).scores[1];
        CHECK(inside >= 0.5);
        CHECK(inside <= 1.0);
    }
    CHECK_THROWS_AS((void)make_disk_fixture(1, 4, 0), ConfigError);
    CHECK_THROWS_AS((void)disk_model_scores(Image(8, 8, 1, {0, 1}), Disk{100, 100, 1}), DataError);
}

TEST_CASE("result json carries per-image values and no timestamps") {
    IROFResult r;
    r.method_id = "m";
    r.image_ids = {"a"};
    r.per_image_aoc = {0.25};
    r.curves.push_back(DegradationCurve{"a", "m", Scheme::SegmentMean, 1, 0.5, {1.0, 0.5}});
    r.irof_score = 25.0;
    r.n_images = 1;
    r.skipped.push_back({"b", "reference score 0"});
    r.n_skipped = 1;
    const std::vector<IROFResult> results{r};
    const auto j = result_json(results, nlohmann::json{{"seed", 1}});
    const auto& m = j["methods"][0];
    CHECK(m["method_id"] == "m");
    CHECK(m["irof_score"] == 25.0);
    CHECK(m["n_images"] == 1);
    CHECK(m["n_skipped"] == 1);
    CHECK(m["per_image"][0]["aoc"] == 0.25);
    CHECK(m["per_image"][0]["target_class"] == 1);
    CHECK(m["skipped"][0]["image_id"] == "b");
    CHECK(j["config"]["seed"] == 1);
    CHECK(j.dump().find("time") == std::string::npos);
    CHECK(curves_svg(results).find("<svg") != std::string::npos);

    TempDir dir("json");
    write_json(dir / "r.json", j);
    CHECK(nlohmann::json::parse(slurp(dir / "r.json")) == j);
}

TEST_CASE("curve csv round trip is exact") {
    TempDir dir("csv");
    IROFResult r;
    r.method_id = "m";
    r.curves.push_back(DegradationCurve{"img,1", "m", Scheme::PixelBlack, 0, 1.0, {1.0, 0.1, 1.0 / 3.0, 1.7e-300}});
    const std::vector<IROFResult> results{r};
    write_curves_csv(dir / "c.csv", results);
    const auto back = read_curves_csv(dir / "c.csv");
    REQUIRE(back.size() == 1);
    CHECK(back[0].values == r.curves[0].values);
    CHECK(back[0].image_id == "img,1");
    CHECK(back[0].scheme == Scheme::PixelBlack);
    put(dir / "bad.csv", "a,b\n");
    CHECK_THROWS_AS((void)read_curves_csv(dir / "bad.csv"), DataError);
}

} // TEST_SUITE
