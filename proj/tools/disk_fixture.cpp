// Writes the synthetic disk dataset: images as 8-bit PNG plus disk-indicator heatmaps.

#include "irof/io.hpp"
#include "irof/oracle.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>

int main(int argc, char** argv) {
    CLI::App app{"Synthetic disk images and ground-truth heatmaps for the disk oracle model"};
    std::string out = "disk-fixture";
    std::size_t count = 40;
    std::size_t size = 64;
    std::uint64_t seed = 0;
    bool raw = false;
    app.add_option("--out-dir", out, "Writes <out>/images and <out>/ground-truth");
    app.add_option("--count", count, "Number of images");
    app.add_option("--size", size, "Image side length in pixels");
    app.add_option("--seed", seed, "Fixture seed");
    app.add_flag("--raw", raw, "Store images as raw-float rasters instead of 8-bit PNG");
    CLI11_PARSE(app, argc, argv);

    try {
        const auto fixture = irof::make_disk_fixture(count, size, seed);
        const std::filesystem::path images = std::filesystem::path(out) / "images";
        const std::filesystem::path truth = std::filesystem::path(out) / "ground-truth";
        std::filesystem::create_directories(images);
        std::filesystem::create_directories(truth);
        for (std::size_t i = 0; i < fixture.samples.size(); ++i) {
            const auto& s = fixture.samples[i];
            if (raw) {
                irof::save_raw(images / (s.id + ".f32"), s.image);
            } else {
                irof::save_png(images / (s.id + ".png"), s.image);
            }
            irof::save_raw(truth / (s.id + ".f32"), fixture.ground_truth[i]);
        }
        std::printf("wrote %zu images to %s\n", fixture.samples.size(), out.c_str());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
    return 0;
}
