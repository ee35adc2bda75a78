// Oracle classifier for the IROF acceptance fixture. Speaks the line-delimited JSON protocol on
// stdin/stdout, or serves POST /predict with --http-port.

#include "irof/backend.hpp"
#include "irof/error.hpp"
#include "irof/oracle.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Options {
    std::optional<double> cy;
    std::optional<double> cx;
    std::optional<double> radius;
    float range_min = 0.0f;
    float range_max = 1.0f;
    bool planar = false;
    long crash_after = -1;
    int http_port = -1;
};

std::string answer(const std::string& line, const Options& opt) {
    nlohmann::json id;
    try {
        irof::protocol::Request request = irof::protocol::decode_request(line);
        id = request.id;
        if (request.shape.size() != 3) {
            throw irof::DataError("shape must be [H, W, C]");
        }
        std::size_t h = request.shape[0], w = request.shape[1], c = request.shape[2];
        std::vector<float> data = std::move(request.data);
        if (opt.planar) {
            // [C, H, W] on the wire; the model reads interleaved pixels.
            c = request.shape[0];
            h = request.shape[1];
            w = request.shape[2];
            std::vector<float> interleaved(data.size());
            for (std::size_t ch = 0; ch < c; ++ch) {
                for (std::size_t p = 0; p < h * w; ++p) {
                    interleaved[p * c + ch] = data[ch * h * w + p];
                }
            }
            data = std::move(interleaved);
        }
        const irof::Image image(h, w, c, std::move(data), {opt.range_min, opt.range_max});
        irof::Disk disk = irof::default_disk(h, w);
        disk.cy = opt.cy.value_or(disk.cy);
        disk.cx = opt.cx.value_or(disk.cx);
        disk.radius = opt.radius.value_or(disk.radius);
        return irof::protocol::encode_response(id, irof::disk_model_scores(image, disk));
    } catch (const irof::Error& e) {
        return irof::protocol::encode_error(id, e.what());
    }
}

int serve_stdio(const Options& opt) {
    std::ios::sync_with_stdio(false);
    std::string line;
    long served = 0;
    while (std::getline(std::cin, line)) {
        if (line.empty()) {
            continue;
        }
        if (opt.crash_after >= 0 && served == opt.crash_after) {
            std::_Exit(1);
        }
        std::cout << answer(line, opt) << '\n' << std::flush;
        ++served;
    }
    return 0;
}

int serve_http(const Options& opt) {
    httplib::Server server;
    server.Post("/predict", [&](const httplib::Request& req, httplib::Response& res) {
        res.set_content(answer(req.body, opt), "application/json");
    });
    int port = opt.http_port;
    if (port == 0) {
        port = server.bind_to_any_port("127.0.0.1");
    } else if (!server.bind_to_port("127.0.0.1", port)) {
        std::cerr << "cannot bind 127.0.0.1:" << port << '\n';
        return 1;
    }
    std::cout << "listening " << port << '\n' << std::flush;
    return server.listen_after_bind() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Disk oracle model: score_1 = mean normalised intensity inside a disk, score_0 = 1 - score_1"};
    Options opt;
    app.add_option("--cy", opt.cy, "Disk centre row (default: image centre)");
    app.add_option("--cx", opt.cx, "Disk centre column (default: image centre)");
    app.add_option("--radius", opt.radius, "Disk radius in pixels (default: 0.1875 * min(H, W))");
    app.add_option("--range-min", opt.range_min, "Lower end of the input value range");
    app.add_option("--range-max", opt.range_max, "Upper end of the input value range");
    app.add_flag("--planar", opt.planar, "Requests carry [C, H, W] planar data");
    app.add_option("--crash-after", opt.crash_after, "Exit abruptly after answering this many requests");
    app.add_option("--http-port", opt.http_port, "Serve POST /predict on this port instead of stdio (0 picks one)");
    CLI11_PARSE(app, argc, argv);
    return opt.http_port >= 0 ? serve_http(opt) : serve_stdio(opt);
}
