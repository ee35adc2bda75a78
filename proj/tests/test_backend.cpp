#include "irof/backend.hpp"
#include "irof/error.hpp"
#include "irof/oracle.hpp"
#include "support.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <cmath>
#include <thread>

using namespace irof;

namespace {

BackendConfig disk_process(const std::string& extra = {}, std::size_t batch = 32) {
    BackendConfig config = BackendConfig::parse(std::string("proc:") + IROF_DISK_MODEL + extra);
    config.batch_size = batch;
    config.timeout = std::chrono::milliseconds(20000);
    return config;
}

Image disk_image(std::size_t size, float inside, float outside) {
    const Disk disk = default_disk(size, size);
    Image img(size, size, 1, {0, 1});
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            img.mutable_data()[y * size + x] = disk.contains(y, x) ? inside : outside;
        }
    }
    return img;
}

// Serves the line protocol over HTTP with the in-library disk oracle.
class OracleServer {
public:
    OracleServer() {
        server_.Post("/predict", [this](const httplib::Request& req, httplib::Response& res) {
            ++requests_;
            if (fail_next_.exchange(false)) {
                res.status = 503;
                return;
            }
            const protocol::Request r = protocol::decode_request(req.body);
            const Image img(r.shape[0], r.shape[1], r.shape[2], r.data, {0, 1});
            if (reject_) {
                res.set_content(protocol::encode_error(r.id, "refused"), "application/json");
                return;
            }
            res.set_content(protocol::encode_response(r.id, disk_model_scores(img, default_disk(img.height(), img.width()))),
                            "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~OracleServer() {
        server_.stop();
        thread_.join();
    }

    [[nodiscard]] std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/predict"; }
    void fail_next() { fail_next_ = true; }
    void reject(bool on) { reject_ = on; }
    [[nodiscard]] int requests() const { return requests_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<bool> fail_next_{false};
    std::atomic<bool> reject_{false};
    std::atomic<int> requests_{0};
};

} // namespace

TEST_SUITE("backend") {

TEST_CASE("class_score and argmax") {
    const ClassScores s{{0.2, 0.8}};
    CHECK(class_score(s, 1) == 0.8);
    CHECK_THROWS_WITH_AS((void)class_score(s, 2), doctest::Contains("out of range"), DataError);
    CHECK(argmax(s) == 1);
    CHECK(argmax(ClassScores{{0.5, 0.5}}) == 0);
    CHECK_THROWS_AS((void)argmax(ClassScores{}), DataError);

    Pcg32 rng(1, 1);
    std::vector<double> logits(1000);
    double total = 0.0;
    for (double& v : logits) {
        v = std::exp(4.0 * rng.uniform());
        total += v;
    }
    for (double& v : logits) {
        v /= total;
    }
    const ClassScores big{logits};
    for (std::size_t k = 0; k < 1000; k += 37) {
        CHECK(class_score(big, k) >= 0.0);
        CHECK(class_score(big, k) <= 1.0);
    }
}

TEST_CASE("backend spec parsing") {
    CHECK(BackendConfig::parse("proc:./model --x").transport == Transport::Process);
    CHECK(BackendConfig::parse("proc:./model --x").endpoint == "./model --x");
    CHECK(BackendConfig::parse("http://h:1/p").transport == Transport::Http);
    CHECK(BackendConfig::parse("http:h:1").endpoint == "h:1");
    CHECK(BackendConfig::parse("onnx:m.onnx").transport == Transport::Onnx);
    CHECK_THROWS_AS((void)BackendConfig::parse("grpc:x"), ConfigError);
    CHECK_THROWS_AS((void)BackendConfig::parse("proc:"), ConfigError);
    BackendConfig bad = BackendConfig::parse("proc:x");
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    BackendConfig onnx = BackendConfig::parse("onnx:model.onnx");
    CHECK_THROWS_AS((void)make_backend(onnx), ConfigError);
}

TEST_CASE("request and response round trip") {
    Pcg32 rng(7, 7);
    const Image img = test::random_image(3, 4, 3, rng);
    const std::string line = protocol::encode_request("req-1", img);
    const protocol::Request r = protocol::decode_request(line);
    CHECK(r.id == "req-1");
    CHECK(r.shape == std::vector<std::size_t>{3, 4, 3});
    CHECK(std::vector<float>(img.data().begin(), img.data().end()) == r.data);

    const protocol::Request planar = protocol::decode_request(protocol::encode_request("p", img, ChannelOrder::Planar));
    CHECK(planar.shape == std::vector<std::size_t>{3, 3, 4});
    CHECK(planar.data[1] == img.at(0, 1, 0));
    CHECK(planar.data[12] == img.at(0, 0, 1));

    const auto ok = protocol::decode_response(protocol::encode_response("7", ClassScores{{0.25, 0.75}}));
    CHECK(ok.id == "7");
    REQUIRE(ok.scores);
    CHECK(ok.scores->scores == std::vector<double>{0.25, 0.75});
    const auto err = protocol::decode_response(protocol::encode_error(7, "bad input"));
    CHECK(err.id == "7");
    CHECK(err.error == "bad input");
    CHECK_FALSE(err.scores);
}

TEST_CASE("malformed protocol lines are rejected") {
    CHECK_THROWS_AS((void)protocol::decode_request("{"), DataError);
    CHECK_THROWS_AS((void)protocol::decode_request(R"({"id":"x","shape":[1,1,1],"data":[0.5,0.5]})"), DataError);
    CHECK_THROWS_AS((void)protocol::decode_request(R"({"id":"x","shape":[1,1,1],"data":["a"]})"), DataError);
    CHECK_THROWS_AS((void)protocol::decode_request(R"({"id":"x","data":[1]})"), DataError);
    const auto spaced = protocol::decode_request(R"( { "data" : [ 1e-1 , -2 ] , "shape" : [ 1 , 2 , 1 ] , "id" : 5 } )");
    CHECK(spaced.id == 5);
    CHECK(spaced.data == std::vector<float>{0.1f, -2.0f});
    CHECK_THROWS_AS((void)protocol::decode_response("not json"), BackendError);
    CHECK_THROWS_AS((void)protocol::decode_response(R"({"scores":[1]})"), BackendError);
    CHECK_THROWS_AS((void)protocol::decode_response(R"({"id":"1","scores":"x"})"), BackendError);
}

TEST_CASE("in-process backends validate outputs") {
    FunctionBackend ok([](const Image&) { return ClassScores{{0.3, 0.7}}; });
    const std::vector<Image> images(5, Image(2, 2, 1, {0, 1}));
    CHECK(ok.predict_batch(images).size() == 5);

    FunctionBackend not_softmax([](const Image&) { return ClassScores{{0.3, 0.3}}; });
    CHECK_THROWS_AS((void)not_softmax.predict_batch(images), BackendError);
    FunctionBackend nan([](const Image&) { return ClassScores{{std::nan(""), 1.0}}; });
    CHECK_THROWS_AS((void)nan.predict_batch(images), BackendError);

    BackendConfig raw = FunctionBackend::in_process_config();
    raw.softmax = false;
    FunctionBackend logits([](const Image&) { return ClassScores{{-3.0, 5.0}}; }, raw);
    CHECK(logits.predict_batch(images)[0].scores[1] == 5.0);

    const std::vector<Image> mixed{Image(2, 2, 1, {0, 1}), Image(2, 3, 1, {0, 1})};
    CHECK_THROWS_AS((void)ok.predict_batch(mixed), DataError);

    BackendConfig ranged = FunctionBackend::in_process_config();
    ranged.layout.expected_range = ValueRange{-1, 1};
    FunctionBackend strict([](const Image&) { return ClassScores{{0.5, 0.5}}; }, ranged);
    CHECK_THROWS_AS((void)strict.predict_batch(images), DataError);
}

TEST_CASE("determinism self-test") {
    FunctionBackend stable([](const Image&) { return ClassScores{{0.4, 0.6}}; });
    CHECK(determinism_self_test(stable, Image(2, 2, 1, {0, 1})) == 0.0);
    int calls = 0;
    FunctionBackend drifting([&calls](const Image&) {
        const double s = 0.5 + 0.01 * (calls++);
        return ClassScores{{1.0 - s, s}};
    });
    CHECK_THROWS_AS((void)determinism_self_test(drifting, Image(2, 2, 1, {0, 1})), BackendError);
}

TEST_CASE("process disk model answers the oracle definition") {
    auto backend = make_backend(disk_process());
    const std::vector<Image> images{Image(16, 16, 1, {0, 1}), disk_image(16, 1.0f, 0.0f)};
    const auto scores = backend->predict_batch(images);
    CHECK(scores[0].scores == std::vector<double>{1.0, 0.0});
    CHECK(scores[1].scores == std::vector<double>{0.0, 1.0});
    for (const Image& img : images) {
        CHECK(disk_model_scores(img, default_disk(16, 16)) == backend->predict_batch(std::span(&img, 1))[0]);
    }
}

TEST_CASE("one batch of three equals three singleton batches") {
    Pcg32 rng(5, 5);
    std::vector<Image> images;
    for (int i = 0; i < 3; ++i) {
        images.push_back(test::random_image(24, 24, 3, rng));
    }
    auto batched = make_backend(disk_process({}, 3));
    auto single = make_backend(disk_process({}, 1));
    const auto together = batched->predict_batch(images);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(single->predict_batch(std::span(&images[i], 1))[0] == together[i]);
    }
}

TEST_CASE("planar layout reaches the model in channel-major order") {
    Pcg32 rng(6, 6);
    const Image img = test::random_image(20, 20, 3, rng);
    BackendConfig config = disk_process(" --planar");
    config.layout.order = ChannelOrder::Planar;
    auto planar = make_backend(config);
    auto interleaved = make_backend(disk_process());
    const auto a = planar->predict_batch(std::span(&img, 1))[0];
    const auto b = interleaved->predict_batch(std::span(&img, 1))[0];
    CHECK(a.scores[1] == doctest::Approx(b.scores[1]).epsilon(1e-12));
}

TEST_CASE("a crashed model process is restarted") {
    const Image img = disk_image(16, 0.8f, 0.1f);
    BackendConfig config = disk_process(" --crash-after 2", 1);
    config.max_attempts = 2;
    auto backend = make_backend(config);
    for (int i = 0; i < 6; ++i) {
        CHECK(backend->predict_batch(std::span(&img, 1))[0].scores[1] == doctest::Approx(0.8));
    }

    BackendConfig dead = disk_process(" --crash-after 0", 1);
    dead.max_attempts = 3;
    auto failing = make_backend(dead);
    try {
        (void)failing->predict_batch(std::span(&img, 1));
        FAIL("expected a backend error");
    } catch (const BackendError& e) {
        CHECK(e.attempts() == 3);
        CHECK(std::string(e.what()).find("after 3 attempts") != std::string::npos);
    }
}

TEST_CASE("model error responses surface as non-retryable backend errors") {
    const Image wrong_range(4, 4, 1, std::vector<float>(16, -0.5f), {-1, 1});
    auto backend = make_backend(disk_process());
    CHECK_THROWS_WITH_AS((void)backend->predict_batch(std::span(&wrong_range, 1)), doctest::Contains("rejected"),
                         BackendError);
    // The model survives a malformed request.
    const Image fine(4, 4, 1, {0, 1});
    CHECK(backend->predict_batch(std::span(&fine, 1))[0].scores[0] == 1.0);
}

TEST_CASE("missing model executable is a backend error") {
    BackendConfig config = BackendConfig::parse("proc:/nonexistent/model-binary");
    config.max_attempts = 1;
    config.timeout = std::chrono::milliseconds(5000);
    auto backend = make_backend(config);
    const Image img(4, 4, 1, {0, 1});
    CHECK_THROWS_AS((void)backend->predict_batch(std::span(&img, 1)), BackendError);
}

TEST_CASE("HTTP transport posts the same JSON objects") {
    OracleServer server;
    BackendConfig config = BackendConfig::parse(server.url());
    config.timeout = std::chrono::milliseconds(10000);
    auto backend = make_backend(config);
    Pcg32 rng(9, 9);
    std::vector<Image> images;
    for (int i = 0; i < 4; ++i) {
        images.push_back(test::random_image(16, 16, 1, rng));
    }
    const auto scores = backend->predict_batch(images);
    REQUIRE(scores.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(scores[i] == disk_model_scores(images[i], default_disk(16, 16)));
    }

    server.fail_next();
    CHECK(backend->predict_batch(std::span(&images[0], 1))[0] == scores[0]);

    server.reject(true);
    CHECK_THROWS_WITH_AS((void)backend->predict_batch(std::span(&images[0], 1)), doctest::Contains("refused"),
                         BackendError);
}

TEST_CASE("unreachable HTTP endpoint fails after the configured attempts") {
    BackendConfig config = BackendConfig::parse("http://127.0.0.1:1/predict");
    config.max_attempts = 2;
    config.timeout = std::chrono::milliseconds(2000);
    auto backend = make_backend(config);
    const Image img(4, 4, 1, {0, 1});
    try {
        (void)backend->predict_batch(std::span(&img, 1));
        FAIL("expected a backend error");
    } catch (const BackendError& e) {
        CHECK(e.attempts() == 2);
    }
}

} // TEST_SUITE
