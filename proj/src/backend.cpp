#include "irof/backend.hpp"

#include "irof/error.hpp"
#include "transports.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

namespace irof {

double class_score(const ClassScores& scores, std::size_t target) {
    if (target >= scores.scores.size()) {
        throw DataError("target class " + std::to_string(target) + " out of range for " +
                        std::to_string(scores.scores.size()) + " classes");
    }
    return scores.scores[target];
}

std::size_t argmax(const ClassScores& scores) {
    if (scores.scores.empty()) {
        throw DataError("argmax of an empty score vector");
    }
    return static_cast<std::size_t>(
        std::distance(scores.scores.begin(), std::max_element(scores.scores.begin(), scores.scores.end())));
}

void BackendConfig::validate() const {
    if (batch_size < 1) {
        throw ConfigError("backend batch_size must be at least 1");
    }
    if (pool_size < 1) {
        throw ConfigError("backend pool size must be at least 1");
    }
    if (max_attempts < 1) {
        throw ConfigError("backend max_attempts must be at least 1");
    }
    if (transport != Transport::InProcess && endpoint.empty()) {
        throw ConfigError("backend endpoint is empty");
    }
}

BackendConfig BackendConfig::parse(std::string_view spec) {
    BackendConfig config;
    if (spec.starts_with("http://") || spec.starts_with("https://")) {
        config.transport = Transport::Http;
        config.endpoint = std::string(spec);
    } else if (spec.starts_with("proc:")) {
        config.transport = Transport::Process;
        config.endpoint = std::string(spec.substr(5));
    } else if (spec.starts_with("http:")) {
        config.transport = Transport::Http;
        config.endpoint = std::string(spec.substr(5));
    } else if (spec.starts_with("onnx:")) {
        config.transport = Transport::Onnx;
        config.endpoint = std::string(spec.substr(5));
    } else {
        throw ConfigError("backend must be proc:CMD, http:URL or onnx:PATH, got '" +
                          std::string(spec) + "'");
    }
    if (config.endpoint.empty()) {
        throw ConfigError("backend spec '" + std::string(spec) + "' has an empty endpoint");
    }
    return config;
}

nlohmann::json to_json(const BackendConfig& config) {
    static constexpr const char* kTransports[] = {"process", "http", "onnx", "in-process"};
    nlohmann::json j{{"transport", kTransports[static_cast<int>(config.transport)]},
                     {"endpoint", config.endpoint},
                     {"batch_size", config.batch_size},
                     {"pool_size", config.pool_size},
                     {"max_attempts", config.max_attempts},
                     {"softmax_checked", config.softmax},
                     {"channel_order",
                      config.layout.order == ChannelOrder::Interleaved ? "hwc" : "chw"}};
    if (config.layout.expected_range) {
        j["expected_range"] = {config.layout.expected_range->min, config.layout.expected_range->max};
    }
    return j;
}

ModelBackend::ModelBackend(BackendConfig config) : config_(std::move(config)) { config_.validate(); }

std::vector<ClassScores> ModelBackend::predict_batch(std::span<const Image> images) {
    std::vector<ClassScores> out;
    if (images.empty()) {
        return out;
    }
    const Image& first = images.front();
    for (const Image& image : images) {
        if (image.height() != first.height() || image.width() != first.width() ||
            image.channels() != first.channels()) {
            throw DataError("images in one batch must share their dimensions");
        }
        if (config_.layout.expected_range && image.range() != *config_.layout.expected_range) {
            throw DataError("image range does not match the range the model expects");
        }
    }
    out.reserve(images.size());
    for (std::size_t begin = 0; begin < images.size(); begin += config_.batch_size) {
        const std::size_t count = std::min(config_.batch_size, images.size() - begin);
        auto chunk = run_batch(images.subspan(begin, count));
        if (chunk.size() != count) {
            throw BackendError("backend returned " + std::to_string(chunk.size()) +
                               " results for " + std::to_string(count) + " images");
        }
        for (auto& scores : chunk) {
            if (scores.scores.empty()) {
                throw BackendError("backend returned an empty score vector");
            }
            double sum = 0.0;
            for (double s : scores.scores) {
                if (!std::isfinite(s)) {
                    throw BackendError("backend returned a non-finite score");
                }
                if (config_.softmax && s < 0.0) {
                    throw BackendError("softmax-declared backend returned a negative score");
                }
                sum += s;
            }
            if (config_.softmax && std::abs(sum - 1.0) > 1e-4) {
                throw BackendError("softmax-declared backend returned scores summing to " +
                                   std::to_string(sum));
            }
            out.push_back(std::move(scores));
        }
    }
    return out;
}

FunctionBackend::FunctionBackend(Model model, BackendConfig config)
    : ModelBackend(std::move(config)), model_(std::move(model)) {}

BackendConfig FunctionBackend::in_process_config() {
    BackendConfig config;
    config.transport = Transport::InProcess;
    config.endpoint = "in-process";
    return config;
}

std::vector<ClassScores> FunctionBackend::run_batch(std::span<const Image> images) {
    std::vector<ClassScores> out;
    out.reserve(images.size());
    for (const Image& image : images) {
        out.push_back(model_(image));
    }
    return out;
}

std::unique_ptr<ModelBackend> make_backend(const BackendConfig& config) {
    config.validate();
    switch (config.transport) {
    case Transport::Process:
        return detail::make_process_backend(config);
    case Transport::Http:
        return detail::make_http_backend(config);
    case Transport::Onnx:
        return detail::make_onnx_backend(config);
    case Transport::InProcess:
        break;
    }
    throw ConfigError("in-process backends are constructed directly, not from a config");
}

double determinism_self_test(ModelBackend& backend, const Image& image) {
    const std::vector<Image> pair{image, image};
    const auto first = backend.predict_batch(std::span<const Image>(pair).first(1));
    const auto second = backend.predict_batch(std::span<const Image>(pair).last(1));
    if (first[0].class_count() != second[0].class_count()) {
        throw BackendError("model is not deterministic: class count changed between calls");
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < first[0].class_count(); ++k) {
        worst = std::max(worst, std::abs(first[0].scores[k] - second[0].scores[k]));
    }
    if (!(worst < 1e-6)) {
        throw BackendError("model is not deterministic: scores differ by " + std::to_string(worst));
    }
    return worst;
}

namespace protocol {

std::string encode_request(std::string_view id, const Image& image, ChannelOrder order) {
    const auto data = image.data();
    const std::size_t h = image.height();
    const std::size_t w = image.width();
    const std::size_t c = image.channels();
    std::string s;
    s.reserve(data.size() * 12 + 96);
    s += R"({"id":)";
    s += nlohmann::json(std::string(id)).dump();
    s += R"(,"shape":[)";
    if (order == ChannelOrder::Interleaved) {
        s += std::to_string(h) + "," + std::to_string(w) + "," + std::to_string(c);
    } else {
        s += std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w);
    }
    s += R"(],"data":[)";
    char buf[32];
    auto put = [&](float v) {
        const auto res = std::to_chars(buf, buf + sizeof(buf), v);
        s.append(buf, res.ptr);
        s += ',';
    };
    if (order == ChannelOrder::Interleaved || c == 1) {
        for (float v : data) {
            put(v);
        }
    } else {
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t p = 0; p < h * w; ++p) {
                put(data[p * c + ch]);
            }
        }
    }
    s.back() = ']';
    s += '}';
    return s;
}

Response decode_response(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("malformed model response: ") + e.what(), 1, true);
    }
    if (!j.is_object() || !j.contains("id")) {
        throw BackendError("model response lacks an id", 1, true);
    }
    Response r;
    r.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    if (j.contains("error")) {
        r.error = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
        return r;
    }
    if (!j.contains("scores") || !j["scores"].is_array()) {
        throw BackendError("model response lacks a scores array", 1, true);
    }
    ClassScores scores;
    scores.scores.reserve(j["scores"].size());
    for (const auto& v : j["scores"]) {
        if (!v.is_number()) {
            throw BackendError("model response has a non-numeric score", 1, true);
        }
        scores.scores.push_back(v.get<double>());
    }
    r.scores = std::move(scores);
    return r;
}

namespace {

// Reads the request object directly: the numeric arrays are parsed with from_chars, which is an
// order of magnitude faster than a general JSON DOM for images with thousands of values.
class RequestReader {
public:
    explicit RequestReader(std::string_view text) : text_(text) {}

    Request read() {
        Request r;
        bool seen_shape = false, seen_data = false;
        expect('{');
        if (!consume('}')) {
            do {
                const std::string key = read_string();
                expect(':');
                if (key == "shape") {
                    r.shape.clear();
                    read_numbers([&](double v) {
                        if (v < 0 || v != std::floor(v)) {
                            throw DataError("malformed request: shape entries must be non-negative integers");
                        }
                        r.shape.push_back(static_cast<std::size_t>(v));
                    });
                    seen_shape = true;
                } else if (key == "data") {
                    r.data.clear();
                    read_numbers([&](double v) { r.data.push_back(static_cast<float>(v)); });
                    seen_data = true;
                } else {
                    nlohmann::json value = read_value();
                    if (key == "id") {
                        r.id = std::move(value);
                    }
                }
            } while (consume(','));
            expect('}');
        }
        skip_ws();
        if (pos_ != text_.size()) {
            fail("trailing characters");
        }
        if (!seen_shape || !seen_data) {
            throw DataError("request needs shape and data fields");
        }
        return r;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw DataError("malformed request at offset " + std::to_string(pos_) + ": " + what);
    }
    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r' || text_[pos_] == '\n')) {
            ++pos_;
        }
    }
    bool consume(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!consume(c)) {
            fail(std::string("expected '") + c + "'");
        }
    }
    // Extent of one JSON value starting at pos_, honouring strings and nesting.
    std::string_view value_extent() {
        skip_ws();
        const std::size_t begin = pos_;
        std::size_t depth = 0;
        bool in_string = false;
        for (; pos_ < text_.size(); ++pos_) {
            const char c = text_[pos_];
            if (in_string) {
                if (c == '\\') {
                    ++pos_;
                } else if (c == '"') {
                    in_string = false;
                    if (depth == 0) {
                        ++pos_;
                        break;
                    }
                }
            } else if (c == '"') {
                in_string = true;
            } else if (c == '{' || c == '[') {
                ++depth;
            } else if (c == '}' || c == ']') {
                if (depth == 0) {
                    break;
                }
                if (--depth == 0) {
                    ++pos_;
                    break;
                }
            } else if (depth == 0 && (c == ',' || c == ' ' || c == '\n' || c == '\r' || c == '\t')) {
                break;
            }
        }
        if (in_string || depth != 0 || pos_ == begin) {
            fail("unterminated value");
        }
        return text_.substr(begin, pos_ - begin);
    }
    nlohmann::json read_value() {
        const std::string_view extent = value_extent();
        try {
            return nlohmann::json::parse(extent);
        } catch (const nlohmann::json::exception& e) {
            fail(e.what());
        }
    }
    std::string read_string() {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != '"') {
            fail("expected a field name");
        }
        const nlohmann::json key = read_value();
        return key.get<std::string>();
    }
    template <typename Sink>
    void read_numbers(Sink&& sink) {
        expect('[');
        if (consume(']')) {
            return;
        }
        do {
            skip_ws();
            double v = 0.0;
            const char* first = text_.data() + pos_;
            const auto [ptr, ec] = std::from_chars(first, text_.data() + text_.size(), v);
            if (ec != std::errc()) {
                fail("expected a number");
            }
            pos_ += static_cast<std::size_t>(ptr - first);
            sink(v);
        } while (consume(','));
        expect(']');
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

} // namespace

Request decode_request(std::string_view line) {
    Request r = RequestReader(line).read();
    std::size_t expected = r.shape.empty() ? 0 : 1;
    for (std::size_t d : r.shape) {
        expected *= d;
    }
    if (expected != r.data.size()) {
        throw DataError("request shape does not match its data length");
    }
    return r;
}

std::string encode_response(const nlohmann::json& id, const ClassScores& scores) {
    return nlohmann::json{{"id", id}, {"scores", scores.scores}}.dump();
}

std::string encode_error(const nlohmann::json& id, std::string_view message) {
    return nlohmann::json{{"id", id}, {"error", std::string(message)}}.dump();
}

} // namespace protocol

} // namespace irof
