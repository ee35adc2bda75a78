#include "irof/error.hpp"
#include "transports.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace irof::detail {

namespace {

struct Url {
    std::string base; // scheme://host:port
    std::string path;
};

Url split_url(const std::string& endpoint) {
    std::string url = endpoint;
    if (url.find("://") == std::string::npos) {
        url = "http://" + url;
    }
    const std::size_t authority = url.find("://") + 3;
    const std::size_t slash = url.find('/', authority);
    Url out;
    out.base = url.substr(0, slash);
    out.path = slash == std::string::npos ? std::string() : url.substr(slash);
    if (out.path.empty() || out.path == "/") {
        out.path = "/predict";
    }
    return out;
}

// One POST per image, using the same JSON objects as the process transport.
class HttpBackend final : public ModelBackend {
public:
    explicit HttpBackend(const BackendConfig& config) : ModelBackend(config), url_(split_url(config.endpoint)) {}

protected:
    std::vector<ClassScores> run_batch(std::span<const Image> images) override {
        httplib::Client client(url_.base);
        const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config().timeout).count();
        client.set_read_timeout(seconds, 0);
        client.set_write_timeout(seconds, 0);
        client.set_keep_alive(true);

        std::vector<ClassScores> out;
        out.reserve(images.size());
        for (std::size_t i = 0; i < images.size(); ++i) {
            const std::string id = std::to_string(i);
            const std::string body = protocol::encode_request(id, images[i], config().layout.order);
            out.push_back(post(client, id, body));
        }
        return out;
    }

private:
    ClassScores post(httplib::Client& client, const std::string& id, const std::string& body) {
        const int attempts = config().max_attempts;
        for (int attempt = 1;; ++attempt) {
            std::string failure;
            if (auto res = client.Post(url_.path, body, "application/json")) {
                if (res->status == 200) {
                    auto response = protocol::decode_response(res->body);
                    if (!response.error.empty()) {
                        throw BackendError("model rejected the input: " + response.error, attempt, false);
                    }
                    if (response.id != id) {
                        throw BackendError("model answered request " + response.id + " instead of " + id);
                    }
                    return std::move(*response.scores);
                }
                failure = "HTTP status " + std::to_string(res->status);
            } else {
                failure = httplib::to_string(res.error());
            }
            if (attempt >= attempts) {
                throw BackendError("POST " + url_.base + url_.path + " failed: " + failure +
                                   " (after " + std::to_string(attempt) + " attempts)", attempt, true);
            }
            spdlog::warn("POST {}{} failed ({}); retry {}/{}", url_.base, url_.path, failure,
                         attempt + 1, attempts);
        }
    }

    Url url_;
};

} // namespace

std::unique_ptr<ModelBackend> make_http_backend(const BackendConfig& config) {
    return std::make_unique<HttpBackend>(config);
}

} // namespace irof::detail
