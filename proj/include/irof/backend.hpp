#pragma once

#include "irof/image.hpp"

#include <json.hpp>

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace irof {

/// Model output for one image.
struct ClassScores {
    std::vector<double> scores;

    [[nodiscard]] std::size_t class_count() const noexcept { return scores.size(); }
    friend bool operator==(const ClassScores&, const ClassScores&) = default;
};

/// scores[target]; throws DataError when target is out of range.
[[nodiscard]] double class_score(const ClassScores& scores, std::size_t target);

[[nodiscard]] std::size_t argmax(const ClassScores& scores);

enum class Transport { Process, Http, Onnx, InProcess };

/// Memory order of the `data` array sent to the model.
enum class ChannelOrder { Interleaved, Planar };

struct InputLayout {
    ChannelOrder order = ChannelOrder::Interleaved;
    /// Range the model expects; when set, images in any other range are rejected.
    std::optional<ValueRange> expected_range;
};

struct BackendConfig {
    Transport transport = Transport::Process;
    std::string endpoint;
    std::size_t batch_size = 32;
    std::size_t pool_size = 1;
    int max_attempts = 3;
    std::chrono::milliseconds timeout{60000};
    /// Check that outputs are non-negative and sum to 1 +- 1e-4.
    bool softmax = true;
    InputLayout layout;

    void validate() const;

    /// "proc:CMD", "http:URL" or "onnx:PATH".
    [[nodiscard]] static BackendConfig parse(std::string_view spec);
};

[[nodiscard]] nlohmann::json to_json(const BackendConfig& config);

/// Black-box classifier F. Subclasses implement one transport; predict_batch adds batching,
/// shape checks and output validation on top.
class ModelBackend {
public:
    explicit ModelBackend(BackendConfig config);
    virtual ~ModelBackend() = default;

    ModelBackend(const ModelBackend&) = delete;
    ModelBackend& operator=(const ModelBackend&) = delete;

    /// One ClassScores per image, in input order. Images must share their dimensions.
    [[nodiscard]] std::vector<ClassScores> predict_batch(std::span<const Image> images);

    [[nodiscard]] const BackendConfig& config() const noexcept { return config_; }

protected:
    /// Called with at most config().batch_size images.
    virtual std::vector<ClassScores> run_batch(std::span<const Image> images) = 0;

private:
    BackendConfig config_;
};

/// Runs a callable in-process. Used for tests and built-in oracle models.
class FunctionBackend final : public ModelBackend {
public:
    using Model = std::function<ClassScores(const Image&)>;
    FunctionBackend(Model model, BackendConfig config = in_process_config());

    [[nodiscard]] static BackendConfig in_process_config();

protected:
    std::vector<ClassScores> run_batch(std::span<const Image> images) override;

private:
    Model model_;
};

/// Creates the backend for config.transport (Process, Http or Onnx).
[[nodiscard]] std::unique_ptr<ModelBackend> make_backend(const BackendConfig& config);

/// Scores the same image twice; throws BackendError when the outputs differ by 1e-6 or more.
/// Returns the largest absolute difference observed.
double determinism_self_test(ModelBackend& backend, const Image& image);

/// Line-delimited JSON wire format shared by the process and HTTP transports.
///
///   request:  {"id": "...", "shape": [H, W, C], "data": [floats]}
///   response: {"id": "...", "scores": [floats]}  or  {"id": "...", "error": "message"}
namespace protocol {

[[nodiscard]] std::string encode_request(std::string_view id, const Image& image,
                                         ChannelOrder order = ChannelOrder::Interleaved);

struct Response {
    std::string id;
    std::optional<ClassScores> scores;
    std::string error;
};

/// Throws BackendError (retryable) when the line is not a well-formed response.
[[nodiscard]] Response decode_response(std::string_view line);

struct Request {
    nlohmann::json id;
    std::vector<std::size_t> shape;
    std::vector<float> data;
};

/// Server side; throws DataError on malformed input.
[[nodiscard]] Request decode_request(std::string_view line);
[[nodiscard]] std::string encode_response(const nlohmann::json& id, const ClassScores& scores);
[[nodiscard]] std::string encode_error(const nlohmann::json& id, std::string_view message);

} // namespace protocol

} // namespace irof
