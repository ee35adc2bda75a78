#include "irof/error.hpp"
#include "transports.hpp"

namespace irof::detail {

// The in-process ONNX transport needs ONNX Runtime, which this build does not link. The engine is
// fully functional through the process and HTTP transports.
std::unique_ptr<ModelBackend> make_onnx_backend(const BackendConfig& config) {
    throw ConfigError("onnx transport for '" + config.endpoint +
                      "' is unavailable: this build has no ONNX Runtime support "
                      "(serve the model through proc: or http: instead)");
}

} // namespace irof::detail
