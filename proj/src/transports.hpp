#pragma once

#include "irof/backend.hpp"

#include <memory>

namespace irof::detail {

std::unique_ptr<ModelBackend> make_process_backend(const BackendConfig& config);
std::unique_ptr<ModelBackend> make_http_backend(const BackendConfig& config);
std::unique_ptr<ModelBackend> make_onnx_backend(const BackendConfig& config);

} // namespace irof::detail
