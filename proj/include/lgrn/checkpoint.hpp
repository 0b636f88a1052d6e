#pragma once

#include <filesystem>

#include "lgrn/nn.hpp"

namespace lgrn {

/// Binary checkpoint container:
///   8-byte magic "LGRNCKPT", u32 version, u64 header length,
///   JSON header {epoch, loss, meta, tensors: [{name, shape}]},
///   then each tensor's values as little-endian float64 in header order.
void save_checkpoint(const std::filesystem::path& path, const nn::ModelParams& params);

/// Throws DataError on a bad magic, truncated payload, or non-finite value.
nn::ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace lgrn
