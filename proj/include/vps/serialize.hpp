#pragma once

#include <span>
#include <string>

#include <json.hpp>

#include "vps/tensor.hpp"

namespace vps {

// Weight file: 8-byte magic, little-endian u64 header length, a JSON header
// describing every tensor (name, shape, dtype, byte offset) plus free-form
// metadata, zero padding to 8 bytes, then the raw little-endian buffers in
// header order.
inline constexpr char kWeightMagic[8] = {'V', 'P', 'S', 'W', '0', '0', '0', '1'};

void save_params(const std::string& path, std::span<const Param* const> params,
                 const nlohmann::json& meta);

// Loads into the given params; names, shapes and dtype must match exactly.
// Returns the stored metadata.
nlohmann::json load_params(const std::string& path, std::span<Param* const> params);

// Reads just the metadata block.
nlohmann::json load_meta(const std::string& path);

}  // namespace vps
