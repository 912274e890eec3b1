#pragma once

#include <filesystem>

#include "dualre/model.hpp"

namespace dualre {

// Binary container: "DUALRECK", u32 version, u64 header length, a JSON header
// (configs, schema, vocabulary, parameter names and shapes), then every
// parameter's float64 values in header order, little-endian.
void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

// Configs, schema, vocabulary and parameters all bitwise equal.
bool identical(const Model& a, const Model& b);

}  // namespace dualre
