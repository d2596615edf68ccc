#pragma once

#include <filesystem>
#include <memory>

#include "vlgen/captioner/model.hpp"

namespace vlgen::captioner {

// Single-file archive: magic line, 8-byte little-endian header length, JSON
// header (config with seed, vocabulary, tensor table), then raw doubles.
void save_checkpoint(const CaptionerModel& model, const std::filesystem::path& path);

// Throws SchemaError on a malformed or truncated archive.
std::unique_ptr<CaptionerModel> load_checkpoint(const std::filesystem::path& path);

}  // namespace vlgen::captioner
