#pragma once

#include <filesystem>
#include <stdexcept>

#include "rldtf/policy.hpp"

namespace rldtf {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File layout: 8-byte magic, u64 header length, JSON header (model config,
// parameter version, tensor table), then the raw little-endian doubles.
void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params);
PolicyParams load_checkpoint(const std::filesystem::path& path);

}  // namespace rldtf
