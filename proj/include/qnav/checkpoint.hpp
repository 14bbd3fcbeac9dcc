#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "qnav/network.hpp"

namespace qnav {

using CheckpointMeta = std::map<std::string, std::string>;

struct Checkpoint {
  Mlp net;
  AdamState adam;
  CheckpointMeta meta;
};

/// Binary network snapshot: "QNAV" magic, format version, key/value metadata,
/// row-major little-endian f64 parameter blocks, then the Adam accumulators.
/// Round-trips are bit exact.
void save_checkpoint(const std::filesystem::path& path, const Mlp& net,
                     const AdamState& adam, const CheckpointMeta& meta);

/// Throws std::runtime_error with distinct messages for bad magic, version
/// mismatch, truncation, and (when expected_dims is given) dimension mismatch.
Checkpoint load_checkpoint(
    const std::filesystem::path& path,
    std::optional<std::span<const int>> expected_dims = std::nullopt);

}  // namespace qnav
