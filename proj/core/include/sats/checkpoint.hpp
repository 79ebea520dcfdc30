#pragma once

#include <filesystem>

#include "sats/network.hpp"

namespace sats {

/// Binary checkpoint: magic "SATSCKPT", format version, network shape, K, then
/// each tensor as name, rank, dims and little-endian IEEE-754 doubles.
/// Loading reproduces the parameters bit-exactly.
void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path);
NetworkParams load_checkpoint(const std::filesystem::path& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace sats
