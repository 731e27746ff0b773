#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include "mquine/kgdata.hpp"
#include "mquine/models.hpp"

namespace mquine {

// Binary layout (little-endian):
//   "MQ5E" | u32 version | u32 model kind | u32 d | u64 #entities | u64 #relations
//   | f64[#entities * entity_width] | f64[#relations * relation_width]
// A JSON sidecar at <path>.json carries hyperparameters and vocabulary hashes.

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  ModelState state;
  std::uint64_t entity_hash = 0;
  std::uint64_t relation_hash = 0;
};

void save_checkpoint(const std::filesystem::path& path, const ModelState& state,
                     const KnowledgeGraph& kg);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws CheckpointError("checkpoint does not match dataset") on a vocabulary mismatch.
void require_matches(const Checkpoint& ckpt, const KnowledgeGraph& kg);

}  // namespace mquine
