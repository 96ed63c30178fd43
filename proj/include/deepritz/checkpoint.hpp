#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepritz/params.hpp"

namespace deepritz {

/// Checkpoint byte layout (all integers and reals little-endian):
///
///   magic        8 bytes  "DRZCKPT\0"
///   version      u32
///   seed         u64
///   step         u64
///   problem_id   u32 length + bytes
///   n_entries    u32
///   per entry:   u32 name length + bytes, u32 rank, rank x u64 dims
///   n_values     u64
///   values       n_values x f64 (IEEE-754 bit pattern)
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'D', 'R', 'Z', 'C', 'K', 'P', 'T', '\0'};

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::string problem_id;

  bool operator==(const CheckpointMeta&) const = default;
};

class CheckpointParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointVersionError : public std::runtime_error {
 public:
  CheckpointVersionError(std::uint32_t found, std::uint32_t expected);
  std::uint32_t found() const { return found_; }

 private:
  std::uint32_t found_;
};

std::vector<std::uint8_t> save_checkpoint(const ParamStore& store,
                                          const CheckpointMeta& meta);

struct LoadedCheckpoint {
  ParamStore store;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint_file(const std::filesystem::path& path,
                           const ParamStore& store, const CheckpointMeta& meta);
LoadedCheckpoint read_checkpoint_file(const std::filesystem::path& path);

}  // namespace deepritz
