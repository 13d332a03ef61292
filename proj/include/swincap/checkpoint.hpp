#pragma once

#include <string>
#include <utility>
#include <vector>

#include "swincap/tensor.hpp"
#include "swincap/vocab.hpp"

namespace swincap {

/// On-disk model state. Layout, all little-endian:
///   magic "SWCAP1\0" (7 bytes), format version u32, tensor count u32,
///   per tensor: name_len u32, utf-8 name, rank u32, dims u64 each, f32 data,
///   vocabulary block (u32 word count, per word u32 length + utf-8 bytes,
///   reserved ids 0..3 implied), config block (u32 length + key=value text).
struct Snapshot {
  std::vector<std::pair<std::string, TensorF>> tensors;
  Vocabulary vocab;
  std::string config_text;
};

inline constexpr u64 kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Snapshot& snap);
Snapshot load_checkpoint(const std::string& path);

}  // namespace swincap
