#pragma once

#include <optional>
#include <string>

#include "nn/model.hpp"
#include "train/trainer.hpp"

namespace kpfc {

// Binary checkpoint layout (little-endian):
//   bytes 0..3   magic "KPFC"
//   bytes 4..5   u16 version (currently 1)
//   bytes 6..9   u32 JSON header byte length
//   then the UTF-8 JSON header, zero padding, and raw f32 tensor payloads.
// Tensor offsets in the header are relative to the payload base, which is
// the first 64-byte-aligned position after the header; every payload is
// 64-byte aligned. The header records {arch, hyper, adam step, tensor
// table}; each table entry carries name, dtype, shape, offset, nbytes, and
// flags for learnability and optimizer-state membership.
void save_checkpoint(const Model& model, const AdamState* state, const std::string& path);

struct LoadedCheckpoint {
  Model model;
  std::optional<AdamState> state;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace kpfc
