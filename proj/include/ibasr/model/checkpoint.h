// ibasr/model/checkpoint.h
//
// Checkpoint file layout (version 1):
//
//   bytes 0..7    magic "IBASRCK1"
//   bytes 8..15   header length H, unsigned 64-bit little endian
//   next H bytes  JSON header:
//                   {"version": 1,
//                    "meta": <free-form JSON, e.g. the experiment config>,
//                    "tensors": [{"name": ..., "shape": [...]}, ...]}
//   remainder     tensor payloads in header order, IEEE-754 doubles, little
//                 endian, row major
//
// Doubles are stored bit-exactly, so a reloaded model reproduces the saved
// one exactly.

#ifndef IBASR_MODEL_CHECKPOINT_H_
#define IBASR_MODEL_CHECKPOINT_H_

#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"

#include "ibasr/numerics/tensor.h"

namespace ibasr {

struct Checkpoint {
  nlohmann::json meta;
  std::map<std::string, Tensor> tensors;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws DataError for missing, truncated or malformed files.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ibasr

#endif  // IBASR_MODEL_CHECKPOINT_H_
