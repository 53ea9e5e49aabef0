#pragma once

#include <map>
#include <string>

#include "tg/tensor.hpp"
#include "tg/tgr.hpp"

namespace tg {

// Ordered so files serialize identically across runs.
using TensorMap = std::map<std::string, Tensor>;

// Binary named-tensor container, versioned. Throws on bad magic,
// unsupported version or truncation.
void save_tensor_map(const std::string& path, const TensorMap& m);
TensorMap load_tensor_map(const std::string& path);

// Full pipeline snapshot: every trainable parameter plus memory rows,
// node bank, expander memory and the Cayley modulus. The temporal
// neighbour index is not stored; evaluation replays the stream.
TensorMap checkpoint_state(TgrPipeline& pl);

// Restores parameters and state. Throws on missing entries or shape
// mismatches, and when the checkpoint was taken with a different
// rewiring mode or node count.
void restore_state(TgrPipeline& pl, const TensorMap& m);

void save_checkpoint(const std::string& path, TgrPipeline& pl);
void load_checkpoint(const std::string& path, TgrPipeline& pl);

}  // namespace tg
