// checkpoint.hpp — little-endian model container: magic, format version, a
// text descriptor block (key=value lines, enough to rebuild the architecture
// and recompute the parameter count), then named arrays as
// (u32 name_len, name, u32 rank, u32 dims[rank], float32 payload).
// Optional training state travels as extra "opt." arrays plus descriptor
// keys. save -> load -> save is byte identical.
#pragma once

#include <string>

#include "svad/adam.hpp"
#include "svad/model.hpp"

namespace svad {

constexpr char kCkptMagic[8] = {'S', 'V', 'A', 'D', 'C', 'K', 'P', 'T'};
constexpr uint32_t kCkptVersion = 1;

struct TrainState {
  bool present = false;
  long epoch = 0;
  AdamState opt;
};

// Atomic (temp file + rename). Filterbank cutoffs are stored as normalized
// frequencies; narrowing to float32 is the format's precision.
void save_checkpoint(const std::string& path, ModelParams<float>& params,
                     const TrainState* train = nullptr);

ModelParams<float> load_checkpoint(const std::string& path,
                                   TrainState* train_out = nullptr);

}  // namespace svad
