#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

#include "stressfield/losses.hpp"
#include "stressfield/nn.hpp"

namespace stressfield {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Optimizer state needed to continue a run bit-for-bit.
struct TrainingState {
  std::uint32_t epoch = 0;  // completed epochs
  std::uint64_t step = 0;   // optimizer steps taken
  double best_val = std::numeric_limits<double>::infinity();
  std::int32_t best_epoch = -1;
  LossWeights weights;
  std::vector<float> adam_m;
  std::vector<float> adam_v;
};

/// Layout, little-endian:
///   "STCK", u32 version, u32 variant, u32 d, u32 stm_blocks, u32 mlp_width,
///   u32 mlp_layers, u32 max_nodes, u64 model seed, u64 train seed,
///   u64 P, f32 params[P] (Model traversal order),
///   u8 has_state, then if set: u32 epoch, u64 step, f64 best_val,
///   i32 best_epoch, f64 w_data, f64 w_pde, f64 w_bc, f32 m[P], f32 v[P].
struct Checkpoint {
  ModelConfig config;
  std::uint64_t train_seed = 0;
  std::vector<float> params;
  std::optional<TrainingState> state;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Model rebuilt from a checkpoint's config with its parameters loaded.
Model<float> load_model(const Checkpoint& checkpoint);

}  // namespace stressfield
