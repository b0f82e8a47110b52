#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gerseg/model.hpp"
#include "gerseg/tensor.hpp"

// Checkpoint files: magic "GERU", u32 LE version (1), u64 LE header length,
// UTF-8 JSON header (dtype, model config, training metadata, array names /
// shapes / byte offsets), then the raw little-endian arrays in header order.
// Arrays cover the full model state (parameters and running buffers) and,
// when training state is saved, the Adam moments under "adam.m." / "adam.v."
// prefixes.
namespace gerseg::checkpoint {

struct TrainMeta {
  int epoch = 0;
  double best_val_dice = 0.0;
  int64_t adam_t = 0;
  bool has_adam = false;
};

struct CheckpointInfo {
  models::ModelConfig config;
  std::string dtype;  // "f32" or "f64"
  TrainMeta meta;
};

// Model config and metadata without loading the arrays.
CheckpointInfo peek_checkpoint(const std::string& path);

// adam_m/adam_v, when given, are aligned with model.parameters() order.
template <typename T>
void save_model(const std::string& path, models::SegNet<T>& model, const TrainMeta& meta,
                const std::vector<Tensor<T>>* adam_m = nullptr,
                const std::vector<Tensor<T>>* adam_v = nullptr);

// Restores every state array by name; array values are cast from the stored
// precision to T. Missing or unexpected names raise CheckpointError listing
// them. Adam moments are filled when requested and present.
template <typename T>
TrainMeta load_model(const std::string& path, models::SegNet<T>& model,
                     std::vector<Tensor<T>>* adam_m = nullptr, std::vector<Tensor<T>>* adam_v = nullptr);

}  // namespace gerseg::checkpoint
