#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stressfield/checkpoint.hpp"
#include "stressfield/losses.hpp"
#include "stressfield/nn.hpp"

namespace stressfield {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 10;
  int epochs = 60;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Cosine decay of the learning rate to zero over `epochs`.
  bool cosine_schedule = true;
  std::uint64_t seed = 0;
  int threads = 0;

  void validate() const;
};

/// Weights for the three loss terms; an empty optional is calibrated before
/// the first epoch so the weighted term is `calibration_ratio` times the
/// weighted data term on the training set, then frozen.
struct LossWeightSpec {
  double data = 1.0;
  std::optional<double> pde;
  std::optional<double> bc;
  double calibration_ratio = 0.1;

  /// "1,0,0", "1,auto,auto", ...
  static LossWeightSpec parse(const std::string& text);
  bool needs_calibration() const { return !pde || !bc; }
};

struct EpochRecord {
  int epoch = 0;
  LossParts train;
  LossParts val;
  double train_total = 0.0;
  double val_total = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  LossWeights weights;
  int best_epoch = -1;
  double best_val = 0.0;
};

struct TrainOutputs {
  std::filesystem::path best;  // best-by-validation checkpoint
  std::filesystem::path last;  // latest checkpoint with optimizer state
  std::filesystem::path log;   // appended `epoch,split,data,pde,bc,total`
  std::ostream* echo = nullptr;
};

/// Mean loss parts of `model` over `samples`.
LossParts mean_losses(const Model<float>& model, std::span<const TrainingSample<float>> samples,
                      int threads = 0);

/// Resolves auto weights against the initial model.
LossWeights calibrate_weights(const Model<float>& model,
                              std::span<const TrainingSample<float>> train,
                              const LossWeightSpec& spec, int threads = 0);

/// AdamW over shuffled mini-batches. With `resume`, continues from its epoch
/// using its weights and moments (the model must already hold the resumed
/// parameters). Stops after `stop_after` epochs in total if >= 0.
TrainResult train(Model<float>& model, std::span<const TrainingSample<float>> train,
                  std::span<const TrainingSample<float>> val, const TrainConfig& config,
                  const LossWeightSpec& weights, const TrainOutputs& outputs,
                  const TrainingState* resume = nullptr, int stop_after = -1);

/// Reads `epoch,split,...` lines back.
std::vector<EpochRecord> read_training_log(const std::filesystem::path& path);

}  // namespace stressfield
