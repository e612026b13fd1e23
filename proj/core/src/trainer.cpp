#include "stressfield/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>

#include "stressfield/errors.hpp"
#include "stressfield/rng.hpp"
#include "stressfield/threads.hpp"

namespace stressfield {

namespace {

bool finite(const LossParts& p) {
  return std::isfinite(p.data) && std::isfinite(p.pde) && std::isfinite(p.bc);
}

void accumulate(LossParts& into, const LossParts& p, double k) {
  into.data += k * p.data;
  into.pde += k * p.pde;
  into.bc += k * p.bc;
}

std::string format_parts(const LossParts& p) {
  std::ostringstream out;
  out << std::setprecision(17) << p.data << ',' << p.pde << ',' << p.bc;
  return out.str();
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const CounterRng rng(seed, 0x5348554646ULL + static_cast<std::uint64_t>(epoch));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.below(i, i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

double epoch_rate(const TrainConfig& c, int epoch) {
  if (!c.cosine_schedule || c.epochs <= 0) return c.learning_rate;
  // Epochs are 1-based; epoch 1 runs at the full rate.
  const double progress = static_cast<double>(epoch - 1) / c.epochs;
  return c.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigurationError("learning rate must be positive");
  if (batch_size < 1) throw ConfigurationError("batch size must be at least 1");
  if (epochs < 0) throw ConfigurationError("epochs must be nonnegative");
  if (weight_decay < 0.0) throw ConfigurationError("weight decay must be nonnegative");
}

LossWeightSpec LossWeightSpec::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) parts.push_back(item);
  if (parts.size() != 3) {
    throw ConfigurationError("weights must be three comma-separated values, got '" + text + "'");
  }
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || !(v >= 0.0)) {
      throw ConfigurationError("invalid loss weight '" + s + "'");
    }
    return v;
  };
  LossWeightSpec spec;
  spec.data = number(parts[0]);
  if (parts[1] != "auto") spec.pde = number(parts[1]);
  if (parts[2] != "auto") spec.bc = number(parts[2]);
  if (spec.data == 0.0 && spec.needs_calibration()) {
    throw ConfigurationError("auto weights are calibrated against the data term; w_data must be > 0");
  }
  if (!spec.needs_calibration()) LossWeights{spec.data, *spec.pde, *spec.bc}.validate();
  return spec;
}

LossParts mean_losses(const Model<float>& model, std::span<const TrainingSample<float>> samples,
                      int threads) {
  std::vector<LossParts> parts(samples.size());
  const LossWeights any{1.0, 0.0, 0.0};
  parallel_for(
      samples.size(),
      [&](std::size_t i) {
        const auto& s = samples[i];
        const Mat<float> y = model.forward_sample(s.input, s.nodes, s.frames);
        parts[i] = sample_losses(y, s, any);
      },
      threads);
  LossParts mean;
  for (const auto& p : parts) accumulate(mean, p, 1.0 / static_cast<double>(samples.size()));
  return mean;
}

LossWeights calibrate_weights(const Model<float>& model,
                              std::span<const TrainingSample<float>> train,
                              const LossWeightSpec& spec, int threads) {
  LossWeights w{spec.data, spec.pde.value_or(0.0), spec.bc.value_or(0.0)};
  if (spec.needs_calibration()) {
    if (train.empty()) throw ConfigurationError("cannot calibrate weights on an empty split");
    const LossParts p = mean_losses(model, train, threads);
    const double target = spec.calibration_ratio * spec.data * p.data;
    if (!spec.pde) w.pde = p.pde > 0.0 ? target / p.pde : 0.0;
    if (!spec.bc) w.bc = p.bc > 0.0 ? target / p.bc : 0.0;
  }
  w.validate();
  return w;
}

TrainResult train(Model<float>& model, std::span<const TrainingSample<float>> train_set,
                  std::span<const TrainingSample<float>> val_set, const TrainConfig& config,
                  const LossWeightSpec& weight_spec, const TrainOutputs& outputs,
                  const TrainingState* resume, int stop_after) {
  config.validate();
  if (train_set.empty()) throw ConfigurationError("training split is empty");
  const std::size_t p = model.size();

  TrainingState state;
  if (resume) {
    state = *resume;
    if (state.adam_m.size() != p || state.adam_v.size() != p) {
      throw ConfigurationError("resume state does not match the model size");
    }
  } else {
    state.weights = calibrate_weights(model, train_set, weight_spec, config.threads);
    state.adam_m.assign(p, 0.0f);
    state.adam_v.assign(p, 0.0f);
  }
  const LossWeights w = state.weights;

  auto checkpoint = [&](bool with_state) {
    Checkpoint c;
    c.config = model.config();
    c.train_seed = config.seed;
    c.params = model.parameters();
    if (with_state) c.state = state;
    return c;
  };
  if (!resume) {
    if (!outputs.log.empty()) std::ofstream(outputs.log, std::ios::trunc);
    if (!outputs.last.empty()) write_checkpoint(outputs.last, checkpoint(true));
    if (config.epochs == 0 && !outputs.best.empty()) write_checkpoint(outputs.best, checkpoint(false));
  }

  TrainResult result;
  result.weights = w;
  const int last_epoch = stop_after >= 0 ? std::min(stop_after, config.epochs) : config.epochs;
  std::vector<float>& params = model.parameters();
  std::vector<float> grad(p);

  for (int epoch = static_cast<int>(state.epoch) + 1; epoch <= last_epoch; ++epoch) {
    const double lr = epoch_rate(config, epoch);
    const auto order = epoch_order(train_set.size(), config.seed, epoch);
    LossParts train_mean;
    double train_total = 0.0;

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t count = std::min<std::size_t>(config.batch_size, order.size() - start);
      std::vector<std::vector<float>> slot_grad(count);
      std::vector<LossParts> slot_parts(count);
      parallel_for(
          count,
          [&](std::size_t i) {
            const auto& s = train_set[order[start + i]];
            ForwardTrace<float> trace;
            const Mat<float> y = model.forward_sample(s.input, s.nodes, s.frames, &trace);
            Mat<float> dy;
            slot_parts[i] = sample_losses(y, s, w, &dy, 1.0f / static_cast<float>(count));
            slot_grad[i].assign(p, 0.0f);
            model.backward_sample(trace, dy, slot_grad[i]);
          },
          config.threads);

      std::fill(grad.begin(), grad.end(), 0.0f);
      for (std::size_t i = 0; i < count; ++i) {
        const auto& s = train_set[order[start + i]];
        const LossParts& lp = slot_parts[i];
        if (!finite(lp)) {
          if (!outputs.last.empty()) {
            write_checkpoint(outputs.last.string() + ".nonfinite", checkpoint(true));
          }
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(state.step) + ", sample g" +
                              std::to_string(s.key.geometry_id) + "/bc" +
                              std::to_string(s.key.bc_case) + "/load" +
                              std::to_string(s.key.load_case) + " (data,pde,bc = " +
                              format_parts(lp) + "); state dumped next to the last checkpoint");
        }
        accumulate(train_mean, lp, 1.0 / static_cast<double>(order.size()));
        train_total += total_loss(lp, w) / static_cast<double>(order.size());
        for (std::size_t k = 0; k < p; ++k) grad[k] += slot_grad[i][k];
      }

      ++state.step;
      const double b1 = config.beta1, b2 = config.beta2;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
      const float decay = static_cast<float>(1.0 - lr * config.weight_decay);
      const float step_size = static_cast<float>(lr / c1);
      const float inv_c2 = static_cast<float>(1.0 / c2);
      const float eps = static_cast<float>(config.epsilon);
      for (std::size_t k = 0; k < p; ++k) {
        const float g = grad[k];
        float& m = state.adam_m[k];
        float& v = state.adam_v[k];
        m = static_cast<float>(b1) * m + static_cast<float>(1.0 - b1) * g;
        v = static_cast<float>(b2) * v + static_cast<float>(1.0 - b2) * g * g;
        params[k] = params[k] * decay - step_size * m / (std::sqrt(v * inv_c2) + eps);
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train = train_mean;
    rec.train_total = train_total;
    if (!val_set.empty()) {
      rec.val = mean_losses(model, val_set, config.threads);
      rec.val_total = total_loss(rec.val, w);
    } else {
      rec.val = rec.train;
      rec.val_total = rec.train_total;
    }
    if (!std::isfinite(rec.val_total)) {
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    state.epoch = static_cast<std::uint32_t>(epoch);
    if (rec.val_total < state.best_val) {
      state.best_val = rec.val_total;
      state.best_epoch = epoch;
      if (!outputs.best.empty()) write_checkpoint(outputs.best, checkpoint(false));
    }
    if (!outputs.last.empty()) write_checkpoint(outputs.last, checkpoint(true));
    if (!outputs.log.empty()) {
      std::ofstream log(outputs.log, std::ios::app);
      log << std::setprecision(17) << epoch << ",train," << format_parts(rec.train) << ','
          << rec.train_total << '\n'
          << epoch << ",val," << format_parts(rec.val) << ',' << rec.val_total << '\n';
    }
    if (outputs.echo) {
      *outputs.echo << "epoch " << epoch << "  train " << std::setprecision(6) << rec.train_total
                    << "  val " << rec.val_total << (state.best_epoch == epoch ? "  *" : "")
                    << std::endl;
    }
    result.history.push_back(rec);
  }
  result.best_epoch = state.best_epoch;
  result.best_val = state.best_val;
  return result;
}

std::vector<EpochRecord> read_training_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open training log " + path.string());
  std::vector<EpochRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 6) throw FormatError("malformed training log line: " + line);
    const int epoch = std::stoi(f[0]);
    if (out.empty() || out.back().epoch != epoch) {
      out.push_back({});
      out.back().epoch = epoch;
    }
    const LossParts parts{std::stod(f[2]), std::stod(f[3]), std::stod(f[4])};
    if (f[1] == "train") {
      out.back().train = parts;
      out.back().train_total = std::stod(f[5]);
    } else if (f[1] == "val") {
      out.back().val = parts;
      out.back().val_total = std::stod(f[5]);
    } else {
      throw FormatError("unknown split '" + f[1] + "' in training log");
    }
  }
  return out;
}

}  // namespace stressfield
