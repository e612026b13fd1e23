#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "stressfield/dataset.hpp"
#include "stressfield/field_grid.hpp"
#include "stressfield/nn.hpp"

namespace stressfield {

struct LossWeights {
  double data = 1.0;
  double pde = 0.0;
  double bc = 0.0;

  void validate() const;
};

struct LossParts {
  double data = 0.0;
  double pde = 0.0;
  double bc = 0.0;
};

double total_loss(const LossParts& parts, const LossWeights& weights);

/// L_PDE divides the mean residual by rho * g to make it dimensionless.
double pde_scale(const Material& material);

// Reference implementations on 3N x T stress matrices (row 3n + c), used by
// tests and evaluation. Training goes through TrainingSample below.

/// Mean absolute difference over all entries.
double loss_data(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

/// Frame-0 MAE against `zero_level` plus MAE against truth restricted to
/// nodes with bc_flag set, over all frames.
double loss_bc(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth,
               std::span<const std::uint8_t> bc_flag,
               const std::array<double, kStressChannels>& zero_level = {});

/// Denormalizes `pred`, evaluates the equilibrium residual with the sample's
/// accelerations and body-force density, and returns
/// mean(|r_x|, |r_y| over unmasked cells and frames) / (rho g).
double loss_pde(const Eigen::MatrixXd& pred_normalized, const SampleRecord& sample,
                const GridOperator& op, const NormalizationSpec& norm, const Material& material);

/// Same, on physical stresses.
double residual_magnitude(const Eigen::MatrixXd& stress, const SampleRecord& sample,
                          const GridOperator& op, const Material& material);

// --- metrics ---------------------------------------------------------------------

double mae(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);
/// 100 * MAE / max(|pred|, |truth|) over every entry.
double mrpe(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

// --- training bundles ---------------------------------------------------------------

/// One sample prepared for the model: inputs, normalized targets and the
/// residual operator restricted to unmasked cells as dense U x N blocks.
template <typename S>
struct TrainingSample {
  SampleKey key;
  int nodes = 0;
  int frames = 0;
  Mat<S> input;   // 5 x (N T)
  Mat<S> target;  // 3 x (N T), normalized
  std::vector<int> constrained;
  std::array<S, kStressChannels> zero_level{};  // normalized physical zero

  bool has_pde = false;
  Mat<S> ax, ay;    // U x N: d/dx and d/dy of the lifted nodal field
  Mat<S> fx, fy;    // U x T: lifted b - rho a
  std::array<S, kStressChannels> scale{}, offset{};  // physical = scale y + offset
  S pde_norm = S(0);                                 // 1 / (rho g)
};

/// `grid == nullptr` skips the residual cache (L_PDE then reads 0).
template <typename S>
TrainingSample<S> make_training_sample(const SampleRecord& sample, const NormalizationSpec& norm,
                                       const Material& material, const GridOptions* grid);

/// Model input for a sample: (x, y, bc flag, 1e-4 fx, 1e-4 fy), 5 x (N T).
template <typename S>
Mat<S> model_input(const SampleRecord& sample);

/// Loss parts of one prediction; when `d_pred` is given it receives
/// d(total)/d(pred) scaled by `grad_scale`.
template <typename S>
LossParts sample_losses(const Mat<S>& pred, const TrainingSample<S>& sample,
                        const LossWeights& weights, Mat<S>* d_pred = nullptr,
                        S grad_scale = S(1));

/// 3 x (N T) node-major <-> 3N x T (row 3n + c).
Eigen::MatrixXd to_stress_rows(const Eigen::MatrixXd& node_major, int nodes, int frames);
Eigen::MatrixXd to_node_major(const Eigen::MatrixXd& stress_rows);

extern template struct TrainingSample<float>;
extern template struct TrainingSample<double>;

}  // namespace stressfield
