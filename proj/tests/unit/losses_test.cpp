#include <gtest/gtest.h>

#include <cmath>

#include "stressfield/errors.hpp"
#include "stressfield/losses.hpp"

using namespace stressfield;
using Eigen::MatrixXd;

TEST(Metrics, MaeAndMrpe) {
  MatrixXd a(1, 3), b(1, 3);
  a << 0, 4, -8;
  b << 1, 4, -6;
  EXPECT_DOUBLE_EQ(mae(a, b), 1.0);
  EXPECT_DOUBLE_EQ(mrpe(a, b), 12.5);
  EXPECT_THROW(mae(a, MatrixXd::Zero(2, 3)), ContractError);
  EXPECT_THROW(mrpe(MatrixXd::Zero(1, 3), MatrixXd::Zero(1, 3)), ContractError);
}

TEST(Losses, DataAndBoundary) {
  // Two nodes, two frames.
  MatrixXd pred(6, 2), truth(6, 2);
  pred.setConstant(0.5);
  truth.setZero();
  EXPECT_DOUBLE_EQ(loss_data(pred, truth), 0.5);
  const std::vector<std::uint8_t> flag{1, 0};
  // Frame 0 term 0.5 plus pinned node 0 term 0.5.
  EXPECT_DOUBLE_EQ(loss_bc(pred, truth, flag), 1.0);
  EXPECT_DOUBLE_EQ(loss_bc(pred, truth, flag, {0.5, 0.5, 0.5}), 0.5);
}

TEST(Losses, WeightsValidateAndCombine) {
  LossWeights w{1, 2, 3};
  EXPECT_DOUBLE_EQ(total_loss({1, 1, 1}, w), 6.0);
  EXPECT_THROW((LossWeights{0, 0, 0}).validate(), ConfigurationError);
  EXPECT_THROW((LossWeights{1, -1, 0}).validate(), ConfigurationError);
  EXPECT_DOUBLE_EQ(pde_scale(Material{}), 7850.0 * 9.81);
}

TEST(Layout, StressRowsRoundTrip) {
  MatrixXd rows = MatrixXd::Random(9, 4);
  const MatrixXd nm = to_node_major(rows);
  EXPECT_EQ(nm.rows(), 3);
  EXPECT_EQ(nm.cols(), 12);
  EXPECT_EQ(nm(1, 2 * 4 + 3), rows(3 * 2 + 1, 3));
  EXPECT_EQ(to_stress_rows(nm, 3, 4), rows);
}

class SampleLossesTest : public ::testing::Test {
 protected:
  void SetUp() override {
    simulated = simulate_sample({40, 1, 2}, 5);
    norm.min = {-1e6, -2e6, -1e6};
    norm.max = {3e6, 2e6, 1e6};
    GridOptions g;
    g.size = 20;
    ts = make_training_sample<double>(simulated, norm, Material{}, &g);
    grid = build_grid_operator(simulated.mesh, g);
  }
  SampleRecord simulated;
  NormalizationSpec norm;
  GridOperator grid;
  TrainingSample<double> ts;
};

TEST_F(SampleLossesTest, MatchReferenceImplementations) {
  const int N = ts.nodes, T = ts.frames;
  const Mat<double> pred = Mat<double>::Random(3, N * T) * 0.3;
  const LossParts p = sample_losses(pred, ts, LossWeights{1, 1, 1});
  const MatrixXd rows = to_stress_rows(pred, N, T);
  MatrixXd truth(rows.rows(), rows.cols());
  for (Eigen::Index r = 0; r < rows.rows(); ++r)
    for (Eigen::Index t = 0; t < T; ++t)
      truth(r, t) = norm.apply(simulated.stress(r, t), static_cast<int>(r % 3));
  EXPECT_NEAR(p.data, loss_data(rows, truth), 1e-6);
  std::array<double, 3> zero{};
  for (int c = 0; c < 3; ++c) zero[static_cast<std::size_t>(c)] = norm.apply(0.0, c);
  EXPECT_NEAR(p.bc, loss_bc(rows, truth, simulated.input.bc_flag, zero), 1e-6);
  const double ref = loss_pde(rows, simulated, grid, norm, Material{});
  EXPECT_NEAR(p.pde, ref, 1e-9 * ref);
}

TEST_F(SampleLossesTest, TruthResidualRegression) {
  // Discretization baseline of the FEM truth on this sample, frozen from a
  // reference run. The zero field scores lower: see README, "Physics loss".
  const double truth = residual_magnitude(simulated.stress, simulated, grid, Material{});
  const double frozen = 17965615.434436381;  // Pa/m
  EXPECT_LE(truth, frozen * (1 + 1e-6));
  EXPECT_GE(truth, frozen * (1 - 1e-6));
}

TEST_F(SampleLossesTest, InputChannels) {
  const Mat<double> in = model_input<double>(simulated);
  EXPECT_EQ(in.rows(), 5);
  EXPECT_EQ(in(0, 3 * ts.frames + 2), simulated.mesh.nodes[3].x);
  EXPECT_NEAR(in(3, 3 * ts.frames + 7), 1e-4 * simulated.input.forces(6, 7), 1e-12);
  EXPECT_THROW(sample_losses(Mat<double>(Mat<double>::Zero(3, 2)), ts, LossWeights{}), ContractError);
}
