#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stressfield/errors.hpp"
#include "stressfield/nn.hpp"

using namespace stressfield;

namespace {

Tensor4<float> noise(int B, int N, int T, int C, unsigned seed) {
  Tensor4<float> x(B, N, T, C);
  std::mt19937 gen(seed);
  std::uniform_real_distribution<float> u(-1, 1);
  for (float& v : x.data) v = u(gen);
  return x;
}

}  // namespace

TEST(Config, ParamCounts) {
  ModelConfig c;
  EXPECT_EQ(param_count(c), 204419u);
  c.d = 8;
  EXPECT_EQ(param_count(c), 3603u);
  c.variant = Variant::TempoLstm;
  EXPECT_EQ(param_count(c), 3603u);
  c.variant = Variant::SpatioMlp;
  EXPECT_EQ(param_count(c), 825244u);
  c.d = 0;
  c.variant = Variant::SpatiotempoLstm;
  EXPECT_THROW(c.validate(), ConfigurationError);
}

TEST(Config, VariantNames) {
  for (Variant v : {Variant::SpatiotempoLstm, Variant::TempoLstm, Variant::SpatioMlp}) {
    EXPECT_EQ(parse_variant(to_string(v)), v);
  }
  EXPECT_EQ(parse_variant("stm"), Variant::SpatiotempoLstm);
  EXPECT_THROW(parse_variant("attention"), ConfigurationError);
}

TEST(Init, DeterministicAndBounded) {
  ModelConfig c;
  c.d = 8;
  c.seed = 3;
  const Model<float> a(c), b(c);
  EXPECT_EQ(a.parameters(), b.parameters());
  c.seed = 4;
  EXPECT_NE(a.parameters(), Model<float>(c).parameters());
  for (float v : a.parameters()) EXPECT_LE(std::abs(v), 1.0f);
  for (std::size_t i = a.head_bias_offset(); i < a.size(); ++i) EXPECT_EQ(a.parameters()[i], 0.0f);
}

TEST(Forward, TensorAndSamplePathsAgree) {
  ModelConfig c;
  c.d = 6;
  const Model<float> m(c);
  const auto x = noise(2, 7, 5, 5, 1);
  const auto y = m.forward(x);
  for (int b = 0; b < 2; ++b) {
    const Mat<float> s = m.forward_sample(x.slice(b), 7, 5);
    EXPECT_LT((s - y.slice(b)).cwiseAbs().maxCoeff(), 1e-6f);
  }
}

TEST(Forward, StagesComposeToForward) {
  ModelConfig c;
  c.d = 5;
  const Model<float> m(c);
  const auto x = noise(1, 4, 6, 5, 2);
  auto h = m.encode(x);
  for (int k = 0; k < c.stm_blocks; ++k) h = m.stm_forward(h, k);
  const auto y = m.decode(h);
  const auto ref = m.forward(x);
  for (std::size_t i = 0; i < y.data.size(); ++i) EXPECT_NEAR(y.data[i], ref.data[i], 1e-6f);
}

TEST(Forward, SpatialStageSeesEarlierNodes) {
  ModelConfig c;
  c.d = 4;
  const Model<float> m(c);
  const auto x = noise(1, 5, 3, 5, 3);
  auto y = x;
  y(0, 1, 0, 0) += 1.0f;
  const auto a = m.forward(x), b = m.forward(y);
  // Node 0 precedes the perturbed node; node 4 follows it.
  for (int t = 0; t < 3; ++t) EXPECT_EQ(a(0, 0, t, 0), b(0, 0, t, 0));
  EXPECT_NE(a(0, 4, 0, 0), b(0, 4, 0, 0));
}

TEST(Forward, HeadIsLinear) {
  ModelConfig c;
  c.d = 4;
  const Model<float> m(c);
  const auto f = noise(1, 3, 2, 4, 5);
  auto f2 = f;
  for (float& v : f2.data) v *= 2.0f;
  const auto a = m.decode(f), b = m.decode(f2);
  for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(b.data[i], 2.0f * a.data[i], 1e-6f);
}

TEST(Forward, ShapeErrors) {
  ModelConfig c;
  c.d = 4;
  const Model<float> m(c);
  EXPECT_THROW(m.encode(noise(1, 2, 2, 4, 1)), ContractError);
  EXPECT_THROW(m.forward_sample(Mat<float>::Zero(5, 7), 2, 3), ContractError);
  ModelConfig mc;
  mc.variant = Variant::SpatioMlp;
  mc.max_nodes = 4;
  mc.mlp_width = 8;
  EXPECT_THROW(Model<float>(mc).forward(noise(1, 5, 2, 5, 1)), ContractError);
}

TEST(Backward, MatchesFiniteDifferencesForEachVariant) {
  for (Variant v : {Variant::SpatiotempoLstm, Variant::TempoLstm, Variant::SpatioMlp}) {
    ModelConfig c;
    c.variant = v;
    c.d = 3;
    c.stm_blocks = 2;
    c.mlp_width = 6;
    c.mlp_layers = 3;
    c.max_nodes = 4;
    c.seed = 9;
    Model<double> m(c);
    const int N = 3, T = 4;
    Mat<double> x = Mat<double>::Random(5, N * T);
    Mat<double> w = Mat<double>::Random(3, N * T);
    // Loss = sum(w .* y).
    ForwardTrace<double> tr;
    m.forward_sample(x, N, T, &tr);
    std::vector<double> g(m.size(), 0.0);
    m.backward_sample(tr, w, g);
    auto& p = m.parameters();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double keep = p[i];
      p[i] = keep + 1e-6;
      const double up = (m.forward_sample(x, N, T).array() * w.array()).sum();
      p[i] = keep - 1e-6;
      const double dn = (m.forward_sample(x, N, T).array() * w.array()).sum();
      p[i] = keep;
      const double fd = (up - dn) / 2e-6;
      num += (fd - g[i]) * (fd - g[i]);
      den += fd * fd;
    }
    EXPECT_LT(std::sqrt(num / den), 1e-6) << to_string(v);
  }
}
