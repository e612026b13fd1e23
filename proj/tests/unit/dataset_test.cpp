#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "stressfield/dataset.hpp"
#include "stressfield/errors.hpp"

using namespace stressfield;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "stressfield_unit";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Loads, HistoriesFollowAmplitudeGrid) {
  for (int c = 1; c <= kLoadCases; ++c) {
    const auto [x, y] = gen_load_history(c, 2023);
    for (const LoadHistory* h : {&x, &y}) {
      ASSERT_EQ(h->values.size(), static_cast<std::size_t>(kFrames));
      EXPECT_GE(h->frequency, 1.0);
      EXPECT_LE(h->frequency, 3.0);
      EXPECT_NE(std::find(kAmplitudes.begin(), kAmplitudes.end(), h->amplitude), kAmplitudes.end());
      for (double v : h->values) EXPECT_LE(std::abs(v), h->amplitude + 1e-9);
    }
    EXPECT_EQ(x.direction, Direction::X);
    EXPECT_EQ(y.direction, Direction::Y);
  }
  EXPECT_THROW(gen_load_history(0, 1), ConfigurationError);
  EXPECT_THROW(gen_load_history(15, 1), ConfigurationError);
}

TEST(Loads, Deterministic) {
  EXPECT_EQ(gen_load_history(4, 9).first.values, gen_load_history(4, 9).first.values);
}

TEST(BoundaryCases, TableAndNames) {
  EXPECT_EQ(mask_name(boundary_case(2).fixed), "E2E3");
  EXPECT_EQ(mask_name(boundary_case(4).loaded), "E2E4");
  EXPECT_THROW(boundary_case(6), ConfigurationError);
}

TEST(Sample, InputChannelsAndZeroInitialStress) {
  const SampleRecord s = simulate_sample({12, 1, 3}, 2023);
  const auto N = s.num_nodes();
  EXPECT_EQ(s.stress.rows(), 3 * N);
  EXPECT_EQ(s.stress.cols(), kFrames);
  EXPECT_EQ(s.acceleration.rows(), 2 * N);
  EXPECT_EQ(s.stress.col(0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(s.stress.cwiseAbs().maxCoeff(), 0.0);
  int flagged = 0;
  for (Eigen::Index n = 0; n < N; ++n) {
    EXPECT_EQ(s.input.at(n, 0, 5), s.mesh.nodes[static_cast<std::size_t>(n)].x);
    flagged += s.input.at(n, 2, 0) != 0.0;
  }
  EXPECT_GT(flagged, 0);
  // Loaded forces sum to the load history.
  const auto [hx, hy] = gen_load_history(3, load_seed(2023));
  double fx = 0;
  for (Eigen::Index n = 0; n < N; ++n) fx += s.input.forces(2 * n, 40);
  EXPECT_NEAR(fx, hx.values[40], 1e-6 * std::max(1.0, std::abs(hx.values[40])));
}

TEST(Sample, ZeroLoadGivesZeroResponse) {
  SimulationOptions opt;
  opt.load_scale = 0.0;
  const SampleRecord s = simulate_sample({5, 2, 1}, 1, opt);
  EXPECT_EQ(s.stress.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Normalization, MapsToUnitInterval) {
  NormalizationSpec n;
  n.min = {-4, 0, -1};
  n.max = {6, 2, 1};
  EXPECT_DOUBLE_EQ(n.apply(-4, 0), -1);
  EXPECT_DOUBLE_EQ(n.apply(6, 0), 1);
  EXPECT_DOUBLE_EQ(n.invert(n.apply(1.25, 1), 1), 1.25);
  EXPECT_DOUBLE_EQ(n.scale(0), 5);
  n.max[2] = n.min[2];
  EXPECT_THROW(n.validate(), ConfigurationError);
}

TEST(Splits, PresetsAndBaseline) {
  EXPECT_EQ(make_split(SplitPreset::Load).assign({1, 1, 11}), Split::Val);
  EXPECT_EQ(make_split(SplitPreset::Geometry).assign({820, 1, 1}), Split::Test);
  EXPECT_EQ(parse_split_preset(to_string(SplitPreset::Bc)), SplitPreset::Bc);
  EXPECT_THROW(parse_split_preset("nope"), ConfigurationError);

  const auto keys = dataset_plan(Scale::Desk).keys();
  const auto idx = make_split(SplitPreset::Baseline, 4).resolve(keys);
  EXPECT_EQ(idx.train.size() + idx.val.size() + idx.test.size(), keys.size());
  EXPECT_NEAR(static_cast<double>(idx.train.size()) / keys.size(), 0.6, 0.01);
  const auto again = make_split(SplitPreset::Baseline, 4).resolve(keys);
  EXPECT_EQ(idx.train, again.train);
}

TEST(Plan, Sizes) {
  EXPECT_EQ(dataset_plan(Scale::Desk).size(), 288u);
  EXPECT_EQ(dataset_plan(Scale::Full).size(), 71680u);
  const auto keys = dataset_plan(Scale::Desk).keys();
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
}

TEST(Container, RoundTripAndRandomAccess) {
  GenerationConfig cfg;
  const std::vector<SampleKey> keys{{1, 1, 1}, {1, 4, 13}, {300, 5, 10}};
  const auto samples = generate_samples(keys, cfg);
  const fs::path path = scratch("rt.spnd");
  write_container(path, samples);
  const auto header = read_container_header(path);
  ASSERT_EQ(header.sample_count, 3u);
  EXPECT_EQ(header.samples[2].geometry_id, 300u);
  const SampleRecord back = read_container_sample(path, 1);
  EXPECT_EQ(back.key, keys[1]);
  EXPECT_EQ(back.mesh.triangles, samples[1].mesh.triangles);
  // Payload is f32.
  EXPECT_LT((back.stress - samples[1].stress).cwiseAbs().maxCoeff(),
            1e-6 * samples[1].stress.cwiseAbs().maxCoeff());
  EXPECT_THROW(read_container_sample(path, 3), ContractError);
}

TEST(Container, TruncatedFileIsFormatError) {
  const auto samples = generate_samples({{2, 1, 1}}, GenerationConfig{});
  const fs::path path = scratch("trunc.spnd");
  write_container(path, samples);
  fs::resize_file(path, fs::file_size(path) - 7);
  EXPECT_THROW(read_container(path), FormatError);
  std::ofstream(scratch("bad.spnd")) << "nope";
  EXPECT_THROW(read_container_header(scratch("bad.spnd")), FormatError);
}

TEST(Manifest, RoundTrip) {
  Manifest m;
  NormalizationSpec n;
  n.min = {-1.5, -2, -3};
  n.max = {1.25, 2, 3};
  m.store_normalization(n);
  m.store_split(make_split(SplitPreset::Geometry, 9));
  m.store_material(Material{});
  m.set("note", std::string("x"));
  const fs::path path = scratch("m.manifest");
  write_manifest(path, m);
  const Manifest back = read_manifest(path);
  EXPECT_EQ(back.normalization().min, n.min);
  EXPECT_EQ(back.normalization().max, n.max);
  EXPECT_EQ(back.split().preset, SplitPreset::Geometry);
  EXPECT_EQ(back.material().density, Material{}.density);
  EXPECT_EQ(back.get("note"), "x");
  EXPECT_THROW(back.get("missing"), FormatError);
}
