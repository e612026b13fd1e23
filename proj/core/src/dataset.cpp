#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "stressfield/dataset.hpp"
#include "stressfield/errors.hpp"
#include "stressfield/rng.hpp"
#include "stressfield/threads.hpp"

namespace stressfield {

double InputMatrix::at(Eigen::Index node, int channel, Eigen::Index frame) const {
  switch (channel) {
    case 0: return coords(node, 0);
    case 1: return coords(node, 1);
    case 2: return bc_flag[static_cast<std::size_t>(node)];
    case 3: return forces(2 * node, frame);
    case 4: return forces(2 * node + 1, frame);
    default: throw ContractError("input channel out of range");
  }
}

InputMatrix build_input_matrix(const Mesh& mesh, const BoundaryCase& bc, const LoadHistory& x,
                               const LoadHistory& y) {
  if (bc.fixed & bc.loaded) {
    throw ConfigurationError("boundary case " + std::to_string(bc.id) +
                             " clamps and loads the same edge");
  }
  if (x.values.size() != y.values.size()) {
    throw ContractError("x and y load histories differ in length");
  }
  const auto n = static_cast<Eigen::Index>(mesh.num_nodes());
  const auto frames = static_cast<Eigen::Index>(x.values.size());
  if (mesh.edge_labels.size() != mesh.nodes.size()) {
    throw ContractError("mesh has no edge labels; run tag_edges first");
  }

  InputMatrix in;
  in.coords.resize(n, 2);
  in.bc_flag.assign(static_cast<std::size_t>(n), 0);
  in.forces = Eigen::MatrixXd::Zero(2 * n, frames);
  std::vector<Eigen::Index> loaded;
  for (Eigen::Index i = 0; i < n; ++i) {
    in.coords(i, 0) = mesh.nodes[i].x;
    in.coords(i, 1) = mesh.nodes[i].y;
    const LabelMask labels = mesh.edge_labels[i];
    if (labels & bc.fixed) in.bc_flag[i] = 1;
    if (labels & bc.loaded) loaded.push_back(i);
  }
  if (loaded.empty()) {
    throw ConfigurationError("no mesh nodes on loaded edges " + mask_name(bc.loaded));
  }
  const double share = 1.0 / static_cast<double>(loaded.size());
  for (Eigen::Index i : loaded) {
    for (Eigen::Index t = 0; t < frames; ++t) {
      in.forces(2 * i, t) = x.values[t] * share;
      in.forces(2 * i + 1, t) = y.values[t] * share;
    }
  }
  return in;
}

std::uint64_t geometry_seed(std::uint64_t master_seed) {
  return splitmix64(master_seed ^ 0x67656F6D65747279ULL);
}

std::uint64_t load_seed(std::uint64_t master_seed) {
  return splitmix64(master_seed ^ 0x6C6F616463617365ULL);
}

SampleRecord simulate_on_mesh(const SampleKey& key, Mesh mesh, std::uint64_t master_seed,
                              const SimulationOptions& options) {
  std::ostringstream where;
  where << "sample (geometry " << key.geometry_id << ", bc " << key.bc_case << ", load "
        << key.load_case << "): ";
  try {
    const BoundaryCase& bc = boundary_case(key.bc_case);
    const auto [lx, ly] = gen_load_history(key.load_case, load_seed(master_seed));

    SampleRecord rec;
    rec.key = key;
    rec.input = build_input_matrix(mesh, bc, lx, ly);
    if (options.load_scale != 1.0) rec.input.forces *= options.load_scale;

    SystemMatrices sys = assemble(mesh, options.material);
    fix_nodes(sys, nodes_with_labels(mesh, bc.fixed));
    DynamicResponse response = newmark_solve(sys, rec.input.forces, kTimeStep);
    rec.stress = recover_stress_history(mesh, options.material, response.displacement);
    rec.acceleration = std::move(response.acceleration);
    rec.mesh = std::move(mesh);
    if (!rec.stress.allFinite()) throw SolverError("non-finite stress");
    return rec;
  } catch (const ConfigurationError& e) {
    throw ConfigurationError(where.str() + e.what());
  } catch (const Error& e) {
    throw SolverError(where.str() + e.what());
  }
}

SampleRecord simulate_sample(const SampleKey& key, std::uint64_t master_seed,
                             const SimulationOptions& options) {
  const Polygon poly =
      sample_polygon(key.geometry_id, geometry_seed(master_seed), options.perturbation);
  Mesh mesh = triangulate(poly, options.target_edge_length, options.meshing);
  return simulate_on_mesh(key, std::move(mesh), master_seed, options);
}

Eigen::MatrixXd body_force_density(const SampleRecord& sample, double thickness) {
  const std::vector<double> area = tributary_areas(sample.mesh);
  Eigen::MatrixXd b = sample.input.forces;
  for (Eigen::Index i = 0; i < sample.num_nodes(); ++i) {
    const double denom = area[static_cast<std::size_t>(i)] * thickness;
    b.row(2 * i) /= denom;
    b.row(2 * i + 1) /= denom;
  }
  return b;
}

// --- normalization ---------------------------------------------------------------

double NormalizationSpec::apply(double value, int channel) const {
  return 2.0 * (value - min[channel]) / (max[channel] - min[channel]) - 1.0;
}

double NormalizationSpec::invert(double value, int channel) const {
  return min[channel] + 0.5 * (value + 1.0) * (max[channel] - min[channel]);
}

void NormalizationSpec::validate() const {
  for (int c = 0; c < kStressChannels; ++c) {
    if (!(max[c] > min[c]) || !std::isfinite(max[c]) || !std::isfinite(min[c])) {
      throw ConfigurationError("degenerate normalization channel " + std::to_string(c));
    }
  }
}

NormalizationSpec fit_normalization(std::span<const SampleRecord* const> train) {
  if (train.empty()) throw ConfigurationError("cannot fit normalization on an empty split");
  NormalizationSpec spec;
  spec.min.fill(std::numeric_limits<double>::infinity());
  spec.max.fill(-std::numeric_limits<double>::infinity());
  for (const SampleRecord* s : train) {
    for (Eigen::Index n = 0; n < s->num_nodes(); ++n) {
      for (int c = 0; c < kStressChannels; ++c) {
        const auto row = s->stress.row(3 * n + c);
        spec.min[c] = std::min(spec.min[c], row.minCoeff());
        spec.max[c] = std::max(spec.max[c], row.maxCoeff());
      }
    }
  }
  spec.validate();
  return spec;
}

// --- splits ------------------------------------------------------------------------

std::string to_string(SplitPreset preset) {
  switch (preset) {
    case SplitPreset::Baseline: return "baseline";
    case SplitPreset::Geometry: return "geometry";
    case SplitPreset::Load: return "load";
    case SplitPreset::Bc: return "bc";
  }
  return "?";
}

SplitPreset parse_split_preset(const std::string& name) {
  if (name == "baseline") return SplitPreset::Baseline;
  if (name == "geometry") return SplitPreset::Geometry;
  if (name == "load") return SplitPreset::Load;
  if (name == "bc") return SplitPreset::Bc;
  throw ConfigurationError("unknown split preset '" + name + "'");
}

std::string to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw ConfigurationError("unknown split '" + name + "'");
}

namespace {

constexpr std::array<IndexRange, 3> kGeometryRanges{{{1, 614}, {615, 819}, {820, 1024}}};
constexpr std::array<IndexRange, 3> kLoadRanges{{{1, 8}, {9, 11}, {12, 14}}};
// Boundary cases 1-3 (E2, E2E3, E1E2) train, 4 (E3) val, 5 (E1E5) test.
constexpr std::array<IndexRange, 3> kBcRanges{{{1, 3}, {4, 4}, {5, 5}}};

std::optional<Split> lookup(const std::array<IndexRange, 3>& ranges, int v) {
  for (int s = 0; s < 3; ++s) {
    if (ranges[s].contains(v)) return static_cast<Split>(s);
  }
  return std::nullopt;
}

std::string range_text(const IndexRange& r) {
  return r.first == r.last ? std::to_string(r.first)
                           : std::to_string(r.first) + "-" + std::to_string(r.last);
}

}  // namespace

const std::vector<std::size_t>& SplitSpec::Indices::operator[](Split s) const {
  switch (s) {
    case Split::Train: return train;
    case Split::Val: return val;
    case Split::Test: return test;
  }
  return test;
}

std::optional<Split> SplitSpec::assign(const SampleKey& key) const {
  switch (preset) {
    case SplitPreset::Geometry: return lookup(kGeometryRanges, key.geometry_id);
    case SplitPreset::Load: return lookup(kLoadRanges, key.load_case);
    case SplitPreset::Bc: return lookup(kBcRanges, key.bc_case);
    case SplitPreset::Baseline: break;
  }
  return std::nullopt;
}

SplitSpec::Indices SplitSpec::resolve(std::span<const SampleKey> keys) const {
  Indices out;
  if (preset != SplitPreset::Baseline) {
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (const auto s = assign(keys[i])) {
        (*s == Split::Train ? out.train : *s == Split::Val ? out.val : out.test).push_back(i);
      }
    }
    return out;
  }
  const CounterRng rng(seed, 0x73706C6974ULL);
  std::vector<std::pair<std::uint64_t, std::size_t>> order;
  order.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto& k = keys[i];
    const std::uint64_t id = (static_cast<std::uint64_t>(k.geometry_id) << 16) |
                             (static_cast<std::uint64_t>(k.bc_case) << 8) |
                             static_cast<std::uint64_t>(k.load_case);
    order.emplace_back(rng.bits(id), i);
  }
  std::sort(order.begin(), order.end());
  const std::size_t n_train = keys.size() * 6 / 10;
  const std::size_t n_val = keys.size() * 2 / 10;
  for (std::size_t r = 0; r < order.size(); ++r) {
    auto& dst = r < n_train ? out.train : r < n_train + n_val ? out.val : out.test;
    dst.push_back(order[r].second);
  }
  for (auto* v : {&out.train, &out.val, &out.test}) std::sort(v->begin(), v->end());
  return out;
}

std::string SplitSpec::describe() const {
  const std::array<IndexRange, 3>* ranges = nullptr;
  switch (preset) {
    case SplitPreset::Baseline: return "baseline:train=60%;val=20%;test=20%";
    case SplitPreset::Geometry: ranges = &kGeometryRanges; break;
    case SplitPreset::Load: ranges = &kLoadRanges; break;
    case SplitPreset::Bc:
      return "bc:train=E2,E2E3,E1E2;val=E3;test=E1E5";
  }
  return to_string(preset) + ":train=" + range_text((*ranges)[0]) +
         ";val=" + range_text((*ranges)[1]) + ";test=" + range_text((*ranges)[2]);
}

SplitSpec make_split(SplitPreset preset, std::uint64_t seed) {
  SplitSpec s;
  s.preset = preset;
  s.seed = seed;
  return s;
}

// --- plans -------------------------------------------------------------------------

std::string to_string(Scale scale) { return scale == Scale::Desk ? "desk" : "full"; }

Scale parse_scale(const std::string& name) {
  if (name == "desk") return Scale::Desk;
  if (name == "full") return Scale::Full;
  throw ConfigurationError("unknown scale '" + name + "'");
}

std::vector<SampleKey> DatasetPlan::keys() const {
  std::vector<SampleKey> out;
  out.reserve(size());
  for (int g : geometry_ids) {
    for (int b : bc_cases) {
      for (int l : load_cases) out.push_back({g, b, l});
    }
  }
  return out;
}

DatasetPlan dataset_plan(Scale scale) {
  DatasetPlan plan;
  if (scale == Scale::Full) {
    for (int g = 1; g <= kGeometries; ++g) plan.geometry_ids.push_back(g);
    for (int b = 1; b <= kBoundaryCases; ++b) plan.bc_cases.push_back(b);
    for (int l = 1; l <= kLoadCases; ++l) plan.load_cases.push_back(l);
    return plan;
  }
  // 24 geometries spread over 1..1024 so every geometry split is populated;
  // one boundary case per bc split; two train, one val, one test load case.
  for (int k = 0; k < 24; ++k) plan.geometry_ids.push_back(1 + k * kGeometries / 24);
  plan.bc_cases = {1, 4, 5};
  plan.load_cases = {1, 5, 10, 13};
  return plan;
}

// --- generation --------------------------------------------------------------------

std::vector<SampleRecord> generate_samples(const std::vector<SampleKey>& keys,
                                           const GenerationConfig& config) {
  const auto& sim = config.simulation;
  std::vector<int> geometries;
  for (const auto& k : keys) geometries.push_back(k.geometry_id);
  std::sort(geometries.begin(), geometries.end());
  geometries.erase(std::unique(geometries.begin(), geometries.end()), geometries.end());

  std::vector<Mesh> meshes(geometries.size());
  parallel_for(geometries.size(), [&](std::size_t i) {
    const Polygon poly =
        sample_polygon(geometries[i], geometry_seed(config.master_seed), sim.perturbation);
    meshes[i] = triangulate(poly, sim.target_edge_length, sim.meshing);
  }, config.threads);

  std::vector<SampleRecord> out(keys.size());
  parallel_for(keys.size(), [&](std::size_t i) {
    const auto it = std::lower_bound(geometries.begin(), geometries.end(), keys[i].geometry_id);
    const Mesh& mesh = meshes[static_cast<std::size_t>(it - geometries.begin())];
    out[i] = simulate_on_mesh(keys[i], mesh, config.master_seed, sim);
  }, config.threads);
  return out;
}

std::vector<SampleRecord> generate_samples(const GenerationConfig& config) {
  return generate_samples(dataset_plan(config.scale).keys(), config);
}

namespace {

Manifest base_manifest(const GenerationConfig& config, std::size_t count) {
  Manifest m;
  m.set("format", "stressfield-dataset");
  m.set("version", std::uint64_t{kContainerVersion});
  m.set("master_seed", config.master_seed);
  m.set("scale", to_string(config.scale));
  m.set("samples", std::uint64_t{count});
  m.set("frames", std::uint64_t{kFrames});
  m.set("dt", kTimeStep);
  m.set("mesh.target_edge_length", config.simulation.target_edge_length);
  m.set("geometry.jitter", config.simulation.perturbation.jitter);
  m.set("load_scale", config.simulation.load_scale);
  m.set("input.force_scale", kForceInputScale);
  m.set("pde.char_scale",
        config.simulation.material.density * kGravity);
  m.store_material(config.simulation.material);
  m.store_split(make_split(config.preset, config.master_seed));
  return m;
}

}  // namespace

Manifest make_manifest(const GenerationConfig& config, std::span<const SampleRecord> samples) {
  Manifest m = base_manifest(config, samples.size());
  std::vector<SampleKey> keys;
  for (const auto& s : samples) keys.push_back(s.key);
  const auto idx = m.split().resolve(keys);
  std::vector<const SampleRecord*> train;
  for (std::size_t i : idx.train) train.push_back(&samples[i]);
  m.store_normalization(fit_normalization(train));
  return m;
}

std::size_t generate_dataset(const std::filesystem::path& out, const GenerationConfig& config) {
  const std::vector<SampleKey> keys = dataset_plan(config.scale).keys();
  const SplitSpec split = make_split(config.preset, config.master_seed);
  const auto idx = split.resolve(keys);
  std::vector<char> is_train(keys.size(), 0);
  for (std::size_t i : idx.train) is_train[i] = 1;

  NormalizationSpec norm;
  norm.min.fill(std::numeric_limits<double>::infinity());
  norm.max.fill(-std::numeric_limits<double>::infinity());

  // Stream in geometry-sized chunks so full-scale runs stay within memory.
  ContainerWriter writer(out);
  std::size_t begin = 0;
  while (begin < keys.size()) {
    std::size_t end = begin;
    std::size_t chunk_geometries = 0;
    int last = -1;
    while (end < keys.size()) {
      if (keys[end].geometry_id != last) {
        if (chunk_geometries == 8) break;
        last = keys[end].geometry_id;
        ++chunk_geometries;
      }
      ++end;
    }
    const std::vector<SampleKey> chunk(keys.begin() + static_cast<std::ptrdiff_t>(begin),
                                       keys.begin() + static_cast<std::ptrdiff_t>(end));
    const std::vector<SampleRecord> samples = generate_samples(chunk, config);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      writer.append(samples[i]);
      if (!is_train[begin + i]) continue;
      for (Eigen::Index n = 0; n < samples[i].num_nodes(); ++n) {
        for (int c = 0; c < kStressChannels; ++c) {
          // Match what readers see: the container stores f32.
          const auto row = samples[i].stress.row(3 * n + c).cast<float>().cast<double>();
          norm.min[c] = std::min(norm.min[c], row.minCoeff());
          norm.max[c] = std::max(norm.max[c], row.maxCoeff());
        }
      }
    }
    begin = end;
  }
  writer.finish();
  norm.validate();

  Manifest m = base_manifest(config, keys.size());
  m.store_normalization(norm);
  write_manifest(manifest_path(out), m);
  return keys.size();
}

}  // namespace stressfield
