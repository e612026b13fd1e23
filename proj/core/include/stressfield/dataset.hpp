#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stressfield/fem.hpp"
#include "stressfield/geometry.hpp"

namespace stressfield {

inline constexpr int kFrames = 100;
inline constexpr double kTimeStep = 0.01;  // s
inline constexpr int kLoadCases = 14;
inline constexpr int kGeometries = 1024;
inline constexpr int kBoundaryCases = 5;
inline constexpr int kInputChannels = 5;
inline constexpr int kStressChannels = 3;

// --- loads -------------------------------------------------------------------

enum class Waveform : std::uint8_t { Sine, Cosine };
enum class Direction : std::uint8_t { X, Y };

struct LoadHistory {
  std::vector<double> values;  // kFrames samples, N
  double frequency = 1.0;      // Hz
  double amplitude = 0.0;      // N
  Waveform waveform = Waveform::Sine;
  Direction direction = Direction::X;
};

inline constexpr std::array<double, 5> kAmplitudes{2000.0, 4000.0, 6000.0, 8000.0, 10000.0};

/// Random sine/cosine histories for load case `case_id` (1..14) in x and y.
std::pair<LoadHistory, LoadHistory> gen_load_history(int case_id, std::uint64_t rng_seed);

// --- boundary cases ----------------------------------------------------------

/// One row of the boundary-condition table: which edges are clamped and which
/// edges receive the load.
struct BoundaryCase {
  int id;
  LabelMask fixed;
  LabelMask loaded;
};

const BoundaryCase& boundary_case(int id);
/// "E2E3"-style name of a label mask.
std::string mask_name(LabelMask mask);

// --- samples -------------------------------------------------------------------

/// N x 5 x T input with channels (x, y, bc flag, force x, force y). The
/// coordinate and flag channels are constant in time and stored once.
struct InputMatrix {
  Eigen::MatrixX2d coords;          // N x 2, m
  std::vector<std::uint8_t> bc_flag;  // N
  Eigen::MatrixXd forces;           // 2N x T, row 2n + c, N

  Eigen::Index num_nodes() const { return coords.rows(); }
  Eigen::Index num_frames() const { return forces.cols(); }
  double at(Eigen::Index node, int channel, Eigen::Index frame) const;
};

InputMatrix build_input_matrix(const Mesh& mesh, const BoundaryCase& bc, const LoadHistory& x,
                               const LoadHistory& y);

struct SampleKey {
  int geometry_id = 1;
  int bc_case = 1;
  int load_case = 1;

  friend bool operator==(const SampleKey&, const SampleKey&) = default;
  friend auto operator<=>(const SampleKey&, const SampleKey&) = default;
};

struct SampleRecord {
  SampleKey key;
  Mesh mesh;
  InputMatrix input;
  Eigen::MatrixXd stress;        // 3N x T, row 3n + c, Pa
  Eigen::MatrixXd acceleration;  // 2N x T, row 2n + c, m/s^2

  Eigen::Index num_nodes() const { return input.num_nodes(); }
};

struct SimulationOptions {
  Material material;
  PerturbationConfig perturbation;
  MeshingOptions meshing;
  double target_edge_length = 0.03;
  // Multiplies every applied force; 0 gives the unloaded debug sample.
  double load_scale = 1.0;
};

std::uint64_t geometry_seed(std::uint64_t master_seed);
std::uint64_t load_seed(std::uint64_t master_seed);

/// Meshes geometry `key.geometry_id`, applies the boundary case and load case,
/// and integrates the transient response.
SampleRecord simulate_sample(const SampleKey& key, std::uint64_t master_seed,
                             const SimulationOptions& options = {});

/// Same as simulate_sample on an already generated mesh.
SampleRecord simulate_on_mesh(const SampleKey& key, Mesh mesh, std::uint64_t master_seed,
                              const SimulationOptions& options = {});

/// Body-force density (N/m^3) per node and frame: nodal force divided by
/// tributary area times thickness. 2N x T.
Eigen::MatrixXd body_force_density(const SampleRecord& sample, double thickness);

// --- normalization -------------------------------------------------------------

/// Per-channel affine map of (sxx, syy, sxy) onto [-1, 1].
struct NormalizationSpec {
  std::array<double, kStressChannels> min{};
  std::array<double, kStressChannels> max{};

  double apply(double value, int channel) const;
  double invert(double value, int channel) const;
  /// d(physical)/d(normalized) for a channel.
  double scale(int channel) const { return 0.5 * (max[channel] - min[channel]); }
  void validate() const;
};

NormalizationSpec fit_normalization(std::span<const SampleRecord* const> train);

// --- splits ----------------------------------------------------------------------

enum class SplitPreset : std::uint8_t { Baseline, Geometry, Load, Bc };
enum class Split : std::uint8_t { Train, Val, Test };

std::string to_string(SplitPreset preset);
SplitPreset parse_split_preset(const std::string& name);
std::string to_string(Split split);
Split parse_split(const std::string& name);

struct IndexRange {
  int first;
  int last;
  bool contains(int v) const { return first <= v && v <= last; }
};

struct SplitSpec {
  SplitPreset preset = SplitPreset::Baseline;
  std::uint64_t seed = 0;  // shuffle seed for the baseline preset

  /// Held-out assignment for the geometry/load/bc presets.
  std::optional<Split> assign(const SampleKey& key) const;

  struct Indices {
    std::vector<std::size_t> train, val, test;
    const std::vector<std::size_t>& operator[](Split s) const;
  };
  /// Indices into `keys` per split. Baseline: 60/20/20 by sample after a
  /// seeded shuffle.
  Indices resolve(std::span<const SampleKey> keys) const;

  /// Human-readable `train=...;val=...;test=...` description.
  std::string describe() const;
};

SplitSpec make_split(SplitPreset preset, std::uint64_t seed = 0);

// --- dataset plans -------------------------------------------------------------

enum class Scale : std::uint8_t { Desk, Full };

std::string to_string(Scale scale);
Scale parse_scale(const std::string& name);

struct DatasetPlan {
  std::vector<int> geometry_ids;
  std::vector<int> bc_cases;
  std::vector<int> load_cases;

  std::size_t size() const {
    return geometry_ids.size() * bc_cases.size() * load_cases.size();
  }
  /// Geometry-major enumeration order used by the generator.
  std::vector<SampleKey> keys() const;
};

DatasetPlan dataset_plan(Scale scale);

// --- container -----------------------------------------------------------------

inline constexpr std::array<char, 4> kContainerMagic{'S', 'P', 'N', 'D'};
inline constexpr std::uint32_t kContainerVersion = 1;

struct SampleHeader {
  std::uint32_t geometry_id = 0;
  std::uint8_t bc_case = 0;
  std::uint8_t load_case = 0;
  std::uint32_t num_nodes = 0;
  std::uint32_t num_triangles = 0;
  std::uint64_t offset = 0;  // byte offset of the sample in the file
};

struct ContainerHeader {
  std::uint32_t version = 0;
  std::uint32_t sample_count = 0;
  std::vector<SampleHeader> samples;
};

/// Single-writer streaming container. The sample count is patched in by
/// finish(); the destructor finishes an unfinished file.
class ContainerWriter {
 public:
  explicit ContainerWriter(const std::filesystem::path& path);
  ~ContainerWriter();
  ContainerWriter(const ContainerWriter&) = delete;
  ContainerWriter& operator=(const ContainerWriter&) = delete;

  void append(const SampleRecord& sample);
  void finish();
  std::uint32_t count() const { return count_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::uint32_t count_ = 0;
};

void write_container(const std::filesystem::path& path, std::span<const SampleRecord> samples);
std::vector<SampleRecord> read_container(const std::filesystem::path& path);
/// Header walk without decoding payloads.
ContainerHeader read_container_header(const std::filesystem::path& path);
SampleRecord read_container_sample(const std::filesystem::path& path, std::size_t index);

// --- manifest ------------------------------------------------------------------

inline constexpr double kForceInputScale = 1e-4;
inline constexpr double kGravity = 9.81;

/// Sidecar `key=value` file describing how a container was produced.
struct Manifest {
  std::map<std::string, std::string> entries;

  void set(const std::string& key, const std::string& value) { entries[key] = value; }
  void set(const std::string& key, double value);
  void set(const std::string& key, std::uint64_t value);
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool has(const std::string& key) const { return entries.count(key) != 0; }

  void store_normalization(const NormalizationSpec& spec);
  NormalizationSpec normalization() const;
  void store_split(const SplitSpec& split);
  SplitSpec split() const;
  void store_material(const Material& material);
  Material material() const;
};

std::filesystem::path manifest_path(const std::filesystem::path& container);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

// --- generation ------------------------------------------------------------------

struct GenerationConfig {
  Scale scale = Scale::Desk;
  SplitPreset preset = SplitPreset::Load;
  std::uint64_t master_seed = 2023;
  SimulationOptions simulation;
  int threads = 0;  // 0: worker_count()
};

/// Simulates every planned sample in key order.
std::vector<SampleRecord> generate_samples(const GenerationConfig& config);
std::vector<SampleRecord> generate_samples(const std::vector<SampleKey>& keys,
                                           const GenerationConfig& config);

/// Builds the manifest for a generated sample set (fits the normalization on
/// the preset's train split).
Manifest make_manifest(const GenerationConfig& config, std::span<const SampleRecord> samples);

/// generate_samples + write_container + write_manifest. Returns sample count.
std::size_t generate_dataset(const std::filesystem::path& out, const GenerationConfig& config);

}  // namespace stressfield
