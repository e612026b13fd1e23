// Dataset container, little-endian:
//   magic "SPND", u32 version, u32 sample count, then per sample
//   u32 geometry_id, u8 bc_case, u8 load_case, u32 N, u32 K,
//   f64 coords[N][2], u32 triangles[K][3], u8 bc_flags[N],
//   f32 forces[N][2][T], f32 stress[N][3][T], f32 acceleration[N][2][T].

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "stressfield/dataset.hpp"
#include "stressfield/errors.hpp"
#include "le_io.hpp"

namespace stressfield {

namespace {

using detail::put;
using detail::take;

std::uint64_t payload_bytes(std::uint64_t n, std::uint64_t k) {
  const std::uint64_t t = kFrames;
  return 16 * n + 12 * k + n + 4 * (2 * n * t + 3 * n * t + 2 * n * t);
}

constexpr std::uint64_t kSampleHeaderBytes = 4 + 1 + 1 + 4 + 4;
constexpr std::uint64_t kFileHeaderBytes = 12;

void write_history(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index t = 0; t < m.cols(); ++t) put(out, static_cast<float>(m(r, t)));
  }
}

Eigen::MatrixXd read_history(std::istream& in, Eigen::Index rows) {
  Eigen::MatrixXd m(rows, kFrames);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index t = 0; t < kFrames; ++t) m(r, t) = take<float>(in);
  }
  return m;
}

SampleHeader read_sample_header(std::istream& in) {
  SampleHeader h;
  h.offset = static_cast<std::uint64_t>(in.tellg());
  h.geometry_id = take<std::uint32_t>(in);
  h.bc_case = take<std::uint8_t>(in);
  h.load_case = take<std::uint8_t>(in);
  h.num_nodes = take<std::uint32_t>(in);
  h.num_triangles = take<std::uint32_t>(in);
  return h;
}

SampleRecord read_sample_body(std::istream& in, const SampleHeader& h) {
  SampleRecord s;
  s.key = {static_cast<int>(h.geometry_id), h.bc_case, h.load_case};
  const Eigen::Index n = h.num_nodes;
  s.mesh.nodes.resize(n);
  s.input.coords.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = take<double>(in);
    const double y = take<double>(in);
    s.mesh.nodes[i] = {x, y};
    s.input.coords(i, 0) = x;
    s.input.coords(i, 1) = y;
  }
  s.mesh.triangles.resize(h.num_triangles);
  for (auto& tri : s.mesh.triangles) {
    for (int& v : tri) {
      const std::uint32_t idx = take<std::uint32_t>(in);
      if (idx >= h.num_nodes) throw FormatError("triangle index out of range");
      v = static_cast<int>(idx);
    }
  }
  s.input.bc_flag.resize(n);
  for (auto& f : s.input.bc_flag) f = take<std::uint8_t>(in);
  s.input.forces = read_history(in, 2 * n);
  s.stress = read_history(in, 3 * n);
  s.acceleration = read_history(in, 2 * n);
  return s;
}

void check_magic(std::istream& in, const std::filesystem::path& path) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kContainerMagic.data(), 4) != 0) {
    throw FormatError(path.string() + ": not a dataset container (bad magic)");
  }
  const auto version = take<std::uint32_t>(in);
  if (version != kContainerVersion) {
    throw FormatError(path.string() + ": unsupported container version " +
                      std::to_string(version));
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

}  // namespace

struct ContainerWriter::Impl {
  std::ofstream out;
  bool finished = false;
};

ContainerWriter::ContainerWriter(const std::filesystem::path& path) : impl_(new Impl) {
  impl_->out.open(path, std::ios::binary | std::ios::trunc);
  if (!impl_->out) throw FormatError("cannot create " + path.string());
  impl_->out.write(kContainerMagic.data(), 4);
  put(impl_->out, kContainerVersion);
  put(impl_->out, std::uint32_t{0});
}

ContainerWriter::~ContainerWriter() {
  if (impl_ && !impl_->finished) {
    try {
      finish();
    } catch (...) {
    }
  }
}

void ContainerWriter::append(const SampleRecord& s) {
  if (impl_->finished) throw ContractError("container already finished");
  const auto n = s.num_nodes();
  if (s.input.num_frames() != kFrames || s.stress.cols() != kFrames ||
      s.acceleration.cols() != kFrames) {
    throw ContractError("container samples must have exactly 100 frames");
  }
  if (s.stress.rows() != 3 * n || s.acceleration.rows() != 2 * n ||
      s.input.forces.rows() != 2 * n) {
    throw ContractError("sample arrays disagree on node count");
  }
  auto& out = impl_->out;
  put(out, static_cast<std::uint32_t>(s.key.geometry_id));
  put(out, static_cast<std::uint8_t>(s.key.bc_case));
  put(out, static_cast<std::uint8_t>(s.key.load_case));
  put(out, static_cast<std::uint32_t>(n));
  put(out, static_cast<std::uint32_t>(s.mesh.num_triangles()));
  for (Eigen::Index i = 0; i < n; ++i) {
    put(out, s.input.coords(i, 0));
    put(out, s.input.coords(i, 1));
  }
  for (const auto& tri : s.mesh.triangles) {
    for (int v : tri) put(out, static_cast<std::uint32_t>(v));
  }
  for (auto f : s.input.bc_flag) put(out, f);
  write_history(out, s.input.forces);
  write_history(out, s.stress);
  write_history(out, s.acceleration);
  if (!out) throw FormatError("write failed while appending a sample");
  ++count_;
}

void ContainerWriter::finish() {
  if (impl_->finished) return;
  impl_->finished = true;
  auto& out = impl_->out;
  out.seekp(8);
  put(out, count_);
  out.close();
  if (!out) throw FormatError("failed to finalize container");
}

void write_container(const std::filesystem::path& path, std::span<const SampleRecord> samples) {
  ContainerWriter writer(path);
  for (const auto& s : samples) writer.append(s);
  writer.finish();
}

ContainerHeader read_container_header(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  check_magic(in, path);
  ContainerHeader h;
  h.version = kContainerVersion;
  h.sample_count = take<std::uint32_t>(in);
  std::uint64_t offset = kFileHeaderBytes;
  for (std::uint32_t i = 0; i < h.sample_count; ++i) {
    in.seekg(static_cast<std::streamoff>(offset));
    SampleHeader sh = read_sample_header(in);
    h.samples.push_back(sh);
    offset += kSampleHeaderBytes + payload_bytes(sh.num_nodes, sh.num_triangles);
  }
  in.seekg(0, std::ios::end);
  if (static_cast<std::uint64_t>(in.tellg()) != offset) {
    throw FormatError(path.string() + ": size does not match sample headers");
  }
  return h;
}

std::vector<SampleRecord> read_container(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  check_magic(in, path);
  const auto count = take<std::uint32_t>(in);
  std::vector<SampleRecord> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const SampleHeader h = read_sample_header(in);
    out.push_back(read_sample_body(in, h));
  }
  return out;
}

SampleRecord read_container_sample(const std::filesystem::path& path, std::size_t index) {
  const ContainerHeader header = read_container_header(path);
  if (index >= header.samples.size()) {
    throw ContractError("sample index " + std::to_string(index) + " out of range (" +
                        std::to_string(header.samples.size()) + " samples)");
  }
  std::ifstream in = open_input(path);
  in.seekg(static_cast<std::streamoff>(header.samples[index].offset));
  const SampleHeader h = read_sample_header(in);
  return read_sample_body(in, h);
}

// --- manifest ------------------------------------------------------------------

namespace {

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

constexpr std::array<const char*, kStressChannels> kChannelNames{"sxx", "syy", "sxy"};

}  // namespace

void Manifest::set(const std::string& key, double value) { entries[key] = format_double(value); }

void Manifest::set(const std::string& key, std::uint64_t value) {
  entries[key] = std::to_string(value);
}

const std::string& Manifest::get(const std::string& key) const {
  const auto it = entries.find(key);
  if (it == entries.end()) throw FormatError("manifest is missing key '" + key + "'");
  return it->second;
}

double Manifest::get_double(const std::string& key) const {
  try {
    return std::stod(get(key));
  } catch (const std::logic_error&) {
    throw FormatError("manifest key '" + key + "' is not a number");
  }
}

std::uint64_t Manifest::get_u64(const std::string& key) const {
  try {
    return std::stoull(get(key));
  } catch (const std::logic_error&) {
    throw FormatError("manifest key '" + key + "' is not an unsigned integer");
  }
}

void Manifest::store_normalization(const NormalizationSpec& spec) {
  for (int c = 0; c < kStressChannels; ++c) {
    set(std::string("norm.") + kChannelNames[c] + ".min", spec.min[c]);
    set(std::string("norm.") + kChannelNames[c] + ".max", spec.max[c]);
  }
}

NormalizationSpec Manifest::normalization() const {
  NormalizationSpec spec;
  for (int c = 0; c < kStressChannels; ++c) {
    spec.min[c] = get_double(std::string("norm.") + kChannelNames[c] + ".min");
    spec.max[c] = get_double(std::string("norm.") + kChannelNames[c] + ".max");
  }
  spec.validate();
  return spec;
}

void Manifest::store_split(const SplitSpec& split) {
  set("split.preset", to_string(split.preset));
  set("split.seed", split.seed);
  set("split.ranges", split.describe());
}

SplitSpec Manifest::split() const {
  return make_split(parse_split_preset(get("split.preset")), get_u64("split.seed"));
}

void Manifest::store_material(const Material& m) {
  set("material.youngs_modulus", m.youngs_modulus);
  set("material.poisson_ratio", m.poisson_ratio);
  set("material.density", m.density);
  set("material.thickness", m.thickness);
}

Material Manifest::material() const {
  Material m;
  m.youngs_modulus = get_double("material.youngs_modulus");
  m.poisson_ratio = get_double("material.poisson_ratio");
  m.density = get_double("material.density");
  m.thickness = get_double("material.thickness");
  m.validate();
  return m;
}

std::filesystem::path manifest_path(const std::filesystem::path& container) {
  std::filesystem::path p = container;
  p += ".manifest";
  return p;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot create " + path.string());
  for (const auto& [k, v] : manifest.entries) out << k << '=' << v << '\n';
  if (!out) throw FormatError("failed writing " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  Manifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("manifest line without '=': " + line);
    m.entries[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

}  // namespace stressfield
