#include "stressfield/checkpoint.hpp"

#include <fstream>

#include "le_io.hpp"
#include "stressfield/errors.hpp"

namespace stressfield {

using detail::put;
using detail::take;

namespace {

constexpr char kMagic[4] = {'S', 'T', 'C', 'K'};

void put_floats(std::ostream& out, const std::vector<float>& v) {
  for (float x : v) put(out, x);
}

std::vector<float> take_floats(std::istream& in, std::size_t n) {
  std::vector<float> v(n);
  for (auto& x : v) x = take<float>(in);
  return v;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::size_t p = param_count(ckpt.config);
  if (ckpt.params.size() != p) {
    throw ContractError("checkpoint holds " + std::to_string(ckpt.params.size()) +
                        " parameters, config implies " + std::to_string(p));
  }
  if (ckpt.state && (ckpt.state->adam_m.size() != p || ckpt.state->adam_v.size() != p)) {
    throw ContractError("optimizer moments do not match the parameter count");
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot create " + tmp.string());
    out.write(kMagic, 4);
    put(out, kCheckpointVersion);
    put(out, static_cast<std::uint32_t>(ckpt.config.variant));
    put(out, static_cast<std::uint32_t>(ckpt.config.d));
    put(out, static_cast<std::uint32_t>(ckpt.config.stm_blocks));
    put(out, static_cast<std::uint32_t>(ckpt.config.mlp_width));
    put(out, static_cast<std::uint32_t>(ckpt.config.mlp_layers));
    put(out, static_cast<std::uint32_t>(ckpt.config.max_nodes));
    put(out, ckpt.config.seed);
    put(out, ckpt.train_seed);
    put(out, static_cast<std::uint64_t>(p));
    put_floats(out, ckpt.params);
    put(out, static_cast<std::uint8_t>(ckpt.state ? 1 : 0));
    if (ckpt.state) {
      const TrainingState& s = *ckpt.state;
      put(out, s.epoch);
      put(out, s.step);
      put(out, s.best_val);
      put(out, s.best_epoch);
      put(out, s.weights.data);
      put(out, s.weights.pde);
      put(out, s.weights.bc);
      put_floats(out, s.adam_m);
      put_floats(out, s.adam_v);
    }
    if (!out) throw FormatError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::char_traits<char>::compare(magic, kMagic, 4) != 0) {
    throw FormatError(path.string() + " is not a checkpoint");
  }
  const auto version = take<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto variant = take<std::uint32_t>(in);
  if (variant > static_cast<std::uint32_t>(Variant::SpatioMlp)) throw FormatError("bad variant id");
  ckpt.config.variant = static_cast<Variant>(variant);
  ckpt.config.d = static_cast<int>(take<std::uint32_t>(in));
  ckpt.config.stm_blocks = static_cast<int>(take<std::uint32_t>(in));
  ckpt.config.mlp_width = static_cast<int>(take<std::uint32_t>(in));
  ckpt.config.mlp_layers = static_cast<int>(take<std::uint32_t>(in));
  ckpt.config.max_nodes = static_cast<int>(take<std::uint32_t>(in));
  ckpt.config.seed = take<std::uint64_t>(in);
  ckpt.train_seed = take<std::uint64_t>(in);
  const auto p = take<std::uint64_t>(in);
  if (p != param_count(ckpt.config)) {
    throw FormatError("checkpoint parameter count " + std::to_string(p) +
                      " does not match its config");
  }
  ckpt.params = take_floats(in, p);
  if (take<std::uint8_t>(in)) {
    TrainingState s;
    s.epoch = take<std::uint32_t>(in);
    s.step = take<std::uint64_t>(in);
    s.best_val = take<double>(in);
    s.best_epoch = take<std::int32_t>(in);
    s.weights.data = take<double>(in);
    s.weights.pde = take<double>(in);
    s.weights.bc = take<double>(in);
    s.adam_m = take_floats(in, p);
    s.adam_v = take_floats(in, p);
    ckpt.state = std::move(s);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after checkpoint payload");
  }
  return ckpt;
}

Model<float> load_model(const Checkpoint& ckpt) {
  Model<float> model(ckpt.config);
  if (ckpt.params.size() != model.size()) throw FormatError("checkpoint size mismatch");
  model.parameters() = ckpt.params;
  return model;
}

}  // namespace stressfield
