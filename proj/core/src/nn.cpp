#include "stressfield/nn.hpp"

#include <cmath>

#include "stressfield/errors.hpp"
#include "stressfield/rng.hpp"

namespace stressfield {

namespace {

template <typename S>
using RowMap = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename S>
using RowMapMut = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename S>
using VecMap = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>;
template <typename S>
using VecMapMut = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>;

std::size_t linear_size(int in, int out) {
  return static_cast<std::size_t>(out) * in + static_cast<std::size_t>(out);
}

std::size_t lstm_size(int in, int h) {
  return 4 * static_cast<std::size_t>(h) * (in + h) + 8 * static_cast<std::size_t>(h);
}

template <typename S>
void leaky(Mat<S>& m) {
  m = m.cwiseMax(S(kLeakySlope) * m);
}

template <typename S>
Mat<S> node_to_time_major(const Mat<S>& x, int n_nodes, int frames) {
  Mat<S> y(x.rows(), x.cols());
  for (int n = 0; n < n_nodes; ++n) {
    for (int t = 0; t < frames; ++t) {
      y.col(static_cast<Eigen::Index>(t) * n_nodes + n) = x.col(static_cast<Eigen::Index>(n) * frames + t);
    }
  }
  return y;
}

template <typename S>
Mat<S> time_to_node_major(const Mat<S>& x, int n_nodes, int frames) {
  Mat<S> y(x.rows(), x.cols());
  for (int n = 0; n < n_nodes; ++n) {
    for (int t = 0; t < frames; ++t) {
      y.col(static_cast<Eigen::Index>(n) * frames + t) = x.col(static_cast<Eigen::Index>(t) * n_nodes + n);
    }
  }
  return y;
}

// x is in x (L Bs) with column l * Bs + b.
template <typename S>
const Mat<S>& lstm_forward(const S* p, int in, int h, Mat<S> x, int length, int batch,
                           LstmTrace<S>& tr) {
  const RowMap<S> w_ih(p, 4 * h, in);
  const RowMap<S> w_hh(p + 4 * h * in, 4 * h, h);
  const VecMap<S> b_ih(p + 4 * h * (in + h), 4 * h);
  const VecMap<S> b_hh(p + 4 * h * (in + h) + 4 * h, 4 * h);
  tr.input = std::move(x);
  tr.length = length;
  tr.batch = batch;
  tr.gates.noalias() = w_ih * tr.input;
  const Eigen::Matrix<S, Eigen::Dynamic, 1> bias = b_ih + b_hh;
  tr.gates.colwise() += bias;
  tr.cell.resize(h, tr.input.cols());
  tr.hidden.resize(h, tr.input.cols());
  for (int l = 0; l < length; ++l) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(l) * batch;
    auto g = tr.gates.middleCols(c0, batch);
    if (l > 0) g.noalias() += w_hh * tr.hidden.middleCols(c0 - batch, batch);
    g.topRows(2 * h) = g.topRows(2 * h).array().logistic().matrix();
    g.middleRows(2 * h, h) = g.middleRows(2 * h, h).array().tanh().matrix();
    g.bottomRows(h) = g.bottomRows(h).array().logistic().matrix();
    auto c = tr.cell.middleCols(c0, batch);
    c = g.topRows(h).cwiseProduct(g.middleRows(2 * h, h));
    if (l > 0) c += g.middleRows(h, h).cwiseProduct(tr.cell.middleCols(c0 - batch, batch));
    tr.hidden.middleCols(c0, batch) = g.bottomRows(h).cwiseProduct(c.array().tanh().matrix());
  }
  return tr.hidden;
}

template <typename S>
Mat<S> lstm_backward(const S* p, S* gp, int in, int h, const LstmTrace<S>& tr, const Mat<S>& d_hidden) {
  const RowMap<S> w_ih(p, 4 * h, in);
  const RowMap<S> w_hh(p + 4 * h * in, 4 * h, h);
  RowMapMut<S> g_ih(gp, 4 * h, in);
  RowMapMut<S> g_hh(gp + 4 * h * in, 4 * h, h);
  VecMapMut<S> gb_ih(gp + 4 * h * (in + h), 4 * h);
  VecMapMut<S> gb_hh(gp + 4 * h * (in + h) + 4 * h, 4 * h);

  const int batch = tr.batch;
  Mat<S> d_gates(4 * h, tr.gates.cols());
  Mat<S> dh_next = Mat<S>::Zero(h, batch);
  Mat<S> dc_next = Mat<S>::Zero(h, batch);
  Mat<S> dh, dc, tc;
  for (int l = tr.length - 1; l >= 0; --l) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(l) * batch;
    const auto g = tr.gates.middleCols(c0, batch);
    const auto gi = g.topRows(h).array();
    const auto gf = g.middleRows(h, h).array();
    const auto gg = g.middleRows(2 * h, h).array();
    const auto go = g.bottomRows(h).array();
    dh = d_hidden.middleCols(c0, batch) + dh_next;
    tc = tr.cell.middleCols(c0, batch).array().tanh().matrix();
    dc = (dh.array() * go * (S(1) - tc.array().square())).matrix() + dc_next;
    auto dg = d_gates.middleCols(c0, batch);
    dg.bottomRows(h) = (dh.array() * tc.array() * go * (S(1) - go)).matrix();
    dg.topRows(h) = (dc.array() * gg * gi * (S(1) - gi)).matrix();
    dg.middleRows(2 * h, h) = (dc.array() * gi * (S(1) - gg.square())).matrix();
    if (l > 0) {
      dg.middleRows(h, h) =
          (dc.array() * tr.cell.middleCols(c0 - batch, batch).array() * gf * (S(1) - gf)).matrix();
    } else {
      dg.middleRows(h, h).setZero();
    }
    dc_next = (dc.array() * gf).matrix();
    dh_next.noalias() = w_hh.transpose() * dg;
  }
  g_ih.noalias() += d_gates * tr.input.transpose();
  const Eigen::Index shifted = static_cast<Eigen::Index>(tr.length - 1) * batch;
  if (shifted > 0) {
    g_hh.noalias() += d_gates.rightCols(shifted) * tr.hidden.leftCols(shifted).transpose();
  }
  const Eigen::Matrix<S, Eigen::Dynamic, 1> bias = d_gates.rowwise().sum();
  gb_ih += bias;
  gb_hh += bias;
  return w_ih.transpose() * d_gates;
}

}  // namespace

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::SpatiotempoLstm: return "spatiotempo-lstm";
    case Variant::TempoLstm: return "tempo-lstm";
    case Variant::SpatioMlp: return "spatio-mlp";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "spatiotempo-lstm" || name == "stm") return Variant::SpatiotempoLstm;
  if (name == "tempo-lstm") return Variant::TempoLstm;
  if (name == "spatio-mlp") return Variant::SpatioMlp;
  throw ConfigurationError("unknown model variant '" + name +
                           "' (expected spatiotempo-lstm, tempo-lstm or spatio-mlp)");
}

void ModelConfig::validate() const {
  if (variant == Variant::SpatioMlp) {
    if (mlp_width < 1 || mlp_layers < 2 || max_nodes < 1) {
      throw ConfigurationError("Spatio-MLP needs width >= 1, layers >= 2 and max_nodes >= 1");
    }
  } else if (d < 1 || stm_blocks < 1) {
    throw ConfigurationError("recurrent variants need d >= 1 and at least one block");
  }
}

std::size_t param_count(const ModelConfig& config) {
  config.validate();
  if (config.variant == Variant::SpatioMlp) {
    const int in = kModelInputs * config.max_nodes;
    const int out = kModelOutputs * config.max_nodes;
    std::size_t total = linear_size(in, config.mlp_width) + linear_size(config.mlp_width, out);
    total += static_cast<std::size_t>(config.mlp_layers - 2) * linear_size(config.mlp_width, config.mlp_width);
    return total;
  }
  const int d = config.d;
  return linear_size(kModelInputs, d) + linear_size(d, d) +
         2 * static_cast<std::size_t>(config.stm_blocks) * lstm_size(d, d) +
         linear_size(d, kModelOutputs);
}

template <typename S>
Model<S>::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  std::size_t offset = 0;
  auto add = [&](typename Layer::Kind kind, int in, int out) {
    layers_.push_back({kind, in, out, offset});
    offset += kind == Layer::Linear ? linear_size(in, out) : lstm_size(in, out);
  };
  if (config_.variant == Variant::SpatioMlp) {
    const int w = config_.mlp_width;
    add(Layer::Linear, kModelInputs * config_.max_nodes, w);
    for (int k = 0; k < config_.mlp_layers - 2; ++k) add(Layer::Linear, w, w);
    add(Layer::Linear, w, kModelOutputs * config_.max_nodes);
  } else {
    const int d = config_.d;
    add(Layer::Linear, kModelInputs, d);
    add(Layer::Linear, d, d);
    for (int b = 0; b < config_.stm_blocks; ++b) {
      add(Layer::Temporal, d, d);
      add(config_.variant == Variant::TempoLstm ? Layer::Temporal : Layer::Spatial, d, d);
    }
    add(Layer::Linear, d, kModelOutputs);
  }
  params_.assign(offset, S(0));
  initialize();
}

template <typename S>
void Model<S>::initialize() {
  // Uniform(-1/sqrt(fan), 1/sqrt(fan)); fan is the input width for linear
  // layers and the hidden width for recurrent ones. Values are drawn in
  // double so float and double models start identical.
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Layer& layer = layers_[k];
    const CounterRng rng(config_.seed, k);
    const double fan = layer.kind == Layer::Linear ? layer.in : layer.out;
    const double bound = 1.0 / std::sqrt(fan);
    const std::size_t n = layer.kind == Layer::Linear ? linear_size(layer.in, layer.out)
                                                      : lstm_size(layer.in, layer.out);
    for (std::size_t i = 0; i < n; ++i) {
      params_[layer.offset + i] = static_cast<S>(rng.uniform(i, -bound, bound));
    }
  }
  if (config_.variant != Variant::SpatioMlp) {
    for (int c = 0; c < kModelOutputs; ++c) params_[head_bias_offset() + c] = S(0);
  }
}

template <typename S>
std::size_t Model<S>::head_bias_offset() const {
  const Layer& last = layers_.back();
  return last.offset + static_cast<std::size_t>(last.in) * last.out;
}

template <typename S>
Mat<S> Model<S>::forward_sample(const Mat<S>& input, int nodes, int frames,
                                ForwardTrace<S>* trace) const {
  if (input.rows() != kModelInputs || input.cols() != static_cast<Eigen::Index>(nodes) * frames ||
      nodes < 1 || frames < 1) {
    throw ContractError("model input must be 5 x (N T) with N, T >= 1");
  }
  const S* p = params_.data();
  ForwardTrace<S> local;
  ForwardTrace<S>& tr = trace ? *trace : local;
  tr.N = nodes;
  tr.T = frames;
  tr.pre.assign(layers_.size(), {});
  tr.post.assign(layers_.size(), {});
  tr.lstm.assign(layers_.size(), {});
  const bool mlp = config_.variant == Variant::SpatioMlp;

  Mat<S> x;
  if (mlp) {
    if (nodes > config_.max_nodes) {
      throw ContractError("Spatio-MLP supports at most " + std::to_string(config_.max_nodes) +
                          " nodes, sample has " + std::to_string(nodes));
    }
    x = Mat<S>::Zero(kModelInputs * config_.max_nodes, frames);
    for (int n = 0; n < nodes; ++n) {
      for (int t = 0; t < frames; ++t) {
        x.col(t).segment(n * kModelInputs, kModelInputs) = input.col(static_cast<Eigen::Index>(n) * frames + t);
      }
    }
  } else {
    x = input;
  }
  tr.input = input;

  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Layer& layer = layers_[k];
    const S* lp = p + layer.offset;
    switch (layer.kind) {
      case Layer::Linear: {
        const RowMap<S> w(lp, layer.out, layer.in);
        const VecMap<S> b(lp + static_cast<std::size_t>(layer.out) * layer.in, layer.out);
        tr.post[k] = std::move(x);
        Mat<S> z = w * tr.post[k];
        z.colwise() += b;
        const bool act = mlp ? k + 1 < layers_.size() : k == 0;
        if (act) {
          tr.pre[k] = z;
          leaky(z);
        }
        x = std::move(z);
        break;
      }
      case Layer::Temporal:
        x = time_to_node_major(lstm_forward(lp, layer.in, layer.out,
                                            node_to_time_major(x, nodes, frames), frames, nodes,
                                            tr.lstm[k]),
                               nodes, frames);
        break;
      case Layer::Spatial:
        x = lstm_forward(lp, layer.in, layer.out, std::move(x), nodes, frames, tr.lstm[k]);
        break;
    }
  }

  if (!mlp) return x;
  Mat<S> out(kModelOutputs, static_cast<Eigen::Index>(nodes) * frames);
  for (int n = 0; n < nodes; ++n) {
    for (int t = 0; t < frames; ++t) {
      out.col(static_cast<Eigen::Index>(n) * frames + t) = x.col(t).segment(n * kModelOutputs, kModelOutputs);
    }
  }
  return out;
}

template <typename S>
void Model<S>::backward_sample(const ForwardTrace<S>& tr, const Mat<S>& d_output,
                               std::vector<S>& grad) const {
  const int nodes = tr.N, frames = tr.T;
  if (grad.size() != params_.size()) grad.assign(params_.size(), S(0));
  if (d_output.rows() != kModelOutputs || d_output.cols() != static_cast<Eigen::Index>(nodes) * frames) {
    throw ContractError("output gradient must be 3 x (N T)");
  }
  const bool mlp = config_.variant == Variant::SpatioMlp;
  Mat<S> dx;
  if (mlp) {
    dx = Mat<S>::Zero(kModelOutputs * config_.max_nodes, frames);
    for (int n = 0; n < nodes; ++n) {
      for (int t = 0; t < frames; ++t) {
        dx.col(t).segment(n * kModelOutputs, kModelOutputs) = d_output.col(static_cast<Eigen::Index>(n) * frames + t);
      }
    }
  } else {
    dx = d_output;
  }

  for (std::size_t k = layers_.size(); k-- > 0;) {
    const Layer& layer = layers_[k];
    const S* lp = params_.data() + layer.offset;
    S* gp = grad.data() + layer.offset;
    switch (layer.kind) {
      case Layer::Linear: {
        const bool act = mlp ? k + 1 < layers_.size() : k == 0;
        if (act) {
          const Mat<S>& z = tr.pre[k];
          dx = dx.binaryExpr(z, [](S g, S v) { return v > S(0) ? g : S(kLeakySlope) * g; });
        }
        const RowMap<S> w(lp, layer.out, layer.in);
        RowMapMut<S> gw(gp, layer.out, layer.in);
        VecMapMut<S> gb(gp + static_cast<std::size_t>(layer.out) * layer.in, layer.out);
        gw.noalias() += dx * tr.post[k].transpose();
        gb += dx.rowwise().sum();
        if (k > 0) dx = w.transpose() * dx;
        break;
      }
      case Layer::Temporal: {
        const Mat<S> dt = node_to_time_major(dx, nodes, frames);
        dx = time_to_node_major(lstm_backward(lp, gp, layer.in, layer.out, tr.lstm[k], dt), nodes,
                                frames);
        break;
      }
      case Layer::Spatial:
        dx = lstm_backward(lp, gp, layer.in, layer.out, tr.lstm[k], dx);
        break;
    }
  }
}

template <typename S>
Tensor4<S> Model<S>::forward(const Tensor4<S>& input) const {
  if (input.C != kModelInputs) throw ContractError("model input must have 5 channels");
  Tensor4<S> out(input.B, input.N, input.T, kModelOutputs);
  for (int b = 0; b < input.B; ++b) out.slice(b) = forward_sample(input.slice(b), input.N, input.T);
  return out;
}

template <typename S>
Tensor4<S> Model<S>::encode(const Tensor4<S>& input) const {
  if (config_.variant == Variant::SpatioMlp) throw ContractError("Spatio-MLP has no encoder");
  if (input.C != kModelInputs) throw ContractError("encoder input must have 5 channels");
  Tensor4<S> out(input.B, input.N, input.T, config_.d);
  for (int b = 0; b < input.B; ++b) {
    Mat<S> x = input.slice(b);
    for (std::size_t k = 0; k < 2; ++k) {
      const Layer& layer = layers_[k];
      const S* lp = params_.data() + layer.offset;
      const RowMap<S> w(lp, layer.out, layer.in);
      Mat<S> z = w * x;
      z.colwise() += VecMap<S>(lp + static_cast<std::size_t>(layer.out) * layer.in, layer.out);
      if (k == 0) leaky(z);
      x = std::move(z);
    }
    out.slice(b) = x;
  }
  return out;
}

template <typename S>
Tensor4<S> Model<S>::stm_forward(const Tensor4<S>& features, int block) const {
  if (config_.variant == Variant::SpatioMlp || block < 0 || block >= config_.stm_blocks) {
    throw ContractError("no recurrent block " + std::to_string(block));
  }
  if (features.C != config_.d) throw ContractError("block input width must equal d");
  Tensor4<S> out = temporal_forward(features, block);
  const Layer& layer = layers_[2 + 2 * static_cast<std::size_t>(block) + 1];
  const S* lp = params_.data() + layer.offset;
  for (int b = 0; b < out.B; ++b) {
    LstmTrace<S> tr;
    Mat<S> x = out.slice(b);
    if (layer.kind == Layer::Spatial) {
      out.slice(b) = lstm_forward(lp, layer.in, layer.out, x, out.N, out.T, tr);
    } else {
      const Mat<S> tm = node_to_time_major(x, out.N, out.T);
      out.slice(b) = time_to_node_major(lstm_forward(lp, layer.in, layer.out, tm, out.T, out.N, tr),
                                        out.N, out.T);
    }
  }
  return out;
}

template <typename S>
Tensor4<S> Model<S>::temporal_forward(const Tensor4<S>& features, int block) const {
  if (config_.variant == Variant::SpatioMlp || block < 0 || block >= config_.stm_blocks) {
    throw ContractError("no recurrent block " + std::to_string(block));
  }
  if (features.C != config_.d) throw ContractError("block input width must equal d");
  const Layer& layer = layers_[2 + 2 * static_cast<std::size_t>(block)];
  const S* lp = params_.data() + layer.offset;
  Tensor4<S> out(features.B, features.N, features.T, config_.d);
  for (int b = 0; b < features.B; ++b) {
    LstmTrace<S> tr;
    const Mat<S> tm = node_to_time_major(Mat<S>(features.slice(b)), features.N, features.T);
    out.slice(b) = time_to_node_major(
        lstm_forward(lp, layer.in, layer.out, tm, features.T, features.N, tr), features.N, features.T);
  }
  return out;
}

template <typename S>
Tensor4<S> Model<S>::decode(const Tensor4<S>& features) const {
  if (config_.variant == Variant::SpatioMlp) throw ContractError("Spatio-MLP has no decoder head");
  if (features.C != config_.d) throw ContractError("decoder input width must equal d");
  const Layer& layer = layers_.back();
  const S* lp = params_.data() + layer.offset;
  const RowMap<S> w(lp, layer.out, layer.in);
  const VecMap<S> bias(lp + static_cast<std::size_t>(layer.out) * layer.in, layer.out);
  Tensor4<S> out(features.B, features.N, features.T, kModelOutputs);
  for (int b = 0; b < features.B; ++b) {
    Mat<S> z = w * features.slice(b);
    z.colwise() += bias;
    out.slice(b) = z;
  }
  return out;
}

template class Model<float>;
template class Model<double>;

}  // namespace stressfield
