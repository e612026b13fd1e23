#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace stressfield {

enum class Variant : std::uint8_t { SpatiotempoLstm, TempoLstm, SpatioMlp };

std::string to_string(Variant variant);
Variant parse_variant(const std::string& name);

inline constexpr int kModelInputs = 5;
inline constexpr int kModelOutputs = 3;
inline constexpr double kLeakySlope = 0.01;

struct ModelConfig {
  Variant variant = Variant::SpatiotempoLstm;
  int d = 64;           // hidden width of the recurrent variants
  int stm_blocks = 3;   // each block holds two recurrent layers
  int mlp_width = 172;  // Spatio-MLP hidden width
  int mlp_layers = 6;
  int max_nodes = 512;  // Spatio-MLP input is zero-padded to this many nodes
  std::uint64_t seed = 0;

  void validate() const;
};

/// Exact number of trainable scalars.
std::size_t param_count(const ModelConfig& config);

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

/// Dense B x N x T x C tensor, C fastest. Batch slice b is a C x (N T)
/// column-major matrix with column n * T + t.
template <typename S>
struct Tensor4 {
  int B = 0, N = 0, T = 0, C = 0;
  std::vector<S> data;

  Tensor4() = default;
  Tensor4(int b, int n, int t, int c)
      : B(b), N(n), T(t), C(c), data(static_cast<std::size_t>(b) * n * t * c, S(0)) {}

  S& operator()(int b, int n, int t, int c) {
    return data[((static_cast<std::size_t>(b) * N + n) * T + t) * C + c];
  }
  S operator()(int b, int n, int t, int c) const {
    return data[((static_cast<std::size_t>(b) * N + n) * T + t) * C + c];
  }
  Eigen::Map<Mat<S>> slice(int b) {
    return {data.data() + static_cast<std::size_t>(b) * N * T * C, C,
            static_cast<Eigen::Index>(N) * T};
  }
  Eigen::Map<const Mat<S>> slice(int b) const {
    return {data.data() + static_cast<std::size_t>(b) * N * T * C, C,
            static_cast<Eigen::Index>(N) * T};
  }
};

/// Activations kept by forward_sample for the backward pass.
template <typename S>
struct LstmTrace {
  Mat<S> input;   // in x (L Bs), step-major
  Mat<S> gates;   // 4h x (L Bs), activated i, f, g, o
  Mat<S> cell;    // h x (L Bs)
  Mat<S> hidden;  // h x (L Bs)
  int length = 0;
  int batch = 0;
};

template <typename S>
struct ForwardTrace {
  int N = 0, T = 0;
  Mat<S> input;
  std::vector<Mat<S>> pre;   // pre-activations of feed-forward layers
  std::vector<Mat<S>> post;  // inputs of feed-forward layers
  std::vector<LstmTrace<S>> lstm;
};

/// Encoder MLP -> recurrent stack -> linear head, or the per-frame MLP
/// baseline. Parameters live in one flat vector in this order:
///   recurrent variants: encoder layer 1 (W, b), encoder layer 2 (W, b),
///     recurrent layers in application order (W_ih, W_hh, b_ih, b_hh),
///     head (W, b);
///   Spatio-MLP: layers 1..L (W, b).
/// Every W is row-major [out][in]; LSTM gate order is i, f, g, o.
template <typename S>
class Model {
 public:
  explicit Model(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  std::size_t size() const { return params_.size(); }
  std::vector<S>& parameters() { return params_; }
  const std::vector<S>& parameters() const { return params_; }

  /// One sample: input 5 x (N T) node-major, returns 3 x (N T).
  Mat<S> forward_sample(const Mat<S>& input, int nodes, int frames,
                        ForwardTrace<S>* trace = nullptr) const;
  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
  void backward_sample(const ForwardTrace<S>& trace, const Mat<S>& d_output,
                       std::vector<S>& grad) const;

  Tensor4<S> forward(const Tensor4<S>& input) const;

  // Stage-level access for the recurrent variants.
  Tensor4<S> encode(const Tensor4<S>& input) const;
  /// Block `block` of the stack: temporal recurrence, then spatial (the
  /// spatial stage is skipped for Tempo-LSTM, whose blocks are two temporal
  /// layers).
  Tensor4<S> stm_forward(const Tensor4<S>& features, int block) const;
  /// Only the first (temporal) recurrence of block `block`.
  Tensor4<S> temporal_forward(const Tensor4<S>& features, int block) const;
  Tensor4<S> decode(const Tensor4<S>& features) const;

  /// Offset of the head bias, for tests that zero it.
  std::size_t head_bias_offset() const;

 private:
  struct Layer {
    enum Kind { Linear, Temporal, Spatial } kind;
    int in;
    int out;
    std::size_t offset;
  };

  void initialize();

  ModelConfig config_;
  std::vector<Layer> layers_;
  std::vector<S> params_;
};

extern template class Model<float>;
extern template class Model<double>;

}  // namespace stressfield
