#include "stressfield/losses.hpp"

#include <cmath>

#include "stressfield/errors.hpp"

namespace stressfield {

void LossWeights::validate() const {
  if (!(data >= 0.0 && pde >= 0.0 && bc >= 0.0)) {
    throw ConfigurationError("loss weights must be nonnegative");
  }
  if (data == 0.0 && pde == 0.0 && bc == 0.0) {
    throw ConfigurationError("at least one loss weight must be positive");
  }
}

double total_loss(const LossParts& parts, const LossWeights& weights) {
  weights.validate();
  return weights.data * parts.data + weights.pde * parts.pde + weights.bc * parts.bc;
}

double pde_scale(const Material& material) { return material.density * kGravity; }

double loss_data(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw ContractError("loss_data: prediction and truth shapes differ");
  }
  if (pred.size() == 0) throw ContractError("loss_data: empty fields");
  return (pred - truth).cwiseAbs().mean();
}

double loss_bc(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth,
               std::span<const std::uint8_t> bc_flag,
               const std::array<double, kStressChannels>& zero_level) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw ContractError("loss_bc: prediction and truth shapes differ");
  }
  const Eigen::Index n = pred.rows() / kStressChannels;
  if (n * kStressChannels != pred.rows() || static_cast<Eigen::Index>(bc_flag.size()) != n ||
      pred.cols() == 0) {
    throw ContractError("loss_bc: expected 3N x T fields and N flags");
  }
  double initial = 0.0;
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    initial += std::abs(pred(r, 0) - zero_level[static_cast<std::size_t>(r % kStressChannels)]);
  }
  initial /= static_cast<double>(pred.rows());

  double pinned = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!bc_flag[static_cast<std::size_t>(i)]) continue;
    pinned += (pred.middleRows(3 * i, 3) - truth.middleRows(3 * i, 3)).cwiseAbs().sum();
    count += 3 * pred.cols();
  }
  return initial + (count > 0 ? pinned / static_cast<double>(count) : 0.0);
}

double residual_magnitude(const Eigen::MatrixXd& stress, const SampleRecord& sample,
                          const GridOperator& op, const Material& material) {
  const Eigen::Index n = sample.num_nodes();
  if (stress.rows() != 3 * n || op.num_nodes() != n) {
    throw ContractError("residual: stress must be 3N x T on the operator's mesh");
  }
  const Eigen::Index t = stress.cols();
  Eigen::MatrixXd sxx(n, t), syy(n, t), sxy(n, t);
  for (Eigen::Index i = 0; i < n; ++i) {
    sxx.row(i) = stress.row(3 * i);
    syy.row(i) = stress.row(3 * i + 1);
    sxy.row(i) = stress.row(3 * i + 2);
  }
  const ResidualField r = pde_residual(sxx, syy, sxy, body_force_density(sample, material.thickness),
                                       sample.acceleration, material.density, op);
  double total = 0.0;
  for (Eigen::Index cell = 0; cell < op.cells(); ++cell) {
    if (!op.unmasked(cell)) continue;
    total += r.rx.row(cell).cwiseAbs().sum() + r.ry.row(cell).cwiseAbs().sum();
  }
  return total / (2.0 * static_cast<double>(op.unmasked_count()) * static_cast<double>(t));
}

double loss_pde(const Eigen::MatrixXd& pred_normalized, const SampleRecord& sample,
                const GridOperator& op, const NormalizationSpec& norm, const Material& material) {
  Eigen::MatrixXd stress = pred_normalized;
  for (Eigen::Index r = 0; r < stress.rows(); ++r) {
    const int c = static_cast<int>(r % kStressChannels);
    for (Eigen::Index k = 0; k < stress.cols(); ++k) stress(r, k) = norm.invert(stress(r, k), c);
  }
  return residual_magnitude(stress, sample, op, material) / pde_scale(material);
}

double mae(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  return loss_data(pred, truth);
}

double mrpe(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  const double err = mae(pred, truth);
  const double denom = std::max(pred.cwiseAbs().maxCoeff(), truth.cwiseAbs().maxCoeff());
  if (!(denom > 0.0)) throw ContractError("mrpe: both fields are identically zero");
  return 100.0 * err / denom;
}

Eigen::MatrixXd to_stress_rows(const Eigen::MatrixXd& node_major, int nodes, int frames) {
  if (node_major.rows() != kStressChannels ||
      node_major.cols() != static_cast<Eigen::Index>(nodes) * frames) {
    throw ContractError("expected a 3 x (N T) field");
  }
  Eigen::MatrixXd out(3 * nodes, frames);
  for (int n = 0; n < nodes; ++n) {
    for (int t = 0; t < frames; ++t) {
      out.block(3 * n, t, 3, 1) = node_major.col(static_cast<Eigen::Index>(n) * frames + t);
    }
  }
  return out;
}

Eigen::MatrixXd to_node_major(const Eigen::MatrixXd& stress_rows) {
  const Eigen::Index nodes = stress_rows.rows() / kStressChannels;
  const Eigen::Index frames = stress_rows.cols();
  Eigen::MatrixXd out(kStressChannels, nodes * frames);
  for (Eigen::Index n = 0; n < nodes; ++n) {
    for (Eigen::Index t = 0; t < frames; ++t) {
      out.col(n * frames + t) = stress_rows.block(3 * n, t, 3, 1);
    }
  }
  return out;
}

template <typename S>
Mat<S> model_input(const SampleRecord& sample) {
  const InputMatrix& in = sample.input;
  const Eigen::Index n = in.num_nodes(), t = in.num_frames();
  Mat<S> x(kModelInputs, n * t);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < t; ++k) {
      auto col = x.col(i * t + k);
      col(0) = static_cast<S>(in.coords(i, 0));
      col(1) = static_cast<S>(in.coords(i, 1));
      col(2) = static_cast<S>(in.bc_flag[static_cast<std::size_t>(i)]);
      col(3) = static_cast<S>(kForceInputScale * in.forces(2 * i, k));
      col(4) = static_cast<S>(kForceInputScale * in.forces(2 * i + 1, k));
    }
  }
  return x;
}

template <typename S>
TrainingSample<S> make_training_sample(const SampleRecord& sample, const NormalizationSpec& norm,
                                       const Material& material, const GridOptions* grid) {
  norm.validate();
  TrainingSample<S> ts;
  ts.key = sample.key;
  ts.nodes = static_cast<int>(sample.num_nodes());
  ts.frames = static_cast<int>(sample.input.num_frames());
  ts.input = model_input<S>(sample);
  ts.target.resize(kStressChannels, static_cast<Eigen::Index>(ts.nodes) * ts.frames);
  for (int n = 0; n < ts.nodes; ++n) {
    for (int t = 0; t < ts.frames; ++t) {
      for (int c = 0; c < kStressChannels; ++c) {
        ts.target(c, static_cast<Eigen::Index>(n) * ts.frames + t) =
            static_cast<S>(norm.apply(sample.stress(3 * n + c, t), c));
      }
    }
    if (sample.input.bc_flag[static_cast<std::size_t>(n)]) ts.constrained.push_back(n);
  }
  for (int c = 0; c < kStressChannels; ++c) {
    ts.zero_level[static_cast<std::size_t>(c)] = static_cast<S>(norm.apply(0.0, c));
    ts.scale[static_cast<std::size_t>(c)] = static_cast<S>(norm.scale(c));
    ts.offset[static_cast<std::size_t>(c)] = static_cast<S>(norm.min[c] + norm.scale(c));
  }
  if (grid == nullptr) return ts;

  const GridOperator op = build_grid_operator(sample.mesh, *grid);
  const RowSparse dx = op.ddx() * op.weights();
  const RowSparse dy = op.ddy() * op.weights();
  const Eigen::MatrixXd b = body_force_density(sample, material.thickness);
  const Eigen::Index n = ts.nodes, t = ts.frames;
  Eigen::MatrixXd fx(n, t), fy(n, t);
  for (Eigen::Index i = 0; i < n; ++i) {
    fx.row(i) = b.row(2 * i) - material.density * sample.acceleration.row(2 * i);
    fy.row(i) = b.row(2 * i + 1) - material.density * sample.acceleration.row(2 * i + 1);
  }
  const Eigen::MatrixXd lfx = op.lift(fx), lfy = op.lift(fy);
  const Eigen::Index u = op.unmasked_count();
  ts.ax.setZero(u, n);
  ts.ay.setZero(u, n);
  ts.fx.resize(u, t);
  ts.fy.resize(u, t);
  Eigen::Index k = 0;
  for (Eigen::Index cell = 0; cell < op.cells(); ++cell) {
    if (!op.unmasked(cell)) continue;
    for (RowSparse::InnerIterator it(dx, cell); it; ++it) ts.ax(k, it.col()) = static_cast<S>(it.value());
    for (RowSparse::InnerIterator it(dy, cell); it; ++it) ts.ay(k, it.col()) = static_cast<S>(it.value());
    ts.fx.row(k) = lfx.row(cell).cast<S>();
    ts.fy.row(k) = lfy.row(cell).cast<S>();
    ++k;
  }
  ts.pde_norm = static_cast<S>(1.0 / pde_scale(material));
  ts.has_pde = true;
  return ts;
}

template <typename S>
LossParts sample_losses(const Mat<S>& pred, const TrainingSample<S>& ts, const LossWeights& w,
                        Mat<S>* d_pred, S grad_scale) {
  const Eigen::Index nt = static_cast<Eigen::Index>(ts.nodes) * ts.frames;
  if (pred.rows() != kStressChannels || pred.cols() != nt) {
    throw ContractError("prediction must be 3 x (N T)");
  }
  LossParts parts;
  const Mat<S> diff = pred - ts.target;
  const double count = static_cast<double>(pred.size());
  parts.data = static_cast<double>(diff.cwiseAbs().template cast<double>().sum()) / count;
  if (d_pred) {
    const S k = grad_scale * static_cast<S>(w.data / count);
    *d_pred = diff.unaryExpr([k](S v) { return v > S(0) ? k : (v < S(0) ? -k : S(0)); });
  }
  auto sgn = [](S v) { return v > S(0) ? S(1) : (v < S(0) ? S(-1) : S(0)); };

  // Initial condition at frame 0, then pinned boundary nodes.
  {
    const double k0 = 1.0 / (kStressChannels * static_cast<double>(ts.nodes));
    double initial = 0.0;
    for (int n = 0; n < ts.nodes; ++n) {
      const Eigen::Index col = static_cast<Eigen::Index>(n) * ts.frames;
      for (int c = 0; c < kStressChannels; ++c) {
        const S e = pred(c, col) - ts.zero_level[static_cast<std::size_t>(c)];
        initial += std::abs(static_cast<double>(e));
        if (d_pred) (*d_pred)(c, col) += grad_scale * static_cast<S>(w.bc * k0) * sgn(e);
      }
    }
    double pinned = 0.0;
    if (!ts.constrained.empty()) {
      const double k1 = 1.0 / (kStressChannels * static_cast<double>(ts.constrained.size()) * ts.frames);
      for (int n : ts.constrained) {
        const auto block = diff.middleCols(static_cast<Eigen::Index>(n) * ts.frames, ts.frames);
        pinned += static_cast<double>(block.cwiseAbs().template cast<double>().sum());
        if (d_pred) {
          const S k = grad_scale * static_cast<S>(w.bc * k1);
          d_pred->middleCols(static_cast<Eigen::Index>(n) * ts.frames, ts.frames) +=
              block.unaryExpr([k, sgn](S v) { return k * sgn(v); });
        }
      }
      pinned *= k1;
    }
    parts.bc = initial * k0 + pinned;
  }

  if (!ts.has_pde) return parts;
  const int nn = ts.nodes, tt = ts.frames;
  // Node-major row c of pred, viewed as T x N, is the transposed stress block.
  std::array<Mat<S>, kStressChannels> sig;
  for (int c = 0; c < kStressChannels; ++c) {
    Mat<S> row = pred.row(c);
    Eigen::Map<Mat<S>> tn(row.data(), tt, nn);
    sig[static_cast<std::size_t>(c)] =
        (tn.transpose().array() * ts.scale[static_cast<std::size_t>(c)] + ts.offset[static_cast<std::size_t>(c)]).matrix();
  }
  Mat<S> rx = ts.fx, ry = ts.fy;
  rx.noalias() += ts.ax * sig[0];
  rx.noalias() += ts.ay * sig[2];
  ry.noalias() += ts.ay * sig[1];
  ry.noalias() += ts.ax * sig[2];
  const double cells = 2.0 * static_cast<double>(rx.rows()) * tt;
  parts.pde = (static_cast<double>(rx.cwiseAbs().template cast<double>().sum()) +
               static_cast<double>(ry.cwiseAbs().template cast<double>().sum())) /
              cells * static_cast<double>(ts.pde_norm);
  if (d_pred && w.pde != 0.0) {
    const S k = grad_scale * static_cast<S>(w.pde / cells) * ts.pde_norm;
    const Mat<S> gx = rx.unaryExpr([k, sgn](S v) { return k * sgn(v); });
    const Mat<S> gy = ry.unaryExpr([k, sgn](S v) { return k * sgn(v); });
    std::array<Mat<S>, kStressChannels> ds;
    ds[0].noalias() = ts.ax.transpose() * gx;
    ds[1].noalias() = ts.ay.transpose() * gy;
    ds[2].noalias() = ts.ay.transpose() * gx;
    ds[2].noalias() += ts.ax.transpose() * gy;
    for (int c = 0; c < kStressChannels; ++c) {
      const Mat<S> dt = ds[static_cast<std::size_t>(c)].transpose() * ts.scale[static_cast<std::size_t>(c)];
      d_pred->row(c) += Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(dt.data(), dt.size());
    }
  }
  return parts;
}

template struct TrainingSample<float>;
template struct TrainingSample<double>;
template Mat<float> model_input<float>(const SampleRecord&);
template Mat<double> model_input<double>(const SampleRecord&);
template TrainingSample<float> make_training_sample<float>(const SampleRecord&, const NormalizationSpec&,
                                                           const Material&, const GridOptions*);
template TrainingSample<double> make_training_sample<double>(const SampleRecord&, const NormalizationSpec&,
                                                             const Material&, const GridOptions*);
template LossParts sample_losses<float>(const Mat<float>&, const TrainingSample<float>&,
                                        const LossWeights&, Mat<float>*, float);
template LossParts sample_losses<double>(const Mat<double>&, const TrainingSample<double>&,
                                         const LossWeights&, Mat<double>*, double);

}  // namespace stressfield
