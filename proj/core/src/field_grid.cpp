#include "stressfield/field_grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>

#include "stressfield/errors.hpp"

namespace stressfield {

namespace {

// Builds the G^2 x G^2 derivative operator along one axis.
RowSparse difference_operator(int g, double h, const std::vector<std::uint8_t>& mask,
                              bool along_x) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(2) * g * g);
  auto id = [g](int i, int j) { return static_cast<Eigen::Index>(j) * g + i; };
  auto open = [&](int i, int j) {
    return i >= 0 && j >= 0 && i < g && j < g && mask[static_cast<std::size_t>(id(i, j))];
  };
  for (int j = 0; j < g; ++j) {
    for (int i = 0; i < g; ++i) {
      if (!open(i, j)) continue;
      const int di = along_x ? 1 : 0;
      const int dj = along_x ? 0 : 1;
      const bool fwd = open(i + di, j + dj);
      const bool back = open(i - di, j - dj);
      const Eigen::Index row = id(i, j);
      if (fwd && back) {
        entries.emplace_back(row, id(i + di, j + dj), 0.5 / h);
        entries.emplace_back(row, id(i - di, j - dj), -0.5 / h);
      } else if (fwd) {
        entries.emplace_back(row, id(i + di, j + dj), 1.0 / h);
        entries.emplace_back(row, row, -1.0 / h);
      } else if (back) {
        entries.emplace_back(row, row, 1.0 / h);
        entries.emplace_back(row, id(i - di, j - dj), -1.0 / h);
      }
    }
  }
  RowSparse d(static_cast<Eigen::Index>(g) * g, static_cast<Eigen::Index>(g) * g);
  d.setFromTriplets(entries.begin(), entries.end());
  return d;
}

}  // namespace

Eigen::MatrixXd GridOperator::lift(const Eigen::MatrixXd& nodal) const {
  if (nodal.rows() != num_nodes()) {
    throw ContractError("lift: nodal field has " + std::to_string(nodal.rows()) +
                        " rows, operator expects " + std::to_string(num_nodes()));
  }
  return weights_ * nodal;
}

GridOperator build_grid_operator(std::span<const Point2> nodes, const GridOptions& options) {
  if (!(options.bandwidth > 0.0)) throw ConfigurationError("bandwidth must be positive");
  if (options.size < 2) throw ConfigurationError("grid size must be at least 2");
  if (nodes.empty()) throw ConfigurationError("grid operator needs at least one node");
  if (options.cutoff < options.mask_radius) {
    throw ConfigurationError("kernel cutoff must not be smaller than the mask radius");
  }

  GridOperator op;
  const int g = options.size;
  op.size_ = g;
  op.bandwidth_ = options.bandwidth;
  double xmin = nodes[0].x, xmax = xmin, ymin = nodes[0].y, ymax = ymin;
  for (const auto& p : nodes) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  op.x0_ = xmin;
  op.y0_ = ymin;
  op.hx_ = (xmax - xmin) / (g - 1);
  op.hy_ = (ymax - ymin) / (g - 1);
  if (!(op.hx_ > 0.0 && op.hy_ > 0.0)) {
    throw ConfigurationError("nodes do not span a two-dimensional bounding box");
  }

  const double bw = options.bandwidth;
  const double inv2 = 1.0 / (2.0 * bw * bw);
  const double cut2 = std::pow(options.cutoff * bw, 2);
  const double mask2 = std::pow(options.mask_radius * bw, 2);
  const auto n = static_cast<Eigen::Index>(nodes.size());

  // Bucket nodes on a coarse lattice with cell size = cutoff radius.
  const double bucket = options.cutoff * bw;
  const int bx = std::max(1, static_cast<int>(std::ceil((xmax - xmin) / bucket)) + 1);
  const int by = std::max(1, static_cast<int>(std::ceil((ymax - ymin) / bucket)) + 1);
  std::vector<std::vector<Eigen::Index>> buckets(static_cast<std::size_t>(bx) * by);
  auto bucket_of = [&](double x, double y) {
    const int i = std::clamp(static_cast<int>((x - xmin) / bucket), 0, bx - 1);
    const int j = std::clamp(static_cast<int>((y - ymin) / bucket), 0, by - 1);
    return std::pair{i, j};
  };
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto [i, j] = bucket_of(nodes[k].x, nodes[k].y);
    buckets[static_cast<std::size_t>(j) * bx + i].push_back(k);
  }

  op.mask_.assign(static_cast<std::size_t>(g) * g, 0);
  std::vector<Eigen::Triplet<double>> entries;
  std::vector<std::pair<Eigen::Index, double>> row;
  for (int j = 0; j < g; ++j) {
    for (int i = 0; i < g; ++i) {
      const double px = op.cell_x(i), py = op.cell_y(j);
      const auto [ci, cj] = bucket_of(px, py);
      row.clear();
      double nearest = std::numeric_limits<double>::infinity();
      for (int bj = std::max(0, cj - 1); bj <= std::min(by - 1, cj + 1); ++bj) {
        for (int bi = std::max(0, ci - 1); bi <= std::min(bx - 1, ci + 1); ++bi) {
          for (Eigen::Index k : buckets[static_cast<std::size_t>(bj) * bx + bi]) {
            const double dx = nodes[k].x - px, dy = nodes[k].y - py;
            const double d2 = dx * dx + dy * dy;
            nearest = std::min(nearest, d2);
            if (d2 <= cut2) row.emplace_back(k, std::exp(-d2 * inv2));
          }
        }
      }
      if (nearest > mask2) continue;
      const Eigen::Index cell = op.index(i, j);
      op.mask_[static_cast<std::size_t>(cell)] = 1;
      ++op.unmasked_count_;
      std::sort(row.begin(), row.end());
      double total = 0.0;
      for (const auto& [k, w] : row) total += w;
      for (const auto& [k, w] : row) entries.emplace_back(cell, k, w / total);
    }
  }
  if (op.unmasked_count_ == 0) {
    throw ConfigurationError("every grid cell is masked; bandwidth too small for the grid");
  }
  op.weights_.resize(op.cells(), n);
  op.weights_.setFromTriplets(entries.begin(), entries.end());
  op.ddx_ = difference_operator(g, op.hx_, op.mask_, true);
  op.ddy_ = difference_operator(g, op.hy_, op.mask_, false);
  return op;
}

double default_bandwidth(const Mesh& mesh) { return 1.5 * median_edge_length(mesh); }

GridOperator build_grid_operator(const Mesh& mesh, const GridOptions& options) {
  GridOptions opt = options;
  if (!(opt.bandwidth > 0.0)) opt.bandwidth = default_bandwidth(mesh);
  return build_grid_operator(std::span<const Point2>(mesh.nodes), opt);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> grid_gradient(const Eigen::VectorXd& field,
                                                          const GridOperator& op) {
  if (field.size() != op.cells()) throw ContractError("grid field size mismatch");
  return {op.ddx() * field, op.ddy() * field};
}

ResidualField pde_residual(const Eigen::MatrixXd& sxx, const Eigen::MatrixXd& syy,
                           const Eigen::MatrixXd& sxy, const Eigen::MatrixXd& body_force,
                           const Eigen::MatrixXd& acceleration, double density,
                           const GridOperator& op) {
  const Eigen::Index n = op.num_nodes();
  const Eigen::Index t = sxx.cols();
  if (sxx.rows() != n || syy.rows() != n || sxy.rows() != n || syy.cols() != t ||
      sxy.cols() != t) {
    throw ContractError("pde_residual: stress blocks must be N x T on the operator's nodes");
  }
  if (body_force.rows() != 2 * n || acceleration.rows() != 2 * n || body_force.cols() != t ||
      acceleration.cols() != t) {
    throw ContractError("pde_residual: body force and acceleration must be 2N x T");
  }
  Eigen::MatrixXd fx(n, t), fy(n, t);
  for (Eigen::Index i = 0; i < n; ++i) {
    fx.row(i) = body_force.row(2 * i) - density * acceleration.row(2 * i);
    fy.row(i) = body_force.row(2 * i + 1) - density * acceleration.row(2 * i + 1);
  }
  const Eigen::MatrixXd gxx = op.lift(sxx);
  const Eigen::MatrixXd gyy = op.lift(syy);
  const Eigen::MatrixXd gxy = op.lift(sxy);
  ResidualField r;
  r.rx = op.ddx() * gxx + op.ddy() * gxy + op.lift(fx);
  r.ry = op.ddy() * gyy + op.ddx() * gxy + op.lift(fy);
  return r;
}

RowSparse residual_jacobian(const GridOperator& op) {
  const RowSparse ax = op.ddx() * op.weights();
  const RowSparse ay = op.ddy() * op.weights();
  const Eigen::Index c = op.cells();
  const Eigen::Index n = op.num_nodes();
  std::vector<Eigen::Triplet<double>> entries;
  auto put = [&](const RowSparse& m, Eigen::Index row_off, Eigen::Index col_off) {
    for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
      for (RowSparse::InnerIterator it(m, r); it; ++it) {
        entries.emplace_back(row_off + it.row(), col_off + it.col(), it.value());
      }
    }
  };
  put(ax, 0, 0);      // rx <- sxx
  put(ay, 0, 2 * n);  // rx <- sxy
  put(ay, c, n);      // ry <- syy
  put(ax, c, 2 * n);  // ry <- sxy
  RowSparse j(2 * c, 3 * n);
  j.setFromTriplets(entries.begin(), entries.end());
  return j;
}

void write_grid_raster(const std::filesystem::path& path, const Eigen::VectorXd& field,
                       int grid_size, std::uint32_t channel) {
  if (field.size() != static_cast<Eigen::Index>(grid_size) * grid_size) {
    throw ContractError("raster field size does not match grid size");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot create " + path.string());
  auto put32 = [&](std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                       static_cast<char>((v >> 16) & 0xFF), static_cast<char>(v >> 24)};
    out.write(b, 4);
  };
  out.write("GRID", 4);
  put32(static_cast<std::uint32_t>(grid_size));
  put32(channel);
  put32(0);
  for (Eigen::Index k = 0; k < field.size(); ++k) {
    put32(std::bit_cast<std::uint32_t>(static_cast<float>(field[k])));
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

}  // namespace stressfield
