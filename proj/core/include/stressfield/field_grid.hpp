#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "stressfield/geometry.hpp"

namespace stressfield {

using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct GridOptions {
  int size = 200;
  // <= 0 selects 1.5 x median mesh edge length (mesh overload only).
  double bandwidth = 0.0;
  // Kernel support radius and mask radius, in bandwidths.
  double cutoff = 4.0;
  double mask_radius = 2.0;
};

/// Gaussian-kernel reconstruction of nodal values on a G x G grid spanning
/// the node bounding box. Cell (i, j) is at (x0 + i hx, y0 + j hy) and has
/// linear index j * G + i.
class GridOperator {
 public:
  int size() const { return size_; }
  Eigen::Index cells() const { return static_cast<Eigen::Index>(size_) * size_; }
  Eigen::Index num_nodes() const { return weights_.cols(); }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double x0() const { return x0_; }
  double y0() const { return y0_; }
  double bandwidth() const { return bandwidth_; }
  Eigen::Index index(int i, int j) const { return static_cast<Eigen::Index>(j) * size_ + i; }
  double cell_x(int i) const { return x0_ + i * hx_; }
  double cell_y(int j) const { return y0_ + j * hy_; }

  /// True where the cell lies inside the mesh support.
  const std::vector<std::uint8_t>& mask() const { return mask_; }
  bool unmasked(Eigen::Index cell) const { return mask_[static_cast<std::size_t>(cell)] != 0; }
  Eigen::Index unmasked_count() const { return unmasked_count_; }

  /// G^2 x N, row-normalized on unmasked rows, empty on masked rows.
  const RowSparse& weights() const { return weights_; }
  /// G^2 x G^2 finite-difference operators (zero rows on masked cells).
  const RowSparse& ddx() const { return ddx_; }
  const RowSparse& ddy() const { return ddy_; }

  /// Nodal values (N x K) to grid values (G^2 x K).
  Eigen::MatrixXd lift(const Eigen::MatrixXd& nodal) const;

 private:
  friend GridOperator build_grid_operator(std::span<const Point2>, const GridOptions&);

  int size_ = 0;
  double x0_ = 0, y0_ = 0, hx_ = 0, hy_ = 0, bandwidth_ = 0;
  std::vector<std::uint8_t> mask_;
  Eigen::Index unmasked_count_ = 0;
  RowSparse weights_;
  RowSparse ddx_;
  RowSparse ddy_;
};

/// `options.bandwidth` must be positive here.
GridOperator build_grid_operator(std::span<const Point2> nodes, const GridOptions& options);
GridOperator build_grid_operator(const Mesh& mesh, const GridOptions& options = {});

double default_bandwidth(const Mesh& mesh);

/// Central differences on interior unmasked cells, one-sided next to masked
/// cells, zero on masked cells. `field` has G^2 entries.
std::pair<Eigen::VectorXd, Eigen::VectorXd> grid_gradient(const Eigen::VectorXd& field,
                                                          const GridOperator& op);

/// Discretized equilibrium residuals on the grid, one column per frame.
struct ResidualField {
  Eigen::MatrixXd rx;  // G^2 x T, Pa/m
  Eigen::MatrixXd ry;
};

/// r_x = d sxx/dx + d sxy/dy + b_x - rho a_x,
/// r_y = d syy/dy + d sxy/dx + b_y - rho a_y.
/// Stress blocks are N x T; body force and acceleration are 2N x T with row
/// 2n + c. Affine in the stresses.
ResidualField pde_residual(const Eigen::MatrixXd& sxx, const Eigen::MatrixXd& syy,
                           const Eigen::MatrixXd& sxy, const Eigen::MatrixXd& body_force,
                           const Eigen::MatrixXd& acceleration, double density,
                           const GridOperator& op);

/// d[rx; ry] / d[sxx; syy; sxy] as a (2 G^2) x (3 N) sparse matrix.
RowSparse residual_jacobian(const GridOperator& op);

/// Flat f32 raster with a 16-byte header: "GRID", u32 G, u32 channel, u32 0.
void write_grid_raster(const std::filesystem::path& path, const Eigen::VectorXd& field,
                       int grid_size, std::uint32_t channel);

}  // namespace stressfield
