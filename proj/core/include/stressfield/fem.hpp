#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <iosfwd>
#include <span>
#include <vector>

#include "stressfield/geometry.hpp"

namespace stressfield {

/// Homogeneous isotropic linear-elastic plate. Defaults are structural steel.
struct Material {
  double youngs_modulus = 200e9;  // Pa
  double poisson_ratio = 0.3;
  double density = 7850.0;        // kg/m^3
  double thickness = 0.01;        // m

  void validate() const;
  /// Plane-stress constitutive matrix acting on (exx, eyy, gxy).
  Eigen::Matrix3d plane_stress_matrix() const;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

/// DOF 2n is the x displacement of node n, 2n+1 the y displacement.
struct SystemMatrices {
  SparseMatrix stiffness;
  SparseMatrix mass;          // lumped (diagonal)
  std::vector<int> fixed_dofs;  // sorted, unique

  Eigen::Index num_dofs() const { return stiffness.rows(); }
};

/// Time histories with one row per DOF (or per node/channel) and one column
/// per frame.
struct DynamicResponse {
  Eigen::MatrixXd displacement;  // 2N x T
  Eigen::MatrixXd velocity;      // 2N x T
  Eigen::MatrixXd acceleration;  // 2N x T
  Eigen::MatrixXd stress;        // 3N x T, row 3n+c with c = (sxx, syy, sxy)
};

struct CstElement {
  Eigen::Matrix<double, 3, 6> strain_displacement;  // B
  double area = 0.0;
};

CstElement cst_element(const Point2& p0, const Point2& p1, const Point2& p2);

/// t * A * B^T D B for one constant-strain triangle.
Eigen::Matrix<double, 6, 6> element_stiffness(const Point2& p0, const Point2& p1,
                                              const Point2& p2, const Material& material);

/// Stiffness and lumped mass; no DOFs fixed.
SystemMatrices assemble(const Mesh& mesh, const Material& material);

/// Both DOFs of each listed node become fixed.
void fix_nodes(SystemMatrices& sys, std::span<const int> nodes);

/// Nodes carrying any of the labels in `mask`.
std::vector<int> nodes_with_labels(const Mesh& mesh, LabelMask mask);

/// Average-acceleration Newmark (beta = 1/4, gamma = 1/2) from rest.
/// `load` is 2N x T nodal forces; column k is applied at t = k * dt.
/// Fills displacement, velocity and acceleration.
DynamicResponse newmark_solve(const SystemMatrices& sys, const Eigen::MatrixXd& load, double dt);

/// K_ff u_f = F_f with fixed DOFs pinned at zero.
Eigen::VectorXd solve_static(const SystemMatrices& sys, const Eigen::VectorXd& load);

/// Element stresses D B u_e, area-averaged onto nodes. Returns N x 3.
Eigen::MatrixX3d recover_stress(const Mesh& mesh, const Material& material,
                                const Eigen::VectorXd& displacement);

/// Applies recover_stress to every column of a 2N x T displacement history.
Eigen::MatrixXd recover_stress_history(const Mesh& mesh, const Material& material,
                                       const Eigen::MatrixXd& displacement);

double von_mises(double sxx, double syy, double sxy);

/// 1/2 v^T M v + 1/2 u^T K u.
double total_energy(const SystemMatrices& sys, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

void write_matrix_market(std::ostream& out, const SparseMatrix& matrix);

}  // namespace stressfield
