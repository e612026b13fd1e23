#include "stressfield/fem.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "stressfield/errors.hpp"

namespace stressfield {

void Material::validate() const {
  if (!(youngs_modulus > 0.0)) throw ConfigurationError("Young's modulus must be positive");
  if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5)) {
    throw ConfigurationError("Poisson ratio must lie in [0, 0.5)");
  }
  if (!(density > 0.0)) throw ConfigurationError("density must be positive");
  if (!(thickness > 0.0)) throw ConfigurationError("thickness must be positive");
}

Eigen::Matrix3d Material::plane_stress_matrix() const {
  const double nu = poisson_ratio;
  const double c = youngs_modulus / (1.0 - nu * nu);
  Eigen::Matrix3d d;
  d << c, c * nu, 0.0,
       c * nu, c, 0.0,
       0.0, 0.0, c * (1.0 - nu) / 2.0;
  return d;
}

CstElement cst_element(const Point2& p0, const Point2& p1, const Point2& p2) {
  CstElement e;
  e.area = triangle_signed_area(p0, p1, p2);
  const double inv = 1.0 / (2.0 * e.area);
  const double b0 = p1.y - p2.y, b1 = p2.y - p0.y, b2 = p0.y - p1.y;
  const double c0 = p2.x - p1.x, c1 = p0.x - p2.x, c2 = p1.x - p0.x;
  e.strain_displacement << b0, 0, b1, 0, b2, 0,
                           0, c0, 0, c1, 0, c2,
                           c0, b0, c1, b1, c2, b2;
  e.strain_displacement *= inv;
  return e;
}

Eigen::Matrix<double, 6, 6> element_stiffness(const Point2& p0, const Point2& p1,
                                              const Point2& p2, const Material& material) {
  const CstElement e = cst_element(p0, p1, p2);
  if (!(e.area > 0.0)) throw AssemblyError("element has non-positive area");
  const auto& b = e.strain_displacement;
  return material.thickness * e.area * b.transpose() * material.plane_stress_matrix() * b;
}

SystemMatrices assemble(const Mesh& mesh, const Material& material) {
  material.validate();
  const auto ndof = static_cast<Eigen::Index>(2 * mesh.num_nodes());
  const Eigen::Matrix3d d = material.plane_stress_matrix();

  std::vector<Eigen::Triplet<double>> k_entries;
  k_entries.reserve(36 * mesh.num_triangles());
  Eigen::VectorXd lumped = Eigen::VectorXd::Zero(ndof);

  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const CstElement e =
        cst_element(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]);
    if (!(e.area > 0.0)) {
      throw AssemblyError("triangle " + std::to_string(t) + " has non-positive area");
    }
    const auto& b = e.strain_displacement;
    const Eigen::Matrix<double, 6, 6> ke =
        material.thickness * e.area * b.transpose() * d * b;
    int dof[6];
    for (int a = 0; a < 3; ++a) {
      dof[2 * a] = 2 * tri[a];
      dof[2 * a + 1] = 2 * tri[a] + 1;
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) k_entries.emplace_back(dof[i], dof[j], ke(i, j));
    }
    const double m_node = material.density * material.thickness * e.area / 3.0;
    for (int i = 0; i < 6; ++i) lumped[dof[i]] += m_node;
  }

  SystemMatrices sys;
  sys.stiffness.resize(ndof, ndof);
  sys.stiffness.setFromTriplets(k_entries.begin(), k_entries.end());
  sys.mass.resize(ndof, ndof);
  std::vector<Eigen::Triplet<double>> m_entries;
  m_entries.reserve(static_cast<std::size_t>(ndof));
  for (Eigen::Index i = 0; i < ndof; ++i) m_entries.emplace_back(i, i, lumped[i]);
  sys.mass.setFromTriplets(m_entries.begin(), m_entries.end());
  return sys;
}

void fix_nodes(SystemMatrices& sys, std::span<const int> nodes) {
  for (int n : nodes) {
    sys.fixed_dofs.push_back(2 * n);
    sys.fixed_dofs.push_back(2 * n + 1);
  }
  std::sort(sys.fixed_dofs.begin(), sys.fixed_dofs.end());
  sys.fixed_dofs.erase(std::unique(sys.fixed_dofs.begin(), sys.fixed_dofs.end()),
                       sys.fixed_dofs.end());
}

std::vector<int> nodes_with_labels(const Mesh& mesh, LabelMask mask) {
  std::vector<int> out;
  for (std::size_t i = 0; i < mesh.edge_labels.size(); ++i) {
    if (mesh.edge_labels[i] & mask) out.push_back(static_cast<int>(i));
  }
  return out;
}

namespace {

// Maps full DOF ids onto the reduced (free) numbering; -1 for fixed DOFs.
struct FreeDofs {
  std::vector<Eigen::Index> to_free;
  std::vector<Eigen::Index> to_full;

  FreeDofs(Eigen::Index ndof, const std::vector<int>& fixed) : to_free(ndof, 0) {
    for (int f : fixed) {
      if (f < 0 || f >= ndof) throw ContractError("fixed DOF out of range");
      to_free[f] = -1;
    }
    for (Eigen::Index i = 0; i < ndof; ++i) {
      if (to_free[i] < 0) continue;
      to_free[i] = static_cast<Eigen::Index>(to_full.size());
      to_full.push_back(i);
    }
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(to_full.size()); }

  SparseMatrix restrict(const SparseMatrix& a) const {
    std::vector<Eigen::Triplet<double>> entries;
    for (Eigen::Index col = 0; col < a.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
        const Eigen::Index r = to_free[it.row()];
        const Eigen::Index c = to_free[it.col()];
        if (r >= 0 && c >= 0) entries.emplace_back(r, c, it.value());
      }
    }
    SparseMatrix out(size(), size());
    out.setFromTriplets(entries.begin(), entries.end());
    return out;
  }
};

void check_factorization(const Eigen::SimplicialLDLT<SparseMatrix>& ldlt, const char* what) {
  if (ldlt.info() != Eigen::Success) {
    throw SolverError(std::string(what) + " matrix factorization failed");
  }
  const Eigen::VectorXd diag = ldlt.vectorD();
  if (diag.size() == 0) return;
  const double dmax = diag.cwiseAbs().maxCoeff();
  if (!(diag.minCoeff() > 1e-12 * dmax)) {
    throw SolverError(std::string(what) +
                      " matrix is singular; the structure needs more constraints");
  }
}

}  // namespace

DynamicResponse newmark_solve(const SystemMatrices& sys, const Eigen::MatrixXd& load, double dt) {
  if (!(dt > 0.0)) throw ContractError("time step must be positive");
  const Eigen::Index ndof = sys.num_dofs();
  if (load.rows() != ndof) {
    throw ContractError("load history has " + std::to_string(load.rows()) +
                        " rows, expected " + std::to_string(ndof));
  }
  const Eigen::Index frames = load.cols();
  const FreeDofs free(ndof, sys.fixed_dofs);
  const Eigen::Index nf = free.size();

  const SparseMatrix k = free.restrict(sys.stiffness);
  const SparseMatrix m = free.restrict(sys.mass);
  const Eigen::VectorXd m_diag = m.diagonal();
  if (!(m_diag.size() == 0 || m_diag.minCoeff() > 0.0)) {
    throw SolverError("mass matrix is not positive definite on the free DOFs");
  }

  const double c0 = 4.0 / (dt * dt);
  const double c1 = 4.0 / dt;
  const SparseMatrix k_eff = k + c0 * m;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(k_eff);
  check_factorization(ldlt, "effective stiffness");

  DynamicResponse out;
  out.displacement = Eigen::MatrixXd::Zero(ndof, frames);
  out.velocity = Eigen::MatrixXd::Zero(ndof, frames);
  out.acceleration = Eigen::MatrixXd::Zero(ndof, frames);
  if (frames == 0) return out;

  auto gather = [&](Eigen::Index col) {
    Eigen::VectorXd f(nf);
    for (Eigen::Index i = 0; i < nf; ++i) f[i] = load(free.to_full[i], col);
    return f;
  };
  auto scatter = [&](Eigen::MatrixXd& dst, Eigen::Index col, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < nf; ++i) dst(free.to_full[i], col) = v[i];
  };

  Eigen::VectorXd u = Eigen::VectorXd::Zero(nf);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(nf);
  // Equilibrium at rest: M a0 = F0.
  Eigen::VectorXd a = gather(0).cwiseQuotient(m_diag);
  scatter(out.acceleration, 0, a);

  for (Eigen::Index step = 1; step < frames; ++step) {
    const Eigen::VectorXd f = gather(step);
    const Eigen::VectorXd rhs = f + m_diag.cwiseProduct(c0 * u + c1 * v + a);
    const Eigen::VectorXd u_next = ldlt.solve(rhs);
    // Acceleration from the equation of motion; identical to the Newmark
    // update in exact arithmetic but free of the 4/dt^2 cancellation.
    const Eigen::VectorXd a_next = (f - k * u_next).cwiseQuotient(m_diag);
    v += 0.5 * dt * (a + a_next);
    u = u_next;
    a = a_next;
    scatter(out.displacement, step, u);
    scatter(out.velocity, step, v);
    scatter(out.acceleration, step, a);
  }
  if (!out.displacement.allFinite() || !out.acceleration.allFinite()) {
    throw SolverError("time integration produced non-finite values");
  }
  return out;
}

Eigen::VectorXd solve_static(const SystemMatrices& sys, const Eigen::VectorXd& load) {
  const Eigen::Index ndof = sys.num_dofs();
  if (load.size() != ndof) throw ContractError("load vector size does not match DOF count");
  const FreeDofs free(ndof, sys.fixed_dofs);
  const SparseMatrix k = free.restrict(sys.stiffness);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(k);
  check_factorization(ldlt, "stiffness");
  Eigen::VectorXd f(free.size());
  for (Eigen::Index i = 0; i < free.size(); ++i) f[i] = load[free.to_full[i]];
  const Eigen::VectorXd uf = ldlt.solve(f);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(ndof);
  for (Eigen::Index i = 0; i < free.size(); ++i) u[free.to_full[i]] = uf[i];
  return u;
}

Eigen::MatrixX3d recover_stress(const Mesh& mesh, const Material& material,
                                const Eigen::VectorXd& displacement) {
  const auto n = static_cast<Eigen::Index>(mesh.num_nodes());
  if (displacement.size() != 2 * n) {
    throw ContractError("displacement vector size does not match 2N");
  }
  const Eigen::Matrix3d d = material.plane_stress_matrix();
  Eigen::MatrixX3d sum = Eigen::MatrixX3d::Zero(n, 3);
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(n);
  for (const auto& tri : mesh.triangles) {
    const CstElement e = cst_element(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]);
    Eigen::Matrix<double, 6, 1> ue;
    for (int a = 0; a < 3; ++a) {
      ue[2 * a] = displacement[2 * tri[a]];
      ue[2 * a + 1] = displacement[2 * tri[a] + 1];
    }
    const Eigen::Vector3d sigma = d * (e.strain_displacement * ue);
    for (int a = 0; a < 3; ++a) {
      sum.row(tri[a]) += e.area * sigma.transpose();
      weight[tri[a]] += e.area;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weight[i] > 0.0) sum.row(i) /= weight[i];
  }
  return sum;
}

Eigen::MatrixXd recover_stress_history(const Mesh& mesh, const Material& material,
                                       const Eigen::MatrixXd& displacement) {
  const auto n = static_cast<Eigen::Index>(mesh.num_nodes());
  Eigen::MatrixXd out(3 * n, displacement.cols());
  for (Eigen::Index t = 0; t < displacement.cols(); ++t) {
    const Eigen::MatrixX3d s = recover_stress(mesh, material, displacement.col(t));
    for (Eigen::Index i = 0; i < n; ++i) {
      out(3 * i, t) = s(i, 0);
      out(3 * i + 1, t) = s(i, 1);
      out(3 * i + 2, t) = s(i, 2);
    }
  }
  return out;
}

double von_mises(double sxx, double syy, double sxy) {
  return std::sqrt(sxx * sxx + syy * syy - sxx * syy + 3.0 * sxy * sxy);
}

double total_energy(const SystemMatrices& sys, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return 0.5 * v.dot(sys.mass * v) + 0.5 * u.dot(sys.stiffness * u);
}

void write_matrix_market(std::ostream& out, const SparseMatrix& matrix) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.nonZeros() << '\n';
  out << std::setprecision(17);
  for (Eigen::Index col = 0; col < matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(matrix, col); it; ++it) {
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
    }
  }
}

}  // namespace stressfield
