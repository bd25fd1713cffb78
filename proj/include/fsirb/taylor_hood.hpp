#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fsirb/mesh.hpp"

namespace fsirb {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using SparseMap = Eigen::Map<const SparseMatrix>;

/// Symmetric rule on the reference triangle; points are (xi, eta) with
/// barycentrics (1 - xi - eta, xi, eta); weights sum to one (multiply by area).
struct TriangleRule {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;
  int degree = 0;
};

/// Exact for polynomials of the given total degree (4 or 5 supported).
TriangleRule triangle_rule(int degree);

/// Gauss-Legendre rule on [0, 1] with n points.
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};
LineRule gauss_legendre(int n);

/// P2 shape functions on a triangle, local order: vertices 0,1,2 then the
/// midpoints of edges (0,1), (1,2), (2,0).
std::array<double, 6> p2_values(const Eigen::Vector3d& bary);
/// Gradients given the (constant) gradients of the barycentric coordinates.
std::array<Eigen::Vector2d, 6> p2_gradients(const Eigen::Vector3d& bary, const std::array<Eigen::Vector2d, 3>& grad_bary);

/// Sparsity pattern for a bilinear form between two element-local spaces,
/// with a per-element table mapping local (row, col) to the nonzero slot.
struct AssemblyPattern {
  SparseMatrix structure;
  int local_rows = 0;
  int local_cols = 0;
  std::vector<int> slots;  // element-major, local_rows * local_cols entries per element

  Eigen::Index nnz() const { return structure.nonZeros(); }
  SparseMap view(const Eigen::VectorXd& values) const;
  int slot(std::size_t element, int i, int j) const {
    return slots[element * static_cast<std::size_t>(local_rows * local_cols) + static_cast<std::size_t>(i * local_cols + j)];
  }
};

/// Per-quadrature-point 2x2 coefficient; row q holds (c11, c12, c21, c22).
using QuadTensor = Eigen::Matrix<double, Eigen::Dynamic, 4>;

/// P2 (velocity) / P1 (pressure) Taylor-Hood discretization on a Mesh.
/// Vector velocities are stored component-blocked: [u1 over P2 nodes; u2 over P2 nodes].
/// Every boundary velocity node carries Dirichlet data; the remaining nodes
/// are numbered 0..num_free_nodes()-1.
class TaylorHoodSpace {
 public:
  explicit TaylorHoodSpace(Mesh mesh, int quadrature_degree = 4);

  const Mesh& mesh() const { return mesh_; }
  std::size_t num_elements() const { return mesh_.triangles.size(); }
  std::size_t num_velocity_nodes() const { return velocity_nodes_.size(); }
  std::size_t num_pressure_dofs() const { return mesh_.nodes.size(); }
  std::size_t num_free_nodes() const { return free_nodes_.size(); }
  std::size_t num_velocity_dofs() const { return 2 * num_velocity_nodes(); }
  std::size_t num_free_velocity_dofs() const { return 2 * num_free_nodes(); }

  const Point& velocity_node(std::size_t i) const { return velocity_nodes_[i]; }
  const std::array<int, 6>& element_velocity_nodes(std::size_t t) const { return element_nodes_[t]; }
  const std::array<int, 3>& element_pressure_dofs(std::size_t t) const { return mesh_.triangles[t]; }
  bool is_dirichlet(std::size_t node) const { return free_index_[node] < 0; }
  int free_index(std::size_t node) const { return free_index_[node]; }
  std::span<const int> free_nodes() const { return free_nodes_; }

  const TriangleRule& rule() const { return rule_; }
  std::size_t points_per_element() const { return rule_.points.size(); }
  std::size_t num_quadrature_points() const { return quad_points_.size(); }
  /// Quadrature point p = element * points_per_element() + q.
  std::span<const Point> quadrature_points() const { return quad_points_; }
  double quadrature_weight(std::size_t p) const { return quad_weights_[p]; }

  const std::array<Eigen::Vector2d, 3>& barycentric_gradients(std::size_t t) const { return grad_bary_[t]; }
  /// Barycentric coordinates of x with respect to element t.
  Eigen::Vector3d barycentric(std::size_t t, const Point& x) const;

  const AssemblyPattern& velocity_pattern() const { return p2_pattern_; }
  const AssemblyPattern& divergence_pattern() const { return p1p2_pattern_; }
  const AssemblyPattern& pressure_pattern() const { return p1_pattern_; }

  /// Scatter free-dof values into a full component-blocked vector (zeros elsewhere).
  Eigen::VectorXd expand_free(const Eigen::VectorXd& free) const;
  Eigen::VectorXd restrict_free(const Eigen::VectorXd& full) const;

  // --- assembly kernels -------------------------------------------------
  /// Values on velocity_pattern() of  int c_ij d(phi_col)/dx_i d(phi_row)/dx_j.
  Eigen::VectorXd assemble_grad_grad(const QuadTensor& c) const;
  /// Values on velocity_pattern() of  int w phi_col phi_row  (w = 1 when empty).
  Eigen::VectorXd assemble_mass(const Eigen::VectorXd& w = {}) const;
  /// Values on divergence_pattern() of  -int psi_row c_kj d(phi_col)/dx_j  for k = 0, 1.
  std::array<Eigen::VectorXd, 2> assemble_divergence(const QuadTensor& c) const;
  /// Matrix-free products with the same forms: assemble_grad_grad(c) * u for
  /// a scalar P2 field, sum_k B_k(c) u_k for a component-blocked u, and
  /// [B_0(c)^T p; B_1(c)^T p].
  Eigen::VectorXd apply_grad_grad(const QuadTensor& c, const Eigen::VectorXd& u) const;
  Eigen::VectorXd apply_divergence(const QuadTensor& c, const Eigen::VectorXd& u) const;
  Eigen::VectorXd apply_divergence_transpose(const QuadTensor& c, const Eigen::VectorXd& p) const;
  /// int w phi_I for every P2 node.
  Eigen::VectorXd assemble_load(const Eigen::VectorXd& w) const;
  /// P1 mass matrix values on pressure_pattern().
  Eigen::VectorXd assemble_pressure_mass() const;
  /// int psi_q for every pressure dof.
  Eigen::VectorXd pressure_load() const;

 private:
  Mesh mesh_;
  TriangleRule rule_;
  std::vector<Point> velocity_nodes_;
  std::vector<std::array<int, 6>> element_nodes_;
  std::vector<int> free_index_;
  std::vector<int> free_nodes_;
  std::vector<Point> quad_points_;
  std::vector<double> quad_weights_;
  std::vector<std::array<Eigen::Vector2d, 3>> grad_bary_;
  std::vector<std::array<double, 6>> phi_;  // per rule point
  std::vector<std::array<double, 3>> psi_;  // per rule point
  std::vector<std::array<Eigen::Vector2d, 6>> dphi_;  // per quadrature point
  AssemblyPattern p2_pattern_;
  AssemblyPattern p1p2_pattern_;
  AssemblyPattern p1_pattern_;
};

}  // namespace fsirb
