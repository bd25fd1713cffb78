#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fsirb {

using Point = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Axis-aligned rectangle holding the rest configuration of the channel.
/// Lengths in cm.
struct ReferenceBox {
  double x1_min = 0.0;
  double x1_max = 3.0;
  double x2_min = -0.5;
  double x2_max = 0.5;

  void validate() const;
  double width() const { return x1_max - x1_min; }
  double height() const { return x2_max - x2_min; }
  double area() const { return width() * height(); }

  /// Affine map onto the unit square and its inverse.
  Point to_unit(const Point& x) const;
  Point from_unit(const Point& st) const;
  bool contains(const Point& x, double tol = 1e-12) const;
};

/// Geometric parameter vector: one displacement per movable lattice
/// component, expressed in unit-square coordinates (cm once scaled by
/// the box, identical for the default unit-height channel).
class ParameterVector {
 public:
  ParameterVector() = default;
  explicit ParameterVector(Eigen::VectorXd values) : values_(std::move(values)) {}
  static ParameterVector zero(std::size_t n) {
    return ParameterVector(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
  }

  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  double& operator[](std::size_t i) { return values_[static_cast<Eigen::Index>(i)]; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  std::string to_string() const;

 private:
  Eigen::VectorXd values_;
};

/// Parse "v1,v2,...". Throws std::invalid_argument on malformed input.
ParameterVector parse_parameter_vector(const std::string& text);

/// Box-shaped admissible parameter set D = prod [lower_i, upper_i].
class ParameterDomain {
 public:
  ParameterDomain() = default;
  ParameterDomain(std::size_t n, double lower, double upper);
  ParameterDomain(Eigen::VectorXd lower, Eigen::VectorXd upper);

  std::size_t size() const { return static_cast<std::size_t>(lower_.size()); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }

  bool contains(const ParameterVector& mu, double tol = 0.0) const;
  /// Componentwise clip; returns true when any component moved.
  bool clip(ParameterVector& mu) const;
  ParameterVector sample(std::mt19937_64& rng) const;
  std::vector<ParameterVector> sample(std::size_t count, std::uint64_t seed) const;

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

/// Thrown when the deformation map folds (det J <= 0).
class DegenerateGeometry : public std::runtime_error {
 public:
  DegenerateGeometry(const Point& x, const ParameterVector& mu, double det);
  const Point& where() const { return where_; }
  const ParameterVector& parameters() const { return mu_; }
  double determinant() const { return det_; }

 private:
  Point where_;
  ParameterVector mu_;
  double det_;
};

/// C(n,k) (1-s)^(n-k) s^k.
double bernstein(int degree, int index, double s);
/// d/ds of bernstein(degree, index, s).
double bernstein_derivative(int degree, int index, double s);

enum class Axis { x1 = 0, x2 = 1 };

/// A lattice displacement component that is free to move.
struct MovableComponent {
  int l = 0;
  int m = 0;
  Axis axis = Axis::x2;
};

/// Pull-back tensors of the Stokes forms, with J = grad T (J_ij = dT_i/dx_j):
/// nu = J^-1 J^-T det J for the viscous term and chi = J^-T det J for the
/// pressure-divergence term, so that
///   grad u . grad v |_{Omega(mu)}  ->  du/dX_i nu_ij dv/dX_j,
///   div v           |_{Omega(mu)}  ->  chi_kj dv_k/dX_j.
struct TransformTensors {
  Mat2 nu;
  Mat2 chi;
  double det = 1.0;
};

/// Tensors from a Jacobian; returns false (tensors untouched) if det J <= 0.
bool transform_tensors_from_jacobian(const Mat2& jacobian, TransformTensors& out);

/// Free-form deformation lattice over a ReferenceBox. The deformation map is
///   T(x; mu) = Psi^-1( sum_{l,m} b_l^L(s) b_m^M(t) (P0_{l,m} + mu_{l,m}) ),
/// (s,t) = Psi(x), with mu_{l,m} nonzero only for movable components. Since
/// the Bernstein basis reproduces linear functions, T is the identity plus a
/// term linear in mu.
class FfdLattice {
 public:
  FfdLattice(ReferenceBox box, int degree_x, int degree_y, std::vector<MovableComponent> movable);

  /// 10 x 2 control grid on the default channel, six top-row points moving
  /// vertically at l = 1,2,3,6,7,8.
  static FfdLattice channel_default(const ReferenceBox& box = {});
  /// Top-row (m = M) x2-displacements at the given l indices.
  static FfdLattice top_row(const ReferenceBox& box, int degree_x, int degree_y, std::span<const int> l_indices);

  const ReferenceBox& box() const { return box_; }
  int degree_x() const { return degree_x_; }
  int degree_y() const { return degree_y_; }
  std::size_t num_parameters() const { return movable_.size(); }
  std::span<const MovableComponent> movable() const { return movable_; }

  /// Rest control point P0_{l,m} = (l/L, m/M) in unit-square coordinates.
  Point control_point(int l, int m) const;

  Point map(const Point& x, const ParameterVector& mu) const;
  Mat2 jacobian(const Point& x, const ParameterVector& mu) const;
  /// dJ/dmu_j at x; J(x; mu) = I + sum_j mu_j D_j(x).
  std::vector<Mat2> jacobian_derivatives(const Point& x) const;
  TransformTensors tensors(const Point& x, const ParameterVector& mu) const;

  /// Vertical displacement of the top wall at s = Psi_1(x1), in cm.
  double boundary_displacement(double s, const ParameterVector& mu) const;
  /// d eta / d x1 along the top wall.
  double boundary_slope(double s, const ParameterVector& mu) const;
  /// Entry (i, j) = d eta(s_i) / d mu_j.
  Eigen::MatrixXd displacement_basis_matrix(std::span<const double> s) const;
  /// Entry (i, j) = d (d eta / d x1)(s_i) / d mu_j.
  Eigen::MatrixXd slope_basis_matrix(std::span<const double> s) const;

  /// Minimum det J over a tensor grid of n1 x n2 points covering the box.
  double min_jacobian_determinant(const ParameterVector& mu, int n1, int n2) const;

 private:
  void check_point(const Point& x) const;
  void check_parameters(const ParameterVector& mu) const;

  ReferenceBox box_;
  int degree_x_;
  int degree_y_;
  std::vector<MovableComponent> movable_;
};

/// Jacobians of a lattice precomputed at a fixed point set, so that
/// J(x_p; mu) = I + sum_j mu_j D_j(x_p) costs one small mat-vec per point.
class JacobianField {
 public:
  JacobianField() = default;
  JacobianField(const FfdLattice& lattice, std::span<const Point> points);

  std::size_t num_points() const { return points_.size(); }
  std::size_t num_parameters() const { return static_cast<std::size_t>(derivatives_.cols()); }
  const Point& point(std::size_t p) const { return points_[p]; }

  Mat2 jacobian(std::size_t p, const ParameterVector& mu) const;
  /// Throws DegenerateGeometry at the first folded point.
  TransformTensors tensors(std::size_t p, const ParameterVector& mu) const;

 private:
  std::vector<Point> points_;
  // Row 4p + (2i + j) holds d J_ij(x_p) / d mu.
  Eigen::MatrixXd derivatives_;
};

}  // namespace fsirb
