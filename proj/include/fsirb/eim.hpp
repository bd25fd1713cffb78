#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fsirb/ffd.hpp"

namespace fsirb {

/// Scalar field f(x_p; mu) over a fixed point set.
class ParametricField {
 public:
  virtual ~ParametricField() = default;
  virtual std::size_t num_points() const = 0;
  /// Values at all points.
  virtual void evaluate(const ParameterVector& mu, Eigen::VectorXd& out) const = 0;
  virtual double evaluate_at(std::size_t point, const ParameterVector& mu) const = 0;
};

/// Empirical interpolation basis  f(x; mu) ~ sum_m theta_m(mu) zeta_m(x).
/// zeta_m are normalized residuals, so interpolation(i, j) = zeta_j(x_i) is
/// unit lower triangular in the magic-point order.
struct EimBasis {
  Eigen::MatrixXd functions;           // points x M
  std::vector<int> magic;              // point index of each magic point
  std::vector<Point> magic_points;     // coordinates, when the field has them
  Eigen::MatrixXd interpolation;       // M x M
  std::vector<double> error_history;   // max training error with m terms, m = 0..M
  double tolerance = 0.0;
  bool converged = false;

  std::size_t size() const { return magic.size(); }
  std::size_t num_points() const { return static_cast<std::size_t>(functions.rows()); }
  double training_error() const { return error_history.empty() ? 0.0 : error_history.back(); }
  /// theta from field values at the magic points.
  Eigen::VectorXd coefficients(const Eigen::VectorXd& magic_values) const;
  Eigen::VectorXd interpolate(const Eigen::VectorXd& theta) const { return functions * theta; }
  /// The first m terms (the basis a run stopped at m would have produced).
  EimBasis truncated(std::size_t m) const;
};

/// Greedy EIM on a snapshot matrix (one column per training parameter).
EimBasis eim_train(const Eigen::MatrixXd& snapshots, double tolerance, int max_terms);
EimBasis eim_train(const ParametricField& field, std::span<const ParameterVector> train, double tolerance,
                   int max_terms);
Eigen::VectorXd eim_coefficients(const EimBasis& basis, const ParametricField& field, const ParameterVector& mu);
/// Max over test parameters and points of |f - I_M f|.
double eim_validate(const EimBasis& basis, const ParametricField& field, std::span<const ParameterVector> test);

/// The nine nonaffine coefficient fields of the pulled-back Stokes forms, in
/// QuadTensor column order for nu and chi.
enum class TensorEntry { nu11, nu12, nu21, nu22, chi11, chi12, chi21, chi22, det };
inline constexpr std::size_t kTensorEntries = 9;
std::string_view to_string(TensorEntry e);

/// One tensor entry of the FFD transformation at a fixed point set.
class TensorEntryField : public ParametricField {
 public:
  TensorEntryField(const JacobianField& jacobians, TensorEntry entry) : jacobians_(&jacobians), entry_(entry) {}
  std::size_t num_points() const override { return jacobians_->num_points(); }
  void evaluate(const ParameterVector& mu, Eigen::VectorXd& out) const override;
  double evaluate_at(std::size_t point, const ParameterVector& mu) const override;

 private:
  const JacobianField* jacobians_;
  TensorEntry entry_;
};

double tensor_entry(const TransformTensors& t, TensorEntry e);

struct EimOptions {
  double tolerance = 1e-5;
  int max_terms = 50;
  std::size_t train_size = 200;
  std::uint64_t seed = 1;
};

/// EIM bases for all nine entries plus the online evaluator of their
/// coefficients, which only touches the lattice at the magic points.
class TensorEim {
 public:
  TensorEim() = default;
  TensorEim(std::array<EimBasis, kTensorEntries> bases, const FfdLattice& lattice, EimOptions options);

  const EimBasis& basis(TensorEntry e) const { return bases_[static_cast<std::size_t>(e)]; }
  const std::array<EimBasis, kTensorEntries>& bases() const { return bases_; }
  const EimOptions& options() const { return options_; }
  bool converged() const;
  /// Terms in the viscous (nu), divergence (chi) and force (det) groups.
  std::size_t num_viscous_terms() const;
  std::size_t num_divergence_terms() const;
  std::size_t num_force_terms() const { return basis(TensorEntry::det).size(); }

  std::array<Eigen::VectorXd, kTensorEntries> coefficients(const ParameterVector& mu) const;

 private:
  std::array<EimBasis, kTensorEntries> bases_;
  EimOptions options_;
  JacobianField magic_jacobians_;
  std::array<std::vector<int>, kTensorEntries> magic_slot_;  // into magic_jacobians_
};

/// Train all nine entries at the given points (normally the FE quadrature points).
TensorEim train_tensor_eim(const FfdLattice& lattice, std::span<const Point> points, const ParameterDomain& domain,
                           const EimOptions& options);

}  // namespace fsirb
