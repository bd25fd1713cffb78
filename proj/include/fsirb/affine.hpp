#pragma once

#include <string_view>
#include <vector>

#include "fsirb/eim.hpp"
#include "fsirb/stokes.hpp"

namespace fsirb {

/// EIM coefficients grouped as (viscous, divergence, force) in term order.
struct AffineTheta {
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd f;
};
AffineTheta affine_theta(const TensorEim& eim, const ParameterVector& mu);

/// EIM-induced affine decomposition of the Stokes forms:
///   A(mu) = sum_q theta_a^q(mu) A^q,  B_k(mu) = sum_q theta_b^q(mu) B^q (one component each),
///   force_k(mu) = sum_q theta_f^q(mu) f_k^q.
/// A^q and B^q are frozen-coefficient assemblies of one EIM function in one tensor entry.
class AffineSystem {
 public:
  AffineSystem(const StokesModel& model, TensorEim eim);

  const StokesModel& model() const { return *model_; }
  const TensorEim& eim() const { return eim_; }

  std::size_t num_a_terms() const { return a_terms_.size(); }
  std::size_t num_b_terms() const { return b_terms_.size(); }
  std::size_t num_f_terms() const { return f_terms_.size(); }
  /// Values on the velocity pattern, viscosity included.
  const Eigen::VectorXd& a_term(std::size_t q) const { return a_terms_[q]; }
  /// Values on the divergence pattern for velocity component b_component(q).
  const Eigen::VectorXd& b_term(std::size_t q) const { return b_terms_[q]; }
  int b_component(std::size_t q) const { return b_component_[q]; }
  const std::array<Eigen::VectorXd, 2>& f_term(std::size_t q) const { return f_terms_[q]; }

  using Theta = AffineTheta;
  /// The EIM-interpolated coefficient fields at the quadrature points
  /// (nu scaled by the viscosity) and the force load.
  struct Fields {
    QuadTensor nu;
    QuadTensor chi;
    std::array<Eigen::VectorXd, 2> force;
  };
  Fields fields(const Theta& theta) const;
  /// Residual [F - A u~ - B^T p ; G - B u~] of a homogeneous free-dof pair,
  /// without assembling A and B.
  void residual(const Fields& fields, const Eigen::VectorXd& u_free, const Eigen::VectorXd& p, Eigen::VectorXd& r_velocity,
                Eigen::VectorXd& r_pressure) const;
  Theta theta(const ParameterVector& mu) const { return affine_theta(eim_, mu); }
  StokesOperator assemble(const Theta& theta) const;
  StokesOperator assemble(const ParameterVector& mu) const { return assemble(theta(mu)); }

 private:
  const StokesModel* model_;
  TensorEim eim_;
  std::vector<Eigen::VectorXd> a_terms_;
  std::vector<Eigen::VectorXd> b_terms_;
  std::vector<int> b_component_;
  std::vector<std::array<Eigen::VectorXd, 2>> f_terms_;
};

/// Full-size solve with the affine (EIM-approximated) operators.
class ReducedFemSolver : public FluidSolver {
 public:
  explicit ReducedFemSolver(const AffineSystem& system) : system_(&system), solver_(system.model()) {}
  FluidSolution solve(const ParameterVector& mu) override { return solver_.solve(system_->assemble(mu), mu); }
  std::string_view name() const override { return "reduced_fem"; }

 private:
  const AffineSystem* system_;
  SaddlePointSolver solver_;
};

}  // namespace fsirb
