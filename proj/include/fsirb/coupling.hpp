#pragma once

#include <iosfwd>
#include <vector>

#include "fsirb/stokes.hpp"

namespace fsirb {

/// Clamped P1 membrane on the flexible wall plus the FFD displacement space
/// it is projected onto. Integrals against eta(.; mu), a degree-L polynomial
/// per wall segment, use a Gauss rule exact for the squared misfit.
class WallModel {
 public:
  WallModel(const TaylorHoodSpace& space, const FfdLattice& lattice, double K, ParameterDomain bounds);
  WallModel(const WallModel&) = delete;
  WallModel& operator=(const WallModel&) = delete;

  const WallTrace& trace() const { return trace_; }
  double spring_constant() const { return K_; }
  const ParameterDomain& bounds() const { return bounds_; }
  std::size_t num_nodes() const { return trace_.num_nodes(); }

  /// int K eta' phi' = int tau phi with eta = 0 at both ends; tau nodal P1.
  Eigen::VectorXd solve_membrane(const Eigen::VectorXd& tau) const;
  /// eta(x; mu) at the wall nodes.
  Eigen::VectorXd displacement(const ParameterVector& mu) const;
  /// Least-squares fit of eta(.; mu) to eta_hat in the H1(wall) inner product, no clipping.
  ParameterVector fit(const Eigen::VectorXd& eta_hat) const;
  /// Same fit for a function of x1 given with its derivative.
  ParameterVector fit(const std::function<double(double)>& eta, const std::function<double(double)>& slope) const;
  /// fit() followed by a clip to the bounds (warned on std::clog).
  ParameterVector project(const Eigen::VectorXd& eta_hat) const;
  /// 1/2 int |eta(mu) - eta_hat|^2 + |eta(mu)' - eta_hat'|^2.
  double misfit(const ParameterVector& mu, const Eigen::VectorXd& eta_hat) const;
  /// 1/2 int |K eta'' + tau|^2 with P1 second differences of eta(mu) at interior nodes, lumped.
  double strong_residual(const ParameterVector& mu, const Eigen::VectorXd& tau) const;

 private:
  // Values and x1-derivatives of a nodal P1 function at the quadrature points.
  void p1_at_quadrature(const Eigen::VectorXd& f, Eigen::VectorXd& value, Eigen::VectorXd& slope) const;
  ParameterVector fit_quadrature(const Eigen::VectorXd& value, const Eigen::VectorXd& slope) const;

  WallTrace trace_;
  double K_;
  ParameterDomain bounds_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> stiffness_;  // interior nodes
  Eigen::MatrixXd node_basis_;   // d eta(x_i) / d mu
  Eigen::VectorXd weights_;      // quadrature weights
  std::vector<int> segment_;     // segment of each quadrature point
  Eigen::VectorXd xq_;           // x1 of each quadrature point
  Eigen::VectorXd xi_;           // local coordinate in [0, 1]
  Eigen::MatrixXd basis_;        // d eta / d mu at quadrature points
  Eigen::MatrixXd slope_basis_;  // d eta' / d mu
  Eigen::LLT<Eigen::MatrixXd> gram_;
};

struct CouplingOptions {
  double tolerance = 1e-5;  ///< on |mu^{k+1} - mu^k|
  int max_iterations = 1000;
  double relaxation = 1.0;
};

struct CouplingStep {
  int k = 0;
  ParameterVector mu;        ///< mu^{k+1}
  double step_norm = 0.0;
  double misfit = 0.0;       ///< J(mu^{k+1}, eta_hat^k)
  double fluid_solve_ms = 0.0;
};

struct CouplingState {
  int k = 0;  ///< last iteration; history has k + 1 entries
  ParameterVector mu;
  Eigen::VectorXd eta_hat;
  Eigen::VectorXd traction;
  double misfit = 0.0;
  double step_norm = 0.0;
  double strong_residual = 0.0;
  bool converged = false;
  std::vector<CouplingStep> history;
};

/// Fixed point in parameter space: fluid at mu^k, wall traction, membrane,
/// projection, relaxed update. Starts from mu = 0. Returns the state also
/// when max_iterations is hit (converged = false); DegenerateGeometry propagates.
CouplingState couple(FluidSolver& solver, const StokesModel& model, const WallModel& wall,
                     const CouplingOptions& options);

/// k,mu_1..mu_n,step_norm,J_k,fluid_solve_ms
void write_coupling_trace_csv(std::ostream& os, const CouplingState& state);
/// x1,eta,eta_hat at the wall nodes.
void write_interface_csv(std::ostream& os, const WallModel& wall, const CouplingState& state);

}  // namespace fsirb
