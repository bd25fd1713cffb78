#pragma once

#include <iosfwd>
#include <string_view>
#include <vector>

#include "fsirb/affine.hpp"

namespace fsirb {

struct RbOptions {
  int max_basis = 30;            ///< Nmax snapshots
  double tolerance = 1e-6;       ///< on the relative dual residual (or true error)
  std::size_t train_size = 200;
  std::uint64_t seed = 2;
  bool true_error = false;       ///< greedy on the true error against stored truth solves
  std::size_t test_size = 20;    ///< held-out parameters for the error-decay report
  std::uint64_t test_seed = 3;
};

struct ReducedSolution {
  Eigen::VectorXd u;  ///< coordinates in the velocity basis
  Eigen::VectorXd p;  ///< coordinates in the pressure basis
  ParameterVector mu;
};

struct GreedyRecord {
  int n = 0;                     ///< snapshots in the basis
  double max_train_residual = 0.0;
  double max_test_error = 0.0;
  std::size_t picked = 0;        ///< training index of the snapshot added at this step
};

/// Supremizer-enriched reduced spaces with the projected affine terms.
/// Velocity vectors live on free dofs (component-blocked) and are
/// orthonormal in the H1 Gram; pressures are orthonormal in the L2 mass.
/// Bases are nested: the first n snapshots own the leading
/// velocity_count(n) / pressure_count(n) vectors.
class ReducedModel {
 public:
  std::size_t num_snapshots() const { return snapshots_.size(); }
  const std::vector<ParameterVector>& snapshots() const { return snapshots_; }
  Eigen::Index velocity_count(std::size_t n) const { return n ? velocity_offsets_[n - 1] : 0; }
  Eigen::Index pressure_count(std::size_t n) const { return n ? pressure_offsets_[n - 1] : 0; }
  const Eigen::MatrixXd& velocity_basis() const { return velocity_basis_; }
  const Eigen::MatrixXd& pressure_basis() const { return pressure_basis_; }
  const std::vector<GreedyRecord>& history() const { return history_; }
  const RbOptions& options() const { return options_; }

  /// Dense solve of the 3N saddle system with all or the first n snapshots.
  ReducedSolution solve(const AffineTheta& theta, const ParameterVector& mu, std::size_t n = 0) const;
  /// Reduced inf-sup constant: smallest singular value of the reduced B(mu).
  double infsup(const AffineTheta& theta, std::size_t n = 0, bool enriched = true) const;

  /// Free-dof velocity and pressure of the reconstructed solution.
  Eigen::VectorXd velocity(const ReducedSolution& s) const;
  Eigen::VectorXd pressure(const ReducedSolution& s) const;

  /// Projected matrices (for tests).
  Eigen::MatrixXd reduced_a(const AffineTheta& theta, std::size_t n = 0) const;
  Eigen::MatrixXd reduced_b(const AffineTheta& theta, std::size_t n = 0) const;

 private:
  friend class ReducedBasisBuilder;
  friend ReducedModel greedy_build(const AffineSystem&, const ParameterDomain&, const RbOptions&);
  friend struct ReducedModelAccess;

  std::size_t resolve(std::size_t n) const;

  std::vector<ParameterVector> snapshots_;
  std::vector<Eigen::Index> velocity_offsets_;
  std::vector<Eigen::Index> pressure_offsets_;
  Eigen::MatrixXd velocity_basis_;
  Eigen::MatrixXd pressure_basis_;
  Eigen::MatrixXd snapshot_coords_;          // velocity-basis coordinates of each snapshot velocity
  std::vector<Eigen::MatrixXd> a_red_;       // Nv x Nv per viscous term
  std::vector<Eigen::MatrixXd> b_red_;       // Np x Nv per divergence term
  std::vector<Eigen::VectorXd> f_red_;       // Nv per force term
  std::vector<Eigen::VectorXd> a_lift_red_;  // V^T (A^q u0) per viscous term
  std::vector<Eigen::VectorXd> b_lift_red_;  // Q^T (B^q u0) per divergence term
  std::vector<GreedyRecord> history_;
  RbOptions options_;
};

/// Supremizer T^mu q: X s = B(mu)^T q on free velocity dofs.
Eigen::VectorXd supremizer(const StokesModel& model, const StokesOperator& op, const Eigen::VectorXd& q);

/// Relative dual norm of the residual of a free-dof pair (u~, p) in the
/// homogeneous problem: velocity part measured with X^-1, pressure part
/// with M^-1 on the mean-zero space.
class ResidualNorm {
 public:
  explicit ResidualNorm(const StokesModel& model);
  double operator()(const StokesOperator& op, const Eigen::VectorXd& u_free, const Eigen::VectorXd& p) const;
  const StokesModel& model() const { return *model_; }
  /// H1 norm of a component-blocked velocity on free dofs, resp. on all P2 nodes.
  double velocity_norm_free(const Eigen::VectorXd& u_free) const;
  double velocity_norm_full(const Eigen::VectorXd& u) const;
  double pressure_norm(const Eigen::VectorXd& p) const;
  /// Absolute dual norm of a residual pair.
  double dual(const Eigen::VectorXd& rv, const Eigen::VectorXd& rp) const;

 private:

  const StokesModel* model_;
  Eigen::SparseMatrix<double> gram_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> gram_llt_;
  Eigen::SparseMatrix<double> mass_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> mass_llt_;
};

/// Greedy offline stage. The truth is the reduced-FEM (affine) model.
ReducedModel greedy_build(const AffineSystem& system, const ParameterDomain& domain, const RbOptions& options);

/// Relative error of the n-snapshot RB solution against a truth solution,
/// max of velocity (H1) and pressure (L2).
double rb_error(const ReducedModel& rb, const ResidualNorm& norms, const AffineTheta& theta,
                const FluidSolution& truth, std::size_t n = 0);

/// RB online solve plus reconstruction, for the coupling loop.
class RbSolver : public FluidSolver {
 public:
  RbSolver(const StokesModel& model, const TensorEim& eim, const ReducedModel& rb) : model_(&model), eim_(&eim), rb_(&rb) {}
  FluidSolution solve(const ParameterVector& mu) override;
  std::string_view name() const override { return "rb"; }

 private:
  const StokesModel* model_;
  const TensorEim* eim_;
  const ReducedModel* rb_;
};

/// CSV with columns N,max_train_residual,max_test_error.
void write_error_decay_csv(std::ostream& os, const ReducedModel& rb);

}  // namespace fsirb
