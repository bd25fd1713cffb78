#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string_view>

#include <Eigen/SparseCholesky>

#include "fsirb/ffd.hpp"
#include "fsirb/taylor_hood.hpp"

namespace fsirb {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fluid and wall data in g, cm, s units.
struct PhysicalConstants {
  double nu = 0.035;           ///< viscosity, g/(cm s)
  double v0 = 30.0;            ///< peak inflow speed, cm/s
  Eigen::Vector2d force{0.0, 0.0};  ///< constant volume force
  double K = 62.5;             ///< wall spring constant, g/s^2

  void validate() const;
};

/// Parameter-dependent discrete Stokes forms on the reference mesh:
///   a(mu)   scalar P2 viscous matrix (block-diagonal for the two velocity components),
///   b(mu)   P1 x P2 divergence blocks, one per velocity component,
///   force   volume-force load per component over all P2 nodes.
/// All arrays are values on the TaylorHoodSpace patterns.
struct StokesOperator {
  Eigen::VectorXd a;
  std::array<Eigen::VectorXd, 2> b;
  std::array<Eigen::VectorXd, 2> force;
};

struct FluidSolution {
  Eigen::VectorXd u;  ///< component-blocked P2 velocity including the lifting, cm/s
  Eigen::VectorXd p;  ///< P1 pressure, g/(cm s^2), zero mean over the reference domain
  ParameterVector mu;
  double multiplier = 0.0;
  double relative_residual = 0.0;
};

/// Poiseuille profile v0 (1 - ((x2 - c) / h)^2) e1, c and h the box centerline and half-width.
Eigen::Vector2d poiseuille_profile(const ReferenceBox& box, double v0, const Point& x);

/// Reference-domain discretization together with the geometry and physics.
/// Immutable once built.
class StokesModel {
 public:
  StokesModel(TaylorHoodSpace space, FfdLattice lattice, PhysicalConstants constants);

  const TaylorHoodSpace& space() const { return space_; }
  const FfdLattice& lattice() const { return lattice_; }
  const PhysicalConstants& constants() const { return constants_; }
  const JacobianField& quadrature_jacobians() const { return jacobians_; }

  /// Interpolant of the Poiseuille profile on all P2 nodes (component-blocked).
  const Eigen::VectorXd& lifting() const { return lifting_; }
  /// H1 Gram matrix (mass + stiffness) of one scalar P2 component.
  const Eigen::VectorXd& velocity_gram() const { return velocity_gram_; }
  const Eigen::VectorXd& pressure_mass() const { return pressure_mass_; }
  const Eigen::VectorXd& pressure_load() const { return pressure_load_; }

  /// Transformation tensors at every quadrature point; throws DegenerateGeometry.
  void evaluate_tensors(const ParameterVector& mu, QuadTensor& nu, QuadTensor& chi, Eigen::VectorXd& det) const;
  /// Direct assembly of the pulled-back Stokes forms at mu.
  StokesOperator assemble(const ParameterVector& mu) const;

 private:
  TaylorHoodSpace space_;
  FfdLattice lattice_;
  PhysicalConstants constants_;
  JacobianField jacobians_;
  Eigen::VectorXd lifting_;
  Eigen::VectorXd velocity_gram_;
  Eigen::VectorXd pressure_mass_;
  Eigen::VectorXd pressure_load_;
};

/// Right-hand sides of the homogeneous problem for a lifting u0:
/// F = force - A u0 on free velocity dofs, G = -B u0.
void lifted_rhs(const StokesModel& model, const StokesOperator& op, Eigen::VectorXd& F, Eigen::VectorXd& G);

/// Sparse direct solver of the saddle-point system
///   [ A   B^T  0 ] [u~]   [F]
///   [ B   0    m ] [p ] = [G]
///   [ 0   m^T  0 ] [l ]   [0]
/// over free velocity dofs, all pressure dofs, and one multiplier fixing the
/// pressure mean. The matrix is factored as a quasi-definite LDL^T after
/// shifting the two zero blocks by -delta (pressure mass, resp. 1), and the
/// shift is removed again by iterative refinement against the exact matrix.
/// The symbolic analysis is done once and reused.
class SaddlePointSolver {
 public:
  explicit SaddlePointSolver(const StokesModel& model, double tolerance = 1e-12);

  /// Factor with the scalar velocity block `a` (values on the velocity pattern) and divergence blocks `b`.
  void factorize(const Eigen::VectorXd& a, const std::array<Eigen::VectorXd, 2>& b);
  /// Solve with the current factorization; throws SolverError when refinement stalls.
  Eigen::VectorXd solve_system(const Eigen::VectorXd& rhs, double* relative_residual = nullptr);
  Eigen::Index num_unknowns() const { return matrix_.rows(); }

  FluidSolution solve(const StokesOperator& op, const ParameterVector& mu);
  /// Residual [F - A u~ - B^T p ; G - B u~] of a homogeneous free-dof pair, for error estimation.
  static void residual(const StokesModel& model, const StokesOperator& op, const Eigen::VectorXd& u_free,
                       const Eigen::VectorXd& p, Eigen::VectorXd& r_velocity, Eigen::VectorXd& r_pressure);

 private:
  Eigen::VectorXd apply_exact(const Eigen::VectorXd& x) const;

  const StokesModel* model_;
  double tolerance_;
  double delta_;
  Eigen::SparseMatrix<double> matrix_;  // shifted
  std::vector<int> a_slot_[2];
  std::vector<int> b_slot_[2];
  std::vector<int> bt_slot_[2];
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  bool analyzed_ = false;
};

/// Anything that returns a fluid solution for a geometry parameter.
class FluidSolver {
 public:
  virtual ~FluidSolver() = default;
  virtual FluidSolution solve(const ParameterVector& mu) = 0;
  virtual std::string_view name() const = 0;
};

/// Direct assembly + sparse direct solve at every call.
class FullFemSolver : public FluidSolver {
 public:
  explicit FullFemSolver(const StokesModel& model) : model_(&model), solver_(model) {}
  FluidSolution solve(const ParameterVector& mu) override { return solver_.solve(model_->assemble(mu), mu); }
  std::string_view name() const override { return "full_fem"; }

 private:
  const StokesModel* model_;
  SaddlePointSolver solver_;
};

/// P1 trace space on the flexible wall (top side of the reference box), with
/// the P2 velocity nodes on the wall as its mesh.
class WallTrace {
 public:
  explicit WallTrace(const TaylorHoodSpace& space);

  std::size_t num_nodes() const { return x_.size(); }
  const Eigen::VectorXd& x() const { return x_; }
  std::size_t num_segments() const { return segments_.size(); }
  /// P2 velocity node of wall node i.
  int velocity_node(std::size_t i) const { return node_[i]; }

  struct Segment {
    int left = 0;       ///< wall node index
    int right = 0;
    int triangle = 0;   ///< element owning the segment
  };
  const Segment& segment(std::size_t k) const { return segments_[k]; }

  const Eigen::SparseMatrix<double>& mass() const { return mass_; }
  /// L2 projection onto the trace space of f(x1) using an n-point Gauss rule per segment.
  Eigen::VectorXd project(const std::function<double(double)>& f, int points = 5) const;
  /// Solve mass * c = rhs.
  Eigen::VectorXd solve_mass(const Eigen::VectorXd& rhs) const;

 private:
  Eigen::VectorXd x_;
  std::vector<int> node_;
  std::vector<Segment> segments_;
  Eigen::SparseMatrix<double> mass_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> mass_ldlt_;
};

/// Velocity gradient d u_k / d X_i in reference coordinates at x inside element t.
Eigen::Matrix2d reference_velocity_gradient(const TaylorHoodSpace& space, const Eigen::VectorXd& u, std::size_t t,
                                            const Point& x);
/// Pressure at x inside element t.
double pressure_at(const TaylorHoodSpace& space, const Eigen::VectorXd& p, std::size_t t, const Point& x);

/// x2-component of the fluid traction  p n - nu (grad u + grad u^T) n  on the
/// deformed wall, evaluated with physical gradients and normals, then
/// L2-projected onto the wall trace space.
Eigen::VectorXd compute_traction(const StokesModel& model, const WallTrace& wall, const FluidSolution& sol);

/// Net flux of u through the deformed boundary, or through the edges with one tag.
double boundary_flux(const StokesModel& model, const FluidSolution& sol, std::optional<BoundaryTag> only = std::nullopt);
/// Integral of p over the reference domain.
double pressure_integral(const StokesModel& model, const Eigen::VectorXd& p);

/// Scalar velocity matrix restricted to free nodes (nf x nf).
Eigen::SparseMatrix<double> free_scalar_block(const TaylorHoodSpace& space, const Eigen::VectorXd& values);
/// Divergence blocks restricted to free velocity dofs: np x 2 nf, columns component-blocked.
Eigen::SparseMatrix<double> free_divergence(const TaylorHoodSpace& space, const std::array<Eigen::VectorXd, 2>& b);

/// Discrete inf-sup constant beta_h(mu): square root of the smallest nonzero
/// eigenvalue of  B X^-1 B^T q = lambda M q  (X the H1 velocity Gram matrix,
/// M the pressure mass), computed by block inverse iteration with
/// Rayleigh-Ritz on the mean-zero pressure space.
struct InfSupOptions {
  int block_size = 6;
  int max_iterations = 200;
  double tolerance = 1e-10;
  std::uint64_t seed = 7;
};
double compute_infsup(const StokesModel& model, const StokesOperator& op, const InfSupOptions& options = {});

/// CSV with one row per mesh vertex: id,x1,x2,u1,u2,p.
void write_solution_csv(std::ostream& os, const StokesModel& model, const FluidSolution& sol);
/// CSV with one row per mesh vertex: x1,x2,x1_def,x2_def.
void write_deformed_mesh_csv(std::ostream& os, const StokesModel& model, const ParameterVector& mu);

}  // namespace fsirb
