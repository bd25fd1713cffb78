#include "fsirb/stokes.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

namespace fsirb {

void PhysicalConstants::validate() const {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("viscosity must be positive");
  if (!(K > 0.0) || !std::isfinite(K)) throw std::invalid_argument("wall spring constant must be positive");
  if (!std::isfinite(v0) || !force.allFinite()) throw std::invalid_argument("inflow speed and force must be finite");
}

Eigen::Vector2d poiseuille_profile(const ReferenceBox& box, double v0, const Point& x) {
  const double c = 0.5 * (box.x2_min + box.x2_max);
  const double h = 0.5 * box.height();
  const double r = (x[1] - c) / h;
  return {v0 * (1.0 - r * r), 0.0};
}

StokesModel::StokesModel(TaylorHoodSpace space, FfdLattice lattice, PhysicalConstants constants)
    : space_(std::move(space)), lattice_(std::move(lattice)), constants_(constants) {
  constants_.validate();
  const auto& box = space_.mesh().box;
  const auto& lbox = lattice_.box();
  if (box.x1_min != lbox.x1_min || box.x1_max != lbox.x1_max || box.x2_min != lbox.x2_min || box.x2_max != lbox.x2_max) {
    throw std::invalid_argument("mesh and lattice must share the same reference box");
  }
  jacobians_ = JacobianField(lattice_, space_.quadrature_points());
  const auto n = static_cast<Eigen::Index>(space_.num_velocity_nodes());
  lifting_ = Eigen::VectorXd::Zero(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d u = poiseuille_profile(box, constants_.v0, space_.velocity_node(static_cast<std::size_t>(i)));
    lifting_[i] = u[0];
    lifting_[n + i] = u[1];
  }
  QuadTensor identity(static_cast<Eigen::Index>(space_.num_quadrature_points()), 4);
  identity.col(0).setOnes();
  identity.col(1).setZero();
  identity.col(2).setZero();
  identity.col(3).setOnes();
  velocity_gram_ = space_.assemble_mass() + space_.assemble_grad_grad(identity);
  pressure_mass_ = space_.assemble_pressure_mass();
  pressure_load_ = space_.pressure_load();
}

void StokesModel::evaluate_tensors(const ParameterVector& mu, QuadTensor& nu, QuadTensor& chi, Eigen::VectorXd& det) const {
  const auto np = static_cast<Eigen::Index>(jacobians_.num_points());
  nu.resize(np, 4);
  chi.resize(np, 4);
  det.resize(np);
  for (Eigen::Index p = 0; p < np; ++p) {
    const TransformTensors t = jacobians_.tensors(static_cast<std::size_t>(p), mu);
    nu.row(p) << t.nu(0, 0), t.nu(0, 1), t.nu(1, 0), t.nu(1, 1);
    chi.row(p) << t.chi(0, 0), t.chi(0, 1), t.chi(1, 0), t.chi(1, 1);
    det[p] = t.det;
  }
}

StokesOperator StokesModel::assemble(const ParameterVector& mu) const {
  QuadTensor nu, chi;
  Eigen::VectorXd det;
  evaluate_tensors(mu, nu, chi, det);
  StokesOperator op;
  op.a = space_.assemble_grad_grad(constants_.nu * nu);
  op.b = space_.assemble_divergence(chi);
  const auto n = static_cast<Eigen::Index>(space_.num_velocity_nodes());
  for (int k = 0; k < 2; ++k) {
    op.force[static_cast<std::size_t>(k)] =
        constants_.force[k] == 0.0 ? Eigen::VectorXd::Zero(n) : Eigen::VectorXd(constants_.force[k] * space_.assemble_load(det));
  }
  return op;
}

void lifted_rhs(const StokesModel& model, const StokesOperator& op, Eigen::VectorXd& F, Eigen::VectorXd& G) {
  const auto& space = model.space();
  const auto n = static_cast<Eigen::Index>(space.num_velocity_nodes());
  const auto nf = static_cast<Eigen::Index>(space.num_free_nodes());
  const auto A = space.velocity_pattern().view(op.a);
  const auto& u0 = model.lifting();
  F.resize(2 * nf);
  G = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_pressure_dofs()));
  for (int k = 0; k < 2; ++k) {
    const Eigen::VectorXd u0k = u0.segment(k * n, n);
    const Eigen::VectorXd Au0 = A * u0k;
    const auto& fk = op.force[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < nf; ++i) {
      const auto node = space.free_nodes()[static_cast<std::size_t>(i)];
      F[k * nf + i] = fk[node] - Au0[node];
    }
    G -= space.divergence_pattern().view(op.b[static_cast<std::size_t>(k)]) * u0k;
  }
}

namespace {

int find_slot(const Eigen::SparseMatrix<double>& m, int row, int col) {
  const int* outer = m.outerIndexPtr();
  const int* inner = m.innerIndexPtr();
  const int* found = std::lower_bound(inner + outer[col], inner + outer[col + 1], row);
  if (found == inner + outer[col + 1] || *found != row) throw std::logic_error("saddle-point pattern is missing an entry");
  return static_cast<int>(found - inner);
}

}  // namespace

SaddlePointSolver::SaddlePointSolver(const StokesModel& model, double tolerance)
    : model_(&model), tolerance_(tolerance) {
  const auto& space = model.space();
  const int nf = static_cast<int>(space.num_free_nodes());
  const int np = static_cast<int>(space.num_pressure_dofs());
  const int n = 2 * nf + np + 1;
  const int mult = 2 * nf + np;
  const auto& ap = space.velocity_pattern().structure;
  const auto& bp = space.divergence_pattern().structure;
  const auto& pp = space.pressure_pattern().structure;
  // The Schur complement scales like 1/nu, so the shift is relative to it.
  delta_ = 1e-8 / model.constants().nu;

  std::vector<Eigen::Triplet<double>> triplets;
  for (int r = 0; r < ap.outerSize(); ++r) {
    const int fr = space.free_index(static_cast<std::size_t>(r));
    if (fr < 0) continue;
    for (int s = ap.outerIndexPtr()[r]; s < ap.outerIndexPtr()[r + 1]; ++s) {
      const int fc = space.free_index(static_cast<std::size_t>(ap.innerIndexPtr()[s]));
      if (fc < 0) continue;
      for (int k = 0; k < 2; ++k) triplets.emplace_back(k * nf + fr, k * nf + fc, 0.0);
    }
  }
  for (int q = 0; q < bp.outerSize(); ++q) {
    for (int s = bp.outerIndexPtr()[q]; s < bp.outerIndexPtr()[q + 1]; ++s) {
      const int fc = space.free_index(static_cast<std::size_t>(bp.innerIndexPtr()[s]));
      if (fc < 0) continue;
      for (int k = 0; k < 2; ++k) {
        triplets.emplace_back(2 * nf + q, k * nf + fc, 0.0);
        triplets.emplace_back(k * nf + fc, 2 * nf + q, 0.0);
      }
    }
  }
  const Eigen::VectorXd& mass = model.pressure_mass();
  for (int q = 0; q < pp.outerSize(); ++q) {
    for (int s = pp.outerIndexPtr()[q]; s < pp.outerIndexPtr()[q + 1]; ++s) {
      triplets.emplace_back(2 * nf + q, 2 * nf + pp.innerIndexPtr()[s], -delta_ * mass[s]);
    }
  }
  const Eigen::VectorXd& load = model.pressure_load();
  for (int q = 0; q < np; ++q) {
    triplets.emplace_back(2 * nf + q, mult, load[q]);
    triplets.emplace_back(mult, 2 * nf + q, load[q]);
  }
  triplets.emplace_back(mult, mult, -delta_);
  matrix_.resize(n, n);
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();

  for (int k = 0; k < 2; ++k) {
    a_slot_[k].assign(static_cast<std::size_t>(ap.nonZeros()), -1);
    b_slot_[k].assign(static_cast<std::size_t>(bp.nonZeros()), -1);
    bt_slot_[k].assign(static_cast<std::size_t>(bp.nonZeros()), -1);
  }
  for (int r = 0; r < ap.outerSize(); ++r) {
    const int fr = space.free_index(static_cast<std::size_t>(r));
    if (fr < 0) continue;
    for (int s = ap.outerIndexPtr()[r]; s < ap.outerIndexPtr()[r + 1]; ++s) {
      const int fc = space.free_index(static_cast<std::size_t>(ap.innerIndexPtr()[s]));
      if (fc < 0) continue;
      for (int k = 0; k < 2; ++k) a_slot_[k][static_cast<std::size_t>(s)] = find_slot(matrix_, k * nf + fr, k * nf + fc);
    }
  }
  for (int q = 0; q < bp.outerSize(); ++q) {
    for (int s = bp.outerIndexPtr()[q]; s < bp.outerIndexPtr()[q + 1]; ++s) {
      const int fc = space.free_index(static_cast<std::size_t>(bp.innerIndexPtr()[s]));
      if (fc < 0) continue;
      for (int k = 0; k < 2; ++k) {
        b_slot_[k][static_cast<std::size_t>(s)] = find_slot(matrix_, 2 * nf + q, k * nf + fc);
        bt_slot_[k][static_cast<std::size_t>(s)] = find_slot(matrix_, k * nf + fc, 2 * nf + q);
      }
    }
  }
}

void SaddlePointSolver::factorize(const Eigen::VectorXd& a, const std::array<Eigen::VectorXd, 2>& b) {
  double* values = matrix_.valuePtr();
  for (int k = 0; k < 2; ++k) {
    const auto& as = a_slot_[k];
    for (std::size_t s = 0; s < as.size(); ++s) {
      if (as[s] >= 0) values[as[s]] = a[static_cast<Eigen::Index>(s)];
    }
    const auto& bs = b_slot_[k];
    const auto& bts = bt_slot_[k];
    const auto& bv = b[static_cast<std::size_t>(k)];
    for (std::size_t s = 0; s < bs.size(); ++s) {
      if (bs[s] >= 0) {
        values[bs[s]] = bv[static_cast<Eigen::Index>(s)];
        values[bts[s]] = bv[static_cast<Eigen::Index>(s)];
      }
    }
  }
  if (!analyzed_) {
    ldlt_.analyzePattern(matrix_);
    analyzed_ = true;
  }
  ldlt_.factorize(matrix_);
  if (ldlt_.info() != Eigen::Success) throw SolverError("saddle-point factorization failed");
}

Eigen::VectorXd SaddlePointSolver::apply_exact(const Eigen::VectorXd& x) const {
  const auto& space = model_->space();
  const auto nf = static_cast<Eigen::Index>(space.num_free_nodes());
  const auto np = static_cast<Eigen::Index>(space.num_pressure_dofs());
  Eigen::VectorXd y = matrix_ * x;
  y.segment(2 * nf, np) += delta_ * (space.pressure_pattern().view(model_->pressure_mass()) * x.segment(2 * nf, np));
  y[2 * nf + np] += delta_ * x[2 * nf + np];
  return y;
}

Eigen::VectorXd SaddlePointSolver::solve_system(const Eigen::VectorXd& rhs, double* relative_residual) {
  if (!analyzed_) throw std::logic_error("SaddlePointSolver: solve before factorize");
  const double rhs_norm = rhs.norm();
  Eigen::VectorXd x = ldlt_.solve(rhs);
  double rel = 0.0;
  for (int it = 0; it < 20; ++it) {
    const Eigen::VectorXd r = rhs - apply_exact(x);
    rel = rhs_norm > 0.0 ? r.norm() / rhs_norm : r.norm();
    if (!std::isfinite(rel)) break;
    if (rel <= tolerance_) break;
    x += ldlt_.solve(r);
  }
  if (relative_residual) *relative_residual = rel;
  if (!std::isfinite(rel) || rel > 1e-10) {
    throw SolverError("saddle-point solve did not converge (relative residual " + std::to_string(rel) + ")");
  }
  return x;
}

FluidSolution SaddlePointSolver::solve(const StokesOperator& op, const ParameterVector& mu) {
  const auto& space = model_->space();
  const auto nf = static_cast<Eigen::Index>(space.num_free_nodes());
  const auto np = static_cast<Eigen::Index>(space.num_pressure_dofs());
  factorize(op.a, op.b);
  Eigen::VectorXd F, G;
  lifted_rhs(*model_, op, F, G);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(matrix_.rows());
  rhs.head(2 * nf) = F;
  rhs.segment(2 * nf, np) = G;

  FluidSolution sol;
  const Eigen::VectorXd x = solve_system(rhs, &sol.relative_residual);
  sol.mu = mu;
  sol.u = model_->lifting() + space.expand_free(x.head(2 * nf));
  sol.p = x.segment(2 * nf, np);
  sol.multiplier = x[2 * nf + np];
  return sol;
}

void SaddlePointSolver::residual(const StokesModel& model, const StokesOperator& op, const Eigen::VectorXd& u_free,
                                 const Eigen::VectorXd& p, Eigen::VectorXd& r_velocity, Eigen::VectorXd& r_pressure) {
  const auto& space = model.space();
  const auto n = static_cast<Eigen::Index>(space.num_velocity_nodes());
  Eigen::VectorXd F, G;
  lifted_rhs(model, op, F, G);
  const Eigen::VectorXd u = space.expand_free(u_free);
  const auto A = space.velocity_pattern().view(op.a);
  Eigen::VectorXd full(2 * n);
  r_pressure = G;
  for (int k = 0; k < 2; ++k) {
    const auto B = space.divergence_pattern().view(op.b[static_cast<std::size_t>(k)]);
    full.segment(k * n, n) = A * u.segment(k * n, n) + B.transpose() * p;
    r_pressure -= B * u.segment(k * n, n);
  }
  r_velocity = F - space.restrict_free(full);
}

WallTrace::WallTrace(const TaylorHoodSpace& space) {
  const auto& mesh = space.mesh();
  // Every P2 node on the wall: both vertices and the midpoint of each edge,
  // so one fluid edge carries two membrane segments.
  struct Half {
    double left, right;
    int triangle;
  };
  std::vector<std::pair<double, int>> nodes;
  std::vector<Half> halves;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& en = space.element_velocity_nodes(t);
    for (int k = 0; k < 3; ++k) {
      const auto& e = mesh.edges[static_cast<std::size_t>(mesh.triangle_edges[t][static_cast<std::size_t>(k)])];
      if (e.tag != BoundaryTag::flexible_wall) continue;
      const int na = en[static_cast<std::size_t>(k)], nb = en[static_cast<std::size_t>((k + 1) % 3)];
      const int nm = en[static_cast<std::size_t>(3 + k)];
      const double xa = space.velocity_node(static_cast<std::size_t>(na))[0];
      const double xb = space.velocity_node(static_cast<std::size_t>(nb))[0];
      const double xm = space.velocity_node(static_cast<std::size_t>(nm))[0];
      nodes.emplace_back(xa, na);
      nodes.emplace_back(xb, nb);
      nodes.emplace_back(xm, nm);
      halves.push_back({std::min(xa, xb), xm, static_cast<int>(t)});
      halves.push_back({xm, std::max(xa, xb), static_cast<int>(t)});
    }
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  if (nodes.size() < 3) throw std::invalid_argument("mesh has no flexible wall");
  x_.resize(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    x_[static_cast<Eigen::Index>(i)] = nodes[i].first;
    node_.push_back(nodes[i].second);
  }
  segments_.resize(nodes.size() - 1);
  std::vector<char> seen(segments_.size(), 0);
  for (const auto& h : halves) {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), std::make_pair(h.left, -1));
    const auto left = static_cast<std::size_t>(it - nodes.begin());
    if (left + 1 >= nodes.size() || nodes[left].first != h.left || nodes[left + 1].first != h.right) {
      throw std::runtime_error("flexible wall edges are not consecutive");
    }
    segments_[left] = {static_cast<int>(left), static_cast<int>(left) + 1, h.triangle};
    seen[left] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw std::runtime_error("flexible wall has gaps");

  std::vector<Eigen::Triplet<double>> triplets;
  for (const auto& s : segments_) {
    const double h = x_[s.right] - x_[s.left];
    triplets.emplace_back(s.left, s.left, h / 3.0);
    triplets.emplace_back(s.right, s.right, h / 3.0);
    triplets.emplace_back(s.left, s.right, h / 6.0);
    triplets.emplace_back(s.right, s.left, h / 6.0);
  }
  const auto nw = static_cast<Eigen::Index>(x_.size());
  mass_.resize(nw, nw);
  mass_.setFromTriplets(triplets.begin(), triplets.end());
  mass_ldlt_.compute(mass_);
  if (mass_ldlt_.info() != Eigen::Success) throw SolverError("wall mass matrix factorization failed");
}

Eigen::VectorXd WallTrace::solve_mass(const Eigen::VectorXd& rhs) const { return mass_ldlt_.solve(rhs); }

Eigen::VectorXd WallTrace::project(const std::function<double(double)>& f, int points) const {
  const LineRule rule = gauss_legendre(points);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(x_.size());
  for (const auto& s : segments_) {
    const double a = x_[s.left], h = x_[s.right] - x_[s.left];
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double xi = rule.points[q];
      const double w = rule.weights[q] * h * f(a + xi * h);
      rhs[s.left] += w * (1.0 - xi);
      rhs[s.right] += w * xi;
    }
  }
  return solve_mass(rhs);
}

Eigen::Matrix2d reference_velocity_gradient(const TaylorHoodSpace& space, const Eigen::VectorXd& u, std::size_t t,
                                            const Point& x) {
  const auto n = static_cast<Eigen::Index>(space.num_velocity_nodes());
  const auto grads = p2_gradients(space.barycentric(t, x), space.barycentric_gradients(t));
  const auto& nodes = space.element_velocity_nodes(t);
  Eigen::Matrix2d G = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < 6; ++i) {
    for (int k = 0; k < 2; ++k) G.row(k) += u[k * n + nodes[i]] * grads[i].transpose();
  }
  return G;
}

double pressure_at(const TaylorHoodSpace& space, const Eigen::VectorXd& p, std::size_t t, const Point& x) {
  const Eigen::Vector3d l = space.barycentric(t, x);
  const auto& v = space.element_pressure_dofs(t);
  return l[0] * p[v[0]] + l[1] * p[v[1]] + l[2] * p[v[2]];
}

Eigen::VectorXd compute_traction(const StokesModel& model, const WallTrace& wall, const FluidSolution& sol) {
  const auto& space = model.space();
  const double nu = model.constants().nu;
  const double x2 = space.mesh().box.x2_max;
  const LineRule rule = gauss_legendre(4);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(wall.num_nodes()));
  for (std::size_t k = 0; k < wall.num_segments(); ++k) {
    const auto& s = wall.segment(k);
    const double a = wall.x()[s.left], h = wall.x()[s.right] - a;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double xi = rule.points[q];
      const Point X(a + xi * h, x2);
      const auto t = static_cast<std::size_t>(s.triangle);
      const Mat2 J = model.lattice().jacobian(X, sol.mu);
      const double det = J.determinant();
      if (!(det > 0.0)) throw DegenerateGeometry(X, sol.mu, det);
      const Mat2 Jinv = J.inverse();
      const Eigen::Matrix2d grad = reference_velocity_gradient(space, sol.u, t, X) * Jinv;
      Eigen::Vector2d n = Jinv.transpose() * Eigen::Vector2d(0.0, 1.0);
      n.normalize();
      const Eigen::Vector2d traction = pressure_at(space, sol.p, t, X) * n - nu * (grad + grad.transpose()) * n;
      const double w = rule.weights[q] * h * traction[1];
      rhs[s.left] += w * (1.0 - xi);
      rhs[s.right] += w * xi;
    }
  }
  return wall.solve_mass(rhs);
}

double boundary_flux(const StokesModel& model, const FluidSolution& sol, std::optional<BoundaryTag> only) {
  const auto& space = model.space();
  const auto& mesh = space.mesh();
  const auto n = static_cast<Eigen::Index>(space.num_velocity_nodes());
  const LineRule rule = gauss_legendre(3);
  double flux = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const auto& edge = mesh.edges[static_cast<std::size_t>(mesh.triangle_edges[t][static_cast<std::size_t>(k)])];
      if (edge.tag == BoundaryTag::none || (only && edge.tag != *only)) continue;
      const Point& a = mesh.nodes[static_cast<std::size_t>(mesh.triangles[t][static_cast<std::size_t>(k)])];
      const Point& b = mesh.nodes[static_cast<std::size_t>(mesh.triangles[t][static_cast<std::size_t>((k + 1) % 3)])];
      const auto& nodes = space.element_velocity_nodes(t);
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Point X = a + rule.points[q] * (b - a);
        const auto phi = p2_values(space.barycentric(t, X));
        Eigen::Vector2d u = Eigen::Vector2d::Zero();
        for (std::size_t i = 0; i < 6; ++i) {
          u[0] += phi[i] * sol.u[nodes[i]];
          u[1] += phi[i] * sol.u[n + nodes[i]];
        }
        // Counter-clockwise boundary: outward normal is the tangent rotated clockwise.
        const Eigen::Vector2d tangent = model.lattice().jacobian(X, sol.mu) * (b - a);
        flux += rule.weights[q] * u.dot(Eigen::Vector2d(tangent[1], -tangent[0]));
      }
    }
  }
  return flux;
}

double pressure_integral(const StokesModel& model, const Eigen::VectorXd& p) { return model.pressure_load().dot(p); }

void write_solution_csv(std::ostream& os, const StokesModel& model, const FluidSolution& sol) {
  const auto& space = model.space();
  const auto n = static_cast<Eigen::Index>(space.num_velocity_nodes());
  os << "id,x1,x2,u1,u2,p\n" << std::setprecision(12);
  for (std::size_t i = 0; i < space.num_pressure_dofs(); ++i) {
    const Point& x = space.mesh().nodes[i];
    const auto k = static_cast<Eigen::Index>(i);
    os << i << ',' << x[0] << ',' << x[1] << ',' << sol.u[k] << ',' << sol.u[n + k] << ',' << sol.p[k] << '\n';
  }
}

void write_deformed_mesh_csv(std::ostream& os, const StokesModel& model, const ParameterVector& mu) {
  os << "x1,x2,x1_def,x2_def\n" << std::setprecision(12);
  for (const Point& x : model.space().mesh().nodes) {
    const Point y = model.lattice().map(x, mu);
    os << x[0] << ',' << x[1] << ',' << y[0] << ',' << y[1] << '\n';
  }
}

}  // namespace fsirb
