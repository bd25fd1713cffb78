#include "fsirb/coupling.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <stdexcept>

namespace fsirb {

WallModel::WallModel(const TaylorHoodSpace& space, const FfdLattice& lattice, double K, ParameterDomain bounds)
    : trace_(space), K_(K), bounds_(std::move(bounds)) {
  if (!(K > 0.0) || !std::isfinite(K)) throw std::invalid_argument("wall: spring constant must be positive");
  if (bounds_.size() != lattice.num_parameters()) throw std::invalid_argument("wall: bounds do not match lattice");
  const auto n = static_cast<Eigen::Index>(trace_.num_nodes());
  const Eigen::VectorXd& x = trace_.x();
  const ReferenceBox& box = lattice.box();
  if (n < 3) throw std::invalid_argument("wall: need at least one interior node");

  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double k = K / (x[i + 1] - x[i]);
    const Eigen::Index a = i - 1, b = i;  // interior numbering
    if (a >= 0) t.emplace_back(a, a, k);
    if (b < n - 2) t.emplace_back(b, b, k);
    if (a >= 0 && b < n - 2) {
      t.emplace_back(a, b, -k);
      t.emplace_back(b, a, -k);
    }
  }
  Eigen::SparseMatrix<double> S(n - 2, n - 2);
  S.setFromTriplets(t.begin(), t.end());
  stiffness_.compute(S);
  if (stiffness_.info() != Eigen::Success) throw SolverError("wall: membrane factorization failed");

  std::vector<double> s_nodes(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) s_nodes[static_cast<std::size_t>(i)] = (x[i] - box.x1_min) / box.width();
  node_basis_ = lattice.displacement_basis_matrix(s_nodes);

  // (eta - eta_hat)^2 has degree 2 L per segment.
  const LineRule rule = gauss_legendre(lattice.degree_x() + 1);
  std::vector<double> s_q;
  std::vector<double> w;
  for (std::size_t k = 0; k < trace_.num_segments(); ++k) {
    const auto& seg = trace_.segment(k);
    const double a = x[seg.left], h = x[seg.right] - a;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      s_q.push_back((a + rule.points[q] * h - box.x1_min) / box.width());
      w.push_back(rule.weights[q] * h);
      segment_.push_back(static_cast<int>(k));
    }
  }
  weights_ = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  xq_.resize(weights_.size());
  for (std::size_t q = 0; q < s_q.size(); ++q) xq_[static_cast<Eigen::Index>(q)] = box.x1_min + s_q[q] * box.width();
  xi_.resize(weights_.size());
  for (std::size_t q = 0; q < s_q.size(); ++q) xi_[static_cast<Eigen::Index>(q)] = rule.points[q % rule.points.size()];
  basis_ = lattice.displacement_basis_matrix(s_q);
  slope_basis_ = lattice.slope_basis_matrix(s_q);

  const Eigen::MatrixXd G = basis_.transpose() * weights_.asDiagonal() * basis_ +
                            slope_basis_.transpose() * weights_.asDiagonal() * slope_basis_;
  gram_.compute(G);
  if (gram_.info() != Eigen::Success) throw SolverError("wall: displacement Gram matrix is singular");
}

Eigen::VectorXd WallModel::solve_membrane(const Eigen::VectorXd& tau) const {
  const auto n = static_cast<Eigen::Index>(num_nodes());
  if (tau.size() != n) throw std::invalid_argument("membrane: traction has wrong size");
  const Eigen::VectorXd load = trace_.mass() * tau;
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  eta.segment(1, n - 2) = stiffness_.solve(load.segment(1, n - 2));
  return eta;
}

Eigen::VectorXd WallModel::displacement(const ParameterVector& mu) const { return node_basis_ * mu.values(); }

void WallModel::p1_at_quadrature(const Eigen::VectorXd& f, Eigen::VectorXd& value, Eigen::VectorXd& slope) const {
  if (f.size() != static_cast<Eigen::Index>(num_nodes())) throw std::invalid_argument("wall: nodal vector has wrong size");
  value.resize(weights_.size());
  slope.resize(weights_.size());
  const Eigen::VectorXd& x = trace_.x();
  for (Eigen::Index q = 0; q < weights_.size(); ++q) {
    const auto& seg = trace_.segment(static_cast<std::size_t>(segment_[static_cast<std::size_t>(q)]));
    const double fl = f[seg.left], fr = f[seg.right];
    value[q] = fl + xi_[q] * (fr - fl);
    slope[q] = (fr - fl) / (x[seg.right] - x[seg.left]);
  }
}

ParameterVector WallModel::fit(const Eigen::VectorXd& eta_hat) const {
  Eigen::VectorXd v, d;
  p1_at_quadrature(eta_hat, v, d);
  return fit_quadrature(v, d);
}

ParameterVector WallModel::fit(const std::function<double(double)>& eta, const std::function<double(double)>& slope) const {
  Eigen::VectorXd v(xq_.size()), d(xq_.size());
  for (Eigen::Index q = 0; q < xq_.size(); ++q) {
    v[q] = eta(xq_[q]);
    d[q] = slope(xq_[q]);
  }
  return fit_quadrature(v, d);
}

ParameterVector WallModel::fit_quadrature(const Eigen::VectorXd& v, const Eigen::VectorXd& d) const {
  const Eigen::VectorXd rhs = basis_.transpose() * weights_.cwiseProduct(v) + slope_basis_.transpose() * weights_.cwiseProduct(d);
  return ParameterVector(gram_.solve(rhs));
}

ParameterVector WallModel::project(const Eigen::VectorXd& eta_hat) const {
  ParameterVector mu = fit(eta_hat);
  const ParameterVector raw = mu;
  if (bounds_.clip(mu)) std::clog << "warning: projected mu = (" << raw.to_string() << ") clipped to the parameter bounds\n";
  return mu;
}

double WallModel::misfit(const ParameterVector& mu, const Eigen::VectorXd& eta_hat) const {
  Eigen::VectorXd v, d;
  p1_at_quadrature(eta_hat, v, d);
  const Eigen::VectorXd ev = basis_ * mu.values() - v;
  const Eigen::VectorXd ed = slope_basis_ * mu.values() - d;
  return 0.5 * (weights_.dot(ev.cwiseAbs2()) + weights_.dot(ed.cwiseAbs2()));
}

double WallModel::strong_residual(const ParameterVector& mu, const Eigen::VectorXd& tau) const {
  const Eigen::VectorXd eta = displacement(mu);
  const Eigen::VectorXd& x = trace_.x();
  double s = 0.0;
  for (Eigen::Index i = 1; i + 1 < x.size(); ++i) {
    const double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i];
    const double d2 = 2.0 * ((eta[i + 1] - eta[i]) / hr - (eta[i] - eta[i - 1]) / hl) / (hl + hr);
    const double r = K_ * d2 + tau[i];
    s += 0.5 * (hl + hr) * r * r;
  }
  return 0.5 * s;
}

CouplingState couple(FluidSolver& solver, const StokesModel& model, const WallModel& wall,
                     const CouplingOptions& options) {
  if (!(options.tolerance > 0.0)) throw std::invalid_argument("coupling: tolerance must be positive");
  if (!(options.relaxation > 0.0 && options.relaxation <= 1.0)) throw std::invalid_argument("coupling: relaxation must be in (0, 1]");
  if (options.max_iterations < 1) throw std::invalid_argument("coupling: max_iterations must be positive");

  CouplingState state;
  state.mu = ParameterVector::zero(model.lattice().num_parameters());
  for (int k = 0; k < options.max_iterations; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const FluidSolution sol = solver.solve(state.mu);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    state.traction = compute_traction(model, wall.trace(), sol);
    state.eta_hat = wall.solve_membrane(state.traction);
    const ParameterVector target = wall.project(state.eta_hat);
    ParameterVector next(state.mu.values() + options.relaxation * (target.values() - state.mu.values()));

    state.k = k;
    state.step_norm = (next.values() - state.mu.values()).norm();
    state.mu = next;
    state.misfit = wall.misfit(state.mu, state.eta_hat);
    state.strong_residual = wall.strong_residual(state.mu, state.traction);
    state.history.push_back({k, state.mu, state.step_norm, state.misfit, ms});
    if (!std::isfinite(state.step_norm)) throw SolverError("coupling: iteration diverged at mu = (" + state.mu.to_string() + ")");
    if (state.step_norm < options.tolerance) {
      state.converged = true;
      break;
    }
  }
  return state;
}

void write_coupling_trace_csv(std::ostream& os, const CouplingState& state) {
  const std::size_t n = state.mu.size();
  os << "k";
  for (std::size_t j = 0; j < n; ++j) os << ",mu_" << j + 1;
  os << ",step_norm,J_k,fluid_solve_ms\n" << std::setprecision(12);
  for (const auto& s : state.history) {
    os << s.k;
    for (std::size_t j = 0; j < n; ++j) os << ',' << s.mu[j];
    os << ',' << s.step_norm << ',' << s.misfit << ',' << s.fluid_solve_ms << '\n';
  }
}

void write_interface_csv(std::ostream& os, const WallModel& wall, const CouplingState& state) {
  const Eigen::VectorXd eta = wall.displacement(state.mu);
  os << "x1,eta,eta_hat\n" << std::setprecision(12);
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    os << wall.trace().x()[i] << ',' << eta[i] << ',' << (state.eta_hat.size() ? state.eta_hat[i] : 0.0) << '\n';
  }
}

}  // namespace fsirb
