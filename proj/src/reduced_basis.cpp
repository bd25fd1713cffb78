#include "fsirb/reduced_basis.hpp"

#include <cmath>
#include <iomanip>
#include <iostream>
#include <ostream>

#include <Eigen/SVD>

namespace fsirb {

std::size_t ReducedModel::resolve(std::size_t n) const {
  if (snapshots_.empty()) throw std::logic_error("reduced model is empty");
  if (n == 0) return snapshots_.size();
  if (n > snapshots_.size()) throw std::invalid_argument("reduced model has only " + std::to_string(snapshots_.size()) + " snapshots");
  return n;
}

Eigen::MatrixXd ReducedModel::reduced_a(const AffineTheta& theta, std::size_t n) const {
  const Eigen::Index nv = velocity_count(resolve(n));
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nv, nv);
  for (std::size_t q = 0; q < a_red_.size(); ++q) A += theta.a[static_cast<Eigen::Index>(q)] * a_red_[q].topLeftCorner(nv, nv);
  return A;
}

Eigen::MatrixXd ReducedModel::reduced_b(const AffineTheta& theta, std::size_t n) const {
  n = resolve(n);
  const Eigen::Index nv = velocity_count(n), np = pressure_count(n);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(np, nv);
  for (std::size_t q = 0; q < b_red_.size(); ++q) B += theta.b[static_cast<Eigen::Index>(q)] * b_red_[q].topLeftCorner(np, nv);
  return B;
}

ReducedSolution ReducedModel::solve(const AffineTheta& theta, const ParameterVector& mu, std::size_t n) const {
  n = resolve(n);
  const Eigen::Index nv = velocity_count(n), np = pressure_count(n);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nv + np, nv + np);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + np);
  for (std::size_t q = 0; q < a_red_.size(); ++q) {
    const double t = theta.a[static_cast<Eigen::Index>(q)];
    K.topLeftCorner(nv, nv) += t * a_red_[q].topLeftCorner(nv, nv);
    rhs.head(nv) -= t * a_lift_red_[q].head(nv);
  }
  for (std::size_t q = 0; q < b_red_.size(); ++q) {
    const double t = theta.b[static_cast<Eigen::Index>(q)];
    K.bottomLeftCorner(np, nv) += t * b_red_[q].topLeftCorner(np, nv);
    rhs.tail(np) -= t * b_lift_red_[q].head(np);
  }
  K.topRightCorner(nv, np) = K.bottomLeftCorner(np, nv).transpose();
  for (std::size_t q = 0; q < f_red_.size(); ++q) rhs.head(nv) += theta.f[static_cast<Eigen::Index>(q)] * f_red_[q].head(nv);

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
  if (!(lu.rcond() > 1e-14)) throw SolverError("reduced saddle-point system is singular at mu = (" + mu.to_string() + ")");
  const Eigen::VectorXd x = lu.solve(rhs);
  return {x.head(nv), x.tail(np), mu};
}

double ReducedModel::infsup(const AffineTheta& theta, std::size_t n, bool enriched) const {
  n = resolve(n);
  const Eigen::MatrixXd B = reduced_b(theta, n);
  if (enriched) return Eigen::JacobiSVD<Eigen::MatrixXd>(B).singularValues().minCoeff();
  // Velocity space of the snapshots alone, without their supremizers.
  const Eigen::MatrixXd C = snapshot_coords_.topLeftCorner(B.cols(), static_cast<Eigen::Index>(n));
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(C);
  const Eigen::MatrixXd W = qr.householderQ() * Eigen::MatrixXd::Identity(C.rows(), C.cols());
  const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(B * W).singularValues();
  // Fewer velocity than pressure directions: the inf-sup constant is zero.
  return W.cols() < B.rows() ? 0.0 : s.minCoeff();
}

Eigen::VectorXd ReducedModel::velocity(const ReducedSolution& s) const {
  return velocity_basis_.leftCols(s.u.size()) * s.u;
}

Eigen::VectorXd ReducedModel::pressure(const ReducedSolution& s) const {
  return pressure_basis_.leftCols(s.p.size()) * s.p;
}

namespace {

// Scalar velocity-pattern matrix applied to one component given on free nodes.
Eigen::VectorXd apply_scalar(const TaylorHoodSpace& space, const Eigen::VectorXd& values, const Eigen::VectorXd& w,
                             bool transpose) {
  const auto n = static_cast<Eigen::Index>(space.num_velocity_nodes());
  const auto free = space.free_nodes();
  Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < free.size(); ++i) full[free[i]] = w[static_cast<Eigen::Index>(i)];
  const auto A = space.velocity_pattern().view(values);
  const Eigen::VectorXd y = transpose ? Eigen::VectorXd(A.transpose() * full) : Eigen::VectorXd(A * full);
  Eigen::VectorXd out(static_cast<Eigen::Index>(free.size()));
  for (std::size_t i = 0; i < free.size(); ++i) out[static_cast<Eigen::Index>(i)] = y[free[i]];
  return out;
}

Eigen::VectorXd apply_div(const TaylorHoodSpace& space, const Eigen::VectorXd& values, const Eigen::VectorXd& w) {
  const auto n = static_cast<Eigen::Index>(space.num_velocity_nodes());
  const auto free = space.free_nodes();
  Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < free.size(); ++i) full[free[i]] = w[static_cast<Eigen::Index>(i)];
  return space.divergence_pattern().view(values) * full;
}

Eigen::VectorXd apply_div_transpose(const TaylorHoodSpace& space, const Eigen::VectorXd& values, const Eigen::VectorXd& q) {
  const Eigen::VectorXd y = space.divergence_pattern().view(values).transpose() * q;
  const auto free = space.free_nodes();
  Eigen::VectorXd out(static_cast<Eigen::Index>(free.size()));
  for (std::size_t i = 0; i < free.size(); ++i) out[static_cast<Eigen::Index>(i)] = y[free[i]];
  return out;
}

}  // namespace

Eigen::VectorXd supremizer(const StokesModel& model, const StokesOperator& op, const Eigen::VectorXd& q) {
  const auto& space = model.space();
  const auto nf = static_cast<Eigen::Index>(space.num_free_nodes());
  const Eigen::SparseMatrix<double> X = free_scalar_block(space, model.velocity_gram());
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(X);
  if (llt.info() != Eigen::Success) throw SolverError("supremizer: velocity Gram factorization failed");
  Eigen::VectorXd s(2 * nf);
  for (int k = 0; k < 2; ++k) s.segment(k * nf, nf) = llt.solve(apply_div_transpose(space, op.b[static_cast<std::size_t>(k)], q));
  return s;
}

ResidualNorm::ResidualNorm(const StokesModel& model) : model_(&model) {
  const auto& space = model.space();
  gram_ = free_scalar_block(space, model.velocity_gram());
  gram_llt_.compute(gram_);
  mass_ = space.pressure_pattern().view(model.pressure_mass());
  mass_llt_.compute(mass_);
  if (gram_llt_.info() != Eigen::Success || mass_llt_.info() != Eigen::Success) {
    throw SolverError("residual norm: Gram factorization failed");
  }
}

double ResidualNorm::dual(const Eigen::VectorXd& rv, const Eigen::VectorXd& rp) const {
  const auto nf = gram_.rows();
  double s = 0.0;
  for (int k = 0; k < 2; ++k) {
    const Eigen::VectorXd r = rv.segment(k * nf, nf);
    s += r.dot(gram_llt_.solve(r));
  }
  // Dual of the mean-zero pressure space: M^-1 m is the constant 1.
  const Eigen::VectorXd& m = model_->pressure_load();
  const Eigen::VectorXd r = rp - m * (rp.sum() / m.sum());
  s += r.dot(mass_llt_.solve(r));
  return std::sqrt(std::max(s, 0.0));
}

double ResidualNorm::operator()(const StokesOperator& op, const Eigen::VectorXd& u_free, const Eigen::VectorXd& p) const {
  Eigen::VectorXd F, G, rv, rp;
  lifted_rhs(*model_, op, F, G);
  SaddlePointSolver::residual(*model_, op, u_free, p, rv, rp);
  const double ref = dual(F, G);
  const double r = dual(rv, rp);
  return ref > 0.0 ? r / ref : r;
}

double ResidualNorm::velocity_norm_free(const Eigen::VectorXd& u_free) const {
  const auto nf = gram_.rows();
  double s = 0.0;
  for (int k = 0; k < 2; ++k) {
    const Eigen::VectorXd u = u_free.segment(k * nf, nf);
    s += u.dot(gram_ * u);
  }
  return std::sqrt(std::max(s, 0.0));
}

double ResidualNorm::velocity_norm_full(const Eigen::VectorXd& u) const {
  const auto& space = model_->space();
  const auto n = static_cast<Eigen::Index>(space.num_velocity_nodes());
  const auto G = space.velocity_pattern().view(model_->velocity_gram());
  double s = 0.0;
  for (int k = 0; k < 2; ++k) {
    const Eigen::VectorXd uk = u.segment(k * n, n);
    s += uk.dot(G * uk);
  }
  return std::sqrt(std::max(s, 0.0));
}

double ResidualNorm::pressure_norm(const Eigen::VectorXd& p) const { return std::sqrt(std::max(p.dot(mass_ * p), 0.0)); }

double rb_error(const ReducedModel& rb, const ResidualNorm& norms, const AffineTheta& theta, const FluidSolution& truth,
                std::size_t n) {
  const ReducedSolution s = rb.solve(theta, truth.mu, n);
  const Eigen::VectorXd du = norms.model().space().restrict_free(truth.u - norms.model().lifting()) - rb.velocity(s);
  const Eigen::VectorXd dp = truth.p - rb.pressure(s);
  const double ev = norms.velocity_norm_free(du) / norms.velocity_norm_full(truth.u);
  const double pn = norms.pressure_norm(truth.p);
  const double ep = pn > 0.0 ? norms.pressure_norm(dp) / pn : norms.pressure_norm(dp);
  return std::max(ev, ep);
}

// Incremental offline state: bases grow one vector at a time and every
// projected term is extended by one row/column.
class ReducedBasisBuilder {
 public:
  explicit ReducedBasisBuilder(const AffineSystem& system)
      : system_(system), model_(system.model()), space_(model_.space()) {
    nf_ = static_cast<Eigen::Index>(space_.num_free_nodes());
    np_ = static_cast<Eigen::Index>(space_.num_pressure_dofs());
    const auto n = static_cast<Eigen::Index>(space_.num_velocity_nodes());
    gram_ = free_scalar_block(space_, model_.velocity_gram());
    gram_llt_.compute(gram_);
    if (gram_llt_.info() != Eigen::Success) throw SolverError("reduced basis: velocity Gram factorization failed");
    mass_ = space_.pressure_pattern().view(model_.pressure_mass());

    const Eigen::VectorXd& u0 = model_.lifting();
    for (std::size_t q = 0; q < system.num_a_terms(); ++q) {
      Eigen::VectorXd au0(2 * nf_);
      const auto A = space_.velocity_pattern().view(system.a_term(q));
      for (int k = 0; k < 2; ++k) {
        const Eigen::VectorXd y = A * u0.segment(k * n, n);
        au0.segment(k * nf_, nf_) = restrict_scalar(y);
      }
      a_lift_.push_back(std::move(au0));
    }
    for (std::size_t q = 0; q < system.num_b_terms(); ++q) {
      const int k = system.b_component(q);
      b_lift_.push_back(space_.divergence_pattern().view(system.b_term(q)) * u0.segment(k * n, n));
    }
    for (std::size_t q = 0; q < system.num_f_terms(); ++q) {
      Eigen::VectorXd f(2 * nf_);
      for (int k = 0; k < 2; ++k) f.segment(k * nf_, nf_) = restrict_scalar(system.f_term(q)[static_cast<std::size_t>(k)]);
      f_free_.push_back(std::move(f));
    }
    rb_.velocity_basis_.resize(2 * nf_, 0);
    rb_.pressure_basis_.resize(np_, 0);
    rb_.a_red_.assign(system.num_a_terms(), Eigen::MatrixXd(0, 0));
    rb_.a_lift_red_.assign(system.num_a_terms(), Eigen::VectorXd(0));
    rb_.b_red_.assign(system.num_b_terms(), Eigen::MatrixXd(0, 0));
    rb_.b_lift_red_.assign(system.num_b_terms(), Eigen::VectorXd(0));
    rb_.f_red_.assign(system.num_f_terms(), Eigen::VectorXd(0));
  }

  ReducedModel& model() { return rb_; }

  Eigen::VectorXd supremizer(const StokesOperator& op, const Eigen::VectorXd& q) const {
    Eigen::VectorXd s(2 * nf_);
    for (int k = 0; k < 2; ++k) {
      s.segment(k * nf_, nf_) = gram_llt_.solve(apply_div_transpose(space_, op.b[static_cast<std::size_t>(k)], q));
    }
    return s;
  }

  /// Add the snapshot (u~, p) at mu with its supremizer computed from op.
  void add_snapshot(const ParameterVector& mu, const StokesOperator& op, const Eigen::VectorXd& u_free,
                    const Eigen::VectorXd& p) {
    const Eigen::VectorXd sup = supremizer(op, p);
    if (!add_velocity(u_free)) std::clog << "warning: snapshot velocity at mu = (" << mu.to_string() << ") is linearly dependent, skipped\n";
    if (!add_velocity(sup)) std::clog << "warning: supremizer at mu = (" << mu.to_string() << ") is linearly dependent, skipped\n";
    if (!add_pressure(p)) std::clog << "warning: snapshot pressure at mu = (" << mu.to_string() << ") is linearly dependent, skipped\n";
    rb_.snapshots_.push_back(mu);
    rb_.velocity_offsets_.push_back(rb_.velocity_basis_.cols());
    rb_.pressure_offsets_.push_back(rb_.pressure_basis_.cols());
    auto& C = rb_.snapshot_coords_;
    const Eigen::Index nv = rb_.velocity_basis_.cols();
    C.conservativeResize(nv, C.cols() + 1);
    C.col(C.cols() - 1) = rb_.velocity_basis_.transpose() * x_product(u_free);
    // Rows added for vectors after a snapshot are zero for that snapshot.
    for (Eigen::Index j = 0; j + 1 < C.cols(); ++j) {
      for (Eigen::Index i = coords_rows_; i < nv; ++i) C(i, j) = 0.0;
    }
    coords_rows_ = nv;
  }

 private:
  Eigen::VectorXd restrict_scalar(const Eigen::VectorXd& full) const {
    const auto free = space_.free_nodes();
    Eigen::VectorXd out(nf_);
    for (std::size_t i = 0; i < free.size(); ++i) out[static_cast<Eigen::Index>(i)] = full[free[i]];
    return out;
  }

  Eigen::VectorXd x_product(const Eigen::VectorXd& w) const {
    Eigen::VectorXd y(2 * nf_);
    for (int k = 0; k < 2; ++k) y.segment(k * nf_, nf_) = gram_ * w.segment(k * nf_, nf_);
    return y;
  }

  bool add_velocity(Eigen::VectorXd w) {
    auto& V = rb_.velocity_basis_;
    const double original = std::sqrt(std::max(w.dot(x_product(w)), 0.0));
    if (!(original > 0.0)) return false;
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < V.cols(); ++i) w -= V.col(i).dot(x_product(w)) * V.col(i);
    }
    const double norm = std::sqrt(std::max(w.dot(x_product(w)), 0.0));
    if (norm < 1e-10 * original) return false;
    w /= norm;
    const Eigen::Index m = V.cols();
    V.conservativeResize(Eigen::NoChange, m + 1);
    V.col(m) = w;

    for (std::size_t q = 0; q < rb_.a_red_.size(); ++q) {
      Eigen::VectorXd y(2 * nf_), yt(2 * nf_);
      for (int k = 0; k < 2; ++k) {
        const Eigen::VectorXd wk = w.segment(k * nf_, nf_);
        y.segment(k * nf_, nf_) = apply_scalar(space_, system_.a_term(q), wk, false);
        yt.segment(k * nf_, nf_) = apply_scalar(space_, system_.a_term(q), wk, true);
      }
      auto& A = rb_.a_red_[q];
      A.conservativeResize(m + 1, m + 1);
      A.col(m) = V.transpose() * y;
      A.row(m) = (V.transpose() * yt).transpose();
      auto& l = rb_.a_lift_red_[q];
      l.conservativeResize(m + 1);
      l[m] = a_lift_[q].dot(w);
    }
    const Eigen::Index np = rb_.pressure_basis_.cols();
    for (std::size_t q = 0; q < rb_.b_red_.size(); ++q) {
      const int k = system_.b_component(q);
      auto& B = rb_.b_red_[q];
      B.conservativeResize(np, m + 1);
      B.col(m) = rb_.pressure_basis_.transpose() * apply_div(space_, system_.b_term(q), w.segment(k * nf_, nf_));
    }
    for (std::size_t q = 0; q < rb_.f_red_.size(); ++q) {
      auto& f = rb_.f_red_[q];
      f.conservativeResize(m + 1);
      f[m] = f_free_[q].dot(w);
    }
    return true;
  }

  bool add_pressure(Eigen::VectorXd p) {
    auto& Q = rb_.pressure_basis_;
    const double original = std::sqrt(std::max(p.dot(mass_ * p), 0.0));
    if (!(original > 0.0)) return false;
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < Q.cols(); ++i) p -= Q.col(i).dot(mass_ * p) * Q.col(i);
    }
    const double norm = std::sqrt(std::max(p.dot(mass_ * p), 0.0));
    if (norm < 1e-10 * original) return false;
    p /= norm;
    const Eigen::Index m = Q.cols();
    Q.conservativeResize(Eigen::NoChange, m + 1);
    Q.col(m) = p;

    const auto& V = rb_.velocity_basis_;
    for (std::size_t q = 0; q < rb_.b_red_.size(); ++q) {
      const int k = system_.b_component(q);
      auto& B = rb_.b_red_[q];
      B.conservativeResize(m + 1, V.cols());
      const Eigen::VectorXd t = apply_div_transpose(space_, system_.b_term(q), p);
      B.row(m) = (V.middleRows(k * nf_, nf_).transpose() * t).transpose();
      auto& l = rb_.b_lift_red_[q];
      l.conservativeResize(m + 1);
      l[m] = b_lift_[q].dot(p);
    }
    return true;
  }

  const AffineSystem& system_;
  const StokesModel& model_;
  const TaylorHoodSpace& space_;
  Eigen::Index nf_ = 0;
  Eigen::Index np_ = 0;
  Eigen::SparseMatrix<double> gram_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> gram_llt_;
  Eigen::SparseMatrix<double> mass_;
  std::vector<Eigen::VectorXd> a_lift_;
  std::vector<Eigen::VectorXd> b_lift_;
  std::vector<Eigen::VectorXd> f_free_;
  Eigen::Index coords_rows_ = 0;
  ReducedModel rb_;
};

ReducedModel greedy_build(const AffineSystem& system, const ParameterDomain& domain, const RbOptions& options) {
  if (options.train_size == 0) throw std::invalid_argument("greedy: training set must be nonempty");
  if (options.max_basis < 1) throw std::invalid_argument("greedy: Nmax must be positive");
  if (!(options.tolerance > 0.0)) throw std::invalid_argument("greedy: tolerance must be positive");
  const auto& model = system.model();
  const auto& space = model.space();
  const auto train = domain.sample(options.train_size, options.seed);
  const auto test = domain.sample(options.test_size, options.test_seed);

  std::vector<AffineTheta> train_theta;
  train_theta.reserve(train.size());
  for (const auto& mu : train) train_theta.push_back(system.theta(mu));

  SaddlePointSolver truth_solver(model);
  auto truth = [&](const AffineTheta& theta, const ParameterVector& mu, StokesOperator& op) {
    op = system.assemble(theta);
    return truth_solver.solve(op, mu);
  };

  std::vector<FluidSolution> train_truth;
  if (options.true_error) {
    StokesOperator op;
    for (std::size_t t = 0; t < train.size(); ++t) train_truth.push_back(truth(train_theta[t], train[t], op));
  }

  ReducedBasisBuilder builder(system);
  ResidualNorm norms(model);

  // Coefficient fields per training point are kept when they fit in 512 MB.
  // The dual norm of the right-hand side there normalizes the residual.
  std::vector<double> reference;
  std::vector<AffineSystem::Fields> train_fields;
  if (!options.true_error) {
    const double bytes = 8.0 * (8.0 * static_cast<double>(space.num_quadrature_points()) + 2.0 * static_cast<double>(space.num_velocity_nodes()));
    const bool keep = bytes * static_cast<double>(train.size()) <= 512.0 * (1 << 20);
    const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_free_velocity_dofs()));
    const Eigen::VectorXd p0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_pressure_dofs()));
    Eigen::VectorXd rv, rp;
    for (const auto& theta : train_theta) {
      AffineSystem::Fields f = system.fields(theta);
      system.residual(f, u0, p0, rv, rp);
      reference.push_back(norms.dual(rv, rp));
      if (keep) train_fields.push_back(std::move(f));
    }
  }

  std::vector<char> used(train.size(), 0);
  std::size_t next = 0;
  for (int n = 1; n <= options.max_basis; ++n) {
    StokesOperator op;
    const FluidSolution snap = truth(train_theta[next], train[next], op);
    used[next] = 1;
    builder.add_snapshot(train[next], op, space.restrict_free(snap.u - model.lifting()), snap.p);
    const ReducedModel& rb = builder.model();

    double worst = -1.0;
    std::size_t arg = 0;
    for (std::size_t t = 0; t < train.size(); ++t) {
      double e = 0.0;
      if (options.true_error) {
        e = rb_error(rb, norms, train_theta[t], train_truth[t]);
      } else {
        const ReducedSolution s = rb.solve(train_theta[t], train[t]);
        Eigen::VectorXd rv, rp;
        if (train_fields.empty()) {
          system.residual(system.fields(train_theta[t]), rb.velocity(s), rb.pressure(s), rv, rp);
        } else {
          system.residual(train_fields[t], rb.velocity(s), rb.pressure(s), rv, rp);
        }
        e = norms.dual(rv, rp);
        if (reference[t] > 0.0) e /= reference[t];
      }
      if (e > worst && !used[t]) {
        worst = e;
        arg = t;
      }
    }
    builder.model().history_.push_back({n, std::max(worst, 0.0), 0.0, next});
    next = arg;
    if (worst <= options.tolerance || worst < 0.0) break;
  }

  ReducedModel rb = std::move(builder.model());
  rb.options_ = options;
  if (!test.empty()) {
    std::vector<AffineTheta> test_theta;
    std::vector<FluidSolution> test_truth;
    StokesOperator op;
    for (const auto& mu : test) {
      test_theta.push_back(system.theta(mu));
      test_truth.push_back(truth(test_theta.back(), mu, op));
    }
    for (auto& rec : rb.history_) {
      double e = 0.0;
      for (std::size_t t = 0; t < test.size(); ++t) {
        e = std::max(e, rb_error(rb, norms, test_theta[t], test_truth[t], static_cast<std::size_t>(rec.n)));
      }
      rec.max_test_error = e;
    }
  }
  return rb;
}

FluidSolution RbSolver::solve(const ParameterVector& mu) {
  const ReducedSolution s = rb_->solve(affine_theta(*eim_, mu), mu);
  FluidSolution sol;
  sol.mu = mu;
  sol.u = model_->lifting() + model_->space().expand_free(rb_->velocity(s));
  sol.p = rb_->pressure(s);
  return sol;
}

void write_error_decay_csv(std::ostream& os, const ReducedModel& rb) {
  os << "N,max_train_residual,max_test_error\n" << std::setprecision(10);
  for (const auto& r : rb.history()) os << r.n << ',' << r.max_train_residual << ',' << r.max_test_error << '\n';
}

}  // namespace fsirb
