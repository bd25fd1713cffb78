#include <gtest/gtest.h>

#include <sstream>

#include "fsirb/serialization.hpp"

using namespace fsirb;

namespace {

struct Fixture {
  ParameterDomain domain{6, -0.1, 0.1};
  StokesModel model;
  AffineSystem system;
  ReducedModel rb;

  static EimOptions eim_options() {
    EimOptions o;
    o.train_size = 60;
    return o;
  }
  static RbOptions rb_options() {
    RbOptions o;
    o.max_basis = 6;
    o.train_size = 40;
    o.test_size = 5;
    o.tolerance = 1e-12;
    return o;
  }

  Fixture()
      : model(TaylorHoodSpace(build_mesh(12, 4, ReferenceBox{})), FfdLattice::channel_default(), PhysicalConstants{}),
        system(model, train_tensor_eim(model.lattice(), model.space().quadrature_points(), ParameterDomain(6, -0.1, 0.1),
                                       eim_options())),
        rb(greedy_build(system, domain, rb_options())) {}
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

Eigen::MatrixXd velocity_gram_free(const StokesModel& model) {
  const Eigen::MatrixXd X = Eigen::MatrixXd(free_scalar_block(model.space(), model.velocity_gram()));
  const auto nf = X.rows();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2 * nf, 2 * nf);
  G.topLeftCorner(nf, nf) = X;
  G.bottomRightCorner(nf, nf) = X;
  return G;
}

}  // namespace

TEST(ReducedBasis, BasesAreOrthonormal) {
  const auto& f = fx();
  ASSERT_EQ(f.rb.num_snapshots(), 6u);
  const Eigen::MatrixXd& V = f.rb.velocity_basis();
  const Eigen::MatrixXd& Q = f.rb.pressure_basis();
  const Eigen::MatrixXd VtXV = V.transpose() * velocity_gram_free(f.model) * V;
  EXPECT_LE((VtXV - Eigen::MatrixXd::Identity(V.cols(), V.cols())).cwiseAbs().maxCoeff(), 1e-10);
  const Eigen::MatrixXd M = Eigen::MatrixXd(Eigen::SparseMatrix<double>(f.model.space().pressure_pattern().view(f.model.pressure_mass())));
  const Eigen::MatrixXd QtMQ = Q.transpose() * M * Q;
  EXPECT_LE((QtMQ - Eigen::MatrixXd::Identity(Q.cols(), Q.cols())).cwiseAbs().maxCoeff(), 1e-10);
  // Velocity and supremizer per snapshot, one pressure per snapshot.
  EXPECT_EQ(f.rb.velocity_count(6), 12);
  EXPECT_EQ(f.rb.pressure_count(6), 6);
}

TEST(ReducedBasis, ReproducesSnapshots) {
  const auto& f = fx();
  const ResidualNorm norms(f.model);
  ReducedFemSolver truth(f.system);
  for (std::size_t i = 0; i < f.rb.num_snapshots(); ++i) {
    const auto& mu = f.rb.snapshots()[i];
    EXPECT_LE(rb_error(f.rb, norms, f.system.theta(mu), truth.solve(mu)), 1e-9) << i;
    // Also with only the snapshots up to and including this one.
    EXPECT_LE(rb_error(f.rb, norms, f.system.theta(mu), truth.solve(mu), i + 1), 1e-9) << i;
  }
}

TEST(ReducedBasis, ErrorDecaysWithN) {
  const auto& h = fx().rb.history();
  ASSERT_EQ(h.size(), 6u);
  EXPECT_LT(h.back().max_test_error, h.front().max_test_error);
  EXPECT_LT(h.back().max_train_residual, h.front().max_train_residual);
  std::stringstream ss;
  write_error_decay_csv(ss, fx().rb);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "N,max_train_residual,max_test_error");
}

TEST(ReducedBasis, AffineProjectionMatchesAssembledOperator) {
  const auto& f = fx();
  const auto& space = f.model.space();
  const Eigen::MatrixXd& V = f.rb.velocity_basis();
  const Eigen::MatrixXd& Q = f.rb.pressure_basis();
  for (const auto& mu : f.domain.sample(3, 77)) {
    const auto theta = f.system.theta(mu);
    const StokesOperator op = f.system.assemble(theta);
    const Eigen::MatrixXd A1 = Eigen::MatrixXd(free_scalar_block(space, op.a));
    const auto nf = A1.rows();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * nf, 2 * nf);
    A.topLeftCorner(nf, nf) = A1;
    A.bottomRightCorner(nf, nf) = A1;
    const Eigen::MatrixXd B = Eigen::MatrixXd(free_divergence(space, op.b));
    const Eigen::MatrixXd Ared = V.transpose() * A * V, Bred = Q.transpose() * B * V;
    EXPECT_LE((f.rb.reduced_a(theta) - Ared).norm(), 1e-10 * Ared.norm());
    EXPECT_LE((f.rb.reduced_b(theta) - Bred).norm(), 1e-10 * Bred.norm());
  }
}

TEST(Supremizer, SolvesGramSystemAndIsOptimal) {
  const auto& f = fx();
  const auto mu = f.domain.sample(1, 3)[0];
  const StokesOperator op = f.model.assemble(mu);
  const Eigen::MatrixXd X = velocity_gram_free(f.model);
  const Eigen::MatrixXd B = Eigen::MatrixXd(free_divergence(f.model.space(), op.b));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Eigen::VectorXd q(B.rows());
  for (auto& v : q) v = g(rng);
  const Eigen::VectorXd s = supremizer(f.model, op, q);
  const Eigen::VectorXd rhs = B.transpose() * q;
  EXPECT_LE((X * s - rhs).norm(), 1e-10 * rhs.norm());
  const double best = q.dot(B * s) / std::sqrt(s.dot(X * s));
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd v(s.size());
    for (auto& x : v) x = g(rng);
    v += 0.1 * trial * s;
    EXPECT_LE(q.dot(B * v) / std::sqrt(v.dot(X * v)), best * (1.0 + 1e-12));
  }
}

TEST(ReducedBasis, EnrichmentRestoresInfSup) {
  const auto& f = fx();
  for (std::size_t i = 0; i < f.rb.num_snapshots(); ++i) {
    const auto& mu = f.rb.snapshots()[i];
    const auto theta = f.system.theta(mu);
    const double enriched = f.rb.infsup(theta);
    const double plain = f.rb.infsup(theta, 0, false);
    EXPECT_GT(enriched, 0.0);
    EXPECT_GE(enriched, plain);
    // Supremizers for the snapshot's own mu: the reduced velocity space
    // contains X^-1 B(mu)^T Q, so the reduced constant bounds beta_h from above.
    EXPECT_GE(enriched, compute_infsup(f.model, f.system.assemble(theta)) * (1.0 - 1e-6)) << i;
  }
}

TEST(ReducedBasis, RbSolverReconstructsFullFields) {
  const auto& f = fx();
  RbSolver solver(f.model, f.system.eim(), f.rb);
  ReducedFemSolver truth(f.system);
  const auto mu = f.domain.sample(1, 8)[0];
  const FluidSolution a = solver.solve(mu), b = truth.solve(mu);
  EXPECT_EQ(a.u.size(), b.u.size());
  EXPECT_EQ(a.p.size(), b.p.size());
  EXPECT_LE((a.u - b.u).cwiseAbs().maxCoeff(), 0.05 * b.u.cwiseAbs().maxCoeff());
  // Dirichlet data comes from the lifting.
  const auto& space = f.model.space();
  for (std::size_t i = 0; i < space.num_velocity_nodes(); ++i) {
    if (space.is_dirichlet(i)) EXPECT_EQ(a.u[static_cast<Eigen::Index>(i)], f.model.lifting()[static_cast<Eigen::Index>(i)]);
  }
}

TEST(ReducedBasis, SerializationRoundTripIsBitIdentical) {
  const auto& f = fx();
  std::stringstream ss;
  save_reduced_model(ss, f.rb, {{"tag", "x"}});
  nlohmann::json ctx;
  const ReducedModel back = load_reduced_model(ss, &ctx);
  EXPECT_EQ(ctx["tag"], "x");
  EXPECT_EQ(back.num_snapshots(), f.rb.num_snapshots());
  EXPECT_EQ(back.history().size(), f.rb.history().size());
  EXPECT_TRUE(back.velocity_basis() == f.rb.velocity_basis());
  for (const auto& mu : f.domain.sample(3, 9)) {
    const auto theta = f.system.theta(mu);
    const ReducedSolution a = f.rb.solve(theta, mu), b = back.solve(theta, mu);
    EXPECT_TRUE(a.u == b.u);
    EXPECT_TRUE(a.p == b.p);
  }
}

TEST(ReducedBasis, RejectsOutOfRangeSize) {
  const auto& f = fx();
  const auto theta = f.system.theta(ParameterVector::zero(6));
  EXPECT_THROW(f.rb.solve(theta, ParameterVector::zero(6), 7), std::invalid_argument);
}

TEST(AffineSystem, MatrixFreeResidualMatchesAssembled) {
  const auto& f = fx();
  const auto& space = f.model.space();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  Eigen::VectorXd u(static_cast<Eigen::Index>(space.num_free_velocity_dofs()));
  Eigen::VectorXd p(static_cast<Eigen::Index>(space.num_pressure_dofs()));
  for (auto& x : u) x = g(rng);
  for (auto& x : p) x = g(rng);
  for (const auto& mu : f.domain.sample(3, 10)) {
    const auto theta = f.system.theta(mu);
    Eigen::VectorXd rv, rp, sv, sp;
    f.system.residual(f.system.fields(theta), u, p, rv, rp);
    SaddlePointSolver::residual(f.model, f.system.assemble(theta), u, p, sv, sp);
    EXPECT_LE((rv - sv).norm(), 1e-12 * sv.norm());
    EXPECT_LE((rp - sp).norm(), 1e-12 * sp.norm());
  }
}
