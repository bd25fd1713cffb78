#include <gtest/gtest.h>

#include <sstream>

#include "fsirb/coupling.hpp"

using namespace fsirb;

namespace {

const ReferenceBox kBox{};
const ParameterDomain kBounds(6, -0.1, 0.1);

const TaylorHoodSpace& small_space() {
  static const TaylorHoodSpace space(build_mesh(12, 4, kBox));
  return space;
}

const WallModel& small_wall() {
  static const WallModel wall(small_space(), FfdLattice::channel_default(kBox), 62.5, kBounds);
  return wall;
}

}  // namespace

TEST(Membrane, ConstantLoadMatchesParabola) {
  const WallModel& wall = small_wall();
  const Eigen::VectorXd& x = wall.trace().x();
  const double c = 3.7;
  const Eigen::VectorXd eta = wall.solve_membrane(Eigen::VectorXd::Constant(x.size(), c));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(eta[i], c / (2.0 * 62.5) * (x[i] - kBox.x1_min) * (kBox.x1_max - x[i]), 1e-14);
  }
}

TEST(Membrane, ZeroLinearAndMonotone) {
  const WallModel& wall = small_wall();
  const auto n = static_cast<Eigen::Index>(wall.num_nodes());
  EXPECT_EQ(wall.solve_membrane(Eigen::VectorXd::Zero(n)).cwiseAbs().maxCoeff(), 0.0);
  const Eigen::VectorXd t1 = Eigen::VectorXd::LinSpaced(n, -1.0, 2.0);
  const Eigen::VectorXd t2 = t1.array().square();
  const Eigen::VectorXd lhs = wall.solve_membrane(2.0 * t1 - 0.5 * t2);
  const Eigen::VectorXd rhs = 2.0 * wall.solve_membrane(t1) - 0.5 * wall.solve_membrane(t2);
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-14);
  // Nonnegative load, nonnegative displacement.
  const Eigen::VectorXd eta = wall.solve_membrane(t2);
  EXPECT_GE(eta.minCoeff(), 0.0);
  EXPECT_EQ(eta[0], 0.0);
  EXPECT_EQ(eta[n - 1], 0.0);
  EXPECT_THROW(wall.solve_membrane(Eigen::VectorXd::Zero(n + 1)), std::invalid_argument);
}

TEST(Projection, RecoversParametersOfAnFfdDisplacement) {
  const WallModel& wall = small_wall();
  const FfdLattice lattice = FfdLattice::channel_default(kBox);
  for (const auto& mu : kBounds.sample(5, 17)) {
    auto s = [](double x) { return (x - kBox.x1_min) / kBox.width(); };
    const ParameterVector got = wall.fit([&](double x) { return lattice.boundary_displacement(s(x), mu); },
                                         [&](double x) { return lattice.boundary_slope(s(x), mu); });
    EXPECT_LE((got.values() - mu.values()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((wall.displacement(mu) - wall.displacement(got)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Projection, IsAMinimizerOfTheMisfit) {
  const WallModel& wall = small_wall();
  const auto n = static_cast<Eigen::Index>(wall.num_nodes());
  const Eigen::VectorXd eta_hat = wall.solve_membrane(Eigen::VectorXd::LinSpaced(n, 5.0, -3.0));
  const ParameterVector mu = wall.fit(eta_hat);
  const double J = wall.misfit(mu, eta_hat);
  EXPECT_GE(J, 0.0);
  for (std::size_t j = 0; j < 6; ++j) {
    for (double eps : {1e-3, -1e-3}) {
      ParameterVector p = mu;
      p[j] += eps;
      EXPECT_GE(wall.misfit(p, eta_hat), J);
    }
  }
  for (const auto& r : kBounds.sample(20, 4)) EXPECT_LE(J, wall.misfit(r, eta_hat));
}

TEST(Projection, ClipsToBounds) {
  const WallModel& wall = small_wall();
  const auto n = static_cast<Eigen::Index>(wall.num_nodes());
  const Eigen::VectorXd eta_hat = wall.solve_membrane(Eigen::VectorXd::Constant(n, 500.0));
  const ParameterVector raw = wall.fit(eta_hat);
  ASSERT_GT(raw.values().maxCoeff(), 0.1);
  const ParameterVector mu = wall.project(eta_hat);
  EXPECT_TRUE(kBounds.contains(mu));
}

TEST(Coupling, ConvergesOnSmallMesh) {
  const StokesModel model(TaylorHoodSpace(build_mesh(12, 4, kBox)), FfdLattice::channel_default(kBox), PhysicalConstants{});
  const WallModel wall(model.space(), model.lattice(), model.constants().K, kBounds);
  FullFemSolver solver(model);
  const CouplingState st = couple(solver, model, wall, {});
  ASSERT_TRUE(st.converged);
  EXPECT_LT(st.k, 20);
  EXPECT_EQ(st.history.size(), static_cast<std::size_t>(st.k + 1));
  EXPECT_DOUBLE_EQ(st.history.back().misfit, st.misfit);
  EXPECT_DOUBLE_EQ(st.misfit, wall.misfit(st.mu, st.eta_hat));
  EXPECT_LT(st.step_norm, 1e-5);
  EXPECT_TRUE(kBounds.contains(st.mu));
  // Pressure falls along the channel: the wall bulges out upstream.
  EXPECT_GT(wall.displacement(st.mu).maxCoeff(), 0.0);

  std::stringstream trace, iface;
  write_coupling_trace_csv(trace, st);
  write_interface_csv(iface, wall, st);
  std::string line;
  std::getline(trace, line);
  EXPECT_EQ(line, "k,mu_1,mu_2,mu_3,mu_4,mu_5,mu_6,step_norm,J_k,fluid_solve_ms");
  std::getline(iface, line);
  EXPECT_EQ(line, "x1,eta,eta_hat");
}

TEST(Coupling, StiffWallStaysRigid) {
  PhysicalConstants pc;
  pc.K = 1e9;
  const StokesModel model(TaylorHoodSpace(build_mesh(12, 4, kBox)), FfdLattice::channel_default(kBox), pc);
  const WallModel wall(model.space(), model.lattice(), pc.K, kBounds);
  FullFemSolver solver(model);
  const CouplingState st = couple(solver, model, wall, {});
  EXPECT_TRUE(st.converged);
  EXPECT_EQ(st.k, 0);
  EXPECT_LE(st.mu.values().cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Coupling, RejectsBadOptions) {
  const StokesModel model(TaylorHoodSpace(build_mesh(4, 2, kBox)), FfdLattice::channel_default(kBox), PhysicalConstants{});
  const WallModel wall(model.space(), model.lattice(), 62.5, kBounds);
  FullFemSolver solver(model);
  CouplingOptions o;
  o.relaxation = 0.0;
  EXPECT_THROW(couple(solver, model, wall, o), std::invalid_argument);
  o = {};
  o.tolerance = 0.0;
  EXPECT_THROW(couple(solver, model, wall, o), std::invalid_argument);
  EXPECT_THROW(WallModel(model.space(), model.lattice(), -1.0, kBounds), std::invalid_argument);
}

TEST(Coupling, IterationCapReportsNonConvergence) {
  const StokesModel model(TaylorHoodSpace(build_mesh(12, 4, kBox)), FfdLattice::channel_default(kBox), PhysicalConstants{});
  const WallModel wall(model.space(), model.lattice(), 62.5, kBounds);
  FullFemSolver solver(model);
  CouplingOptions o;
  o.max_iterations = 1;
  o.tolerance = 1e-14;
  const CouplingState st = couple(solver, model, wall, o);
  EXPECT_FALSE(st.converged);
  EXPECT_EQ(st.history.size(), 1u);
}
