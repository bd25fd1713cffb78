#include <gtest/gtest.h>

#include <sstream>

#include "fsirb/stokes.hpp"

using namespace fsirb;

namespace {

StokesModel make_model(int nx, int ny, PhysicalConstants pc = {}) {
  const ReferenceBox box;
  return StokesModel(TaylorHoodSpace(build_mesh(nx, ny, box)), FfdLattice::channel_default(box), pc);
}

ParameterVector random_mu(std::uint64_t seed) { return ParameterDomain(6, -0.1, 0.1).sample(1, seed)[0]; }

}  // namespace

TEST(Lifting, PoiseuilleValues) {
  const StokesModel model = make_model(6, 4);
  const auto& space = model.space();
  const auto n = static_cast<Eigen::Index>(space.num_velocity_nodes());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point& x = space.velocity_node(static_cast<std::size_t>(i));
    EXPECT_NEAR(model.lifting()[i], 30.0 * (1.0 - 4.0 * x[1] * x[1]), 1e-12);
    EXPECT_EQ(model.lifting()[n + i], 0.0);
    if (x[1] == 0.0) EXPECT_DOUBLE_EQ(model.lifting()[i], 30.0);
    if (std::abs(x[1]) == 0.5) EXPECT_EQ(model.lifting()[i], 0.0);
  }
}

TEST(Assembly, ReferenceSystemAtRest) {
  const StokesModel model = make_model(6, 4);
  const StokesOperator op = model.assemble(ParameterVector::zero(6));
  Eigen::VectorXd F, G;
  lifted_rhs(model, op, F, G);
  // Divergence-free lifting under the identity map.
  EXPECT_LT(G.cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::SparseMatrix<double> A = model.space().velocity_pattern().view(op.a);
  const Eigen::SparseMatrix<double> At = A.transpose();
  EXPECT_LT((A - At).norm(), 1e-13);
}

TEST(Assembly, SymmetricAndDefiniteForRandomMu) {
  const StokesModel model = make_model(6, 4);
  for (std::uint64_t seed : {1, 2, 3}) {
    const StokesOperator op = model.assemble(random_mu(seed));
    const Eigen::SparseMatrix<double> A = model.space().velocity_pattern().view(op.a);
    EXPECT_LE(Eigen::MatrixXd(A - Eigen::SparseMatrix<double>(A.transpose())).cwiseAbs().maxCoeff(), 1e-13);
    const Eigen::SparseMatrix<double> Af = free_scalar_block(model.space(), op.a);
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(Af);
    EXPECT_EQ(llt.info(), Eigen::Success);
  }
}

TEST(FullFem, PoiseuilleIsReproduced) {
  const StokesModel model = make_model(12, 4);
  FullFemSolver solver(model);
  const FluidSolution sol = solver.solve(ParameterVector::zero(6));
  EXPECT_LE((sol.u - model.lifting()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE(sol.relative_residual, 1e-10);
  // p = -8 nu v0 x1 + c along the centerline (and everywhere).
  const auto& mesh = model.space().mesh();
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    for (std::size_t j = 0; j < mesh.num_nodes(); ++j) {
      if (mesh.nodes[i][1] != 0.0 || mesh.nodes[j][1] != 0.0 || mesh.nodes[j][0] <= mesh.nodes[i][0] + 1.0) continue;
      const double g = (sol.p[static_cast<Eigen::Index>(j)] - sol.p[static_cast<Eigen::Index>(i)]) / (mesh.nodes[j][0] - mesh.nodes[i][0]);
      EXPECT_NEAR(g, -8.4, 8.4e-6);
    }
  }
  EXPECT_NEAR(pressure_integral(model, sol.p), 0.0, 1e-12);
}

TEST(FullFem, ConservationAndMeanZeroPressure) {
  const StokesModel model = make_model(12, 4);
  FullFemSolver solver(model);
  for (std::uint64_t seed = 30; seed < 35; ++seed) {
    const FluidSolution sol = solver.solve(random_mu(seed));
    EXPECT_LE(std::abs(boundary_flux(model, sol)), 1e-10);
    EXPECT_LE(std::abs(pressure_integral(model, sol.p)), 1e-12 * std::max(1.0, sol.p.cwiseAbs().maxCoeff()));
    EXPECT_LE(sol.relative_residual, 1e-10);
    Eigen::VectorXd rv, rp;
    SaddlePointSolver::residual(model, model.assemble(sol.mu), model.space().restrict_free(sol.u - model.lifting()), sol.p, rv, rp);
    Eigen::VectorXd F, G;
    lifted_rhs(model, model.assemble(sol.mu), F, G);
    // The pressure residual is only defined up to the multiplier direction.
    const Eigen::VectorXd& m = model.pressure_load();
    const Eigen::VectorXd rp0 = rp - m * (rp.dot(m) / m.dot(m));
    EXPECT_LE(std::sqrt(rv.squaredNorm() + rp0.squaredNorm()), 1e-9 * std::sqrt(F.squaredNorm() + G.squaredNorm()));
  }
}

TEST(FullFem, OutletFluxEqualsProfileFlux) {
  const StokesModel model = make_model(12, 4);
  FullFemSolver solver(model);
  const FluidSolution sol = solver.solve(random_mu(3));
  // int_{-1/2}^{1/2} 30 (1 - 4 x2^2) = 20
  EXPECT_NEAR(boundary_flux(model, sol, BoundaryTag::outflow), 20.0, 1e-10);
  EXPECT_NEAR(boundary_flux(model, sol, BoundaryTag::inflow), -20.0, 1e-10);
}

TEST(FullFem, MeshCauchySequence) {
  const auto mu = random_mu(4);
  // Velocity at a few fixed interior points.
  const std::vector<Point> probes{{0.7, 0.1}, {1.5, 0.3}, {2.2, -0.2}};
  auto sample = [&](int nx) {
    const StokesModel model = make_model(nx, nx / 4);
    FullFemSolver solver(model);
    const FluidSolution sol = solver.solve(mu);
    const auto& space = model.space();
    Eigen::VectorXd v(static_cast<Eigen::Index>(probes.size()));
    for (std::size_t k = 0; k < probes.size(); ++k) {
      for (std::size_t t = 0; t < space.num_elements(); ++t) {
        const Eigen::Vector3d l = space.barycentric(t, probes[k]);
        if (l.minCoeff() < -1e-12) continue;
        const auto phi = p2_values(l);
        double u = 0.0;
        for (std::size_t i = 0; i < 6; ++i) u += phi[i] * sol.u[space.element_velocity_nodes(t)[i]];
        v[static_cast<Eigen::Index>(k)] = u;
        break;
      }
    }
    return v;
  };
  const Eigen::VectorXd u20 = sample(20), u40 = sample(40), u80 = sample(80);
  EXPECT_LT((u80 - u40).norm(), (u40 - u20).norm());
}

TEST(Traction, EqualsPressureTraceForPoiseuille) {
  const StokesModel model = make_model(12, 4);
  FullFemSolver solver(model);
  const FluidSolution sol = solver.solve(ParameterVector::zero(6));
  const WallTrace wall(model.space());
  const Eigen::VectorXd tau = compute_traction(model, wall, sol);
  for (std::size_t i = 0; i < wall.num_nodes(); ++i) {
    const double x1 = wall.x()[static_cast<Eigen::Index>(i)];
    // p is linear: mean zero over [0,3] gives p = -8.4 (x1 - 1.5).
    EXPECT_NEAR(tau[static_cast<Eigen::Index>(i)], -8.4 * (x1 - 1.5), 1e-8);
  }
}

TEST(Traction, ZeroSolutionGivesZero) {
  const StokesModel model = make_model(6, 2);
  const WallTrace wall(model.space());
  FluidSolution sol;
  sol.u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.space().num_velocity_dofs()));
  sol.p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.space().num_pressure_dofs()));
  sol.mu = random_mu(5);
  EXPECT_EQ(compute_traction(model, wall, sol).cwiseAbs().maxCoeff(), 0.0);
}

TEST(WallTrace, UsesP2NodesAndProjectsP1Exactly) {
  const StokesModel model = make_model(6, 2);
  const WallTrace wall(model.space());
  EXPECT_EQ(wall.num_nodes(), 13u);
  EXPECT_EQ(wall.num_segments(), 12u);
  // A P1 function on the wall mesh: piecewise linear interpolant of |x1 - 1.25|, kink on a node.
  auto f = [](double x) { return std::abs(x - 1.25) + 0.3 * x; };
  const Eigen::VectorXd c = wall.project(f);
  for (std::size_t i = 0; i < wall.num_nodes(); ++i) EXPECT_NEAR(c[static_cast<Eigen::Index>(i)], f(wall.x()[static_cast<Eigen::Index>(i)]), 1e-12);
  for (std::size_t i = 0; i < wall.num_nodes(); ++i) {
    EXPECT_EQ(model.space().velocity_node(static_cast<std::size_t>(wall.velocity_node(i)))[1], 0.5);
  }
}

TEST(InfSup, PositiveContinuousAndMeshStable) {
  const StokesModel m20 = make_model(20, 6);
  const double b0 = compute_infsup(m20, m20.assemble(ParameterVector::zero(6)));
  EXPECT_GT(b0, 0.05);
  const auto mu = random_mu(6);
  Eigen::VectorXd dir = Eigen::VectorXd::Ones(6);
  const double b = compute_infsup(m20, m20.assemble(mu));
  const double d3 = std::abs(b - compute_infsup(m20, m20.assemble(ParameterVector(mu.values() + 1e-3 * dir))));
  const double d4 = std::abs(b - compute_infsup(m20, m20.assemble(ParameterVector(mu.values() + 1e-4 * dir))));
  EXPECT_LT(d4, d3);
  EXPECT_LT(d3, 1e-2);
  const StokesModel m40 = make_model(40, 12);
  const double b40 = compute_infsup(m40, m40.assemble(ParameterVector::zero(6)));
  EXPECT_LT(std::max(b0, b40) / std::min(b0, b40), 2.0);
}

TEST(Output, SolutionCsvHasOneRowPerVertex) {
  const StokesModel model = make_model(4, 2);
  FullFemSolver solver(model);
  const FluidSolution sol = solver.solve(ParameterVector::zero(6));
  std::stringstream ss;
  write_solution_csv(ss, model, sol);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "id,x1,x2,u1,u2,p");
  std::size_t rows = 0;
  while (std::getline(ss, line)) ++rows;
  EXPECT_EQ(rows, model.space().num_pressure_dofs());
  std::stringstream dm;
  write_deformed_mesh_csv(dm, model, random_mu(2));
  std::getline(dm, line);
  EXPECT_EQ(line, "x1,x2,x1_def,x2_def");
}

TEST(PhysicalConstants, Validation) {
  PhysicalConstants pc;
  pc.nu = 0.0;
  EXPECT_THROW(pc.validate(), std::invalid_argument);
  pc = {};
  pc.K = -1.0;
  EXPECT_THROW(pc.validate(), std::invalid_argument);
}
