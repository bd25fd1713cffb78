#include <gtest/gtest.h>

#include <sstream>

#include "fsirb/mesh.hpp"
#include "fsirb/taylor_hood.hpp"

using namespace fsirb;

TEST(Mesh, SmallestCrossedMesh) {
  const Mesh m = build_mesh(1, 1, ReferenceBox{0.0, 1.0, 0.0, 1.0});
  EXPECT_EQ(m.num_nodes(), 5u);
  EXPECT_EQ(m.num_triangles(), 4u);
  EXPECT_NEAR(m.area(), 1.0, 1e-15);
}

TEST(Mesh, CountsAndArea) {
  for (auto [nx, ny] : {std::pair{2, 2}, {7, 3}, {60, 20}}) {
    const Mesh m = build_mesh(nx, ny, ReferenceBox{});
    EXPECT_EQ(m.num_nodes(), static_cast<std::size_t>((nx + 1) * (ny + 1) + nx * ny));
    EXPECT_EQ(m.num_triangles(), static_cast<std::size_t>(4 * nx * ny));
    EXPECT_NEAR(m.area(), 3.0, 1e-12);
  }
  EXPECT_THROW(build_mesh(0, 3, ReferenceBox{}), std::invalid_argument);
}

TEST(Mesh, TrianglesAreCounterClockwise) {
  const Mesh m = build_mesh(5, 3, ReferenceBox{});
  for (std::size_t t = 0; t < m.num_triangles(); ++t) EXPECT_GT(m.triangle_area(t), 0.0);
}

TEST(Mesh, BoundaryEdgesTaggedInteriorNot) {
  const ReferenceBox box;
  const Mesh m = build_mesh(6, 4, box);
  std::vector<int> count(m.edges.size(), 0);
  for (const auto& te : m.triangle_edges)
    for (int e : te) ++count[static_cast<std::size_t>(e)];
  std::size_t wall = 0;
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    const auto& edge = m.edges[e];
    const bool boundary = count[e] == 1;
    EXPECT_EQ(boundary, edge.tag != BoundaryTag::none);
    if (edge.tag == BoundaryTag::flexible_wall) {
      ++wall;
      for (int v : edge.v) EXPECT_EQ(m.nodes[static_cast<std::size_t>(v)][1], box.x2_max);
    }
    if (edge.tag == BoundaryTag::inflow)
      for (int v : edge.v) EXPECT_EQ(m.nodes[static_cast<std::size_t>(v)][0], box.x1_min);
  }
  EXPECT_EQ(wall, 6u);
}

TEST(Mesh, TextRoundTrip) {
  const Mesh m = build_mesh(4, 2, ReferenceBox{});
  std::stringstream ss;
  write_mesh(ss, m);
  EXPECT_NE(ss.str().find("NODES"), std::string::npos);
  EXPECT_NE(ss.str().find("TRIANGLES"), std::string::npos);
  EXPECT_NE(ss.str().find("EDGES"), std::string::npos);
  const Mesh r = read_mesh(ss);
  ASSERT_EQ(r.num_nodes(), m.num_nodes());
  ASSERT_EQ(r.num_triangles(), m.num_triangles());
  ASSERT_EQ(r.edges.size(), m.edges.size());
  for (std::size_t i = 0; i < m.num_nodes(); ++i) EXPECT_EQ(r.nodes[i], m.nodes[i]);
  for (std::size_t t = 0; t < m.num_triangles(); ++t) EXPECT_EQ(r.triangles[t], m.triangles[t]);
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    EXPECT_EQ(r.edges[e].v, m.edges[e].v);
    EXPECT_EQ(r.edges[e].tag, m.edges[e].tag);
  }
}

TEST(Mesh, ReadRejectsGarbage) {
  std::stringstream ss("NODES\n0,abc,1\n");
  EXPECT_THROW(read_mesh(ss), std::exception);
}

TEST(TaylorHood, DofCounts) {
  const int nx = 4, ny = 3;
  const TaylorHoodSpace space(build_mesh(nx, ny, ReferenceBox{}));
  const auto& m = space.mesh();
  EXPECT_EQ(space.num_pressure_dofs(), m.num_nodes());
  EXPECT_EQ(space.num_velocity_nodes(), m.num_nodes() + m.edges.size());
  std::size_t boundary = 0;
  for (std::size_t i = 0; i < space.num_velocity_nodes(); ++i) boundary += space.is_dirichlet(i);
  // Boundary P2 nodes: 2 per boundary edge.
  EXPECT_EQ(boundary, static_cast<std::size_t>(2 * (2 * nx + 2 * ny)));
  EXPECT_EQ(space.num_free_nodes(), space.num_velocity_nodes() - boundary);
}

TEST(TaylorHood, QuadratureIntegratesQuartics) {
  const TaylorHoodSpace space(build_mesh(3, 2, ReferenceBox{}));
  double integral = 0.0, area = 0.0;
  for (std::size_t p = 0; p < space.num_quadrature_points(); ++p) {
    const Point& x = space.quadrature_points()[p];
    integral += space.quadrature_weight(p) * std::pow(x[0], 2) * std::pow(x[1], 2);
    area += space.quadrature_weight(p);
  }
  EXPECT_NEAR(area, 3.0, 1e-13);
  // int_0^3 x^2 dx * int_{-1/2}^{1/2} y^2 dy = 9 * 1/12
  EXPECT_NEAR(integral, 0.75, 1e-13);
}

TEST(TaylorHood, MassAndStiffnessConsistency) {
  const TaylorHoodSpace space(build_mesh(4, 2, ReferenceBox{}));
  const auto n = static_cast<Eigen::Index>(space.num_velocity_nodes());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd mass = space.assemble_mass();
  const auto M = space.velocity_pattern().view(mass);
  EXPECT_NEAR(ones.dot(M * ones), 3.0, 1e-12);
  QuadTensor id(static_cast<Eigen::Index>(space.num_quadrature_points()), 4);
  id.col(0).setOnes();
  id.col(1).setZero();
  id.col(2).setZero();
  id.col(3).setOnes();
  const Eigen::VectorXd stiff = space.assemble_grad_grad(id);
  const auto A = space.velocity_pattern().view(stiff);
  EXPECT_LT((A * ones).cwiseAbs().maxCoeff(), 1e-12);
  // Energy of u = x1: int |grad x1|^2 = area.
  Eigen::VectorXd x1(n);
  for (Eigen::Index i = 0; i < n; ++i) x1[i] = space.velocity_node(static_cast<std::size_t>(i))[0];
  EXPECT_NEAR(x1.dot(A * x1), 3.0, 1e-12);
  EXPECT_NEAR(space.pressure_load().sum(), 3.0, 1e-12);
}

TEST(TaylorHood, FreeDofScatterRoundTrip) {
  const TaylorHoodSpace space(build_mesh(3, 2, ReferenceBox{}));
  const Eigen::VectorXd f = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(space.num_free_velocity_dofs()), 1.0, 2.0);
  const Eigen::VectorXd full = space.expand_free(f);
  EXPECT_EQ(full.size(), static_cast<Eigen::Index>(space.num_velocity_dofs()));
  EXPECT_EQ(space.restrict_free(full), f);
}
