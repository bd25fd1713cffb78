#include <gtest/gtest.h>

#include "fsirb/ffd.hpp"

using namespace fsirb;

namespace {

FfdLattice centered_lattice() {
  const int l[] = {2, 3, 4, 5, 6, 7};
  return FfdLattice::top_row(ReferenceBox{}, 9, 1, l);
}

ParameterVector constant_mu(double v) { return ParameterVector(Eigen::VectorXd::Constant(6, v)); }

}  // namespace

TEST(Bernstein, EndpointAndMidpoint) {
  EXPECT_DOUBLE_EQ(bernstein(1, 0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(bernstein(2, 1, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(bernstein(9, 0, 0.5), 1.0 / 512);
  EXPECT_DOUBLE_EQ(bernstein(9, 1, 0.5), 9.0 / 512);
  EXPECT_THROW(bernstein(3, 4, 0.2), std::invalid_argument);
  EXPECT_THROW(bernstein(3, -1, 0.2), std::invalid_argument);
}

TEST(Bernstein, PartitionOfUnity) {
  for (double s : {0.0, 0.13, 0.37, 0.5, 0.91, 1.0}) {
    double sum = 0.0;
    for (int l = 0; l <= 9; ++l) sum += bernstein(9, l, s);
    EXPECT_NEAR(sum, 1.0, 1e-13);
  }
  // Tensor product on the unit square.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double s = u(rng), t = u(rng);
    double sum = 0.0;
    for (int l = 0; l <= 9; ++l)
      for (int m = 0; m <= 1; ++m) sum += bernstein(9, l, s) * bernstein(1, m, t);
    EXPECT_NEAR(sum, 1.0, 1e-13);
  }
}

TEST(Bernstein, DerivativeMatchesDifference) {
  const double h = 1e-6;
  for (int l = 0; l <= 9; ++l) {
    const double fd = (bernstein(9, l, 0.4 + h) - bernstein(9, l, 0.4 - h)) / (2 * h);
    EXPECT_NEAR(bernstein_derivative(9, l, 0.4), fd, 1e-6);
  }
}

TEST(FfdMap, IdentityAtRest) {
  const FfdLattice lat = FfdLattice::channel_default();
  const auto zero = ParameterVector::zero(6);
  for (double x1 : {0.0, 0.7, 1.5, 3.0})
    for (double x2 : {-0.5, 0.0, 0.31, 0.5}) {
      const Point x(x1, x2);
      EXPECT_LT((lat.map(x, zero) - x).norm(), 1e-14);
      EXPECT_LT((lat.jacobian(x, zero) - Mat2::Identity()).norm(), 1e-14);
      const auto t = lat.tensors(x, zero);
      EXPECT_LT((t.nu - Mat2::Identity()).norm(), 1e-14);
      EXPECT_LT((t.chi - Mat2::Identity()).norm(), 1e-14);
      EXPECT_NEAR(t.det, 1.0, 1e-14);
    }
}

TEST(FfdMap, MovedControlPointOnQuadraticLattice) {
  // Corner columns are pinned, so the check moves the top middle point of a
  // 3 x 2 lattice; at s = 1/2 its Bernstein weight is 1/2.
  const ReferenceBox box;
  const FfdLattice lat(box, 2, 1, {{1, 1, Axis::x1}, {1, 1, Axis::x2}});
  ParameterVector mu(Eigen::Vector2d(0.02, -0.03));
  const Point y = lat.map(Point(1.5, box.x2_max), mu);
  EXPECT_NEAR(y[0], 1.5 + 0.5 * 0.02 * box.width(), 1e-14);
  EXPECT_NEAR(y[1], box.x2_max - 0.5 * 0.03 * box.height(), 1e-14);
  EXPECT_THROW(FfdLattice(box, 1, 1, {{1, 1, Axis::x2}}), std::invalid_argument);
}

TEST(FfdMap, RejectsOutsidePoints) {
  const FfdLattice lat = FfdLattice::channel_default();
  EXPECT_THROW(lat.map(Point(3.5, 0.0), ParameterVector::zero(6)), std::invalid_argument);
  EXPECT_THROW(lat.map(Point(1.0, 0.0), ParameterVector::zero(5)), std::invalid_argument);
}

TEST(FfdMap, CenteredMaskMidpointDisplacement) {
  const FfdLattice lat = centered_lattice();
  EXPECT_NEAR(lat.boundary_displacement(0.5, constant_mu(0.05)), 0.048046875, 1e-15);
  const Point y = lat.map(Point(1.5, 0.5), constant_mu(0.05));
  EXPECT_NEAR(y[1] - 0.5, 0.048046875, 1e-15);
  const double s[] = {0.5};
  EXPECT_NEAR(lat.displacement_basis_matrix(s).sum(), 0.9609375, 1e-15);
}

TEST(FfdMap, DefaultMaskMidpointDisplacement) {
  // l = 1,2,3,6,7,8: sum of b_l^9(1/2) = (9 + 36 + 84 + 84 + 36 + 9) / 512.
  const FfdLattice lat = FfdLattice::channel_default();
  const double s[] = {0.5};
  EXPECT_NEAR(lat.displacement_basis_matrix(s).sum(), 258.0 / 512.0, 1e-15);
}

TEST(FfdMap, DisplacementEndpointsAndLinearity) {
  const FfdLattice lat = FfdLattice::channel_default();
  const ParameterDomain dom(6, -0.1, 0.1);
  const auto mus = dom.sample(20, 11);
  for (const auto& mu : mus) {
    EXPECT_EQ(lat.boundary_displacement(0.0, mu), 0.0);
    EXPECT_EQ(lat.boundary_displacement(1.0, mu), 0.0);
  }
  const double a = 0.7, b = -1.3;
  for (double s : {0.1, 0.33, 0.5, 0.8}) {
    const ParameterVector c(a * mus[0].values() + b * mus[1].values());
    EXPECT_NEAR(lat.boundary_displacement(s, c), a * lat.boundary_displacement(s, mus[0]) + b * lat.boundary_displacement(s, mus[1]),
                1e-13);
    EXPECT_EQ(lat.boundary_displacement(s, ParameterVector::zero(6)), 0.0);
  }
  std::vector<double> s{0.0, 0.2, 0.5, 0.75, 1.0};
  const Eigen::MatrixXd D = lat.displacement_basis_matrix(s);
  EXPECT_EQ(D.row(0).norm(), 0.0);
  EXPECT_EQ(D.row(4).norm(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_NEAR(D.row(static_cast<Eigen::Index>(i)).dot(mus[2].values()), lat.boundary_displacement(s[i], mus[2]), 1e-15);
  }
}

TEST(FfdMap, SlopeMatchesDifference) {
  const FfdLattice lat = FfdLattice::channel_default();
  const auto mu = ParameterDomain(6, -0.1, 0.1).sample(1, 3)[0];
  const double h = 1e-6, s = 0.41;
  // d eta / d x1 with s = x1 / 3.
  const double fd = (lat.boundary_displacement(s + h, mu) - lat.boundary_displacement(s - h, mu)) / (2 * h) / 3.0;
  EXPECT_NEAR(lat.boundary_slope(s, mu), fd, 1e-8);
  const double pts[] = {s};
  EXPECT_NEAR(lat.slope_basis_matrix(pts).row(0).dot(mu.values()), lat.boundary_slope(s, mu), 1e-15);
}

TEST(FfdJacobian, MatchesCentralDifferences) {
  const FfdLattice lat = FfdLattice::channel_default();
  const auto mus = ParameterDomain(6, -0.1, 0.1).sample(5, 17);
  const double h = 1e-6;
  double worst = 0.0;
  for (const auto& mu : mus) {
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j) {
        // Stay h inside the box so the central stencil is defined.
        const Point x(h + (3.0 - 2 * h) * i / 19.0, -0.5 + h + (1.0 - 2 * h) * j / 19.0);
        Mat2 fd;
        for (int c = 0; c < 2; ++c) {
          Point e = Point::Zero();
          e[c] = h;
          fd.col(c) = (lat.map(x + e, mu) - lat.map(x - e, mu)) / (2 * h);
        }
        worst = std::max(worst, (lat.jacobian(x, mu) - fd).cwiseAbs().maxCoeff());
      }
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(FfdJacobian, DerivativesGiveAffineJacobian) {
  const FfdLattice lat = FfdLattice::channel_default();
  const auto mu = ParameterDomain(6, -0.1, 0.1).sample(1, 8)[0];
  const Point x(1.1, 0.2);
  const auto D = lat.jacobian_derivatives(x);
  Mat2 J = Mat2::Identity();
  for (std::size_t j = 0; j < D.size(); ++j) J += mu[j] * D[j];
  EXPECT_LT((J - lat.jacobian(x, mu)).norm(), 1e-14);
}

TEST(TransformTensors, SpotValueAgainstFiniteDifferenceJacobian) {
  const FfdLattice lat = FfdLattice::channel_default();
  ParameterVector mu = ParameterVector::zero(6);
  mu[0] = 0.05;
  const Point x(1.5, 0.25);
  const double h = 1e-6;
  Mat2 J;
  for (int c = 0; c < 2; ++c) {
    Point e = Point::Zero();
    e[c] = h;
    J.col(c) = (lat.map(x + e, mu) - lat.map(x - e, mu)) / (2 * h);
  }
  const double det = J.determinant();
  const Mat2 Ji = J.inverse();
  const auto t = lat.tensors(x, mu);
  EXPECT_NEAR(t.det, det, 1e-8);
  EXPECT_LT((t.nu - Ji * Ji.transpose() * det).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((t.chi - Ji.transpose() * det).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(TransformTensors, SymmetricPositiveDefiniteNu) {
  const FfdLattice lat = FfdLattice::channel_default();
  for (const auto& mu : ParameterDomain(6, -0.1, 0.1).sample(20, 21)) {
    for (double x1 : {0.2, 1.0, 2.4})
      for (double x2 : {-0.4, 0.0, 0.45}) {
        const auto t = lat.tensors(Point(x1, x2), mu);
        EXPECT_LT(std::abs(t.nu(0, 1) - t.nu(1, 0)), 1e-15);
        EXPECT_GT(t.nu.determinant(), 0.0);
        EXPECT_GT(t.nu.trace(), 0.0);
      }
  }
}

TEST(TransformTensors, DegenerateGeometryIsReported) {
  const FfdLattice lat = FfdLattice::channel_default();
  const ParameterVector mu(Eigen::VectorXd::Constant(6, -2.0));
  bool thrown = false;
  for (double x1 = 0.05; x1 < 3.0 && !thrown; x1 += 0.1) {
    try {
      lat.tensors(Point(x1, 0.45), mu);
    } catch (const DegenerateGeometry& e) {
      thrown = true;
      EXPECT_LE(e.determinant(), 0.0);
      EXPECT_EQ(e.parameters().size(), 6u);
    }
  }
  EXPECT_TRUE(thrown);
}

TEST(FfdLattice, InvertibleOnParameterBox) {
  const FfdLattice lat = FfdLattice::channel_default();
  double worst = 1e300;
  for (const auto& mu : ParameterDomain(6, -0.1, 0.1).sample(100, 23)) worst = std::min(worst, lat.min_jacobian_determinant(mu, 50, 50));
  EXPECT_GT(worst, 0.0);
}

TEST(ParameterVector, ParsesAndRejects) {
  const auto mu = parse_parameter_vector("0.01, -0.02,0,0,0,1e-3");
  ASSERT_EQ(mu.size(), 6u);
  EXPECT_DOUBLE_EQ(mu[1], -0.02);
  EXPECT_DOUBLE_EQ(mu[5], 1e-3);
  EXPECT_THROW(parse_parameter_vector("0.1,abc"), std::invalid_argument);
  EXPECT_THROW(parse_parameter_vector(""), std::invalid_argument);
  EXPECT_THROW(parse_parameter_vector("0.1,,0.2"), std::invalid_argument);
}

TEST(ParameterDomain, SamplingIsSeededAndInside) {
  const ParameterDomain dom(6, -0.1, 0.1);
  const auto a = dom.sample(50, 9), b = dom.sample(50, 9), c = dom.sample(50, 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(dom.contains(a[i]));
    EXPECT_EQ(a[i].values(), b[i].values());
  }
  EXPECT_NE(a[0].values(), c[0].values());
  ParameterVector mu(Eigen::VectorXd::Constant(6, 0.3));
  EXPECT_TRUE(dom.clip(mu));
  EXPECT_DOUBLE_EQ(mu[0], 0.1);
  EXPECT_FALSE(dom.clip(mu));
}
