#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "fsirb/stokes.hpp"

namespace fsirb {

Eigen::SparseMatrix<double> free_scalar_block(const TaylorHoodSpace& space, const Eigen::VectorXd& values) {
  const auto& s = space.velocity_pattern().structure;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(s.nonZeros()));
  for (int r = 0; r < s.outerSize(); ++r) {
    const int fr = space.free_index(static_cast<std::size_t>(r));
    if (fr < 0) continue;
    for (int k = s.outerIndexPtr()[r]; k < s.outerIndexPtr()[r + 1]; ++k) {
      const int fc = space.free_index(static_cast<std::size_t>(s.innerIndexPtr()[k]));
      if (fc >= 0) triplets.emplace_back(fr, fc, values[k]);
    }
  }
  const auto nf = static_cast<Eigen::Index>(space.num_free_nodes());
  Eigen::SparseMatrix<double> m(nf, nf);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

Eigen::SparseMatrix<double> free_divergence(const TaylorHoodSpace& space, const std::array<Eigen::VectorXd, 2>& b) {
  const auto& s = space.divergence_pattern().structure;
  const int nf = static_cast<int>(space.num_free_nodes());
  std::vector<Eigen::Triplet<double>> triplets;
  for (int q = 0; q < s.outerSize(); ++q) {
    for (int k = s.outerIndexPtr()[q]; k < s.outerIndexPtr()[q + 1]; ++k) {
      const int fc = space.free_index(static_cast<std::size_t>(s.innerIndexPtr()[k]));
      if (fc < 0) continue;
      triplets.emplace_back(q, fc, b[0][k]);
      triplets.emplace_back(q, nf + fc, b[1][k]);
    }
  }
  Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(space.num_pressure_dofs()), 2 * nf);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

double compute_infsup(const StokesModel& model, const StokesOperator& op, const InfSupOptions& options) {
  const auto& space = model.space();
  const int nf = static_cast<int>(space.num_free_nodes());
  const int np = static_cast<int>(space.num_pressure_dofs());
  const Eigen::SparseMatrix<double> X = free_scalar_block(space, model.velocity_gram());
  const Eigen::SparseMatrix<double> B = free_divergence(space, op.b);
  const SparseMap Mp = space.pressure_pattern().view(model.pressure_mass());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> xs(X);
  if (xs.info() != Eigen::Success) throw SolverError("inf-sup: velocity Gram factorization failed");

  // Same saddle structure with the H1 Gram in place of the viscous block.
  SaddlePointSolver saddle(model);
  saddle.factorize(model.velocity_gram(), op.b);
  const auto n = saddle.num_unknowns();

  auto apply_schur = [&](const Eigen::MatrixXd& Y) {
    const Eigen::MatrixXd R = B.transpose() * Y;
    Eigen::MatrixXd W(R.rows(), R.cols());
    W.topRows(nf) = xs.solve(R.topRows(nf));
    W.bottomRows(nf) = xs.solve(R.bottomRows(nf));
    return Eigen::MatrixXd(B * W);
  };

  const int k = std::max(1, std::min(options.block_size, np - 1));
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd Z(np, k);
  for (Eigen::Index j = 0; j < Z.size(); ++j) Z.data()[j] = gauss(rng);

  double previous = -1.0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // Y = S^-1 M Z on the mean-zero space.
    const Eigen::MatrixXd MZ = Mp * Z;
    Eigen::MatrixXd Y(np, k);
    for (int j = 0; j < k; ++j) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
      rhs.segment(2 * nf, np) = MZ.col(j);
      Y.col(j) = saddle.solve_system(rhs).segment(2 * nf, np);
    }

    const Eigen::MatrixXd SY = apply_schur(Y);
    const Eigen::MatrixXd MY = Mp * Y;
    Eigen::MatrixXd Ss = Y.transpose() * SY;
    Eigen::MatrixXd Ms = Y.transpose() * MY;
    Ss = 0.5 * (Ss + Ss.transpose()).eval();
    Ms = 0.5 * (Ms + Ms.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Ss, Ms);
    if (ges.info() != Eigen::Success) throw SolverError("inf-sup: Rayleigh-Ritz step failed");
    const double lambda = ges.eigenvalues()[0];
    Z = Y * ges.eigenvectors();
    if (previous > 0.0 && std::abs(lambda - previous) <= options.tolerance * std::abs(lambda)) {
      return std::sqrt(std::max(lambda, 0.0));
    }
    previous = lambda;
  }
  throw SolverError("inf-sup: block inverse iteration did not converge");
}

}  // namespace fsirb
