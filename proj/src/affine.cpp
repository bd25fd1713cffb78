#include "fsirb/affine.hpp"

#include <stdexcept>

namespace fsirb {

AffineSystem::AffineSystem(const StokesModel& model, TensorEim eim) : model_(&model), eim_(std::move(eim)) {
  const auto& space = model.space();
  const auto np = static_cast<Eigen::Index>(space.num_quadrature_points());
  for (std::size_t e = 0; e < kTensorEntries; ++e) {
    if (eim_.bases()[e].num_points() != static_cast<std::size_t>(np) && eim_.bases()[e].size() > 0) {
      throw std::invalid_argument("affine system: EIM bases were trained on a different quadrature");
    }
  }
  const double nu = model.constants().nu;
  const Eigen::Vector2d force = model.constants().force;
  QuadTensor c = QuadTensor::Zero(np, 4);
  for (std::size_t e = 0; e < 4; ++e) {
    const auto& basis = eim_.bases()[e];
    for (Eigen::Index m = 0; m < basis.functions.cols(); ++m) {
      c.setZero();
      c.col(static_cast<Eigen::Index>(e)) = nu * basis.functions.col(m);
      a_terms_.push_back(space.assemble_grad_grad(c));
    }
  }
  for (std::size_t e = 4; e < 8; ++e) {
    const auto& basis = eim_.bases()[e];
    const int k = static_cast<int>(e - 4) / 2;
    for (Eigen::Index m = 0; m < basis.functions.cols(); ++m) {
      c.setZero();
      c.col(static_cast<Eigen::Index>(e - 4)) = basis.functions.col(m);
      b_terms_.push_back(std::move(space.assemble_divergence(c)[static_cast<std::size_t>(k)]));
      b_component_.push_back(k);
    }
  }
  const auto& det = eim_.basis(TensorEntry::det);
  const auto nv = static_cast<Eigen::Index>(space.num_velocity_nodes());
  for (Eigen::Index m = 0; m < det.functions.cols(); ++m) {
    std::array<Eigen::VectorXd, 2> f;
    const Eigen::VectorXd load = (force.array() != 0.0).any() ? space.assemble_load(det.functions.col(m)) : Eigen::VectorXd::Zero(nv);
    for (int k = 0; k < 2; ++k) f[static_cast<std::size_t>(k)] = force[k] * load;
    f_terms_.push_back(std::move(f));
  }
}

AffineTheta affine_theta(const TensorEim& eim, const ParameterVector& mu) {
  const auto coeff = eim.coefficients(mu);
  auto concat = [&coeff](std::size_t first, std::size_t last) {
    Eigen::Index n = 0;
    for (std::size_t e = first; e < last; ++e) n += coeff[e].size();
    Eigen::VectorXd out(n);
    n = 0;
    for (std::size_t e = first; e < last; ++e) {
      out.segment(n, coeff[e].size()) = coeff[e];
      n += coeff[e].size();
    }
    return out;
  };
  return {concat(0, 4), concat(4, 8), concat(8, 9)};
}

StokesOperator AffineSystem::assemble(const Theta& theta) const {
  const auto& space = model_->space();
  StokesOperator op;
  op.a = Eigen::VectorXd::Zero(space.velocity_pattern().nnz());
  for (std::size_t q = 0; q < a_terms_.size(); ++q) op.a += theta.a[static_cast<Eigen::Index>(q)] * a_terms_[q];
  for (auto& b : op.b) b = Eigen::VectorXd::Zero(space.divergence_pattern().nnz());
  for (std::size_t q = 0; q < b_terms_.size(); ++q) {
    op.b[static_cast<std::size_t>(b_component_[q])] += theta.b[static_cast<Eigen::Index>(q)] * b_terms_[q];
  }
  for (auto& f : op.force) f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_velocity_nodes()));
  for (std::size_t q = 0; q < f_terms_.size(); ++q) {
    for (int k = 0; k < 2; ++k) {
      op.force[static_cast<std::size_t>(k)] += theta.f[static_cast<Eigen::Index>(q)] * f_terms_[q][static_cast<std::size_t>(k)];
    }
  }
  return op;
}

AffineSystem::Fields AffineSystem::fields(const Theta& theta) const {
  const auto& space = model_->space();
  const auto np = static_cast<Eigen::Index>(space.num_quadrature_points());
  Fields out{QuadTensor::Zero(np, 4), QuadTensor::Zero(np, 4), {}};
  Eigen::Index a = 0, b = 0;
  for (std::size_t e = 0; e < 8; ++e) {
    const auto& basis = eim_.bases()[e];
    const Eigen::Index m = basis.functions.cols();
    if (m == 0) continue;
    if (e < 4) {
      out.nu.col(static_cast<Eigen::Index>(e)).noalias() = model_->constants().nu * (basis.functions * theta.a.segment(a, m));
      a += m;
    } else {
      out.chi.col(static_cast<Eigen::Index>(e - 4)).noalias() = basis.functions * theta.b.segment(b, m);
      b += m;
    }
  }
  for (int k = 0; k < 2; ++k) {
    auto& f = out.force[static_cast<std::size_t>(k)];
    f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_velocity_nodes()));
    for (std::size_t q = 0; q < f_terms_.size(); ++q) f += theta.f[static_cast<Eigen::Index>(q)] * f_terms_[q][static_cast<std::size_t>(k)];
  }
  return out;
}

void AffineSystem::residual(const Fields& fields, const Eigen::VectorXd& u_free, const Eigen::VectorXd& p,
                            Eigen::VectorXd& r_velocity, Eigen::VectorXd& r_pressure) const {
  const auto& space = model_->space();
  const auto n = static_cast<Eigen::Index>(space.num_velocity_nodes());
  const Eigen::VectorXd w = model_->lifting() + space.expand_free(u_free);
  Eigen::VectorXd full = -space.apply_divergence_transpose(fields.chi, p);
  for (int k = 0; k < 2; ++k) {
    full.segment(k * n, n) += fields.force[static_cast<std::size_t>(k)] - space.apply_grad_grad(fields.nu, w.segment(k * n, n));
  }
  r_velocity = space.restrict_free(full);
  r_pressure = -space.apply_divergence(fields.chi, w);
}

}  // namespace fsirb
