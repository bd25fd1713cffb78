#include "fsirb/eim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace fsirb {

Eigen::VectorXd EimBasis::coefficients(const Eigen::VectorXd& magic_values) const {
  if (magic_values.size() != static_cast<Eigen::Index>(size())) throw std::invalid_argument("EIM: wrong number of magic values");
  if (size() == 0) return {};
  return interpolation.triangularView<Eigen::UnitLower>().solve(magic_values);
}

EimBasis EimBasis::truncated(std::size_t m) const {
  if (m > size()) throw std::invalid_argument("EIM: cannot truncate beyond basis size");
  EimBasis out;
  const auto mm = static_cast<Eigen::Index>(m);
  out.functions = functions.leftCols(mm);
  out.magic.assign(magic.begin(), magic.begin() + mm);
  if (!magic_points.empty()) out.magic_points.assign(magic_points.begin(), magic_points.begin() + mm);
  out.interpolation = interpolation.topLeftCorner(mm, mm);
  out.error_history.assign(error_history.begin(), error_history.begin() + mm + 1);
  out.tolerance = tolerance;
  out.converged = out.training_error() <= tolerance;
  return out;
}

EimBasis eim_train(const Eigen::MatrixXd& snapshots, double tolerance, int max_terms) {
  if (snapshots.cols() == 0) throw std::invalid_argument("EIM: empty training set");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("EIM: tolerance must be nonnegative");
  if (max_terms < 0) throw std::invalid_argument("EIM: max_terms must be nonnegative");
  EimBasis basis;
  basis.tolerance = tolerance;
  basis.functions.resize(snapshots.rows(), 0);

  // Columns hold the current interpolation error of every training snapshot.
  Eigen::MatrixXd residual = snapshots;
  Eigen::RowVectorXd col_error = residual.cwiseAbs().colwise().maxCoeff();
  Eigen::Index worst = 0;
  double error = col_error.maxCoeff(&worst);
  basis.error_history.push_back(error);

  while (error > tolerance && static_cast<int>(basis.size()) < max_terms) {
    Eigen::Index point = 0;
    const double peak = residual.col(worst).cwiseAbs().maxCoeff(&point);
    if (peak == 0.0) break;
    const Eigen::VectorXd zeta = residual.col(worst) / residual(point, worst);
    const Eigen::RowVectorXd at_point = residual.row(point);
    residual.noalias() -= zeta * at_point;

    const auto m = basis.functions.cols();
    basis.functions.conservativeResize(Eigen::NoChange, m + 1);
    basis.functions.col(m) = zeta;
    basis.magic.push_back(static_cast<int>(point));

    col_error = residual.cwiseAbs().colwise().maxCoeff();
    error = col_error.maxCoeff(&worst);
    basis.error_history.push_back(error);
  }

  const auto M = static_cast<Eigen::Index>(basis.size());
  basis.interpolation.resize(M, M);
  for (Eigen::Index i = 0; i < M; ++i) basis.interpolation.row(i) = basis.functions.row(basis.magic[static_cast<std::size_t>(i)]);
  basis.converged = error <= tolerance;
  return basis;
}

EimBasis eim_train(const ParametricField& field, std::span<const ParameterVector> train, double tolerance,
                   int max_terms) {
  if (train.empty()) throw std::invalid_argument("EIM: empty training set");
  Eigen::MatrixXd snapshots(static_cast<Eigen::Index>(field.num_points()), static_cast<Eigen::Index>(train.size()));
  Eigen::VectorXd values;
  for (std::size_t t = 0; t < train.size(); ++t) {
    field.evaluate(train[t], values);
    snapshots.col(static_cast<Eigen::Index>(t)) = values;
  }
  return eim_train(snapshots, tolerance, max_terms);
}

Eigen::VectorXd eim_coefficients(const EimBasis& basis, const ParametricField& field, const ParameterVector& mu) {
  Eigen::VectorXd values(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    values[static_cast<Eigen::Index>(i)] = field.evaluate_at(static_cast<std::size_t>(basis.magic[i]), mu);
  }
  return basis.coefficients(values);
}

double eim_validate(const EimBasis& basis, const ParametricField& field, std::span<const ParameterVector> test) {
  double worst = 0.0;
  Eigen::VectorXd values;
  for (const auto& mu : test) {
    field.evaluate(mu, values);
    const Eigen::VectorXd approx =
        basis.size() ? basis.interpolate(eim_coefficients(basis, field, mu)) : Eigen::VectorXd::Zero(values.size());
    worst = std::max(worst, (values - approx).cwiseAbs().maxCoeff());
  }
  return worst;
}

std::string_view to_string(TensorEntry e) {
  static constexpr std::array<std::string_view, kTensorEntries> names{"nu11",  "nu12",  "nu21",  "nu22", "chi11",
                                                                      "chi12", "chi21", "chi22", "det"};
  return names[static_cast<std::size_t>(e)];
}

double tensor_entry(const TransformTensors& t, TensorEntry e) {
  switch (e) {
    case TensorEntry::nu11: return t.nu(0, 0);
    case TensorEntry::nu12: return t.nu(0, 1);
    case TensorEntry::nu21: return t.nu(1, 0);
    case TensorEntry::nu22: return t.nu(1, 1);
    case TensorEntry::chi11: return t.chi(0, 0);
    case TensorEntry::chi12: return t.chi(0, 1);
    case TensorEntry::chi21: return t.chi(1, 0);
    case TensorEntry::chi22: return t.chi(1, 1);
    case TensorEntry::det: return t.det;
  }
  return 0.0;
}

void TensorEntryField::evaluate(const ParameterVector& mu, Eigen::VectorXd& out) const {
  const auto n = jacobians_->num_points();
  out.resize(static_cast<Eigen::Index>(n));
  for (std::size_t p = 0; p < n; ++p) out[static_cast<Eigen::Index>(p)] = tensor_entry(jacobians_->tensors(p, mu), entry_);
}

double TensorEntryField::evaluate_at(std::size_t point, const ParameterVector& mu) const {
  return tensor_entry(jacobians_->tensors(point, mu), entry_);
}

TensorEim::TensorEim(std::array<EimBasis, kTensorEntries> bases, const FfdLattice& lattice, EimOptions options)
    : bases_(std::move(bases)), options_(options) {
  std::map<std::pair<double, double>, int> index;
  std::vector<Point> points;
  for (std::size_t e = 0; e < kTensorEntries; ++e) {
    const auto& b = bases_[e];
    if (b.magic_points.size() != b.size()) throw std::invalid_argument("TensorEim: magic point coordinates missing");
    for (const Point& x : b.magic_points) {
      auto [it, inserted] = index.try_emplace({x[0], x[1]}, static_cast<int>(points.size()));
      if (inserted) points.push_back(x);
      magic_slot_[e].push_back(it->second);
    }
  }
  magic_jacobians_ = JacobianField(lattice, points);
}

bool TensorEim::converged() const {
  return std::all_of(bases_.begin(), bases_.end(), [](const EimBasis& b) { return b.converged; });
}

std::size_t TensorEim::num_viscous_terms() const {
  std::size_t n = 0;
  for (std::size_t e = 0; e < 4; ++e) n += bases_[e].size();
  return n;
}

std::size_t TensorEim::num_divergence_terms() const {
  std::size_t n = 0;
  for (std::size_t e = 4; e < 8; ++e) n += bases_[e].size();
  return n;
}

std::array<Eigen::VectorXd, kTensorEntries> TensorEim::coefficients(const ParameterVector& mu) const {
  std::vector<TransformTensors> t(magic_jacobians_.num_points());
  for (std::size_t p = 0; p < t.size(); ++p) t[p] = magic_jacobians_.tensors(p, mu);
  std::array<Eigen::VectorXd, kTensorEntries> out;
  for (std::size_t e = 0; e < kTensorEntries; ++e) {
    const auto& slots = magic_slot_[e];
    Eigen::VectorXd values(static_cast<Eigen::Index>(slots.size()));
    for (std::size_t i = 0; i < slots.size(); ++i) {
      values[static_cast<Eigen::Index>(i)] = tensor_entry(t[static_cast<std::size_t>(slots[i])], static_cast<TensorEntry>(e));
    }
    out[e] = bases_[e].coefficients(values);
  }
  return out;
}

TensorEim train_tensor_eim(const FfdLattice& lattice, std::span<const Point> points, const ParameterDomain& domain,
                           const EimOptions& options) {
  if (options.train_size == 0) throw std::invalid_argument("EIM: training set size must be positive");
  if (domain.size() != lattice.num_parameters()) throw std::invalid_argument("EIM: parameter domain does not match lattice");
  const auto train = domain.sample(options.train_size, options.seed);
  const JacobianField jacobians(lattice, points);
  std::array<EimBasis, kTensorEntries> bases;
  for (std::size_t e = 0; e < kTensorEntries; ++e) {
    const TensorEntryField field(jacobians, static_cast<TensorEntry>(e));
    bases[e] = eim_train(field, train, options.tolerance, options.max_terms);
    for (int m : bases[e].magic) bases[e].magic_points.push_back(points[static_cast<std::size_t>(m)]);
  }
  return TensorEim(std::move(bases), lattice, options);
}

}  // namespace fsirb
