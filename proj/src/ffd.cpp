#include "fsirb/ffd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fsirb {

void ReferenceBox::validate() const {
  if (!(x1_max > x1_min) || !(x2_max > x2_min)) {
    throw std::invalid_argument("reference box must have positive extent in both directions");
  }
}

Point ReferenceBox::to_unit(const Point& x) const {
  return {(x[0] - x1_min) / width(), (x[1] - x2_min) / height()};
}

Point ReferenceBox::from_unit(const Point& st) const {
  return {x1_min + st[0] * width(), x2_min + st[1] * height()};
}

bool ReferenceBox::contains(const Point& x, double tol) const {
  const double t1 = tol * width();
  const double t2 = tol * height();
  return x[0] >= x1_min - t1 && x[0] <= x1_max + t1 && x[1] >= x2_min - t2 && x[1] <= x2_max + t2;
}

std::string ParameterVector::to_string() const {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (i) os << ',';
    os << values_[i];
  }
  return os.str();
}

ParameterVector parse_parameter_vector(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw std::invalid_argument("empty component in parameter vector '" + text + "'");
    const std::string token = item.substr(first, last - first + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("malformed parameter component '" + token + "'");
    }
    if (used != token.size() || !std::isfinite(v)) {
      throw std::invalid_argument("malformed parameter component '" + token + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) throw std::invalid_argument("empty parameter vector");
  return ParameterVector(Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
}

ParameterDomain::ParameterDomain(std::size_t n, double lower, double upper)
    : ParameterDomain(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), lower),
                      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), upper)) {}

ParameterDomain::ParameterDomain(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw std::invalid_argument("parameter bound size mismatch");
  if ((upper_.array() < lower_.array()).any()) throw std::invalid_argument("parameter bounds inverted");
}

bool ParameterDomain::contains(const ParameterVector& mu, double tol) const {
  if (mu.size() != size()) return false;
  return (mu.values().array() >= lower_.array() - tol).all() && (mu.values().array() <= upper_.array() + tol).all();
}

bool ParameterDomain::clip(ParameterVector& mu) const {
  if (mu.size() != size()) throw std::invalid_argument("parameter vector size does not match domain");
  const Eigen::VectorXd clipped = mu.values().cwiseMax(lower_).cwiseMin(upper_);
  const bool moved = clipped != mu.values();
  mu.values() = clipped;
  return moved;
}

ParameterVector ParameterDomain::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd v(lower_.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = lower_[i] + unit(rng) * (upper_[i] - lower_[i]);
  return ParameterVector(std::move(v));
}

std::vector<ParameterVector> ParameterDomain::sample(std::size_t count, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::vector<ParameterVector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample(rng));
  return out;
}

namespace {

std::string degenerate_message(const Point& x, const ParameterVector& mu, double det) {
  std::ostringstream os;
  os << "degenerate geometry: det J = " << det << " at x = (" << x[0] << ", " << x[1] << ") for mu = ("
     << mu.to_string() << ")";
  return os.str();
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

double int_pow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

}  // namespace

DegenerateGeometry::DegenerateGeometry(const Point& x, const ParameterVector& mu, double det)
    : std::runtime_error(degenerate_message(x, mu, det)), where_(x), mu_(mu), det_(det) {}

double bernstein(int degree, int index, double s) {
  if (degree < 0 || index < 0 || index > degree) {
    throw std::invalid_argument("bernstein: index must satisfy 0 <= index <= degree");
  }
  return binomial(degree, index) * int_pow(1.0 - s, degree - index) * int_pow(s, index);
}

double bernstein_derivative(int degree, int index, double s) {
  if (degree < 0 || index < 0 || index > degree) {
    throw std::invalid_argument("bernstein_derivative: index must satisfy 0 <= index <= degree");
  }
  if (degree == 0) return 0.0;
  // d/ds b_i^n = n (b_{i-1}^{n-1} - b_i^{n-1})
  double d = 0.0;
  if (index > 0) d += bernstein(degree - 1, index - 1, s);
  if (index < degree) d -= bernstein(degree - 1, index, s);
  return degree * d;
}

bool transform_tensors_from_jacobian(const Mat2& jacobian, TransformTensors& out) {
  const double det = jacobian.determinant();
  if (!(det > 0.0)) return false;
  const Mat2 inv = jacobian.inverse();
  out.det = det;
  out.nu = inv * inv.transpose() * det;
  out.chi = inv.transpose() * det;
  return true;
}

FfdLattice::FfdLattice(ReferenceBox box, int degree_x, int degree_y, std::vector<MovableComponent> movable)
    : box_(box), degree_x_(degree_x), degree_y_(degree_y), movable_(std::move(movable)) {
  box_.validate();
  if (degree_x_ < 1 || degree_y_ < 1) throw std::invalid_argument("lattice degrees must be >= 1");
  for (const auto& c : movable_) {
    if (c.l < 0 || c.l > degree_x_ || c.m < 0 || c.m > degree_y_) {
      throw std::invalid_argument("movable component outside the control grid");
    }
    // Corner columns stay fixed so the wall displacement vanishes at both ends.
    if (c.l == 0 || c.l == degree_x_) {
      throw std::invalid_argument("control points in the first and last lattice column cannot move");
    }
  }
}

FfdLattice FfdLattice::channel_default(const ReferenceBox& box) {
  static constexpr int kDefaultMovable[] = {1, 2, 3, 6, 7, 8};
  return top_row(box, 9, 1, kDefaultMovable);
}

FfdLattice FfdLattice::top_row(const ReferenceBox& box, int degree_x, int degree_y, std::span<const int> l_indices) {
  std::vector<MovableComponent> movable;
  for (int l : l_indices) movable.push_back({l, degree_y, Axis::x2});
  return FfdLattice(box, degree_x, degree_y, std::move(movable));
}

Point FfdLattice::control_point(int l, int m) const {
  return {static_cast<double>(l) / degree_x_, static_cast<double>(m) / degree_y_};
}

void FfdLattice::check_point(const Point& x) const {
  if (!box_.contains(x, 1e-12)) throw std::invalid_argument("ffd: point outside the reference box");
}

void FfdLattice::check_parameters(const ParameterVector& mu) const {
  if (mu.size() != movable_.size()) throw std::invalid_argument("ffd: parameter vector has wrong length");
}

namespace {

// Displacements of all control points in unit-square coordinates.
std::vector<Point> lattice_displacements(int L, int M, std::span<const MovableComponent> movable,
                                         const ParameterVector& mu) {
  std::vector<Point> disp(static_cast<std::size_t>((L + 1) * (M + 1)), Point::Zero());
  for (std::size_t j = 0; j < movable.size(); ++j) {
    const auto& c = movable[j];
    disp[static_cast<std::size_t>(c.l * (M + 1) + c.m)][static_cast<int>(c.axis)] += mu[j];
  }
  return disp;
}

}  // namespace

Point FfdLattice::map(const Point& x, const ParameterVector& mu) const {
  check_point(x);
  check_parameters(mu);
  const Point st = box_.to_unit(x);
  const auto disp = lattice_displacements(degree_x_, degree_y_, movable_, mu);
  Point sum = Point::Zero();
  for (int l = 0; l <= degree_x_; ++l) {
    const double bl = bernstein(degree_x_, l, st[0]);
    for (int m = 0; m <= degree_y_; ++m) {
      const double w = bl * bernstein(degree_y_, m, st[1]);
      sum += w * (control_point(l, m) + disp[static_cast<std::size_t>(l * (degree_y_ + 1) + m)]);
    }
  }
  return box_.from_unit(sum);
}

Mat2 FfdLattice::jacobian(const Point& x, const ParameterVector& mu) const {
  check_point(x);
  check_parameters(mu);
  const Point st = box_.to_unit(x);
  const auto disp = lattice_displacements(degree_x_, degree_y_, movable_, mu);
  Point ds = Point::Zero();
  Point dt = Point::Zero();
  for (int l = 0; l <= degree_x_; ++l) {
    const double bl = bernstein(degree_x_, l, st[0]);
    const double dbl = bernstein_derivative(degree_x_, l, st[0]);
    for (int m = 0; m <= degree_y_; ++m) {
      const Point p = control_point(l, m) + disp[static_cast<std::size_t>(l * (degree_y_ + 1) + m)];
      ds += dbl * bernstein(degree_y_, m, st[1]) * p;
      dt += bl * bernstein_derivative(degree_y_, m, st[1]) * p;
    }
  }
  // Chain rule through Psi (diag(1/w, 1/h)) and Psi^-1 (diag(w, h)).
  const Eigen::Vector2d scale(box_.width(), box_.height());
  Mat2 J;
  J.col(0) = scale.cwiseProduct(ds) / box_.width();
  J.col(1) = scale.cwiseProduct(dt) / box_.height();
  return J;
}

std::vector<Mat2> FfdLattice::jacobian_derivatives(const Point& x) const {
  const Point st = box_.to_unit(x);
  const Eigen::Vector2d scale(box_.width(), box_.height());
  std::vector<Mat2> out;
  out.reserve(movable_.size());
  for (const auto& c : movable_) {
    const int a = static_cast<int>(c.axis);
    Mat2 D = Mat2::Zero();
    D(a, 0) = bernstein_derivative(degree_x_, c.l, st[0]) * bernstein(degree_y_, c.m, st[1]) * scale[a] / box_.width();
    D(a, 1) = bernstein(degree_x_, c.l, st[0]) * bernstein_derivative(degree_y_, c.m, st[1]) * scale[a] / box_.height();
    out.push_back(D);
  }
  return out;
}

TransformTensors FfdLattice::tensors(const Point& x, const ParameterVector& mu) const {
  TransformTensors t;
  const Mat2 J = jacobian(x, mu);
  if (!transform_tensors_from_jacobian(J, t)) throw DegenerateGeometry(x, mu, J.determinant());
  return t;
}

double FfdLattice::boundary_displacement(double s, const ParameterVector& mu) const {
  check_parameters(mu);
  double eta = 0.0;
  for (std::size_t j = 0; j < movable_.size(); ++j) {
    const auto& c = movable_[j];
    if (c.axis != Axis::x2) continue;
    eta += bernstein(degree_x_, c.l, s) * bernstein(degree_y_, c.m, 1.0) * mu[j];
  }
  return box_.height() * eta;
}

double FfdLattice::boundary_slope(double s, const ParameterVector& mu) const {
  check_parameters(mu);
  double d = 0.0;
  for (std::size_t j = 0; j < movable_.size(); ++j) {
    const auto& c = movable_[j];
    if (c.axis != Axis::x2) continue;
    d += bernstein_derivative(degree_x_, c.l, s) * bernstein(degree_y_, c.m, 1.0) * mu[j];
  }
  return box_.height() / box_.width() * d;
}

Eigen::MatrixXd FfdLattice::displacement_basis_matrix(std::span<const double> s) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(movable_.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < movable_.size(); ++j) {
      const auto& c = movable_[j];
      if (c.axis != Axis::x2) continue;
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          box_.height() * bernstein(degree_x_, c.l, s[i]) * bernstein(degree_y_, c.m, 1.0);
    }
  }
  return out;
}

Eigen::MatrixXd FfdLattice::slope_basis_matrix(std::span<const double> s) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(movable_.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < movable_.size(); ++j) {
      const auto& c = movable_[j];
      if (c.axis != Axis::x2) continue;
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          box_.height() / box_.width() * bernstein_derivative(degree_x_, c.l, s[i]) * bernstein(degree_y_, c.m, 1.0);
    }
  }
  return out;
}

double FfdLattice::min_jacobian_determinant(const ParameterVector& mu, int n1, int n2) const {
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n1; ++i) {
    for (int k = 0; k < n2; ++k) {
      const Point st((n1 == 1) ? 0.5 : static_cast<double>(i) / (n1 - 1), (n2 == 1) ? 0.5 : static_cast<double>(k) / (n2 - 1));
      lo = std::min(lo, jacobian(box_.from_unit(st), mu).determinant());
    }
  }
  return lo;
}

JacobianField::JacobianField(const FfdLattice& lattice, std::span<const Point> points)
    : points_(points.begin(), points.end()),
      derivatives_(4 * static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(lattice.num_parameters())) {
  for (std::size_t p = 0; p < points_.size(); ++p) {
    const auto D = lattice.jacobian_derivatives(points_[p]);
    for (std::size_t j = 0; j < D.size(); ++j) {
      for (int e = 0; e < 4; ++e) {
        derivatives_(4 * static_cast<Eigen::Index>(p) + e, static_cast<Eigen::Index>(j)) = D[j](e / 2, e % 2);
      }
    }
  }
}

Mat2 JacobianField::jacobian(std::size_t p, const ParameterVector& mu) const {
  const Eigen::Vector4d d = derivatives_.middleRows<4>(4 * static_cast<Eigen::Index>(p)) * mu.values();
  Mat2 J;
  J << 1.0 + d[0], d[1], d[2], 1.0 + d[3];
  return J;
}

TransformTensors JacobianField::tensors(std::size_t p, const ParameterVector& mu) const {
  TransformTensors t;
  const Mat2 J = jacobian(p, mu);
  if (!transform_tensors_from_jacobian(J, t)) throw DegenerateGeometry(points_[p], mu, J.determinant());
  return t;
}

}  // namespace fsirb
