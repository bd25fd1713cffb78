#include "fsirb/taylor_hood.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace fsirb {

TriangleRule triangle_rule(int degree) {
  TriangleRule rule;
  auto add_orbit = [&rule](double a, double w) {
    const double b = 1.0 - 2.0 * a;
    rule.points.emplace_back(a, a);
    rule.points.emplace_back(b, a);
    rule.points.emplace_back(a, b);
    rule.weights.insert(rule.weights.end(), {w, w, w});
  };
  if (degree <= 4) {
    // Dunavant, 6 points.
    add_orbit(0.44594849091596488632, 0.22338158967801146570);
    add_orbit(0.091576213509770743460, 0.10995174365532186764);
    rule.degree = 4;
  } else if (degree == 5) {
    // Dunavant, 7 points.
    rule.points.emplace_back(1.0 / 3.0, 1.0 / 3.0);
    rule.weights.push_back(0.225);
    add_orbit(0.47014206410511508977, 0.13239415278850618074);
    add_orbit(0.10128650732345633880, 0.12593918054482715260);
    rule.degree = 5;
  } else {
    throw std::invalid_argument("triangle_rule: supported degrees are 4 and 5");
  }
  return rule;
}

LineRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
  LineRule rule;
  rule.points.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    rule.points[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
    rule.weights[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

std::array<double, 6> p2_values(const Eigen::Vector3d& l) {
  return {l[0] * (2 * l[0] - 1), l[1] * (2 * l[1] - 1), l[2] * (2 * l[2] - 1),
          4 * l[0] * l[1],       4 * l[1] * l[2],       4 * l[2] * l[0]};
}

std::array<Eigen::Vector2d, 6> p2_gradients(const Eigen::Vector3d& l, const std::array<Eigen::Vector2d, 3>& g) {
  return {(4 * l[0] - 1) * g[0],
          (4 * l[1] - 1) * g[1],
          (4 * l[2] - 1) * g[2],
          4 * (l[0] * g[1] + l[1] * g[0]),
          4 * (l[1] * g[2] + l[2] * g[1]),
          4 * (l[2] * g[0] + l[0] * g[2])};
}

SparseMap AssemblyPattern::view(const Eigen::VectorXd& values) const {
  if (values.size() != nnz()) throw std::invalid_argument("AssemblyPattern::view: value array size mismatch");
  return SparseMap(structure.rows(), structure.cols(), structure.nonZeros(), structure.outerIndexPtr(),
                   structure.innerIndexPtr(), values.data());
}

namespace {

template <std::size_t R, std::size_t C>
AssemblyPattern make_pattern(const std::vector<std::array<int, R>>& rows, const std::vector<std::array<int, C>>& cols,
                             Eigen::Index nrows, Eigen::Index ncols) {
  AssemblyPattern pattern;
  pattern.local_rows = static_cast<int>(R);
  pattern.local_cols = static_cast<int>(C);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(rows.size() * R * C);
  for (std::size_t e = 0; e < rows.size(); ++e) {
    for (int r : rows[e]) {
      for (int c : cols[e]) triplets.emplace_back(r, c, 0.0);
    }
  }
  pattern.structure.resize(nrows, ncols);
  pattern.structure.setFromTriplets(triplets.begin(), triplets.end());
  pattern.structure.makeCompressed();
  const int* outer = pattern.structure.outerIndexPtr();
  const int* inner = pattern.structure.innerIndexPtr();
  pattern.slots.resize(rows.size() * R * C);
  std::size_t k = 0;
  for (std::size_t e = 0; e < rows.size(); ++e) {
    for (int r : rows[e]) {
      for (int c : cols[e]) {
        const int* found = std::lower_bound(inner + outer[r], inner + outer[r + 1], c);
        pattern.slots[k++] = static_cast<int>(found - inner);
      }
    }
  }
  return pattern;
}

}  // namespace

TaylorHoodSpace::TaylorHoodSpace(Mesh mesh, int quadrature_degree)
    : mesh_(std::move(mesh)), rule_(triangle_rule(quadrature_degree)) {
  const std::size_t nv = mesh_.nodes.size();
  velocity_nodes_ = mesh_.nodes;
  for (const auto& e : mesh_.edges) {
    velocity_nodes_.push_back(0.5 * (mesh_.nodes[static_cast<std::size_t>(e.v[0])] + mesh_.nodes[static_cast<std::size_t>(e.v[1])]));
  }
  element_nodes_.resize(num_elements());
  for (std::size_t t = 0; t < num_elements(); ++t) {
    const auto& tri = mesh_.triangles[t];
    const auto& te = mesh_.triangle_edges[t];
    element_nodes_[t] = {tri[0], tri[1], tri[2], static_cast<int>(nv) + te[0], static_cast<int>(nv) + te[1],
                         static_cast<int>(nv) + te[2]};
  }

  // Dirichlet nodes: vertices and midpoints of every boundary edge.
  std::vector<char> boundary(velocity_nodes_.size(), 0);
  for (std::size_t e = 0; e < mesh_.edges.size(); ++e) {
    const auto& edge = mesh_.edges[e];
    if (edge.tag == BoundaryTag::none) continue;
    boundary[static_cast<std::size_t>(edge.v[0])] = 1;
    boundary[static_cast<std::size_t>(edge.v[1])] = 1;
    boundary[nv + e] = 1;
  }
  free_index_.assign(velocity_nodes_.size(), -1);
  for (std::size_t i = 0; i < velocity_nodes_.size(); ++i) {
    if (!boundary[i]) {
      free_index_[i] = static_cast<int>(free_nodes_.size());
      free_nodes_.push_back(static_cast<int>(i));
    }
  }

  const std::size_t nq = rule_.points.size();
  for (const auto& xi : rule_.points) {
    const Eigen::Vector3d l(1.0 - xi[0] - xi[1], xi[0], xi[1]);
    phi_.push_back(p2_values(l));
    psi_.push_back({l[0], l[1], l[2]});
  }
  grad_bary_.resize(num_elements());
  quad_points_.reserve(num_elements() * nq);
  quad_weights_.reserve(num_elements() * nq);
  dphi_.reserve(num_elements() * nq);
  for (std::size_t t = 0; t < num_elements(); ++t) {
    const auto& tri = mesh_.triangles[t];
    const Point& a = mesh_.nodes[static_cast<std::size_t>(tri[0])];
    const Point& b = mesh_.nodes[static_cast<std::size_t>(tri[1])];
    const Point& c = mesh_.nodes[static_cast<std::size_t>(tri[2])];
    Eigen::Matrix2d F;
    F.col(0) = b - a;
    F.col(1) = c - a;
    const double area = 0.5 * F.determinant();
    if (!(area > 0.0)) throw std::invalid_argument("TaylorHoodSpace: triangles must be counter-clockwise and non-degenerate");
    const Eigen::Matrix2d Finv = F.inverse();
    // grad(xi) and grad(eta) are the rows of F^-1.
    const Eigen::Vector2d gxi = Finv.row(0).transpose();
    const Eigen::Vector2d geta = Finv.row(1).transpose();
    grad_bary_[t] = {-gxi - geta, gxi, geta};
    for (std::size_t q = 0; q < nq; ++q) {
      const auto& xi = rule_.points[q];
      quad_points_.push_back(a + F * xi);
      quad_weights_.push_back(area * rule_.weights[q]);
      dphi_.push_back(p2_gradients(Eigen::Vector3d(1.0 - xi[0] - xi[1], xi[0], xi[1]), grad_bary_[t]));
    }
  }

  const auto np2 = static_cast<Eigen::Index>(velocity_nodes_.size());
  const auto np1 = static_cast<Eigen::Index>(nv);
  p2_pattern_ = make_pattern(element_nodes_, element_nodes_, np2, np2);
  p1p2_pattern_ = make_pattern(mesh_.triangles, element_nodes_, np1, np2);
  p1_pattern_ = make_pattern(mesh_.triangles, mesh_.triangles, np1, np1);
}

Eigen::Vector3d TaylorHoodSpace::barycentric(std::size_t t, const Point& x) const {
  const Point& a = mesh_.nodes[static_cast<std::size_t>(mesh_.triangles[t][0])];
  const auto& g = grad_bary_[t];
  const double l1 = g[1].dot(x - a);
  const double l2 = g[2].dot(x - a);
  return {1.0 - l1 - l2, l1, l2};
}

Eigen::VectorXd TaylorHoodSpace::expand_free(const Eigen::VectorXd& free) const {
  const auto nf = static_cast<Eigen::Index>(num_free_nodes());
  const auto n = static_cast<Eigen::Index>(num_velocity_nodes());
  if (free.size() != 2 * nf) throw std::invalid_argument("expand_free: size mismatch");
  Eigen::VectorXd full = Eigen::VectorXd::Zero(2 * n);
  for (Eigen::Index i = 0; i < nf; ++i) {
    const auto node = static_cast<Eigen::Index>(free_nodes_[static_cast<std::size_t>(i)]);
    full[node] = free[i];
    full[n + node] = free[nf + i];
  }
  return full;
}

Eigen::VectorXd TaylorHoodSpace::restrict_free(const Eigen::VectorXd& full) const {
  const auto nf = static_cast<Eigen::Index>(num_free_nodes());
  const auto n = static_cast<Eigen::Index>(num_velocity_nodes());
  if (full.size() != 2 * n) throw std::invalid_argument("restrict_free: size mismatch");
  Eigen::VectorXd free(2 * nf);
  for (Eigen::Index i = 0; i < nf; ++i) {
    const auto node = static_cast<Eigen::Index>(free_nodes_[static_cast<std::size_t>(i)]);
    free[i] = full[node];
    free[nf + i] = full[n + node];
  }
  return free;
}

Eigen::VectorXd TaylorHoodSpace::assemble_grad_grad(const QuadTensor& c) const {
  if (c.rows() != static_cast<Eigen::Index>(num_quadrature_points())) {
    throw std::invalid_argument("assemble_grad_grad: coefficient must be given at every quadrature point");
  }
  Eigen::VectorXd values = Eigen::VectorXd::Zero(p2_pattern_.nnz());
  const std::size_t nq = points_per_element();
  for (std::size_t t = 0; t < num_elements(); ++t) {
    Eigen::Matrix<double, 6, 6> local = Eigen::Matrix<double, 6, 6>::Zero();
    for (std::size_t q = 0; q < nq; ++q) {
      const std::size_t p = t * nq + q;
      const auto& d = dphi_[p];
      Eigen::Matrix2d C;
      C << c(static_cast<Eigen::Index>(p), 0), c(static_cast<Eigen::Index>(p), 1), c(static_cast<Eigen::Index>(p), 2),
          c(static_cast<Eigen::Index>(p), 3);
      C *= quad_weights_[p];
      for (int j = 0; j < 6; ++j) {
        // C^T grad(phi_col) contracted with grad(phi_row): sum_ij c_ij dcol_i drow_j.
        const Eigen::Vector2d Ct = C.transpose() * d[static_cast<std::size_t>(j)];
        for (int i = 0; i < 6; ++i) local(i, j) += d[static_cast<std::size_t>(i)].dot(Ct);
      }
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) values[p2_pattern_.slot(t, i, j)] += local(i, j);
    }
  }
  return values;
}

Eigen::VectorXd TaylorHoodSpace::assemble_mass(const Eigen::VectorXd& w) const {
  if (w.size() != 0 && w.size() != static_cast<Eigen::Index>(num_quadrature_points())) {
    throw std::invalid_argument("assemble_mass: weight must be given at every quadrature point");
  }
  Eigen::VectorXd values = Eigen::VectorXd::Zero(p2_pattern_.nnz());
  const std::size_t nq = points_per_element();
  for (std::size_t t = 0; t < num_elements(); ++t) {
    for (std::size_t q = 0; q < nq; ++q) {
      const std::size_t p = t * nq + q;
      const double wq = quad_weights_[p] * (w.size() ? w[static_cast<Eigen::Index>(p)] : 1.0);
      const auto& f = phi_[q];
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) values[p2_pattern_.slot(t, i, j)] += wq * f[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(j)];
      }
    }
  }
  return values;
}

std::array<Eigen::VectorXd, 2> TaylorHoodSpace::assemble_divergence(const QuadTensor& c) const {
  if (c.rows() != static_cast<Eigen::Index>(num_quadrature_points())) {
    throw std::invalid_argument("assemble_divergence: coefficient must be given at every quadrature point");
  }
  std::array<Eigen::VectorXd, 2> values = {Eigen::VectorXd::Zero(p1p2_pattern_.nnz()),
                                           Eigen::VectorXd::Zero(p1p2_pattern_.nnz())};
  const std::size_t nq = points_per_element();
  for (std::size_t t = 0; t < num_elements(); ++t) {
    for (std::size_t q = 0; q < nq; ++q) {
      const std::size_t p = t * nq + q;
      const auto& d = dphi_[p];
      const auto& s = psi_[q];
      const auto row = c.row(static_cast<Eigen::Index>(p));
      for (int k = 0; k < 2; ++k) {
        const double ck1 = row[2 * k], ck2 = row[2 * k + 1];
        for (int j = 0; j < 6; ++j) {
          const double div = ck1 * d[static_cast<std::size_t>(j)][0] + ck2 * d[static_cast<std::size_t>(j)][1];
          for (int i = 0; i < 3; ++i) {
            values[static_cast<std::size_t>(k)][p1p2_pattern_.slot(t, i, j)] -= quad_weights_[p] * s[static_cast<std::size_t>(i)] * div;
          }
        }
      }
    }
  }
  return values;
}

Eigen::VectorXd TaylorHoodSpace::apply_grad_grad(const QuadTensor& c, const Eigen::VectorXd& u) const {
  if (c.rows() != static_cast<Eigen::Index>(num_quadrature_points()) || u.size() != static_cast<Eigen::Index>(num_velocity_nodes())) {
    throw std::invalid_argument("apply_grad_grad: size mismatch");
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(u.size());
  const std::size_t nq = points_per_element();
  for (std::size_t t = 0; t < num_elements(); ++t) {
    const auto& nodes = element_nodes_[t];
    for (std::size_t q = 0; q < nq; ++q) {
      const std::size_t p = t * nq + q;
      const auto& d = dphi_[p];
      Eigen::Vector2d g = Eigen::Vector2d::Zero();
      for (std::size_t j = 0; j < 6; ++j) g += u[nodes[j]] * d[j];
      const auto row = c.row(static_cast<Eigen::Index>(p));
      // C^T g, weighted
      const Eigen::Vector2d cg = quad_weights_[p] * Eigen::Vector2d(row[0] * g[0] + row[2] * g[1], row[1] * g[0] + row[3] * g[1]);
      for (std::size_t i = 0; i < 6; ++i) y[nodes[i]] += d[i].dot(cg);
    }
  }
  return y;
}

Eigen::VectorXd TaylorHoodSpace::apply_divergence(const QuadTensor& c, const Eigen::VectorXd& u) const {
  const auto n = static_cast<Eigen::Index>(num_velocity_nodes());
  if (c.rows() != static_cast<Eigen::Index>(num_quadrature_points()) || u.size() != 2 * n) {
    throw std::invalid_argument("apply_divergence: size mismatch");
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_pressure_dofs()));
  const std::size_t nq = points_per_element();
  for (std::size_t t = 0; t < num_elements(); ++t) {
    const auto& nodes = element_nodes_[t];
    const auto& tri = mesh_.triangles[t];
    for (std::size_t q = 0; q < nq; ++q) {
      const std::size_t p = t * nq + q;
      const auto& d = dphi_[p];
      const auto row = c.row(static_cast<Eigen::Index>(p));
      double div = 0.0;
      for (int k = 0; k < 2; ++k) {
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        for (std::size_t j = 0; j < 6; ++j) g += u[k * n + nodes[j]] * d[j];
        div += row[2 * k] * g[0] + row[2 * k + 1] * g[1];
      }
      for (std::size_t i = 0; i < 3; ++i) y[tri[i]] -= quad_weights_[p] * psi_[q][i] * div;
    }
  }
  return y;
}

Eigen::VectorXd TaylorHoodSpace::apply_divergence_transpose(const QuadTensor& c, const Eigen::VectorXd& pr) const {
  const auto n = static_cast<Eigen::Index>(num_velocity_nodes());
  if (c.rows() != static_cast<Eigen::Index>(num_quadrature_points()) || pr.size() != static_cast<Eigen::Index>(num_pressure_dofs())) {
    throw std::invalid_argument("apply_divergence_transpose: size mismatch");
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(2 * n);
  const std::size_t nq = points_per_element();
  for (std::size_t t = 0; t < num_elements(); ++t) {
    const auto& nodes = element_nodes_[t];
    const auto& tri = mesh_.triangles[t];
    for (std::size_t q = 0; q < nq; ++q) {
      const std::size_t p = t * nq + q;
      const auto& d = dphi_[p];
      const auto row = c.row(static_cast<Eigen::Index>(p));
      double pv = 0.0;
      for (std::size_t i = 0; i < 3; ++i) pv += psi_[q][i] * pr[tri[i]];
      pv *= quad_weights_[p];
      for (int k = 0; k < 2; ++k) {
        for (std::size_t j = 0; j < 6; ++j) y[k * n + nodes[j]] -= pv * (row[2 * k] * d[j][0] + row[2 * k + 1] * d[j][1]);
      }
    }
  }
  return y;
}

Eigen::VectorXd TaylorHoodSpace::assemble_load(const Eigen::VectorXd& w) const {
  if (w.size() != static_cast<Eigen::Index>(num_quadrature_points())) {
    throw std::invalid_argument("assemble_load: weight must be given at every quadrature point");
  }
  Eigen::VectorXd load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_velocity_nodes()));
  const std::size_t nq = points_per_element();
  for (std::size_t t = 0; t < num_elements(); ++t) {
    for (std::size_t q = 0; q < nq; ++q) {
      const std::size_t p = t * nq + q;
      for (int i = 0; i < 6; ++i) {
        load[element_nodes_[t][static_cast<std::size_t>(i)]] += quad_weights_[p] * w[static_cast<Eigen::Index>(p)] * phi_[q][static_cast<std::size_t>(i)];
      }
    }
  }
  return load;
}

Eigen::VectorXd TaylorHoodSpace::assemble_pressure_mass() const {
  Eigen::VectorXd values = Eigen::VectorXd::Zero(p1_pattern_.nnz());
  for (std::size_t t = 0; t < num_elements(); ++t) {
    const double area = mesh_.triangle_area(t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) values[p1_pattern_.slot(t, i, j)] += area * (i == j ? 2.0 : 1.0) / 12.0;
    }
  }
  return values;
}

Eigen::VectorXd TaylorHoodSpace::pressure_load() const {
  Eigen::VectorXd load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_pressure_dofs()));
  for (std::size_t t = 0; t < num_elements(); ++t) {
    const double third = mesh_.triangle_area(t) / 3.0;
    for (int v : mesh_.triangles[t]) load[v] += third;
  }
  return load;
}

}  // namespace fsirb
