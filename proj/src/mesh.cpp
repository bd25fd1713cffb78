#include "fsirb/mesh.hpp"

#include <cmath>
#include <algorithm>
#include <iomanip>
#include <limits>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fsirb {

std::string_view to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::none: return "none";
    case BoundaryTag::inflow: return "inflow";
    case BoundaryTag::outflow: return "outflow";
    case BoundaryTag::bottom_wall: return "bottom_wall";
    case BoundaryTag::flexible_wall: return "flexible_wall";
  }
  return "none";
}

BoundaryTag boundary_tag_from_string(std::string_view name) {
  for (auto tag : {BoundaryTag::none, BoundaryTag::inflow, BoundaryTag::outflow, BoundaryTag::bottom_wall,
                   BoundaryTag::flexible_wall}) {
    if (to_string(tag) == name) return tag;
  }
  throw std::invalid_argument("unknown boundary tag '" + std::string(name) + "'");
}

double Mesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  const Point a = nodes[static_cast<std::size_t>(tri[1])] - nodes[static_cast<std::size_t>(tri[0])];
  const Point b = nodes[static_cast<std::size_t>(tri[2])] - nodes[static_cast<std::size_t>(tri[0])];
  return 0.5 * (a[0] * b[1] - a[1] * b[0]);
}

double Mesh::area() const {
  double sum = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) sum += triangle_area(t);
  return sum;
}

namespace {

BoundaryTag classify(const ReferenceBox& box, const Point& a, const Point& b) {
  const double tol = 1e-12 * std::max(box.width(), box.height());
  auto on = [tol](double x, double v) { return std::abs(x - v) <= tol; };
  if (on(a[1], box.x2_max) && on(b[1], box.x2_max)) return BoundaryTag::flexible_wall;
  if (on(a[1], box.x2_min) && on(b[1], box.x2_min)) return BoundaryTag::bottom_wall;
  if (on(a[0], box.x1_min) && on(b[0], box.x1_min)) return BoundaryTag::inflow;
  if (on(a[0], box.x1_max) && on(b[0], box.x1_max)) return BoundaryTag::outflow;
  throw std::runtime_error("boundary edge does not lie on a side of the reference box");
}

}  // namespace

void connect_edges(Mesh& mesh) {
  mesh.edges.clear();
  mesh.triangle_edges.assign(mesh.triangles.size(), {-1, -1, -1});
  std::map<std::pair<int, int>, int> index;
  std::vector<int> count;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tri[static_cast<std::size_t>(k)];
      const int b = tri[static_cast<std::size_t>((k + 1) % 3)];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = index.try_emplace({key.first, key.second}, static_cast<int>(mesh.edges.size()));
      if (inserted) {
        mesh.edges.push_back({{key.first, key.second}, BoundaryTag::none});
        count.push_back(0);
      }
      ++count[static_cast<std::size_t>(it->second)];
      mesh.triangle_edges[t][static_cast<std::size_t>(k)] = it->second;
    }
  }
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    if (count[e] > 2) throw std::runtime_error("non-manifold edge in triangulation");
    if (count[e] == 1) {
      auto& edge = mesh.edges[e];
      edge.tag = classify(mesh.box, mesh.nodes[static_cast<std::size_t>(edge.v[0])],
                          mesh.nodes[static_cast<std::size_t>(edge.v[1])]);
    }
  }
}

Mesh build_mesh(int nx, int ny, const ReferenceBox& box) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("build_mesh: subdivisions must be positive");
  box.validate();
  Mesh mesh;
  mesh.box = box;
  const double hx = box.width() / nx;
  const double hy = box.height() / ny;
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      // Pin the far edges exactly so boundary classification is exact.
      const double x = (i == nx) ? box.x1_max : box.x1_min + i * hx;
      const double y = (j == ny) ? box.x2_max : box.x2_min + j * hy;
      mesh.nodes.emplace_back(x, y);
    }
  }
  const int first_center = static_cast<int>(mesh.nodes.size());
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) mesh.nodes.emplace_back(box.x1_min + (i + 0.5) * hx, box.x2_min + (j + 0.5) * hy);
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int c = first_center + j * nx + i;
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
      mesh.triangles.push_back({v00, v10, c});
      mesh.triangles.push_back({v10, v11, c});
      mesh.triangles.push_back({v11, v01, c});
      mesh.triangles.push_back({v01, v00, c});
    }
  }
  connect_edges(mesh);
  return mesh;
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
  os << std::setprecision(17);
  os << "BOX " << mesh.box.x1_min << ' ' << mesh.box.x1_max << ' ' << mesh.box.x2_min << ' ' << mesh.box.x2_max << '\n';
  os << "NODES " << mesh.nodes.size() << '\n';
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) os << i << ',' << mesh.nodes[i][0] << ',' << mesh.nodes[i][1] << '\n';
  os << "TRIANGLES " << mesh.triangles.size() << '\n';
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    os << t << ',' << tri[0] << ',' << tri[1] << ',' << tri[2] << '\n';
  }
  os << "EDGES " << mesh.edges.size() << '\n';
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    const auto& edge = mesh.edges[e];
    os << e << ',' << edge.v[0] << ',' << edge.v[1] << ',' << to_string(edge.tag) << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::size_t read_section(std::istream& is, const std::string& name) {
  std::string word;
  std::size_t count = 0;
  if (!(is >> word >> count) || word != name) throw std::runtime_error("mesh file: expected section " + name);
  is.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  return count;
}

}  // namespace

Mesh read_mesh(std::istream& is) {
  Mesh mesh;
  std::string word;
  if (!(is >> word) || word != "BOX") throw std::runtime_error("mesh file: expected BOX header");
  is >> mesh.box.x1_min >> mesh.box.x1_max >> mesh.box.x2_min >> mesh.box.x2_max;
  mesh.box.validate();
  std::string line;
  const std::size_t nn = read_section(is, "NODES");
  for (std::size_t i = 0; i < nn; ++i) {
    std::getline(is, line);
    const auto f = split_csv(line);
    if (f.size() != 3) throw std::runtime_error("mesh file: malformed node line '" + line + "'");
    mesh.nodes.emplace_back(std::stod(f[1]), std::stod(f[2]));
  }
  const std::size_t nt = read_section(is, "TRIANGLES");
  for (std::size_t t = 0; t < nt; ++t) {
    std::getline(is, line);
    const auto f = split_csv(line);
    if (f.size() != 4) throw std::runtime_error("mesh file: malformed triangle line '" + line + "'");
    mesh.triangles.push_back({std::stoi(f[1]), std::stoi(f[2]), std::stoi(f[3])});
  }
  const std::size_t ne = read_section(is, "EDGES");
  std::vector<Edge> listed;
  for (std::size_t e = 0; e < ne; ++e) {
    std::getline(is, line);
    const auto f = split_csv(line);
    if (f.size() != 4) throw std::runtime_error("mesh file: malformed edge line '" + line + "'");
    listed.push_back({{std::stoi(f[1]), std::stoi(f[2])}, boundary_tag_from_string(f[3])});
  }
  connect_edges(mesh);
  if (listed.size() != mesh.edges.size()) throw std::runtime_error("mesh file: edge table does not match triangles");
  for (std::size_t e = 0; e < listed.size(); ++e) {
    if (listed[e].v != mesh.edges[e].v || listed[e].tag != mesh.edges[e].tag) {
      throw std::runtime_error("mesh file: edge " + std::to_string(e) + " inconsistent with triangles");
    }
  }
  return mesh;
}

}  // namespace fsirb
