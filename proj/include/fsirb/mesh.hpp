#pragma once

#include <array>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "fsirb/ffd.hpp"

namespace fsirb {

enum class BoundaryTag { none, inflow, outflow, bottom_wall, flexible_wall };

std::string_view to_string(BoundaryTag tag);
BoundaryTag boundary_tag_from_string(std::string_view name);

struct Edge {
  std::array<int, 2> v{};
  BoundaryTag tag = BoundaryTag::none;
};

/// Conforming triangulation of a ReferenceBox. Triangles are counter-clockwise;
/// local edge k of a triangle joins local vertices k and (k + 1) % 3.
struct Mesh {
  ReferenceBox box;
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Edge> edges;
  std::vector<std::array<int, 3>> triangle_edges;

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_triangles() const { return triangles.size(); }
  double triangle_area(std::size_t t) const;
  double area() const;
};

/// Structured "crossed" triangulation: each of the nx x ny cells is split into
/// four triangles through its center. Grid vertices come first (row-major,
/// x1 fastest), then one center node per cell.
Mesh build_mesh(int nx, int ny, const ReferenceBox& box);

/// Rebuild the edge table and boundary tags from nodes and triangles.
void connect_edges(Mesh& mesh);

/// Text format with sections NODES (id,x1,x2), TRIANGLES (id,v1,v2,v3) and
/// EDGES (id,v1,v2,tag).
void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);

}  // namespace fsirb
