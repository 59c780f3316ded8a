// Structured P1 triangulations: axis-aligned box meshes with a tagged
// scatterer square, and periodic torus meshes with identified degrees of
// freedom. Two triangles per grid cell, fixed diagonal, O(1) point location.
#pragma once

#include <array>
#include <vector>

#include "helmhom/geometry.hpp"

namespace helmhom::fem {

enum class Region : int { Exterior = 0, ScattererD = 1 };

struct Triangle {
  std::array<int, 3> v{};  // vertex indices, counterclockwise
  Region tag = Region::Exterior;
};

struct BoundaryEdge {
  int v0 = 0, v1 = 0;   // vertex indices along the outer boundary
  Vec2 normal;          // outward unit normal
  int tri = 0;          // the unique adjacent triangle
};

struct TriMesh {
  std::vector<Vec2> vertices;
  std::vector<Triangle> triangles;
  std::vector<BoundaryEdge> boundary_edges;  // empty for torus meshes
  double mesh_step = 0.0;

  // Structured-grid metadata (the mesh is always a uniform grid; location
  // and wrapping use it instead of a search structure).
  Vec2 origin;          // lower-left corner
  int nx = 0, ny = 0;   // cells per direction
  bool periodic = false;

  double extent_x() const { return nx * mesh_step; }
  double extent_y() const { return ny * mesh_step; }
  int vertex_id(int i, int j) const { return j * (nx + 1) + i; }

  double area(int t) const;
  Vec2 centroid(int t) const;
  // Gradients of the three barycentric basis functions on triangle t.
  std::array<Vec2, 3> basis_gradients(int t) const;

  // Triangle containing x plus its barycentric coordinates. Wraps x for
  // periodic meshes; throws OutOfDomain outside a box mesh.
  struct Location {
    int tri;
    std::array<double, 3> lambda;
  };
  Location locate(const Vec2& x) const;
};

struct DofMap {
  std::vector<int> vertex_to_dof;
  int n_dofs = 0;
  bool periodic = false;

  int dof(int vertex) const { return vertex_to_dof[vertex]; }
};

struct Grid {
  TriMesh mesh;
  DofMap dofs;
};

// Box [-side/2, side/2]^2 with triangles inside the scatterer square tagged
// ScattererD. Throws AlignmentError unless step divides the side and the
// scatterer boundary lies on grid lines.
Grid build_box_mesh(double side, double step, const Square& scatterer);

// Torus [0, period)^2: geometric (n+1)^2 vertices, n^2 identified dofs,
// no boundary edges. Throws AlignmentError unless step divides the period.
Grid build_torus_mesh(double period, double step);

}  // namespace helmhom::fem
