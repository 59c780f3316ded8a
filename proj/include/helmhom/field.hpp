// P1 nodal fields on a Grid: point evaluation, elementwise gradients,
// exact elementwise norms over tagged regions, and mass-lumped gradient
// projection back to the nodes.
#pragma once

#include <memory>
#include <vector>

#include "helmhom/geometry.hpp"
#include "helmhom/mesh.hpp"

namespace helmhom::fem {

struct FieldP1 {
  std::shared_ptr<const Grid> grid;
  std::vector<Complex> values;  // one per dof

  static FieldP1 zeros(std::shared_ptr<const Grid> g) {
    return {g, std::vector<Complex>(g->dofs.n_dofs, Complex{0.0, 0.0})};
  }
};

enum class NormKind { L2, H1, H1Semi };

// P1 interpolation at x (torus wrap for periodic grids; OutOfDomain outside
// a box grid).
Complex eval_field(const FieldP1& f, const Vec2& x);

// Elementwise-constant gradient of the triangle containing x.
Vec2c eval_gradient(const FieldP1& f, const Vec2& x);

Vec2c triangle_gradient(const FieldP1& f, int tri);

// Value at the centroid of triangle `tri` (average of its vertex values).
Complex triangle_mean(const FieldP1& f, int tri);

// Norm over the union of triangles with a tag in `tags`; exact quadrature of
// the P1 representation. Throws RegionEmpty when no triangle matches.
double norm_region(const FieldP1& f, const std::vector<Region>& tags, NormKind kind);

// Same, over an explicit triangle list.
double norm_triangles(const FieldP1& f, const std::vector<int>& tris, NormKind kind);

// Mass-lumped L2 projection of the elementwise gradient onto nodal fields
// (d/dx, d/dy). Preserves the area-weighted mean gradient exactly.
std::pair<FieldP1, FieldP1> project_gradient(const FieldP1& f);

// Area-weighted mean of f over the whole grid.
Complex field_mean(const FieldP1& f);

double domain_area(const Grid& g);

}  // namespace helmhom::fem
