#include "helmhom/mesh.hpp"

#include <cmath>
#include <sstream>

#include "helmhom/errors.hpp"

namespace helmhom::fem {

namespace {

// Number of steps in `length`, or -1 if step does not divide it to 1e-9
// relative tolerance.
int exact_steps(double length, double step) {
  const double q = length / step;
  const double r = std::round(q);
  if (r < 0.5 || std::abs(q - r) > 1e-9 * std::max(1.0, q)) return -1;
  return static_cast<int>(r);
}

bool on_grid(double coord, double origin, double step) {
  const double q = (coord - origin) / step;
  return std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, std::abs(q));
}

}  // namespace

double TriMesh::area(int t) const {
  const auto& tv = triangles[t].v;
  const Vec2 e1 = vertices[tv[1]] - vertices[tv[0]];
  const Vec2 e2 = vertices[tv[2]] - vertices[tv[0]];
  return 0.5 * (e1.x * e2.y - e1.y * e2.x);
}

Vec2 TriMesh::centroid(int t) const {
  const auto& tv = triangles[t].v;
  return (vertices[tv[0]] + vertices[tv[1]] + vertices[tv[2]]) / 3.0;
}

std::array<Vec2, 3> TriMesh::basis_gradients(int t) const {
  const auto& tv = triangles[t].v;
  const Vec2 p0 = vertices[tv[0]], p1 = vertices[tv[1]], p2 = vertices[tv[2]];
  const double inv2A = 1.0 / (2.0 * area(t));
  // grad(lambda_i) = perp(edge opposite i) / (2A), oriented inward.
  return {Vec2{(p1.y - p2.y) * inv2A, (p2.x - p1.x) * inv2A},
          Vec2{(p2.y - p0.y) * inv2A, (p0.x - p2.x) * inv2A},
          Vec2{(p0.y - p1.y) * inv2A, (p1.x - p0.x) * inv2A}};
}

TriMesh::Location TriMesh::locate(const Vec2& x) const {
  Vec2 p = x;
  if (periodic) {
    p.x = origin.x + wrap_periodic(p.x - origin.x, extent_x());
    p.y = origin.y + wrap_periodic(p.y - origin.y, extent_y());
  } else {
    const double tol = 1e-12 * std::max(extent_x(), extent_y());
    if (p.x < origin.x - tol || p.x > origin.x + extent_x() + tol ||
        p.y < origin.y - tol || p.y > origin.y + extent_y() + tol) {
      std::ostringstream os;
      os << "point (" << x.x << ", " << x.y << ") outside the meshed domain";
      throw OutOfDomain(os.str());
    }
  }
  const double fx = (p.x - origin.x) / mesh_step;
  const double fy = (p.y - origin.y) / mesh_step;
  int i = std::min(nx - 1, std::max(0, static_cast<int>(std::floor(fx))));
  int j = std::min(ny - 1, std::max(0, static_cast<int>(std::floor(fy))));
  const double lx = std::min(1.0, std::max(0.0, fx - i));
  const double ly = std::min(1.0, std::max(0.0, fy - j));
  // Cell (i,j) splits along the v00->v11 diagonal into lower (ly <= lx) and
  // upper triangles, stored consecutively.
  const int base = 2 * (j * nx + i);
  if (ly <= lx) return {base, {1.0 - lx, lx - ly, ly}};
  return {base + 1, {1.0 - ly, lx, ly - lx}};
}

namespace {

Grid build_structured(double side_x, int n, const Vec2& origin, double step,
                      bool periodic, const Square* scatterer) {
  (void)side_x;
  Grid g;
  TriMesh& m = g.mesh;
  m.mesh_step = step;
  m.origin = origin;
  m.nx = m.ny = n;
  m.periodic = periodic;

  m.vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      m.vertices.push_back({origin.x + i * step, origin.y + j * step});

  m.triangles.reserve(static_cast<std::size_t>(2) * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = m.vertex_id(i, j), v10 = m.vertex_id(i + 1, j);
      const int v01 = m.vertex_id(i, j + 1), v11 = m.vertex_id(i + 1, j + 1);
      Triangle lower{{v00, v10, v11}, Region::Exterior};
      Triangle upper{{v00, v11, v01}, Region::Exterior};
      if (scatterer) {
        for (Triangle* t : {&lower, &upper}) {
          const Vec2 c = (m.vertices[t->v[0]] + m.vertices[t->v[1]] +
                          m.vertices[t->v[2]]) / 3.0;
          if (scatterer->contains(c)) t->tag = Region::ScattererD;
        }
      }
      m.triangles.push_back(lower);
      m.triangles.push_back(upper);
    }
  }

  if (!periodic) {
    for (int i = 0; i < n; ++i) {
      m.boundary_edges.push_back({m.vertex_id(i, 0), m.vertex_id(i + 1, 0),
                                  {0.0, -1.0}, 2 * (0 * n + i)});
      m.boundary_edges.push_back({m.vertex_id(i + 1, n), m.vertex_id(i, n),
                                  {0.0, 1.0}, 2 * ((n - 1) * n + i) + 1});
    }
    for (int j = 0; j < n; ++j) {
      m.boundary_edges.push_back({m.vertex_id(0, j + 1), m.vertex_id(0, j),
                                  {-1.0, 0.0}, 2 * (j * n + 0) + 1});
      m.boundary_edges.push_back({m.vertex_id(n, j), m.vertex_id(n, j + 1),
                                  {1.0, 0.0}, 2 * (j * n + (n - 1))});
    }
  }

  DofMap& d = g.dofs;
  d.periodic = periodic;
  d.vertex_to_dof.resize(m.vertices.size());
  if (periodic) {
    d.n_dofs = n * n;
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i)
        d.vertex_to_dof[m.vertex_id(i, j)] = (j % n) * n + (i % n);
  } else {
    d.n_dofs = static_cast<int>(m.vertices.size());
    for (int v = 0; v < d.n_dofs; ++v) d.vertex_to_dof[v] = v;
  }
  return g;
}

}  // namespace

Grid build_box_mesh(double side, double step, const Square& scatterer) {
  const int n = exact_steps(side, step);
  if (n < 0) {
    std::ostringstream os;
    os << "mesh step " << step << " does not divide box side " << side;
    throw AlignmentError(os.str());
  }
  const Vec2 origin{-0.5 * side, -0.5 * side};
  for (double c : {scatterer.xmin(), scatterer.xmax()})
    if (!on_grid(c, origin.x, step))
      throw AlignmentError("scatterer x-boundary does not lie on grid lines");
  for (double c : {scatterer.ymin(), scatterer.ymax()})
    if (!on_grid(c, origin.y, step))
      throw AlignmentError("scatterer y-boundary does not lie on grid lines");
  if (scatterer.xmin() <= origin.x || scatterer.xmax() >= origin.x + side ||
      scatterer.ymin() <= origin.y || scatterer.ymax() >= origin.y + side)
    throw AlignmentError("scatterer square must lie strictly inside the box");
  return build_structured(side, n, origin, step, /*periodic=*/false, &scatterer);
}

Grid build_torus_mesh(double period, double step) {
  const int n = exact_steps(period, step);
  if (n < 0) {
    std::ostringstream os;
    os << "mesh step " << step << " does not divide torus period " << period;
    throw AlignmentError(os.str());
  }
  return build_structured(period, n, {0.0, 0.0}, step, /*periodic=*/true, nullptr);
}

}  // namespace helmhom::fem
