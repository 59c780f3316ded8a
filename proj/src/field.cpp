#include "helmhom/field.hpp"

#include <algorithm>
#include <cmath>

#include "helmhom/errors.hpp"

namespace helmhom::fem {

namespace {

void check(const FieldP1& f) {
  if (!f.grid) throw Error("field has no grid");
  if (static_cast<int>(f.values.size()) != f.grid->dofs.n_dofs)
    throw Error("field value count does not match dof count");
}

}  // namespace

Complex eval_field(const FieldP1& f, const Vec2& x) {
  check(f);
  const TriMesh& m = f.grid->mesh;
  const auto loc = m.locate(x);
  const auto& tv = m.triangles[loc.tri].v;
  Complex v{0.0, 0.0};
  for (int i = 0; i < 3; ++i)
    v += loc.lambda[i] * f.values[f.grid->dofs.dof(tv[i])];
  return v;
}

Vec2c triangle_gradient(const FieldP1& f, int tri) {
  const TriMesh& m = f.grid->mesh;
  const auto& tv = m.triangles[tri].v;
  const auto g = m.basis_gradients(tri);
  Vec2c grad;
  for (int i = 0; i < 3; ++i) {
    const Complex v = f.values[f.grid->dofs.dof(tv[i])];
    grad.x += v * g[i].x;
    grad.y += v * g[i].y;
  }
  return grad;
}

Vec2c eval_gradient(const FieldP1& f, const Vec2& x) {
  check(f);
  return triangle_gradient(f, f.grid->mesh.locate(x).tri);
}

Complex triangle_mean(const FieldP1& f, int tri) {
  const auto& tv = f.grid->mesh.triangles[tri].v;
  Complex s{0.0, 0.0};
  for (int i = 0; i < 3; ++i) s += f.values[f.grid->dofs.dof(tv[i])];
  return s / 3.0;
}

double norm_triangles(const FieldP1& f, const std::vector<int>& tris, NormKind kind) {
  check(f);
  if (tris.empty()) throw RegionEmpty("norm requested over an empty triangle set");
  const TriMesh& m = f.grid->mesh;
  double l2 = 0.0, h1s = 0.0;
  for (int t : tris) {
    const double A = m.area(t);
    if (kind != NormKind::H1Semi) {
      // Exact integral of |u_h|^2 via the P1 mass matrix (A/12)(2,1;1,2...).
      const auto& tv = m.triangles[t].v;
      Complex u[3];
      for (int i = 0; i < 3; ++i) u[i] = f.values[f.grid->dofs.dof(tv[i])];
      double q = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          q += (i == j ? 2.0 : 1.0) * (u[i] * std::conj(u[j])).real();
      l2 += A / 12.0 * q;
    }
    if (kind != NormKind::L2) h1s += A * triangle_gradient(f, t).norm2();
  }
  switch (kind) {
    case NormKind::L2:
      return std::sqrt(std::max(0.0, l2));
    case NormKind::H1Semi:
      return std::sqrt(std::max(0.0, h1s));
    case NormKind::H1:
      return std::sqrt(std::max(0.0, l2 + h1s));
  }
  throw Error("unreachable norm kind");
}

double norm_region(const FieldP1& f, const std::vector<Region>& tags, NormKind kind) {
  check(f);
  std::vector<int> tris;
  const auto& triangles = f.grid->mesh.triangles;
  for (int t = 0; t < static_cast<int>(triangles.size()); ++t)
    if (std::find(tags.begin(), tags.end(), triangles[t].tag) != tags.end())
      tris.push_back(t);
  if (tris.empty()) throw RegionEmpty("no triangle carries a requested region tag");
  return norm_triangles(f, tris, kind);
}

std::pair<FieldP1, FieldP1> project_gradient(const FieldP1& f) {
  check(f);
  const TriMesh& m = f.grid->mesh;
  const DofMap& dofs = f.grid->dofs;
  std::vector<Complex> gx(dofs.n_dofs, Complex{0.0, 0.0});
  std::vector<Complex> gy(dofs.n_dofs, Complex{0.0, 0.0});
  std::vector<double> lump(dofs.n_dofs, 0.0);
  for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
    const double w = m.area(t) / 3.0;
    const Vec2c g = triangle_gradient(f, t);
    for (int i = 0; i < 3; ++i) {
      const int d = dofs.dof(m.triangles[t].v[i]);
      gx[d] += w * g.x;
      gy[d] += w * g.y;
      lump[d] += w;
    }
  }
  for (int d = 0; d < dofs.n_dofs; ++d) {
    gx[d] /= lump[d];
    gy[d] /= lump[d];
  }
  return {FieldP1{f.grid, std::move(gx)}, FieldP1{f.grid, std::move(gy)}};
}

Complex field_mean(const FieldP1& f) {
  check(f);
  const TriMesh& m = f.grid->mesh;
  Complex acc{0.0, 0.0};
  double area = 0.0;
  for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
    const double A = m.area(t);
    acc += A * triangle_mean(f, t);
    area += A;
  }
  return acc / area;
}

double domain_area(const Grid& g) {
  double area = 0.0;
  for (int t = 0; t < static_cast<int>(g.mesh.triangles.size()); ++t)
    area += g.mesh.area(t);
  return area;
}

}  // namespace helmhom::fem
