#include "helmhom/expansion.hpp"

#include <cmath>

#include "helmhom/errors.hpp"

namespace helmhom::expansion {

using fem::FieldP1;
using scattering::ScatterSolution;

scattering::ScatterSolution solve_u0(std::shared_ptr<const fem::Grid> grid,
                                     const corrector::HomogenizedCoeffs& hom,
                                     double k, double n0,
                                     const scattering::PlaneWave& incident,
                                     const Square& scatterer,
                                     const fem::LinearSolver* reuse) {
  if (!(hom.a_hom.min_eigenvalue() > 0.0))
    throw Error("solve_u0: homogenized tensor is not positive definite");
  const scattering::TriCoefficients coeffs =
      scattering::homogenized_coefficients(grid->mesh, hom.a_hom, hom.n_hom, n0);
  return scattering::solve_helmholtz(grid, coeffs, k, n0, &incident, scatterer,
                                     nullptr, reuse);
}

fem::FieldP1 two_scale_expand(const scattering::ScatterSolution& u0,
                              const corrector::CorrectorSet& set, double eps) {
  if (!(eps > 0.0)) throw Error("two_scale_expand: eps must be positive");
  const fem::Grid& grid = *u0.u.grid;
  const fem::TriMesh& m = grid.mesh;
  const auto [du0_dx, du0_dy] = fem::project_gradient(u0.u);

  FieldP1 w = u0.u;
  const double L = set.coeffs.period;
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    const Vec2& x = m.vertices[v];
    if (!u0.scatterer.contains_strict(x)) continue;
    const Vec2 y{wrap_periodic(x.x / eps, L), wrap_periodic(x.y / eps, L)};
    const double phi1 = fem::eval_field(set.phi[0], y).real();
    const double phi2 = fem::eval_field(set.phi[1], y).real();
    const int d = grid.dofs.dof(static_cast<int>(v));
    w.values[d] += eps * (phi1 * du0_dx.values[d] + phi2 * du0_dy.values[d]);
  }
  return w;
}

double two_scale_error(const scattering::ScatterSolution& u_eps,
                       const scattering::ScatterSolution& u0,
                       const corrector::CorrectorSet& set, double eps) {
  if (!(eps > 0.0)) throw Error("two_scale_error: eps must be positive");
  if (u_eps.u.grid != u0.u.grid)
    throw Error("two_scale_error: fields live on different grids");
  const fem::Grid& grid = *u0.u.grid;
  const fem::TriMesh& m = grid.mesh;
  const fem::TriMesh& torus = set.grid->mesh;
  const double L = set.coeffs.period;

  double acc = 0.0;
  std::size_t n_tris = 0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const int ti = static_cast<int>(t);
    if (m.triangles[t].tag != fem::Region::ScattererD) continue;
    ++n_tris;
    const double A = m.area(ti);
    const auto& tv = m.triangles[t].v;

    Complex ue[3], uh[3];
    for (int i = 0; i < 3; ++i) {
      const int d = grid.dofs.dof(tv[i]);
      ue[i] = u_eps.u.values[d];
      uh[i] = u0.u.values[d];
    }
    const Vec2c gue = fem::triangle_gradient(u_eps.u, ti);
    const Vec2c gu0 = fem::triangle_gradient(u0.u, ti);
    const Complex du0[2] = {gu0.x, gu0.y};  // exact P1 gradient, elementwise

    // Midedge (degree-2) quadrature; the corrector factors phi_i(x/eps) and
    // grad phi_i(x/eps) are sampled from the torus fields at each point.
    for (int e = 0; e < 3; ++e) {
      const Vec2& pa = m.vertices[tv[e]];
      const Vec2& pb = m.vertices[tv[(e + 1) % 3]];
      const Vec2 q{(pa.x + pb.x) / 2.0, (pa.y + pb.y) / 2.0};
      const Vec2 y{wrap_periodic(q.x / eps, L), wrap_periodic(q.y / eps, L)};
      const auto loc = torus.locate(y);

      Vec2c gdiff{gue.x - gu0.x, gue.y - gu0.y};
      Complex vdiff = (ue[e] + ue[(e + 1) % 3]) / 2.0 -
                      (uh[e] + uh[(e + 1) % 3]) / 2.0;
      for (int i = 0; i < 2; ++i) {
        double phi = 0.0;
        for (int kv = 0; kv < 3; ++kv)
          phi += loc.lambda[kv] *
                 set.phi[i]
                     .values[set.grid->dofs.dof(torus.triangles[loc.tri].v[kv])]
                     .real();
        const Vec2c gphi = fem::triangle_gradient(set.phi[i], loc.tri);
        gdiff.x -= du0[i] * gphi.x.real();
        gdiff.y -= du0[i] * gphi.y.real();
        vdiff -= eps * phi * du0[i];
      }
      acc += A / 3.0 * (gdiff.norm2() + std::norm(vdiff));
    }
  }
  if (n_tris == 0) throw RegionEmpty("two_scale_error: no scatterer triangles");
  return std::sqrt(acc);
}

U1Sources compute_Heps(const scattering::TriCoefficients& eps_coeffs,
                       const scattering::TriCoefficients& hom_coeffs,
                       const corrector::CorrectorSet& set,
                       const scattering::ScatterSolution& u0, double eps) {
  const fem::Grid& grid = *u0.u.grid;
  const fem::TriMesh& m = grid.mesh;
  const std::size_t ntri = m.triangles.size();
  if (eps_coeffs.a.size() != ntri || hom_coeffs.a.size() != ntri)
    throw Error("compute_Heps: coefficient size mismatch");

  U1Sources s;
  s.H.assign(ntri, Vec2c{});
  s.n_mismatch_u0.assign(ntri, Complex{0.0, 0.0});
  const double L = set.coeffs.period;

  for (std::size_t t = 0; t < ntri; ++t) {
    const int ti = static_cast<int>(t);
    if (m.triangles[t].tag != fem::Region::ScattererD) continue;

    const Vec2 c = m.centroid(ti);
    const Vec2 y{wrap_periodic(c.x / eps, L), wrap_periodic(c.y / eps, L)};
    const auto loc = set.grid->mesh.locate(y);

    const Mat2 mism = hom_coeffs.a[t] - eps_coeffs.a[t];
    const Vec2c du0 = fem::triangle_gradient(u0.u, ti);
    const Complex d_i[2] = {du0.x, du0.y};
    for (int i = 0; i < 2; ++i) {
      const Vec2c gphic = fem::triangle_gradient(set.phi[i], loc.tri);
      const Vec2 dir = (i == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0}) +
                       Vec2{gphic.x.real(), gphic.y.real()};
      s.H[t] = s.H[t] + d_i[i] * Vec2c(mism.apply(dir));
    }
    s.n_mismatch_u0[t] =
        (hom_coeffs.n[t] - eps_coeffs.n[t]) * fem::triangle_mean(u0.u, ti);
  }
  return s;
}

scattering::ScatterSolution solve_U1(std::shared_ptr<const fem::Grid> grid,
                                     const scattering::TriCoefficients& hom_coeffs,
                                     double k, double n0, const U1Sources& sources,
                                     const Square& scatterer,
                                     const fem::LinearSolver* reuse) {
  const std::size_t ntri = grid->mesh.triangles.size();
  if (sources.H.size() != ntri || sources.n_mismatch_u0.size() != ntri)
    throw Error("solve_U1: source size mismatch");

  fem::VolumeLoads loads;
  loads.divergence.resize(ntri);
  loads.scalar.resize(ntri);
  const double k2 = k * k;
  for (std::size_t t = 0; t < ntri; ++t) {
    loads.divergence[t] = Complex{-1.0, 0.0} * sources.H[t];
    loads.scalar[t] = -k2 * sources.n_mismatch_u0[t];
  }
  return scattering::solve_helmholtz(grid, hom_coeffs, k, n0, nullptr, scatterer,
                                     &loads, reuse);
}

std::pair<double, double> diagnostics_FG(const scattering::TriCoefficients& eps_coeffs,
                                         const corrector::CorrectorSet& set,
                                         const scattering::ScatterSolution& u0,
                                         double eps, double k) {
  const fem::Grid& grid = *u0.u.grid;
  const fem::TriMesh& m = grid.mesh;
  const std::size_t ntri = m.triangles.size();
  if (eps_coeffs.a.size() != ntri)
    throw Error("diagnostics_FG: coefficient size mismatch");

  // Nodal first derivatives, then nodal second derivatives.
  const auto [d1, d2] = fem::project_gradient(u0.u);
  const auto [d11, d12] = fem::project_gradient(d1);
  const auto [d21, d22] = fem::project_gradient(d2);

  const double L = set.coeffs.period;
  const double k2 = k * k;
  double sumF = 0.0, sumG = 0.0;
  for (std::size_t t = 0; t < ntri; ++t) {
    const int ti = static_cast<int>(t);
    if (m.triangles[t].tag != fem::Region::ScattererD) continue;
    const double A = m.area(ti);

    const Vec2 c = m.centroid(ti);
    const Vec2 y{wrap_periodic(c.x / eps, L), wrap_periodic(c.y / eps, L)};
    const auto loc = set.grid->mesh.locate(y);
    auto torus_val = [&](const FieldP1& f) {
      double v = 0.0;
      for (int kv = 0; kv < 3; ++kv)
        v += loc.lambda[kv] *
             f.values[f.grid->dofs.dof(f.grid->mesh.triangles[loc.tri].v[kv])].real();
      return v;
    };
    const double phi[2] = {torus_val(set.phi[0]), torus_val(set.phi[1])};
    const double beta[2] = {torus_val(set.beta[0]), torus_val(set.beta[1])};
    const double sig[2] = {torus_val(set.sigma[0]), torus_val(set.sigma[1])};

    // Centroid values of the recovered derivative fields.
    const Complex u0c = fem::triangle_mean(u0.u, ti);
    const Complex g1 = fem::triangle_mean(d1, ti);
    const Complex g2 = fem::triangle_mean(d2, ti);
    const Vec2c hess[2] = {
        Vec2c{fem::triangle_mean(d11, ti), fem::triangle_mean(d12, ti)},
        Vec2c{fem::triangle_mean(d21, ti), fem::triangle_mean(d22, ti)}};

    Vec2c F{};
    Complex G{0.0, 0.0};
    const Mat2& a = eps_coeffs.a[t];
    const double n = eps_coeffs.n[t];
    const Complex grads[2] = {g1, g2};
    for (int i = 0; i < 2; ++i) {
      // (a phi_i - sigma_i) grad(d_i u0); sigma_i v = s_i (v_y, -v_x).
      const Vec2c av = a.apply(hess[i]) * Complex{phi[i], 0.0};
      const Vec2c sv{sig[i] * hess[i].y, -sig[i] * hess[i].x};
      F = F + (av - sv);
      G += (n * phi[i] - beta[i]) * grads[i];
    }
    F = F + k2 * u0c * Vec2c{Complex{beta[0], 0.0}, Complex{beta[1], 0.0}};
    F = eps * F;
    G *= eps;

    sumF += A * F.norm2();
    sumG += A * std::norm(G);
  }
  return {std::sqrt(sumF), std::sqrt(sumG)};
}

std::vector<int> exterior_alpha_region(const fem::TriMesh& mesh,
                                       const Square& scatterer, double alpha) {
  if (!(alpha >= 0.0)) throw Error("alpha must be nonnegative");
  std::vector<int> tris;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    if (mesh.triangles[t].tag != fem::Region::Exterior) continue;
    if (scatterer.distance(mesh.centroid(t)) > alpha) tris.push_back(t);
  }
  if (tris.empty())
    throw RegionEmpty("no exterior triangles remain at distance > alpha from D");
  return tris;
}

ErrorRow error_report(const scattering::ScatterSolution& u_eps,
                      const scattering::ScatterSolution& u0,
                      const corrector::CorrectorSet& set, double eps,
                      const scattering::ScatterSolution& U1, double alpha) {
  const auto grid = u_eps.u.grid;
  const fem::TriMesh& m = grid->mesh;
  if (u0.u.grid != grid || U1.u.grid != grid)
    throw Error("error_report: fields live on different grids");
  const int nd = grid->dofs.n_dofs;

  FieldP1 diff0{grid, std::vector<Complex>(nd)};  // u_eps - u0
  FieldP1 diffU1{grid, std::vector<Complex>(nd)};  // u_eps - u0 - U1
  for (int i = 0; i < nd; ++i) {
    diff0.values[i] = u_eps.u.values[i] - u0.u.values[i];
    diffU1.values[i] = diff0.values[i] - U1.u.values[i];
  }

  ErrorRow row;
  row.err_L2_box = fem::norm_region(
      diff0, {fem::Region::Exterior, fem::Region::ScattererD}, fem::NormKind::L2);
  row.err_H1_ext =
      fem::norm_region(diff0, {fem::Region::Exterior}, fem::NormKind::H1);
  row.err_H1_D_2scale = two_scale_error(u_eps, u0, set, eps);

  const std::vector<int> region = exterior_alpha_region(m, u_eps.scatterer, alpha);
  row.err_L2_ext_U1 = fem::norm_triangles(diffU1, region, fem::NormKind::L2);
  row.err_H1_ext_U1 = fem::norm_triangles(diffU1, region, fem::NormKind::H1);
  row.err_L2_ext_raw = fem::norm_triangles(diff0, region, fem::NormKind::L2);
  row.err_H1_ext_raw = fem::norm_triangles(diff0, region, fem::NormKind::H1);
  return row;
}

}  // namespace helmhom::expansion
