// Homogenized solve, two-scale expansion w_eps = u_0 + eps u_{1,eps}, the
// first-order correction U_1, the F/G diagnostics, and per-realization error
// rows. All fields live on the shared scattering mesh; corrector lookups
// wrap x/eps onto the unit-scale torus.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "helmhom/correctors.hpp"
#include "helmhom/field.hpp"
#include "helmhom/scattering.hpp"

namespace helmhom::expansion {

// Homogenized scattering solve: identity/n0 outside D, a_hom/n_hom inside.
// Pass `reuse` to solve with a prefactorized operator (see
// scattering::helmholtz_operator); the same factorization also serves U_1.
scattering::ScatterSolution solve_u0(std::shared_ptr<const fem::Grid> grid,
                                     const corrector::HomogenizedCoeffs& hom,
                                     double k, double n0,
                                     const scattering::PlaneWave& incident,
                                     const Square& scatterer,
                                     const fem::LinearSolver* reuse = nullptr);

// w_eps(x) = u0(x) + eps * 1_D(x) * sum_i phi_i(x/eps) (d_i u0)(x) with the
// nodally recovered gradient of u0 and the open-set indicator of D (nodes on
// the boundary of D take u0), so w_eps - u0 vanishes identically outside D.
// Nodal P1 interpolant intended for field output; the measured expansion
// error uses the elementwise form below.
fem::FieldP1 two_scale_expand(const scattering::ScatterSolution& u0,
                              const corrector::CorrectorSet& set, double eps);

// ‖u_eps - u0 - eps sum_i phi_i(./eps) d_i u0‖_{H1(D)} with d_i u0 taken
// elementwise (exact P1 gradient, constant per triangle) so the corrector
// term's gradient is sum_i (grad phi_i)(x/eps) d_i u0. Corrector values and
// gradients are sampled from the torus fields at midedge quadrature points.
double two_scale_error(const scattering::ScatterSolution& u_eps,
                       const scattering::ScatterSolution& u0,
                       const corrector::CorrectorSet& set, double eps);

// Volume sources of the U_1 problem.
struct U1Sources {
  std::vector<Vec2c> H;                 // per triangle; zero outside D
  std::vector<Complex> n_mismatch_u0;   // (n_hom - n_eps) u0 per triangle
};

// H_eps := sum_i (a_hom - a_eps)(e_i + grad phi_i(./eps)) d_i u0, evaluated
// elementwise: torus-wrapped corrector gradients, exact P1 gradient of u0.
// `eps_coeffs`/`hom_coeffs` are the per-triangle coefficient sets of the
// heterogeneous and homogenized solves on the same mesh.
U1Sources compute_Heps(const scattering::TriCoefficients& eps_coeffs,
                       const scattering::TriCoefficients& hom_coeffs,
                       const corrector::CorrectorSet& set,
                       const scattering::ScatterSolution& u0, double eps);

// -div(a_hom grad U1) - k^2 n_hom U1 = -div(H) - k^2 (n_hom - n_eps) u0 with
// the homogeneous impedance closure (no incident field).
scattering::ScatterSolution solve_U1(std::shared_ptr<const fem::Grid> grid,
                                     const scattering::TriCoefficients& hom_coeffs,
                                     double k, double n0, const U1Sources& sources,
                                     const Square& scatterer,
                                     const fem::LinearSolver* reuse = nullptr);

// L2(D) norms of
//   F_eps = eps sum_i (a_eps phi_i^eps - sigma_i^eps) grad(d_i u0)
//           + eps k^2 beta^eps u0
//   G_eps = eps sum_i (n_eps phi_i^eps - beta_i^eps) d_i u0
// with grad(d_i u0) from the twice-applied nodal gradient projection.
std::pair<double, double> diagnostics_FG(const scattering::TriCoefficients& eps_coeffs,
                                         const corrector::CorrectorSet& set,
                                         const scattering::ScatterSolution& u0,
                                         double eps, double k);

struct ErrorRow {
  double eps = 0.0;
  int seed = 0;  // realization index within the sweep
  double err_L2_box = 0.0;       // |u_eps - u0|_L2(box)
  double err_H1_ext = 0.0;       // |u_eps - u0|_H1(box \ D)
  double err_H1_D_2scale = 0.0;  // two_scale_error: |u_eps - u0 - eps u1|_H1(D)
  double err_L2_ext_U1 = 0.0;    // |u_eps - u0 - U1|_L2(box \ D^alpha)
  double err_H1_ext_U1 = 0.0;    // |u_eps - u0 - U1|_H1(box \ D^alpha)
  double err_L2_ext_raw = 0.0;   // |u_eps - u0|_L2(box \ D^alpha)   (not serialized)
  double err_H1_ext_raw = 0.0;   // |u_eps - u0|_H1(box \ D^alpha)   (not serialized)
  double diag_F = 0.0;
  double diag_G = 0.0;
  double runtime_s = 0.0;
  bool ok = true;
  std::string failure;
};

// Triangles of the region box \ D^alpha (exterior triangles whose centroid
// is at distance > alpha from D). Throws RegionEmpty when none qualify.
std::vector<int> exterior_alpha_region(const fem::TriMesh& mesh,
                                       const Square& scatterer, double alpha);

ErrorRow error_report(const scattering::ScatterSolution& u_eps,
                      const scattering::ScatterSolution& u0,
                      const corrector::CorrectorSet& set, double eps,
                      const scattering::ScatterSolution& U1, double alpha);

}  // namespace helmhom::expansion
