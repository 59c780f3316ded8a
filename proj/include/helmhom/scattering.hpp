// Heterogeneous Helmholtz scattering on a truncated box: total-field solve
// with a first-order impedance closure replacing the exact radiation
// condition, variationally consistent flux recovery on the scatterer
// boundary, and the boundary-integral representation for exterior points.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "helmhom/assembly.hpp"
#include "helmhom/field.hpp"
#include "helmhom/geometry.hpp"
#include "helmhom/mesh.hpp"
#include "helmhom/microstructure.hpp"

namespace helmhom::scattering {

struct PlaneWave {
  double k = 5.0;                 // free-space wavenumber
  Vec2 direction{1.0, 0.0};       // unit propagation direction
  Complex amplitude{1.0, 0.0};

  // u_inc(x) = amplitude * exp(i k sqrt(n0) d.x); the effective wavenumber
  // in the background medium n0.
  Complex value(const Vec2& x, double n0) const;
  Vec2c gradient(const Vec2& x, double n0) const;
};

// Truncation of the exterior problem. The only implemented kind closes the
// box with the first-order impedance condition
//   grad(u - u_inc).nu = i k sqrt(n0) (u - u_inc)
// on the outer boundary (in place of a DtN/BEM coupling).
struct TruncationClosure {
  enum class Kind { ImpedanceBox };
  Kind kind = Kind::ImpedanceBox;
  double margin_wavelengths = 1.5;  // used when auto-sizing the box
};

// Smallest box side that keeps the prescribed margin (in background
// wavelengths) around the scatterer square.
double min_box_side(double k, double n0, double scatterer_side,
                    double margin_wavelengths);

// Per-triangle coefficient samples (values at centroids).
struct TriCoefficients {
  std::vector<Mat2> a;
  std::vector<double> n;
};

TriCoefficients sample_coefficients(const fem::TriMesh& mesh,
                                    const micro::CoefficientField& field);

// Homogeneous-inside-D coefficients: (a_hom, n_hom) on ScattererD triangles,
// (identity, n0) outside.
TriCoefficients homogenized_coefficients(const fem::TriMesh& mesh, const Mat2& a_hom,
                                         double n_hom, double n0);

struct ScatterSolution {
  fem::FieldP1 u;             // total field (or pure radiating field)
  double k = 0.0;
  double n_background = 1.0;
  PlaneWave incident;
  bool has_incident = true;   // false for source-driven radiating solves
  Square scatterer;
  TriCoefficients coeffs;     // coefficients used in the solve
};

// Assembles (int a grad u grad v - k^2 int n u v - i k sqrt(n0) oint u v)
// against the incident-wave boundary data and solves it. `loads` adds
// interior sources (used by the first-order correction); `incident` may be
// null for a pure radiating solve. If `reuse` is non-null it must hold the
// factorization of this exact operator and is used instead of refactorizing.
ScatterSolution solve_helmholtz(std::shared_ptr<const fem::Grid> grid,
                                const TriCoefficients& coeffs, double k, double n0,
                                const PlaneWave* incident, const Square& scatterer,
                                const fem::VolumeLoads* loads = nullptr,
                                const fem::LinearSolver* reuse = nullptr);

// The assembled operator matrix of solve_helmholtz (for factorization reuse).
fem::ComplexSparseMatrix helmholtz_operator(const fem::Grid& grid,
                                            const TriCoefficients& coeffs,
                                            double k, double n0);

// Closed loop of mesh edges separating ScattererD from Exterior triangles,
// ordered around the loop; normals point out of D.
struct BoundaryLoop {
  struct Edge {
    int v0 = 0, v1 = 0;
    Vec2 midpoint;
    Vec2 normal;
    double length = 0.0;
    int tri_in = 0;   // adjacent ScattererD triangle
    int tri_out = 0;  // adjacent Exterior triangle
  };
  std::vector<Edge> edges;
};

BoundaryLoop scatterer_boundary(const fem::Grid& grid);

// Interior trace and conormal flux a grad(u).nu on the scatterer boundary,
// as edge-midpoint values. The flux is recovered variationally: the flux
// functional at each boundary dof equals the interior residual of the
// discrete bilinear form, then the cyclic vertex/edge system is solved with
// the minimum-norm convention for its even-cycle null mode.
struct BoundaryFlux {
  BoundaryLoop loop;
  std::vector<Complex> trace;  // u at edge midpoints
  std::vector<Complex> p;      // a grad(u).nu at edge midpoints, nu out of D
};

BoundaryFlux recover_flux(const ScatterSolution& sol);

// Boundary-integral representation
//   u(y) = u_inc(y) + sum_e len_e [grad G(m_e, y).nu_e u+(m_e) - p+(m_e) G(m_e, y)]
// with the background wavenumber k sqrt(n0); midpoint rule per edge. Points
// closer than 2h to the scatterer boundary (or inside it) throw
// TooCloseToBoundary.
std::vector<Complex> exterior_eval(const ScatterSolution& sol,
                                   const BoundaryFlux& flux,
                                   const std::vector<Vec2>& points);

// Plain-text observation points: one "x y" pair per line, '#' comments and
// blank lines ignored.
std::vector<Vec2> read_points(const std::string& path);

// CSV "x,y,re,im" with header.
void write_point_values_csv(const std::string& path, const std::vector<Vec2>& pts,
                            const std::vector<Complex>& values);

}  // namespace helmhom::scattering
