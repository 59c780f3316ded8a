// Periodized corrector problems on the torus and Monte-Carlo estimation of
// the homogenized coefficients.
//
// The three cell problems, all regularized by the same massive term (1/T):
//   phi_i :  (1/T) phi_i - div( a (grad phi_i + e_i) ) = 0
//   beta_i:  (1/T) beta_i - lap beta_i = d_i (n - n_mean)
//   sigma :  (1/T) s_i    - lap s_i    = d_1 q_{i2} - d_2 q_{i1}
// where in 2D the skew pair sigma_{i,12} = -sigma_{i,21} reduces to the
// single scalar s_i := sigma_{i,12}.  Every field is mean-subtracted after
// the solve.  The flux is q_i := a(e_i + grad phi_i) - a_ref e_i and the
// commutator Xi_i := (a - a_ref)(e_i + grad phi_i); on the torus the choice
// of the constant a_ref does not change beta or sigma (constant fields are
// orthogonal to gradients of periodic functions), so per-realization
// averages are used and cache entries stay ensemble-independent.
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "helmhom/field.hpp"
#include "helmhom/geometry.hpp"
#include "helmhom/mesh.hpp"
#include "helmhom/microstructure.hpp"

namespace helmhom::corrector {

using fem::FieldP1;

// Per-triangle coefficient snapshot of one microstructure realization on the
// unit-scale torus (centroid sampling, torus metric).
struct TorusCoefficients {
  std::vector<Mat2> a;
  std::vector<double> n;
  std::vector<std::uint8_t> in_disk;  // phase flag (1 = scatterer material)
  double period = 0.0;
};

TorusCoefficients sample_unit_cell(const fem::TriMesh& mesh,
                                   const micro::Microstructure& ms,
                                   const micro::MediumParams& medium);

struct CorrectorConfig {
  double period = 20.0;    // torus side L (must equal the process period)
  double massive_T = 1e7;  // massive regularization parameter T
  double mesh_step = 0.05; // torus mesh step h

  void validate() const;
};

// Per-triangle flux q_i and commutator Xi_i for i = 1, 2.
struct FluxField {
  std::array<std::vector<Vec2>, 2> q;
  std::array<std::vector<Vec2>, 2> xi;
};

// Solutions of the three cell problems for i = 1, 2 (real-valued; stored in
// the complex nodal container with zero imaginary part).
std::array<FieldP1, 2> solve_phi(std::shared_ptr<const fem::Grid> grid,
                                 const TorusCoefficients& coeffs, double T);
std::array<FieldP1, 2> solve_beta(std::shared_ptr<const fem::Grid> grid,
                                  const TorusCoefficients& coeffs, double n_mean,
                                  double T);
std::array<FieldP1, 2> solve_sigma(std::shared_ptr<const fem::Grid> grid,
                                   const FluxField& flux, double T);

FluxField flux_and_commutator(const std::array<FieldP1, 2>& phi,
                              const TorusCoefficients& coeffs, const Mat2& a_ref);

// One realization's corrector fields plus the coefficient snapshot.
struct CorrectorSet {
  std::shared_ptr<const fem::Grid> grid;
  std::array<FieldP1, 2> phi;
  std::array<FieldP1, 2> beta;
  std::array<FieldP1, 2> sigma;  // sigma[i] = sigma_{i,12} = -sigma_{i,21}
  double massive_T = 0.0;
  TorusCoefficients coeffs;
};

// Cell averages extracted from one realization's phi solves.
struct RealizationCoeffs {
  double energy[2][2];    // (1/L^2) int a(e_i+grad phi_i).(e_j+grad phi_j)
  double flux[2][2];      // (1/L^2) int e_i . a(e_j+grad phi_j)
  double phi_mass[2][2];  // (1/(T L^2)) int phi_i phi_j
  double n_mean = 0.0;    // (1/L^2) int n
  double vf = 0.0;        // quadrature volume fraction (scatterer-area share)
};

RealizationCoeffs realization_coefficients(const fem::Grid& grid,
                                           const TorusCoefficients& coeffs,
                                           const std::array<FieldP1, 2>& phi,
                                           double T);

struct HomogenizedCoeffs {
  Mat2 a_hom = Mat2::identity();   // ensemble mean of the energy form
  Mat2 a_flux = Mat2::identity();  // ensemble mean of the flux form
  double n_hom = 1.0;
  int n_realizations = 0;
  double spread_a[2][2] = {{0.0, 0.0}, {0.0, 0.0}};  // sample std per entry
  double spread_n = 0.0;
  double mean_vf = 0.0;
};

// Reduction in realization-index order; hard-asserts the Voigt-Reuss bracket
// for scalar-isotropic constituents.
HomogenizedCoeffs reduce_ensemble(const std::vector<RealizationCoeffs>& per_seed,
                                  const micro::MediumParams& medium);

struct RealizationBundle {
  micro::Microstructure ms;
  CorrectorSet set;
  RealizationCoeffs coeffs;
  bool from_cache = false;
};

// Samples the microstructure for `seed`, solves (or loads from `cache_dir`
// if non-empty) all six corrector fields, and computes the cell averages.
RealizationBundle solve_corrector_realization(const micro::ProcessConfig& process,
                                              const micro::MediumParams& medium,
                                              const CorrectorConfig& cfg,
                                              std::uint64_t seed,
                                              const std::string& cache_dir = {},
                                              std::shared_ptr<const fem::Grid> grid = {});

// Monte-Carlo homogenized coefficients over realizations with seeds
// derive_seed(master_seed, "microstructure", m), m = 0..N-1 (the same stream
// the sweep uses, so ensembles and caches are shared).
HomogenizedCoeffs homogenize_ensemble(const micro::ProcessConfig& process,
                                      const micro::MediumParams& medium,
                                      const CorrectorConfig& cfg, int n_realizations,
                                      std::uint64_t master_seed,
                                      const std::string& cache_dir = {},
                                      std::vector<RealizationCoeffs>* per_seed = nullptr);

// Binary cache of the six nodal arrays ("WHCF" container).
std::string cache_file_name(const micro::ProcessConfig& process,
                            const micro::MediumParams& medium,
                            const CorrectorConfig& cfg, std::uint64_t seed);
void save_corrector_cache(const std::string& path, const CorrectorSet& set,
                          std::uint64_t seed);
// Returns false if the file is absent; throws IoError on a corrupt or
// mismatched file.  On success the six nodal arrays are filled in the order
// phi_1, phi_2, beta_1, beta_2, sigma_1, sigma_2.
bool load_corrector_cache(const std::string& path, const CorrectorConfig& cfg,
                          std::uint64_t seed, std::size_t n_dofs,
                          std::array<std::vector<double>, 6>& fields);

}  // namespace helmhom::corrector
