#include "helmhom/correctors.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helmhom/assembly.hpp"
#include "helmhom/errors.hpp"
#include "helmhom/rng.hpp"

namespace helmhom::corrector {

namespace {

constexpr std::uint16_t kCacheVersion = 1;

void subtract_mean(FieldP1& f) {
  const Complex m = fem::field_mean(f);
  for (Complex& v : f.values) v -= m;
}

// Assemble only the right-hand side of a divergence load, reusing the
// factorized massive operator held by `solver`.
FieldP1 massive_solve(std::shared_ptr<const fem::Grid> grid,
                      const fem::LinearSolver& solver,
                      const std::vector<Vec2c>& divergence) {
  fem::VolumeLoads loads;
  loads.divergence = divergence;
  auto sys = fem::assemble(*grid, {}, {}, loads, nullptr);
  FieldP1 f{grid, solver.solve(sys.rhs)};
  subtract_mean(f);
  return f;
}

fem::LinearSolver factor_massive_operator(const fem::Grid& grid,
                                          const std::vector<Mat2>& a_tri, double T) {
  const std::size_t ntri = grid.mesh.triangles.size();
  std::vector<Complex> c_tri(ntri, Complex{1.0 / T, 0.0});
  auto sys = fem::assemble(grid, a_tri, c_tri, {}, nullptr);
  return fem::LinearSolver(sys.matrix);
}

// Exact integral of the product of two P1 fields over one triangle:
// int_T f g = (A/12) [ (f1+f2+f3)(g1+g2+g3) + f1 g1 + f2 g2 + f3 g3 ].
double p1_product_integral(double A, const double f[3], const double g[3]) {
  const double sf = f[0] + f[1] + f[2];
  const double sg = g[0] + g[1] + g[2];
  return (A / 12.0) * (sf * sg + f[0] * g[0] + f[1] * g[1] + f[2] * g[2]);
}

void append_hex_double(std::string& s, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a,", v);
  s += buf;
}

void put_u16(std::ostream& out, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>((v >> 8) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

bool get_u16(std::istream& in, std::uint16_t& v) {
  unsigned char b[2];
  if (!in.read(reinterpret_cast<char*>(b), 2)) return false;
  v = static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  return true;
}

bool get_u64(std::istream& in, std::uint64_t& v) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

bool get_f64(std::istream& in, double& v) {
  std::uint64_t u;
  if (!get_u64(in, u)) return false;
  v = std::bit_cast<double>(u);
  return true;
}

}  // namespace

void CorrectorConfig::validate() const {
  if (!(period > 0.0)) throw ConfigError("corrector period must be positive");
  if (!(massive_T > 0.0)) throw ConfigError("massive T must be positive");
  if (!(mesh_step > 0.0) || mesh_step >= period)
    throw ConfigError("corrector mesh step must lie in (0, period)");
}

TorusCoefficients sample_unit_cell(const fem::TriMesh& mesh,
                                   const micro::Microstructure& ms,
                                   const micro::MediumParams& medium) {
  micro::TorusDiskIndex index(ms.centers, ms.period, ms.inclusion_radius);
  TorusCoefficients c;
  const std::size_t ntri = mesh.triangles.size();
  c.a.resize(ntri);
  c.n.resize(ntri);
  c.in_disk.resize(ntri);
  c.period = ms.period;
  for (std::size_t t = 0; t < ntri; ++t) {
    const bool inside = index.contains(mesh.centroid(static_cast<int>(t)));
    c.in_disk[t] = inside ? 1 : 0;
    c.a[t] = inside ? medium.a_scatter : medium.a_matrix;
    c.n[t] = inside ? medium.n_scatter : medium.n_matrix;
  }
  return c;
}

std::array<FieldP1, 2> solve_phi(std::shared_ptr<const fem::Grid> grid,
                                 const TorusCoefficients& coeffs, double T) {
  if (!(T > 0.0)) throw Error("solve_phi: massive T must be positive");
  const std::size_t ntri = grid->mesh.triangles.size();
  if (coeffs.a.size() != ntri) throw Error("solve_phi: coefficient size mismatch");
  for (const Mat2& a : coeffs.a)
    if (!(a.min_eigenvalue() > 0.0))
      throw Error("solve_phi: a-field not elliptic on some element");

  const fem::LinearSolver solver = factor_massive_operator(*grid, coeffs.a, T);
  std::array<FieldP1, 2> phi;
  for (int i = 0; i < 2; ++i) {
    const Vec2 e = i == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    std::vector<Vec2c> F(ntri);
    for (std::size_t t = 0; t < ntri; ++t) F[t] = Vec2c(coeffs.a[t].apply(e));
    phi[i] = massive_solve(grid, solver, F);
  }
  return phi;
}

std::array<FieldP1, 2> solve_beta(std::shared_ptr<const fem::Grid> grid,
                                  const TorusCoefficients& coeffs, double n_mean,
                                  double T) {
  if (!(T > 0.0)) throw Error("solve_beta: massive T must be positive");
  const std::size_t ntri = grid->mesh.triangles.size();
  if (coeffs.n.size() != ntri) throw Error("solve_beta: coefficient size mismatch");

  const std::vector<Mat2> ident(ntri, Mat2::identity());
  const fem::LinearSolver solver = factor_massive_operator(*grid, ident, T);
  std::array<FieldP1, 2> beta;
  for (int i = 0; i < 2; ++i) {
    std::vector<Vec2c> F(ntri);
    for (std::size_t t = 0; t < ntri; ++t) {
      const double m = -(coeffs.n[t] - n_mean);
      F[t] = i == 0 ? Vec2c{Complex{m, 0.0}, Complex{0.0, 0.0}}
                    : Vec2c{Complex{0.0, 0.0}, Complex{m, 0.0}};
    }
    beta[i] = massive_solve(grid, solver, F);
  }
  return beta;
}

std::array<FieldP1, 2> solve_sigma(std::shared_ptr<const fem::Grid> grid,
                                   const FluxField& flux, double T) {
  if (!(T > 0.0)) throw Error("solve_sigma: massive T must be positive");
  const std::size_t ntri = grid->mesh.triangles.size();
  if (flux.q[0].size() != ntri || flux.q[1].size() != ntri)
    throw Error("solve_sigma: flux size mismatch");

  const std::vector<Mat2> ident(ntri, Mat2::identity());
  const fem::LinearSolver solver = factor_massive_operator(*grid, ident, T);
  std::array<FieldP1, 2> sigma;
  for (int i = 0; i < 2; ++i) {
    std::vector<Vec2c> F(ntri);
    for (std::size_t t = 0; t < ntri; ++t)
      F[t] = Vec2c{Complex{flux.q[i][t].y, 0.0}, Complex{-flux.q[i][t].x, 0.0}};
    sigma[i] = massive_solve(grid, solver, F);
  }
  return sigma;
}

FluxField flux_and_commutator(const std::array<FieldP1, 2>& phi,
                              const TorusCoefficients& coeffs, const Mat2& a_ref) {
  const fem::Grid& grid = *phi[0].grid;
  const std::size_t ntri = grid.mesh.triangles.size();
  if (coeffs.a.size() != ntri)
    throw Error("flux_and_commutator: coefficient size mismatch");

  FluxField out;
  for (int i = 0; i < 2; ++i) {
    out.q[i].resize(ntri);
    out.xi[i].resize(ntri);
    const Vec2 e = i == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    const Vec2 ref_e = a_ref.apply(e);
    for (std::size_t t = 0; t < ntri; ++t) {
      const Vec2c gc = fem::triangle_gradient(phi[i], static_cast<int>(t));
      const Vec2 v = e + Vec2{gc.x.real(), gc.y.real()};
      const Vec2 av = coeffs.a[t].apply(v);
      out.q[i][t] = av - ref_e;
      out.xi[i][t] = av - a_ref.apply(v);
    }
  }
  return out;
}

RealizationCoeffs realization_coefficients(const fem::Grid& grid,
                                           const TorusCoefficients& coeffs,
                                           const std::array<FieldP1, 2>& phi,
                                           double T) {
  const fem::TriMesh& m = grid.mesh;
  const std::size_t ntri = m.triangles.size();
  const double cell_area = m.extent_x() * m.extent_y();

  RealizationCoeffs rc{};
  for (std::size_t t = 0; t < ntri; ++t) {
    const int ti = static_cast<int>(t);
    const double A = m.area(ti);
    Vec2 v[2];
    double ph[2][3];
    for (int i = 0; i < 2; ++i) {
      const Vec2c gc = fem::triangle_gradient(phi[i], ti);
      v[i] = Vec2{i == 0 ? 1.0 : 0.0, i == 0 ? 0.0 : 1.0} +
             Vec2{gc.x.real(), gc.y.real()};
      for (int kv = 0; kv < 3; ++kv)
        ph[i][kv] =
            phi[i].values[grid.dofs.dof(m.triangles[t].v[kv])].real();
    }
    for (int i = 0; i < 2; ++i) {
      const Vec2 avi = coeffs.a[t].apply(v[i]);
      for (int j = 0; j < 2; ++j) {
        rc.energy[i][j] += A * avi.dot(v[j]);
        rc.phi_mass[i][j] += p1_product_integral(A, ph[i], ph[j]);
      }
      rc.flux[0][i] += A * avi.x;
      rc.flux[1][i] += A * avi.y;
    }
    rc.n_mean += A * coeffs.n[t];
    if (coeffs.in_disk[t]) rc.vf += A;
  }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      rc.energy[i][j] /= cell_area;
      rc.flux[i][j] /= cell_area;
      rc.phi_mass[i][j] /= T * cell_area;
    }
  rc.n_mean /= cell_area;
  rc.vf /= cell_area;
  return rc;
}

HomogenizedCoeffs reduce_ensemble(const std::vector<RealizationCoeffs>& per_seed,
                                  const micro::MediumParams& medium) {
  if (per_seed.empty()) throw Error("reduce_ensemble: no realizations");
  const int N = static_cast<int>(per_seed.size());

  double mean_e[2][2] = {{0, 0}, {0, 0}};
  double mean_f[2][2] = {{0, 0}, {0, 0}};
  double mean_n = 0.0, mean_vf = 0.0;
  for (const RealizationCoeffs& rc : per_seed) {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        mean_e[i][j] += rc.energy[i][j] / N;
        mean_f[i][j] += rc.flux[i][j] / N;
      }
    mean_n += rc.n_mean / N;
    mean_vf += rc.vf / N;
  }

  HomogenizedCoeffs h;
  h.a_hom = Mat2{mean_e[0][0], 0.5 * (mean_e[0][1] + mean_e[1][0]), mean_e[1][1]};
  h.a_flux = Mat2{mean_f[0][0], 0.5 * (mean_f[0][1] + mean_f[1][0]), mean_f[1][1]};
  h.n_hom = mean_n;
  h.n_realizations = N;
  h.mean_vf = mean_vf;
  if (N > 1) {
    double var_a[2][2] = {{0, 0}, {0, 0}};
    double var_n = 0.0;
    for (const RealizationCoeffs& rc : per_seed) {
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          const double d = rc.energy[i][j] - mean_e[i][j];
          var_a[i][j] += d * d / (N - 1);
        }
      const double dn = rc.n_mean - mean_n;
      var_n += dn * dn / (N - 1);
    }
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) h.spread_a[i][j] = std::sqrt(var_a[i][j]);
    h.spread_n = std::sqrt(var_n);
  }

  // Voigt-Reuss bracket for scalar-isotropic constituents, with the mean
  // empirical (quadrature) volume fraction.
  const Mat2& aM = medium.a_matrix;
  const Mat2& aS = medium.a_scatter;
  const bool scalar_phases = aM.a12 == 0.0 && aS.a12 == 0.0 &&
                             aM.a11 == aM.a22 && aS.a11 == aS.a22;
  if (scalar_phases) {
    const double am = aM.a11, as = aS.a11, vf = mean_vf;
    const double harmonic = 1.0 / ((1.0 - vf) / am + vf / as);
    const double arithmetic = (1.0 - vf) * am + vf * as;
    const double tol = 1e-9 * arithmetic;
    if (h.a_hom.min_eigenvalue() < harmonic - tol ||
        h.a_hom.max_eigenvalue() > arithmetic + tol) {
      std::ostringstream os;
      os << "homogenized tensor violates the Voigt-Reuss bracket ["
         << harmonic << ", " << arithmetic << "]: eigenvalues "
         << h.a_hom.min_eigenvalue() << ", " << h.a_hom.max_eigenvalue();
      throw Error(os.str());
    }
  }
  return h;
}

std::string cache_file_name(const micro::ProcessConfig& process,
                            const micro::MediumParams& medium,
                            const CorrectorConfig& cfg, std::uint64_t seed) {
  std::string key = "whcf1:";
  append_hex_double(key, process.intensity);
  append_hex_double(key, process.hardcore_distance);
  append_hex_double(key, process.inclusion_radius);
  append_hex_double(key, process.period);
  append_hex_double(key, medium.a_matrix.a11);
  append_hex_double(key, medium.a_matrix.a12);
  append_hex_double(key, medium.a_matrix.a22);
  append_hex_double(key, medium.a_scatter.a11);
  append_hex_double(key, medium.a_scatter.a12);
  append_hex_double(key, medium.a_scatter.a22);
  append_hex_double(key, medium.n_matrix);
  append_hex_double(key, medium.n_scatter);
  append_hex_double(key, cfg.period);
  append_hex_double(key, cfg.massive_T);
  append_hex_double(key, cfg.mesh_step);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%" PRIu64, seed);
  key += buf;

  char name[64];
  std::snprintf(name, sizeof(name), "whcf_%016" PRIx64 ".bin", fnv1a64(key));
  return name;
}

void save_corrector_cache(const std::string& path, const CorrectorSet& set,
                          std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open cache file for writing: " + path);
  out.write("WHCF", 4);
  put_u16(out, kCacheVersion);
  const fem::TriMesh& m = set.grid->mesh;
  put_f64(out, m.extent_x());
  put_f64(out, set.massive_T);
  put_f64(out, m.mesh_step);
  put_u64(out, seed);
  const std::uint64_t ndofs = static_cast<std::uint64_t>(set.grid->dofs.n_dofs);
  put_u64(out, ndofs);
  const FieldP1* fields[6] = {&set.phi[0],   &set.phi[1],  &set.beta[0],
                              &set.beta[1],  &set.sigma[0], &set.sigma[1]};
  for (const FieldP1* f : fields)
    for (const Complex& v : f->values) put_f64(out, v.real());
  if (!out) throw IoError("cache write failed: " + path);
}

bool load_corrector_cache(const std::string& path, const CorrectorConfig& cfg,
                          std::uint64_t seed, std::size_t n_dofs,
                          std::array<std::vector<double>, 6>& fields) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;

  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "WHCF", 4) != 0)
    throw IoError("corrupt corrector cache (bad magic): " + path);
  std::uint16_t version;
  if (!get_u16(in, version) || version != kCacheVersion)
    throw IoError("unsupported corrector cache version: " + path);
  double L, T, h;
  std::uint64_t fseed, fndofs;
  if (!get_f64(in, L) || !get_f64(in, T) || !get_f64(in, h) ||
      !get_u64(in, fseed) || !get_u64(in, fndofs))
    throw IoError("truncated corrector cache header: " + path);
  if (L != cfg.period || T != cfg.massive_T || h != cfg.mesh_step ||
      fseed != seed || fndofs != static_cast<std::uint64_t>(n_dofs))
    throw IoError("corrector cache header mismatch: " + path);

  for (auto& arr : fields) {
    arr.resize(n_dofs);
    for (double& v : arr)
      if (!get_f64(in, v)) throw IoError("truncated corrector cache data: " + path);
  }
  return true;
}

RealizationBundle solve_corrector_realization(const micro::ProcessConfig& process,
                                              const micro::MediumParams& medium,
                                              const CorrectorConfig& cfg,
                                              std::uint64_t seed,
                                              const std::string& cache_dir,
                                              std::shared_ptr<const fem::Grid> grid) {
  cfg.validate();
  process.validate();
  if (process.period != cfg.period)
    throw ConfigError("corrector torus period must equal the process period");

  if (!grid) {
    grid = std::make_shared<const fem::Grid>(
        fem::build_torus_mesh(cfg.period, cfg.mesh_step));
  }

  RealizationBundle b;
  b.ms = micro::sample_matern2(process, seed);
  b.set.grid = grid;
  b.set.massive_T = cfg.massive_T;
  b.set.coeffs = sample_unit_cell(grid->mesh, b.ms, medium);

  std::string cache_path;
  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    cache_path = (std::filesystem::path(cache_dir) /
                  cache_file_name(process, medium, cfg, seed))
                     .string();
    std::array<std::vector<double>, 6> arrays;
    if (load_corrector_cache(cache_path, cfg, seed,
                             static_cast<std::size_t>(grid->dofs.n_dofs), arrays)) {
      FieldP1* fields[6] = {&b.set.phi[0],  &b.set.phi[1],   &b.set.beta[0],
                            &b.set.beta[1], &b.set.sigma[0], &b.set.sigma[1]};
      for (int k = 0; k < 6; ++k) {
        fields[k]->grid = grid;
        fields[k]->values.assign(arrays[k].begin(), arrays[k].end());
      }
      b.from_cache = true;
      b.coeffs = realization_coefficients(*grid, b.set.coeffs, b.set.phi,
                                          cfg.massive_T);
      return b;
    }
  }

  b.set.phi = solve_phi(grid, b.set.coeffs, cfg.massive_T);
  b.coeffs =
      realization_coefficients(*grid, b.set.coeffs, b.set.phi, cfg.massive_T);
  const Mat2 a_ref{b.coeffs.energy[0][0],
                   0.5 * (b.coeffs.energy[0][1] + b.coeffs.energy[1][0]),
                   b.coeffs.energy[1][1]};
  const FluxField flux = flux_and_commutator(b.set.phi, b.set.coeffs, a_ref);
  b.set.beta = solve_beta(grid, b.set.coeffs, b.coeffs.n_mean, cfg.massive_T);
  b.set.sigma = solve_sigma(grid, flux, cfg.massive_T);

  if (!cache_path.empty()) save_corrector_cache(cache_path, b.set, seed);
  return b;
}

HomogenizedCoeffs homogenize_ensemble(const micro::ProcessConfig& process,
                                      const micro::MediumParams& medium,
                                      const CorrectorConfig& cfg, int n_realizations,
                                      std::uint64_t master_seed,
                                      const std::string& cache_dir,
                                      std::vector<RealizationCoeffs>* per_seed) {
  if (n_realizations < 1) throw ConfigError("need at least one realization");
  auto grid = std::make_shared<const fem::Grid>(
      fem::build_torus_mesh(cfg.period, cfg.mesh_step));

  std::vector<RealizationCoeffs> coeffs;
  coeffs.reserve(n_realizations);
  for (int m = 0; m < n_realizations; ++m) {
    const std::uint64_t seed = derive_seed(master_seed, "microstructure",
                                           static_cast<std::uint64_t>(m));
    try {
      coeffs.push_back(
          solve_corrector_realization(process, medium, cfg, seed, cache_dir, grid)
              .coeffs);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "realization " << m << " failed: " << e.what();
      throw Error(os.str());
    }
  }
  if (per_seed) *per_seed = coeffs;
  return reduce_ensemble(coeffs, medium);
}

}  // namespace helmhom::corrector
