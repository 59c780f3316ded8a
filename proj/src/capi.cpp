// C ABI shim over the C++ core: opaque handles, thread-local error string,
// status codes matching the CLI exit codes.
#include "helmhom/helmhom.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "helmhom/correctors.hpp"
#include "helmhom/errors.hpp"
#include "helmhom/expansion.hpp"
#include "helmhom/harness.hpp"
#include "helmhom/microstructure.hpp"
#include "helmhom/rng.hpp"
#include "helmhom/scattering.hpp"

namespace hh = helmhom;

struct hh_config {
  hh::harness::SweepConfig cfg;
};

struct hh_homog {
  hh::corrector::HomogenizedCoeffs hom;
  std::vector<hh::corrector::RealizationCoeffs> per_seed;
};

struct hh_sweep_result {
  hh::harness::SweepReport report;
};

namespace {

thread_local std::string g_error;

void set_error(const std::string& msg) { g_error = msg; }

hh_status status_of(const std::exception& e) {
  set_error(e.what());
  if (dynamic_cast<const hh::ConfigError*>(&e)) return HH_BAD_USAGE;
  return HH_ERROR;
}

hh_status usage_error(const char* msg) {
  set_error(msg);
  return HH_BAD_USAGE;
}

double nan_error(const char* msg) {
  set_error(msg);
  return std::nan("");
}

bool index_ok(int row, int col) {
  return row >= 0 && row < 2 && col >= 0 && col < 2;
}

double mat_entry(const hh::Mat2& m, int row, int col) {
  if (row == 0 && col == 0) return m.a11;
  if (row == 1 && col == 1) return m.a22;
  return m.a12;  // symmetric off-diagonal
}

}  // namespace

extern "C" {

const char* hh_version(void) { return "1.0.0"; }

const char* hh_last_error(void) { return g_error.c_str(); }

hh_config* hh_config_create(void) {
  try {
    return new hh_config{hh::harness::default_config()};
  } catch (const std::exception& e) {
    status_of(e);
    return nullptr;
  }
}

hh_config* hh_config_load(const char* path) {
  if (!path) {
    usage_error("hh_config_load: path is NULL");
    return nullptr;
  }
  try {
    return new hh_config{hh::harness::load_config(path)};
  } catch (const std::exception& e) {
    status_of(e);
    return nullptr;
  }
}

hh_status hh_config_set(hh_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value)
    return usage_error("hh_config_set: NULL argument");
  try {
    hh::harness::apply_config_entry(cfg->cfg, key, value);
    return HH_OK;
  } catch (const std::exception& e) {
    return status_of(e);
  }
}

void hh_config_free(hh_config* cfg) { delete cfg; }

uint64_t hh_derive_seed(uint64_t master_seed, const char* stream,
                        uint64_t index) {
  return hh::derive_seed(master_seed, stream ? stream : "", index);
}

hh_status hh_sample(const hh_config* cfg, uint64_t index, const char* out_path) {
  if (!cfg || !out_path) return usage_error("hh_sample: NULL argument");
  try {
    const hh::harness::SweepConfig rc = hh::harness::resolved_config(cfg->cfg);
    const std::uint64_t seed =
        hh::derive_seed(rc.master_seed, "microstructure", index);
    const hh::micro::Microstructure ms = hh::micro::sample_matern2(rc.process, seed);
    hh::micro::save_microstructure(out_path, ms);
    return HH_OK;
  } catch (const std::exception& e) {
    return status_of(e);
  }
}

hh_homog* hh_homogenize(const hh_config* cfg) {
  if (!cfg) {
    usage_error("hh_homogenize: cfg is NULL");
    return nullptr;
  }
  try {
    const hh::harness::SweepConfig rc = hh::harness::resolved_config(cfg->cfg);
    auto out = std::make_unique<hh_homog>();
    out->hom = hh::corrector::homogenize_ensemble(
        rc.process, rc.medium, rc.corrector, rc.n_realizations, rc.master_seed,
        rc.cache_dir, &out->per_seed);
    return out.release();
  } catch (const std::exception& e) {
    status_of(e);
    return nullptr;
  }
}

double hh_homog_a(const hh_homog* h, int row, int col) {
  if (!h) return nan_error("hh_homog_a: handle is NULL");
  if (!index_ok(row, col)) return nan_error("hh_homog_a: index out of range");
  return mat_entry(h->hom.a_hom, row, col);
}

double hh_homog_a_flux(const hh_homog* h, int row, int col) {
  if (!h) return nan_error("hh_homog_a_flux: handle is NULL");
  if (!index_ok(row, col)) return nan_error("hh_homog_a_flux: index out of range");
  return mat_entry(h->hom.a_flux, row, col);
}

double hh_homog_n(const hh_homog* h) {
  if (!h) return nan_error("hh_homog_n: handle is NULL");
  return h->hom.n_hom;
}

double hh_homog_spread_a(const hh_homog* h, int row, int col) {
  if (!h) return nan_error("hh_homog_spread_a: handle is NULL");
  if (!index_ok(row, col))
    return nan_error("hh_homog_spread_a: index out of range");
  return h->hom.spread_a[row][col];
}

double hh_homog_spread_n(const hh_homog* h) {
  if (!h) return nan_error("hh_homog_spread_n: handle is NULL");
  return h->hom.spread_n;
}

int hh_homog_realizations(const hh_homog* h) {
  if (!h) {
    usage_error("hh_homog_realizations: handle is NULL");
    return 0;
  }
  return h->hom.n_realizations;
}

double hh_homog_mean_vf(const hh_homog* h) {
  if (!h) return nan_error("hh_homog_mean_vf: handle is NULL");
  return h->hom.mean_vf;
}

hh_status hh_homog_write_csv(const hh_homog* h, const char* path) {
  if (!h || !path) return usage_error("hh_homog_write_csv: NULL argument");
  try {
    std::string out = "seed,a11,a12,a21,a22,nhom\n";
    char buf[160];
    for (std::size_t m = 0; m < h->per_seed.size(); ++m) {
      const auto& rc = h->per_seed[m];
      std::snprintf(buf, sizeof(buf),
                    "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", m, rc.energy[0][0],
                    rc.energy[0][1], rc.energy[1][0], rc.energy[1][1],
                    rc.n_mean);
      out += buf;
    }
    std::FILE* f = std::fopen(path, "wb");
    if (!f) throw hh::IoError(std::string("cannot write ") + path);
    const std::size_t n = std::fwrite(out.data(), 1, out.size(), f);
    const int rc = std::fclose(f);
    if (n != out.size() || rc != 0)
      throw hh::IoError(std::string("write failed: ") + path);
    return HH_OK;
  } catch (const std::exception& e) {
    return status_of(e);
  }
}

void hh_homog_free(hh_homog* h) { delete h; }

hh_status hh_solve(const hh_config* cfg, const char* mode, double epsilon,
                   uint64_t index, const char* points_path, const char* out_dir) {
  if (!cfg || !mode || !out_dir) return usage_error("hh_solve: NULL argument");
  const bool heterogeneous = std::strcmp(mode, "heterogeneous") == 0;
  if (!heterogeneous && std::strcmp(mode, "homogenized") != 0)
    return usage_error(
        "hh_solve: mode must be 'heterogeneous' or 'homogenized'");
  try {
    const hh::harness::SweepConfig rc = hh::harness::resolved_config(cfg->cfg);
    const double h_target =
        rc.h_fixed > 0.0 ? rc.h_fixed : epsilon / rc.eta;
    if (!(h_target > 0.0))
      throw hh::ConfigError("hh_solve: epsilon must be positive (or set sweep.h_fixed)");
    const int n = hh::harness::choose_box_divisions(rc.box_side,
                                                    rc.scatterer_side, h_target);
    const hh::Square D{hh::Vec2{0.0, 0.0}, rc.scatterer_side};
    auto grid = std::make_shared<const hh::fem::Grid>(
        hh::fem::build_box_mesh(rc.box_side, rc.box_side / n, D));
    const double n0 = rc.medium.n_background;

    hh::scattering::TriCoefficients tri;
    if (heterogeneous) {
      if (!(epsilon > 0.0))
        throw hh::ConfigError("hh_solve: epsilon must be positive");
      const std::uint64_t seed =
          hh::derive_seed(rc.master_seed, "microstructure", index);
      const hh::micro::Microstructure ms =
          hh::micro::sample_matern2(rc.process, seed);
      const hh::micro::CoefficientField field(ms, rc.medium, epsilon, D);
      tri = hh::scattering::sample_coefficients(grid->mesh, field);
    } else {
      std::vector<hh::corrector::RealizationCoeffs> per_seed;
      const hh::corrector::HomogenizedCoeffs hom =
          hh::corrector::homogenize_ensemble(rc.process, rc.medium, rc.corrector,
                                             rc.n_realizations, rc.master_seed,
                                             rc.cache_dir, &per_seed);
      tri = hh::scattering::homogenized_coefficients(grid->mesh, hom.a_hom,
                                                     hom.n_hom, n0);
    }

    const hh::scattering::ScatterSolution sol = hh::scattering::solve_helmholtz(
        grid, tri, rc.wave.k, n0, &rc.wave, D);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    hh::scattering::write_point_values_csv((dir / "field.csv").string(),
                                           grid->mesh.vertices, sol.u.values);
    if (points_path) {
      const std::vector<hh::Vec2> pts = hh::scattering::read_points(points_path);
      const hh::scattering::BoundaryFlux flux = hh::scattering::recover_flux(sol);
      const std::vector<hh::Complex> vals =
          hh::scattering::exterior_eval(sol, flux, pts);
      hh::scattering::write_point_values_csv((dir / "points.csv").string(), pts,
                                             vals);
    }
    return HH_OK;
  } catch (const std::exception& e) {
    return status_of(e);
  }
}

hh_sweep_result* hh_sweep_run(const hh_config* cfg) {
  if (!cfg) {
    usage_error("hh_sweep_run: cfg is NULL");
    return nullptr;
  }
  try {
    auto out = std::make_unique<hh_sweep_result>();
    out->report = hh::harness::run_sweep(cfg->cfg);
    return out.release();
  } catch (const std::exception& e) {
    status_of(e);
    return nullptr;
  }
}

int hh_sweep_rows(const hh_sweep_result* r) {
  if (!r) {
    usage_error("hh_sweep_rows: handle is NULL");
    return 0;
  }
  return static_cast<int>(r->report.rows.size());
}

int hh_sweep_failed_rows(const hh_sweep_result* r) {
  if (!r) {
    usage_error("hh_sweep_failed_rows: handle is NULL");
    return 0;
  }
  return r->report.failed_rows;
}

double hh_sweep_total_runtime(const hh_sweep_result* r) {
  if (!r) return nan_error("hh_sweep_total_runtime: handle is NULL");
  return r->report.total_runtime_s;
}

double hh_sweep_rate(const hh_sweep_result* r, const char* column) {
  if (!r || !column) return nan_error("hh_sweep_rate: NULL argument");
  try {
    for (const auto& [name, model] : hh::harness::rate_columns()) {
      if (name == column)
        return hh::harness::fit_rate(r->report.rows, name, model).exponent;
    }
    return nan_error("hh_sweep_rate: unknown column");
  } catch (const std::exception& e) {
    status_of(e);
    return std::nan("");
  }
}

hh_status hh_sweep_render(const hh_sweep_result* r, const char* out_dir) {
  if (!r || !out_dir) return usage_error("hh_sweep_render: NULL argument");
  try {
    hh::harness::render_report(r->report, out_dir);
    return HH_OK;
  } catch (const std::exception& e) {
    return status_of(e);
  }
}

void hh_sweep_free(hh_sweep_result* r) { delete r; }

hh_status hh_report(const char* errors_csv, const char* out_dir) {
  if (!errors_csv || !out_dir) return usage_error("hh_report: NULL argument");
  try {
    hh::harness::render_from_errors_csv(errors_csv, out_dir);
    return HH_OK;
  } catch (const std::exception& e) {
    return status_of(e);
  }
}

}  // extern "C"
