#include "helmhom/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "helmhom/assembly.hpp"
#include "helmhom/errors.hpp"
#include "helmhom/rng.hpp"

namespace helmhom::harness {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  const char* s = value.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0')
    throw ConfigError("invalid number for " + key + ": '" + value + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  const char* s = value.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (end == s || *end != '\0')
    throw ConfigError("invalid integer for " + key + ": '" + value + "'");
  return static_cast<std::uint64_t>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + value + "'");
}

std::vector<double> parse_double_list(const std::string& key,
                                      const std::string& value) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(value);
  while (std::getline(is, item, ',')) {
    // trim
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos)
      throw ConfigError("empty list entry for " + key);
    out.push_back(parse_double(key, item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const std::map<std::string, double expansion::ErrorRow::*>& column_map() {
  static const std::map<std::string, double expansion::ErrorRow::*> m = {
      {"err_L2_box", &expansion::ErrorRow::err_L2_box},
      {"err_H1_ext", &expansion::ErrorRow::err_H1_ext},
      {"err_H1_D_2scale", &expansion::ErrorRow::err_H1_D_2scale},
      {"err_L2_ext_U1", &expansion::ErrorRow::err_L2_ext_U1},
      {"err_H1_ext_U1", &expansion::ErrorRow::err_H1_ext_U1},
      {"diag_F", &expansion::ErrorRow::diag_F},
      {"diag_G", &expansion::ErrorRow::diag_G},
  };
  return m;
}

constexpr const char* kErrorsHeader =
    "eps,seed,err_L2_box,err_H1_ext,err_H1_D_2scale,err_L2_ext_U1,"
    "err_H1_ext_U1,diag_F,diag_G,runtime_s";

std::string build_decay_svg(const std::vector<expansion::ErrorRow>& rows);

}  // namespace

void SweepConfig::validate() const {
  if (!(medium.a_matrix.min_eigenvalue() > 0.0) ||
      !(medium.a_scatter.min_eigenvalue() > 0.0))
    throw ConfigError("medium a-tensors must be positive definite");
  if (!(medium.n_matrix > 0.0) || !(medium.n_scatter > 0.0) ||
      !(medium.n_background > 0.0))
    throw ConfigError("medium n values must be positive");
  if (target_vf < 0.0) throw ConfigError("process.volume_fraction must be >= 0");
  if (target_vf == 0.0 && !(process.intensity > 0.0))
    throw ConfigError(
        "either process.volume_fraction or process.intensity must be positive");
  if (!(process.inclusion_radius > 0.0))
    throw ConfigError("process.radius must be positive");
  if (!(process.hardcore_distance > 0.0))
    throw ConfigError("process.hardcore must be positive");
  if (process.period != corrector.period)
    throw ConfigError("corrector torus period must equal the process period");
  corrector.validate();
  if (!(wave.k > 0.0)) throw ConfigError("wave.k must be positive");
  if (!(wave.direction.norm() > 0.0))
    throw ConfigError("wave direction must be nonzero");
  if (!(scatterer_side > 0.0) || !(box_side > scatterer_side))
    throw ConfigError("box.side must exceed box.scatterer_side > 0");
  if (epsilon_list.empty()) throw ConfigError("sweep.epsilon_list is empty");
  for (std::size_t i = 0; i < epsilon_list.size(); ++i) {
    if (!(epsilon_list[i] > 0.0))
      throw ConfigError("sweep.epsilon_list entries must be positive");
    if (i > 0 && !(epsilon_list[i] < epsilon_list[i - 1]))
      throw ConfigError("sweep.epsilon_list must be strictly decreasing");
  }
  if (n_realizations < 1)
    throw ConfigError("sweep.n_realizations must be at least 1");
  if (h_fixed < 0.0) throw ConfigError("sweep.h_fixed must be >= 0");
  if (h_fixed == 0.0 && !(eta >= 8.0))
    throw ConfigError("sweep.eta must be >= 8 (non-conforming material grid)");
  if (!(alpha >= 0.0)) throw ConfigError("sweep.alpha must be >= 0");
  if (2.0 * alpha + scatterer_side >= box_side)
    throw ConfigError("sweep.alpha leaves no exterior region inside the box");
}

SweepConfig default_config() { return SweepConfig{}; }

void apply_config_entry(SweepConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "medium.a_matrix")
    cfg.medium.a_matrix = Mat2::scalar(parse_double(key, value));
  else if (key == "medium.a_scatter")
    cfg.medium.a_scatter = Mat2::scalar(parse_double(key, value));
  else if (key == "medium.n_matrix")
    cfg.medium.n_matrix = parse_double(key, value);
  else if (key == "medium.n_scatter")
    cfg.medium.n_scatter = parse_double(key, value);
  else if (key == "medium.n_background")
    cfg.medium.n_background = parse_double(key, value);
  else if (key == "process.volume_fraction")
    cfg.target_vf = parse_double(key, value);
  else if (key == "process.intensity")
    cfg.process.intensity = parse_double(key, value);
  else if (key == "process.hardcore")
    cfg.process.hardcore_distance = parse_double(key, value);
  else if (key == "process.radius")
    cfg.process.inclusion_radius = parse_double(key, value);
  else if (key == "process.period") {
    cfg.process.period = parse_double(key, value);
    cfg.corrector.period = cfg.process.period;
  } else if (key == "corrector.T")
    cfg.corrector.massive_T = parse_double(key, value);
  else if (key == "corrector.h")
    cfg.corrector.mesh_step = parse_double(key, value);
  else if (key == "wave.k")
    cfg.wave.k = parse_double(key, value);
  else if (key == "wave.dir_x")
    cfg.wave.direction.x = parse_double(key, value);
  else if (key == "wave.dir_y")
    cfg.wave.direction.y = parse_double(key, value);
  else if (key == "box.side")
    cfg.box_side = parse_double(key, value);
  else if (key == "box.scatterer_side")
    cfg.scatterer_side = parse_double(key, value);
  else if (key == "sweep.epsilon_list")
    cfg.epsilon_list = parse_double_list(key, value);
  else if (key == "sweep.n_realizations")
    cfg.n_realizations = static_cast<int>(parse_u64(key, value));
  else if (key == "sweep.master_seed")
    cfg.master_seed = parse_u64(key, value);
  else if (key == "sweep.eta")
    cfg.eta = parse_double(key, value);
  else if (key == "sweep.h_fixed")
    cfg.h_fixed = parse_double(key, value);
  else if (key == "sweep.alpha")
    cfg.alpha = parse_double(key, value);
  else if (key == "sweep.record_runtime")
    cfg.record_runtime = parse_bool(key, value);
  else if (key == "cache.dir")
    cfg.cache_dir = value;
  else
    throw ConfigError("unknown config key: " + key);
}

SweepConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  SweepConfig cfg = default_config();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::ostringstream os;
      os << path << ":" << lineno << ": expected 'section.key = value'";
      throw ConfigError(os.str());
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      std::ostringstream os;
      os << path << ":" << lineno << ": empty key or value";
      throw ConfigError(os.str());
    }
    apply_config_entry(cfg, key, value);
  }
  return cfg;
}

double mu_d(int d, double y) {
  switch (d) {
    case 1: return std::sqrt(y);
    case 2: return std::sqrt(std::abs(std::log(2.0 + y)));
    case 3: return 1.0;
    default: throw Error("mu_d: dimension must be 1, 2, or 3");
  }
}

double predictor(const RateModel& model, double eps) {
  if (!(eps > 0.0)) throw Error("predictor: eps must be positive");
  return std::pow(eps, model.eps_pow) *
         std::pow(mu_d(model.d, 1.0 / eps), model.mu_pow);
}

RateModel rate_model_l2() { return RateModel{1.0, 1.0, 2}; }
RateModel rate_model_two_scale() { return RateModel{0.5, 0.5, 2}; }
RateModel rate_model_exterior() { return RateModel{1.5, 1.0, 2}; }

RateFit fit_rate(const std::vector<expansion::ErrorRow>& rows,
                 const std::string& column, const RateModel& model) {
  const auto& cm = column_map();
  const auto it = cm.find(column);
  if (it == cm.end()) throw Error("fit_rate: unknown column " + column);
  const auto member = it->second;

  std::map<double, std::pair<double, int>> by_eps;  // eps -> (sum sq, count)
  for (const expansion::ErrorRow& r : rows) {
    if (!r.ok) continue;
    const double v = r.*member;
    auto& acc = by_eps[r.eps];
    acc.first += v * v;
    acc.second += 1;
  }
  if (by_eps.size() < 3)
    throw InsufficientData("fit_rate needs at least 3 distinct epsilon values");

  std::vector<double> xs, ys;
  for (const auto& [eps, acc] : by_eps) {
    const double rms = std::sqrt(acc.first / acc.second);
    if (!(rms > 0.0) || !std::isfinite(rms))
      throw InsufficientData("fit_rate: RMS error is zero or not finite");
    xs.push_back(std::log(predictor(model, eps)));
    ys.push_back(std::log(rms));
  }

  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0))
    throw InsufficientData("fit_rate: model predictor is constant over the data");

  RateFit fit;
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (fit.intercept + fit.exponent * xs[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

const std::vector<std::pair<std::string, RateModel>>& rate_columns() {
  static const std::vector<std::pair<std::string, RateModel>> cols = {
      {"err_L2_box", rate_model_l2()},
      {"err_H1_ext", rate_model_two_scale()},
      {"err_H1_D_2scale", rate_model_two_scale()},
      {"err_L2_ext_U1", rate_model_exterior()},
      {"err_H1_ext_U1", rate_model_exterior()},
      {"diag_F", rate_model_l2()},
      {"diag_G", rate_model_l2()},
  };
  return cols;
}

int choose_box_divisions(double box_side, double scatterer_side, double h_target) {
  if (!(h_target > 0.0)) throw ConfigError("mesh step target must be positive");
  int n = static_cast<int>(std::ceil(box_side / h_target - 1e-9));
  n = std::max(n, 2);
  for (int tries = 0; tries < 65536; ++tries, ++n) {
    const double cells_d = n * scatterer_side / box_side;
    const double cells_margin = n * (box_side - scatterer_side) / (2.0 * box_side);
    const bool d_ok = std::abs(cells_d - std::round(cells_d)) <=
                      1e-9 * std::max(1.0, cells_d) && std::round(cells_d) >= 1.0;
    const bool m_ok = std::abs(cells_margin - std::round(cells_margin)) <=
                      1e-9 * std::max(1.0, cells_margin) &&
                      std::round(cells_margin) >= 1.0;
    if (d_ok && m_ok) return n;
  }
  throw AlignmentError("no grid division aligns the scatterer with the box");
}

SweepConfig resolved_config(const SweepConfig& cfg_in) {
  SweepConfig cfg = cfg_in;
  cfg.validate();
  if (cfg.target_vf > 0.0)
    cfg.process.intensity = micro::calibrate_intensity(
        cfg.target_vf, cfg.process.inclusion_radius, cfg.process.hardcore_distance);
  cfg.process.validate();
  cfg.wave.direction = cfg.wave.direction / cfg.wave.direction.norm();
  return cfg;
}

SweepReport run_sweep(const SweepConfig& cfg_in) {
  const SweepConfig cfg = resolved_config(cfg_in);

  const auto t_total = Clock::now();
  const double n0 = cfg.medium.n_background;
  const double k = cfg.wave.k;
  const Square D{Vec2{0.0, 0.0}, cfg.scatterer_side};
  const int N = cfg.n_realizations;
  const int NE = static_cast<int>(cfg.epsilon_list.size());

  SweepReport rep;
  rep.config = cfg;
  rep.expected_rows = N * NE;

  // Phase 1: correctors per seed (cached when cache.dir is set).
  auto torus_grid = std::make_shared<const fem::Grid>(
      fem::build_torus_mesh(cfg.corrector.period, cfg.corrector.mesh_step));
  std::vector<std::optional<corrector::RealizationBundle>> bundles(N);
  std::vector<std::string> seed_failure(N);
  for (int m = 0; m < N; ++m) {
    const std::uint64_t seed = derive_seed(cfg.master_seed, "microstructure",
                                           static_cast<std::uint64_t>(m));
    try {
      bundles[m] = corrector::solve_corrector_realization(
          cfg.process, cfg.medium, cfg.corrector, seed, cfg.cache_dir, torus_grid);
    } catch (const std::exception& e) {
      seed_failure[m] = std::string("corrector stage: ") + e.what();
    }
  }

  // Phase 2: shared homogenized ensemble over the successful seeds.
  std::vector<corrector::RealizationCoeffs> per_seed;
  for (int m = 0; m < N; ++m)
    if (bundles[m]) per_seed.push_back(bundles[m]->coeffs);
  if (per_seed.empty()) throw Error("all corrector realizations failed");
  rep.per_seed = per_seed;
  rep.hom = corrector::reduce_ensemble(per_seed, cfg.medium);

  // Phase 3: scattering sweep, epsilon-major so the homogenized operator is
  // factorized once per epsilon (u_0 and every U_1 share it).
  std::vector<std::vector<expansion::ErrorRow>> rows(
      N, std::vector<expansion::ErrorRow>(NE));
  for (int ie = 0; ie < NE; ++ie) {
    const double eps = cfg.epsilon_list[ie];
    for (int m = 0; m < N; ++m) {
      rows[m][ie].eps = eps;
      rows[m][ie].seed = m;
    }

    std::shared_ptr<const fem::Grid> grid;
    scattering::TriCoefficients hom_tri;
    std::optional<fem::LinearSolver> hom_solver;
    std::optional<scattering::ScatterSolution> u0;
    std::string eps_failure;
    try {
      const double h_target = cfg.h_fixed > 0.0 ? cfg.h_fixed : eps / cfg.eta;
      const int n = choose_box_divisions(cfg.box_side, cfg.scatterer_side, h_target);
      grid = std::make_shared<const fem::Grid>(
          fem::build_box_mesh(cfg.box_side, cfg.box_side / n, D));
      hom_tri = scattering::homogenized_coefficients(grid->mesh, rep.hom.a_hom,
                                                     rep.hom.n_hom, n0);
      hom_solver.emplace(scattering::helmholtz_operator(*grid, hom_tri, k, n0));
      u0 = scattering::solve_helmholtz(grid, hom_tri, k, n0, &cfg.wave, D, nullptr,
                                       &*hom_solver);
    } catch (const std::exception& e) {
      eps_failure = std::string("epsilon stage: ") + e.what();
    }

    for (int m = 0; m < N; ++m) {
      expansion::ErrorRow& row = rows[m][ie];
      if (!eps_failure.empty()) {
        row.ok = false;
        row.failure = eps_failure;
        continue;
      }
      if (!bundles[m]) {
        row.ok = false;
        row.failure = seed_failure[m];
        continue;
      }
      const auto t_row = Clock::now();
      try {
        const corrector::RealizationBundle& b = *bundles[m];
        const micro::CoefficientField field(b.ms, cfg.medium, eps, D);
        const scattering::TriCoefficients eps_tri =
            scattering::sample_coefficients(grid->mesh, field);
        const scattering::ScatterSolution u_eps =
            scattering::solve_helmholtz(grid, eps_tri, k, n0, &cfg.wave, D);
        const expansion::U1Sources sources =
            expansion::compute_Heps(eps_tri, hom_tri, b.set, *u0, eps);
        const scattering::ScatterSolution U1 = expansion::solve_U1(
            grid, hom_tri, k, n0, sources, D, &*hom_solver);
        const auto [dF, dG] =
            expansion::diagnostics_FG(eps_tri, b.set, *u0, eps, k);

        expansion::ErrorRow result = expansion::error_report(u_eps, *u0, b.set,
                                                             eps, U1, cfg.alpha);
        result.eps = eps;
        result.seed = m;
        result.diag_F = dF;
        result.diag_G = dG;
        result.runtime_s = seconds_since(t_row);
        row = result;
      } catch (const std::exception& e) {
        row.ok = false;
        row.failure = e.what();
        row.runtime_s = seconds_since(t_row);
      }
    }
  }

  rep.rows.reserve(rep.expected_rows);
  for (int m = 0; m < N; ++m)
    for (int ie = 0; ie < NE; ++ie) {
      if (!rows[m][ie].ok) ++rep.failed_rows;
      rep.rows.push_back(std::move(rows[m][ie]));
    }
  rep.total_runtime_s = seconds_since(t_total);
  return rep;
}

namespace {

void write_errors_csv(const std::string& path,
                      const std::vector<expansion::ErrorRow>& rows,
                      bool record_runtime) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << kErrorsHeader << "\n";
  for (const expansion::ErrorRow& r : rows) {
    if (!r.ok) continue;
    out << fmt17(r.eps) << ',' << r.seed << ',' << fmt17(r.err_L2_box) << ','
        << fmt17(r.err_H1_ext) << ',' << fmt17(r.err_H1_D_2scale) << ','
        << fmt17(r.err_L2_ext_U1) << ',' << fmt17(r.err_H1_ext_U1) << ','
        << fmt17(r.diag_F) << ',' << fmt17(r.diag_G) << ','
        << fmt17(record_runtime ? r.runtime_s : 0.0) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_failures_csv(const std::string& path,
                        const std::vector<expansion::ErrorRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "eps,seed,reason\n";
  for (const expansion::ErrorRow& r : rows) {
    if (r.ok) continue;
    std::string reason = r.failure;
    for (char& c : reason)
      if (c == ',' || c == '\n' || c == '\r') c = ';';
    out << fmt17(r.eps) << ',' << r.seed << ',' << reason << "\n";
  }
}

void write_homog_csv(const std::string& path,
                     const std::vector<corrector::RealizationCoeffs>& per_seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "seed,a11,a12,a21,a22,nhom\n";
  for (std::size_t m = 0; m < per_seed.size(); ++m) {
    const corrector::RealizationCoeffs& rc = per_seed[m];
    out << m << ',' << fmt17(rc.energy[0][0]) << ',' << fmt17(rc.energy[0][1])
        << ',' << fmt17(rc.energy[1][0]) << ',' << fmt17(rc.energy[1][1]) << ','
        << fmt17(rc.n_mean) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_rates_csv(const std::string& path,
                     const std::vector<expansion::ErrorRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "column,exponent,residual\n";
  for (const auto& [name, model] : rate_columns()) {
    double expnt = std::nan(""), resid = std::nan("");
    try {
      const RateFit fit = fit_rate(rows, name, model);
      expnt = fit.exponent;
      resid = fit.residual;
    } catch (const InsufficientData&) {
      // leave nan
    }
    out << name << ',' << fmt17(expnt) << ',' << fmt17(resid) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace

void render_report(const SweepReport& report, const std::string& outdir) {
  if (report.rows.empty()) throw Error("render_report: report has no rows");
  namespace fs = std::filesystem;
  fs::create_directories(outdir);
  const fs::path dir(outdir);
  write_errors_csv((dir / "errors.csv").string(), report.rows,
                   report.config.record_runtime);
  write_homog_csv((dir / "homog.csv").string(), report.per_seed);
  write_rates_csv((dir / "rates.csv").string(), report.rows);
  if (report.failed_rows > 0)
    write_failures_csv((dir / "failures.csv").string(), report.rows);

  std::ofstream svg((dir / "decay.svg").string(), std::ios::binary);
  if (!svg) throw IoError("cannot write decay.svg");
  svg << build_decay_svg(report.rows);
  if (!svg) throw IoError("write failed: decay.svg");
}

std::vector<expansion::ErrorRow> read_errors_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty errors csv: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kErrorsHeader)
    throw IoError("unexpected errors.csv header: " + line);

  std::vector<expansion::ErrorRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string item;
    std::istringstream ls(line);
    while (std::getline(ls, item, ',')) fields.push_back(item);
    if (fields.size() != 10) {
      std::ostringstream os;
      os << path << ":" << lineno << ": expected 10 fields";
      throw IoError(os.str());
    }
    auto num = [&](int i) {
      const char* s = fields[i].c_str();
      char* end = nullptr;
      const double v = std::strtod(s, &end);
      if (end == s || *end != '\0') {
        std::ostringstream os;
        os << path << ":" << lineno << ": bad number '" << fields[i] << "'";
        throw IoError(os.str());
      }
      return v;
    };
    expansion::ErrorRow r;
    r.eps = num(0);
    r.seed = static_cast<int>(num(1));
    r.err_L2_box = num(2);
    r.err_H1_ext = num(3);
    r.err_H1_D_2scale = num(4);
    r.err_L2_ext_U1 = num(5);
    r.err_H1_ext_U1 = num(6);
    r.diag_F = num(7);
    r.diag_G = num(8);
    r.runtime_s = num(9);
    rows.push_back(r);
  }
  return rows;
}

void render_from_errors_csv(const std::string& errors_csv,
                            const std::string& outdir) {
  const std::vector<expansion::ErrorRow> rows = read_errors_csv(errors_csv);
  namespace fs = std::filesystem;
  fs::create_directories(outdir);
  const fs::path dir(outdir);
  write_rates_csv((dir / "rates.csv").string(), rows);
  std::ofstream svg((dir / "decay.svg").string(), std::ios::binary);
  if (!svg) throw IoError("cannot write decay.svg");
  svg << build_decay_svg(rows);
}

namespace {

std::string fmt_svg(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string build_decay_svg(const std::vector<expansion::ErrorRow>& rows) {
  struct Series {
    const char* name;
    const char* color;
    RateModel model;
  };
  const Series series[] = {
      {"err_L2_box", "#1f77b4", rate_model_l2()},
      {"err_H1_D_2scale", "#2ca02c", rate_model_two_scale()},
      {"err_L2_ext_U1", "#d62728", rate_model_exterior()},
      {"err_H1_ext_U1", "#9467bd", rate_model_exterior()},
  };

  const double W = 720.0, H = 540.0, ML = 70.0, MR = 180.0, MT = 30.0, MB = 55.0;

  // Gather data extents (log10).
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  const auto& cm = column_map();
  bool any = false;
  for (const expansion::ErrorRow& r : rows) {
    if (!r.ok || !(r.eps > 0.0)) continue;
    const double lx = std::log10(r.eps);
    xmin = std::min(xmin, lx);
    xmax = std::max(xmax, lx);
    for (const Series& s : series) {
      const double v = r.*(cm.at(s.name));
      if (!(v > 0.0) || !std::isfinite(v)) continue;
      const double ly = std::log10(v);
      ymin = std::min(ymin, ly);
      ymax = std::max(ymax, ly);
      any = true;
    }
  }
  if (!any) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" "
           "height=\"540\"><text x=\"20\" y=\"40\">no data</text></svg>\n";
  }
  if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
  const double px = 0.06 * (xmax - xmin), py = 0.08 * std::max(ymax - ymin, 0.5);
  xmin -= px; xmax += px; ymin -= py; ymax += py;

  auto X = [&](double lx) { return ML + (lx - xmin) / (xmax - xmin) * (W - ML - MR); };
  auto Y = [&](double ly) { return H - MB - (ly - ymin) / (ymax - ymin) * (H - MT - MB); };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"540\" "
         "viewBox=\"0 0 720 540\" font-family=\"Helvetica, Arial, sans-serif\" "
         "font-size=\"12\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"720\" height=\"540\" fill=\"white\"/>\n";
  out += "<rect x=\"" + fmt_svg(ML) + "\" y=\"" + fmt_svg(MT) + "\" width=\"" +
         fmt_svg(W - ML - MR) + "\" height=\"" + fmt_svg(H - MT - MB) +
         "\" fill=\"none\" stroke=\"black\"/>\n";

  // epsilon ticks at the distinct data abscissae.
  std::vector<double> eps_values;
  for (const expansion::ErrorRow& r : rows)
    if (r.ok && r.eps > 0.0) eps_values.push_back(r.eps);
  std::sort(eps_values.begin(), eps_values.end());
  eps_values.erase(std::unique(eps_values.begin(), eps_values.end()),
                   eps_values.end());
  for (double e : eps_values) {
    const double x = X(std::log10(e));
    out += "<line x1=\"" + fmt_svg(x) + "\" y1=\"" + fmt_svg(H - MB) +
           "\" x2=\"" + fmt_svg(x) + "\" y2=\"" + fmt_svg(H - MB + 6) +
           "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt_svg(x) + "\" y=\"" + fmt_svg(H - MB + 20) +
           "\" text-anchor=\"middle\">" + fmt_svg(e) + "</text>\n";
  }
  out += "<text x=\"" + fmt_svg(ML + 0.5 * (W - ML - MR)) + "\" y=\"" +
         fmt_svg(H - 12) + "\" text-anchor=\"middle\">epsilon (log scale)"
         "</text>\n";

  // decade ticks on y.
  for (int k = static_cast<int>(std::floor(ymin)); k <= static_cast<int>(std::ceil(ymax)); ++k) {
    if (k < ymin || k > ymax) continue;
    const double y = Y(k);
    out += "<line x1=\"" + fmt_svg(ML - 6) + "\" y1=\"" + fmt_svg(y) +
           "\" x2=\"" + fmt_svg(ML) + "\" y2=\"" + fmt_svg(y) +
           "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt_svg(ML - 10) + "\" y=\"" + fmt_svg(y + 4) +
           "\" text-anchor=\"end\">1e" + std::to_string(k) + "</text>\n";
  }
  out += "<text x=\"16\" y=\"" + fmt_svg(MT + 0.5 * (H - MT - MB)) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fmt_svg(MT + 0.5 * (H - MT - MB)) + ")\">error (log scale)</text>\n";

  double legend_y = MT + 12.0;
  for (const Series& s : series) {
    const auto member = cm.at(s.name);
    // scatter
    for (const expansion::ErrorRow& r : rows) {
      if (!r.ok) continue;
      const double v = r.*member;
      if (!(v > 0.0) || !std::isfinite(v)) continue;
      out += "<circle cx=\"" + fmt_svg(X(std::log10(r.eps))) + "\" cy=\"" +
             fmt_svg(Y(std::log10(v))) + "\" r=\"3\" fill=\"" + s.color +
             "\" fill-opacity=\"0.45\"/>\n";
    }
    // per-eps RMS polyline
    std::string pts;
    for (double e : eps_values) {
      double ss = 0.0;
      int cnt = 0;
      for (const expansion::ErrorRow& r : rows) {
        if (!r.ok || r.eps != e) continue;
        const double v = r.*member;
        ss += v * v;
        ++cnt;
      }
      if (cnt == 0) continue;
      const double rms = std::sqrt(ss / cnt);
      if (!(rms > 0.0)) continue;
      pts += fmt_svg(X(std::log10(e))) + "," + fmt_svg(Y(std::log10(rms))) + " ";
    }
    if (!pts.empty()) {
      pts.pop_back();
      out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" +
             s.color + "\" stroke-width=\"1.5\"/>\n";
    }
    // fitted line (log-space OLS against the model predictor)
    std::string fit_label;
    try {
      const RateFit fit = fit_rate(rows, s.name, s.model);
      const double e0 = eps_values.front(), e1 = eps_values.back();
      const double y0 = (fit.intercept + fit.exponent * std::log(predictor(s.model, e0))) / std::log(10.0);
      const double y1 = (fit.intercept + fit.exponent * std::log(predictor(s.model, e1))) / std::log(10.0);
      out += "<line x1=\"" + fmt_svg(X(std::log10(e0))) + "\" y1=\"" +
             fmt_svg(Y(y0)) + "\" x2=\"" + fmt_svg(X(std::log10(e1))) +
             "\" y2=\"" + fmt_svg(Y(y1)) + "\" stroke=\"" + s.color +
             "\" stroke-dasharray=\"5 3\"/>\n";
      fit_label = " (x" + fmt_svg(fit.exponent) + ")";
    } catch (const InsufficientData&) {
      fit_label = "";
    }
    // legend
    out += "<rect x=\"" + fmt_svg(W - MR + 14) + "\" y=\"" +
           fmt_svg(legend_y - 9) + "\" width=\"12\" height=\"12\" fill=\"" +
           s.color + "\"/>\n";
    out += "<text x=\"" + fmt_svg(W - MR + 32) + "\" y=\"" + fmt_svg(legend_y + 1) +
           "\">" + s.name + fit_label + "</text>\n";
    legend_y += 20.0;
  }
  out += "</svg>\n";
  return out;
}

}  // namespace

}  // namespace helmhom::harness
