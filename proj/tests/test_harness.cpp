#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helmhom/correctors.hpp"
#include "helmhom/errors.hpp"
#include "helmhom/harness.hpp"
#include "helmhom/rng.hpp"

using namespace helmhom;
using namespace helmhom::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

void set_column(expansion::ErrorRow& row, const std::string& col, double v) {
  if (col == "err_L2_box") row.err_L2_box = v;
  else if (col == "err_H1_ext") row.err_H1_ext = v;
  else if (col == "err_H1_D_2scale") row.err_H1_D_2scale = v;
  else if (col == "err_L2_ext_U1") row.err_L2_ext_U1 = v;
  else if (col == "err_H1_ext_U1") row.err_H1_ext_U1 = v;
  else if (col == "diag_F") row.diag_F = v;
  else if (col == "diag_G") row.diag_G = v;
  else FAIL("unknown column ", col);
}

// The small sweep configuration used by the integration cases: unit-scale
// torus of period 2 with a coarse corrector mesh, three epsilon values, two
// realizations.
SweepConfig mini_config(const std::string& cache_dir) {
  SweepConfig cfg;
  cfg.target_vf = 0.2;
  cfg.process.inclusion_radius = 0.25;
  cfg.process.hardcore_distance = 0.55;
  cfg.process.period = 2.0;
  cfg.corrector.period = 2.0;
  cfg.corrector.mesh_step = 0.25;
  cfg.corrector.massive_T = 1e5;
  cfg.epsilon_list = {0.5, 0.4, 0.32};
  cfg.n_realizations = 2;
  cfg.master_seed = 424242;
  cfg.eta = 8.0;
  cfg.cache_dir = cache_dir;
  return cfg;
}

}  // namespace

TEST_CASE("seed derivation is deterministic, stream-dependent, and spread out") {
  CHECK(derive_seed(93550214UL, "microstructure", 0) == 3032887546954741099ULL);
  CHECK(derive_seed(7, "a", 3) == derive_seed(7, "a", 3));
  CHECK(derive_seed(7, "a", 3) != derive_seed(7, "b", 3));
  CHECK(derive_seed(7, "a", 3) != derive_seed(8, "a", 3));
  CHECK(derive_seed(7, "a", 3) != derive_seed(7, "a", 4));

  std::set<std::uint64_t> seen;
  for (std::uint64_t m = 0; m < 10; ++m)
    for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(m, "s", i));
  CHECK(seen.size() == 1000);
}

TEST_CASE("mu_d and the three rate models") {
  CHECK(mu_d(1, 4.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(mu_d(2, 98.0) == doctest::Approx(std::sqrt(std::log(100.0))).epsilon(1e-15));
  CHECK(mu_d(3, 1e9) == 1.0);

  const RateModel l2 = rate_model_l2();
  CHECK(l2.eps_pow == 1.0);
  CHECK(l2.mu_pow == 1.0);
  CHECK(l2.d == 2);
  CHECK(predictor(l2, 0.1) ==
        doctest::Approx(0.1 * std::sqrt(std::log(12.0))).epsilon(1e-15));

  const RateModel ts = rate_model_two_scale();
  CHECK(ts.eps_pow == 0.5);
  CHECK(ts.mu_pow == 0.5);
  CHECK(predictor(ts, 0.1) ==
        doctest::Approx(std::sqrt(0.1) * std::pow(std::log(12.0), 0.25)).epsilon(1e-14));

  const RateModel ext = rate_model_exterior();
  CHECK(ext.eps_pow == 1.5);
  CHECK(ext.mu_pow == 1.0);
  CHECK(predictor(ext, 0.2) ==
        doctest::Approx(std::pow(0.2, 1.5) * std::sqrt(std::log(7.0))).epsilon(1e-14));
}

TEST_CASE("rate fit recovers exponents of its own predictor exactly") {
  const RateModel model = rate_model_l2();
  for (const double p : {1.0, 1.3, 0.5}) {
    std::vector<expansion::ErrorRow> rows;
    for (const double eps : {0.2, 0.16, 0.128, 0.1024}) {
      for (int seed = 0; seed < 3; ++seed) {
        expansion::ErrorRow r;
        r.eps = eps;
        r.seed = seed;
        r.ok = true;
        set_column(r, "err_L2_box", 3.7 * std::pow(predictor(model, eps), p));
        rows.push_back(r);
      }
    }
    const RateFit fit = fit_rate(rows, "err_L2_box", model);
    CHECK(fit.exponent == doctest::Approx(p).epsilon(1e-10));
    CHECK(fit.residual < 1e-12);
  }
}

TEST_CASE("rate fit agrees with a hand-rolled least squares") {
  // e = C eps fitted against the exterior model: slope computed directly.
  const RateModel model = rate_model_exterior();
  std::vector<expansion::ErrorRow> rows;
  std::vector<double> xs, ys;
  for (const double eps : {0.25, 0.2, 0.16, 0.128}) {
    expansion::ErrorRow r;
    r.eps = eps;
    r.ok = true;
    set_column(r, "err_H1_ext_U1", 0.8 * eps);
    rows.push_back(r);
    xs.push_back(std::log(predictor(model, eps)));
    ys.push_back(std::log(0.8 * eps));
  }
  double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const RateFit fit = fit_rate(rows, "err_H1_ext_U1", model);
  CHECK(fit.exponent == doctest::Approx(sxy / sxx).epsilon(1e-12));
}

TEST_CASE("rate fit rejects degenerate inputs") {
  const RateModel model = rate_model_l2();
  std::vector<expansion::ErrorRow> rows;
  for (const double eps : {0.2, 0.16}) {
    expansion::ErrorRow r;
    r.eps = eps;
    r.ok = true;
    set_column(r, "err_L2_box", eps);
    rows.push_back(r);
  }
  CHECK_THROWS_AS(fit_rate(rows, "err_L2_box", model), InsufficientData);

  // Failed rows are skipped; all-failed means no data.
  std::vector<expansion::ErrorRow> failed;
  for (const double eps : {0.2, 0.16, 0.128}) {
    expansion::ErrorRow r;
    r.eps = eps;
    r.ok = false;
    set_column(r, "err_L2_box", eps);
    failed.push_back(r);
  }
  CHECK_THROWS_AS(fit_rate(failed, "err_L2_box", model), InsufficientData);

  // A constant predictor cannot be fitted against.
  std::vector<expansion::ErrorRow> rows3;
  for (const double eps : {0.2, 0.16, 0.128}) {
    expansion::ErrorRow r;
    r.eps = eps;
    r.ok = true;
    set_column(r, "err_L2_box", eps);
    rows3.push_back(r);
  }
  CHECK_THROWS_AS(fit_rate(rows3, "err_L2_box", RateModel{0.0, 0.0, 2}), InsufficientData);
}

TEST_CASE("rate_columns lists the seven error columns with models") {
  const auto& cols = rate_columns();
  REQUIRE(cols.size() == 7);
  CHECK(cols[0].first == "err_L2_box");
  CHECK(cols[1].first == "err_H1_ext");
  CHECK(cols[2].first == "err_H1_D_2scale");
  CHECK(cols[3].first == "err_L2_ext_U1");
  CHECK(cols[4].first == "err_H1_ext_U1");
  CHECK(cols[5].first == "diag_F");
  CHECK(cols[6].first == "diag_G");
  CHECK(cols[1].second.eps_pow == 0.5);   // exterior H1 decays like the 2-scale
  CHECK(cols[2].second.eps_pow == 0.5);   // two-scale model
  CHECK(cols[3].second.eps_pow == 1.5);   // exterior model
  CHECK(cols[3].second.mu_pow == 1.0);
  CHECK(cols[5].second.eps_pow == 1.0);   // diagnostics follow the L2 model
}

TEST_CASE("box division chooser aligns the scatterer to the grid") {
  CHECK(choose_box_divisions(4.0, 2.0, 0.2 / 10.0) == 200);
  CHECK(choose_box_divisions(4.0, 2.0, 0.16 / 10.0) == 252);
  CHECK(choose_box_divisions(4.0, 2.0, 0.128 / 10.0) == 316);
  CHECK(choose_box_divisions(4.0, 2.0, 0.1024 / 10.0) == 392);
  CHECK(choose_box_divisions(6.0, 2.0, 6.0 / 192.0) == 192);
  // An incommensurate scatterer/box ratio can never align.
  CHECK_THROWS_AS(choose_box_divisions(4.0, std::sqrt(2.0), 0.1), AlignmentError);
}

TEST_CASE("config files parse, apply, and reject unknown keys") {
  const fs::path dir = fs::temp_directory_path() / "helmhom_harness_cfg";
  fs::create_directories(dir);
  const fs::path good = dir / "good.cfg";
  {
    std::ofstream out(good);
    out << "# scattering configuration\n"
        << "\n"
        << "medium.a_matrix = 2.5\n"
        << "medium.n_scatter = 0.6\n"
        << "process.volume_fraction = 0.2\n"
        << "process.radius = 0.25\n"
        << "process.hardcore = 0.55\n"
        << "process.period = 2\n"
        << "corrector.T = 1e5\n"
        << "corrector.h = 0.25\n"
        << "wave.k = 4.5\n"
        << "wave.dir_x = 3\n"
        << "wave.dir_y = 4\n"
        << "sweep.epsilon_list = 0.5, 0.4, 0.32\n"
        << "sweep.n_realizations = 2\n"
        << "sweep.master_seed = 777\n"
        << "sweep.eta = 8\n"
        << "cache.dir = " << (dir / "cache").string() << "\n";
  }
  const SweepConfig cfg = load_config(good.string());
  CHECK(cfg.medium.a_matrix.a11 == 2.5);
  CHECK(cfg.medium.a_matrix.a12 == 0.0);
  CHECK(cfg.medium.a_matrix.a22 == 2.5);
  CHECK(cfg.medium.n_scatter == 0.6);
  CHECK(cfg.target_vf == 0.2);
  CHECK(cfg.process.period == 2.0);
  CHECK(cfg.corrector.period == 2.0);  // process.period sets both
  CHECK(cfg.corrector.massive_T == 1e5);
  CHECK(cfg.wave.k == 4.5);
  // components are stored raw; resolved_config normalizes once
  CHECK(cfg.wave.direction.x == 3.0);
  CHECK(cfg.wave.direction.y == 4.0);
  REQUIRE(cfg.epsilon_list.size() == 3);
  CHECK(cfg.epsilon_list[1] == 0.4);
  CHECK(cfg.n_realizations == 2);
  CHECK(cfg.master_seed == 777);
  CHECK(!cfg.cache_dir.empty());
  CHECK(cfg.record_runtime == false);

  const fs::path bad_key = dir / "bad_key.cfg";
  {
    std::ofstream out(bad_key);
    out << "wave.k = 5\nbogus.key = 1\n";
  }
  CHECK_THROWS_WITH_AS(load_config(bad_key.string()),
                       doctest::Contains("bogus.key"), ConfigError);

  const fs::path bad_val = dir / "bad_val.cfg";
  {
    std::ofstream out(bad_val);
    out << "wave.k = not_a_number\n";
  }
  CHECK_THROWS_AS(load_config(bad_val.string()), ConfigError);

  const fs::path no_eq = dir / "no_eq.cfg";
  {
    std::ofstream out(no_eq);
    out << "wave.k 5\n";
  }
  CHECK_THROWS_AS(load_config(no_eq.string()), ConfigError);

  CHECK_THROWS_AS(load_config((dir / "missing.cfg").string()), IoError);

  SweepConfig direct = default_config();
  apply_config_entry(direct, "sweep.record_runtime", "true");
  CHECK(direct.record_runtime == true);
  apply_config_entry(direct, "sweep.record_runtime", "0");
  CHECK(direct.record_runtime == false);
  CHECK_THROWS_AS(apply_config_entry(direct, "sweep.record_runtime", "maybe"),
                  ConfigError);
  apply_config_entry(direct, "wave.dir_x", "0");
  apply_config_entry(direct, "wave.dir_y", "0");
  CHECK_THROWS_AS(direct.validate(), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("config validation rejects inconsistent setups") {
  CHECK_NOTHROW(default_config().validate());

  SweepConfig c = default_config();
  c.epsilon_list = {0.2, 0.2, 0.1};  // not strictly decreasing
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = default_config();
  c.n_realizations = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = default_config();
  c.eta = 7.0;  // h = eps/eta policy requires eta >= 8
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.h_fixed = 0.05;  // explicit step lifts the eta constraint
  CHECK_NOTHROW(c.validate());

  c = default_config();
  c.alpha = 1.0;  // 2 alpha + D = box: no exterior-alpha region left
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = default_config();
  c.corrector.period = 10.0;  // must equal process.period
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = default_config();
  c.wave.k = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = default_config();
  c.scatterer_side = 5.0;  // scatterer larger than the box
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("resolved_config calibrates the process intensity") {
  SweepConfig cfg = mini_config("");
  const SweepConfig rc = resolved_config(cfg);
  CHECK(rc.process.intensity ==
        micro::calibrate_intensity(0.2, 0.25, 0.55));
  CHECK(rc.process.intensity > 0.0);

  // Explicit intensity is kept when target_vf is zero.
  cfg.target_vf = 0.0;
  cfg.process.intensity = 1.25;
  CHECK(resolved_config(cfg).process.intensity == 1.25);

  // Infeasible volume fraction propagates the calibration error.
  cfg.target_vf = 0.21;  // saturation cap r^2/delta^2 ~ 0.2066
  CHECK_THROWS_AS(resolved_config(cfg), UnreachableFraction);

  // Raw direction components are normalized exactly once.
  cfg.target_vf = 0.2;
  cfg.wave.direction = Vec2{3.0, 4.0};
  const SweepConfig rc2 = resolved_config(cfg);
  CHECK(rc2.wave.direction.x == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(rc2.wave.direction.y == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("sweep + render: schemas, determinism, read-back, failures") {
  const fs::path base = fs::temp_directory_path() / "helmhom_harness_sweep";
  fs::remove_all(base);
  fs::create_directories(base / "cache");

  SweepConfig cfg = mini_config((base / "cache").string());
  const SweepReport rep = run_sweep(cfg);
  CHECK(rep.complete());
  CHECK(rep.expected_rows == 6);
  REQUIRE(rep.rows.size() == 6);
  CHECK(rep.failed_rows == 0);
  CHECK(rep.per_seed.size() == 2);
  CHECK(rep.config.process.intensity > 0.0);
  CHECK(rep.total_runtime_s > 0.0);
  // rows come back seed-major with eps in list order
  CHECK(rep.rows[0].seed == 0);
  CHECK(rep.rows[0].eps == 0.5);
  CHECK(rep.rows[1].eps == 0.4);
  CHECK(rep.rows[3].seed == 1);

  const fs::path out_a = base / "a";
  render_report(rep, out_a.string());
  CHECK(first_line(out_a / "errors.csv") ==
        "eps,seed,err_L2_box,err_H1_ext,err_H1_D_2scale,err_L2_ext_U1,"
        "err_H1_ext_U1,diag_F,diag_G,runtime_s");
  CHECK(first_line(out_a / "homog.csv") == "seed,a11,a12,a21,a22,nhom");
  CHECK(first_line(out_a / "rates.csv") == "column,exponent,residual");
  CHECK(!fs::exists(out_a / "failures.csv"));

  // errors.csv: header + 6 rows, runtime column frozen at 0 by default
  {
    const std::string text = slurp(out_a / "errors.csv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 7);
    CHECK(text.find("\r") == std::string::npos);
    std::istringstream ss(text);
    std::string line;
    std::getline(ss, line);
    int data_lines = 0;
    while (std::getline(ss, line)) {
      ++data_lines;
      CHECK(line.substr(line.rfind(',') + 1) == "0");
    }
    CHECK(data_lines == 6);
  }

  // a second sweep with the identical config renders byte-identical CSVs
  const SweepReport rep2 = run_sweep(cfg);
  const fs::path out_b = base / "b";
  render_report(rep2, out_b.string());
  CHECK(slurp(out_a / "errors.csv") == slurp(out_b / "errors.csv"));
  CHECK(slurp(out_a / "homog.csv") == slurp(out_b / "homog.csv"));
  CHECK(slurp(out_a / "rates.csv") == slurp(out_b / "rates.csv"));
  CHECK(slurp(out_a / "decay.svg") == slurp(out_b / "decay.svg"));

  // the SVG is one well-formed root with plotted series
  {
    const std::string svg = slurp(out_a / "decay.svg");
    size_t opens = 0, pos = 0;
    while ((pos = svg.find("<svg", pos)) != std::string::npos) {
      ++opens;
      pos += 4;
    }
    CHECK(opens == 1);
    CHECK(svg.find("</svg>") == svg.size() - 7);  // file ends with </svg>\n
    CHECK(svg.find("err_L2_box") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
  }

  // read-back equals the in-memory rows bit-for-bit
  const auto read_rows = read_errors_csv((out_a / "errors.csv").string());
  REQUIRE(read_rows.size() == rep.rows.size());
  for (size_t i = 0; i < read_rows.size(); ++i) {
    CHECK(read_rows[i].eps == rep.rows[i].eps);
    CHECK(read_rows[i].seed == rep.rows[i].seed);
    CHECK(read_rows[i].err_L2_box == rep.rows[i].err_L2_box);
    CHECK(read_rows[i].err_H1_ext == rep.rows[i].err_H1_ext);
    CHECK(read_rows[i].err_H1_D_2scale == rep.rows[i].err_H1_D_2scale);
    CHECK(read_rows[i].err_L2_ext_U1 == rep.rows[i].err_L2_ext_U1);
    CHECK(read_rows[i].err_H1_ext_U1 == rep.rows[i].err_H1_ext_U1);
    CHECK(read_rows[i].diag_F == rep.rows[i].diag_F);
    CHECK(read_rows[i].diag_G == rep.rows[i].diag_G);
  }

  // re-rendering rates from the CSV reproduces rates.csv exactly
  const fs::path out_c = base / "c";
  render_from_errors_csv((out_a / "errors.csv").string(), out_c.string());
  CHECK(slurp(out_c / "rates.csv") == slurp(out_a / "rates.csv"));
  CHECK(fs::exists(out_c / "decay.svg"));

  // header mismatch and malformed rows are I/O errors
  {
    const fs::path broken = base / "broken.csv";
    std::ofstream out(broken, std::ios::binary);
    out << "eps,seed,bogus\n";
    out.close();
    CHECK_THROWS_AS(read_errors_csv(broken.string()), IoError);
    std::ofstream out2(broken, std::ios::binary);
    out2 << first_line(out_a / "errors.csv") << "\n0.5,0,1,2,3\n";
    out2.close();
    CHECK_THROWS_AS(read_errors_csv(broken.string()), IoError);
  }

  // an empty errors.csv still renders: nan rates and a "no data" plot
  {
    const fs::path empty_csv = base / "empty.csv";
    std::ofstream out(empty_csv, std::ios::binary);
    out << first_line(out_a / "errors.csv") << "\n";
    out.close();
    const fs::path out_d = base / "d";
    render_from_errors_csv(empty_csv.string(), out_d.string());
    CHECK(slurp(out_d / "rates.csv").find("nan") != std::string::npos);
    CHECK(slurp(out_d / "decay.svg").find("no data") != std::string::npos);
  }

  // runtime recording: the runtime_s column stops being all-zero
  {
    SweepConfig timed = cfg;
    timed.record_runtime = true;
    const SweepReport rep_t = run_sweep(timed);
    const fs::path out_t = base / "t";
    render_report(rep_t, out_t.string());
    const std::string text = slurp(out_t / "errors.csv");
    std::istringstream ss(text);
    std::string line;
    std::getline(ss, line);
    bool any_nonzero = false;
    while (std::getline(ss, line))
      any_nonzero = any_nonzero || line.substr(line.rfind(',') + 1) != "0";
    CHECK(any_nonzero);
  }

  // a corrupted corrector cache entry fails that seed but not the sweep
  {
    const SweepConfig rc = resolved_config(cfg);
    const std::uint64_t bad_seed = derive_seed(rc.master_seed, "microstructure", 1);
    const std::string fname =
        corrector::cache_file_name(rc.process, rc.medium, rc.corrector, bad_seed);
    std::ofstream out(base / "cache" / fname, std::ios::binary);
    out << "WHCFgarbage-not-a-real-cache-entry";
    out.close();

    const SweepReport rep_f = run_sweep(cfg);
    CHECK(rep_f.failed_rows == 3);  // seed 1 fails for every epsilon
    CHECK(!rep_f.complete());
    CHECK(rep_f.per_seed.size() == 1);
    const fs::path out_f = base / "f";
    render_report(rep_f, out_f.string());
    CHECK(fs::exists(out_f / "failures.csv"));
    const std::string failures = slurp(out_f / "failures.csv");
    CHECK(first_line(out_f / "failures.csv") == "eps,seed,reason");
    CHECK(failures.find("corrector stage") != std::string::npos);
    // errors.csv keeps only the surviving seed's rows
    const auto ok_rows = read_errors_csv((out_f / "errors.csv").string());
    CHECK(ok_rows.size() == 3);
    for (const auto& r : ok_rows) CHECK(r.seed == 0);
  }

  fs::remove_all(base);
}
