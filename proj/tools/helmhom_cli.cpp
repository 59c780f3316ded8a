// Command-line front end. Talks to the library exclusively through the C
// API in helmhom/helmhom.h; exit codes are the hh_status values (0 ok,
// 1 runtime failure, 2 usage/config error).
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "helmhom/helmhom.h"

namespace {

struct ConfigDeleter {
  void operator()(hh_config* c) const { hh_config_free(c); }
};
using ConfigPtr = std::unique_ptr<hh_config, ConfigDeleter>;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path,
                  "Plain-text config file (section.key = value lines)");
  cmd->add_option("--set", opts.sets,
                  "Override one config entry, e.g. --set wave.k=5")
      ->type_name("KEY=VALUE");
  cmd->add_option("--seed", opts.seed, "Master seed (sets sweep.master_seed)")
      ->each([&opts](const std::string&) { opts.seed_given = true; });
}

// Builds the config from --config/--set/--seed; on failure prints the
// library error and returns nullptr with `code` set.
ConfigPtr build_config(const CommonOpts& opts, int& code) {
  ConfigPtr cfg(opts.config_path.empty() ? hh_config_create()
                                         : hh_config_load(opts.config_path.c_str()));
  if (!cfg) {
    std::fprintf(stderr, "error: %s\n", hh_last_error());
    code = 2;
    return nullptr;
  }
  for (const std::string& kv : opts.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "error: --set expects KEY=VALUE, got '%s'\n",
                   kv.c_str());
      code = 2;
      return nullptr;
    }
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    const hh_status st = hh_config_set(cfg.get(), key.c_str(), value.c_str());
    if (st != HH_OK) {
      std::fprintf(stderr, "error: %s\n", hh_last_error());
      code = static_cast<int>(st);
      return nullptr;
    }
  }
  if (opts.seed_given) {
    const std::string s = std::to_string(opts.seed);
    if (hh_config_set(cfg.get(), "sweep.master_seed", s.c_str()) != HH_OK) {
      std::fprintf(stderr, "error: %s\n", hh_last_error());
      code = 2;
      return nullptr;
    }
  }
  code = 0;
  return cfg;
}

int report_status(hh_status st) {
  if (st != HH_OK) std::fprintf(stderr, "error: %s\n", hh_last_error());
  return static_cast<int>(st);
}

int cmd_sample(const CommonOpts& opts, std::uint64_t index,
               const std::string& out) {
  int code = 0;
  const ConfigPtr cfg = build_config(opts, code);
  if (!cfg) return code;
  const hh_status st = hh_sample(cfg.get(), index, out.c_str());
  if (st == HH_OK) std::printf("wrote %s\n", out.c_str());
  return report_status(st);
}

int cmd_homogenize(const CommonOpts& opts, const std::string& out) {
  int code = 0;
  const ConfigPtr cfg = build_config(opts, code);
  if (!cfg) return code;
  hh_homog* h = hh_homogenize(cfg.get());
  if (!h) {
    std::fprintf(stderr, "error: %s\n", hh_last_error());
    return 1;
  }
  std::printf("realizations   %d\n", hh_homog_realizations(h));
  std::printf("a_hom          [[%.12g, %.12g], [%.12g, %.12g]]\n",
              hh_homog_a(h, 0, 0), hh_homog_a(h, 0, 1), hh_homog_a(h, 1, 0),
              hh_homog_a(h, 1, 1));
  std::printf("a_hom (flux)   [[%.12g, %.12g], [%.12g, %.12g]]\n",
              hh_homog_a_flux(h, 0, 0), hh_homog_a_flux(h, 0, 1),
              hh_homog_a_flux(h, 1, 0), hh_homog_a_flux(h, 1, 1));
  std::printf("spread(a)      [[%.12g, %.12g], [%.12g, %.12g]]\n",
              hh_homog_spread_a(h, 0, 0), hh_homog_spread_a(h, 0, 1),
              hh_homog_spread_a(h, 1, 0), hh_homog_spread_a(h, 1, 1));
  std::printf("n_hom          %.12g\n", hh_homog_n(h));
  std::printf("spread(n)      %.12g\n", hh_homog_spread_n(h));
  std::printf("mean vf        %.12g\n", hh_homog_mean_vf(h));
  hh_status st = HH_OK;
  if (!out.empty()) {
    st = hh_homog_write_csv(h, out.c_str());
    if (st == HH_OK) std::printf("wrote %s\n", out.c_str());
  }
  hh_homog_free(h);
  return report_status(st);
}

int cmd_solve(const CommonOpts& opts, const std::string& mode, double eps,
              std::uint64_t index, const std::string& points,
              const std::string& out) {
  int code = 0;
  const ConfigPtr cfg = build_config(opts, code);
  if (!cfg) return code;
  const hh_status st =
      hh_solve(cfg.get(), mode.c_str(), eps, index,
               points.empty() ? nullptr : points.c_str(), out.c_str());
  if (st == HH_OK) {
    std::printf("wrote %s/field.csv\n", out.c_str());
    if (!points.empty()) std::printf("wrote %s/points.csv\n", out.c_str());
  }
  return report_status(st);
}

int cmd_sweep(const CommonOpts& opts, const std::string& out) {
  int code = 0;
  const ConfigPtr cfg = build_config(opts, code);
  if (!cfg) return code;
  hh_sweep_result* r = hh_sweep_run(cfg.get());
  if (!r) {
    std::fprintf(stderr, "error: %s\n", hh_last_error());
    return 1;
  }
  const hh_status st = hh_sweep_render(r, out.c_str());
  if (st != HH_OK) {
    std::fprintf(stderr, "error: %s\n", hh_last_error());
    hh_sweep_free(r);
    return static_cast<int>(st);
  }
  const int rows = hh_sweep_rows(r);
  const int failed = hh_sweep_failed_rows(r);
  std::printf("rows           %d (%d failed)\n", rows, failed);
  std::printf("runtime        %.1f s\n", hh_sweep_total_runtime(r));
  const char* columns[] = {"err_L2_box",    "err_H1_ext",    "err_H1_D_2scale",
                           "err_L2_ext_U1", "err_H1_ext_U1", "diag_F",
                           "diag_G"};
  for (const char* col : columns) {
    const double rate = hh_sweep_rate(r, col);
    std::printf("rate %-15s %.3f\n", col, rate);
  }
  std::printf("wrote %s/{errors.csv,homog.csv,rates.csv,decay.svg}\n",
              out.c_str());
  hh_sweep_free(r);
  if (failed > 0) {
    std::fprintf(stderr, "error: %d sweep row(s) failed (see %s/failures.csv)\n",
                 failed, out.c_str());
    return 1;
  }
  return 0;
}

int cmd_report(const std::string& errors_csv, const std::string& out) {
  const hh_status st = hh_report(errors_csv.c_str(), out.c_str());
  if (st == HH_OK)
    std::printf("wrote %s/{rates.csv,decay.svg}\n", out.c_str());
  return report_status(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "helmhom: stochastic homogenization of 2D Helmholtz scattering "
      "(library version " +
      std::string(hh_version()) + ")"};
  app.require_subcommand(1);

  // sample
  CommonOpts sample_opts;
  std::uint64_t sample_index = 0;
  std::string sample_out;
  CLI::App* sample = app.add_subcommand(
      "sample", "Sample one hard-core microstructure realization");
  add_common(sample, sample_opts);
  sample->add_option("--index", sample_index,
                     "Realization index within the master-seed stream");
  sample->add_option("--out", sample_out, "Output text file")->required();

  // homogenize
  CommonOpts hom_opts;
  std::string hom_out;
  CLI::App* hom = app.add_subcommand(
      "homogenize", "Monte-Carlo homogenized coefficients (a_hom, n_hom)");
  add_common(hom, hom_opts);
  hom->add_option("--out", hom_out, "Optional per-realization CSV");

  // solve
  CommonOpts solve_opts;
  std::string solve_mode = "heterogeneous";
  double solve_eps = 0.2;
  std::uint64_t solve_index = 0;
  std::string solve_points, solve_out;
  CLI::App* solve = app.add_subcommand(
      "solve", "One scattering solve on the truncated box");
  add_common(solve, solve_opts);
  solve->add_option("--mode", solve_mode, "heterogeneous | homogenized")
      ->check(CLI::IsMember({"heterogeneous", "homogenized"}));
  solve->add_option("--eps", solve_eps, "Microscale epsilon (default 0.2)");
  solve->add_option("--index", solve_index, "Realization index");
  solve->add_option("--points", solve_points,
                    "Observation points file ('x y' per line) for the "
                    "boundary-integral exterior evaluation");
  solve->add_option("--out", solve_out, "Output directory")->required();

  // sweep
  CommonOpts sweep_opts;
  std::string sweep_out;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Full convergence sweep: errors.csv, homog.csv, rates.csv, "
               "decay.svg");
  add_common(sweep, sweep_opts);
  sweep->add_option("--out", sweep_out, "Output directory")->required();

  // report
  std::string report_errors, report_out;
  CLI::App* report = app.add_subcommand(
      "report", "Re-fit rates and re-draw decay.svg from an errors.csv");
  report->add_option("--errors", report_errors, "Existing errors.csv")
      ->required();
  report->add_option("--out", report_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sample->parsed()) return cmd_sample(sample_opts, sample_index, sample_out);
    if (hom->parsed()) return cmd_homogenize(hom_opts, hom_out);
    if (solve->parsed())
      return cmd_solve(solve_opts, solve_mode, solve_eps, solve_index,
                       solve_points, solve_out);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, sweep_out);
    if (report->parsed()) return cmd_report(report_errors, report_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
