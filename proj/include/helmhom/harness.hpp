// Configuration, the ensemble sweep orchestrator, rate fitting against the
// mu_d models, and CSV/SVG reporting.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "helmhom/correctors.hpp"
#include "helmhom/expansion.hpp"
#include "helmhom/microstructure.hpp"
#include "helmhom/scattering.hpp"

namespace helmhom::harness {

struct SweepConfig {
  // medium.*
  micro::MediumParams medium;
  // process.* (intensity is derived from target_vf unless target_vf == 0)
  micro::ProcessConfig process;
  double target_vf = 0.226;
  // corrector.*
  corrector::CorrectorConfig corrector;
  // wave.*
  scattering::PlaneWave wave;  // k = 5, direction (1, 0)
  // box.*
  double box_side = 4.0;
  double scatterer_side = 2.0;
  // sweep.*
  std::vector<double> epsilon_list{0.20, 0.16, 0.128, 0.1024};
  int n_realizations = 8;
  std::uint64_t master_seed = 93550214UL;
  double eta = 10.0;     // h = eps/eta policy (eta >= 8)
  double h_fixed = 0.0;  // > 0 selects a fixed mesh step instead
  double alpha = 0.25;   // D^alpha margin for the exterior-U1 region
  bool record_runtime = false;  // keep errors.csv byte-stable by default
  // cache.*
  std::string cache_dir;

  void validate() const;  // throws ConfigError
};

SweepConfig default_config();

// Validated copy with process.intensity resolved from target_vf (when
// target_vf > 0); every pipeline entry point starts from this.
SweepConfig resolved_config(const SweepConfig& cfg);

// Plain-text config: one `section.key = value` per line, `#` comments,
// blank lines ignored. Unknown keys and malformed values are ConfigErrors.
SweepConfig load_config(const std::string& path);
void apply_config_entry(SweepConfig& cfg, const std::string& key,
                        const std::string& value);

// Rate models: predictor(eps) = eps^eps_pow * mu_d(1/eps)^mu_pow with
// mu_1(y) = sqrt(y), mu_2(y) = |log(2+y)|^{1/2}, mu_3(y) = 1.
double mu_d(int d, double y);

struct RateModel {
  double eps_pow = 1.0;
  double mu_pow = 1.0;
  int d = 2;
};

double predictor(const RateModel& model, double eps);

RateModel rate_model_l2();         // eps * mu_2(1/eps)           (L2 bulk)
RateModel rate_model_two_scale();  // eps^{1/2} * mu_2(1/eps)^{1/2}
RateModel rate_model_exterior();   // eps^{3/2} * mu_2(1/eps)

struct RateFit {
  double exponent = 0.0;   // OLS slope of log RMS vs log predictor
  double intercept = 0.0;  // OLS intercept (log space)
  double residual = 0.0;   // RMS of OLS residuals (log space)
};

// Ensemble-RMS per epsilon over the rows' `column`, then ordinary least
// squares in log-log space against the model predictor. Failed rows are
// skipped; fewer than 3 distinct epsilon values is InsufficientData.
RateFit fit_rate(const std::vector<expansion::ErrorRow>& rows,
                 const std::string& column, const RateModel& model);

// The serialized ErrorRow columns, in errors.csv order, with their models.
const std::vector<std::pair<std::string, RateModel>>& rate_columns();

struct SweepReport {
  SweepConfig config;                // with the resolved process intensity
  std::vector<expansion::ErrorRow> rows;
  corrector::HomogenizedCoeffs hom;
  std::vector<corrector::RealizationCoeffs> per_seed;
  int expected_rows = 0;
  int failed_rows = 0;
  double total_runtime_s = 0.0;

  bool complete() const {
    return failed_rows == 0 && static_cast<int>(rows.size()) == expected_rows;
  }
};

SweepReport run_sweep(const SweepConfig& cfg);

// Writes errors.csv, homog.csv, rates.csv, decay.svg (and failures.csv when
// rows failed) into outdir. Throws on an empty report.
void render_report(const SweepReport& report, const std::string& outdir);

// Re-renders rates.csv and decay.svg from an existing errors.csv.
void render_from_errors_csv(const std::string& errors_csv, const std::string& outdir);

std::vector<expansion::ErrorRow> read_errors_csv(const std::string& path);

// Smallest grid division count >= box_side/h_target for which the box step
// divides the box and the scatterer edges land on grid lines.
int choose_box_divisions(double box_side, double scatterer_side, double h_target);

}  // namespace helmhom::harness
