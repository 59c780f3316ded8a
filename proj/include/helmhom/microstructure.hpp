// Random two-phase composite on a torus: Matern type-II hard-core disk
// process (thinned Poisson), intensity calibration to a target volume
// fraction, and point queries of the rescaled coefficient field a_eps / n_eps.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "helmhom/geometry.hpp"

namespace helmhom::micro {

struct ProcessConfig {
  double intensity = 0.0;          // Poisson proposal intensity per unit area
  double hardcore_distance = 1.05; // minimum center-to-center distance
  double inclusion_radius = 0.5;   // disk radius
  double period = 20.0;            // torus period L

  void validate() const;  // throws Error on inconsistent parameters
};

struct Microstructure {
  std::vector<Vec2> centers;  // retained disk centers in [0, period)^2
  double inclusion_radius = 0.5;
  double period = 20.0;
  std::uint64_t seed = 0;     // seed that produced the sample (provenance)
};

struct MediumParams {
  Mat2 a_matrix = Mat2::scalar(2.0);    // a_M
  Mat2 a_scatter = Mat2::scalar(3.5);   // a_S
  double n_matrix = 1.5;                // n_M
  double n_scatter = 0.5;               // n_S
  double n_background = 1.0;            // n_0 outside the scatterer support
};

// Uniform-grid cell index over the torus for O(1) disk-membership queries.
class TorusDiskIndex {
 public:
  TorusDiskIndex() = default;
  TorusDiskIndex(const std::vector<Vec2>& centers, double period, double radius);

  // True iff the wrapped point lies within `radius` (closed) of some center
  // in the torus metric.
  bool contains(const Vec2& p) const;

 private:
  std::vector<std::vector<std::uint32_t>> cells_;
  std::vector<Vec2> centers_;
  double period_ = 0.0;
  double radius_ = 0.0;
  double cell_size_ = 0.0;
  int n_ = 0;
};

// The epsilon-rescaled composite inside the scatterer square D, identity /
// n_background outside. Point queries wrap x/eps onto the unit-scale torus.
class CoefficientField {
 public:
  CoefficientField(Microstructure ms, MediumParams medium, double epsilon,
                   Square scatterer);

  // (a(x), n(x)) of the heterogeneous problem.
  std::pair<Mat2, double> at(const Vec2& x) const;

  // Unit-scale phase query: true iff torus point y lies in a disk.
  bool unit_cell_in_disk(const Vec2& y) const { return index_.contains(y); }

  const Microstructure& microstructure() const { return ms_; }
  const MediumParams& medium() const { return medium_; }
  double epsilon() const { return eps_; }
  const Square& scatterer() const { return scatterer_; }

 private:
  Microstructure ms_;
  MediumParams medium_;
  double eps_;
  Square scatterer_;
  TorusDiskIndex index_;
};

// Matern type-II thinning of a Poisson proposal process on the torus:
// propose N ~ Poisson(intensity * L^2) points with i.i.d. uniform positions
// and marks; retain a point iff no other proposal within hardcore_distance
// (torus metric) carries a smaller mark (ties, probability zero, broken by
// proposal index). Deterministic given the seed.
Microstructure sample_matern2(const ProcessConfig& cfg, std::uint64_t seed);

// Closed-form inverse of the Matern-II retained-intensity formula
//   lambda_ret = (1 - exp(-lambda * pi * delta^2)) / (pi * delta^2),
//   vf = lambda_ret * pi * r^2.
// Throws UnreachableFraction if target_vf >= r^2/delta^2 (saturation cap).
double calibrate_intensity(double target_vf, double inclusion_radius,
                           double hardcore_distance);

// Exact disk-area fraction count * pi r^2 / L^2 (disks are disjoint by the
// hard-core constraint).
double volume_fraction(const Microstructure& ms);

std::pair<Mat2, double> coefficient_at(const CoefficientField& field, const Vec2& x);

// Text format: header line "matern2 L=<L> r=<r> seed=<seed>", then one
// "x y" line per center; LF endings; doubles round-trip exactly.
void write_microstructure(std::ostream& out, const Microstructure& ms);
Microstructure read_microstructure(std::istream& in);
void save_microstructure(const std::string& path, const Microstructure& ms);
Microstructure load_microstructure(const std::string& path);

}  // namespace helmhom::micro
