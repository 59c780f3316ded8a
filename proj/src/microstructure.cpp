#include "helmhom/microstructure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "helmhom/errors.hpp"
#include "helmhom/rng.hpp"

namespace helmhom::micro {

namespace {

constexpr double kPi = std::numbers::pi;

// Print a double so that parsing recovers the identical bits.
std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void ProcessConfig::validate() const {
  if (!(intensity >= 0.0)) throw Error("process intensity must be >= 0");
  if (!(inclusion_radius > 0.0)) throw Error("inclusion radius must be > 0");
  if (!(hardcore_distance >= 2.0 * inclusion_radius))
    throw Error("hardcore distance must be >= 2 * inclusion radius");
  if (!(period > 2.0 * hardcore_distance))
    throw Error("torus period must exceed 2 * hardcore distance");
}

TorusDiskIndex::TorusDiskIndex(const std::vector<Vec2>& centers, double period,
                               double radius)
    : centers_(centers), period_(period), radius_(radius) {
  n_ = std::max(1, static_cast<int>(std::floor(period / std::max(radius, 1e-12))));
  // Cap the grid so tiny radii cannot blow up memory; queries then scan a
  // slightly larger neighborhood, which stays correct.
  n_ = std::min(n_, 4096);
  cell_size_ = period / n_;
  cells_.assign(static_cast<std::size_t>(n_) * n_, {});
  for (std::uint32_t i = 0; i < centers_.size(); ++i) {
    const double wx = wrap_periodic(centers_[i].x, period_);
    const double wy = wrap_periodic(centers_[i].y, period_);
    int cx = std::min(n_ - 1, static_cast<int>(wx / cell_size_));
    int cy = std::min(n_ - 1, static_cast<int>(wy / cell_size_));
    cells_[static_cast<std::size_t>(cy) * n_ + cx].push_back(i);
  }
}

bool TorusDiskIndex::contains(const Vec2& p) const {
  if (centers_.empty()) return false;
  const double wx = wrap_periodic(p.x, period_);
  const double wy = wrap_periodic(p.y, period_);
  const int cx = std::min(n_ - 1, static_cast<int>(wx / cell_size_));
  const int cy = std::min(n_ - 1, static_cast<int>(wy / cell_size_));
  const int ring = static_cast<int>(std::ceil(radius_ / cell_size_));
  const double r2 = radius_ * radius_;
  const Vec2 w{wx, wy};
  for (int dy = -ring; dy <= ring; ++dy) {
    for (int dx = -ring; dx <= ring; ++dx) {
      const int ix = ((cx + dx) % n_ + n_) % n_;
      const int iy = ((cy + dy) % n_ + n_) % n_;
      for (std::uint32_t idx : cells_[static_cast<std::size_t>(iy) * n_ + ix]) {
        if (torus_distance2(w, centers_[idx], period_) <= r2) return true;
      }
    }
  }
  return false;
}

Microstructure sample_matern2(const ProcessConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const double L = cfg.period;
  const std::uint64_t n_prop = rng.poisson(cfg.intensity * L * L);

  struct Proposal {
    Vec2 pos;
    double mark;
  };
  std::vector<Proposal> props(n_prop);
  for (auto& p : props) {
    p.pos.x = rng.uniform(0.0, L);
    p.pos.y = rng.uniform(0.0, L);
    p.mark = rng.uniform();
  }

  // Cell list sized to the hard-core distance so each point only inspects
  // its 3x3 (or slightly larger) neighborhood.
  const double delta = cfg.hardcore_distance;
  const int n = std::max(1, std::min(4096, static_cast<int>(std::floor(L / delta))));
  const double cell = L / n;
  const int ring = static_cast<int>(std::ceil(delta / cell));
  std::vector<std::vector<std::uint32_t>> cells(static_cast<std::size_t>(n) * n);
  for (std::uint32_t i = 0; i < props.size(); ++i) {
    const int cx = std::min(n - 1, static_cast<int>(props[i].pos.x / cell));
    const int cy = std::min(n - 1, static_cast<int>(props[i].pos.y / cell));
    cells[static_cast<std::size_t>(cy) * n + cx].push_back(i);
  }

  const double d2 = delta * delta;
  Microstructure ms;
  ms.inclusion_radius = cfg.inclusion_radius;
  ms.period = L;
  ms.seed = seed;
  for (std::uint32_t i = 0; i < props.size(); ++i) {
    const int cx = std::min(n - 1, static_cast<int>(props[i].pos.x / cell));
    const int cy = std::min(n - 1, static_cast<int>(props[i].pos.y / cell));
    bool retained = true;
    for (int dy = -ring; dy <= ring && retained; ++dy) {
      for (int dx = -ring; dx <= ring && retained; ++dx) {
        const int ix = ((cx + dx) % n + n) % n;
        const int iy = ((cy + dy) % n + n) % n;
        for (std::uint32_t j : cells[static_cast<std::size_t>(iy) * n + ix]) {
          if (j == i) continue;
          if (torus_distance2(props[i].pos, props[j].pos, L) > d2) continue;
          // Thinning by the full proposal set: the smaller (mark, index)
          // kills the larger, whether or not the killer itself survives.
          if (props[j].mark < props[i].mark ||
              (props[j].mark == props[i].mark && j < i)) {
            retained = false;
            break;
          }
        }
      }
    }
    if (retained) ms.centers.push_back(props[i].pos);
  }
  return ms;
}

double calibrate_intensity(double target_vf, double inclusion_radius,
                           double hardcore_distance) {
  if (!(inclusion_radius > 0.0) || !(hardcore_distance >= 2.0 * inclusion_radius))
    throw Error("calibrate_intensity: invalid radius / hardcore distance");
  if (target_vf < 0.0) throw Error("calibrate_intensity: negative volume fraction");
  if (target_vf == 0.0) return 0.0;

  const double saturation =
      (inclusion_radius * inclusion_radius) / (hardcore_distance * hardcore_distance);
  if (target_vf >= saturation) {
    std::ostringstream os;
    os << "target volume fraction " << target_vf
       << " unreachable: hard-core saturation cap is " << saturation;
    throw UnreachableFraction(os.str());
  }
  const double y = target_vf * hardcore_distance * hardcore_distance /
                   (inclusion_radius * inclusion_radius);
  return -std::log1p(-y) / (kPi * hardcore_distance * hardcore_distance);
}

double volume_fraction(const Microstructure& ms) {
  const double r = ms.inclusion_radius;
  return static_cast<double>(ms.centers.size()) * kPi * r * r / (ms.period * ms.period);
}

CoefficientField::CoefficientField(Microstructure ms, MediumParams medium,
                                   double epsilon, Square scatterer)
    : ms_(std::move(ms)),
      medium_(medium),
      eps_(epsilon),
      scatterer_(scatterer),
      index_(ms_.centers, ms_.period, ms_.inclusion_radius) {
  if (!(eps_ > 0.0)) throw Error("CoefficientField: epsilon must be > 0");
}

std::pair<Mat2, double> CoefficientField::at(const Vec2& x) const {
  if (!scatterer_.contains(x)) return {Mat2::identity(), medium_.n_background};
  const Vec2 y{x.x / eps_, x.y / eps_};
  if (index_.contains(y)) return {medium_.a_scatter, medium_.n_scatter};
  return {medium_.a_matrix, medium_.n_matrix};
}

std::pair<Mat2, double> coefficient_at(const CoefficientField& field, const Vec2& x) {
  return field.at(x);
}

void write_microstructure(std::ostream& out, const Microstructure& ms) {
  out << "matern2 L=" << fmt_double(ms.period) << " r=" << fmt_double(ms.inclusion_radius)
      << " seed=" << ms.seed << "\n";
  for (const Vec2& c : ms.centers)
    out << fmt_double(c.x) << " " << fmt_double(c.y) << "\n";
}

Microstructure read_microstructure(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw IoError("microstructure: empty input");
  std::istringstream hs(header);
  std::string tag, lkv, rkv, skv;
  hs >> tag >> lkv >> rkv >> skv;
  if (tag != "matern2" || lkv.rfind("L=", 0) != 0 || rkv.rfind("r=", 0) != 0 ||
      skv.rfind("seed=", 0) != 0)
    throw IoError("microstructure: malformed header: " + header);
  Microstructure ms;
  try {
    ms.period = std::stod(lkv.substr(2));
    ms.inclusion_radius = std::stod(rkv.substr(2));
    ms.seed = std::stoull(skv.substr(5));
  } catch (const std::exception&) {
    throw IoError("microstructure: unparsable header values: " + header);
  }
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Vec2 c;
    if (!(ls >> c.x >> c.y)) throw IoError("microstructure: malformed center line: " + line);
    ms.centers.push_back(c);
  }
  return ms;
}

void save_microstructure(const std::string& path, const Microstructure& ms) {
  std::ofstream out(path, std::ios::binary);  // binary: keep LF endings everywhere
  if (!out) throw IoError("cannot open for writing: " + path);
  write_microstructure(out, ms);
  if (!out) throw IoError("write failed: " + path);
}

Microstructure load_microstructure(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return read_microstructure(in);
}

}  // namespace helmhom::micro
