#include "helmhom/bessel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "helmhom/errors.hpp"

namespace helmhom::scattering {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

// Ascending series with log term, reliable to ~1e-12 absolute for x < 12
// (the alternating-series cancellation stays below ~1e4 there).
double y0_series(double x, double j0) {
  const double q = 0.25 * x * x;
  double term = 1.0;  // q^k / (k!)^2, k = 0
  double hk = 0.0;    // harmonic number H_k
  double sum = 0.0;
  for (int k = 1; k <= 60; ++k) {
    term *= q / (static_cast<double>(k) * k);
    hk += 1.0 / k;
    const double contrib = (k % 2 == 1 ? 1.0 : -1.0) * hk * term;
    sum += contrib;
    if (std::abs(contrib) < 1e-18 * std::max(1.0, std::abs(sum)) && k > 4) break;
  }
  return (2.0 / kPi) * ((std::log(0.5 * x) + kEulerGamma) * j0 + sum);
}

double y1_series(double x, double j1) {
  const double q = 0.25 * x * x;
  double term = 1.0;  // q^k / (k! (k+1)!), k = 0
  double hk = 0.0, hk1 = 1.0;
  double sum = hk + hk1;  // k = 0 contribution (H_0 + H_1) * term
  for (int k = 1; k <= 60; ++k) {
    term *= q / (static_cast<double>(k) * (k + 1));
    hk += 1.0 / k;
    hk1 += 1.0 / (k + 1);
    const double contrib = (k % 2 == 0 ? 1.0 : -1.0) * (hk + hk1) * term;
    sum += contrib;
    if (std::abs(contrib) < 1e-18 * std::max(1.0, std::abs(sum)) && k > 4) break;
  }
  return (2.0 / kPi) *
         ((std::log(0.5 * x) + kEulerGamma) * j1 - 1.0 / x - 0.25 * x * sum);
}

// Hankel asymptotic expansion for order 0 or 1, summed to its smallest term;
// truncation error < 1e-11 for x >= 12.
void hankel_asymptotic(int nu, double x, double* jn, double* yn) {
  const double mu = 4.0 * nu * nu;
  double p = 1.0, q = 0.0;
  double term = 1.0;
  double prev = std::abs(term);
  for (int k = 1; k <= 40; ++k) {
    const double f = (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k * x);
    term *= f;
    if (std::abs(term) >= prev) break;  // asymptotic tail started growing
    prev = std::abs(term);
    const int phase = k % 4;  // i^k pattern distributes terms over P and Q
    if (phase == 1) q += term;
    else if (phase == 2) p -= term;
    else if (phase == 3) q -= term;
    else p += term;
    if (std::abs(term) < 1e-18) break;
  }
  const double chi = x - (0.5 * nu + 0.25) * kPi;
  const double amp = std::sqrt(2.0 / (kPi * x));
  const double c = std::cos(chi), s = std::sin(chi);
  *jn = amp * (p * c - q * s);
  *yn = amp * (p * s + q * c);
}

void jy01(double x, double* j0, double* j1, double* y0, double* y1) {
  if (x < 12.0) {
    const auto j = bessel_j_array(1, x);
    *j0 = j[0];
    *j1 = j[1];
    *y0 = y0_series(x, j[0]);
    *y1 = y1_series(x, j[1]);
  } else {
    hankel_asymptotic(0, x, j0, y0);
    hankel_asymptotic(1, x, j1, y1);
  }
}

}  // namespace

std::vector<double> bessel_j_array(int nmax, double x) {
  if (nmax < 0) throw Error("bessel: negative order");
  if (!(x > 0.0)) throw Error("bessel: x must be positive");

  // Start the backward recurrence far enough above max(nmax, x) that the
  // contamination of the minimal solution has decayed below 1e-14.
  const double top = std::max(static_cast<double>(nmax), x);
  int start = static_cast<int>(top + 1.5 * std::sqrt(top + 1.0) + 42.0);
  if (start % 2 == 1) ++start;

  std::vector<double> j(static_cast<std::size_t>(nmax) + 1, 0.0);
  double jp = 0.0;          // j_{k+1}
  double jc = 1e-30;        // j_k, arbitrary small seed
  double sum = 0.0;         // accumulates j_0 + 2 sum j_{2m}
  if (start <= nmax) j[start] = jc;
  for (int k = start; k >= 1; --k) {
    double jm = (2.0 * k / x) * jc - jp;  // j_{k-1}
    jp = jc;
    jc = jm;
    if (k - 1 <= nmax) j[k - 1] = jc;
    if ((k - 1) % 2 == 0) sum += (k - 1 == 0) ? jc : 2.0 * jc;
    if (std::abs(jc) > 1e100) {  // rescale everything accumulated so far
      jc *= 1e-100;
      jp *= 1e-100;
      sum *= 1e-100;
      for (double& v : j) v *= 1e-100;
    }
  }
  for (double& v : j) v /= sum;
  return j;
}

std::vector<double> bessel_y_array(int nmax, double x) {
  if (nmax < 0) throw Error("bessel: negative order");
  if (!(x > 0.0)) throw Error("bessel: x must be positive");
  double j0, j1, y0, y1;
  jy01(x, &j0, &j1, &y0, &y1);
  std::vector<double> y(static_cast<std::size_t>(nmax) + 1);
  y[0] = y0;
  if (nmax >= 1) y[1] = y1;
  for (int k = 1; k < nmax; ++k) y[k + 1] = (2.0 * k / x) * y[k] - y[k - 1];
  return y;
}

std::pair<double, double> bessel_jy(int order, double x) {
  const auto j = bessel_j_array(order, x);
  const auto y = bessel_y_array(order, x);
  return {j[order], y[order]};
}

Complex green_2d(double k, const Vec2& x, const Vec2& y) {
  const double r = (x - y).norm();
  if (r <= 1e-12) {
    std::ostringstream os;
    os << "Green function evaluated at coincident points (r = " << r << ")";
    throw SingularPoint(os.str());
  }
  double j0, j1, y0, y1;
  jy01(k * r, &j0, &j1, &y0, &y1);
  // (i/4) H_0^(1) = (i/4)(J_0 + i Y_0)
  return Complex{-0.25 * y0, 0.25 * j0};
}

Vec2c grad_green_2d(double k, const Vec2& x, const Vec2& y) {
  const Vec2 d = x - y;
  const double r = d.norm();
  if (r <= 1e-12) {
    std::ostringstream os;
    os << "Green gradient evaluated at coincident points (r = " << r << ")";
    throw SingularPoint(os.str());
  }
  double j0, j1, y0, y1;
  jy01(k * r, &j0, &j1, &y0, &y1);
  const Complex h1{j1, y1};
  const Complex factor = Complex{0.0, -0.25} * k * h1 / r;
  return {factor * d.x, factor * d.y};
}

}  // namespace helmhom::scattering
