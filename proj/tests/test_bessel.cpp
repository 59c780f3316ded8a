#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helmhom/bessel.hpp"
#include "helmhom/errors.hpp"

using namespace helmhom;
using namespace helmhom::scattering;

namespace {
constexpr double kPi = std::numbers::pi;

double scaled_err(double got, double ref) {
  return std::abs(got - ref) / std::max(1.0, std::abs(ref));
}
}  // namespace

TEST_CASE("J_n and Y_n match the C++17 special functions to 1e-10 (scaled)") {
  // orders 0..50, x across (0, 200]: log-spaced small x, linear beyond,
  // plus points straddling the series/asymptotic switchover.
  std::vector<double> xs;
  for (double x = 1e-3; x < 1.0; x *= 3.1623) xs.push_back(x);
  for (double x = 1.0; x <= 20.0; x += 0.73) xs.push_back(x);
  for (double x = 11.0; x <= 13.0; x += 0.25) xs.push_back(x);
  for (double x = 25.0; x <= 200.0; x += 12.5) xs.push_back(x);
  xs.push_back(200.0);

  double worst_j = 0.0, worst_y = 0.0;
  for (int n = 0; n <= 50; ++n) {
    for (double x : xs) {
      const auto [j, y] = bessel_jy(n, x);
      const double jr = std::cyl_bessel_j(static_cast<double>(n), x);
      const double yr = std::cyl_neumann(static_cast<double>(n), x);
      worst_j = std::max(worst_j, scaled_err(j, jr));
      worst_y = std::max(worst_y, scaled_err(y, yr));
    }
  }
  CHECK(worst_j <= 1e-10);
  CHECK(worst_y <= 1e-10);
}

TEST_CASE("array variants agree with the scalar entry point") {
  for (double x : {0.07, 3.7, 54.0, 199.0}) {
    const auto js = bessel_j_array(50, x);
    const auto ys = bessel_y_array(50, x);
    REQUIRE(js.size() == 51);
    REQUIRE(ys.size() == 51);
    for (int n = 0; n <= 50; ++n) {
      const auto [j, y] = bessel_jy(n, x);
      CHECK(js[n] == doctest::Approx(j).epsilon(1e-14));
      CHECK(ys[n] == doctest::Approx(y).epsilon(1e-14));
    }
  }
}

TEST_CASE("Wronskian J_{n+1} Y_n - J_n Y_{n+1} = 2/(pi x) to 1e-10") {
  for (int n = 0; n <= 49; ++n) {
    for (double x : {0.05, 0.8, 5.0, 12.0, 47.0, 120.0, 200.0}) {
      const auto [jn, yn] = bessel_jy(n, x);
      const auto [jn1, yn1] = bessel_jy(n + 1, x);
      const double w = jn1 * yn - jn * yn1;
      CHECK(std::abs(w - 2.0 / (kPi * x)) <= 1e-10 * std::max(1.0, 2.0 / (kPi * x)));
    }
  }
}

TEST_CASE("classical reference values") {
  // first positive zero of J_0
  const double z0 = 2.404825557695773;
  CHECK(std::abs(bessel_jy(0, z0).first) <= 1e-12);
  // J_0(1), Y_0(1) (Abramowitz & Stegun 9.4)
  CHECK(bessel_jy(0, 1.0).first == doctest::Approx(0.7651976865579666).epsilon(1e-12));
  CHECK(bessel_jy(0, 1.0).second == doctest::Approx(0.0882569642156769).epsilon(1e-12));
  CHECK(bessel_jy(1, 2.0).first == doctest::Approx(0.5767248077568734).epsilon(1e-12));
  // small-argument behavior: J_n(x) ~ (x/2)^n / n!
  CHECK(bessel_jy(5, 1e-2).first ==
        doctest::Approx(std::pow(5e-3, 5) / 120.0).epsilon(1e-8));
}

TEST_CASE("invalid arguments are rejected") {
  CHECK_THROWS_AS(bessel_jy(-1, 1.0), Error);
  CHECK_THROWS_AS(bessel_jy(0, 0.0), Error);
  CHECK_THROWS_AS(bessel_jy(0, -3.0), Error);
}

TEST_CASE("Green function: Helmholtz equation via the Bessel ODE and decay") {
  const double k = 5.0;
  const Vec2 y{0.0, 0.0};

  // radial symmetry + outgoing amplitude decay ~ r^{-1/2}:
  // |G| sqrt(r) approaches 1/(4) sqrt(2/(pi k)) for large r
  const double target = 0.25 * std::sqrt(2.0 / (kPi * k));
  for (double r : {20.0, 30.0, 39.0}) {
    const Complex g = green_2d(k, Vec2{r, 0.0}, y);
    CHECK(std::abs(g) * std::sqrt(r) == doctest::Approx(target).epsilon(2e-3));
  }

  // Sommerfeld phase: G ~ c e^{i k r} / sqrt(r); the ratio between radii
  // separated by dr carries phase e^{i k dr}
  const Complex g1 = green_2d(k, Vec2{30.0, 0.0}, y);
  const Complex g2 = green_2d(k, Vec2{31.0, 0.0}, y);
  const Complex ratio = g2 / g1 * std::sqrt(31.0 / 30.0);
  CHECK(std::arg(ratio * std::exp(Complex{0.0, -k})) ==
        doctest::Approx(0.0).epsilon(1e-2));

  // gradient convention: grad in the first argument, pointing with (x - y)
  const Vec2 x{0.3, -0.4};  // r = 0.5
  const Vec2c gr = grad_green_2d(k, x, y);
  const double r = 0.5;
  const auto [j1, y1] = bessel_jy(1, k * r);
  // dG/dr = (i k / 4) H_0'(kr) = -(i k / 4) H_1(kr)
  const Complex expect_dr = Complex{0.0, -k / 4.0} * Complex{j1, y1};
  CHECK(std::abs(gr.x - expect_dr * (x.x / r)) <= 1e-12);
  CHECK(std::abs(gr.y - expect_dr * (x.y / r)) <= 1e-12);

  // finite-difference cross-check of the gradient
  const double h = 1e-6;
  const Complex gx1 = green_2d(k, Vec2{x.x + h, x.y}, y);
  const Complex gx0 = green_2d(k, Vec2{x.x - h, x.y}, y);
  CHECK(std::abs((gx1 - gx0) / (2.0 * h) - gr.x) <= 1e-5);

  CHECK_THROWS_AS(green_2d(k, y, y), SingularPoint);
  CHECK_THROWS_AS(grad_green_2d(k, Vec2{1e-13, 0.0}, y), SingularPoint);
}
