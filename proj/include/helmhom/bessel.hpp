// In-house Bessel functions of the first and second kind (integer order)
// and the outgoing 2D Helmholtz Green function built on them.
//
//   J_n: Miller backward recurrence normalized by J_0 + 2 sum J_{2k} = 1.
//   Y_0, Y_1: ascending series with the log term for x < 12, Hankel
//             asymptotic expansion beyond; Y_n by forward recurrence.
//
// Accuracy target: scaled error |err| / max(1, |value|) <= 1e-10 for
// 0 <= order <= 50, 0 < x <= 200 (absolute error wherever the value is O(1)).
#pragma once

#include <utility>
#include <vector>

#include "helmhom/geometry.hpp"

namespace helmhom::scattering {

// (J_n(x), Y_n(x)) for integer order n >= 0, x > 0.
std::pair<double, double> bessel_jy(int order, double x);

// All orders 0..nmax at once (the recurrences produce them anyway).
std::vector<double> bessel_j_array(int nmax, double x);
std::vector<double> bessel_y_array(int nmax, double x);

// Outgoing free-space Green function G(x, y) = (i/4) H_0^(1)(k |x - y|).
// Throws SingularPoint when |x - y| <= 1e-12.
Complex green_2d(double k, const Vec2& x, const Vec2& y);

// Gradient in the first argument, the convention used by the boundary
// representation (integration variable first, observation point second):
// grad_x G(x, y) = -(i k / 4) H_1^(1)(k r) (x - y)/r.
Vec2c grad_green_2d(double k, const Vec2& x, const Vec2& y);

}  // namespace helmhom::scattering
