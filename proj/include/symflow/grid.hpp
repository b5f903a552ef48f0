#pragma once

// Finite-difference stencils, quadrature, and interpolation on the uniform
// grid r_m = m/N, m = 0..N.

#include <array>
#include <span>
#include <vector>

#include "symflow/errors.hpp"

namespace symflow {

// Weights w such that sum_i w[i] y(x[i]) approximates d^m/dx^m y at x0
// (Fornberg's recursion; exact for polynomials of degree < |x|).
std::vector<double> fd_weights(double x0, std::span<const double> xs, int m);

// First/second derivative of nodal values, 4th-order centered stencils in the
// interior and 4th-order one-sided stencils at the two nodes nearest each end.
// Output has the same length as the input; requires at least 7 nodes.
std::vector<double> deriv1(std::span<const double> y, double dx);
std::vector<double> deriv2(std::span<const double> y, double dx);

// Composite Simpson rule; the number of intervals (y.size() - 1) must be even.
double simpson(std::span<const double> y, double dx);

// Catmull-Rom cubic through uniform nodes, evaluated at x in [0, (n-1) dx].
// Node hits reproduce nodal values exactly; end cells use a quadratic
// extrapolation ghost.  C^1 across cells, O(dx^3) accurate.
double interp_cubic(std::span<const double> y, double dx, double x);

// 6-point Lagrange (quintic) interpolation, windows clamped at the ends.
// O(dx^6) accurate; used where interpolated values get differentiated again.
double interp_quintic(std::span<const double> y, double dx, double x);

// Three-point first-derivative weights at t1 for possibly nonuniform knots
// t0 < t1 < t2 (exact on quadratics); used for time differencing of stored
// snapshots.
std::array<double, 3> dt_weights(double t0, double t1, double t2);

}  // namespace symflow
