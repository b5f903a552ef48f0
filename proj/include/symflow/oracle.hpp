#pragma once

#include <cstddef>
#include <vector>

#include "symflow/expr.hpp"

namespace symflow {

// Ricci curvature of a classical warped product h(r)^2 dr^2 + f(r)^2 g_F over
// a single Einstein fiber (Ric_F = einstein_const * g_F), evaluated from
// symbolic derivatives of the profiles.  This is an independent cross-check
// for the bracket-table reduction: only the fiber dimension and its Einstein
// constant enter, never the structure constants.
struct WarpedRicci {
    std::vector<double> rr;     // Ric(d_r, d_r)
    std::vector<double> fiber;  // fiber block coefficient w.r.t. the unit fiber metric
};

// Samples on the N-interval uniform grid over [0,1].  Profiles must be
// expressions in the single variable "r".
WarpedRicci warped_ricci_classical(const Expr& h, const Expr& f, std::size_t fiber_dim,
                                   double einstein_const, std::size_t N);

// Max-norm error of the first-derivative stencils against the symbolic
// derivative of y, sampled on an N-interval grid over [0,1].
double fd_check(const Expr& y, std::size_t N);

// Least-squares slope of log(error) against log(scale).  Throws DegenerateFit
// when the data do not look like a convergence study: fewer than three points,
// nonpositive entries, any tenfold jump between consecutive errors, or no
// overall decrease from the coarsest to the finest scale.
double estimate_order(const std::vector<double>& scales, const std::vector<double>& errors);

}  // namespace symflow
