#pragma once

// Boundary-condition maps and symbolic initial profiles.
//
// The boundary law prescribes the second fundamental form through smooth
// functions F_{j,i}(t, f_1^2, ..., f_n^2) at each end j:
//
//   f_ir(j, t) = (-1)^{j+1} h(j, t) F_{j,i}(t, f^2(j, t)) / f_i(j, t)
//
// Initial data is given in closed form so that compatibility residuals and
// solver source terms use exact derivatives rather than finite differences.

#include <span>
#include <vector>

#include "symflow/expr.hpp"
#include "symflow/geometry.hpp"

namespace symflow {

struct BCSpec {
    // F[j][i], expressions in t and u1..un (u_i stands for f_i^2)
    std::vector<Expr> F[2];

    int n() const { return static_cast<int>(F[0].size()); }

    // F == 0: boundary totally geodesic for all time
    static BCSpec totally_geodesic(int n);
    // F_{j,i} = lambda(t) u_i at both ends (lambda an expression in t)
    static BCSpec shen(const Expr& lambda, int n);

    // Values F_{j,i}(t, u) at end j.
    std::vector<double> eval(int j, double t, std::span<const double> u) const;
};

struct InitialProfiles {
    Expr h;               // expression in r, positive on [0,1]
    std::vector<Expr> f;

    int n() const { return static_cast<int>(f.size()); }

    double eval_h(double r) const;
    double eval_f(int i, double r) const;

    // Exact nodal samples at t = 0 (validates positivity).
    FlowState sample(int N) const;
};

// Zeroth-order compatibility: residual[j][i] is the mismatch between the
// exact initial fiber derivative and the boundary map at end j,
//   f_ir(j) - (-1)^{j+1} h(j) F_{j,i}(0, f^2(j)) / f_i(j).
// Data is compatible iff every |residual| < 1e-10.
std::vector<std::vector<double>> check_compatibility(const BCSpec& bc,
                                                     const InitialProfiles& init);

constexpr double kCompatibilityTol = 1e-10;

bool compatible(const std::vector<std::vector<double>>& residuals,
                double tol = kCompatibilityTol);

}  // namespace symflow
