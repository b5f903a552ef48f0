#include "symflow/oracle.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "symflow/errors.hpp"
#include "symflow/grid.hpp"

namespace symflow {

WarpedRicci warped_ricci_classical(const Expr& h, const Expr& f, std::size_t fiber_dim,
                                   double einstein_const, std::size_t N) {
    if (N < 1) throw GridTooCoarse("warped_ricci_classical: need at least one interval");
    const Expr hr = h.diff("r");
    const Expr fr = f.diff("r");
    const Expr frr = fr.diff("r");

    const double d = static_cast<double>(fiber_dim);
    WarpedRicci out;
    out.rr.resize(N + 1);
    out.fiber.resize(N + 1);
    Bindings env;
    for (std::size_t m = 0; m <= N; ++m) {
        env.set("r", static_cast<double>(m) / static_cast<double>(N));
        const double hv = h.eval(env);
        const double hrv = hr.eval(env);
        const double fv = f.eval(env);
        const double frv = fr.eval(env);
        const double frrv = frr.eval(env);

        // Ric(d_r,d_r) = -d (f''/f - h'f'/(hf)); fiber coefficient w.r.t. the
        // unit fiber metric is E - f f''/h^2 + f h'f'/h^3 - (d-1) f'^2/h^2.
        out.rr[m] = -d * (frrv / fv - hrv * frv / (hv * fv));
        out.fiber[m] = einstein_const - fv * frrv / (hv * hv) + fv * hrv * frv / (hv * hv * hv) -
                       (d - 1.0) * frv * frv / (hv * hv);
    }
    return out;
}

double fd_check(const Expr& y, std::size_t N) {
    const Expr yr = y.diff("r");
    std::vector<double> samples(N + 1), exact(N + 1);
    Bindings env;
    for (std::size_t m = 0; m <= N; ++m) {
        env.set("r", static_cast<double>(m) / static_cast<double>(N));
        samples[m] = y.eval(env);
        exact[m] = yr.eval(env);
    }
    const std::vector<double> approx = deriv1(samples, 1.0 / static_cast<double>(N));
    double worst = 0.0;
    for (std::size_t m = 0; m <= N; ++m) worst = std::max(worst, std::abs(approx[m] - exact[m]));
    return worst;
}

double estimate_order(const std::vector<double>& scales, const std::vector<double>& errors) {
    const std::size_t n = scales.size();
    if (n != errors.size() || n < 3)
        throw DegenerateFit("estimate_order: need at least three matching points");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(scales[i] > 0.0) || !(errors[i] > 0.0))
            throw DegenerateFit("estimate_order: scales and errors must be positive");
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (errors[i + 1] > 10.0 * errors[i])
            throw DegenerateFit("estimate_order: error jumped tenfold between points " +
                                std::to_string(i) + " and " + std::to_string(i + 1));
    }
    if (errors[n - 1] >= errors[0])
        throw DegenerateFit("estimate_order: errors do not decrease across the study");

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(scales[i]);
        const double y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    // denom = n^2 Var(log scales); relative floor so equal scales are caught
    // even when cancellation leaves rounding residue instead of exact zero
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    if (std::abs(denom) <= 1e-12 * static_cast<double>(n) * std::max(1.0, sxx))
        throw DegenerateFit("estimate_order: scales are all equal");
    return (static_cast<double>(n) * sxy - sx * sy) / denom;
}

}  // namespace symflow
