#include "symflow/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace symflow {

std::vector<double> fd_weights(double x0, std::span<const double> xs, int m) {
    // Fornberg, "Generation of finite difference formulas on arbitrarily
    // spaced grids": builds weights for derivative orders 0..m in one sweep.
    const int nd = static_cast<int>(xs.size());
    if (nd < m + 1) throw Error("fd_weights: stencil too small for derivative order");
    std::vector<double> c(static_cast<std::size_t>(nd) * (m + 1), 0.0);
    auto C = [&](int i, int j) -> double& { return c[static_cast<std::size_t>(i) * (m + 1) + j]; };
    double c1 = 1.0;
    C(0, 0) = 1.0;
    for (int i = 1; i < nd; ++i) {
        double c2 = 1.0;
        int mn = std::min(i, m);
        for (int j = 0; j < i; ++j) {
            double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    C(i, k) = c1 * (k * C(i - 1, k - 1) - (xs[i - 1] - x0) * C(i - 1, k)) / c2;
                C(i, 0) = -c1 * (xs[i - 1] - x0) * C(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k)
                C(j, k) = ((xs[i] - x0) * C(j, k) - k * C(j, k - 1)) / c3;
            C(j, 0) = (xs[i] - x0) * C(j, 0) / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(nd);
    for (int i = 0; i < nd; ++i) w[i] = C(i, m);
    return w;
}

namespace {

struct StencilSet {
    // rows: weights at offsets {0..4}/{-1..3}/{-2..2} for d1,
    //       offsets {0..5}/{-1..4}/{-2..2} for d2 (ends mirrored)
    std::array<double, 5> d1_edge0, d1_edge1, d1_center;
    std::array<double, 6> d2_edge0, d2_edge1;
    std::array<double, 5> d2_center;
};

const StencilSet& stencils() {
    static const StencilSet s = [] {
        StencilSet t;
        auto fill = [](auto& dst, double x0, int first, int m) {
            std::vector<double> xs(dst.size());
            for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = first + static_cast<double>(i);
            auto w = fd_weights(x0, xs, m);
            std::copy(w.begin(), w.end(), dst.begin());
        };
        fill(t.d1_edge0, 0.0, 0, 1);
        fill(t.d1_edge1, 0.0, -1, 1);
        fill(t.d1_center, 0.0, -2, 1);
        fill(t.d2_edge0, 0.0, 0, 2);
        fill(t.d2_edge1, 0.0, -1, 2);
        fill(t.d2_center, 0.0, -2, 2);
        return t;
    }();
    return s;
}

template <std::size_t K>
double apply(const std::array<double, K>& w, const double* y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < K; ++i) acc += w[i] * y[i];
    return acc;
}

}  // namespace

std::vector<double> deriv1(std::span<const double> y, double dx) {
    const std::size_t n = y.size();
    if (n < 7) throw GridTooCoarse("deriv1 needs at least 7 nodes");
    const auto& s = stencils();
    std::vector<double> out(n);
    out[0] = apply(s.d1_edge0, &y[0]);
    out[1] = apply(s.d1_edge1, &y[0]);
    for (std::size_t m = 2; m + 2 < n; ++m) out[m] = apply(s.d1_center, &y[m - 2]);
    // right end: mirrored stencils pick up a sign for odd derivatives
    out[n - 2] = 0.0;
    out[n - 1] = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        out[n - 2] -= s.d1_edge1[i] * y[n - 1 - i];
        out[n - 1] -= s.d1_edge0[i] * y[n - 1 - i];
    }
    for (auto& v : out) v /= dx;
    return out;
}

std::vector<double> deriv2(std::span<const double> y, double dx) {
    const std::size_t n = y.size();
    if (n < 7) throw GridTooCoarse("deriv2 needs at least 7 nodes");
    const auto& s = stencils();
    std::vector<double> out(n);
    out[0] = apply(s.d2_edge0, &y[0]);
    out[1] = apply(s.d2_edge1, &y[0]);
    for (std::size_t m = 2; m + 2 < n; ++m) out[m] = apply(s.d2_center, &y[m - 2]);
    out[n - 2] = 0.0;
    out[n - 1] = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
        out[n - 2] += s.d2_edge1[i] * y[n - 1 - i];
        out[n - 1] += s.d2_edge0[i] * y[n - 1 - i];
    }
    const double dx2 = dx * dx;
    for (auto& v : out) v /= dx2;
    return out;
}

double simpson(std::span<const double> y, double dx) {
    const std::size_t n = y.size();
    if (n < 3 || n % 2 == 0) throw GridTooCoarse("simpson needs an even number of intervals");
    double acc = y[0] + y[n - 1];
    for (std::size_t m = 1; m + 1 < n; m += 2) acc += 4.0 * y[m];
    for (std::size_t m = 2; m + 1 < n; m += 2) acc += 2.0 * y[m];
    return acc * dx / 3.0;
}

double interp_cubic(std::span<const double> y, double dx, double x) {
    const std::size_t n = y.size();
    if (n < 4) throw GridTooCoarse("interp_cubic needs at least 4 nodes");
    double u = x / dx;
    auto cell = static_cast<long>(std::floor(u));
    cell = std::clamp(cell, 0L, static_cast<long>(n) - 2);
    double s = u - static_cast<double>(cell);
    if (s == 0.0) return y[cell];  // exact node hit
    // quadratic-extrapolation ghosts beyond the ends
    double p0 = (cell >= 1) ? y[cell - 1] : 3.0 * y[0] - 3.0 * y[1] + y[2];
    double p1 = y[cell];
    double p2 = y[cell + 1];
    double p3 = (cell + 2 < static_cast<long>(n)) ? y[cell + 2]
                                                  : 3.0 * y[n - 1] - 3.0 * y[n - 2] + y[n - 3];
    return 0.5 * (2.0 * p1 + s * (p2 - p0) +
                  s * s * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) +
                  s * s * s * (3.0 * (p1 - p2) + p3 - p0));
}

double interp_quintic(std::span<const double> y, double dx, double x) {
    const std::size_t n = y.size();
    if (n < 6) throw GridTooCoarse("interp_quintic needs at least 6 nodes");
    double u = x / dx;
    auto cell = static_cast<long>(std::floor(u));
    cell = std::clamp(cell, 0L, static_cast<long>(n) - 2);
    if (u - static_cast<double>(cell) == 0.0) return y[cell];
    long w0 = std::clamp(cell - 2, 0L, static_cast<long>(n) - 6);
    // Lagrange basis on the 6-node window
    double acc = 0.0;
    for (long i = 0; i < 6; ++i) {
        double li = 1.0;
        for (long j = 0; j < 6; ++j) {
            if (j == i) continue;
            li *= (u - static_cast<double>(w0 + j)) / static_cast<double>(i - j);
        }
        acc += li * y[w0 + i];
    }
    return acc;
}

std::array<double, 3> dt_weights(double t0, double t1, double t2) {
    const std::array<double, 3> xs{t0, t1, t2};
    auto w = fd_weights(t1, xs, 1);
    return {w[0], w[1], w[2]};
}

}  // namespace symflow
