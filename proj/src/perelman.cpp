#include "symflow/perelman.hpp"

#include <algorithm>
#include <cmath>

#include "symflow/grid.hpp"

namespace symflow {

namespace {

const std::vector<FlowState>& recovered_states(const Trajectory& traj) {
    if (!traj.has_gauge())
        throw Error("this stage needs the gauge-recovered trajectory");
    if (traj.recovered.size() < 3) throw Error("trajectory has too few snapshots");
    return traj.recovered;
}

// time-derivative weights at snapshot k: centered inside, one-sided 3-point
// at the first and last stored times
std::array<double, 3> time_weights(const std::vector<double>& times, std::size_t k,
                                   std::size_t& base) {
    const std::size_t K = times.size();
    if (k == 0) base = 0;
    else if (k == K - 1) base = K - 3;
    else base = k - 1;
    const std::array<double, 3> xs{times[base], times[base + 1], times[base + 2]};
    auto w = fd_weights(times[k], xs, 1);
    return {w[0], w[1], w[2]};
}

}  // namespace

ScalarComparison scalar_from_flow(const Trajectory& traj, const HomogeneousSpaceData& space) {
    const auto& st = recovered_states(traj);
    const std::size_t K = st.size();
    const int N = st[0].N;
    const int n = st[0].n();

    ScalarComparison out;
    out.times = traj.times;
    out.from_flow.assign(K, std::vector<double>(N + 1));
    out.spatial.assign(K, std::vector<double>(N + 1));
    for (std::size_t k = 0; k < K; ++k) {
        std::size_t base;
        auto w = time_weights(traj.times, k, base);
        auto curv = ricci(st[k], space);
        for (int m = 0; m <= N; ++m) {
            double h_t = 0.0;
            for (int a = 0; a < 3; ++a) h_t += w[a] * st[base + a].h[m];
            double val = -h_t / st[k].h[m];
            for (int i = 0; i < n; ++i) {
                double f_t = 0.0;
                for (int a = 0; a < 3; ++a) f_t += w[a] * st[base + a].f[i][m];
                val -= space.dims[i] * f_t / st[k].f[i][m];
            }
            out.from_flow[k][m] = val;
            out.spatial[k][m] = curv.scalar[m];
            out.max_discrepancy =
                std::max(out.max_discrepancy, std::abs(val - curv.scalar[m]));
        }
    }
    return out;
}

// ===================================================== conjugate heat ====

std::vector<std::vector<double>> solve_backward_p(const Trajectory& traj,
                                                  const HomogeneousSpaceData& space,
                                                  double cfl) {
    const auto& st = recovered_states(traj);
    const std::size_t K = st.size();
    const int N = st[0].N;
    const int n = st[0].n();
    const double dr = st[0].dr();
    if (!(cfl > 0.0) || cfl > 0.5) throw Error("cfl must lie in (0, 0.5]");

    // Reversed in time (s = T - t) the equation reads
    //   q_s = A q_rr + B q_r + C q,
    //   A = 1/h^2,  B = (-h_r/h + sum_k d_k f_kr/f_k)/h^2,  C = -R,
    // with coefficients frozen per snapshot and blended linearly in between.
    // R is the spatial-trace scalar so no time differencing enters the
    // coefficients.
    std::vector<std::vector<double>> A(K), B(K), C(K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& s = st[k];
        auto h_r = deriv1(s.h, dr);
        std::vector<std::vector<double>> f_r(n);
        for (int i = 0; i < n; ++i) f_r[i] = deriv1(s.f[i], dr);
        auto curv = ricci(s, space);
        A[k].resize(N + 1);
        B[k].resize(N + 1);
        C[k].resize(N + 1);
        for (int m = 0; m <= N; ++m) {
            const double h2 = s.h[m] * s.h[m];
            double drift = -h_r[m] / s.h[m];
            for (int i = 0; i < n; ++i)
                drift += space.dims[i] * f_r[i][m] / s.f[i][m];
            A[k][m] = 1.0 / h2;
            B[k][m] = drift / h2;
            C[k][m] = -curv.scalar[m];
        }
    }

    const double T = traj.times.back();
    auto rhs = [&](const std::vector<double>& q, std::size_t k, double theta,
                   std::vector<double>& out) {
        // Neumann ghosts: mirrored values make the centered end derivative zero
        auto at = [&](const std::vector<double>& a, const std::vector<double>& b, int m) {
            return (1.0 - theta) * a[m] + theta * b[m];
        };
        const double i12dr = 1.0 / (12.0 * dr);
        const double i12dr2 = 1.0 / (12.0 * dr * dr);
        auto val = [&](int m) {
            if (m < 0) return q[-m];
            if (m > N) return q[2 * N - m];
            return q[m];
        };
        for (int m = 0; m <= N; ++m) {
            double d1, d2;
            if (m == 0 || m == N) {
                d1 = 0.0;
                d2 = (val(m - 1) - 2.0 * q[m] + val(m + 1)) / (dr * dr);
            } else {
                d1 = (val(m - 2) - 8.0 * val(m - 1) + 8.0 * val(m + 1) - val(m + 2)) * i12dr;
                d2 = (-val(m - 2) + 16.0 * val(m - 1) - 30.0 * q[m] + 16.0 * val(m + 1) -
                      val(m + 2)) * i12dr2;
            }
            out[m] = at(A[k], A[k + 1], m) * d2 + at(B[k], B[k + 1], m) * d1 +
                     at(C[k], C[k + 1], m) * q[m];
        }
    };

    std::vector<std::vector<double>> ptilde(K);
    std::vector<double> q(N + 1, 1.0);
    ptilde[K - 1] = q;  // terminal condition, exactly one

    std::vector<double> k1(N + 1), k2(N + 1), k3(N + 1), k4(N + 1), tmp(N + 1);
    // walk s from 0 to T, storing at the snapshot times (reversed)
    for (std::size_t j = K - 1; j > 0; --j) {
        const double s0 = T - traj.times[j];       // current s
        const double s1 = T - traj.times[j - 1];   // next store point
        // the coefficient interval in t is [t_{j-1}, t_j]
        const std::size_t k = j - 1;
        const double span = traj.times[j] - traj.times[k];
        double hmin2 = st[j].h[0] * st[j].h[0];
        for (double v : st[j].h) hmin2 = std::min(hmin2, v * v);
        for (double v : st[k].h) hmin2 = std::min(hmin2, v * v);
        double s = s0;
        while (s < s1) {
            double ds = cfl * hmin2 * dr * dr;
            if (s + ds >= s1) ds = s1 - s;
            // theta measures position in t between snapshots k and k+1
            auto theta_of = [&](double ss) {
                return std::clamp((T - ss - traj.times[k]) / span, 0.0, 1.0);
            };
            const double th0 = theta_of(s);
            const double thh = theta_of(s + 0.5 * ds);
            const double th1 = theta_of(s + ds);
            rhs(q, k, th0, k1);
            for (int m = 0; m <= N; ++m) tmp[m] = q[m] + 0.5 * ds * k1[m];
            rhs(tmp, k, thh, k2);
            for (int m = 0; m <= N; ++m) tmp[m] = q[m] + 0.5 * ds * k2[m];
            rhs(tmp, k, thh, k3);
            for (int m = 0; m <= N; ++m) tmp[m] = q[m] + ds * k3[m];
            rhs(tmp, k, th1, k4);
            for (int m = 0; m <= N; ++m)
                q[m] += ds / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m]);
            s = (s + ds >= s1) ? s1 : (s + ds);
            for (double v : q)
                if (!(v > 0.0))
                    throw PositivityLost("conjugate-heat solution lost positivity", T - s);
        }
        ptilde[j - 1] = q;
    }
    return ptilde;
}

// ======================================================== reparametrize ====

std::vector<std::vector<double>> solve_psi(const Trajectory& traj,
                                           const std::vector<std::vector<double>>& ptilde) {
    const auto& st = recovered_states(traj);
    const std::size_t K = st.size();
    if (ptilde.size() != K) throw Error("potential and trajectory snapshot counts differ");
    const int N = st[0].N;
    const double dr = st[0].dr();

    // nodal derivative tables; the ends are exactly zero by the Neumann law,
    // which keeps the endpoint ODE values at zero and psi(j, t) = j
    std::vector<std::vector<double>> dp(K);
    for (std::size_t k = 0; k < K; ++k) {
        dp[k] = deriv1(ptilde[k], dr);
        dp[k].front() = 0.0;
        dp[k].back() = 0.0;
    }

    auto rhs = [&](double rho, std::size_t k, double theta) {
        auto at = [&](const std::vector<double>& a, const std::vector<double>& b) {
            return (1.0 - theta) * interp_cubic(a, dr, rho) + theta * interp_cubic(b, dr, rho);
        };
        const double h = at(st[k].h, st[k + 1].h);
        const double p = at(ptilde[k], ptilde[k + 1]);
        const double dpv = at(dp[k], dp[k + 1]);
        if (!(p > 0.0))
            throw PositivityLost("conjugate-heat solution vanished under interpolation",
                                 traj.times[k]);
        return dpv / (h * h * p);
    };

    std::vector<std::vector<double>> psi(K, std::vector<double>(N + 1));
    for (int m = 0; m <= N; ++m) psi[0][m] = static_cast<double>(m) / N;
    std::vector<double> cur = psi[0];
    for (std::size_t k = 0; k + 1 < K; ++k) {
        const double dt = traj.times[k + 1] - traj.times[k];
        for (int m = 0; m <= N; ++m) {
            const double x = cur[m];
            const double v1 = rhs(x, k, 0.0);
            const double v2 = rhs(x + 0.5 * dt * v1, k, 0.5);
            const double v3 = rhs(x + 0.5 * dt * v2, k, 0.5);
            const double v4 = rhs(x + dt * v3, k, 1.0);
            cur[m] = x + dt / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4);
        }
        for (int m = 0; m < N; ++m)
            if (!(cur[m + 1] > cur[m]))
                throw GaugeDegenerate("potential reparametrization lost monotonicity at t = " +
                                      std::to_string(traj.times[k + 1]));
        psi[k + 1] = cur;
    }
    return psi;
}

// ============================================================== assembly ====

MRFPair assemble_mrf(const Trajectory& traj, const std::vector<std::vector<double>>& ptilde,
                     const std::vector<std::vector<double>>& psi) {
    const auto& st = recovered_states(traj);
    const std::size_t K = st.size();
    if (ptilde.size() != K || psi.size() != K)
        throw Error("potential, reparametrization, and trajectory snapshot counts differ");
    const int N = st[0].N;
    const int n = st[0].n();
    const double dr = st[0].dr();

    MRFPair pair;
    pair.times = traj.times;
    pair.psi = psi;
    pair.ptilde = ptilde;
    pair.g.resize(K);
    pair.p.resize(K);
    pair.boundary.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        auto psi_r = deriv1(psi[k], dr);
        for (double v : psi_r)
            if (!(v > 0.0))
                throw GaugeDegenerate("potential reparametrization has nonpositive derivative");
        FlowState g;
        g.N = N;
        g.t = traj.times[k];
        g.h.resize(N + 1);
        g.f.assign(n, std::vector<double>(N + 1));
        PotentialField p;
        p.p.resize(N + 1);
        for (int m = 0; m <= N; ++m) {
            const double rho = psi[k][m];
            g.h[m] = psi_r[m] * interp_quintic(st[k].h, dr, rho);
            for (int i = 0; i < n; ++i)
                g.f[i][m] = interp_quintic(st[k].f[i], dr, rho);
            const double pt = interp_quintic(ptilde[k], dr, rho);
            if (!(pt > 0.0))
                throw PositivityLost("conjugate-heat solution vanished under interpolation",
                                     traj.times[k]);
            p.p[m] = -std::log(pt);
        }
        g.validate();
        pair.g[k] = std::move(g);
        pair.p[k] = std::move(p);

        BoundaryDerivatives bd;
        for (int j = 0; j < 2; ++j) {
            const int m = (j == 0) ? 0 : N;
            bd.f_r[j].resize(n);
            for (int i = 0; i < n; ++i)
                bd.f_r[j][i] = traj.recovered_boundary[k].f_r[j][i] * psi_r[m];
            bd.h_r[j] = traj.recovered_boundary[k].h_r[j];  // informational only
        }
        pair.boundary[k] = std::move(bd);
    }
    return pair;
}

// ============================================================== residual ====

MRFResidual mrf_residual(const MRFPair& pair, const HomogeneousSpaceData& space) {
    const std::size_t K = pair.g.size();
    if (K < 3) throw Error("modified-flow residual needs at least three snapshots");
    const int N = pair.g[0].N;
    const int n = pair.g[0].n();
    const double dr = pair.g[0].dr();

    MRFResidual out;
    for (std::size_t k = 1; k + 1 < K; ++k) {
        const auto& s = pair.g[k];
        const auto& p = pair.p[k].p;
        std::size_t base;
        auto wt = time_weights(pair.times, k, base);
        auto curv = ricci(s, space);
        auto h_r = deriv1(s.h, dr);
        auto p_r = deriv1(p, dr);
        auto p_rr = deriv2(p, dr);
        std::vector<std::vector<double>> f_r(n);
        for (int i = 0; i < n; ++i) f_r[i] = deriv1(s.f[i], dr);

        double metric = 0.0, scalar = 0.0;
        for (int m = 2; m + 2 <= N; ++m) {
            const double h = s.h[m], h2 = h * h;
            double h_t = 0.0, p_t = 0.0;
            for (int a = 0; a < 3; ++a) {
                h_t += wt[a] * pair.g[base + a].h[m];
                p_t += wt[a] * pair.p[base + a].p[m];
            }
            // (h^2)_t = -2 (zeta + p_rr - h_r p_r / h), divided through by 2h
            const double res_h =
                h_t + (curv.zeta[m] + p_rr[m] - h_r[m] * p_r[m] / h) / h;
            metric = std::max(metric, std::abs(res_h));
            for (int i = 0; i < n; ++i) {
                double f_t = 0.0;
                for (int a = 0; a < 3; ++a) f_t += wt[a] * pair.g[base + a].f[i][m];
                const double fi = s.f[i][m];
                const double res_f =
                    f_t + (curv.ric_coeff[i][m] + fi * f_r[i][m] * p_r[m] / h2) / fi;
                metric = std::max(metric, std::abs(res_f));
            }
            double lap = (p_rr[m] - h_r[m] * p_r[m] / h) / h2;
            for (int i = 0; i < n; ++i)
                lap += space.dims[i] * f_r[i][m] * p_r[m] / (s.f[i][m] * h2);
            scalar = std::max(scalar, std::abs(p_t + lap + curv.scalar[m]));
        }
        out.times.push_back(pair.times[k]);
        out.metric.push_back(metric);
        out.scalar.push_back(scalar);
        out.max = std::max(out.max, std::max(metric, scalar));
    }
    return out;
}

// ================================================================ report ====

MonotonicityReport monotonicity_report(const MRFPair& pair, const HomogeneousSpaceData& space,
                                       bool strict) {
    const std::size_t K = pair.g.size();
    if (K < 3) throw Error("monotonicity report needs at least three snapshots");
    const int N = pair.g[0].N;
    const int n = pair.g[0].n();

    MonotonicityReport rep;
    rep.times = pair.times;
    rep.F_values.resize(K);
    rep.dF_dt_fd.resize(K);
    rep.dF_dt_formula.resize(K);
    rep.general_formula_rhs.resize(K);
    for (int j = 0; j < 2; ++j) {
        rep.mean_curvature[j].resize(K);
        rep.xi[j].resize(K);
        rep.frak_F[j].resize(K);
    }

    // reference time for the conformal factor: stored time nearest T/2
    const double t_half = pair.times.back() / 2.0;
    std::size_t kref = 0;
    for (std::size_t k = 1; k < K; ++k)
        if (std::abs(pair.times[k] - t_half) < std::abs(pair.times[kref] - t_half)) kref = k;

    std::vector<double> weighted_volume(K);
    // boundary series needed for time derivatives
    std::vector<std::vector<double>> H(2, std::vector<double>(K));
    std::vector<std::vector<double>> hH(2, std::vector<double>(K));
    std::vector<std::vector<double>> logf1(2, std::vector<double>(K));
    std::vector<std::vector<double>> bterm(2, std::vector<double>(K));  // <Ric_b, II> density

    for (std::size_t k = 0; k < K; ++k) {
        const auto& s = pair.g[k];
        const auto& p = pair.p[k];
        rep.F_values[k] = f_functional(s, p, space);
        auto rph = ricci_plus_hess(s, p, space);
        auto vol = volume_element(s, space);
        auto curv = ricci(s, space);
        std::vector<double> integrand(N + 1), weight(N + 1);
        for (int m = 0; m <= N; ++m) {
            const double wexp = std::exp(-p.p[m]) * vol.w[m];
            integrand[m] = 2.0 * rph.normsq[m] * wexp;
            weight[m] = wexp;
        }
        rep.dF_dt_formula[k] = simpson(integrand, s.dr());
        weighted_volume[k] = simpson(weight, s.dr());

        for (int j = 0; j < 2; ++j) {
            const int m = (j == 0) ? 0 : N;
            const double sign = (j == 0) ? -1.0 : 1.0;
            double Hval = 0.0, inner = 0.0;
            for (int i = 0; i < n; ++i) {
                const double fi = s.f[i][m];
                const double ii = sign * fi * pair.boundary[k].f_r[j][i] / s.h[m];
                Hval += space.dims[i] * ii / (fi * fi);
                inner += space.dims[i] * curv.ric_coeff[i][m] * ii / (fi * fi * fi * fi);
            }
            H[j][k] = Hval;
            hH[j][k] = s.h[m] * Hval;
            logf1[j][k] = std::log(s.f[0][m]);
            bterm[j][k] = inner;
            rep.mean_curvature[j][k] = Hval;
            rep.max_abs_H = std::max(rep.max_abs_H, std::abs(Hval));
        }
    }

    for (std::size_t k = 0; k < K; ++k) {
        std::size_t base;
        auto wt = time_weights(pair.times, k, base);
        auto ddt = [&](const std::vector<double>& series) {
            return wt[0] * series[base] + wt[1] * series[base + 1] + wt[2] * series[base + 2];
        };
        rep.dF_dt_fd[k] = ddt(rep.F_values);

        const auto& s = pair.g[k];
        auto curv = ricci(s, space);
        auto p_rr = deriv2(pair.p[k].p, s.dr());
        auto vol = volume_element(s, space);
        double boundary_total = 0.0;
        for (int j = 0; j < 2; ++j) {
            const int m = (j == 0) ? 0 : N;
            const double h = s.h[m], h2 = h * h;
            const double dlogxi = ddt(logf1[j]);
            rep.xi[j][k] = s.f[0][m] / pair.g[kref].f[0][m];
            const double Ht_scaled = ddt(hH[j]) / h;  // (1/h)(hH)_t
            rep.frak_F[j][k] =
                -(curv.zeta[m] / h2 + dlogxi + p_rr[m] / h2) * H[j][k] - Ht_scaled;
            rep.max_abs_frak_F = std::max(rep.max_abs_frak_F, std::abs(rep.frak_F[j][k]));
            boundary_total += 2.0 * vol.wb[j] * std::exp(-pair.p[k].p[m]) *
                              (bterm[j][k] - ddt(H[j]));
        }
        rep.general_formula_rhs[k] = rep.dF_dt_formula[k] + boundary_total;
    }

    auto res = mrf_residual(pair, space);
    rep.residual_max = res.max;

    // F must not decrease beyond what the measured equation residual can
    // account for over one snapshot interval
    double vmax = *std::max_element(weighted_volume.begin(), weighted_volume.end());
    double fmax = 0.0;
    for (double v : rep.F_values) fmax = std::max(fmax, std::abs(v));
    rep.monotone = true;
    double tol_max = 0.0;
    for (std::size_t k = 0; k + 1 < K; ++k) {
        const double dt = pair.times[k + 1] - pair.times[k];
        const double tol = 10.0 * rep.residual_max * dt * vmax + 1e-12 * std::max(1.0, fmax);
        tol_max = std::max(tol_max, tol);
        if (rep.F_values[k + 1] < rep.F_values[k] - tol) {
            rep.monotone = false;
            rep.note = "F decreased by " +
                       std::to_string(rep.F_values[k] - rep.F_values[k + 1]) +
                       " across t = " + std::to_string(pair.times[k]);
        }
    }
    rep.tol_used = tol_max;

    if (strict) {
        if (rep.max_abs_H > 1e-6) {
            rep.hypothesis_violated = true;
            rep.note = "boundary is not totally geodesic (max |H| = " +
                       std::to_string(rep.max_abs_H) + ")";
        }
        // all fiber scales at the boundary must share one conformal factor
        double drift = 0.0;
        for (int j = 0; j < 2; ++j) {
            const int m = (j == 0) ? 0 : N;
            for (std::size_t k = 0; k < K; ++k)
                for (int i = 1; i < n; ++i) {
                    const double ratio = (pair.g[k].f[i][m] / pair.g[kref].f[i][m]) /
                                         (pair.g[k].f[0][m] / pair.g[kref].f[0][m]);
                    drift = std::max(drift, std::abs(ratio - 1.0));
                }
        }
        if (drift > 1e-6) {
            rep.hypothesis_violated = true;
            rep.note = "boundary conformal factors drift apart (max " +
                       std::to_string(drift) + ")";
        }
    }
    return rep;
}

}  // namespace symflow
