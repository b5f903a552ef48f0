#include "symflow/solver.hpp"

#include <algorithm>
#include <cmath>

#include "symflow/grid.hpp"

namespace symflow {

void SolverConfig::validate() const {
    if (N < 8 || N % 2 != 0)
        throw Error("solver needs even N >= 8 (got " + std::to_string(N) + ")");
    if (!(t_end > 0.0)) throw Error("t_end must be positive");
    if (!(cfl > 0.0) || cfl > 0.5) throw Error("cfl must lie in (0, 0.5]");
    if (!(min_scale > 0.0)) throw Error("min_scale must be positive");
    if (snapshot_every < 0) throw Error("snapshot_every must be nonnegative");
    if (snapshot_dt < 0.0) throw Error("snapshot_dt must be nonnegative");
}

// =========================================================== RHS machinery ====

namespace {

// Work buffer with one ghost node per end: node m lives at index m+1.
struct GhostField {
    std::vector<double> u;
    explicit GhostField(int N) : u(N + 3) {}
    double& node(int m) { return u[m + 1]; }
    double node(int m) const { return u[m + 1]; }
};

// Derivatives under the ghost scheme: centered 2nd-order at the boundary
// nodes (where the ghost encodes the Neumann value exactly), centered
// 4th-order everywhere else.
void ghost_derivs(const GhostField& g, int N, double dr, std::vector<double>& d1,
                  std::vector<double>& d2) {
    const auto& u = g.u;
    const double i12dr = 1.0 / (12.0 * dr);
    const double i12dr2 = 1.0 / (12.0 * dr * dr);
    d1[0] = (u[2] - u[0]) / (2.0 * dr);
    d2[0] = (u[0] - 2.0 * u[1] + u[2]) / (dr * dr);
    for (int m = 1; m <= N - 1; ++m) {
        const double* c = &u[m - 1];  // window m-2..m+2
        d1[m] = (c[0] - 8.0 * c[1] + 8.0 * c[3] - c[4]) * i12dr;
        d2[m] = (-c[0] + 16.0 * c[1] - 30.0 * c[2] + 16.0 * c[3] - c[4]) * i12dr2;
    }
    d1[N] = (u[N + 2] - u[N]) / (2.0 * dr);
    d2[N] = (u[N] - 2.0 * u[N + 1] + u[N + 2]) / (dr * dr);
}

}  // namespace

DeturckSystem::DeturckSystem(int N, const HomogeneousSpaceData& space, const BCSpec& bc,
                             const InitialProfiles& init)
    : N_(N), n_(space.n()), dr_(1.0 / N), space_(space), bc_(bc) {
    if (bc.n() != n_ || init.n() != n_)
        throw Error("boundary map, profiles, and space disagree on the number of summands");

    hat_h_.resize(N + 1);
    hat_h_r_.resize(N + 1);
    hat_f_.assign(n_, std::vector<double>(N + 1));
    hat_f_r_.assign(n_, std::vector<double>(N + 1));
    hat_trace_.assign(N + 1, 0.0);
    source_.resize(N + 1);

    Expr h_r = init.h.diff("r");
    std::vector<Expr> f_r(n_);
    for (int i = 0; i < n_; ++i) f_r[i] = init.f[i].diff("r");

    // background vector field: V = hat_h_r/hat_h^2 - sum_k d_k hat_f_kr/(hat_h hat_f_k);
    // the h equation carries -dV/dr, all derivatives exact.  The sign of the
    // sum is forced by the pullback identity: with the gauge ODE's vector
    // field v, the recovered h = phi_r h(phi) satisfies its flow equation iff
    // h_t - (v h)_r has no leftover reference terms, which requires this V.
    Expr V = h_r / (init.h * init.h);
    for (int k = 0; k < n_; ++k)
        V = V - Expr::constant(space.dims[k]) * f_r[k] / (init.h * init.f[k]);
    Expr source = -V.diff("r");

    Bindings env;
    for (int m = 0; m <= N; ++m) {
        env.set("r", static_cast<double>(m) / N);
        hat_h_[m] = init.h.eval(env);
        hat_h_r_[m] = h_r.eval(env);
        for (int i = 0; i < n_; ++i) {
            hat_f_[i][m] = init.f[i].eval(env);
            hat_f_r_[i][m] = f_r[i].eval(env);
            hat_trace_[m] += space.dims[i] * hat_f_r_[i][m] / hat_f_[i][m];
        }
        source_[m] = source.eval(env);
        if (!(hat_h_[m] > 0.0))
            throw Error("reference profile h is not positive on the grid");
        for (int i = 0; i < n_; ++i)
            if (!(hat_f_[i][m] > 0.0))
                throw Error("reference profile f" + std::to_string(i + 1) +
                            " is not positive on the grid");
    }
    for (int j = 0; j < 2; ++j) {
        const int m = (j == 0) ? 0 : N;
        hat_corr_[j] = (hat_h_r_[m] / hat_h_[m] - hat_trace_[m]) / hat_h_[m];
    }
}

BoundaryDerivatives DeturckSystem::boundary_values(const FlowState& s, double t) const {
    BoundaryDerivatives bd;
    for (int j = 0; j < 2; ++j) {
        const int m = (j == 0) ? 0 : N_;
        const double sign = (j == 0) ? -1.0 : 1.0;
        const double h = s.h[m];
        std::vector<double> u(n_);
        for (int i = 0; i < n_; ++i) u[i] = s.f[i][m] * s.f[i][m];
        auto F = bc_.eval(j, t, u);
        double trace = 0.0;  // sum_k d_k F_k / f_k^2
        bd.f_r[j].resize(n_);
        for (int i = 0; i < n_; ++i) {
            bd.f_r[j][i] = sign * h * F[i] / s.f[i][m];
            trace += space_.dims[i] * F[i] / u[i];
        }
        bd.h_r[j] = sign * h * h * trace + h * h * hat_corr_[j];
    }
    return bd;
}

FlowState DeturckSystem::rhs(const FlowState& s, double t) const {
    const int N = N_, n = n_;
    const double dr = dr_;

    auto bd = boundary_values(s, t);
    GhostField gh(N);
    std::vector<GhostField> gf(n, GhostField(N));
    for (int m = 0; m <= N; ++m) {
        gh.node(m) = s.h[m];
        for (int i = 0; i < n; ++i) gf[i].node(m) = s.f[i][m];
    }
    gh.node(-1) = gh.node(1) - 2.0 * dr * bd.h_r[0];
    gh.node(N + 1) = gh.node(N - 1) + 2.0 * dr * bd.h_r[1];
    for (int i = 0; i < n; ++i) {
        gf[i].node(-1) = gf[i].node(1) - 2.0 * dr * bd.f_r[0][i];
        gf[i].node(N + 1) = gf[i].node(N - 1) + 2.0 * dr * bd.f_r[1][i];
    }

    std::vector<double> dh(N + 1), d2h(N + 1);
    ghost_derivs(gh, N, dr, dh, d2h);
    std::vector<std::vector<double>> df(n, std::vector<double>(N + 1));
    std::vector<std::vector<double>> d2f(n, std::vector<double>(N + 1));
    {
        std::vector<double> tmp1(N + 1), tmp2(N + 1);
        for (int i = 0; i < n; ++i) {
            ghost_derivs(gf[i], N, dr, tmp1, tmp2);
            df[i] = tmp1;
            d2f[i] = tmp2;
        }
    }

    FlowState out;
    out.N = N;
    out.t = t;
    out.h.resize(N + 1);
    out.f.assign(n, std::vector<double>(N + 1));
    for (int m = 0; m <= N; ++m) {
        const double h = s.h[m], h2 = h * h, h3 = h2 * h;
        double ht = d2h[m] / h2 - 2.0 * dh[m] * dh[m] / h3 + source_[m];
        for (int k = 0; k < n; ++k) {
            const double fk = s.f[k][m];
            ht += space_.dims[k] * df[k][m] * df[k][m] / (h * fk * fk);
        }
        out.h[m] = ht;

        const double hath = hat_h_[m];
        for (int i = 0; i < n; ++i) {
            const double fi = s.f[i][m], fir = df[i][m];
            const double fi4 = fi * fi * fi * fi;
            double alg = 0.5 * space_.beta[i] / fi;
            for (int k = 0; k < n; ++k) {
                const double fk = s.f[k][m], fk2 = fk * fk;
                for (int l = 0; l < n; ++l) {
                    const double fl = s.f[l][m];
                    alg += space_.gamma_at(i, k, l) * (fi4 - 2.0 * fk2 * fk2) /
                           (4.0 * fi * fk2 * fl * fl);
                }
            }
            out.f[i][m] = d2f[i][m] / h2 - fir * fir / (h2 * fi) - alg -
                          hat_h_r_[m] * fir / (h * hath * hath) +
                          fir * hat_trace_[m] / (h * hath);
        }
    }
    return out;
}

double DeturckSystem::stable_dt(const FlowState& s, double cfl) const {
    double hmin2 = s.h[0] * s.h[0];
    for (double v : s.h) hmin2 = std::min(hmin2, v * v);
    return cfl * hmin2 * dr_ * dr_;
}

namespace {

void axpy_state(const FlowState& base, const FlowState& k, double a, double t, FlowState& out) {
    out.N = base.N;
    out.t = t;
    out.h.resize(base.h.size());
    out.f.assign(base.f.size(), {});
    for (std::size_t m = 0; m < base.h.size(); ++m) out.h[m] = base.h[m] + a * k.h[m];
    for (std::size_t i = 0; i < base.f.size(); ++i) {
        out.f[i].resize(base.f[i].size());
        for (std::size_t m = 0; m < base.f[i].size(); ++m)
            out.f[i][m] = base.f[i][m] + a * k.f[i][m];
    }
}

void check_floor(const FlowState& s, double min_scale, double t) {
    for (double v : s.h)
        if (!(v > min_scale)) throw PositivityLost("h reached the positivity floor", t);
    for (const auto& fi : s.f)
        for (double v : fi)
            if (!(v > min_scale)) throw PositivityLost("fiber scale reached the positivity floor", t);
}

}  // namespace

FlowState DeturckSystem::step(const FlowState& s, double t, double dt, double cfl,
                              double min_scale) const {
    if (dt > stable_dt(s, cfl) * (1.0 + 1e-12))
        throw StabilityBound("time step " + std::to_string(dt) +
                             " exceeds the diffusion stability bound " +
                             std::to_string(stable_dt(s, cfl)));
    FlowState k1 = rhs(s, t);
    FlowState u;
    axpy_state(s, k1, 0.5 * dt, t + 0.5 * dt, u);
    check_floor(u, min_scale, t + 0.5 * dt);
    FlowState k2 = rhs(u, t + 0.5 * dt);
    axpy_state(s, k2, 0.5 * dt, t + 0.5 * dt, u);
    check_floor(u, min_scale, t + 0.5 * dt);
    FlowState k3 = rhs(u, t + 0.5 * dt);
    axpy_state(s, k3, dt, t + dt, u);
    check_floor(u, min_scale, t + dt);
    FlowState k4 = rhs(u, t + dt);

    FlowState out;
    out.N = s.N;
    out.t = t + dt;
    out.h.resize(s.h.size());
    out.f.assign(s.f.size(), {});
    const double w = dt / 6.0;
    for (std::size_t m = 0; m < s.h.size(); ++m)
        out.h[m] = s.h[m] + w * (k1.h[m] + 2.0 * k2.h[m] + 2.0 * k3.h[m] + k4.h[m]);
    for (std::size_t i = 0; i < s.f.size(); ++i) {
        out.f[i].resize(s.f[i].size());
        for (std::size_t m = 0; m < s.f[i].size(); ++m)
            out.f[i][m] = s.f[i][m] +
                          w * (k1.f[i][m] + 2.0 * k2.f[i][m] + 2.0 * k3.f[i][m] + k4.f[i][m]);
    }
    check_floor(out, min_scale, t + dt);
    return out;
}

// ================================================================= solve ====

Trajectory solve(const SolverConfig& cfg, const HomogeneousSpaceData& space, const BCSpec& bc,
                 const InitialProfiles& init) {
    cfg.validate();
    auto residuals = check_compatibility(bc, init);
    if (!compatible(residuals)) {
        double worst = 0.0;
        for (const auto& row : residuals)
            for (double v : row) worst = std::max(worst, std::abs(v));
        throw IncompatibleData(
            "initial profiles do not satisfy the boundary law (worst residual " +
                std::to_string(worst) + ")",
            residuals);
    }

    DeturckSystem sys(cfg.N, space, bc, init);
    FlowState s = init.sample(cfg.N);

    const double snap_dt =
        (cfg.snapshot_every > 0) ? 0.0
                                 : (cfg.snapshot_dt > 0.0 ? cfg.snapshot_dt : cfg.t_end / 200.0);

    Trajectory traj;
    auto record = [&](const FlowState& st, double t) {
        traj.times.push_back(t);
        traj.states.push_back(st);
        traj.boundary.push_back(sys.boundary_values(st, t));
    };
    record(s, 0.0);

    double t = 0.0;
    int snap_index = 1;
    long steps_since_snap = 0;
    while (t < cfg.t_end) {
        double dt = sys.stable_dt(s, cfg.cfl);
        double target = cfg.t_end;
        if (snap_dt > 0.0)
            target = std::min(target, snap_dt * static_cast<double>(snap_index));
        bool hit_target = false;
        if (t + dt >= target) {
            dt = target - t;
            hit_target = true;
        }
        try {
            s = sys.step(s, t, dt, cfg.cfl, cfg.min_scale);
        } catch (const PositivityLost& e) {
            traj.singular = true;
            traj.singular_time = e.time;
            break;
        }
        t = hit_target ? target : (t + dt);
        s.t = t;
        ++steps_since_snap;
        if (snap_dt > 0.0) {
            if (hit_target && target < cfg.t_end + 0.5 * snap_dt) {
                record(s, t);
                if (target >= cfg.t_end) break;
                ++snap_index;
            }
        } else if (steps_since_snap >= cfg.snapshot_every || t >= cfg.t_end) {
            record(s, t);
            steps_since_snap = 0;
        }
        if (t >= cfg.t_end) break;
    }
    return traj;
}

// ============================================================ gauge ODE ====

namespace {

// Per-snapshot coefficient tables for the gauge and potential ODEs.
struct SnapshotTables {
    std::vector<double> h;
    std::vector<std::vector<double>> f;
    std::vector<double> h_r;
    std::vector<std::vector<double>> f_r;
};

SnapshotTables make_tables(const FlowState& s, const BoundaryDerivatives& bd) {
    SnapshotTables t;
    t.h = s.h;
    t.f = s.f;
    t.h_r = deriv1(s.h, s.dr());
    t.h_r.front() = bd.h_r[0];
    t.h_r.back() = bd.h_r[1];
    t.f_r.resize(s.f.size());
    for (std::size_t i = 0; i < s.f.size(); ++i) {
        t.f_r[i] = deriv1(s.f[i], s.dr());
        t.f_r[i].front() = bd.f_r[0][i];
        t.f_r[i].back() = bd.f_r[1][i];
    }
    return t;
}

}  // namespace

void solve_gauge(Trajectory& traj, const HomogeneousSpaceData& space,
                 const InitialProfiles& init) {
    const std::size_t K = traj.states.size();
    if (K < 2) throw Error("gauge recovery needs at least two snapshots");
    const int N = traj.states[0].N;
    const int n = traj.states[0].n();
    const double dr = traj.states[0].dr();

    std::vector<SnapshotTables> tab(K);
    for (std::size_t k = 0; k < K; ++k) tab[k] = make_tables(traj.states[k], traj.boundary[k]);

    Expr hat_h_r = init.h.diff("r");
    std::vector<Expr> hat_f_r(n);
    for (int i = 0; i < n; ++i) hat_f_r[i] = init.f[i].diff("r");

    // minus the radial component of the DeTurck vector field, evaluated at
    // (rho, between snapshots k and k+1 at fraction theta)
    auto rhs = [&](double rho, std::size_t k, double theta) {
        auto at = [&](const std::vector<double>& a, const std::vector<double>& b) {
            return (1.0 - theta) * interp_cubic(a, dr, rho) + theta * interp_cubic(b, dr, rho);
        };
        const double h = at(tab[k].h, tab[k + 1].h);
        const double hr = at(tab[k].h_r, tab[k + 1].h_r);
        Bindings env;
        env.set("r", rho);
        const double hh = init.h.eval(env);
        const double hhr = hat_h_r.eval(env);
        double v = hr / (h * h * h) - hhr / (h * hh * hh);
        for (int i = 0; i < n; ++i) {
            const double fi = at(tab[k].f[i], tab[k + 1].f[i]);
            const double fir = at(tab[k].f_r[i], tab[k + 1].f_r[i]);
            const double hfi = init.f[i].eval(env);
            const double hfir = hat_f_r[i].eval(env);
            v += space.dims[i] * (hfir / (h * hh * hfi) - fir / (h * h * fi));
        }
        return -v;
    };

    traj.phi.assign(K, std::vector<double>(N + 1));
    for (int m = 0; m <= N; ++m) traj.phi[0][m] = static_cast<double>(m) / N;

    std::vector<double> phi = traj.phi[0];
    for (std::size_t k = 0; k + 1 < K; ++k) {
        const double dt = traj.times[k + 1] - traj.times[k];
        for (int m = 0; m <= N; ++m) {
            const double x = phi[m];
            const double v1 = rhs(x, k, 0.0);
            const double v2 = rhs(x + 0.5 * dt * v1, k, 0.5);
            const double v3 = rhs(x + 0.5 * dt * v2, k, 0.5);
            const double v4 = rhs(x + dt * v3, k, 1.0);
            phi[m] = x + dt / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4);
        }
        // the boundary values of the gauge ODE vanish identically; pinning
        // removes the rounding-level drift of the cancellation
        phi[0] = 0.0;
        phi[N] = 1.0;
        for (int m = 0; m < N; ++m)
            if (!(phi[m + 1] > phi[m]))
                throw GaugeDegenerate("gauge diffeomorphism lost monotonicity at t = " +
                                      std::to_string(traj.times[k + 1]));
        traj.phi[k + 1] = phi;
    }

    traj.recovered.resize(K);
    traj.recovered_boundary.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& ph = traj.phi[k];
        auto phi_r = deriv1(ph, dr);
        for (double v : phi_r)
            if (!(v > 0.0))
                throw GaugeDegenerate("gauge diffeomorphism has nonpositive derivative at t = " +
                                      std::to_string(traj.times[k]));
        auto phi_rr = deriv2(ph, dr);
        FlowState g;
        g.N = N;
        g.t = traj.times[k];
        g.h.resize(N + 1);
        g.f.assign(n, std::vector<double>(N + 1));
        for (int m = 0; m <= N; ++m) {
            g.h[m] = phi_r[m] * interp_quintic(tab[k].h, dr, ph[m]);
            for (int i = 0; i < n; ++i)
                g.f[i][m] = interp_quintic(tab[k].f[i], dr, ph[m]);
        }
        g.validate();
        traj.recovered[k] = std::move(g);

        BoundaryDerivatives bd;
        for (int j = 0; j < 2; ++j) {
            const int m = (j == 0) ? 0 : N;
            bd.f_r[j].resize(n);
            for (int i = 0; i < n; ++i)
                bd.f_r[j][i] = traj.boundary[k].f_r[j][i] * phi_r[m];
            bd.h_r[j] = phi_rr[m] * tab[k].h[m] + phi_r[m] * phi_r[m] * traj.boundary[k].h_r[j];
        }
        traj.recovered_boundary[k] = std::move(bd);
    }
}

// ========================================================= flow residual ====

FlowResidual ricci_flow_residual(const Trajectory& traj, const HomogeneousSpaceData& space) {
    if (!traj.has_gauge()) throw Error("flow residual needs the gauge-recovered trajectory");
    const std::size_t K = traj.recovered.size();
    if (K < 3) throw Error("flow residual needs at least three snapshots");
    const int N = traj.recovered[0].N;
    const int n = traj.recovered[0].n();
    const double dr = traj.recovered[0].dr();

    FlowResidual out;
    for (std::size_t k = 1; k + 1 < K; ++k) {
        const auto& s = traj.recovered[k];
        auto wt = dt_weights(traj.times[k - 1], traj.times[k], traj.times[k + 1]);
        auto h_r = deriv1(s.h, dr);
        std::vector<std::vector<double>> f_r(n), f_rr(n);
        for (int i = 0; i < n; ++i) {
            f_r[i] = deriv1(s.f[i], dr);
            f_rr[i] = deriv2(s.f[i], dr);
        }
        double worst = 0.0;
        for (int m = 2; m + 2 <= N; ++m) {
            const double h = s.h[m], h2 = h * h, h3 = h2 * h;
            double h_t = 0.0;
            for (int a = 0; a < 3; ++a) h_t += wt[a] * traj.recovered[k - 1 + a].h[m];
            double lap = 0.0;  // sum_k d_k (f_krr/(h f_k) - h_r f_kr/(h^2 f_k))
            double trace = 0.0;
            for (int kk = 0; kk < n; ++kk) {
                const double fk = s.f[kk][m];
                lap += space.dims[kk] * (f_rr[kk][m] / (h * fk) - h_r[m] * f_r[kk][m] / (h2 * fk));
                trace += space.dims[kk] * f_r[kk][m] / (h * fk);
            }
            worst = std::max(worst, std::abs(h_t - lap));

            for (int i = 0; i < n; ++i) {
                const double fi = s.f[i][m], fir = f_r[i][m];
                double f_t = 0.0;
                for (int a = 0; a < 3; ++a) f_t += wt[a] * traj.recovered[k - 1 + a].f[i][m];
                const double fi4 = fi * fi * fi * fi;
                double alg = 0.5 * space.beta[i] / fi;
                for (int kk = 0; kk < n; ++kk) {
                    const double fk = s.f[kk][m], fk2 = fk * fk;
                    for (int l = 0; l < n; ++l) {
                        const double fl = s.f[l][m];
                        alg += space.gamma_at(i, kk, l) * (fi4 - 2.0 * fk2 * fk2) /
                               (4.0 * fi * fk2 * fl * fl);
                    }
                }
                const double rhs = -alg + fir / h * trace - fir * fir / (h2 * fi) +
                                   f_rr[i][m] / h2 - h_r[m] * fir / h3;
                worst = std::max(worst, std::abs(f_t - rhs));
            }
        }
        out.times.push_back(traj.times[k]);
        out.linf.push_back(worst);
        out.max = std::max(out.max, worst);
    }
    return out;
}

}  // namespace symflow
