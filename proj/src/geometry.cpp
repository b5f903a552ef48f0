#include "symflow/geometry.hpp"

#include <cmath>

#include "symflow/grid.hpp"

namespace symflow {

void FlowState::validate() const {
    if (N < 8) throw GridTooCoarse("flow state needs N >= 8 (got " + std::to_string(N) + ")");
    if (h.size() != static_cast<std::size_t>(N) + 1)
        throw Error("flow state: h has wrong length");
    for (const auto& fi : f)
        if (fi.size() != static_cast<std::size_t>(N) + 1)
            throw Error("flow state: fiber field has wrong length");
    for (double v : h)
        if (!(v > 0.0)) throw PositivityLost("flow state: h not positive", t);
    for (const auto& fi : f)
        for (double v : fi)
            if (!(v > 0.0)) throw PositivityLost("flow state: fiber scale not positive", t);
}

namespace {

void require_match(const FlowState& s, const HomogeneousSpaceData& space) {
    s.validate();
    if (s.n() != space.n())
        throw Error("state has " + std::to_string(s.n()) + " fiber fields but the space has " +
                    std::to_string(space.n()) + " summands");
}

}  // namespace

CurvatureField ricci(const FlowState& s, const HomogeneousSpaceData& space) {
    require_match(s, space);
    const int n = s.n(), N = s.N;
    const double dr = s.dr();

    auto h_r = deriv1(s.h, dr);
    std::vector<std::vector<double>> f_r(n), f_rr(n);
    for (int i = 0; i < n; ++i) {
        f_r[i] = deriv1(s.f[i], dr);
        f_rr[i] = deriv2(s.f[i], dr);
    }

    CurvatureField out;
    out.zeta.resize(N + 1);
    out.ric_coeff.assign(n, std::vector<double>(N + 1));
    out.scalar.resize(N + 1);

    for (int m = 0; m <= N; ++m) {
        const double h = s.h[m], hr = h_r[m];
        double zeta = 0.0;
        double trace_fr = 0.0;  // sum_k d_k f_kr / (h f_k)
        for (int k = 0; k < n; ++k) {
            zeta -= space.dims[k] * (f_rr[k][m] / s.f[k][m] -
                                     hr * f_r[k][m] / (h * s.f[k][m]));
            trace_fr += space.dims[k] * f_r[k][m] / (h * s.f[k][m]);
        }
        out.zeta[m] = zeta;

        double scalar = zeta / (h * h);
        for (int i = 0; i < n; ++i) {
            const double fi = s.f[i][m], fir = f_r[i][m], firr = f_rr[i][m];
            double alg = 0.5 * space.beta[i];
            const double fi4 = fi * fi * fi * fi;
            for (int k = 0; k < n; ++k) {
                const double fk = s.f[k][m];
                const double fk2 = fk * fk;
                for (int l = 0; l < n; ++l) {
                    const double fl = s.f[l][m];
                    alg += space.gamma_at(i, k, l) * (fi4 - 2.0 * fk2 * fk2) /
                           (4.0 * fk2 * fl * fl);
                }
            }
            double ric = alg - fi * fir / h * trace_fr + fir * fir / (h * h) -
                         fi * firr / (h * h) + fi * hr * fir / (h * h * h);
            out.ric_coeff[i][m] = ric;
            scalar += space.dims[i] * ric / (fi * fi);
        }
        out.scalar[m] = scalar;
    }
    return out;
}

BoundaryGeometry boundary_geometry(const FlowState& s, const HomogeneousSpaceData& space, int j) {
    require_match(s, space);
    if (j != 0 && j != 1) throw Error("boundary index must be 0 or 1");
    const int n = s.n();
    const int m = (j == 0) ? 0 : s.N;
    const double sign = (j == 0) ? -1.0 : 1.0;  // outward normal is -d_r at r=0
    const double dr = s.dr();

    BoundaryGeometry out;
    out.ii_coeff.resize(n);
    for (int i = 0; i < n; ++i) {
        auto f_r = deriv1(s.f[i], dr);
        const double fi = s.f[i][m];
        out.ii_coeff[i] = sign * fi * f_r[m] / s.h[m];
        out.mean_curvature += space.dims[i] * out.ii_coeff[i] / (fi * fi);
    }
    return out;
}

VolumeElement volume_element(const FlowState& s, const HomogeneousSpaceData& space) {
    require_match(s, space);
    VolumeElement out;
    out.w.resize(s.N + 1);
    for (int m = 0; m <= s.N; ++m) {
        double w = s.h[m];
        for (int k = 0; k < s.n(); ++k)
            w *= std::pow(s.f[k][m], space.dims[k]);
        out.w[m] = w;
    }
    for (int j = 0; j < 2; ++j) {
        const int m = (j == 0) ? 0 : s.N;
        double wb = 1.0;
        for (int k = 0; k < s.n(); ++k)
            wb *= std::pow(s.f[k][m], space.dims[k]);
        out.wb[j] = wb;
    }
    return out;
}

double f_functional(const FlowState& s, const PotentialField& p,
                    const HomogeneousSpaceData& space) {
    require_match(s, space);
    if (p.p.size() != static_cast<std::size_t>(s.N) + 1)
        throw Error("potential field has wrong length");
    if (s.N % 2 != 0)
        throw GridTooCoarse("f_functional needs even N for Simpson quadrature");

    auto curv = ricci(s, space);
    auto vol = volume_element(s, space);
    auto p_r = deriv1(p.p, s.dr());
    std::vector<double> integrand(s.N + 1);
    for (int m = 0; m <= s.N; ++m) {
        const double grad2 = p_r[m] * p_r[m] / (s.h[m] * s.h[m]);
        integrand[m] = (curv.scalar[m] + grad2) * std::exp(-p.p[m]) * vol.w[m];
    }
    return simpson(integrand, s.dr());
}

RicciPlusHess ricci_plus_hess(const FlowState& s, const PotentialField& p,
                              const HomogeneousSpaceData& space) {
    require_match(s, space);
    if (p.p.size() != static_cast<std::size_t>(s.N) + 1)
        throw Error("potential field has wrong length");
    const int n = s.n(), N = s.N;
    const double dr = s.dr();

    auto curv = ricci(s, space);
    auto h_r = deriv1(s.h, dr);
    auto p_r = deriv1(p.p, dr);
    auto p_rr = deriv2(p.p, dr);
    std::vector<std::vector<double>> f_r(n);
    for (int i = 0; i < n; ++i) f_r[i] = deriv1(s.f[i], dr);

    RicciPlusHess out;
    out.rr.resize(N + 1);
    out.coeff.assign(n, std::vector<double>(N + 1));
    out.normsq.resize(N + 1);
    for (int m = 0; m <= N; ++m) {
        const double h = s.h[m], h2 = h * h;
        out.rr[m] = curv.zeta[m] + p_rr[m] - h_r[m] * p_r[m] / h;
        double nsq = (out.rr[m] / h2) * (out.rr[m] / h2);
        for (int i = 0; i < n; ++i) {
            const double fi = s.f[i][m];
            out.coeff[i][m] = curv.ric_coeff[i][m] + fi * f_r[i][m] * p_r[m] / h2;
            const double per_q = out.coeff[i][m] / (fi * fi);
            nsq += space.dims[i] * per_q * per_q;
        }
        out.normsq[m] = nsq;
    }
    return out;
}

}  // namespace symflow
