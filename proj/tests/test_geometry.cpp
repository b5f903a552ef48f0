#include "doctest.h"

#include <cmath>
#include <vector>

#include "symflow/boundary.hpp"
#include "symflow/geometry.hpp"
#include "symflow/grid.hpp"
#include "symflow/oracle.hpp"

using namespace symflow;

namespace {

HomogeneousSpaceData space(const char* name) {
    return structure_constants(catalog_lookup(name), name);
}

FlowState sample_state(const char* h_src, const char* f_src, int N) {
    InitialProfiles init;
    init.h = parse_expr(h_src, {"r"});
    init.f.push_back(parse_expr(f_src, {"r"}));
    return init.sample(N);
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("round cylinder slabs are Einstein") {
    // h = 1, f = 1 over sphere(k): zeta = 0, fiber coefficient beta/2 = k-1,
    // scalar curvature k(k-1)
    for (int k = 2; k <= 5; ++k) {
        CAPTURE(k);
        auto sp = space(("sphere(" + std::to_string(k) + ")").c_str());
        FlowState s = sample_state("1", "1", 32);
        auto curv = ricci(s, sp);
        for (int m = 0; m <= s.N; ++m) {
            // constant data leaves only rounding noise, amplified by 1/dr^2
            CHECK(std::abs(curv.zeta[m]) < 1e-10);
            CHECK(curv.ric_coeff[0][m] == doctest::Approx(k - 1.0).epsilon(1e-11));
            CHECK(curv.scalar[m] == doctest::Approx(k * (k - 1.0)).epsilon(1e-11));
        }
    }
}

TEST_CASE("fiber scaling of the round slab") {
    // f = c: the algebraic coefficient is scale-free, R = d beta / (2 c^2)
    const double c = 0.8;
    auto sp = space("sphere(3)");
    FlowState s = sample_state("1", "0.8", 32);
    auto curv = ricci(s, sp);
    CHECK(curv.ric_coeff[0][16] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(curv.scalar[16] == doctest::Approx(6.0 / (c * c)).epsilon(1e-12));
}

TEST_CASE("curvature agrees with the classical warped-product formulas") {
    const char* h_src = "1+0.1*r*(1-r)";
    const char* f_src = "1+0.2*sin(3*r)+0.05*r";
    Expr h = parse_expr(h_src, {"r"});
    Expr f = parse_expr(f_src, {"r"});

    auto sp = space("sphere(3)");
    std::vector<double> scales, errs;
    for (int N : {32, 64, 128}) {
        FlowState s = sample_state(h_src, f_src, N);
        auto curv = ricci(s, sp);
        auto ref = warped_ricci_classical(h, f, 3, 2.0, N);
        double worst = 0.0;
        for (int m = 0; m <= N; ++m) {
            worst = std::max(worst, std::abs(curv.zeta[m] - ref.rr[m]));
            worst = std::max(worst, std::abs(curv.ric_coeff[0][m] - ref.fiber[m]));
        }
        scales.push_back(1.0 / N);
        errs.push_back(worst);
    }
    CHECK(errs.back() < 1e-6);
    CHECK(estimate_order(scales, errs) > 3.5);
}

TEST_CASE("scalar curvature is the trace of the reported blocks") {
    // R must equal zeta/h^2 + sum_i d_i ric_i/f_i^2 node by node, with the
    // three-fiber flag manifold exercising the cross terms
    auto sp = space("su3/t2");
    InitialProfiles init;
    init.h = parse_expr("1+0.1*r", {"r"});
    init.f.push_back(parse_expr("1+0.2*r", {"r"}));
    init.f.push_back(parse_expr("1.1-0.1*r+0.05*sin(2*r)", {"r"}));
    init.f.push_back(parse_expr("0.9+0.15*r^2", {"r"}));
    FlowState s = init.sample(32);
    auto curv = ricci(s, sp);
    for (int m = 0; m <= s.N; ++m) {
        double trace = curv.zeta[m] / (s.h[m] * s.h[m]);
        for (int i = 0; i < sp.n(); ++i)
            trace += sp.dims[i] * curv.ric_coeff[i][m] / (s.f[i][m] * s.f[i][m]);
        CHECK(curv.scalar[m] == doctest::Approx(trace).epsilon(1e-13));
    }
}

TEST_CASE("curvature is covariant under rescaling the background metric") {
    // replacing Q by cQ sends beta -> beta/c, gamma -> gamma/c and the same
    // geometry is described by f -> f/sqrt(c); zeta, R, the Ricci endomorphism
    // ric_i/f_i^2, and H are all invariants of that change
    const double c = 2.75;
    for (const char* name : {"sphere(3)", "su3/t2"}) {
        CAPTURE(name);
        auto sp = space(name);
        InitialProfiles init;
        init.h = parse_expr("1+0.2*r", {"r"});
        for (int i = 0; i < sp.n(); ++i)
            init.f.push_back(parse_expr(i % 2 ? "1.1-0.2*r" : "1+0.3*r+0.1*sin(2*r)", {"r"}));
        FlowState s = init.sample(32);

        HomogeneousSpaceData scaled = sp;
        for (auto& b : scaled.beta) b /= c;
        for (auto& g : scaled.gamma) g /= c;
        FlowState sc = s;
        for (auto& fi : sc.f)
            for (auto& v : fi) v /= std::sqrt(c);

        auto a = ricci(s, sp), b = ricci(sc, scaled);
        for (int m = 0; m <= s.N; ++m) {
            // zeta and R see stencil rounding amplified by 1/dr^2; the
            // endomorphism coefficients cancel most of it
            CHECK(std::abs(a.zeta[m] - b.zeta[m]) < 1e-10);
            CHECK(std::abs(a.scalar[m] - b.scalar[m]) < 1e-10);
            for (int i = 0; i < sp.n(); ++i)
                CHECK(std::abs(a.ric_coeff[i][m] / (s.f[i][m] * s.f[i][m]) -
                               b.ric_coeff[i][m] / (sc.f[i][m] * sc.f[i][m])) < 1e-11);
        }
        for (int j = 0; j < 2; ++j)
            CHECK(std::abs(boundary_geometry(s, sp, j).mean_curvature -
                           boundary_geometry(sc, scaled, j).mean_curvature) < 1e-12);
    }
}

TEST_CASE("boundary geometry from polynomial data is exact") {
    // f = 1 + r + r^2, h = 2: the 5-point one-sided stencils differentiate
    // quadratics exactly
    auto sp = space("sphere(2)");
    FlowState s = sample_state("2", "1+r+r^2", 24);

    auto b0 = boundary_geometry(s, sp, 0);
    CHECK(b0.ii_coeff[0] == doctest::Approx(-0.5).epsilon(1e-12));       // -f f_r/h at r=0
    CHECK(b0.mean_curvature == doctest::Approx(-1.0).epsilon(1e-12));    // d ii / f^2

    auto b1 = boundary_geometry(s, sp, 1);
    CHECK(b1.ii_coeff[0] == doctest::Approx(4.5).epsilon(1e-12));        // 3 * 3 / 2
    CHECK(b1.mean_curvature == doctest::Approx(1.0).epsilon(1e-12));     // 2 * 4.5 / 9

    CHECK_THROWS_AS(boundary_geometry(s, sp, 2), Error);
}

TEST_CASE("totally geodesic ends have vanishing mean curvature") {
    // f_r(j) = 0 analytically, so |H| is pure one-sided stencil truncation:
    // bounded at N = 64 and shrinking at 4th order under refinement
    auto sp = space("sphere(2)");
    FlowState coarse = sample_state("1", "1+0.3*cos(3.141592653589793*r)", 64);
    FlowState fine = sample_state("1", "1+0.3*cos(3.141592653589793*r)", 128);
    for (int j = 0; j < 2; ++j) {
        const double hc = boundary_geometry(coarse, sp, j).mean_curvature;
        const double hf = boundary_geometry(fine, sp, j).mean_curvature;
        CHECK(std::abs(hc) < 1e-6);
        CHECK(std::abs(hf) < std::abs(hc) / 8.0);
    }

    // detection is two-sided: constant fibers leave only stencil rounding,
    // any boundary slope shows up at order one
    FlowState flat = sample_state("2", "1.3", 16);
    FlowState sloped = sample_state("1", "1+0.2*r", 16);
    for (int j = 0; j < 2; ++j) {
        auto b = boundary_geometry(flat, sp, j);
        CHECK(std::abs(b.ii_coeff[0]) < 1e-13);
        CHECK(std::abs(b.mean_curvature) < 1e-13);
        CHECK(std::abs(boundary_geometry(sloped, sp, j).ii_coeff[0]) > 0.1);
    }
}

TEST_CASE("volume element") {
    auto sp = space("sphere(3)");
    FlowState s = sample_state("2", "1+r", 16);
    auto vol = volume_element(s, sp);
    for (int m = 0; m <= s.N; ++m) {
        double r = s.r(m);
        CHECK(vol.w[m] == doctest::Approx(2.0 * std::pow(1.0 + r, 3)).epsilon(1e-13));
    }
    CHECK(vol.wb[0] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(vol.wb[1] == doctest::Approx(8.0).epsilon(1e-13));
}

TEST_CASE("functional of the round slab has a closed form") {
    // h = 1, f = c, p = p0: F = (R e^-p0) (c^d) = d beta / 2 e^-p0, independent
    // of the fiber scale for sphere(2)
    auto sp = space("sphere(2)");
    for (double c : {0.8, 1.0, 1.3}) {
        FlowState s = sample_state("1", "1", 32);
        for (auto& v : s.f[0]) v = c;
        PotentialField p;
        p.p.assign(s.N + 1, 0.3);
        CHECK(f_functional(s, p, sp) == doctest::Approx(2.0 * std::exp(-0.3)).epsilon(1e-12));
    }
}

TEST_CASE("functional matches quadrature of the exact integrand") {
    const char* h_src = "1+0.1*r*(1-r)";
    const char* f_src = "1+0.2*sin(3*r)+0.05*r";
    Expr h = parse_expr(h_src, {"r"});
    Expr f = parse_expr(f_src, {"r"});
    const int N = 256;
    const int d = 3;

    auto sp = space("sphere(3)");
    FlowState s = sample_state(h_src, f_src, N);
    PotentialField p;
    p.p.assign(N + 1, 0.0);

    // R w from symbolic derivatives, integrated with the same Simpson rule
    auto ref = warped_ricci_classical(h, f, d, 2.0, N);
    std::vector<double> integrand(N + 1);
    Bindings env;
    for (int m = 0; m <= N; ++m) {
        env.set("r", s.r(m));
        double hv = h.eval(env), fv = f.eval(env);
        double R = ref.rr[m] / (hv * hv) + d * ref.fiber[m] / (fv * fv);
        integrand[m] = R * hv * std::pow(fv, d);
    }
    double want = simpson(integrand, 1.0 / N);
    CHECK(f_functional(s, p, sp) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("ricci plus hessian") {
    auto sp = space("sphere(2)");
    FlowState s = sample_state("1", "1", 32);

    // constant potential: reduces to plain curvature
    PotentialField flat;
    flat.p.assign(s.N + 1, 0.7);
    auto rh = ricci_plus_hess(s, flat, sp);
    for (int m = 0; m <= s.N; ++m) {
        CHECK(std::abs(rh.rr[m]) < 1e-11);
        CHECK(rh.coeff[0][m] == doctest::Approx(1.0).epsilon(1e-11));
        CHECK(rh.normsq[m] == doctest::Approx(2.0).epsilon(1e-10));
    }

    // p = r^2 on the round slab: only the radial Hessian survives
    PotentialField quad;
    quad.p.resize(s.N + 1);
    for (int m = 0; m <= s.N; ++m) quad.p[m] = s.r(m) * s.r(m);
    rh = ricci_plus_hess(s, quad, sp);
    for (int m = 0; m <= s.N; ++m) {
        CHECK(rh.rr[m] == doctest::Approx(2.0).epsilon(1e-11));
        CHECK(rh.coeff[0][m] == doctest::Approx(1.0).epsilon(1e-11));
        CHECK(rh.normsq[m] == doctest::Approx(6.0).epsilon(1e-10));
    }
}

TEST_CASE("state validation") {
    FlowState s = sample_state("1", "1", 16);
    CHECK_NOTHROW(s.validate());

    FlowState coarse = s;
    coarse.N = 4;
    coarse.h.resize(5);
    coarse.f[0].resize(5);
    CHECK_THROWS_AS(coarse.validate(), GridTooCoarse);

    FlowState mismatched = s;
    mismatched.h.pop_back();
    CHECK_THROWS_AS(mismatched.validate(), Error);

    FlowState negative = s;
    negative.f[0][3] = -0.1;
    CHECK_THROWS_AS(negative.validate(), PositivityLost);

    auto flag = space("su3/t2");
    CHECK_THROWS_AS(ricci(s, flag), Error);  // n mismatch caught before any stencil work
}

}  // TEST_SUITE
