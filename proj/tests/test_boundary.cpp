#include "doctest.h"

#include <cmath>
#include <vector>

#include "symflow/boundary.hpp"

using namespace symflow;

TEST_SUITE("boundary") {

TEST_CASE("totally geodesic preset is identically zero") {
    BCSpec bc = BCSpec::totally_geodesic(3);
    CHECK(bc.n() == 3);
    const double u[] = {1.0, 4.0, 9.0};
    for (int j = 0; j < 2; ++j)
        for (double t : {0.0, 0.5})
            for (double v : bc.eval(j, t, u)) CHECK(v == 0.0);
}

TEST_CASE("shen preset scales each squared fiber") {
    Expr lambda = parse_expr("0.2*(1+t)", {"t"});
    BCSpec bc = BCSpec::shen(lambda, 2);
    const double u[] = {4.0, 9.0};
    auto v = bc.eval(1, 0.5, u);
    CHECK(v[0] == doctest::Approx(0.3 * 4.0).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(0.3 * 9.0).epsilon(1e-14));
    // both ends carry the same map
    auto w = bc.eval(0, 0.5, u);
    CHECK(w[0] == doctest::Approx(v[0]).epsilon(1e-14));
}

TEST_CASE("general maps evaluate in t and u") {
    BCSpec bc;
    std::vector<std::string> vars = {"t", "u1"};
    bc.F[0].push_back(parse_expr("t*u1", vars));
    bc.F[1].push_back(parse_expr("u1^2-1", vars));
    const double u[] = {3.0};
    CHECK(bc.eval(0, 2.0, u)[0] == doctest::Approx(6.0));
    CHECK(bc.eval(1, 2.0, u)[0] == doctest::Approx(8.0));
}

TEST_CASE("zero-map residual picks up the full initial slope") {
    // f = 1 + r against F = 0: the residual is f_r(j) = 1 at both ends
    InitialProfiles init;
    init.h = parse_expr("1", {"r"});
    init.f.push_back(parse_expr("1+r", {"r"}));
    auto res = check_compatibility(BCSpec::totally_geodesic(1), init);
    CHECK(res[0][0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(res[1][0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(!compatible(res));
}

TEST_CASE("cosine bumps are compatible with the geodesic condition") {
    InitialProfiles init;
    init.h = parse_expr("1", {"r"});
    init.f.push_back(parse_expr("1+0.05*cos(3.141592653589793*r)", {"r"}));
    auto res = check_compatibility(BCSpec::totally_geodesic(1), init);
    for (int j = 0; j < 2; ++j) CHECK(std::abs(res[j][0]) < 1e-14);
    CHECK(compatible(res));
}

TEST_CASE("hyperbolic-cosine profile matches its shen constant exactly") {
    // f = cosh(a(r-1/2)) satisfies f_r = (-1)^(j+1) lambda f at both ends for
    // lambda = a tanh(a/2); written in exp form with a = 0.3
    InitialProfiles init;
    init.h = parse_expr("1", {"r"});
    init.f.push_back(parse_expr("0.5*(exp(0.3*(r-0.5)) + exp(-0.3*(r-0.5)))", {"r"}));
    Expr lambda = parse_expr("0.3*(exp(0.3)-1)/(exp(0.3)+1)", {"t"});
    auto res = check_compatibility(BCSpec::shen(lambda, 1), init);
    for (int j = 0; j < 2; ++j) CHECK(std::abs(res[j][0]) < 1e-14);
    CHECK(compatible(res));

    // and a wrong sign is caught
    auto bad = check_compatibility(BCSpec::shen(-lambda, 1), init);
    CHECK(!compatible(bad));
}

TEST_CASE("compatibility only sees the maps at t = 0") {
    // adding terms with a factor of t cannot move the initial residual
    InitialProfiles init;
    init.h = parse_expr("1+0.1*r", {"r"});
    init.f.push_back(parse_expr("1.2+0.3*r", {"r"}));
    std::vector<std::string> vars = {"t", "u1"};

    BCSpec plain, dressed;
    for (int j = 0; j < 2; ++j) {
        plain.F[j].push_back(parse_expr("0.25*u1", vars));
        dressed.F[j].push_back(parse_expr("0.25*u1 + t*sin(u1) - t^2*u1", vars));
    }
    auto a = check_compatibility(plain, init);
    auto b = check_compatibility(dressed, init);
    for (int j = 0; j < 2; ++j) CHECK(a[j][0] == b[j][0]);  // bit for bit
}

TEST_CASE("compatibility tolerance boundary") {
    std::vector<std::vector<double>> res = {{0.0}, {0.5e-10}};
    CHECK(compatible(res));
    res[1][0] = 2e-10;
    CHECK(!compatible(res));
    CHECK(compatible(res, 1e-9));
}

TEST_CASE("arity mismatches are rejected") {
    InitialProfiles init;
    init.h = parse_expr("1", {"r"});
    init.f.push_back(parse_expr("1", {"r"}));
    CHECK_THROWS_AS(check_compatibility(BCSpec::totally_geodesic(2), init), Error);
}

TEST_CASE("profile sampling validates positivity") {
    InitialProfiles init;
    init.h = parse_expr("1", {"r"});
    init.f.push_back(parse_expr("r-0.5", {"r"}));  // vanishes mid-interval
    CHECK_THROWS_AS(init.sample(16), PositivityLost);

    init.f[0] = parse_expr("2-r", {"r"});
    FlowState s = init.sample(16);
    CHECK(s.N == 16);
    CHECK(s.f[0][0] == doctest::Approx(2.0));
    CHECK(s.f[0][16] == doctest::Approx(1.0));
    CHECK(s.t == 0.0);
}

}  // TEST_SUITE
