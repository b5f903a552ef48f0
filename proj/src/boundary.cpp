#include "symflow/boundary.hpp"

#include <cmath>

namespace symflow {

BCSpec BCSpec::totally_geodesic(int n) {
    BCSpec bc;
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < n; ++i) bc.F[j].push_back(Expr::constant(0.0));
    return bc;
}

BCSpec BCSpec::shen(const Expr& lambda, int n) {
    BCSpec bc;
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < n; ++i)
            bc.F[j].push_back(lambda * Expr::variable("u" + std::to_string(i + 1)));
    return bc;
}

std::vector<double> BCSpec::eval(int j, double t, std::span<const double> u) const {
    Bindings env;
    env.set("t", t);
    for (std::size_t i = 0; i < u.size(); ++i) env.set("u" + std::to_string(i + 1), u[i]);
    std::vector<double> out(F[j].size());
    for (std::size_t i = 0; i < F[j].size(); ++i) out[i] = F[j][i].eval(env);
    return out;
}

double InitialProfiles::eval_h(double r) const {
    Bindings env;
    env.set("r", r);
    return h.eval(env);
}

double InitialProfiles::eval_f(int i, double r) const {
    Bindings env;
    env.set("r", r);
    return f[i].eval(env);
}

FlowState InitialProfiles::sample(int N) const {
    FlowState s;
    s.N = N;
    s.t = 0.0;
    s.h.resize(N + 1);
    s.f.assign(n(), std::vector<double>(N + 1));
    for (int m = 0; m <= N; ++m) {
        const double r = static_cast<double>(m) / N;
        s.h[m] = eval_h(r);
        for (int i = 0; i < n(); ++i) s.f[i][m] = eval_f(i, r);
    }
    s.validate();
    return s;
}

std::vector<std::vector<double>> check_compatibility(const BCSpec& bc,
                                                     const InitialProfiles& init) {
    const int n = init.n();
    if (bc.n() != n)
        throw Error("boundary map has " + std::to_string(bc.n()) + " components but " +
                    std::to_string(n) + " fiber fields were given");
    std::vector<std::vector<double>> res(2, std::vector<double>(n));
    for (int j = 0; j < 2; ++j) {
        const double r = static_cast<double>(j);
        const double sign = (j == 0) ? -1.0 : 1.0;
        const double hj = init.eval_h(r);
        std::vector<double> u(n);
        for (int i = 0; i < n; ++i) {
            const double fi = init.eval_f(i, r);
            u[i] = fi * fi;
        }
        auto Fj = bc.eval(j, 0.0, u);
        for (int i = 0; i < n; ++i) {
            Bindings env;
            env.set("r", r);
            const double fir = init.f[i].diff("r").eval(env);
            res[j][i] = fir - sign * hj * Fj[i] / init.eval_f(i, r);
        }
    }
    return res;
}

bool compatible(const std::vector<std::vector<double>>& residuals, double tol) {
    for (const auto& row : residuals)
        for (double v : row)
            if (!(std::abs(v) < tol)) return false;
    return true;
}

}  // namespace symflow
