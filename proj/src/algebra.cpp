#include "symflow/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace symflow {

int BracketTable::summand_offset(int k) const {
    int off = dim_h;
    for (int i = 0; i < k; ++i) off += summand_dims[i];
    return off;
}

void BracketTable::check(double tol) const {
    const int d = dim_g;
    if (d <= 0 || dim_h < 0 || dim_h >= d)
        throw InvalidBracketTable("bracket table dimensions are inconsistent");
    if (std::accumulate(summand_dims.begin(), summand_dims.end(), 0) != d - dim_h)
        throw InvalidBracketTable("summand dimensions do not fill the complement of h");
    for (int dk : summand_dims)
        if (dk <= 0) throw InvalidBracketTable("empty summand");
    if (c.size() != static_cast<std::size_t>(d) * d * d)
        throw InvalidBracketTable("bracket table has the wrong number of entries");

    double antisym = 0.0, total = 0.0;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int e = 0; e < d; ++e) {
                antisym = std::max(antisym, std::abs(bracket(a, b, e) + bracket(b, a, e)));
                // swapping the bracket slot with the pairing slot flips the
                // sign exactly when Q is ad-invariant
                total = std::max(total, std::abs(bracket(a, b, e) + bracket(e, b, a)));
            }
    if (antisym > tol)
        throw InvalidBracketTable("bracket antisymmetry violated (residual " +
                                  std::to_string(antisym) + ")");
    if (total > tol)
        throw InvalidBracketTable("Q is not ad-invariant (residual " + std::to_string(total) + ")");

    double jacobi = 0.0;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int cc = 0; cc < d; ++cc)
                for (int e = 0; e < d; ++e) {
                    double s = 0.0;
                    for (int x = 0; x < d; ++x)
                        s += bracket(b, cc, x) * bracket(a, x, e) +
                             bracket(cc, a, x) * bracket(b, x, e) +
                             bracket(a, b, x) * bracket(cc, x, e);
                    jacobi = std::max(jacobi, std::abs(s));
                }
    if (jacobi > tol)
        throw InvalidBracketTable("Jacobi identity violated (residual " +
                                  std::to_string(jacobi) + ")");

    // [h, p_k] must stay inside p_k for the summand split to make sense
    double leak = 0.0;
    const int n = n_summands();
    for (int k = 0; k < n; ++k) {
        int off = summand_offset(k), dk = summand_dims[k];
        for (int a = 0; a < dim_h; ++a)
            for (int b = off; b < off + dk; ++b)
                for (int e = 0; e < d; ++e) {
                    if (e >= off && e < off + dk) continue;
                    leak = std::max(leak, std::abs(bracket(a, b, e)));
                }
    }
    if (leak > tol)
        throw InvalidBracketTable("summands are not H-invariant (residual " +
                                  std::to_string(leak) + ")");
}

HomogeneousSpaceData structure_constants(const BracketTable& table, std::string label) {
    const int d = table.dim_g;
    const int n = table.n_summands();

    // Killing form P_ab = tr(ad_a ad_b), with (ad_a)_{e,b} = c_ab^e
    std::vector<double> P(static_cast<std::size_t>(d) * d, 0.0);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            double s = 0.0;
            for (int e = 0; e < d; ++e)
                for (int x = 0; x < d; ++x)
                    s += table.bracket(a, x, e) * table.bracket(b, e, x);
            P[static_cast<std::size_t>(a) * d + b] = s;
        }

    HomogeneousSpaceData out;
    out.label = std::move(label);
    out.dims = table.summand_dims;
    out.beta.resize(n);
    constexpr double kScalarTol = 1e-10;
    for (int k = 0; k < n; ++k) {
        int off = table.summand_offset(k), dk = table.summand_dims[k];
        double trace = 0.0;
        for (int a = off; a < off + dk; ++a) trace += P[static_cast<std::size_t>(a) * d + a];
        double beta = -trace / dk;
        double worst = 0.0;
        for (int a = off; a < off + dk; ++a)
            for (int b = off; b < off + dk; ++b) {
                double want = (a == b) ? -beta : 0.0;
                worst = std::max(worst, std::abs(P[static_cast<std::size_t>(a) * d + b] - want));
            }
        if (worst > kScalarTol)
            throw NonScalarKilling("Killing form is not a multiple of Q on summand " +
                                   std::to_string(k + 1) + " (residual " +
                                   std::to_string(worst) + "); check the summand split");
        out.beta[k] = beta;
    }
    if (*std::max_element(out.beta.begin(), out.beta.end()) <= kScalarTol)
        throw AllBetaZero("every summand has vanishing Killing form; fiber would be flat");

    out.gamma.assign(static_cast<std::size_t>(n) * n * n, 0.0);
    for (int i = 0; i < n; ++i) {
        int oi = table.summand_offset(i), di = table.summand_dims[i];
        for (int k = 0; k < n; ++k) {
            int ok = table.summand_offset(k), dk = table.summand_dims[k];
            for (int l = 0; l < n; ++l) {
                int ol = table.summand_offset(l), dl = table.summand_dims[l];
                double s = 0.0;
                for (int a = oi; a < oi + di; ++a)
                    for (int b = ok; b < ok + dk; ++b)
                        for (int e = ol; e < ol + dl; ++e) {
                            double v = table.bracket(a, b, e);
                            s += v * v;
                        }
                out.gamma[(static_cast<std::size_t>(i) * n + k) * n + l] = s / di;
            }
        }
    }
    return out;
}

int HomogeneousSpaceData::fiber_dim() const {
    return std::accumulate(dims.begin(), dims.end(), 0);
}

IdentityReport validate_identities(const HomogeneousSpaceData& data) {
    IdentityReport rep;
    const int n = data.n();
    auto push = [&rep](std::string what, double res) {
        rep.entries.push_back({std::move(what), res});
        rep.max_residual = std::max(rep.max_residual, res);
    };

    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                double base = data.dims[i] * data.gamma_at(i, k, l);
                double swap_ik = data.dims[k] * data.gamma_at(k, i, l);
                double swap_il = data.dims[l] * data.gamma_at(l, k, i);
                std::string idx = std::to_string(i + 1) + std::to_string(k + 1) +
                                  std::to_string(l + 1);
                push("d_i gamma_" + idx + " symmetric in (i,k)", std::abs(base - swap_ik));
                push("d_i gamma_" + idx + " symmetric in (i,l)", std::abs(base - swap_il));
                push("gamma_" + idx + " nonnegative", std::max(0.0, -data.gamma_at(i, k, l)));
            }
    double beta_max = 0.0;
    for (int k = 0; k < n; ++k) {
        push("beta_" + std::to_string(k + 1) + " nonnegative", std::max(0.0, -data.beta[k]));
        beta_max = std::max(beta_max, data.beta[k]);
    }
    push("some beta positive", beta_max > 1e-10 ? 0.0 : 1.0);
    push("fiber dimension at least 2", data.fiber_dim() >= 2 ? 0.0 : 1.0);
    rep.pass = rep.max_residual < 1e-10;
    return rep;
}

// ======================================================= catalog entries ====

namespace {

using cplx = std::complex<double>;

// Dense square complex matrices, just big enough for the catalog's needs.
struct CMat {
    int n;
    std::vector<cplx> a;
    explicit CMat(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, cplx(0.0)) {}
    cplx& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    cplx at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

CMat commutator(const CMat& x, const CMat& y) {
    CMat z(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) {
            cplx s(0.0);
            for (int k = 0; k < x.n; ++k) s += x.at(i, k) * y.at(k, j) - y.at(i, k) * x.at(k, j);
            z.at(i, j) = s;
        }
    return z;
}

// Q(X, Y) = -(1/2) Re tr(XY); real on anti-Hermitian matrices.
double q_inner(const CMat& x, const CMat& y) {
    cplx tr(0.0);
    for (int i = 0; i < x.n; ++i)
        for (int k = 0; k < x.n; ++k) tr += x.at(i, k) * y.at(k, i);
    return -0.5 * tr.real();
}

BracketTable from_matrix_basis(const std::vector<CMat>& basis, int dim_h,
                               std::vector<int> summand_dims) {
    const int d = static_cast<int>(basis.size());
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            double want = (a == b) ? 1.0 : 0.0;
            if (std::abs(q_inner(basis[a], basis[b]) - want) > 1e-12)
                throw Error("catalog basis is not Q-orthonormal");
        }
    BracketTable t;
    t.dim_g = d;
    t.dim_h = dim_h;
    t.summand_dims = std::move(summand_dims);
    t.c.assign(static_cast<std::size_t>(d) * d * d, 0.0);
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) {
            CMat br = commutator(basis[a], basis[b]);
            for (int e = 0; e < d; ++e) {
                double v = q_inner(br, basis[e]);
                if (std::abs(v) < 1e-14) v = 0.0;
                t.bracket(a, b, e) = v;
                t.bracket(b, a, e) = -v;
            }
        }
    return t;
}

// so(k+1)/so(k): basis E_ij = (e_i e_j^T - e_j e_i^T), Q-orthonormal under
// -(1/2) tr.  H fixes the first coordinate axis; p is spanned by E_0j.
BracketTable make_sphere(int k) {
    const int m = k + 1;
    std::vector<CMat> basis;
    auto E = [m](int i, int j) {
        CMat x(m);
        x.at(i, j) = 1.0;
        x.at(j, i) = -1.0;
        return x;
    };
    for (int i = 1; i < m; ++i)
        for (int j = i + 1; j < m; ++j) basis.push_back(E(i, j));  // h = so(k)
    const int dim_h = static_cast<int>(basis.size());
    for (int j = 1; j < m; ++j) basis.push_back(E(0, j));          // p, one summand
    return from_matrix_basis(basis, dim_h, {k});
}

// su(3)/t^2: h is the diagonal torus, p splits into the three root planes
// spanned by A_ij = E_ij - E_ji and S_ij = i(E_ij + E_ji), each H-irreducible
// with distinct weights.
BracketTable make_su3_t2() {
    const cplx I(0.0, 1.0);
    std::vector<CMat> basis;
    {
        CMat t1(3);
        t1.at(0, 0) = I;
        t1.at(1, 1) = -I;
        basis.push_back(t1);
        CMat t2(3);
        const double s = 1.0 / std::sqrt(3.0);
        t2.at(0, 0) = I * s;
        t2.at(1, 1) = I * s;
        t2.at(2, 2) = -2.0 * I * s;
        basis.push_back(t2);
    }
    auto add_pair = [&basis, I](int i, int j) {
        CMat a(3);
        a.at(i, j) = 1.0;
        a.at(j, i) = -1.0;
        basis.push_back(a);
        CMat s(3);
        s.at(i, j) = I;
        s.at(j, i) = I;
        basis.push_back(s);
    };
    add_pair(0, 1);
    add_pair(0, 2);
    add_pair(1, 2);
    return from_matrix_basis(basis, 2, {2, 2, 2});
}

}  // namespace

BracketTable catalog_lookup(const std::string& name) {
    for (int k = 2; k <= 5; ++k)
        if (name == "sphere(" + std::to_string(k) + ")") return make_sphere(k);
    if (name == "su3/t2") return make_su3_t2();
    throw UnknownSpace("no catalog entry named '" + name + "'");
}

BracketTable load_bracket_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidBracketTable("cannot open bracket table file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidBracketTable("bad JSON in '" + path + "': " + e.what());
    }
    BracketTable t;
    try {
        t.dim_g = j.at("dim_g").get<int>();
        t.dim_h = j.at("dim_h").get<int>();
        t.summand_dims = j.at("summand_dims").get<std::vector<int>>();
        if (t.dim_g <= 0) throw InvalidBracketTable("dim_g must be positive");
        t.c.assign(static_cast<std::size_t>(t.dim_g) * t.dim_g * t.dim_g, 0.0);
        for (const auto& entry : j.at("entries")) {
            if (!entry.is_array() || entry.size() != 4)
                throw InvalidBracketTable("entries must be [a, b, e, value] quadruples");
            int a = entry[0].get<int>(), b = entry[1].get<int>(), e = entry[2].get<int>();
            if (a < 0 || a >= t.dim_g || b < 0 || b >= t.dim_g || e < 0 || e >= t.dim_g)
                throw InvalidBracketTable("entry index out of range");
            t.bracket(a, b, e) = entry[3].get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidBracketTable("bad bracket table in '" + path + "': " + e.what());
    }
    t.check();
    return t;
}

}  // namespace symflow
