#pragma once

// Lie-algebra structure data for compact homogeneous fibers G/H.
//
// A bracket table holds the structure constants c_ab^e = Q([e_a, e_b], e_e)
// of g in a Q-orthonormal basis ordered as (h-basis, p_1-basis, ..., p_n-basis),
// where Q is an ad-invariant inner product and p = h^perp splits into the
// pairwise inequivalent irreducible H-modules p_k.  From the table we derive
// the constants that drive every curvature formula downstream:
//
//   beta_k:      Killing form on p_k, P|p_k = -beta_k Q
//   gamma_ikl:   (1/d_i) sum over basis triples in (p_i, p_k, p_l) of (c_ab^e)^2

#include <string>
#include <vector>

#include "symflow/errors.hpp"

namespace symflow {

struct BracketTable {
    int dim_g = 0;
    int dim_h = 0;
    std::vector<int> summand_dims;   // d_1..d_n, sum = dim_g - dim_h
    std::vector<double> c;           // dense dim_g^3, index (a dim + b) dim + e

    double bracket(int a, int b, int e) const {
        return c[(static_cast<std::size_t>(a) * dim_g + b) * dim_g + e];
    }
    double& bracket(int a, int b, int e) {
        return c[(static_cast<std::size_t>(a) * dim_g + b) * dim_g + e];
    }

    int n_summands() const { return static_cast<int>(summand_dims.size()); }
    // first basis index of summand k (0-based summand)
    int summand_offset(int k) const;

    // Structural sanity: antisymmetry, total antisymmetry of c_ab^e
    // (ad-invariance of Q), the Jacobi identity, and [h, p_k] within p_k.
    // Throws InvalidBracketTable when any residual exceeds tol.
    void check(double tol = 1e-12) const;
};

struct HomogeneousSpaceData {
    std::string label;
    std::vector<int> dims;       // d_k
    std::vector<double> beta;    // beta_k >= 0
    std::vector<double> gamma;   // flattened n^3, index (i n + k) n + l

    int n() const { return static_cast<int>(dims.size()); }
    double gamma_at(int i, int k, int l) const {
        return gamma[(static_cast<std::size_t>(i) * n() + k) * n() + l];
    }
    // dim(G/H) - 1 = sum of the d_k
    int fiber_dim() const;
};

// Derives (d, beta, gamma) from a bracket table.  Throws NonScalarKilling if
// the Killing form fails to restrict to a multiple of Q on some summand
// (within 1e-10), AllBetaZero if every beta_k vanishes.
HomogeneousSpaceData structure_constants(const BracketTable& table, std::string label = "");

struct IdentityReport {
    struct Entry {
        std::string what;
        double residual;
    };
    std::vector<Entry> entries;
    double max_residual = 0.0;
    bool pass = false;
};

// Symmetry identities d_i gamma_ikl = d_k gamma_kil = d_l gamma_lik (total
// antisymmetry of Q([x,y],z)), nonnegativity of gamma and beta, and a
// two-or-more-dimensional fiber.  pass iff every residual < 1e-10.
IdentityReport validate_identities(const HomogeneousSpaceData& data);

// Built-in spaces.  Q is -(1/2) tr(XY) on the defining matrix representation
// throughout, which makes sphere(k) the unit round sphere S^k = SO(k+1)/SO(k).
// Names: "sphere(2)".."sphere(5)", "su3/t2" (the flag SU(3)/T^2, three
// 2-dimensional summands).  Throws UnknownSpace otherwise.
BracketTable catalog_lookup(const std::string& name);

// JSON bracket-table file: {"dim_g": int, "dim_h": int, "summand_dims": [...],
// "entries": [[a, b, e, value], ...]} with 0-based indices; omitted entries
// are zero.  Runs check() before returning.
BracketTable load_bracket_table(const std::string& path);

}  // namespace symflow
