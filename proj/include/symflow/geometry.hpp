#pragma once

// Reduced geometry of invariant metrics g = h^2 dr (x) dr + sum_k f_k^2 Q_k
// on [0,1] x G/H, stored as nodal values on the uniform grid r_m = m/N.

#include <vector>

#include "symflow/algebra.hpp"
#include "symflow/errors.hpp"

namespace symflow {

struct FlowState {
    int N = 0;       // cells; nodes m = 0..N
    double t = 0.0;
    std::vector<double> h;                // N+1 nodal values, > 0
    std::vector<std::vector<double>> f;   // n fields of N+1 nodal values, > 0

    int n() const { return static_cast<int>(f.size()); }
    double dr() const { return 1.0 / N; }
    double r(int m) const { return static_cast<double>(m) / N; }

    // Throws GridTooCoarse for N < 8, Error on size mismatches,
    // PositivityLost if any nodal value is nonpositive.
    void validate() const;
};

struct PotentialField {
    std::vector<double> p;  // N+1 nodal values
};

struct CurvatureField {
    // radial Ricci coefficient: Ric(d_r, d_r) = zeta, so Ric = (zeta/h^2) h^2 dr (x) dr + ...
    std::vector<double> zeta;
    // fiber coefficients per Q: Ric|p_i = ric_coeff[i] Q_i
    std::vector<std::vector<double>> ric_coeff;
    std::vector<double> scalar;  // R = zeta/h^2 + sum_i d_i ric_coeff[i]/f_i^2
};

// Lemma-level curvature of a single state; 4th-order differences, one-sided
// at the ends.  Requires data.n() == state.n().
CurvatureField ricci(const FlowState& s, const HomogeneousSpaceData& space);

struct BoundaryGeometry {
    std::vector<double> ii_coeff;  // second fundamental form per Q: II|p_i = ii_coeff[i] Q_i
    double mean_curvature = 0.0;   // H = sum_k d_k ii_coeff[k]/f_k^2
};

// Outward-normal boundary geometry at end j (0 or 1) from one-sided
// derivatives of the nodal data.
BoundaryGeometry boundary_geometry(const FlowState& s, const HomogeneousSpaceData& space, int j);

struct VolumeElement {
    std::vector<double> w;  // dmu = w dr d(vol_Q), w = h prod_k f_k^{d_k}
    double wb[2];           // boundary densities prod_k f_k(j)^{d_k}
};

VolumeElement volume_element(const FlowState& s, const HomogeneousSpaceData& space);

// F(g, p) = int (R + |grad p|^2) e^-p dmu with unit fiber volume; composite
// Simpson, so N must be even.
double f_functional(const FlowState& s, const PotentialField& p,
                    const HomogeneousSpaceData& space);

struct RicciPlusHess {
    std::vector<double> rr;                   // zeta + p_rr - h_r p_r / h
    std::vector<std::vector<double>> coeff;   // ric_coeff[i] + f_i f_ir p_r / h^2
    std::vector<double> normsq;               // |Ric + Hess p|^2 pointwise
};

RicciPlusHess ricci_plus_hess(const FlowState& s, const PotentialField& p,
                              const HomogeneousSpaceData& space);

}  // namespace symflow
