#pragma once

// Conjugate-heat potential, modified-flow assembly, and the F-functional
// monotonicity report for a recovered flow trajectory.

#include <vector>

#include "symflow/solver.hpp"

namespace symflow {

struct ScalarComparison {
    std::vector<double> times;
    std::vector<std::vector<double>> from_flow;  // -h_t/h - sum_k d_k f_kt/f_k
    std::vector<std::vector<double>> spatial;    // trace of the Ricci field
    double max_discrepancy = 0.0;
};

// Scalar curvature two ways on the recovered trajectory: through the flow
// identity (time differences of stored snapshots) and as the spatial trace.
ScalarComparison scalar_from_flow(const Trajectory& traj, const HomogeneousSpaceData& space);

// Conjugate-heat solution p~ with Neumann ends and p~(., T) = 1, integrated
// as a forward parabolic problem in s = T - t (RK4, same ghost scheme as the
// flow solver).  Returns one nodal array per snapshot, aligned with
// traj.times; the last array is exactly 1.  Throws PositivityLost if the
// numerical solution loses the sign the maximum principle guarantees.
std::vector<std::vector<double>> solve_backward_p(const Trajectory& traj,
                                                  const HomogeneousSpaceData& space,
                                                  double cfl = 0.2);

// Potential-gradient reparametrization psi: psi_t = p~_rho / (h~^2 p~) at
// rho = psi, psi(r, 0) = r.  The Neumann ends keep psi(j, t) = j exactly.
// Throws GaugeDegenerate if psi loses monotonicity.
std::vector<std::vector<double>> solve_psi(const Trajectory& traj,
                                           const std::vector<std::vector<double>>& ptilde);

// Modified-flow pair: metric pulled back through psi together with the
// potential p = -log p~(psi, t).
struct MRFPair {
    std::vector<double> times;
    std::vector<FlowState> g;
    std::vector<PotentialField> p;
    std::vector<std::vector<double>> psi;
    std::vector<std::vector<double>> ptilde;     // on the flow grid (not composed)
    std::vector<BoundaryDerivatives> boundary;   // chain-rule end derivatives of g
};

MRFPair assemble_mrf(const Trajectory& traj, const std::vector<std::vector<double>>& ptilde,
                     const std::vector<std::vector<double>>& psi);

struct MRFResidual {
    std::vector<double> times;   // interior snapshot times
    std::vector<double> metric;  // max over the h and fiber equations, interior nodes
    std::vector<double> scalar;  // potential equation
    double max = 0.0;
};

// Residual of the coupled modified-flow equations, normalized to the same
// units as the plain flow equations (so a pair with constant potential
// reproduces the flow residual).
MRFResidual mrf_residual(const MRFPair& pair, const HomogeneousSpaceData& space);

struct MonotonicityReport {
    std::vector<double> times;
    std::vector<double> F_values;
    std::vector<double> dF_dt_fd;            // differenced F series
    std::vector<double> dF_dt_formula;       // 2 int |Ric + Hess p|^2 e^-p dmu
    std::vector<double> general_formula_rhs; // formula + boundary correction terms
    std::vector<double> mean_curvature[2];   // H(j, t) from chain-rule end data
    std::vector<double> xi[2];               // conformal factor f_1(j,t)/f_1(j,t_ref)
    std::vector<double> frak_F[2];           // boundary production term
    double max_abs_H = 0.0;
    double max_abs_frak_F = 0.0;
    double residual_max = 0.0;               // from mrf_residual
    double tol_used = 0.0;
    bool monotone = false;
    bool hypothesis_violated = false;        // strict check: H or xi drift too large
    std::string note;
};

// strict = true flags violations of the fixed-conformal-class boundary
// hypothesis instead of silently reporting the general-formula data.
MonotonicityReport monotonicity_report(const MRFPair& pair, const HomogeneousSpaceData& space,
                                       bool strict);

}  // namespace symflow
