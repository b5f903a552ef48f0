#pragma once

// Method-of-lines integrator for the gauge-fixed parabolic flow system on
// [0,1], plus the harmonic-map-style gauge recovery that turns its solution
// back into the underlying geometric flow.
//
// Spatial scheme: one ghost node per end, filled so that the centered
// 2nd-order derivative at the boundary node equals the prescribed Neumann
// value; all other nodes use 4th-order centered stencils.  Time: classical
// RK4 with a diffusion-limited step.

#include <vector>

#include "symflow/algebra.hpp"
#include "symflow/boundary.hpp"
#include "symflow/geometry.hpp"

namespace symflow {

struct SolverConfig {
    int N = 128;               // cells (even, >= 8)
    double t_end = 0.1;
    double cfl = 0.2;          // Delta t = cfl * min(h^2) * Delta r^2, in (0, 0.5]
    double min_scale = 1e-6;   // positivity floor; crossing it means a singularity
    int snapshot_every = 0;    // store every k-th step (0: use snapshot_dt)
    double snapshot_dt = 0.0;  // store at uniform times (0 with snapshot_every 0: t_end/200)

    void validate() const;
};

// Scheme-consistent first-derivative values at the two ends, i.e. exactly the
// Neumann data the ghost fill enforces.  Downstream consumers use these
// instead of one-sided differences so that boundary identities hold to
// rounding, not to truncation order.
struct BoundaryDerivatives {
    double h_r[2] = {0.0, 0.0};
    std::vector<double> f_r[2];
};

struct Trajectory {
    std::vector<double> times;
    std::vector<FlowState> states;              // gauge-fixed fields (h-bar, f-bar)
    std::vector<BoundaryDerivatives> boundary;  // per state

    // filled by solve_gauge
    std::vector<std::vector<double>> phi;       // diffeomorphisms, per time, per node
    std::vector<FlowState> recovered;           // geometric-flow fields
    std::vector<BoundaryDerivatives> recovered_boundary;

    bool singular = false;      // positivity floor reached before t_end
    double singular_time = 0.0;

    bool has_gauge() const { return !recovered.empty(); }
};

// Precomputed right-hand side of the gauge-fixed system for one grid/space/
// boundary setup.  The reference-metric profiles enter through exact symbolic
// derivatives (background source term and boundary corrections).
class DeturckSystem {
public:
    DeturckSystem(int N, const HomogeneousSpaceData& space, const BCSpec& bc,
                  const InitialProfiles& init);

    int N() const { return N_; }
    int n() const { return n_; }
    double dr() const { return dr_; }

    // Neumann values the boundary law prescribes for the current state.
    BoundaryDerivatives boundary_values(const FlowState& s, double t) const;

    // Time derivative of all fields (ghost fill + stencils + reaction terms).
    FlowState rhs(const FlowState& s, double t) const;

    // Largest stable time step at the given CFL fraction.
    double stable_dt(const FlowState& s, double cfl) const;

    // One RK4 step.  Throws StabilityBound if dt exceeds stable_dt(s, cfl),
    // PositivityLost if any field touches min_scale at any stage.
    FlowState step(const FlowState& s, double t, double dt, double cfl,
                   double min_scale) const;

private:
    int N_;
    int n_;
    double dr_;
    const HomogeneousSpaceData space_;
    BCSpec bc_;
    // nodal samples of the reference profiles and their exact derivatives
    std::vector<double> hat_h_, hat_h_r_;
    std::vector<std::vector<double>> hat_f_, hat_f_r_;
    std::vector<double> hat_trace_;  // sum_k d_k hat_f_kr / hat_f_k
    std::vector<double> source_;     // -(hat_h_r/hat_h^2 - sum_k d_k hat_f_kr/(hat_h hat_f_k))_r
    double hat_corr_[2];             // boundary correction in the h Neumann value
};

// Integrates the gauge-fixed system from the sampled profiles.  Initial data
// must satisfy the zeroth-order compatibility condition (IncompatibleData
// otherwise).  Touching the positivity floor ends the run gracefully with the
// partial trajectory marked singular.
Trajectory solve(const SolverConfig& cfg, const HomogeneousSpaceData& space, const BCSpec& bc,
                 const InitialProfiles& init);

// Integrates the gauge ODE across stored snapshots (RK4; cubic interpolation
// in r, linear in t), pins the endpoints, and recovers the geometric flow by
// pullback (6-point interpolation, since recovered fields get differentiated
// again downstream).  Throws GaugeDegenerate if the diffeomorphism loses
// monotonicity.
void solve_gauge(Trajectory& traj, const HomogeneousSpaceData& space,
                 const InitialProfiles& init);

struct FlowResidual {
    std::vector<double> times;  // interior snapshot times
    std::vector<double> linf;   // max over fields and interior nodes
    double max = 0.0;
};

// Pointwise residual of the geometric-flow equations on the recovered
// trajectory: centered 3-point differencing in time, interior nodes 2..N-2.
FlowResidual ricci_flow_residual(const Trajectory& traj, const HomogeneousSpaceData& space);

}  // namespace symflow
