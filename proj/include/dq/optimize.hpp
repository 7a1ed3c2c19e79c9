#pragma once

#include <string>
#include <vector>

#include "dq/adjoint.hpp"
#include "dq/forward.hpp"
#include "dq/initdata.hpp"
#include "dq/model.hpp"

// Reduced-cost machinery over the box-constrained control space, the
// projected-gradient loop, and the vanishing-regularization continuation
// driver.  Controls are piecewise constant in time; all pairings use the
// left-endpoint L2(Q) quadrature, matching the stepper, so the adjoint-based
// gradient is the exact discrete gradient of the evaluated cost.

namespace dq {

// A complete instance: model constants, base initial data (the gamma-level
// approximants are derived from it per level), and the time grid.
struct ControlProblem {
    ModelParams params;
    Field mu0, phi0, sigma0;
    TimeGrid tg;
};

enum class GradMode { plain, adapted };

struct OptimizerOptions {
    int max_outer_iters = 200;
    double step0 = 1.0;          // first trial step; later iterations start
                                 // from the clamped Barzilai-Borwein length
    double armijo_c = 1e-4;
    double armijo_shrink = 0.5;
    int max_backtracks = 60;
    double stat_tol = 0.0;       // > 0: absolute; else stat_tol_rel * ||grad0||
    double stat_tol_rel = 1e-6;
    GradMode mode = GradMode::plain;
    ForwardOptions fwd;

    void validate() const;
};

// J = (b1/2)||phi - phi_Q||^2_Q + (b2/2)||phi(T) - phi_Omega||^2
//   + (b3/2)||sigma - sigma_Q||^2_Q + (b4/2)||sigma(T) - sigma_Omega||^2
//   + (b0/2)||u||^2_Q
double eval_cost(const StateTrajectory& traj, const Control& u, const ModelParams& params,
                 const TimeGrid& tg);

// eval_cost + (1/2)||u - u_ref||^2_Q; equals eval_cost at u = u_ref.
double eval_adapted_cost(const StateTrajectory& traj, const Control& u,
                         const ModelParams& params, const TimeGrid& tg, const Control& u_ref);

Control project_control(const Control& u, const ControlBounds& bounds);

// ||u - P(u - grad)||_{L2(Q)}: zero iff the discrete box variational
// inequality holds at u.
double stationarity_residual(const Control& u, const Control& grad, const ControlBounds& bounds,
                             const TimeGrid& tg);

// One forward + one adjoint solve at u; grad is r + b0*u (plain) or
// r + b0*u + (u - u_ref) (adapted).  The adjoint itself is mode-independent;
// the mode only changes the assembled gradient.
struct ReducedEval {
    Control grad;
    double cost = 0.0;        // plain J
    double cost_mode = 0.0;   // J or adapted J according to mode
    StateTrajectory traj;
    AdjointTrajectory adj;
};

ReducedEval reduced_eval(const ControlProblem& prob, double gamma, const Control& u,
                         GradMode mode, const Control* u_ref = nullptr,
                         const ForwardOptions& fwd = {});

Control reduced_gradient(const ControlProblem& prob, double gamma, const Control& u,
                         GradMode mode, const Control* u_ref = nullptr,
                         const ForwardOptions& fwd = {});

struct OptIterRow {
    int iter = 0;
    double cost = 0.0;        // mode cost at the current iterate (accepted)
    double stat = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;        // accepted step of the previous move, 0 at iter 0
    int backtracks = 0;
};

struct OptimizeResult {
    Control u;
    std::vector<OptIterRow> history;
    bool converged = false;
    int iters = 0;
    double initial_grad_norm = 0.0;
    double stat_tol_used = 0.0;
    double final_cost = 0.0;   // mode cost
    double final_stat = 0.0;
};

// Projected gradient with Armijo backtracking along the projection arc:
// accept u_t = P(u - tau*grad) when  cost(u_t) <= cost(u) - (c/tau)||u_t - u||^2.
// The trial tau is the clamped Barzilai-Borwein spectral length (step0 on the
// first iteration and when the curvature pairing is not positive), so accepted
// costs stay monotone while box-constrained tracking problems with small b0
// converge at spectral rather than steepest-descent speed.
// In adapted mode the reference defaults to u0 when u_ref is null.
OptimizeResult projected_gradient(const ControlProblem& prob, double gamma, const Control& u0,
                                  const OptimizerOptions& opts, const Control* u_ref = nullptr);

struct QuenchSchedule {
    double gamma0 = 0.5;
    double ratio = 0.5;
    int n_levels = 7;
    // empty: per-level defaults (adapted mode); size 1: broadcast; else one
    // entry per level
    std::vector<OptimizerOptions> level_opts;

    void validate() const;
    double gamma(int n) const;
    OptimizerOptions opts(int n) const;
};

struct QuenchLevel {
    double gamma = 0.0;
    Control u;                    // optimized control of this level
    double J = 0.0;               // plain cost at u
    double J_adapted = 0.0;       // J + (1/2)||u - u_ref||^2 (ref = previous level)
    double du_prev = 0.0;         // ||u_n - u_{n-1}||_{L2(Q)} (vs u_init at n = 0)
    double stationarity = 0.0;    // optimizer's own residual at exit
    double initial_grad_norm = 0.0;
    double stat_tol_used = 0.0;
    double min_phi = 0.0, max_phi = 0.0;
    double s1 = 0.0, s2 = 0.0;
    double vi_residual_plain = 0.0;  // ||u - P(u - (r + b0 u))||
    double proj_identity = -1.0;     // ||u - P(-r/b0)||, -1 when b0 = 0
    int outer_iters = 0;
    bool converged = false;
    bool failed = false;
    std::string error;
};

struct QuenchReport {
    std::vector<QuenchLevel> levels;
};

// Continuation in gamma: each level solves the adapted (or per-level
// configured) problem warm-started from, and centered at, the previous
// level's optimizer.  A failed level is recorded and skipped; the reference
// control then stays at the last successful level.
QuenchReport deep_quench(const ControlProblem& prob, const QuenchSchedule& schedule,
                         const Control& u_init);

// Central finite-difference probe of the reduced cost against the adjoint
// gradient.  Per seed: a random admissible control, a random direction with
// cells in [-1,1], and (adapted mode) a random admissible reference.  Both
// solves run at the tolerances in `fwd`; pass newton_tol = 1e-12 for probes
// at eps = 1e-5.
struct GradCheckRow {
    int seed = 0;
    GradMode mode = GradMode::plain;
    double fd = 0.0;        // central difference of the reduced cost
    double pairing = 0.0;   // <grad, direction>_{L2(Q)}
    double rel_err = 0.0;
};

std::vector<GradCheckRow> gradient_check(const ControlProblem& prob, double gamma, int n_seeds,
                                         double eps, const ForwardOptions& fwd,
                                         unsigned long long base_seed = 20260814ULL);

} // namespace dq
