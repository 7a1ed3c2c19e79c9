#pragma once

#include <array>
#include <vector>

#include "dq/field.hpp"
#include "dq/model.hpp"

// Implicit-Euler time steppers for the relaxed (gamma > 0) state system and
// for the gamma = 0 double-obstacle system, plus the spatially homogeneous
// ODE oracle and the mass-balance diagnostic.
//
// Discrete step, unknowns (mu,phi,sigma) at the new level, P and pi frozen
// at the old phi (IMEX):
//   alpha(mu' - mu) + (phi' - phi) - dt*Lap mu'           = dt*P(phi)(sigma' - mu')
//   beta (phi' - phi) - dt*Lap phi' + dt*g(gamma)h'(phi') = dt*(mu' - pi(phi))
//   (sigma' - sigma) - dt*Lap sigma'                      = -dt*P(phi)(sigma' - mu') + dt*u
// Summing the first and third equations and integrating kills the P-terms
// and the Laplacians, so the discrete mass balance holds to solver noise.
//
// The step system is solved by block Gauss-Seidel sweeps: a damped-Newton
// solve of the phi-equation at the current mu, then one SPD conjugate-
// gradient solve of the coupled (mu,sigma) pair at the updated phi, until
// the full residual is below newton_tol.  The coupling gain per sweep is
// O(dt/(alpha*beta)).

namespace dq {

struct ForwardOptions {
    double newton_tol = 1e-10;    // relative residual of the full step system
    int newton_max_iters = 50;    // damped-Newton cap per phi-solve
    double armijo_shrink = 0.5;
    int max_sweeps = 60;          // coupling sweeps per step
    int pdas_max_sweeps = 100;    // active-set sweeps per obstacle step
    double guard_cap = 1e-3;      // initial line-search guard 1 - min(gamma/4, cap)
    double guard_floor = 1e-14;   // tightest admissible guard margin
};

struct StateTriple {
    Field mu, phi, sigma;
};

// One implicit-Euler step of the gamma-regularized system.
StateTriple step_gamma(const StateTriple& state_k, const Field& u_k, double dt, double gamma,
                       const ModelParams& params, const ForwardOptions& opts = {},
                       StepLog* log = nullptr);

StateTrajectory solve_state_gamma(const ModelParams& params, const Control& control, double gamma,
                                  const InitialData& init, const TimeGrid& tg,
                                  const ForwardOptions& opts = {});

// gamma = 0: the phi-equation becomes a variational inequality with
// xi in the subdifferential of I_[-1,1], solved per step by a primal-dual
// active-set iteration with exact discrete complementarity.
StateTrajectory solve_state_obstacle(const ModelParams& params, const Control& control,
                                     const Field& mu0, const Field& phi0, const Field& sigma0,
                                     const TimeGrid& tg, const ForwardOptions& opts = {});

// Spatially homogeneous reduction integrated by classical RK4 at dt/refine;
// u is the piecewise-constant scalar control path (nt entries).
struct ScalarTrajectory {
    std::vector<double> t, mu, phi, sigma;
};

ScalarTrajectory ode_oracle(const ModelParams& params, double gamma,
                            const std::array<double, 3>& init, const std::vector<double>& u,
                            const TimeGrid& tg, int refine = 100);

// residual_k = alpha*int(mu_{k+1}-mu_k) + int(phi_{k+1}-phi_k)
//            + int(sigma_{k+1}-sigma_k) - dt*int(u_k)
std::vector<double> mass_balance_residual(const StateTrajectory& traj, const Control& control,
                                          const TimeGrid& tg);

// Scale used in the mass-balance acceptance gate: 1 + max field magnitudes.
double trajectory_data_scale(const StateTrajectory& traj, const Control& control, const TimeGrid& tg);

} // namespace dq
