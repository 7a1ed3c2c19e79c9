#pragma once

#include "dq/field.hpp"
#include "dq/forward.hpp"
#include "dq/model.hpp"

// Exact discrete linearization of the implicit-Euler state map and its
// transpose (the discrete adjoint).  Because the adjoint is the transpose of
// the actual linearized step matrices -- including the IMEX freezing of P and
// pi at the old time level -- the duality identity
//     sum_k dt <r_k, psi_k>  ==  directional derivative of the tracking cost
// holds to solver tolerance, not just to O(dt).
//
// Per step (interval k -> k+1), with P_k = P(phi_k), c_k = P'(phi_k) *
// (sigma_{k+1} - mu_{k+1}), and h'' evaluated at phi_{k+1}:
//
// linearized (eta, theta, rho) given (eta,theta,rho)_k and control psi_k:
//   (alpha + dt P_k) eta' - dt*Lap eta' - dt P_k rho' + theta'
//        = alpha eta_k + (1 + dt c_k) theta_k
//   (beta + dt g h'') theta' - dt*Lap theta' - dt eta'
//        = beta theta_k - dt pi'(phi_k) theta_k
//   (1 + dt P_k) rho' - dt*Lap rho' - dt P_k eta'
//        = rho_k - dt c_k theta_k + dt psi_k
//
// adjoint: the transposed recursion run backward from the terminal cost
// gradient, with tracking sources added at each level.  Stored fields:
//   p_k, q_k, r_k with p_nt = 0, q_nt = -(b2/beta)(phi_nt - phi_omega),
//   r_nt = b4 (sigma_nt - sigma_omega); the reduced-gradient density is r.

namespace dq {

LinearizedTrajectory solve_linearized(const ModelParams& params, const StateTrajectory& base,
                                      const Control& psi, const TimeGrid& tg,
                                      const ForwardOptions& opts = {});

AdjointTrajectory solve_adjoint(const ModelParams& params, const StateTrajectory& base,
                                const TimeGrid& tg, const ForwardOptions& opts = {});

// lambda_k = g(gamma) h''(phi_k) q_k (requires a gamma-mode base trajectory).
FieldSeries compute_lambda(const ModelParams& params, const StateTrajectory& base,
                           const AdjointTrajectory& adj);

// Discrete shadows of the limiting complementarity quantities:
//   s1 = sum_{k<nt} dt <lambda_k, q_k>             (cellwise nonnegative)
//   s2 = sum_{k<nt} dt <lambda_k (1 - phi_k^2), test_k>
// The test function must vanish at t = 0; by default test_k = t_k (constant
// in space).  Identity: lambda (1 - phi^2) = 2 g q pointwise, so s2 equals
// 2 sum dt <g q_k, test_k> up to rounding.
struct SlacknessReport {
    double s1 = 0.0;
    double s2 = 0.0;
};

SlacknessReport slackness_diagnostics(const ModelParams& params, const StateTrajectory& base,
                                      const AdjointTrajectory& adj, const TimeGrid& tg,
                                      const FieldSeries* test = nullptr);

} // namespace dq
