#include "dq/forward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "dq/linsolve.hpp"
#include "dq/potentials.hpp"
#include "stepcore.hpp"

namespace dq {

namespace {

std::string step_msg(const char* what, int step) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s (time step %d)", what, step);
    return std::string(buf);
}

double sumsq(const std::vector<double>& a) {
    double acc = 0.0;
    for (double x : a) acc += x * x;
    return acc;
}

// residual of the phi-equation: beta*phi - dt*lap(phi) + dt*g*h'(phi) - rhs
double phi_residual(const Grid& g, double beta, double dt, double gcoef,
                    const std::vector<double>& rhs, const std::vector<double>& phi,
                    std::vector<double>& work) {
    const std::size_t n = g.size();
    apply_laplacian(g, phi.data(), work.data());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double f = beta * phi[i] - dt * work[i] + dt * gcoef * h_prime(phi[i]) - rhs[i];
        acc += f * f;
    }
    return std::sqrt(acc * g.cell_volume());
}

// Damped Newton for the semi-implicit phi-equation.  Iterates are clamped to
// [-(1-m), 1-m] inside the line search only; the guard margin m starts at
// min(gamma/4, guard_cap) and is relaxed (divided by 256, floored) whenever
// the converged point or the line search presses against it, so genuinely
// near-saturated solutions stay reachable while h' remains evaluable.
int phi_newton(const Grid& g, double beta, double dt, double gcoef,
               const std::vector<double>& rhs, std::vector<double>& phi, double& guard_margin,
               const ForwardOptions& opts, double tol_abs, int step_index) {
    const std::size_t n = g.size();
    const int cg_cap = detail::cg_iters_cap(g);
    std::vector<double> work(n), mF(n), delta(n), trial(n), hss(n);

    double level = 1.0 - guard_margin;
    for (std::size_t i = 0; i < n; ++i) phi[i] = std::clamp(phi[i], -level, level);

    int iters = 0;
    double res = phi_residual(g, beta, dt, gcoef, rhs, phi, work);
    while (true) {
        if (res <= tol_abs) {
            bool pinned = false;
            for (std::size_t i = 0; i < n; ++i)
                if (std::abs(phi[i]) >= level) { pinned = true; break; }
            if (!pinned) return iters;
            // converged on the guard: the equation wants to go further out
            if (guard_margin <= opts.guard_floor)
                throw numerical_error(step_msg(
                    "phase solve converged on the separation guard at its floor", step_index));
            guard_margin = std::max(opts.guard_floor, guard_margin / 256.0);
            level = 1.0 - guard_margin;
        }
        if (iters >= opts.newton_max_iters)
            throw numerical_error(
                step_msg("Newton iteration for the phase equation did not converge", step_index));

        // Newton direction from the SPD Jacobian (beta + dt*g*h'')I - dt*Lap
        apply_laplacian(g, phi.data(), work.data());
        for (std::size_t i = 0; i < n; ++i) {
            mF[i] = -(beta * phi[i] - dt * work[i] + dt * gcoef * h_prime(phi[i]) - rhs[i]);
            hss[i] = dt * gcoef * h_second(phi[i]);
        }
        std::fill(delta.begin(), delta.end(), 0.0);
        double cg_tol = std::clamp(0.25 * tol_abs / std::max(res, 1e-300), 1e-14, 1e-2);
        detail::shifted_poisson_solve(g, beta, dt, hss, mF, delta, cg_tol, cg_cap);

        double t = 1.0;
        bool accepted = false;
        while (t >= 1e-8) {
            for (std::size_t i = 0; i < n; ++i)
                trial[i] = std::clamp(phi[i] + t * delta[i], -level, level);
            double res_t = phi_residual(g, beta, dt, gcoef, rhs, trial, work);
            if (res_t <= (1.0 - 1e-4 * t) * res) {
                phi.swap(trial);
                res = res_t;
                accepted = true;
                break;
            }
            t *= opts.armijo_shrink;
        }
        ++iters;
        if (!accepted) {
            // progress blocked by the box: widen the guard if possible
            if (guard_margin <= opts.guard_floor)
                throw numerical_error(step_msg(
                    "phase-equation line search stalled at the separation guard", step_index));
            guard_margin = std::max(opts.guard_floor, guard_margin / 256.0);
            level = 1.0 - guard_margin;
        }
    }
}

struct StepScratch {
    std::vector<double> Pk, pik, rhs_phi, bmu, bsg, lap, work;

    void resize(std::size_t n) {
        Pk.resize(n); pik.resize(n); rhs_phi.resize(n);
        bmu.resize(n); bsg.resize(n); lap.resize(n); work.resize(n);
    }
};

void fill_log(StepLog* log, int step_index, int sweeps, int newton_iters, double rel_res,
              const Field& phi) {
    if (!log) return;
    log->step = step_index;
    log->sweeps = sweeps;
    log->newton_iters = newton_iters;
    log->residual = rel_res;
    auto [lo, hi] = std::minmax_element(phi.v.begin(), phi.v.end());
    log->min_phi = *lo;
    log->max_phi = *hi;
}

// One coupled implicit-Euler step, gamma > 0.  Gauss-Seidel sweeps:
// phi-Newton at the current mu, then one SPD solve of the (mu,sigma) pair.
// The sweep gain is O(dt/(alpha*beta)), so a handful of sweeps suffice.
void gamma_step_core(StateTriple& s, const StateTriple& sk, const Field& u_k, double dt,
                     double gamma, const ModelParams& prm, const ForwardOptions& opts,
                     double& guard_margin, StepLog* log, int step_index, StepScratch& ws) {
    const Grid& g = sk.phi.grid;
    const std::size_t n = g.size();
    const double gcoef = g_eval(gamma, prm.quench);
    const double alpha = prm.alpha, beta = prm.beta;
    const int cg_cap = detail::cg_iters_cap(g);

    ws.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ws.Pk[i] = P_eval(sk.phi[i], prm.prolif);
        ws.pik[i] = pi_eval(sk.phi[i], prm.pi);
    }

    const double scale = 1.0 + detail::l2h_norm3(sk.mu, sk.phi, sk.sigma) + norm_l2(u_k);
    const double target = opts.newton_tol * scale;

    auto full_residual = [&]() {
        double acc = 0.0;
        apply_laplacian(g, s.mu.v.data(), ws.lap.data());
        for (std::size_t i = 0; i < n; ++i) {
            double f1 = alpha * (s.mu[i] - sk.mu[i]) + (s.phi[i] - sk.phi[i]) - dt * ws.lap[i]
                        - dt * ws.Pk[i] * (s.sigma[i] - s.mu[i]);
            acc += f1 * f1;
        }
        apply_laplacian(g, s.phi.v.data(), ws.lap.data());
        for (std::size_t i = 0; i < n; ++i) {
            double f2 = beta * (s.phi[i] - sk.phi[i]) - dt * ws.lap[i]
                        + dt * (gcoef * h_prime(s.phi[i]) + ws.pik[i] - s.mu[i]);
            acc += f2 * f2;
        }
        apply_laplacian(g, s.sigma.v.data(), ws.lap.data());
        for (std::size_t i = 0; i < n; ++i) {
            double f3 = (s.sigma[i] - sk.sigma[i]) - dt * ws.lap[i]
                        + dt * ws.Pk[i] * (s.sigma[i] - s.mu[i]) - dt * u_k[i];
            acc += f3 * f3;
        }
        return std::sqrt(acc * g.cell_volume());
    };

    int newton_total = 0;
    double res = 0.0;
    int sweep = 0;
    for (; sweep < opts.max_sweeps; ++sweep) {
        for (std::size_t i = 0; i < n; ++i)
            ws.rhs_phi[i] = beta * sk.phi[i] + dt * (s.mu[i] - ws.pik[i]);
        newton_total += phi_newton(g, beta, dt, gcoef, ws.rhs_phi, s.phi.v, guard_margin, opts,
                                   0.1 * target, step_index);

        for (std::size_t i = 0; i < n; ++i) {
            ws.bmu[i] = alpha * sk.mu[i] - (s.phi[i] - sk.phi[i]);
            ws.bsg[i] = sk.sigma[i] + dt * u_k[i];
        }
        double bnorm = std::sqrt((sumsq(ws.bmu) + sumsq(ws.bsg)) * g.cell_volume());
        double cg_tol = std::clamp(0.1 * target / std::max(bnorm, 1e-300), 1e-14, 1e-2);
        detail::musigma_block_solve(g, alpha, dt, ws.Pk, ws.bmu, ws.bsg, s.mu.v, s.sigma.v,
                                    cg_tol, 2 * cg_cap);

        res = full_residual();
        if (res <= target) break;
    }
    if (res > target)
        throw numerical_error(
            step_msg("coupling sweeps for the state step did not contract", step_index));

    fill_log(log, step_index, sweep + 1, newton_total, res / scale, s.phi);
}

// Laplacian restricted to inactive cells with homogeneous Dirichlet coupling
// toward active cells and mirrored ghosts at the domain boundary; identity on
// active cells.  SPD on the full space, and vectors that vanish on the active
// set stay that way, so CG solves the constrained phi-system exactly.
void masked_laplacian(const Grid& g, const std::vector<signed char>& act,
                      const double* in, double* out) {
    const int nx = g.nx, ny = g.ny;
    const double wx = 1.0 / (g.dx * g.dx);
    const double wy = 1.0 / (g.dy * g.dy);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int c = j * nx + i;
            if (act[c] != 0) { out[c] = 0.0; continue; }
            // neighbor inactive: standard difference; active: Dirichlet 0;
            // domain boundary: mirrored ghost, zero contribution
            double acc = 0.0;
            double accx = 0.0;
            if (i > 0) { int d = c - 1; accx += (act[d] == 0 ? in[d] : 0.0) - in[c]; }
            if (i + 1 < nx) { int d = c + 1; accx += (act[d] == 0 ? in[d] : 0.0) - in[c]; }
            acc += wx * accx;
            if (g.dim == 2) {
                double accy = 0.0;
                if (j > 0) { int d = c - nx; accy += (act[d] == 0 ? in[d] : 0.0) - in[c]; }
                if (j + 1 < ny) { int d = c + nx; accy += (act[d] == 0 ? in[d] : 0.0) - in[c]; }
                acc += wy * accy;
            }
            out[c] = acc;
        }
    }
}

// One implicit-Euler step of the obstacle (gamma = 0) system via a primal-
// dual active-set iteration.  On convergence the complementarity conditions
// hold exactly: phi = +-1 and sign-correct xi on the active set, xi = 0 on
// the inactive set.
void obstacle_step_core(StateTriple& s, Field& xi, const StateTriple& sk, const Field& u_k,
                        double dt, const ModelParams& prm, const ForwardOptions& opts,
                        StepLog* log, int step_index, StepScratch& ws,
                        std::vector<signed char>& act) {
    const Grid& g = sk.phi.grid;
    const std::size_t n = g.size();
    const double alpha = prm.alpha, beta = prm.beta;
    const double c_scale = beta / dt;
    const int cg_cap = detail::cg_iters_cap(g);

    ws.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ws.Pk[i] = P_eval(sk.phi[i], prm.prolif);
        ws.pik[i] = pi_eval(sk.phi[i], prm.pi);
    }

    const double scale = 1.0 + detail::l2h_norm3(sk.mu, sk.phi, sk.sigma) + norm_l2(u_k);
    const double target = opts.newton_tol * scale;

    for (std::size_t i = 0; i < n; ++i) s.phi[i] = std::clamp(s.phi[i], -1.0, 1.0);

    auto full_residual = [&]() {
        double acc = 0.0;
        apply_laplacian(g, s.mu.v.data(), ws.lap.data());
        for (std::size_t i = 0; i < n; ++i) {
            double f1 = alpha * (s.mu[i] - sk.mu[i]) + (s.phi[i] - sk.phi[i]) - dt * ws.lap[i]
                        - dt * ws.Pk[i] * (s.sigma[i] - s.mu[i]);
            acc += f1 * f1;
        }
        apply_laplacian(g, s.phi.v.data(), ws.lap.data());
        for (std::size_t i = 0; i < n; ++i) {
            double f2 = beta * (s.phi[i] - sk.phi[i]) - dt * ws.lap[i]
                        + dt * (xi[i] + ws.pik[i] - s.mu[i]);
            acc += f2 * f2;
        }
        apply_laplacian(g, s.sigma.v.data(), ws.lap.data());
        for (std::size_t i = 0; i < n; ++i) {
            double f3 = (s.sigma[i] - sk.sigma[i]) - dt * ws.lap[i]
                        + dt * ws.Pk[i] * (s.sigma[i] - s.mu[i]) - dt * u_k[i];
            acc += f3 * f3;
        }
        return std::sqrt(acc * g.cell_volume());
    };

    std::vector<signed char> act_new(n);
    std::vector<double> phi_bc(n), bvec(n), z(n), diag(n);
    double res = 0.0;
    int sweep = 0;
    bool settled = false;
    for (; sweep < opts.pdas_max_sweeps; ++sweep) {
        // active-set update from the current primal-dual pair
        for (std::size_t i = 0; i < n; ++i) {
            if (xi[i] + c_scale * (s.phi[i] - 1.0) > 0.0) act_new[i] = 1;
            else if (xi[i] + c_scale * (s.phi[i] + 1.0) < 0.0) act_new[i] = -1;
            else act_new[i] = 0;
        }
        bool same_sets = (act_new == act);
        act.swap(act_new);

        for (std::size_t i = 0; i < n; ++i)
            ws.rhs_phi[i] = beta * sk.phi[i] + dt * (s.mu[i] - ws.pik[i]);

        // phi on the inactive set: (beta - dt*Lap) phi = rhs with phi = +-1
        // Dirichlet data on the active set, via the lifted system for z
        for (std::size_t i = 0; i < n; ++i) phi_bc[i] = (act[i] == 0) ? 0.0 : double(act[i]);
        apply_laplacian(g, phi_bc.data(), ws.lap.data());
        for (std::size_t i = 0; i < n; ++i)
            bvec[i] = (act[i] == 0) ? ws.rhs_phi[i] + dt * ws.lap[i] : 0.0;

        const double wx = 1.0 / (g.dx * g.dx), wy = 1.0 / (g.dy * g.dy);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                int c = j * g.nx + i;
                if (act[c] != 0) { diag[c] = 1.0; continue; }
                double d = beta;
                if (i > 0) d += dt * wx;
                if (i + 1 < g.nx) d += dt * wx;
                if (g.dim == 2) {
                    if (j > 0) d += dt * wy;
                    if (j + 1 < g.ny) d += dt * wy;
                }
                diag[c] = d;
            }
        for (std::size_t i = 0; i < n; ++i) z[i] = (act[i] == 0) ? s.phi[i] : 0.0;
        auto op = [&](const std::vector<double>& in, std::vector<double>& out) {
            masked_laplacian(g, act, in.data(), ws.work.data());
            for (std::size_t i = 0; i < n; ++i)
                out[i] = (act[i] == 0) ? beta * in[i] - dt * ws.work[i] : in[i];
        };
        double bnorm = std::sqrt(sumsq(bvec) * g.cell_volume());
        double cg_tol = std::clamp(0.1 * target / std::max(bnorm, 1e-300), 1e-14, 1e-2);
        cg_solve(op, bvec, z, cg_tol, cg_cap, &diag);
        for (std::size_t i = 0; i < n; ++i) s.phi[i] = phi_bc[i] + z[i];

        for (std::size_t i = 0; i < n; ++i) {
            ws.bmu[i] = alpha * sk.mu[i] - (s.phi[i] - sk.phi[i]);
            ws.bsg[i] = sk.sigma[i] + dt * u_k[i];
        }
        bnorm = std::sqrt((sumsq(ws.bmu) + sumsq(ws.bsg)) * g.cell_volume());
        cg_tol = std::clamp(0.1 * target / std::max(bnorm, 1e-300), 1e-14, 1e-2);
        detail::musigma_block_solve(g, alpha, dt, ws.Pk, ws.bmu, ws.bsg, s.mu.v, s.sigma.v,
                                    cg_tol, 2 * cg_cap);

        // dual variable against the updated mu: the exact discrete residual
        // of the phase equation on the active set, zero inside, so the
        // complementarity conditions hold exactly at convergence
        apply_laplacian(g, s.phi.v.data(), ws.lap.data());
        for (std::size_t i = 0; i < n; ++i) {
            double rhs_new = beta * sk.phi[i] + dt * (s.mu[i] - ws.pik[i]);
            xi[i] = (act[i] == 0) ? 0.0
                                  : (rhs_new - beta * s.phi[i] + dt * ws.lap[i]) / dt;
        }

        res = full_residual();
        if (same_sets && res <= target) { settled = true; ++sweep; break; }
    }
    if (!settled)
        throw numerical_error(
            step_msg("active-set iteration for the obstacle step did not settle", step_index));

    fill_log(log, step_index, sweep, 0, res / scale, s.phi);
}

double series_y_norm(const FieldSeries& x, const TimeGrid& tg) {
    const double dt = tg.dt();
    const int nt = static_cast<int>(x.size()) - 1;
    double dsq = 0.0, lapsq = 0.0, vmax = 0.0;
    for (int k = 0; k <= nt; ++k) {
        vmax = std::max(vmax, norm_h1(x[k]));
        if (k == 0) continue;
        Field d = x[k] - x[k - 1];
        dsq += inner_l2(d, d) / (dt * dt) * dt;
        Field l = laplacian(x[k]);
        lapsq += inner_l2(l, l) * dt;
    }
    return std::sqrt(dsq) + vmax + std::sqrt(lapsq);
}

void finalize_trajectory(StateTrajectory& traj, const TimeGrid& tg, const ModelParams& prm) {
    double lo = traj.phi[0][0], hi = lo;
    for (const Field& f : traj.phi)
        for (double v : f.v) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    traj.min_phi = lo;
    traj.max_phi = hi;
    traj.monitored_norm = series_y_norm(traj.mu, tg) + series_y_norm(traj.phi, tg)
                          + series_y_norm(traj.sigma, tg);

    // L2(Q) size of the multiplier, sampled at the new level of each step
    const double dt = tg.dt();
    double acc = 0.0;
    if (traj.obstacle_mode()) {
        for (int k = 1; k <= tg.nt; ++k) acc += inner_l2(traj.xi[k], traj.xi[k]) * dt;
    } else {
        const double gcoef = g_eval(traj.gamma, prm.quench);
        for (int k = 1; k <= tg.nt; ++k) {
            double s = 0.0;
            for (double v : traj.phi[k].v) {
                double m = gcoef * h_prime(v);
                s += m * m;
            }
            acc += s * traj.phi[k].grid.cell_volume() * dt;
        }
    }
    traj.gh_l2q = std::sqrt(acc);
}

void check_common_inputs(const ModelParams& prm, const Control& control, const TimeGrid& tg,
                         const Field& mu0, const Field& phi0, const Field& sigma0) {
    prm.validate();
    if (control.nt() != tg.nt)
        throw std::invalid_argument("control series length must equal the number of time steps");
    require_same_grid(mu0, phi0, "initial data");
    require_same_grid(mu0, sigma0, "initial data");
    if (control.nt() > 0) require_same_grid(mu0, control[0], "control vs. initial data");
    require_same_grid(mu0, prm.bounds.u_min, "bounds vs. initial data");
}

} // namespace

StateTriple step_gamma(const StateTriple& state_k, const Field& u_k, double dt, double gamma,
                       const ModelParams& params, const ForwardOptions& opts, StepLog* log) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_gamma: dt must be > 0");
    params.validate();
    StateTriple s = state_k;   // warm start from the old state
    double guard = std::min(gamma / 4.0, opts.guard_cap);
    StepScratch ws;
    gamma_step_core(s, state_k, u_k, dt, gamma, params, opts, guard, log, 0, ws);
    return s;
}

StateTrajectory solve_state_gamma(const ModelParams& params, const Control& control, double gamma,
                                  const InitialData& init, const TimeGrid& tg,
                                  const ForwardOptions& opts) {
    check_common_inputs(params, control, tg, init.mu0g, init.phi0g, init.sigma0g);
    g_eval(gamma, params.quench);   // validates gamma in (0,1]
    double sep = 1.0 - gamma / 2.0;
    if (norm_linf(init.phi0g) > sep + 1e-12)
        throw std::invalid_argument(
            "initial phase data must satisfy the gamma separation bound 1 - gamma/2");

    StateTrajectory traj;
    traj.gamma = gamma;
    traj.alpha_weight = params.alpha;
    traj.mu.assign(tg.nt + 1, Field(init.mu0g.grid));
    traj.phi.assign(tg.nt + 1, Field(init.mu0g.grid));
    traj.sigma.assign(tg.nt + 1, Field(init.mu0g.grid));
    traj.mu[0] = init.mu0g;
    traj.phi[0] = init.phi0g;
    traj.sigma[0] = init.sigma0g;
    traj.steps.resize(tg.nt);

    const double dt = tg.dt();
    double guard = std::min(gamma / 4.0, opts.guard_cap);
    StepScratch ws;
    StateTriple s{init.mu0g, init.phi0g, init.sigma0g};
    for (int k = 0; k < tg.nt; ++k) {
        StateTriple sk = s;
        gamma_step_core(s, sk, control[k], dt, gamma, params, opts, guard, &traj.steps[k], k, ws);
        traj.mu[k + 1] = s.mu;
        traj.phi[k + 1] = s.phi;
        traj.sigma[k + 1] = s.sigma;
    }
    finalize_trajectory(traj, tg, params);
    return traj;
}

StateTrajectory solve_state_obstacle(const ModelParams& params, const Control& control,
                                     const Field& mu0, const Field& phi0, const Field& sigma0,
                                     const TimeGrid& tg, const ForwardOptions& opts) {
    check_common_inputs(params, control, tg, mu0, phi0, sigma0);
    if (norm_linf(phi0) > 1.0)
        throw config_error("H7: |phi0| <= 1 required for the obstacle system");

    StateTrajectory traj;
    traj.gamma = 0.0;
    traj.alpha_weight = params.alpha;
    traj.mu.assign(tg.nt + 1, Field(mu0.grid));
    traj.phi.assign(tg.nt + 1, Field(mu0.grid));
    traj.sigma.assign(tg.nt + 1, Field(mu0.grid));
    traj.xi.assign(tg.nt + 1, Field(mu0.grid));
    traj.mu[0] = mu0;
    traj.phi[0] = phi0;
    traj.sigma[0] = sigma0;
    traj.steps.resize(tg.nt);

    const double dt = tg.dt();
    StepScratch ws;
    std::vector<signed char> act(mu0.grid.size(), 0);
    StateTriple s{mu0, phi0, sigma0};
    Field xi(mu0.grid);
    for (int k = 0; k < tg.nt; ++k) {
        StateTriple sk = s;
        obstacle_step_core(s, xi, sk, control[k], dt, params, opts, &traj.steps[k], k, ws, act);
        traj.mu[k + 1] = s.mu;
        traj.phi[k + 1] = s.phi;
        traj.sigma[k + 1] = s.sigma;
        traj.xi[k + 1] = xi;
    }
    finalize_trajectory(traj, tg, params);
    return traj;
}

ScalarTrajectory ode_oracle(const ModelParams& params, double gamma,
                            const std::array<double, 3>& init, const std::vector<double>& u,
                            const TimeGrid& tg, int refine) {
    params.validate();
    const double gcoef = g_eval(gamma, params.quench);
    if (refine < 1) throw std::invalid_argument("ode_oracle: refine must be >= 1");
    if (static_cast<int>(u.size()) != tg.nt)
        throw std::invalid_argument("ode_oracle: control path must have nt entries");

    const double alpha = params.alpha, beta = params.beta;
    struct Y { double m, f, s; };
    auto rhs = [&](const Y& y, double uu) -> Y {
        if (std::abs(y.f) >= 1.0)
            throw numerical_error("ODE oracle left the open phase interval (-1,1)");
        double fp = (y.m - gcoef * h_prime(y.f) - pi_eval(y.f, params.pi)) / beta;
        double ex = P_eval(y.f, params.prolif) * (y.s - y.m);
        double mp = (ex - fp) / alpha;
        double sp = -ex + uu;
        return {mp, fp, sp};
    };

    ScalarTrajectory out;
    out.t.resize(tg.nt + 1);
    out.mu.resize(tg.nt + 1);
    out.phi.resize(tg.nt + 1);
    out.sigma.resize(tg.nt + 1);
    Y y{init[0], init[1], init[2]};
    out.t[0] = 0.0;
    out.mu[0] = y.m;
    out.phi[0] = y.f;
    out.sigma[0] = y.s;

    const double h = tg.dt() / refine;
    for (int k = 0; k < tg.nt; ++k) {
        const double uu = u[k];
        for (int j = 0; j < refine; ++j) {
            Y k1 = rhs(y, uu);
            Y k2 = rhs({y.m + 0.5 * h * k1.m, y.f + 0.5 * h * k1.f, y.s + 0.5 * h * k1.s}, uu);
            Y k3 = rhs({y.m + 0.5 * h * k2.m, y.f + 0.5 * h * k2.f, y.s + 0.5 * h * k2.s}, uu);
            Y k4 = rhs({y.m + h * k3.m, y.f + h * k3.f, y.s + h * k3.s}, uu);
            y.m += h / 6.0 * (k1.m + 2.0 * k2.m + 2.0 * k3.m + k4.m);
            y.f += h / 6.0 * (k1.f + 2.0 * k2.f + 2.0 * k3.f + k4.f);
            y.s += h / 6.0 * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s);
        }
        out.t[k + 1] = tg.t(k + 1);
        out.mu[k + 1] = y.m;
        out.phi[k + 1] = y.f;
        out.sigma[k + 1] = y.s;
    }
    return out;
}

std::vector<double> mass_balance_residual(const StateTrajectory& traj, const Control& control,
                                          const TimeGrid& tg) {
    if (traj.nt() != tg.nt || control.nt() != tg.nt)
        throw std::invalid_argument("mass_balance_residual: inconsistent lengths");
    const double dt = tg.dt();
    std::vector<double> res(tg.nt);
    for (int k = 0; k < tg.nt; ++k) {
        double r = traj.alpha_weight * (integrate(traj.mu[k + 1]) - integrate(traj.mu[k]))
                   + (integrate(traj.phi[k + 1]) - integrate(traj.phi[k]))
                   + (integrate(traj.sigma[k + 1]) - integrate(traj.sigma[k]))
                   - dt * integrate(control[k]);
        res[k] = r;
    }
    return res;
}

double trajectory_data_scale(const StateTrajectory& traj, const Control& control,
                             const TimeGrid& tg) {
    double m = 0.0;
    for (const Field& f : traj.mu) m = std::max(m, norm_linf(f));
    for (const Field& f : traj.phi) m = std::max(m, norm_linf(f));
    for (const Field& f : traj.sigma) m = std::max(m, norm_linf(f));
    for (int k = 0; k < control.nt(); ++k) m = std::max(m, norm_linf(control[k]));
    (void)tg;
    return 1.0 + m;
}

} // namespace dq
