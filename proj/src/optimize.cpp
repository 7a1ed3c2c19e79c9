#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "dq/linsolve.hpp"
#include "dq/optimize.hpp"

namespace dq {

namespace {

void check_shapes(const ControlProblem& prob) {
    prob.params.validate();
    require_same_grid(prob.mu0, prob.phi0, "problem initial data");
    require_same_grid(prob.mu0, prob.sigma0, "problem initial data");
    require_same_grid(prob.mu0, prob.params.bounds.u_min, "problem bounds");
}

Control control_like(const Control& u, double fill = 0.0) {
    return Control(u.u.empty() ? Grid{} : u[0].grid, u.nt(), fill);
}

} // namespace

void OptimizerOptions::validate() const {
    if (!(step0 > 0.0)) throw config_error("optimizer: step0 must be > 0");
    if (!(armijo_c > 0.0 && armijo_c < 1.0))
        throw config_error("optimizer: armijo_c must lie in (0,1)");
    if (!(armijo_shrink > 0.0 && armijo_shrink < 1.0))
        throw config_error("optimizer: armijo_shrink must lie in (0,1)");
    if (max_outer_iters < 1) throw config_error("optimizer: max_outer_iters must be >= 1");
    if (max_backtracks < 1) throw config_error("optimizer: max_backtracks must be >= 1");
    if (!(stat_tol_rel > 0.0) && !(stat_tol > 0.0))
        throw config_error("optimizer: a positive stationarity tolerance is required");
}

double eval_cost(const StateTrajectory& traj, const Control& u, const ModelParams& params,
                 const TimeGrid& tg) {
    const int nt = tg.nt;
    if (traj.nt() != nt || u.nt() != nt)
        throw std::invalid_argument("eval_cost: trajectory/control length mismatch");
    if (static_cast<int>(params.targets.phi_q.size()) != nt + 1
        || static_cast<int>(params.targets.sigma_q.size()) != nt + 1)
        throw std::invalid_argument("eval_cost: tracking targets must have nt + 1 entries");
    const double dt = tg.dt();
    double acc = 0.0;
    for (int k = 0; k < nt; ++k) {
        if (params.b1 != 0.0) {
            Field d = traj.phi[k] - params.targets.phi_q[k];
            acc += 0.5 * params.b1 * dt * inner_l2(d, d);
        }
        if (params.b3 != 0.0) {
            Field d = traj.sigma[k] - params.targets.sigma_q[k];
            acc += 0.5 * params.b3 * dt * inner_l2(d, d);
        }
        if (params.b0 != 0.0) acc += 0.5 * params.b0 * dt * inner_l2(u[k], u[k]);
    }
    if (params.b2 != 0.0) {
        Field d = traj.phi[nt] - params.targets.phi_omega;
        acc += 0.5 * params.b2 * inner_l2(d, d);
    }
    if (params.b4 != 0.0) {
        Field d = traj.sigma[nt] - params.targets.sigma_omega;
        acc += 0.5 * params.b4 * inner_l2(d, d);
    }
    return acc;
}

double eval_adapted_cost(const StateTrajectory& traj, const Control& u,
                         const ModelParams& params, const TimeGrid& tg, const Control& u_ref) {
    if (u_ref.nt() != u.nt())
        throw std::invalid_argument("eval_adapted_cost: reference control length mismatch");
    Control d = axpy_control(-1.0, u_ref, u);
    double extra = 0.5 * inner_control(d, d, tg);
    return eval_cost(traj, u, params, tg) + extra;
}

Control project_control(const Control& u, const ControlBounds& bounds) {
    Control out = u;
    for (int k = 0; k < out.nt(); ++k) {
        require_same_grid(out[k], bounds.u_min, "project_control");
        for (int i = 0; i < out[k].size(); ++i)
            out[k][i] = std::clamp(out[k][i], bounds.u_min[i], bounds.u_max[i]);
    }
    return out;
}

double stationarity_residual(const Control& u, const Control& grad, const ControlBounds& bounds,
                             const TimeGrid& tg) {
    if (u.nt() != grad.nt())
        throw std::invalid_argument("stationarity_residual: length mismatch");
    Control moved = project_control(axpy_control(-1.0, grad, u), bounds);
    Control d = axpy_control(-1.0, moved, u);
    return norm_control(d, tg);
}

ReducedEval reduced_eval(const ControlProblem& prob, double gamma, const Control& u,
                         GradMode mode, const Control* u_ref, const ForwardOptions& fwd) {
    check_shapes(prob);
    if (mode == GradMode::adapted && u_ref && u_ref->nt() != u.nt())
        throw std::invalid_argument("reduced_eval: reference control length mismatch");

    InitialData id = make_initial_data(prob.mu0, prob.phi0, prob.sigma0, gamma);
    ReducedEval ev;
    ev.traj = solve_state_gamma(prob.params, u, gamma, id, prob.tg, fwd);
    ev.adj = solve_adjoint(prob.params, ev.traj, prob.tg, fwd);
    ev.cost = eval_cost(ev.traj, u, prob.params, prob.tg);

    ev.grad = control_like(u);
    for (int k = 0; k < u.nt(); ++k) {
        Field& gk = ev.grad[k];
        const Field& rk = ev.adj.r[k];
        for (int i = 0; i < gk.size(); ++i) gk[i] = rk[i] + prob.params.b0 * u[k][i];
    }
    if (mode == GradMode::adapted) {
        const Control& ref = u_ref ? *u_ref : u;
        for (int k = 0; k < u.nt(); ++k)
            for (int i = 0; i < u[k].size(); ++i) ev.grad[k][i] += u[k][i] - ref[k][i];
        ev.cost_mode = eval_adapted_cost(ev.traj, u, prob.params, prob.tg,
                                         u_ref ? *u_ref : u);
    } else {
        ev.cost_mode = ev.cost;
    }
    return ev;
}

Control reduced_gradient(const ControlProblem& prob, double gamma, const Control& u,
                         GradMode mode, const Control* u_ref, const ForwardOptions& fwd) {
    return reduced_eval(prob, gamma, u, mode, u_ref, fwd).grad;
}

OptimizeResult projected_gradient(const ControlProblem& prob, double gamma, const Control& u0,
                                  const OptimizerOptions& opts, const Control* u_ref) {
    opts.validate();
    check_shapes(prob);
    const TimeGrid& tg = prob.tg;
    const ControlBounds& bounds = prob.params.bounds;

    InitialData id = make_initial_data(prob.mu0, prob.phi0, prob.sigma0, gamma);
    Control ref = (opts.mode == GradMode::adapted) ? (u_ref ? *u_ref : u0) : Control{};
    const Control* refp = (opts.mode == GradMode::adapted) ? &ref : nullptr;

    auto mode_cost = [&](const StateTrajectory& traj, const Control& u) {
        return (opts.mode == GradMode::adapted)
                   ? eval_adapted_cost(traj, u, prob.params, tg, ref)
                   : eval_cost(traj, u, prob.params, tg);
    };

    OptimizeResult out;
    out.u = project_control(u0, bounds);
    StateTrajectory traj = solve_state_gamma(prob.params, out.u, gamma, id, tg, opts.fwd);
    double cost = mode_cost(traj, out.u);

    double accepted_step = 0.0;
    int accepted_bt = 0;
    Control prev_u, prev_grad;   // spectral-step memory
    for (int iter = 0; iter < opts.max_outer_iters; ++iter) {
        AdjointTrajectory adj = solve_adjoint(prob.params, traj, tg, opts.fwd);
        Control grad = control_like(out.u);
        for (int k = 0; k < out.u.nt(); ++k)
            for (int i = 0; i < grad[k].size(); ++i) {
                double gv = adj.r[k][i] + prob.params.b0 * out.u[k][i];
                if (refp) gv += out.u[k][i] - (*refp)[k][i];
                grad[k][i] = gv;
            }
        double gnorm = norm_control(grad, tg);
        if (iter == 0) {
            out.initial_grad_norm = gnorm;
            out.stat_tol_used =
                (opts.stat_tol > 0.0) ? opts.stat_tol : opts.stat_tol_rel * gnorm;
        }
        double stat = stationarity_residual(out.u, grad, bounds, tg);
        out.history.push_back({iter, cost, stat, gnorm, accepted_step, accepted_bt});
        out.iters = iter;
        out.final_cost = cost;
        out.final_stat = stat;
        if (stat <= out.stat_tol_used) {
            out.converged = true;
            return out;
        }

        // Barzilai-Borwein trial step (clamped), Armijo-safeguarded below; the
        // spectral length is what lets the low-curvature control modes (scale
        // 1/b0) converge in tens rather than thousands of iterations.
        double tau = opts.step0;
        if (iter > 0) {
            Control s = axpy_control(-1.0, prev_u, out.u);
            Control y = axpy_control(-1.0, prev_grad, grad);
            double ss = inner_control(s, s, tg);
            double sy = inner_control(s, y, tg);
            if (std::isfinite(sy) && sy > 0.0 && ss > 0.0)
                tau = std::clamp(ss / sy, 1e-3 * opts.step0, 1e4 * opts.step0);
            else if (accepted_step > 0.0)
                tau = accepted_step;
        }
        prev_u = out.u;
        prev_grad = grad;
        bool accepted = false;
        for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
            Control ut = project_control(axpy_control(-tau, grad, out.u), bounds);
            Control d = axpy_control(-1.0, out.u, ut);
            double dsq = inner_control(d, d, tg);
            if (dsq == 0.0) break;   // projection arc is flat: stationary
            StateTrajectory trajt = solve_state_gamma(prob.params, ut, gamma, id, tg, opts.fwd);
            double ct = mode_cost(trajt, ut);
            if (ct <= cost - (opts.armijo_c / tau) * dsq) {
                out.u = std::move(ut);
                traj = std::move(trajt);
                cost = ct;
                accepted_step = tau;
                accepted_bt = bt;
                accepted = true;
                break;
            }
            tau *= opts.armijo_shrink;
        }
        if (!accepted) {
            char buf[200];
            std::snprintf(buf, sizeof(buf),
                          "projected gradient: line search failed at iteration %d "
                          "(cost %.6e, stationarity %.3e, gamma %.6g)",
                          iter, cost, stat, gamma);
            throw numerical_error(buf);
        }
    }

    // tolerance not reached within the iteration budget
    AdjointTrajectory adj = solve_adjoint(prob.params, traj, tg, opts.fwd);
    Control grad = control_like(out.u);
    for (int k = 0; k < out.u.nt(); ++k)
        for (int i = 0; i < grad[k].size(); ++i) {
            double gv = adj.r[k][i] + prob.params.b0 * out.u[k][i];
            if (refp) gv += out.u[k][i] - (*refp)[k][i];
            grad[k][i] = gv;
        }
    double stat = stationarity_residual(out.u, grad, bounds, tg);
    out.history.push_back(
        {opts.max_outer_iters, cost, stat, norm_control(grad, tg), accepted_step, accepted_bt});
    out.iters = opts.max_outer_iters;
    out.final_cost = cost;
    out.final_stat = stat;
    out.converged = (stat <= out.stat_tol_used);
    return out;
}

void QuenchSchedule::validate() const {
    if (!(gamma0 > 0.0 && gamma0 <= 1.0))
        throw config_error("quench: gamma0 must lie in (0,1]");
    if (!(ratio > 0.0 && ratio < 1.0)) throw config_error("quench: ratio must lie in (0,1)");
    if (n_levels < 1) throw config_error("quench: n_levels must be >= 1");
    if (!level_opts.empty() && level_opts.size() != 1
        && static_cast<int>(level_opts.size()) != n_levels)
        throw config_error("quench: level_opts must be empty, one entry, or one per level");
    for (const auto& o : level_opts) o.validate();
}

double QuenchSchedule::gamma(int n) const { return gamma0 * std::pow(ratio, n); }

OptimizerOptions QuenchSchedule::opts(int n) const {
    if (level_opts.empty()) {
        OptimizerOptions o;
        o.mode = GradMode::adapted;
        return o;
    }
    if (level_opts.size() == 1) return level_opts[0];
    return level_opts[static_cast<std::size_t>(n)];
}

QuenchReport deep_quench(const ControlProblem& prob, const QuenchSchedule& schedule,
                         const Control& u_init) {
    schedule.validate();
    check_shapes(prob);
    if (u_init.nt() != prob.tg.nt)
        throw std::invalid_argument("deep_quench: u_init length mismatch");

    QuenchReport report;
    report.levels.reserve(schedule.n_levels);
    Control u_ref = project_control(u_init, prob.params.bounds);

    for (int n = 0; n < schedule.n_levels; ++n) {
        QuenchLevel lvl;
        lvl.gamma = schedule.gamma(n);
        OptimizerOptions opts = schedule.opts(n);
        try {
            OptimizeResult res = projected_gradient(prob, lvl.gamma, u_ref, opts, &u_ref);
            lvl.u = res.u;
            lvl.stationarity = res.final_stat;
            lvl.initial_grad_norm = res.initial_grad_norm;
            lvl.stat_tol_used = res.stat_tol_used;
            lvl.outer_iters = res.iters;
            lvl.converged = res.converged;

            // diagnostics at the accepted control, plain-mode gradient
            ReducedEval ev = reduced_eval(prob, lvl.gamma, lvl.u, GradMode::plain, nullptr,
                                          opts.fwd);
            lvl.J = ev.cost;
            Control d = axpy_control(-1.0, u_ref, lvl.u);
            lvl.du_prev = norm_control(d, prob.tg);
            lvl.J_adapted = lvl.J + 0.5 * lvl.du_prev * lvl.du_prev;
            lvl.min_phi = ev.traj.min_phi;
            lvl.max_phi = ev.traj.max_phi;
            SlacknessReport sl = slackness_diagnostics(prob.params, ev.traj, ev.adj, prob.tg);
            lvl.s1 = sl.s1;
            lvl.s2 = sl.s2;
            lvl.vi_residual_plain =
                stationarity_residual(lvl.u, ev.grad, prob.params.bounds, prob.tg);
            if (prob.params.b0 > 0.0) {
                Control cand(lvl.u[0].grid, prob.tg.nt);
                for (int k = 0; k < prob.tg.nt; ++k)
                    for (int i = 0; i < cand[k].size(); ++i)
                        cand[k][i] = -ev.adj.r[k][i] / prob.params.b0;
                cand = project_control(cand, prob.params.bounds);
                Control pd = axpy_control(-1.0, cand, lvl.u);
                lvl.proj_identity = norm_control(pd, prob.tg);
            }
            u_ref = lvl.u;
        } catch (const std::exception& e) {
            lvl.failed = true;
            lvl.error = e.what();
        }
        report.levels.push_back(std::move(lvl));
    }
    return report;
}

std::vector<GradCheckRow> gradient_check(const ControlProblem& prob, double gamma, int n_seeds,
                                         double eps, const ForwardOptions& fwd,
                                         unsigned long long base_seed) {
    check_shapes(prob);
    if (n_seeds < 1) throw std::invalid_argument("gradient_check: n_seeds must be >= 1");
    if (!(eps > 0.0)) throw std::invalid_argument("gradient_check: eps must be > 0");
    const TimeGrid& tg = prob.tg;
    const Grid& grid = prob.mu0.grid;
    const ControlBounds& bounds = prob.params.bounds;
    InitialData id = make_initial_data(prob.mu0, prob.phi0, prob.sigma0, gamma);

    std::vector<GradCheckRow> rows;
    rows.reserve(2 * n_seeds);
    for (int s = 0; s < n_seeds; ++s) {
        std::mt19937_64 rng(base_seed + static_cast<unsigned long long>(s));
        std::uniform_real_distribution<double> unit(0.0, 1.0), sym(-1.0, 1.0);

        Control u(grid, tg.nt), psi(grid, tg.nt), ref(grid, tg.nt);
        for (int k = 0; k < tg.nt; ++k)
            for (int i = 0; i < grid.size(); ++i) {
                double lo = bounds.u_min[i], hi = bounds.u_max[i];
                u[k][i] = lo + unit(rng) * (hi - lo);
                psi[k][i] = sym(rng);
                ref[k][i] = lo + unit(rng) * (hi - lo);
            }

        StateTrajectory traj = solve_state_gamma(prob.params, u, gamma, id, tg, fwd);
        AdjointTrajectory adj = solve_adjoint(prob.params, traj, tg, fwd);
        Control grad_plain(grid, tg.nt);
        for (int k = 0; k < tg.nt; ++k)
            for (int i = 0; i < grid.size(); ++i)
                grad_plain[k][i] = adj.r[k][i] + prob.params.b0 * u[k][i];

        Control up = axpy_control(eps, psi, u);
        Control um = axpy_control(-eps, psi, u);
        StateTrajectory tp = solve_state_gamma(prob.params, up, gamma, id, tg, fwd);
        StateTrajectory tm = solve_state_gamma(prob.params, um, gamma, id, tg, fwd);
        double jp = eval_cost(tp, up, prob.params, tg);
        double jm = eval_cost(tm, um, prob.params, tg);

        GradCheckRow plain;
        plain.seed = s;
        plain.mode = GradMode::plain;
        plain.fd = (jp - jm) / (2.0 * eps);
        plain.pairing = inner_control(grad_plain, psi, tg);
        plain.rel_err = std::abs(plain.fd - plain.pairing)
                        / std::max(std::abs(plain.pairing), 1e-300);
        rows.push_back(plain);

        // adapted cost reuses the same three forward solves
        Control du = axpy_control(-1.0, ref, u);
        Control dup = axpy_control(-1.0, ref, up);
        Control dum = axpy_control(-1.0, ref, um);
        double ajp = jp + 0.5 * inner_control(dup, dup, tg);
        double ajm = jm + 0.5 * inner_control(dum, dum, tg);
        Control grad_ad = axpy_control(1.0, du, grad_plain);

        GradCheckRow ad;
        ad.seed = s;
        ad.mode = GradMode::adapted;
        ad.fd = (ajp - ajm) / (2.0 * eps);
        ad.pairing = inner_control(grad_ad, psi, tg);
        ad.rel_err = std::abs(ad.fd - ad.pairing) / std::max(std::abs(ad.pairing), 1e-300);
        rows.push_back(ad);
    }
    return rows;
}

} // namespace dq
