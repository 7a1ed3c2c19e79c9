#include "dq/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dq/adjoint.hpp"
#include "dq/config.hpp"
#include "dq/csv.hpp"
#include "dq/forward.hpp"
#include "dq/initdata.hpp"
#include "dq/linsolve.hpp"
#include "dq/optimize.hpp"
#include "dq/snapshot.hpp"

namespace dq {

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
    std::string config_path;
    std::string out_override;
};

struct Loaded {
    RunConfig cfg;
    RuntimeSetup rt;
    std::string out;
};

Loaded load(const CommonArgs& a) {
    Loaded l;
    l.cfg = load_config_file(a.config_path);
    l.rt = build_runtime(l.cfg);
    l.out = a.out_override.empty() ? l.rt.out_dir : a.out_override;
    fs::create_directories(l.out);
    return l;
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void write_step_logs(const std::string& path, const StateTrajectory& traj) {
    CsvWriter csv(path, {"step", "sweeps", "newton_iters", "residual", "min_phi", "max_phi"});
    for (const StepLog& s : traj.steps)
        csv.row({csv_int(s.step), csv_int(s.sweeps), csv_int(s.newton_iters),
                 csv_num(s.residual), csv_num(s.min_phi), csv_num(s.max_phi)});
}

double max_mass_residual(const StateTrajectory& traj, const Control& u, const TimeGrid& tg) {
    double m = 0.0;
    for (double r : mass_balance_residual(traj, u, tg)) m = std::max(m, std::abs(r));
    return m;
}

void write_final_snapshots(const std::string& out, const StateTrajectory& traj,
                           const TimeGrid& tg) {
    const int nt = traj.nt();
    save_snapshot(join(out, "mu_final.dqf"), traj.mu[nt], tg.t(nt));
    save_snapshot(join(out, "phi_final.dqf"), traj.phi[nt], tg.t(nt));
    save_snapshot(join(out, "sigma_final.dqf"), traj.sigma[nt], tg.t(nt));
}

int cmd_simulate(const CommonArgs& a, double gamma_flag) {
    Loaded l = load(a);
    double gamma = gamma_flag > 0.0 ? gamma_flag : l.rt.gamma;
    InitialData id = make_initial_data(l.rt.mu0, l.rt.phi0, l.rt.sigma0, gamma);
    StateTrajectory traj =
        solve_state_gamma(l.rt.params, l.rt.u_init, gamma, id, l.rt.tg, l.rt.opt.fwd);
    write_final_snapshots(l.out, traj, l.rt.tg);
    write_step_logs(join(l.out, "steps.csv"), traj);
    double mres = max_mass_residual(traj, l.rt.u_init, l.rt.tg);
    double scale = trajectory_data_scale(traj, l.rt.u_init, l.rt.tg);
    CsvWriter csv(join(l.out, "summary.csv"),
                  {"gamma", "min_phi", "max_phi", "monitored_norm", "gh_l2q",
                   "mass_residual_max", "data_scale"});
    csv.row({csv_num(gamma), csv_num(traj.min_phi), csv_num(traj.max_phi),
             csv_num(traj.monitored_norm), csv_num(traj.gh_l2q), csv_num(mres),
             csv_num(scale)});
    std::printf("simulate: gamma=%g min_phi=%.6g max_phi=%.6g mass_residual=%.3e\n", gamma,
                traj.min_phi, traj.max_phi, mres);
    return 0;
}

int cmd_simulate_obstacle(const CommonArgs& a) {
    Loaded l = load(a);
    StateTrajectory traj = solve_state_obstacle(l.rt.params, l.rt.u_init, l.rt.mu0, l.rt.phi0,
                                                l.rt.sigma0, l.rt.tg, l.rt.opt.fwd);
    write_final_snapshots(l.out, traj, l.rt.tg);
    save_snapshot(join(l.out, "xi_final.dqf"), traj.xi[traj.nt()], l.rt.tg.t(traj.nt()));
    write_step_logs(join(l.out, "steps.csv"), traj);

    int worst_k = -1;
    double worst = 0.0;
    for (int k = 1; k <= traj.nt(); ++k) {
        SubdiffReport rep = obstacle_subdiff_check(traj.phi[k], traj.xi[k], 1e-8);
        if (rep.max_violation > worst) {
            worst = rep.max_violation;
            worst_k = k;
        }
    }
    double mres = max_mass_residual(traj, l.rt.u_init, l.rt.tg);
    CsvWriter csv(join(l.out, "summary.csv"),
                  {"min_phi", "max_phi", "monitored_norm", "xi_l2q", "mass_residual_max",
                   "subdiff_max_violation", "subdiff_worst_step"});
    csv.row({csv_num(traj.min_phi), csv_num(traj.max_phi), csv_num(traj.monitored_norm),
             csv_num(traj.gh_l2q), csv_num(mres), csv_num(worst), csv_int(worst_k)});
    std::printf("simulate-obstacle: min_phi=%.6g max_phi=%.6g subdiff_violation=%.3e\n",
                traj.min_phi, traj.max_phi, worst);
    return 0;
}

int cmd_make_init(const CommonArgs& a, double gamma_flag) {
    Loaded l = load(a);
    double gamma = gamma_flag > 0.0 ? gamma_flag : l.rt.gamma;
    InitialData id = make_initial_data(l.rt.mu0, l.rt.phi0, l.rt.sigma0, gamma);
    save_snapshot(join(l.out, "mu0g.dqf"), id.mu0g);
    save_snapshot(join(l.out, "phi0g.dqf"), id.phi0g);
    save_snapshot(join(l.out, "sigma0g.dqf"), id.sigma0g);
    Field tilde = clamp_phi0(l.rt.phi0, gamma);
    Field diff = id.phi0g - l.rt.phi0;
    CsvWriter csv(join(l.out, "init.csv"),
                  {"gamma", "phi0g_linf", "separation_bound", "h1_distance_to_phi0",
                   "vnorm_phi0g", "vnorm_clamped"});
    csv.row({csv_num(gamma), csv_num(norm_linf(id.phi0g)), csv_num(1.0 - gamma / 2.0),
             csv_num(norm_h1(diff)), csv_num(norm_h1(id.phi0g)), csv_num(norm_h1(tilde))});
    std::printf("make-init: gamma=%g |phi0g|_inf=%.12g bound=%.12g\n", gamma,
                norm_linf(id.phi0g), 1.0 - gamma / 2.0);
    return 0;
}

int cmd_adjoint(const CommonArgs& a) {
    Loaded l = load(a);
    InitialData id = make_initial_data(l.rt.mu0, l.rt.phi0, l.rt.sigma0, l.rt.gamma);
    StateTrajectory traj =
        solve_state_gamma(l.rt.params, l.rt.u_init, l.rt.gamma, id, l.rt.tg, l.rt.opt.fwd);
    AdjointTrajectory adj = solve_adjoint(l.rt.params, traj, l.rt.tg, l.rt.opt.fwd);
    const int nt = l.rt.tg.nt;
    save_snapshot(join(l.out, "p0.dqf"), adj.p[0], 0.0);
    save_snapshot(join(l.out, "q0.dqf"), adj.q[0], 0.0);
    save_snapshot(join(l.out, "r0.dqf"), adj.r[0], 0.0);
    save_snapshot(join(l.out, "pT.dqf"), adj.p[nt], l.rt.tg.T);
    save_snapshot(join(l.out, "qT.dqf"), adj.q[nt], l.rt.tg.T);
    save_snapshot(join(l.out, "rT.dqf"), adj.r[nt], l.rt.tg.T);
    SlacknessReport sl = slackness_diagnostics(l.rt.params, traj, adj, l.rt.tg);
    CsvWriter csv(join(l.out, "adjoint.csv"), {"gamma", "s1", "s2", "pT_linf", "qT_linf"});
    csv.row({csv_num(l.rt.gamma), csv_num(sl.s1), csv_num(sl.s2), csv_num(norm_linf(adj.p[nt])),
             csv_num(norm_linf(adj.q[nt]))});
    std::printf("adjoint: gamma=%g s1=%.6e s2=%.6e\n", l.rt.gamma, sl.s1, sl.s2);
    return 0;
}

int cmd_grad_check(const CommonArgs& a, int seeds, double eps) {
    Loaded l = load(a);
    ControlProblem prob{l.rt.params, l.rt.mu0, l.rt.phi0, l.rt.sigma0, l.rt.tg};
    ForwardOptions fwd = l.rt.opt.fwd;
    fwd.newton_tol = std::min(fwd.newton_tol, 1e-12);
    auto rows = gradient_check(prob, l.rt.gamma, seeds, eps, fwd);
    CsvWriter csv(join(l.out, "grad_check.csv"),
                  {"seed", "mode", "fd", "pairing", "rel_err"});
    bool ok = true;
    for (const auto& r : rows) {
        csv.row({csv_int(r.seed), r.mode == GradMode::plain ? "plain" : "adapted",
                 csv_num(r.fd), csv_num(r.pairing), csv_num(r.rel_err)});
        if (!(r.rel_err <= 1e-5)) ok = false;
    }
    std::printf("grad-check: %zu probes, %s\n", rows.size(), ok ? "all within 1e-5" : "FAILED");
    return ok ? 0 : 2;
}

int cmd_optimize(const CommonArgs& a) {
    Loaded l = load(a);
    ControlProblem prob{l.rt.params, l.rt.mu0, l.rt.phi0, l.rt.sigma0, l.rt.tg};
    OptimizeResult res = projected_gradient(prob, l.rt.gamma, l.rt.u_init, l.rt.opt);
    save_control(join(l.out, "u_opt.dqc"), res.u, l.rt.tg);
    CsvWriter hist(join(l.out, "history.csv"),
                   {"iter", "cost", "stationarity", "grad_norm", "step", "backtracks"});
    for (const auto& r : res.history)
        hist.row({csv_int(r.iter), csv_num(r.cost), csv_num(r.stat), csv_num(r.grad_norm),
                  csv_num(r.step), csv_int(r.backtracks)});
    CsvWriter csv(join(l.out, "result.csv"),
                  {"gamma", "converged", "iters", "final_cost", "final_stationarity",
                   "stat_tol_used", "initial_grad_norm"});
    csv.row({csv_num(l.rt.gamma), csv_int(res.converged ? 1 : 0), csv_int(res.iters),
             csv_num(res.final_cost), csv_num(res.final_stat), csv_num(res.stat_tol_used),
             csv_num(res.initial_grad_norm)});
    std::printf("optimize: converged=%d iters=%d cost=%.8e stat=%.3e\n", res.converged ? 1 : 0,
                res.iters, res.final_cost, res.final_stat);
    return 0;
}

int cmd_quench(const CommonArgs& a) {
    Loaded l = load(a);
    ControlProblem prob{l.rt.params, l.rt.mu0, l.rt.phi0, l.rt.sigma0, l.rt.tg};
    QuenchReport rep = deep_quench(prob, l.rt.schedule, l.rt.u_init);
    CsvWriter csv(join(l.out, "quench_report.csv"),
                  {"level", "gamma", "J", "J_adapted", "du_prev", "stationarity",
                   "initial_grad_norm", "stat_tol_used", "min_phi", "max_phi", "s1", "s2",
                   "vi_residual_plain", "proj_identity", "outer_iters", "converged", "failed",
                   "error"});
    int n_ok = 0;
    for (std::size_t n = 0; n < rep.levels.size(); ++n) {
        const QuenchLevel& L = rep.levels[n];
        csv.row({csv_int((long long)n), csv_num(L.gamma), csv_num(L.J), csv_num(L.J_adapted),
                 csv_num(L.du_prev), csv_num(L.stationarity), csv_num(L.initial_grad_norm),
                 csv_num(L.stat_tol_used), csv_num(L.min_phi), csv_num(L.max_phi),
                 csv_num(L.s1), csv_num(L.s2), csv_num(L.vi_residual_plain),
                 csv_num(L.proj_identity), csv_int(L.outer_iters),
                 csv_int(L.converged ? 1 : 0), csv_int(L.failed ? 1 : 0), L.error});
        if (!L.failed) {
            ++n_ok;
            char name[64];
            std::snprintf(name, sizeof(name), "u_level_%02zu.dqc", n);
            save_control(join(l.out, name), L.u, l.rt.tg);
        }
    }
    std::printf("quench: %d/%zu levels completed\n", n_ok, rep.levels.size());
    return n_ok > 0 ? 0 : 2;
}

int cmd_oracle_ode(const CommonArgs& a, int refine) {
    Loaded l = load(a);
    auto constant_of = [](const Field& f, const char* what) {
        for (int i = 1; i < f.size(); ++i)
            if (f[i] != f[0])
                throw config_error(std::string("oracle-ode requires spatially constant ")
                                   + what);
        return f[0];
    };
    double m0 = constant_of(l.rt.mu0, "mu0");
    double f0 = constant_of(l.rt.phi0, "phi0");
    double s0 = constant_of(l.rt.sigma0, "sigma0");
    std::vector<double> u(l.rt.tg.nt);
    for (int k = 0; k < l.rt.tg.nt; ++k) u[k] = constant_of(l.rt.u_init[k], "u");

    // the PDE run uses the same gamma-level initial data as the oracle
    InitialData id = make_initial_data(l.rt.mu0, l.rt.phi0, l.rt.sigma0, l.rt.gamma);
    double m0g = id.mu0g[0], f0g = id.phi0g[0];
    (void)m0;
    (void)f0;
    ScalarTrajectory oracle =
        ode_oracle(l.rt.params, l.rt.gamma, {m0g, f0g, s0}, u, l.rt.tg, refine);
    StateTrajectory traj =
        solve_state_gamma(l.rt.params, l.rt.u_init, l.rt.gamma, id, l.rt.tg, l.rt.opt.fwd);

    CsvWriter csv(join(l.out, "oracle.csv"), {"k", "t", "err_mu", "err_phi", "err_sigma"});
    double worst = 0.0;
    for (int k = 0; k <= l.rt.tg.nt; ++k) {
        double em = std::abs(traj.mu[k][0] - oracle.mu[k]);
        double ef = std::abs(traj.phi[k][0] - oracle.phi[k]);
        double es = std::abs(traj.sigma[k][0] - oracle.sigma[k]);
        worst = std::max({worst, em, ef, es});
        csv.row({csv_int(k), csv_num(l.rt.tg.t(k)), csv_num(em), csv_num(ef), csv_num(es)});
    }
    std::printf("oracle-ode: gamma=%g max_err=%.6e (refine=%d)\n", l.rt.gamma, worst, refine);
    return 0;
}

} // namespace

int cli_dispatch(int argc, const char* const* argv) {
    CLI::App app{"deep-quench control pipeline"};
    app.require_subcommand(1);

    CommonArgs args;
    double gamma_flag = -1.0;
    int seeds = 5;
    double eps = 1e-5;
    int refine = 100;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config_path, "run configuration file")->required();
        sub->add_option("--out", args.out_override, "output directory (overrides config)");
    };

    CLI::App* c_sim = app.add_subcommand("simulate", "integrate the gamma-regularized system");
    add_common(c_sim);
    c_sim->add_option("--gamma", gamma_flag, "override model.gamma");
    CLI::App* c_obs = app.add_subcommand("simulate-obstacle", "integrate the obstacle system");
    add_common(c_obs);
    CLI::App* c_init = app.add_subcommand("make-init", "build gamma-level initial data");
    add_common(c_init);
    c_init->add_option("--gamma", gamma_flag, "override model.gamma");
    CLI::App* c_adj = app.add_subcommand("adjoint", "forward + adjoint solve");
    add_common(c_adj);
    CLI::App* c_gc = app.add_subcommand("grad-check", "finite-difference gradient check");
    add_common(c_gc);
    c_gc->add_option("--seeds", seeds, "number of random probes");
    c_gc->add_option("--eps", eps, "finite-difference step");
    CLI::App* c_opt = app.add_subcommand("optimize", "projected-gradient control solve");
    add_common(c_opt);
    CLI::App* c_q = app.add_subcommand("quench", "gamma-continuation optimization");
    add_common(c_q);
    CLI::App* c_ode = app.add_subcommand("oracle-ode", "compare against the homogeneous ODE");
    add_common(c_ode);
    c_ode->add_option("--refine", refine, "oracle substeps per time step");

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 64;
    }

    try {
        if (app.got_subcommand(c_sim)) return cmd_simulate(args, gamma_flag);
        if (app.got_subcommand(c_obs)) return cmd_simulate_obstacle(args);
        if (app.got_subcommand(c_init)) return cmd_make_init(args, gamma_flag);
        if (app.got_subcommand(c_adj)) return cmd_adjoint(args);
        if (app.got_subcommand(c_gc)) return cmd_grad_check(args, seeds, eps);
        if (app.got_subcommand(c_opt)) return cmd_optimize(args);
        if (app.got_subcommand(c_q)) return cmd_quench(args);
        if (app.got_subcommand(c_ode)) return cmd_oracle_ode(args, refine);
    } catch (const config_error& e) {
        std::fprintf(stderr, "error (invalid input):\n%s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error (invalid input): %s\n", e.what());
        return 1;
    } catch (const numerical_error& e) {
        std::fprintf(stderr, "error (numerical): %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 64;
}

} // namespace dq
