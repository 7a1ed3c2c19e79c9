#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "dq/adjoint.hpp"
#include "dq/linsolve.hpp"
#include "dq/potentials.hpp"
#include "stepcore.hpp"

namespace dq {

namespace {

double vec_l2h(const std::vector<double>& a, const Grid& g) {
    double acc = 0.0;
    for (double x : a) acc += x * x;
    return std::sqrt(acc * g.cell_volume());
}

} // namespace

// Backward recursion: at each interval k the triple y = (y1, y2, y3) solves
// the transpose of the linearized step matrix applied to the carried
// right-hand side zeta, i.e.
//   (alpha + dt P_k) y1 - dt*Lap y1 - dt y2 - dt P_k y3 = zeta1
//   (beta + dt g h''(phi_{k+1})) y2 - dt*Lap y2 + y1    = zeta2
//   (1 + dt P_k) y3 - dt*Lap y3 - dt P_k y1             = zeta3
// then zeta is pulled back through the old-level coefficients and the
// tracking sources are added.  Stored: p = y1, q = -y2, r = y3.
AdjointTrajectory solve_adjoint(const ModelParams& params, const StateTrajectory& base,
                                const TimeGrid& tg, const ForwardOptions& opts) {
    params.validate();
    if (base.obstacle_mode())
        throw std::invalid_argument("solve_adjoint: base trajectory must come from gamma > 0");
    if (base.nt() != tg.nt)
        throw std::invalid_argument("solve_adjoint: base trajectory length mismatch");
    const int nt = tg.nt;
    if (static_cast<int>(params.targets.phi_q.size()) != nt + 1
        || static_cast<int>(params.targets.sigma_q.size()) != nt + 1)
        throw std::invalid_argument("solve_adjoint: tracking targets must have nt + 1 entries");

    const Grid& g = base.phi[0].grid;
    const std::size_t n = g.size();
    const double dt = tg.dt();
    const double alpha = params.alpha, beta = params.beta;
    const double gcoef = g_eval(base.gamma, params.quench);
    const int cg_cap = detail::cg_iters_cap(g);

    AdjointTrajectory adj;
    adj.p.assign(nt + 1, Field(g));
    adj.q.assign(nt + 1, Field(g));
    adj.r.assign(nt + 1, Field(g));

    // terminal values and the recursion seed
    Field z1(g), z2(g), z3(g);
    for (std::size_t i = 0; i < n; ++i) {
        z2[i] = params.b2 * (base.phi[nt][i] - params.targets.phi_omega[i]);
        z3[i] = params.b4 * (base.sigma[nt][i] - params.targets.sigma_omega[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        adj.p[nt][i] = 0.0;
        adj.q[nt][i] = -z2[i] / beta;
        adj.r[nt][i] = z3[i];
    }

    std::vector<double> Pk(n), hss(n), ck(n), dpik(n), lap(n), bx(n), by(n), b2(n);
    Field y1(g), y2(g), y3(g);

    for (int k = nt - 1; k >= 0; --k) {
        const Field& phik = base.phi[k];
        const Field& phin = base.phi[k + 1];
        for (std::size_t i = 0; i < n; ++i) {
            Pk[i] = P_eval(phik[i], params.prolif);
            dpik[i] = pi_prime(phik[i], params.pi);
            ck[i] = P_prime(phik[i], params.prolif) * (base.sigma[k + 1][i] - base.mu[k + 1][i]);
            hss[i] = dt * gcoef * h_second(phin[i]);
        }

        const double scale = 1.0 + detail::l2h_norm3(z1, z2, z3);
        const double target = opts.newton_tol * scale;

        auto residual = [&]() {
            double acc = 0.0;
            apply_laplacian(g, y1.v.data(), lap.data());
            for (std::size_t i = 0; i < n; ++i) {
                double f = (alpha + dt * Pk[i]) * y1[i] - dt * lap[i] - dt * y2[i]
                           - dt * Pk[i] * y3[i] - z1[i];
                acc += f * f;
            }
            apply_laplacian(g, y2.v.data(), lap.data());
            for (std::size_t i = 0; i < n; ++i) {
                double f = (beta + hss[i]) * y2[i] - dt * lap[i] + y1[i] - z2[i];
                acc += f * f;
            }
            apply_laplacian(g, y3.v.data(), lap.data());
            for (std::size_t i = 0; i < n; ++i) {
                double f = (1.0 + dt * Pk[i]) * y3[i] - dt * lap[i] - dt * Pk[i] * y1[i] - z3[i];
                acc += f * f;
            }
            return std::sqrt(acc * g.cell_volume());
        };

        double res = 0.0;
        int sweep = 0;
        for (; sweep < opts.max_sweeps; ++sweep) {
            // (y1, y3) block at the current y2
            for (std::size_t i = 0; i < n; ++i) {
                bx[i] = z1[i] + dt * y2[i];
                by[i] = z3[i];
            }
            double bn = 0.0;
            for (std::size_t i = 0; i < n; ++i) bn += bx[i] * bx[i] + by[i] * by[i];
            bn = std::sqrt(bn * g.cell_volume());
            double cg_tol = std::clamp(0.1 * target / std::max(bn, 1e-300), 1e-14, 1e-2);
            detail::musigma_block_solve(g, alpha, dt, Pk, bx, by, y1.v, y3.v, cg_tol, 2 * cg_cap);

            // y2-solve at the updated y1
            for (std::size_t i = 0; i < n; ++i) b2[i] = z2[i] - y1[i];
            cg_tol = std::clamp(0.1 * target / std::max(vec_l2h(b2, g), 1e-300), 1e-14, 1e-2);
            detail::shifted_poisson_solve(g, beta, dt, hss, b2, y2.v, cg_tol, cg_cap);

            res = residual();
            if (res <= target) break;
        }
        if (res > target) {
            char buf[128];
            std::snprintf(buf, sizeof(buf),
                          "adjoint step %d: coupling sweeps did not contract", k);
            throw numerical_error(buf);
        }

        adj.p[k] = y1;
        for (std::size_t i = 0; i < n; ++i) adj.q[k][i] = -y2[i];
        adj.r[k] = y3;

        if (k >= 1) {
            // zeta <- E0^T y + tracking sources at level k
            const Field& phiq = params.targets.phi_q[k];
            const Field& sgq = params.targets.sigma_q[k];
            for (std::size_t i = 0; i < n; ++i) {
                z1[i] = alpha * y1[i];
                z2[i] = (1.0 + dt * ck[i]) * y1[i] + (beta - dt * dpik[i]) * y2[i]
                        - dt * ck[i] * y3[i] + params.b1 * dt * (base.phi[k][i] - phiq[i]);
                z3[i] = y3[i] + params.b3 * dt * (base.sigma[k][i] - sgq[i]);
            }
        }
    }

    adj.lambda = compute_lambda(params, base, adj);
    return adj;
}

FieldSeries compute_lambda(const ModelParams& params, const StateTrajectory& base,
                           const AdjointTrajectory& adj) {
    if (base.obstacle_mode())
        throw std::invalid_argument("compute_lambda: requires a gamma > 0 base trajectory");
    const double gcoef = g_eval(base.gamma, params.quench);
    const int nt = base.nt();
    if (static_cast<int>(adj.q.size()) != nt + 1)
        throw std::invalid_argument("compute_lambda: adjoint length mismatch");
    FieldSeries lam(nt + 1, Field(base.phi[0].grid));
    for (int k = 0; k <= nt; ++k) {
        const Field& phi = base.phi[k];
        for (int i = 0; i < phi.size(); ++i)
            lam[k][i] = gcoef * h_second(phi[i]) * adj.q[k][i];
    }
    return lam;
}

SlacknessReport slackness_diagnostics(const ModelParams& params, const StateTrajectory& base,
                                      const AdjointTrajectory& adj, const TimeGrid& tg,
                                      const FieldSeries* test) {
    const int nt = tg.nt;
    if (base.nt() != nt || static_cast<int>(adj.q.size()) != nt + 1)
        throw std::invalid_argument("slackness_diagnostics: length mismatch");
    FieldSeries lam = adj.lambda.empty() ? compute_lambda(params, base, adj) : adj.lambda;

    const Grid& g = base.phi[0].grid;
    FieldSeries default_test;
    if (!test) {
        default_test.reserve(nt + 1);
        for (int k = 0; k <= nt; ++k) default_test.emplace_back(g, tg.t(k));
        test = &default_test;
    }
    if (static_cast<int>(test->size()) < nt)
        throw std::invalid_argument("slackness_diagnostics: test series too short");
    if (norm_linf((*test)[0]) != 0.0)
        throw std::invalid_argument("slackness_diagnostics: test function must vanish at t = 0");

    const double dt = tg.dt();
    SlacknessReport rep;
    for (int k = 0; k < nt; ++k) {
        rep.s1 += dt * inner_l2(lam[k], adj.q[k]);
        double acc = 0.0;
        const Field& phi = base.phi[k];
        const Field& tf = (*test)[k];
        for (int i = 0; i < phi.size(); ++i)
            acc += lam[k][i] * (1.0 - phi[i] * phi[i]) * tf[i];
        rep.s2 += dt * acc * g.cell_volume();
    }
    return rep;
}

} // namespace dq
