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

void require_gamma_base(const StateTrajectory& base, const TimeGrid& tg, const char* where) {
    if (base.obstacle_mode())
        throw std::invalid_argument(std::string(where)
                                    + ": base trajectory must come from a gamma > 0 solve");
    if (base.nt() != tg.nt)
        throw std::invalid_argument(std::string(where) + ": base trajectory length mismatch");
}

} // namespace

LinearizedTrajectory solve_linearized(const ModelParams& params, const StateTrajectory& base,
                                      const Control& psi, const TimeGrid& tg,
                                      const ForwardOptions& opts) {
    params.validate();
    require_gamma_base(base, tg, "solve_linearized");
    if (psi.nt() != tg.nt)
        throw std::invalid_argument("solve_linearized: control perturbation length mismatch");

    const Grid& g = base.phi[0].grid;
    const std::size_t n = g.size();
    const double dt = tg.dt();
    const double alpha = params.alpha, beta = params.beta;
    const double gcoef = g_eval(base.gamma, params.quench);
    const int cg_cap = detail::cg_iters_cap(g);

    LinearizedTrajectory lin;
    lin.eta.assign(tg.nt + 1, Field(g));
    lin.theta.assign(tg.nt + 1, Field(g));
    lin.rho.assign(tg.nt + 1, Field(g));

    std::vector<double> Pk(n), dpik(n), ck(n), hss(n), lap(n);
    std::vector<double> beta_rhs(n), bx(n), by(n), btheta(n);
    Field eta(g), theta(g), rho(g);

    for (int k = 0; k < tg.nt; ++k) {
        const Field& phik = base.phi[k];
        const Field& phin = base.phi[k + 1];
        for (std::size_t i = 0; i < n; ++i) {
            Pk[i] = P_eval(phik[i], params.prolif);
            dpik[i] = pi_prime(phik[i], params.pi);
            ck[i] = P_prime(phik[i], params.prolif) * (base.sigma[k + 1][i] - base.mu[k + 1][i]);
            hss[i] = dt * gcoef * h_second(phin[i]);
        }
        const Field& ek = lin.eta[k];
        const Field& tk = lin.theta[k];
        const Field& rk = lin.rho[k];
        const Field& pk = psi[k];

        const double scale = 1.0 + detail::l2h_norm3(ek, tk, rk) + norm_l2(pk);
        const double target = opts.newton_tol * scale;

        auto residual = [&]() {
            double acc = 0.0;
            apply_laplacian(g, eta.v.data(), lap.data());
            for (std::size_t i = 0; i < n; ++i) {
                double f = (alpha + dt * Pk[i]) * eta[i] - dt * lap[i] - dt * Pk[i] * rho[i]
                           + theta[i] - alpha * ek[i] - (1.0 + dt * ck[i]) * tk[i];
                acc += f * f;
            }
            apply_laplacian(g, theta.v.data(), lap.data());
            for (std::size_t i = 0; i < n; ++i) {
                double f = (beta + hss[i]) * theta[i] - dt * lap[i] - dt * eta[i]
                           - beta * tk[i] + dt * dpik[i] * tk[i];
                acc += f * f;
            }
            apply_laplacian(g, rho.v.data(), lap.data());
            for (std::size_t i = 0; i < n; ++i) {
                double f = (1.0 + dt * Pk[i]) * rho[i] - dt * lap[i] - dt * Pk[i] * eta[i]
                           - rk[i] + dt * ck[i] * tk[i] - dt * pk[i];
                acc += f * f;
            }
            return std::sqrt(acc * g.cell_volume());
        };

        for (std::size_t i = 0; i < n; ++i)
            btheta[i] = beta * tk[i] - dt * dpik[i] * tk[i];

        double res = 0.0;
        int sweep = 0;
        for (; sweep < opts.max_sweeps; ++sweep) {
            // theta-solve at the current eta
            std::vector<double> b2(n);
            for (std::size_t i = 0; i < n; ++i) b2[i] = btheta[i] + dt * eta[i];
            double b2n = 0.0;
            for (double v : b2) b2n += v * v;
            b2n = std::sqrt(b2n * g.cell_volume());
            double cg_tol = std::clamp(0.1 * target / std::max(b2n, 1e-300), 1e-14, 1e-2);
            detail::shifted_poisson_solve(g, beta, dt, hss, b2, theta.v, cg_tol, cg_cap);

            // coupled (eta, rho) block at the updated theta
            for (std::size_t i = 0; i < n; ++i) {
                bx[i] = alpha * ek[i] + (1.0 + dt * ck[i]) * tk[i] - theta[i];
                by[i] = rk[i] - dt * ck[i] * tk[i] + dt * pk[i];
            }
            double bn = 0.0;
            for (std::size_t i = 0; i < n; ++i) bn += bx[i] * bx[i] + by[i] * by[i];
            bn = std::sqrt(bn * g.cell_volume());
            cg_tol = std::clamp(0.1 * target / std::max(bn, 1e-300), 1e-14, 1e-2);
            detail::musigma_block_solve(g, alpha, dt, Pk, bx, by, eta.v, rho.v, cg_tol,
                                        2 * cg_cap);

            res = residual();
            if (res <= target) break;
        }
        if (res > target) {
            char buf[128];
            std::snprintf(buf, sizeof(buf),
                          "linearized step %d: coupling sweeps did not contract", k);
            throw numerical_error(buf);
        }
        lin.eta[k + 1] = eta;
        lin.theta[k + 1] = theta;
        lin.rho[k + 1] = rho;
    }
    return lin;
}

} // namespace dq
