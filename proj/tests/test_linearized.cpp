#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "dq/adjoint.hpp"
#include "dq/forward.hpp"
#include "dq/initdata.hpp"

using namespace dq;

namespace {

struct Setup {
    Grid g = Grid::line(16, 1.0);
    int nt = 40;
    TimeGrid tg{1.0, 40};
    double gamma = 0.25;
    ModelParams prm;
    InitialData init;
    Control u;
    ForwardOptions opts;

    Setup() : u(g, nt, 0.3) {
        prm.b1 = 1.0;
        prm.targets = TrackingTargets::constants(g, nt, 0.0, 0.0, 0.0, 0.0);
        prm.bounds = ControlBounds::constants(g, -2.0, 2.0);
        Field phi0(g), sigma0(g);
        for (int i = 0; i < g.nx; ++i) {
            phi0[i] = 0.4 * std::cos(M_PI * g.x(i));
            sigma0[i] = 0.6 + 0.2 * std::cos(M_PI * g.x(i));
        }
        init = make_initial_data(Field(g, 0.1), phi0, sigma0, gamma);
        opts.newton_tol = 1e-12;
    }
};

Control random_direction(const Grid& g, int nt, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Control psi(g, nt);
    for (int k = 0; k < nt; ++k)
        for (int i = 0; i < g.size(); ++i) psi[k][i] = dist(rng);
    return psi;
}

double series_norm_sq(const FieldSeries& a, const TimeGrid& tg) {
    double acc = 0.0;
    for (int k = 0; k < tg.nt; ++k) acc += tg.dt() * inner_l2(a[k], a[k]);
    acc += inner_l2(a[tg.nt], a[tg.nt]);   // terminal slice as well
    return acc;
}

} // namespace

TEST_CASE("zero perturbation gives the zero linearized trajectory") {
    Setup s;
    StateTrajectory base = solve_state_gamma(s.prm, s.u, s.gamma, s.init, s.tg, s.opts);
    Control zero(s.g, s.nt, 0.0);
    LinearizedTrajectory w = solve_linearized(s.prm, base, zero, s.tg, s.opts);
    for (int k = 0; k <= s.nt; ++k) {
        CHECK(norm_linf(w.eta[k]) == 0.0);
        CHECK(norm_linf(w.theta[k]) == 0.0);
        CHECK(norm_linf(w.rho[k]) == 0.0);
    }
}

TEST_CASE("linearized map starts from zero and is linear") {
    Setup s;
    StateTrajectory base = solve_state_gamma(s.prm, s.u, s.gamma, s.init, s.tg, s.opts);
    Control psi1 = random_direction(s.g, s.nt, 101);
    Control psi2 = random_direction(s.g, s.nt, 102);

    LinearizedTrajectory w1 = solve_linearized(s.prm, base, psi1, s.tg, s.opts);
    LinearizedTrajectory w2 = solve_linearized(s.prm, base, psi2, s.tg, s.opts);
    CHECK(norm_linf(w1.eta[0]) == 0.0);
    CHECK(norm_linf(w1.theta[0]) == 0.0);
    CHECK(norm_linf(w1.rho[0]) == 0.0);

    Control combo = axpy_control(2.0, psi1, axpy_control(-0.5, psi2, Control(s.g, s.nt, 0.0)));
    LinearizedTrajectory wc = solve_linearized(s.prm, base, combo, s.tg, s.opts);

    double num = 0.0, den = 0.0;
    for (int k = 0; k <= s.nt; ++k) {
        Field e_eta = wc.eta[k] - (2.0 * w1.eta[k] + -0.5 * w2.eta[k]);
        Field e_theta = wc.theta[k] - (2.0 * w1.theta[k] + -0.5 * w2.theta[k]);
        Field e_rho = wc.rho[k] - (2.0 * w1.rho[k] + -0.5 * w2.rho[k]);
        num += inner_l2(e_eta, e_eta) + inner_l2(e_theta, e_theta) + inner_l2(e_rho, e_rho);
        den += inner_l2(wc.eta[k], wc.eta[k]) + inner_l2(wc.theta[k], wc.theta[k])
               + inner_l2(wc.rho[k], wc.rho[k]);
    }
    // slack covers the accumulated CG tolerance of three separate solves
    CHECK(std::sqrt(num) <= 1e-9 * (1.0 + std::sqrt(den)));
}

TEST_CASE("taylor remainder of the state map is second order") {
    Setup s;
    StateTrajectory base = solve_state_gamma(s.prm, s.u, s.gamma, s.init, s.tg, s.opts);

    for (unsigned seed : {7u, 8u, 9u}) {
        Control psi = random_direction(s.g, s.nt, seed);
        LinearizedTrajectory w = solve_linearized(s.prm, base, psi, s.tg, s.opts);

        auto remainder = [&](double eps) {
            Control up = axpy_control(eps, psi, s.u);
            StateTrajectory tp = solve_state_gamma(s.prm, up, s.gamma, s.init, s.tg, s.opts);
            FieldSeries dmu(s.nt + 1, Field(s.g)), dphi = dmu, dsig = dmu;
            for (int k = 0; k <= s.nt; ++k) {
                dmu[k] = tp.mu[k] - base.mu[k];
                dphi[k] = tp.phi[k] - base.phi[k];
                dsig[k] = tp.sigma[k] - base.sigma[k];
                axpy(-eps, w.eta[k], dmu[k]);
                axpy(-eps, w.theta[k], dphi[k]);
                axpy(-eps, w.rho[k], dsig[k]);
            }
            double acc = series_norm_sq(dmu, s.tg) + series_norm_sq(dphi, s.tg)
                         + series_norm_sq(dsig, s.tg);
            return std::sqrt(acc);
        };

        double r1 = remainder(1e-3);
        double r2 = remainder(5e-4);
        double ratio = r1 / r2;
        CHECK(ratio >= 3.6);
        CHECK(ratio <= 4.4);
    }
}

TEST_CASE("linearized solver validates its inputs") {
    Setup s;
    StateTrajectory base = solve_state_gamma(s.prm, s.u, s.gamma, s.init, s.tg, s.opts);

    Control wrong(s.g, s.nt - 1, 0.0);
    CHECK_THROWS_AS(solve_linearized(s.prm, base, wrong, s.tg, s.opts), std::invalid_argument);

    StateTrajectory obs = base;
    obs.gamma = 0.0;   // marks obstacle mode, not differentiable
    Control psi(s.g, s.nt, 0.1);
    CHECK_THROWS_AS(solve_linearized(s.prm, obs, psi, s.tg, s.opts), std::invalid_argument);
}
