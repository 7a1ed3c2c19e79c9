#pragma once

// Internal helpers shared by the forward, linearized, and adjoint steppers.
// Not installed; include only from src/.

#include <cmath>
#include <vector>

#include "dq/field.hpp"
#include "dq/linsolve.hpp"

namespace dq::detail {

inline double l2h_norm3(const Field& a, const Field& b, const Field& c) {
    return std::sqrt(inner_l2(a, a) + inner_l2(b, b) + inner_l2(c, c));
}

// Solve the SPD pair (the same block appears in the state step, its
// linearization, and the adjoint step):
//   (alpha + dt*P)x - dt*Lap x - dt*P y = bx
//   -dt*P x + (1 + dt*P)y - dt*Lap y    = by
// P >= 0 cellwise makes the block diagonally dominant symmetric.
inline CgResult musigma_block_solve(const Grid& g, double alpha, double dt,
                                    const std::vector<double>& P, const std::vector<double>& bx,
                                    const std::vector<double>& by, std::vector<double>& x,
                                    std::vector<double>& y, double tol, int max_iters) {
    const std::size_t n = g.size();
    std::vector<double> xb(2 * n), bb(2 * n), lap(n), diag(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        xb[i] = x[i];
        xb[n + i] = y[i];
        bb[i] = bx[i];
        bb[n + i] = by[i];
    }
    double stencil = 2.0 / (g.dx * g.dx);
    if (g.dim == 2) stencil += 2.0 / (g.dy * g.dy);
    for (std::size_t i = 0; i < n; ++i) {
        diag[i] = alpha + dt * P[i] + dt * stencil;
        diag[n + i] = 1.0 + dt * P[i] + dt * stencil;
    }
    std::vector<double> scratch(n);
    auto op = [&](const std::vector<double>& in, std::vector<double>& out) {
        const double* u = in.data();
        const double* v = in.data() + n;
        apply_laplacian(g, u, lap.data());
        for (std::size_t i = 0; i < n; ++i)
            out[i] = (alpha + dt * P[i]) * u[i] - dt * lap[i] - dt * P[i] * v[i];
        apply_laplacian(g, v, lap.data());
        for (std::size_t i = 0; i < n; ++i)
            out[n + i] = (1.0 + dt * P[i]) * v[i] - dt * lap[i] - dt * P[i] * u[i];
    };
    CgResult res = cg_solve(op, bb, xb, tol, max_iters, &diag);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = xb[i];
        y[i] = xb[n + i];
    }
    return res;
}

// Solve (base + extra_i) x_i - dt*Lap x = b with extra >= 0 cellwise (SPD).
inline CgResult shifted_poisson_solve(const Grid& g, double base, double dt,
                                      const std::vector<double>& extra,
                                      const std::vector<double>& b, std::vector<double>& x,
                                      double tol, int max_iters) {
    const std::size_t n = g.size();
    std::vector<double> lap(n), diag(n);
    double stencil = 2.0 / (g.dx * g.dx);
    if (g.dim == 2) stencil += 2.0 / (g.dy * g.dy);
    for (std::size_t i = 0; i < n; ++i) diag[i] = base + extra[i] + dt * stencil;
    auto op = [&](const std::vector<double>& in, std::vector<double>& out) {
        apply_laplacian(g, in.data(), lap.data());
        for (std::size_t i = 0; i < n; ++i) out[i] = (base + extra[i]) * in[i] - dt * lap[i];
    };
    return cg_solve(op, b, x, tol, max_iters, &diag);
}

inline int cg_iters_cap(const Grid& g) { return static_cast<int>(20 * g.size()) + 200; }

} // namespace dq::detail
