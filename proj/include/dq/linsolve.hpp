#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dq {

// Raised by the steppers / solvers on non-convergence, separation loss,
// active-set cycling and the like.  The CLI maps it to exit code 2.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CgResult {
    int iters = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

// Preconditioned conjugate gradient for SPD operators given as a callback
// op(x, y) computing y = A x.  `diag` is an optional Jacobi preconditioner
// (pass nullptr to disable).  Convergence is on ||b - A x|| <= tol * ||b||
// (absolute floor for b = 0).  x is used as the initial guess.
inline CgResult cg_solve(const std::function<void(const std::vector<double>&, std::vector<double>&)>& op,
                         const std::vector<double>& b, std::vector<double>& x,
                         double tol, int max_iters, const std::vector<double>* diag = nullptr) {
    const size_t n = b.size();
    if (x.size() != n) x.assign(n, 0.0);

    std::vector<double> r(n), z(n), p(n), ap(n);
    op(x, ap);
    for (size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];

    double bnorm = 0.0;
    for (double v : b) bnorm += v * v;
    bnorm = std::sqrt(bnorm);
    const double stop = tol * (bnorm > 0.0 ? bnorm : 1.0);

    auto precond = [&](const std::vector<double>& in, std::vector<double>& out) {
        if (diag) {
            for (size_t i = 0; i < n; ++i) out[i] = in[i] / (*diag)[i];
        } else {
            out = in;
        }
    };

    double rnorm = 0.0;
    for (double v : r) rnorm += v * v;
    rnorm = std::sqrt(rnorm);

    CgResult res;
    if (rnorm <= stop) {
        res.converged = true;
        res.rel_residual = rnorm / (bnorm > 0.0 ? bnorm : 1.0);
        return res;
    }

    precond(r, z);
    p = z;
    double rz = 0.0;
    for (size_t i = 0; i < n; ++i) rz += r[i] * z[i];

    for (int it = 1; it <= max_iters; ++it) {
        op(p, ap);
        double pap = 0.0;
        for (size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
        if (!(pap > 0.0))
            throw numerical_error("cg_solve: operator not positive definite (p'Ap = " +
                                  std::to_string(pap) + ")");
        const double alpha = rz / pap;
        for (size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = 0.0;
        for (double v : r) rnorm += v * v;
        rnorm = std::sqrt(rnorm);
        res.iters = it;
        if (rnorm <= stop) {
            res.converged = true;
            break;
        }
        precond(r, z);
        double rz_new = 0.0;
        for (size_t i = 0; i < n; ++i) rz_new += r[i] * z[i];
        const double beta = rz_new / rz;
        rz = rz_new;
        for (size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    res.rel_residual = rnorm / (bnorm > 0.0 ? bnorm : 1.0);
    if (!res.converged)
        throw numerical_error("cg_solve: no convergence after " + std::to_string(max_iters) +
                              " iterations, rel residual " + std::to_string(res.rel_residual));
    return res;
}

} // namespace dq
