#include "dq/initdata.hpp"

#include <algorithm>
#include <cmath>

#include "dq/linsolve.hpp"

namespace dq {

static void check_gamma(double gamma) {
    if (!(gamma > 0.0) || gamma > 1.0)
        throw std::invalid_argument("initial data: gamma must be in (0,1], got " + std::to_string(gamma));
}

Field truncate_mu0(const Field& mu0, double gamma) {
    check_gamma(gamma);
    const double bound = 1.0 / gamma;
    Field out = mu0;
    for (double& x : out.v) x = std::clamp(x, -bound, bound);
    return out;
}

Field clamp_phi0(const Field& phi0, double gamma) {
    check_gamma(gamma);
    for (double x : phi0.v)
        if (std::fabs(x) > 1.0)
            throw config_error("H7: |phi0| <= 1 required, got " + std::to_string(x));
    const double bound = 1.0 - gamma / 2.0;
    Field out = phi0;
    for (double& x : out.v) x = std::clamp(x, -bound, bound);
    return out;
}

Field smooth_phi0(const Field& phi0, double gamma) {
    Field tilde = clamp_phi0(phi0, gamma);
    const Grid& g = tilde.grid;
    const int n = g.size();

    auto op = [&](const std::vector<double>& in, std::vector<double>& out) {
        apply_laplacian(g, in.data(), out.data());
        for (int i = 0; i < n; ++i) out[i] = in[i] - gamma * out[i];
    };

    Field out = tilde;   // constants are fixed points, good initial guess
    // a couple of digits tighter than required so the max-principle and
    // energy checks below the 1e-10 gates are not eaten by solver noise
    cg_solve(op, tilde.v, out.v, 1e-13, 10 * n + 100);

    // The exact solution obeys min(tilde) <= out <= max(tilde); trim the
    // leftover CG noise so the bound holds pointwise, and treat anything
    // beyond noise level as a failed solve.
    const double lo = *std::min_element(tilde.v.begin(), tilde.v.end());
    const double hi = *std::max_element(tilde.v.begin(), tilde.v.end());
    const double slack = 1e-10 * (1.0 + std::max(std::fabs(lo), std::fabs(hi)));
    for (double& x : out.v) {
        if (x < lo - slack || x > hi + slack)
            throw numerical_error("smooth_phi0: solution violates the maximum principle beyond solver noise");
        x = std::clamp(x, lo, hi);
    }
    return out;
}

InitialData make_initial_data(const Field& mu0, const Field& phi0, const Field& sigma0, double gamma) {
    require_same_grid(mu0, phi0, "make_initial_data");
    require_same_grid(mu0, sigma0, "make_initial_data");
    InitialData d;
    d.mu0 = mu0;
    d.phi0 = phi0;
    d.sigma0 = sigma0;
    d.gamma = gamma;
    d.mu0g = truncate_mu0(mu0, gamma);
    d.phi0g = smooth_phi0(phi0, gamma);
    d.sigma0g = sigma0;
    return d;
}

} // namespace dq
