#pragma once

#include <string>
#include <vector>

#include "dq/field.hpp"

// Nonlinearity catalog: the logarithmic barrier h with its derivatives, the
// vanishing quench weight g, the smooth perturbation pi (= pihat'), the
// proliferation coefficient P, and the pointwise characterization of the
// double-obstacle subdifferential.

namespace dq {

// h(s) = (1-s)ln(1-s) + (1+s)ln(1+s) on [-1,1], h(+-1) = 2 ln 2.
// h'(s) = ln((1+s)/(1-s)) and h''(s) = 2/(1-s^2) exist on (-1,1) only.
double h_eval(double s);
double h_prime(double s);
double h_second(double s);

struct QuenchWeight {
    double p = 1.0;   // g(gamma) = gamma^p
};

double g_eval(double gamma, const QuenchWeight& w);

struct PiSpec {
    enum class Kind { linear, quartic_clamped };
    Kind kind = Kind::linear;

    // smallest L with |pi(s1)-pi(s2)| <= L|s1-s2| globally
    double lipschitz_constant() const;
    std::string name() const;
    static PiSpec from_name(const std::string& name);
};

// pi(s) = -s (linear), or s^3 - s on [-2,2] continued linearly with matched
// value and slope (quartic-clamped).  The linear continuation keeps pi
// globally Lipschitz; the dynamics never leave [-1,1], where the quartic
// branch is smooth.
double pi_eval(double s, const PiSpec& spec);
double pi_prime(double s, const PiSpec& spec);
double pi_second(double s, const PiSpec& spec);

struct ProliferationSpec {
    enum class Kind { constant, smoothstep };
    Kind kind = Kind::smoothstep;
    double p0 = 1.0;      // amplitude, P in [0, p0]
    double width = 2.0;   // transition width of the smoothstep ramp, centered at 0

    double lipschitz_constant() const;
    std::string name() const;
    static ProliferationSpec from_name(const std::string& name);
    void validate() const;
};

// constant: P = p0.  smoothstep: P(s) = p0 * S(s/width + 1/2) with the C^2
// quintic S(t) = 6t^5 - 15t^4 + 10t^3 clamped to [0,1], so P ramps from 0
// at s <= -width/2 to p0 at s >= width/2.
double P_eval(double s, const ProliferationSpec& spec);
double P_prime(double s, const ProliferationSpec& spec);
double P_second(double s, const ProliferationSpec& spec);

// Pointwise check of xi against the subdifferential of I_[-1,1] at phi:
// xi = 0 strictly inside, xi >= 0 where phi = +1, xi <= 0 where phi = -1.
struct SubdiffReport {
    int n_checked = 0;
    int n_violations = 0;
    double max_violation = 0.0;
    std::vector<int> violating_cells;   // capped at 64 entries

    bool pass() const { return n_violations == 0; }
};

SubdiffReport obstacle_subdiff_check(const Field& phi, const Field& xi, double tol = 1e-8);

} // namespace dq
