#include "dq/potentials.hpp"

#include <cmath>
#include <stdexcept>

namespace dq {

static void require_closed_unit(double s, const char* who) {
    if (std::fabs(s) > 1.0)
        throw std::invalid_argument(std::string(who) + ": |s| <= 1 required, got s = " + std::to_string(s));
}

static void require_open_unit(double s, const char* who) {
    if (std::fabs(s) >= 1.0)
        throw std::invalid_argument(std::string(who) + ": |s| < 1 required, got s = " + std::to_string(s));
}

double h_eval(double s) {
    require_closed_unit(s, "h_eval");
    if (s == 1.0 || s == -1.0) return 2.0 * std::log(2.0);
    // (1-s)ln(1-s) + (1+s)ln(1+s); each term -> 0 at its own endpoint
    return (1.0 - s) * std::log(1.0 - s) + (1.0 + s) * std::log(1.0 + s);
}

double h_prime(double s) {
    require_open_unit(s, "h_prime");
    return std::log((1.0 + s) / (1.0 - s));
}

double h_second(double s) {
    require_open_unit(s, "h_second");
    return 2.0 / ((1.0 - s) * (1.0 + s));
}

double g_eval(double gamma, const QuenchWeight& w) {
    if (!(gamma > 0.0) || gamma > 1.0)
        throw std::invalid_argument("g_eval: gamma must be in (0,1], got " + std::to_string(gamma));
    if (!(w.p > 0.0))
        throw std::invalid_argument("g_eval: quench exponent p must be > 0");
    return std::pow(gamma, w.p);
}

std::string PiSpec::name() const {
    return kind == Kind::linear ? "linear" : "quartic-clamped";
}

PiSpec PiSpec::from_name(const std::string& name) {
    PiSpec s;
    if (name == "linear") s.kind = Kind::linear;
    else if (name == "quartic-clamped") s.kind = Kind::quartic_clamped;
    else throw std::invalid_argument("unknown pi variant '" + name + "'");
    return s;
}

double PiSpec::lipschitz_constant() const {
    // linear: |pi'| = 1.  quartic: max of |3s^2-1| on [-2,2] is 11, and the
    // linear tails keep that slope.
    return kind == Kind::linear ? 1.0 : 11.0;
}

double pi_eval(double s, const PiSpec& spec) {
    if (spec.kind == PiSpec::Kind::linear) return -s;
    if (s > 2.0) return 6.0 + 11.0 * (s - 2.0);
    if (s < -2.0) return -6.0 + 11.0 * (s + 2.0);
    return s * s * s - s;
}

double pi_prime(double s, const PiSpec& spec) {
    if (spec.kind == PiSpec::Kind::linear) return -1.0;
    if (s > 2.0 || s < -2.0) return 11.0;
    return 3.0 * s * s - 1.0;
}

double pi_second(double s, const PiSpec& spec) {
    if (spec.kind == PiSpec::Kind::linear) return 0.0;
    if (s > 2.0 || s < -2.0) return 0.0;
    return 6.0 * s;
}

std::string ProliferationSpec::name() const {
    return kind == Kind::constant ? "constant" : "smoothstep";
}

ProliferationSpec ProliferationSpec::from_name(const std::string& name) {
    ProliferationSpec s;
    if (name == "constant") s.kind = Kind::constant;
    else if (name == "smoothstep") s.kind = Kind::smoothstep;
    else throw std::invalid_argument("unknown P variant '" + name + "'");
    return s;
}

void ProliferationSpec::validate() const {
    if (p0 < 0.0) throw std::invalid_argument("ProliferationSpec: P0 must be >= 0");
    if (!(width > 0.0)) throw std::invalid_argument("ProliferationSpec: width must be > 0");
}

double ProliferationSpec::lipschitz_constant() const {
    if (kind == Kind::constant) return 0.0;
    // max S'(t) = S'(1/2) = 15/8 on [0,1], scaled by p0/width
    return p0 * (15.0 / 8.0) / width;
}

// C^2 quintic smoothstep on [0,1]
static double quintic(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

static double quintic_d1(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return t * t * (30.0 + t * (-60.0 + 30.0 * t));
}

static double quintic_d2(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return t * (60.0 + t * (-180.0 + 120.0 * t));
}

double P_eval(double s, const ProliferationSpec& spec) {
    if (spec.kind == ProliferationSpec::Kind::constant) return spec.p0;
    return spec.p0 * quintic(s / spec.width + 0.5);
}

double P_prime(double s, const ProliferationSpec& spec) {
    if (spec.kind == ProliferationSpec::Kind::constant) return 0.0;
    return spec.p0 / spec.width * quintic_d1(s / spec.width + 0.5);
}

double P_second(double s, const ProliferationSpec& spec) {
    if (spec.kind == ProliferationSpec::Kind::constant) return 0.0;
    return spec.p0 / (spec.width * spec.width) * quintic_d2(s / spec.width + 0.5);
}

SubdiffReport obstacle_subdiff_check(const Field& phi, const Field& xi, double tol) {
    require_same_grid(phi, xi, "obstacle_subdiff_check");
    SubdiffReport rep;
    rep.n_checked = phi.size();
    for (int i = 0; i < phi.size(); ++i) {
        if (std::fabs(phi[i]) > 1.0 + tol)
            throw std::invalid_argument("obstacle_subdiff_check: |phi| > 1 + tol at cell " +
                                        std::to_string(i) + " (phi = " + std::to_string(phi[i]) + ")");
        double viol = 0.0;
        if (phi[i] >= 1.0 - tol) {
            viol = std::max(0.0, -tol - xi[i]);          // xi >= -tol required
        } else if (phi[i] <= -1.0 + tol) {
            viol = std::max(0.0, xi[i] - tol);           // xi <= tol required
        } else {
            viol = std::max(0.0, std::fabs(xi[i]) - tol); // xi = 0 required
        }
        if (viol > 0.0) {
            ++rep.n_violations;
            if (rep.violating_cells.size() < 64) rep.violating_cells.push_back(i);
            rep.max_violation = std::max(rep.max_violation, viol);
        }
    }
    return rep;
}

} // namespace dq
