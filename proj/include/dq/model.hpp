#pragma once

#include <string>
#include <vector>

#include "dq/field.hpp"
#include "dq/potentials.hpp"

namespace dq {

// Raised on malformed or hypothesis-violating inputs.  The CLI maps it to
// exit code 1.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrackingTargets {
    FieldSeries phi_q;      // length nt+1
    FieldSeries sigma_q;    // length nt+1
    Field phi_omega;
    Field sigma_omega;

    static TrackingTargets constants(const Grid& g, int nt, double phi_q_val, double sigma_q_val,
                                     double phi_omega_val, double sigma_omega_val);
};

struct ControlBounds {
    Field u_min;
    Field u_max;   // time-constant bounds; u_min <= u_max pointwise (H2)

    static ControlBounds constants(const Grid& g, double lo, double hi);
    void validate() const;
};

// Piecewise-constant-in-time control, one field per time cell [t_k, t_{k+1}).
struct Control {
    FieldSeries u;   // length nt

    Control() = default;
    Control(const Grid& g, int nt, double fill = 0.0) : u(nt, Field(g, fill)) {}

    int nt() const { return static_cast<int>(u.size()); }
    Field& operator[](int k) { return u[k]; }
    const Field& operator[](int k) const { return u[k]; }
};

double inner_control(const Control& a, const Control& b, const TimeGrid& tg);  // L2(Q) pairing
double norm_control(const Control& a, const TimeGrid& tg);
Control axpy_control(double s, const Control& x, const Control& y);   // y + s*x

struct ModelParams {
    double alpha = 1.0;
    double beta = 1.0;
    double b0 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0, b4 = 0.0;
    PiSpec pi;
    ProliferationSpec prolif;
    QuenchWeight quench;
    TrackingTargets targets;
    ControlBounds bounds;

    // Throws config_error naming the violated hypothesis.
    void validate() const;
};

// Collects every violation instead of stopping at the first; empty means valid.
std::vector<std::string> hypothesis_violations(const ModelParams& p);

struct StepLog {
    int step = 0;
    int sweeps = 0;         // outer coupling sweeps (or active-set sweeps)
    int newton_iters = 0;   // accumulated inner Newton iterations
    double residual = 0.0;  // final relative residual of the step system
    double min_phi = 0.0;
    double max_phi = 0.0;
};

struct StateTrajectory {
    FieldSeries mu, phi, sigma;   // length nt+1
    FieldSeries xi;               // obstacle mode only (xi[0] = 0), else empty
    double gamma = 0.0;           // 0 marks obstacle mode
    double alpha_weight = 1.0;    // alpha used by the producing solve
    std::vector<StepLog> steps;

    double min_phi = 0.0, max_phi = 0.0;  // realized separation bounds over Q
    double monitored_norm = 0.0;          // discrete shadow of the Y-norm bound
    double gh_l2q = 0.0;                  // ||g(gamma) h'(phi)||_{L2(Q)}, gamma-mode

    bool obstacle_mode() const { return gamma == 0.0; }
    int nt() const { return static_cast<int>(mu.size()) - 1; }
};

struct InitialData {
    Field mu0, phi0, sigma0;      // base data
    double gamma = 0.0;
    Field mu0g, phi0g, sigma0g;   // approximants
};

struct LinearizedTrajectory {
    FieldSeries eta, theta, rho;  // length nt+1, zero at k = 0
};

struct AdjointTrajectory {
    FieldSeries q, p, r;     // length nt+1; entries at nt hold the final conditions
    FieldSeries lambda;      // g(gamma) h''(phi_k) q_k, gamma-mode only
};

} // namespace dq
