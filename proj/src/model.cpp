#include "dq/model.hpp"

#include <cmath>

namespace dq {

TrackingTargets TrackingTargets::constants(const Grid& g, int nt, double phi_q_val, double sigma_q_val,
                                           double phi_omega_val, double sigma_omega_val) {
    TrackingTargets t;
    t.phi_q.assign(nt + 1, Field(g, phi_q_val));
    t.sigma_q.assign(nt + 1, Field(g, sigma_q_val));
    t.phi_omega = Field(g, phi_omega_val);
    t.sigma_omega = Field(g, sigma_omega_val);
    return t;
}

ControlBounds ControlBounds::constants(const Grid& g, double lo, double hi) {
    ControlBounds b;
    b.u_min = Field(g, lo);
    b.u_max = Field(g, hi);
    b.validate();
    return b;
}

void ControlBounds::validate() const {
    require_same_grid(u_min, u_max, "ControlBounds");
    for (int i = 0; i < u_min.size(); ++i)
        if (!(u_min[i] <= u_max[i]))
            throw config_error("H2: control bounds need u_min <= u_max pointwise (cell " +
                               std::to_string(i) + ")");
}

double inner_control(const Control& a, const Control& b, const TimeGrid& tg) {
    if (a.nt() != tg.nt || b.nt() != tg.nt)
        throw std::invalid_argument("inner_control: length mismatch");
    double s = 0.0;
    for (int k = 0; k < tg.nt; ++k) s += inner_l2(a[k], b[k]);
    return s * tg.dt();
}

double norm_control(const Control& a, const TimeGrid& tg) {
    return std::sqrt(inner_control(a, a, tg));
}

Control axpy_control(double s, const Control& x, const Control& y) {
    if (x.nt() != y.nt()) throw std::invalid_argument("axpy_control: length mismatch");
    Control out = y;
    for (int k = 0; k < out.nt(); ++k) axpy(s, x[k], out[k]);
    return out;
}

std::vector<std::string> hypothesis_violations(const ModelParams& p) {
    std::vector<std::string> v;
    if (!(p.alpha > 0.0)) v.push_back("H3: alpha must be > 0");
    if (!(p.beta > 0.0)) v.push_back("H3: beta must be > 0");
    const double bs[5] = {p.b0, p.b1, p.b2, p.b3, p.b4};
    bool allzero = true;
    for (int i = 0; i < 5; ++i) {
        if (bs[i] < 0.0) v.push_back("H1: b" + std::to_string(i) + " must be >= 0");
        if (bs[i] != 0.0) allzero = false;
    }
    if (allzero) v.push_back("H1: cost weights b0..b4 must not all be zero");
    if (p.prolif.p0 < 0.0) v.push_back("H4: proliferation amplitude P0 must be >= 0");
    if (!(p.prolif.width > 0.0)) v.push_back("H4: proliferation width must be > 0");
    if (!(p.quench.p > 0.0)) v.push_back("quench exponent p must be > 0");
    try {
        p.bounds.validate();
    } catch (const config_error& e) {
        v.push_back(e.what());
    }
    return v;
}

void ModelParams::validate() const {
    auto v = hypothesis_violations(*this);
    if (!v.empty()) {
        std::string msg = v[0];
        for (size_t i = 1; i < v.size(); ++i) msg += "; " + v[i];
        throw config_error(msg);
    }
}

} // namespace dq
