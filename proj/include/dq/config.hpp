#pragma once

#include <string>
#include <vector>

#include "dq/forward.hpp"
#include "dq/model.hpp"
#include "dq/optimize.hpp"

// Line-oriented run configuration: `section.key = value` pairs, `#` starts a
// comment, blank lines ignored.  Unknown keys, syntax errors, and every
// violated model hypothesis are collected and reported together, each with
// its line number or hypothesis tag.
//
// Field-valued entries accept three forms:
//   0.25                      constant
//   cosine:base,amp,kx[,ky]   base + amp*cos(kx*pi*x/Lx)[*cos(ky*pi*y/Ly)]
//   @relative/or/abs/path     DQF1 snapshot on disk
// The cosine form samples Neumann-compatible modes at cell centers.

namespace dq {

struct FieldSpec {
    enum class Kind { constant, cosine, path };
    Kind kind = Kind::constant;
    double value = 0.0;
    double base = 0.0, amp = 0.0, kx = 0.0, ky = 0.0;
    std::string path;

    static FieldSpec constant(double v);
    static FieldSpec parse(const std::string& text);
    std::string serialize() const;
    Field realize(const Grid& g) const;   // loads or evaluates
};

struct RunConfig {
    int dim = 1, nx = 64, ny = 1;
    double dx = 1.0 / 64.0, dy = 1.0;
    double T = 1.0;
    int nt = 1000;

    double alpha = 1.0, beta = 1.0;
    double b0 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0, b4 = 0.0;
    std::string pi_variant = "linear";
    std::string prolif_variant = "smoothstep";
    double prolif_p0 = 1.0;
    double prolif_width = 2.0;
    double quench_p = 1.0;
    double gamma = 0.25;   // level used by the single-gamma subcommands

    FieldSpec phi_q, sigma_q, phi_omega, sigma_omega;
    FieldSpec u_min = FieldSpec::constant(-1.0), u_max = FieldSpec::constant(1.0);
    FieldSpec mu0, phi0, sigma0;
    FieldSpec u_init;

    double gamma0 = 0.5, ratio = 0.5;
    int n_levels = 7;

    int opt_max_outer = 200;
    double opt_step0 = 1.0, opt_armijo_c = 1e-4, opt_shrink = 0.5;
    double opt_stat_tol = 0.0, opt_stat_tol_rel = 1e-6;
    std::string opt_mode = "adapted";

    double newton_tol = 1e-10;
    int newton_max_iters = 50;

    std::string out_dir = "out";
};

// Parse and fully validate; throws config_error whose message lists every
// violation (one per line).
RunConfig parse_config(const std::string& text);

std::string serialize_config(const RunConfig& cfg);

RunConfig load_config_file(const std::string& path);

// Materialized runtime objects built from a validated config.
struct RuntimeSetup {
    Grid grid;
    TimeGrid tg;
    ModelParams params;
    Field mu0, phi0, sigma0;
    Control u_init;
    double gamma = 0.25;
    QuenchSchedule schedule;
    OptimizerOptions opt;
    std::string out_dir;
};

RuntimeSetup build_runtime(const RunConfig& cfg);

} // namespace dq
