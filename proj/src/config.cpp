#include "dq/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "dq/snapshot.hpp"

namespace dq {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* c = s.c_str();
    char* end = nullptr;
    double v = std::strtod(c, &end);
    if (end != c + s.size()) return false;
    out = v;
    return true;
}

bool parse_int(const std::string& s, int& out) {
    if (s.empty()) return false;
    const char* c = s.c_str();
    char* end = nullptr;
    long v = std::strtol(c, &end, 10);
    if (end != c + s.size()) return false;
    out = static_cast<int>(v);
    return true;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_lines(const std::vector<std::string>& errs) {
    std::string msg;
    for (std::size_t i = 0; i < errs.size(); ++i) {
        if (i) msg += "\n";
        msg += errs[i];
    }
    return msg;
}

} // namespace

FieldSpec FieldSpec::constant(double v) {
    FieldSpec s;
    s.kind = Kind::constant;
    s.value = v;
    return s;
}

FieldSpec FieldSpec::parse(const std::string& text) {
    FieldSpec s;
    std::string t = trim(text);
    if (t.rfind("cosine:", 0) == 0) {
        s.kind = Kind::cosine;
        std::string rest = t.substr(7);
        std::vector<double> nums;
        std::stringstream ss(rest);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            double v;
            if (!parse_double(trim(cell), v))
                throw config_error("bad cosine spec '" + t + "': expected numbers");
            nums.push_back(v);
        }
        if (nums.size() != 3 && nums.size() != 4)
            throw config_error("bad cosine spec '" + t + "': need base,amp,kx[,ky]");
        s.base = nums[0];
        s.amp = nums[1];
        s.kx = nums[2];
        s.ky = nums.size() == 4 ? nums[3] : 0.0;
        return s;
    }
    double v;
    if (parse_double(t, v)) {
        s.kind = Kind::constant;
        s.value = v;
        return s;
    }
    s.kind = Kind::path;
    s.path = (t.size() > 1 && t[0] == '@') ? t.substr(1) : t;
    if (s.path.empty()) throw config_error("empty field spec");
    return s;
}

std::string FieldSpec::serialize() const {
    switch (kind) {
        case Kind::constant: return fmt17(value);
        case Kind::cosine: {
            std::string s = "cosine:" + fmt17(base) + "," + fmt17(amp) + "," + fmt17(kx);
            if (ky != 0.0) s += "," + fmt17(ky);
            return s;
        }
        case Kind::path: return "@" + path;
    }
    return "";
}

Field FieldSpec::realize(const Grid& g) const {
    switch (kind) {
        case Kind::constant: return Field(g, value);
        case Kind::cosine: {
            Field f(g);
            const double lx = g.lx(), ly = g.ly();
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    double v = base + amp * std::cos(kx * M_PI * g.x(i) / lx)
                                          * (g.dim == 2 ? std::cos(ky * M_PI * g.y(j) / ly) : 1.0);
                    f.at(i, j) = v;
                }
            return f;
        }
        case Kind::path: {
            Field f = load_snapshot(path);
            if (f.grid != g)
                throw config_error("snapshot grid mismatch: " + path);
            return f;
        }
    }
    throw config_error("unreachable field spec kind");
}

namespace {

struct KV {
    std::string value;
    int line = 0;
    bool used = false;
};

struct Parser {
    std::map<std::string, KV> kv;
    std::vector<std::string>& errs;

    void note(int line, const std::string& msg) {
        errs.push_back("line " + std::to_string(line) + ": " + msg);
    }
    KV* take(const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }
    void num(const std::string& key, double& dst) {
        if (KV* e = take(key)) {
            if (!parse_double(e->value, dst))
                note(e->line, "key '" + key + "' expects a number, got '" + e->value + "'");
        }
    }
    void integer(const std::string& key, int& dst) {
        if (KV* e = take(key)) {
            if (!parse_int(e->value, dst))
                note(e->line, "key '" + key + "' expects an integer, got '" + e->value + "'");
        }
    }
    void str(const std::string& key, std::string& dst) {
        if (KV* e = take(key)) dst = e->value;
    }
    void spec(const std::string& key, FieldSpec& dst) {
        if (KV* e = take(key)) {
            try {
                dst = FieldSpec::parse(e->value);
            } catch (const config_error& ex) {
                note(e->line, ex.what());
            }
        }
    }
};

} // namespace

RunConfig parse_config(const std::string& text) {
    std::vector<std::string> errs;
    Parser p{{}, errs};

    std::istringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            p.note(lineno, "expected 'section.key = value'");
            continue;
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || key.find('.') == std::string::npos) {
            p.note(lineno, "malformed key '" + key + "'");
            continue;
        }
        if (value.empty()) {
            p.note(lineno, "empty value for key '" + key + "'");
            continue;
        }
        if (p.kv.count(key)) {
            p.note(lineno, "duplicate key '" + key + "'");
            continue;
        }
        p.kv[key] = {value, lineno, false};
    }

    RunConfig cfg;
    p.integer("grid.dim", cfg.dim);
    p.integer("grid.nx", cfg.nx);
    p.integer("grid.ny", cfg.ny);
    p.num("grid.dx", cfg.dx);
    p.num("grid.dy", cfg.dy);
    p.num("time.T", cfg.T);
    p.integer("time.Nt", cfg.nt);
    p.num("model.alpha", cfg.alpha);
    p.num("model.beta", cfg.beta);
    p.num("model.b0", cfg.b0);
    p.num("model.b1", cfg.b1);
    p.num("model.b2", cfg.b2);
    p.num("model.b3", cfg.b3);
    p.num("model.b4", cfg.b4);
    p.str("model.pi", cfg.pi_variant);
    p.str("model.P", cfg.prolif_variant);
    p.num("model.P0", cfg.prolif_p0);
    p.num("model.P_width", cfg.prolif_width);
    p.num("model.quench_p", cfg.quench_p);
    p.num("model.gamma", cfg.gamma);
    p.spec("targets.phi_q", cfg.phi_q);
    p.spec("targets.sigma_q", cfg.sigma_q);
    p.spec("targets.phi_omega", cfg.phi_omega);
    p.spec("targets.sigma_omega", cfg.sigma_omega);
    p.spec("bounds.u_min", cfg.u_min);
    p.spec("bounds.u_max", cfg.u_max);
    p.spec("init.mu0", cfg.mu0);
    p.spec("init.phi0", cfg.phi0);
    p.spec("init.sigma0", cfg.sigma0);
    p.spec("init.u", cfg.u_init);
    p.num("quench.gamma0", cfg.gamma0);
    p.num("quench.ratio", cfg.ratio);
    p.integer("quench.n_levels", cfg.n_levels);
    p.integer("optimizer.max_outer", cfg.opt_max_outer);
    p.num("optimizer.step0", cfg.opt_step0);
    p.num("optimizer.armijo_c", cfg.opt_armijo_c);
    p.num("optimizer.shrink", cfg.opt_shrink);
    p.num("optimizer.stat_tol", cfg.opt_stat_tol);
    p.num("optimizer.stat_tol_rel", cfg.opt_stat_tol_rel);
    p.str("optimizer.mode", cfg.opt_mode);
    p.num("solver.newton_tol", cfg.newton_tol);
    p.integer("solver.newton_max_iters", cfg.newton_max_iters);
    p.str("output.dir", cfg.out_dir);

    for (const auto& [key, e] : p.kv)
        if (!e.used) p.note(e.line, "unknown key '" + key + "'");

    if (!errs.empty()) throw config_error(join_lines(errs));

    build_runtime(cfg);   // semantic validation; throws with the full list
    return cfg;
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream o;
    o << "grid.dim = " << c.dim << "\n";
    o << "grid.nx = " << c.nx << "\n";
    o << "grid.ny = " << c.ny << "\n";
    o << "grid.dx = " << fmt17(c.dx) << "\n";
    o << "grid.dy = " << fmt17(c.dy) << "\n";
    o << "time.T = " << fmt17(c.T) << "\n";
    o << "time.Nt = " << c.nt << "\n";
    o << "model.alpha = " << fmt17(c.alpha) << "\n";
    o << "model.beta = " << fmt17(c.beta) << "\n";
    o << "model.b0 = " << fmt17(c.b0) << "\n";
    o << "model.b1 = " << fmt17(c.b1) << "\n";
    o << "model.b2 = " << fmt17(c.b2) << "\n";
    o << "model.b3 = " << fmt17(c.b3) << "\n";
    o << "model.b4 = " << fmt17(c.b4) << "\n";
    o << "model.pi = " << c.pi_variant << "\n";
    o << "model.P = " << c.prolif_variant << "\n";
    o << "model.P0 = " << fmt17(c.prolif_p0) << "\n";
    o << "model.P_width = " << fmt17(c.prolif_width) << "\n";
    o << "model.quench_p = " << fmt17(c.quench_p) << "\n";
    o << "model.gamma = " << fmt17(c.gamma) << "\n";
    o << "targets.phi_q = " << c.phi_q.serialize() << "\n";
    o << "targets.sigma_q = " << c.sigma_q.serialize() << "\n";
    o << "targets.phi_omega = " << c.phi_omega.serialize() << "\n";
    o << "targets.sigma_omega = " << c.sigma_omega.serialize() << "\n";
    o << "bounds.u_min = " << c.u_min.serialize() << "\n";
    o << "bounds.u_max = " << c.u_max.serialize() << "\n";
    o << "init.mu0 = " << c.mu0.serialize() << "\n";
    o << "init.phi0 = " << c.phi0.serialize() << "\n";
    o << "init.sigma0 = " << c.sigma0.serialize() << "\n";
    o << "init.u = " << c.u_init.serialize() << "\n";
    o << "quench.gamma0 = " << fmt17(c.gamma0) << "\n";
    o << "quench.ratio = " << fmt17(c.ratio) << "\n";
    o << "quench.n_levels = " << c.n_levels << "\n";
    o << "optimizer.max_outer = " << c.opt_max_outer << "\n";
    o << "optimizer.step0 = " << fmt17(c.opt_step0) << "\n";
    o << "optimizer.armijo_c = " << fmt17(c.opt_armijo_c) << "\n";
    o << "optimizer.shrink = " << fmt17(c.opt_shrink) << "\n";
    o << "optimizer.stat_tol = " << fmt17(c.opt_stat_tol) << "\n";
    o << "optimizer.stat_tol_rel = " << fmt17(c.opt_stat_tol_rel) << "\n";
    o << "optimizer.mode = " << c.opt_mode << "\n";
    o << "solver.newton_tol = " << fmt17(c.newton_tol) << "\n";
    o << "solver.newton_max_iters = " << c.newton_max_iters << "\n";
    o << "output.dir = " << c.out_dir << "\n";
    return o.str();
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

RuntimeSetup build_runtime(const RunConfig& cfg) {
    std::vector<std::string> errs;
    RuntimeSetup rt;

    Grid g;
    g.dim = cfg.dim;
    g.nx = cfg.nx;
    g.ny = (cfg.dim == 1) ? 1 : cfg.ny;
    g.dx = cfg.dx;
    g.dy = (cfg.dim == 1) ? 1.0 : cfg.dy;
    bool grid_ok = true;
    if (cfg.dim == 1 && cfg.ny != 1) errs.push_back("grid.ny must be 1 when grid.dim = 1");
    try {
        g.validate();
    } catch (const std::exception& e) {
        errs.push_back(e.what());
        grid_ok = false;
    }
    rt.grid = g;

    try {
        rt.tg = TimeGrid(cfg.T, cfg.nt);
    } catch (const std::exception& e) {
        errs.push_back(e.what());
    }

    rt.params.alpha = cfg.alpha;
    rt.params.beta = cfg.beta;
    rt.params.b0 = cfg.b0;
    rt.params.b1 = cfg.b1;
    rt.params.b2 = cfg.b2;
    rt.params.b3 = cfg.b3;
    rt.params.b4 = cfg.b4;
    try {
        rt.params.pi = PiSpec::from_name(cfg.pi_variant);
    } catch (const std::exception& e) {
        errs.push_back(e.what());
    }
    try {
        rt.params.prolif = ProliferationSpec::from_name(cfg.prolif_variant);
        rt.params.prolif.p0 = cfg.prolif_p0;
        rt.params.prolif.width = cfg.prolif_width;
    } catch (const std::exception& e) {
        errs.push_back(e.what());
    }
    rt.params.quench.p = cfg.quench_p;

    auto realize = [&](const FieldSpec& spec, const char* what) -> Field {
        if (!grid_ok) return Field();
        try {
            return spec.realize(g);
        } catch (const std::exception& e) {
            errs.push_back(std::string(what) + ": " + e.what());
            return Field(g);
        }
    };

    Field phi_q = realize(cfg.phi_q, "targets.phi_q");
    Field sigma_q = realize(cfg.sigma_q, "targets.sigma_q");
    Field phi_omega = realize(cfg.phi_omega, "targets.phi_omega");
    Field sigma_omega = realize(cfg.sigma_omega, "targets.sigma_omega");
    rt.params.bounds.u_min = realize(cfg.u_min, "bounds.u_min");
    rt.params.bounds.u_max = realize(cfg.u_max, "bounds.u_max");
    rt.mu0 = realize(cfg.mu0, "init.mu0");
    rt.phi0 = realize(cfg.phi0, "init.phi0");
    rt.sigma0 = realize(cfg.sigma0, "init.sigma0");
    Field u0f = realize(cfg.u_init, "init.u");

    if (grid_ok && cfg.nt >= 1) {
        rt.params.targets.phi_q.assign(cfg.nt + 1, phi_q);
        rt.params.targets.sigma_q.assign(cfg.nt + 1, sigma_q);
        rt.params.targets.phi_omega = phi_omega;
        rt.params.targets.sigma_omega = sigma_omega;
        rt.u_init = Control(g, cfg.nt);
        for (int k = 0; k < cfg.nt; ++k) rt.u_init[k] = u0f;
    }

    for (const auto& v : hypothesis_violations(rt.params)) errs.push_back(v);
    if (grid_ok && norm_linf(rt.phi0) > 1.0)
        errs.push_back("H7: |phi0| <= 1 required");

    rt.gamma = cfg.gamma;
    if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0))
        errs.push_back("model.gamma must lie in (0,1]");

    rt.schedule.gamma0 = cfg.gamma0;
    rt.schedule.ratio = cfg.ratio;
    rt.schedule.n_levels = cfg.n_levels;
    if (!(cfg.gamma0 > 0.0 && cfg.gamma0 <= 1.0))
        errs.push_back("quench.gamma0 must lie in (0,1]");
    if (!(cfg.ratio > 0.0 && cfg.ratio < 1.0)) errs.push_back("quench.ratio must lie in (0,1)");
    if (cfg.n_levels < 1) errs.push_back("quench.n_levels must be >= 1");

    rt.opt.max_outer_iters = cfg.opt_max_outer;
    rt.opt.step0 = cfg.opt_step0;
    rt.opt.armijo_c = cfg.opt_armijo_c;
    rt.opt.armijo_shrink = cfg.opt_shrink;
    rt.opt.stat_tol = cfg.opt_stat_tol;
    rt.opt.stat_tol_rel = cfg.opt_stat_tol_rel;
    if (cfg.opt_mode == "plain") rt.opt.mode = GradMode::plain;
    else if (cfg.opt_mode == "adapted") rt.opt.mode = GradMode::adapted;
    else errs.push_back("optimizer.mode must be 'plain' or 'adapted'");
    try {
        rt.opt.validate();
    } catch (const std::exception& e) {
        errs.push_back(e.what());
    }

    if (!(cfg.newton_tol > 0.0)) errs.push_back("solver.newton_tol must be > 0");
    if (cfg.newton_max_iters < 1) errs.push_back("solver.newton_max_iters must be >= 1");
    rt.opt.fwd.newton_tol = cfg.newton_tol;
    rt.opt.fwd.newton_max_iters = cfg.newton_max_iters;
    rt.schedule.level_opts = {rt.opt};
    rt.out_dir = cfg.out_dir;

    if (!errs.empty()) throw config_error(join_lines(errs));
    return rt;
}

} // namespace dq
