#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "dq/cli.hpp"
#include "dq/config.hpp"
#include "dq/csv.hpp"
#include "dq/snapshot.hpp"

using namespace dq;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("dq_test_io_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

int run_cli(std::initializer_list<std::string> args) {
    std::vector<std::string> store = {"dq"};
    store.insert(store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : store) argv.push_back(s.c_str());
    return cli_dispatch(static_cast<int>(argv.size()), argv.data());
}

std::string tiny_config(const std::string& out_dir) {
    return "# minimal run\n"
           "grid.nx = 16\n"
           "grid.dx = 0.0625\n"
           "time.T = 0.1\n"
           "time.Nt = 8\n"
           "model.b1 = 1\n"
           "model.gamma = 0.25\n"
           "init.phi0 = cosine:0,0.3,1\n"
           "init.sigma0 = 0.5\n"
           "output.dir = " + out_dir + "\n";
}

} // namespace

// -------- field specs ----------------------------------------------------------

TEST_CASE("field spec forms parse, serialize, and realize") {
    FieldSpec c = FieldSpec::parse("0.25");
    CHECK(c.kind == FieldSpec::Kind::constant);
    CHECK(c.value == 0.25);
    CHECK(c.serialize() == "0.25");

    FieldSpec w = FieldSpec::parse(" cosine:0.5, 0.25, 2 ");
    CHECK(w.kind == FieldSpec::Kind::cosine);
    Grid g = Grid::line(8, 1.0);
    Field f = w.realize(g);
    for (int i = 0; i < g.nx; ++i)
        CHECK(f[i] == doctest::Approx(0.5 + 0.25 * std::cos(2.0 * M_PI * g.x(i))).epsilon(1e-15));
    CHECK(FieldSpec::parse(w.serialize()).serialize() == w.serialize());

    FieldSpec p = FieldSpec::parse("@some/dir/state.dqf");
    CHECK(p.kind == FieldSpec::Kind::path);
    CHECK(p.path == "some/dir/state.dqf");
    CHECK(p.serialize() == "@some/dir/state.dqf");

    CHECK_THROWS_AS(FieldSpec::parse("cosine:1,2"), config_error);
    CHECK_THROWS_AS(FieldSpec::parse("cosine:a,b,c"), config_error);
}

// -------- config grammar ---------------------------------------------------------

TEST_CASE("config serialization round-trips through the parser") {
    RunConfig cfg = parse_config(tiny_config("out"));
    CHECK(cfg.nx == 16);
    CHECK(cfg.nt == 8);
    CHECK(cfg.b1 == 1.0);
    CHECK(cfg.phi0.kind == FieldSpec::Kind::cosine);

    std::string s1 = serialize_config(cfg);
    std::string s2 = serialize_config(parse_config(s1));
    CHECK(s1 == s2);
}

TEST_CASE("every violation is reported in one pass") {
    // grid kept valid so the bounds fields realize and H2 is reachable
    std::string text =
        "grid.nx = 16\n"
        "grid.dx = 0.0625\n"
        "time.T = 0\n"
        "model.beta = 0\n"
        "bounds.u_min = 2\n"
        "bounds.u_max = 1\n";
    try {
        parse_config(text);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("H3") != std::string::npos);   // beta > 0
        CHECK(msg.find("H1") != std::string::npos);   // all cost weights zero
        CHECK(msg.find("H2") != std::string::npos);   // crossed control bounds
        CHECK(msg.find("T must be > 0") != std::string::npos);
    }

    // a broken grid still reports the scalar hypothesis violations
    try {
        parse_config("grid.nx = 1\ntime.T = 0\nmodel.beta = 0\n");
        FAIL("expected config_error");
    } catch (const config_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("nx") != std::string::npos);
        CHECK(msg.find("H3") != std::string::npos);
    }
}

TEST_CASE("syntax problems carry their line numbers") {
    std::string text =
        "grid.nx = 16\n"
        "grid.dx = 0.0625\n"
        "this line has no equals\n"
        "unknown.key = 3\n"
        "model.b1 = 1\n"
        "model.b1 = 2\n";
    try {
        parse_config(text);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("line 4") != std::string::npos);
        CHECK(msg.find("unknown.key") != std::string::npos);
        CHECK(msg.find("line 6") != std::string::npos);   // duplicate assignment
    }
}

TEST_CASE("runtime assembly realizes field specs on the configured grid") {
    RunConfig cfg = parse_config(tiny_config("out"));
    RuntimeSetup rt = build_runtime(cfg);
    CHECK(rt.grid.nx == 16);
    CHECK(rt.tg.nt == 8);
    CHECK(rt.params.b1 == 1.0);
    CHECK(rt.u_init.nt() == 8);
    for (int i = 0; i < rt.grid.nx; ++i)
        CHECK(rt.phi0[i] ==
              doctest::Approx(0.3 * std::cos(M_PI * rt.grid.x(i) / rt.grid.lx())).epsilon(1e-15));
    CHECK(norm_linf(rt.sigma0) == 0.5);
}

// -------- binary snapshots -------------------------------------------------------

TEST_CASE("snapshot round-trips are bitwise exact") {
    Grid g = Grid::box(5, 3, 1.0, 0.5);
    Field f(g);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> dist(-10.0, 10.0);
    for (int i = 0; i < f.size(); ++i) f[i] = dist(rng);
    f[0] = 0.1;                      // not exactly representable
    f[1] = -0.0;
    f[2] = 1e-308;                   // subnormal territory boundary

    std::vector<unsigned char> bytes = write_snapshot(f, 0.75);
    double t = -1.0;
    Field back = read_snapshot(bytes, &t);
    CHECK(t == 0.75);
    CHECK(back.grid == g);
    CHECK(std::memcmp(back.v.data(), f.v.data(), f.v.size() * sizeof(double)) == 0);

    // header is 4 + 3*4 + 3*8 bytes, payload 8 per cell
    CHECK(bytes.size() == 4u + 12u + 24u + 8u * f.v.size());
}

TEST_CASE("snapshot bytes match the frozen reference encoding") {
    Grid g = Grid::box(2, 2, 1.0, 0.5);   // dx = 0.5, dy = 0.25
    Field f(g);
    f.at(0, 0) = 1.0;
    f.at(1, 0) = -2.5;
    f.at(0, 1) = 3.25;
    f.at(1, 1) = 0.125;

    const unsigned char expect[72] = {
        'D', 'Q', 'F', '1',
        0x02, 0x00, 0x00, 0x00,                          // dim
        0x02, 0x00, 0x00, 0x00,                          // nx
        0x02, 0x00, 0x00, 0x00,                          // ny
        0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xE0, 0x3F,  // dx = 0.5
        0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xD0, 0x3F,  // dy = 0.25
        0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xF8, 0x3F,  // t = 1.5
        0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xF0, 0x3F,  // 1.0
        0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x04, 0xC0,  // -2.5
        0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x0A, 0x40,  // 3.25
        0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xC0, 0x3F,  // 0.125
    };

    std::vector<unsigned char> bytes = write_snapshot(f, 1.5);
    REQUIRE(bytes.size() == sizeof(expect));
    CHECK(std::memcmp(bytes.data(), expect, sizeof(expect)) == 0);
}

TEST_CASE("corrupted snapshots are rejected") {
    Grid g = Grid::line(4, 1.0);
    std::vector<unsigned char> bytes = write_snapshot(Field(g, 1.0), 0.0);

    std::vector<unsigned char> bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(read_snapshot(bad), config_error);

    std::vector<unsigned char> cut(bytes.begin(), bytes.begin() + 20);
    CHECK_THROWS_AS(read_snapshot(cut), config_error);

    std::vector<unsigned char> extra = bytes;
    extra.push_back(0);
    CHECK_THROWS_AS(read_snapshot(extra), config_error);
}

TEST_CASE("snapshot and control files round-trip on disk") {
    fs::path dir = fresh_dir("snap");
    Grid g = Grid::line(6, 1.0);
    Field f(g);
    for (int i = 0; i < g.size(); ++i) f[i] = std::sin(3.0 * i) / 7.0;
    save_snapshot((dir / "f.dqf").string(), f, 2.25);
    double t = 0.0;
    Field back = load_snapshot((dir / "f.dqf").string(), &t);
    CHECK(t == 2.25);
    CHECK(std::memcmp(back.v.data(), f.v.data(), f.v.size() * sizeof(double)) == 0);

    TimeGrid tg(1.0, 3);
    Control u(g, 3);
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < g.size(); ++i) u[k][i] = k + 0.001 * i;
    save_control((dir / "u.dqc").string(), u, tg);
    Control ub = load_control((dir / "u.dqc").string());
    REQUIRE(ub.nt() == 3);
    for (int k = 0; k < 3; ++k)
        CHECK(std::memcmp(ub[k].v.data(), u[k].v.data(), g.size() * sizeof(double)) == 0);

    CHECK_THROWS_AS(load_snapshot((dir / "missing.dqf").string()), config_error);
    fs::remove_all(dir);
}

// -------- csv formatting ---------------------------------------------------------

TEST_CASE("csv numbers carry 17 significant digits") {
    CHECK(csv_num(0.1) == "0.10000000000000001");
    CHECK(csv_num(1.0) == "1");
    CHECK(csv_num(-0.5) == "-0.5");
    CHECK(csv_int(42) == "42");
}

// -------- cli end to end ---------------------------------------------------------

TEST_CASE("cli: simulate succeeds and writes its outputs") {
    fs::path dir = fresh_dir("cli_ok");
    fs::path cfg = dir / "run.cfg";
    write_text(cfg, tiny_config((dir / "out").string()));

    int rc = run_cli({"simulate", "--config", cfg.string()});
    CHECK(rc == 0);
    CHECK(fs::exists(dir / "out" / "phi_final.dqf"));
    CHECK(fs::exists(dir / "out" / "steps.csv"));
    CHECK(fs::exists(dir / "out" / "summary.csv"));

    // --out overrides the configured directory
    rc = run_cli({"simulate", "--config", cfg.string(), "--out", (dir / "alt").string()});
    CHECK(rc == 0);
    CHECK(fs::exists(dir / "alt" / "phi_final.dqf"));
    fs::remove_all(dir);
}

TEST_CASE("cli: other subcommands run on the tiny configuration") {
    fs::path dir = fresh_dir("cli_sub");
    fs::path cfg = dir / "run.cfg";
    write_text(cfg, tiny_config((dir / "out").string()));

    CHECK(run_cli({"simulate-obstacle", "--config", cfg.string()}) == 0);
    CHECK(fs::exists(dir / "out" / "xi_final.dqf"));
    CHECK(run_cli({"make-init", "--config", cfg.string(), "--gamma", "0.125"}) == 0);
    CHECK(fs::exists(dir / "out" / "phi0g.dqf"));
    CHECK(run_cli({"adjoint", "--config", cfg.string()}) == 0);
    CHECK(fs::exists(dir / "out" / "rT.dqf"));
    // phi0 is a cosine, not spatially constant -> invalid input for the oracle
    CHECK(run_cli({"oracle-ode", "--config", cfg.string(), "--refine", "20"}) == 1);
    fs::remove_all(dir);
}

TEST_CASE("cli: oracle and gradient probes on a constant configuration") {
    fs::path dir = fresh_dir("cli_flat");
    fs::path cfg = dir / "run.cfg";
    std::string text = tiny_config((dir / "out").string());
    text += "init.phi0 = 0.2\n";   // duplicate would be an error; rebuild instead
    write_text(cfg, text);
    // the duplicate assignment must be rejected
    CHECK(run_cli({"simulate", "--config", cfg.string()}) == 1);

    std::string flat =
        "grid.nx = 16\n"
        "grid.dx = 0.0625\n"
        "time.T = 0.1\n"
        "time.Nt = 8\n"
        "model.b0 = 0.01\n"
        "model.b1 = 1\n"
        "model.gamma = 0.25\n"
        "init.phi0 = 0.2\n"
        "init.sigma0 = 0.5\n"
        "init.u = 0.3\n"
        "output.dir = " + (dir / "out").string() + "\n";
    write_text(cfg, flat);
    CHECK(run_cli({"oracle-ode", "--config", cfg.string(), "--refine", "20"}) == 0);
    CHECK(fs::exists(dir / "out" / "oracle.csv"));
    CHECK(run_cli({"grad-check", "--config", cfg.string(), "--seeds", "1"}) == 0);
    CHECK(fs::exists(dir / "out" / "grad_check.csv"));
    fs::remove_all(dir);
}

TEST_CASE("cli: optimizer subcommands produce reports") {
    fs::path dir = fresh_dir("cli_opt");
    fs::path cfg = dir / "run.cfg";
    std::string text =
        "grid.nx = 12\n"
        "grid.dx = 0.08333333333333333\n"
        "time.T = 0.25\n"
        "time.Nt = 10\n"
        "model.b0 = 0.01\n"
        "model.b1 = 1\n"
        "model.gamma = 0.25\n"
        "targets.phi_q = 0.25\n"
        "init.phi0 = cosine:0,0.3,1\n"
        "init.sigma0 = 0.55\n"
        "optimizer.max_outer = 8\n"
        "optimizer.stat_tol_rel = 0.01\n"
        "quench.gamma0 = 0.5\n"
        "quench.ratio = 0.5\n"
        "quench.n_levels = 2\n"
        "output.dir = " + (dir / "out").string() + "\n";
    write_text(cfg, text);

    CHECK(run_cli({"optimize", "--config", cfg.string()}) == 0);
    CHECK(fs::exists(dir / "out" / "u_opt.dqc"));
    CHECK(fs::exists(dir / "out" / "history.csv"));
    CHECK(fs::exists(dir / "out" / "result.csv"));

    CHECK(run_cli({"quench", "--config", cfg.string()}) == 0);
    CHECK(fs::exists(dir / "out" / "quench_report.csv"));
    CHECK(fs::exists(dir / "out" / "u_level_00.dqc"));
    CHECK(fs::exists(dir / "out" / "u_level_01.dqc"));
    fs::remove_all(dir);
}

TEST_CASE("cli: exit codes map the failure modes") {
    fs::path dir = fresh_dir("cli_err");
    fs::path cfg = dir / "run.cfg";

    // invalid input -> 1
    write_text(cfg, "model.beta = 0\n" + tiny_config((dir / "out").string()));
    CHECK(run_cli({"simulate", "--config", cfg.string()}) == 1);

    // missing config file -> 1
    CHECK(run_cli({"simulate", "--config", (dir / "nope.cfg").string()}) == 1);

    // numerical failure -> 2 (tolerance below machine precision cannot be met)
    write_text(cfg, tiny_config((dir / "out").string()) + "solver.newton_tol = 1e-30\n");
    CHECK(run_cli({"simulate", "--config", cfg.string()}) == 2);

    // usage errors -> 64
    CHECK(run_cli({"explode"}) == 64);
    CHECK(run_cli({"simulate"}) == 64);   // --config is required
    fs::remove_all(dir);
}
