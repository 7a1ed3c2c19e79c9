#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dq/potentials.hpp"

using namespace dq;

// -------- frozen reference values (computed independently, pinned first) ----

TEST_CASE("barrier values at pinned points") {
    CHECK(h_eval(0.0) == 0.0);
    CHECK(h_eval(1.0) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-16));
    CHECK(h_eval(-1.0) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-16));
    CHECK(h_eval(0.5) == doctest::Approx(0.5 * std::log(0.5) + 1.5 * std::log(1.5)).epsilon(1e-15));
    CHECK(h_prime(0.0) == 0.0);
    CHECK(h_prime(0.5) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
    CHECK(h_second(0.0) == 2.0);
    CHECK(h_second(0.5) == doctest::Approx(8.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("barrier symmetry, convexity, and the slack identity") {
    for (double s : {0.05, 0.3, 0.55, 0.8, 0.95, 0.999}) {
        CHECK(h_eval(-s) == doctest::Approx(h_eval(s)).epsilon(1e-14));
        CHECK(h_prime(-s) == doctest::Approx(-h_prime(s)).epsilon(1e-14));
        CHECK(h_second(s) >= 2.0);
        // (1 - s^2) h''(s) == 2 identically
        CHECK((1.0 - s * s) * h_second(s) == doctest::Approx(2.0).epsilon(1e-12));
        // midpoint convexity
        double a = -0.2, m = 0.5 * (a + s);
        CHECK(h_eval(m) <= 0.5 * (h_eval(a) + h_eval(s)) + 1e-15);
    }
}

TEST_CASE("barrier domain ends at the obstacle") {
    CHECK_THROWS_AS(h_eval(1.0 + 1e-9), std::invalid_argument);
    CHECK_THROWS_AS(h_eval(-1.5), std::invalid_argument);
    CHECK_THROWS_AS(h_prime(1.0), std::invalid_argument);
    CHECK_THROWS_AS(h_prime(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(h_second(1.0), std::invalid_argument);
    // finite but large just inside
    CHECK(std::isfinite(h_prime(1.0 - 1e-12)));
}

TEST_CASE("quench weight") {
    QuenchWeight w;
    CHECK(g_eval(0.5, w) == 0.5);
    CHECK(g_eval(1.0, w) == 1.0);
    w.p = 2.0;
    CHECK(g_eval(0.5, w) == doctest::Approx(0.25).epsilon(1e-16));
    CHECK_THROWS_AS(g_eval(0.0, w), std::invalid_argument);
    CHECK_THROWS_AS(g_eval(-0.1, w), std::invalid_argument);
    CHECK_THROWS_AS(g_eval(1.5, w), std::invalid_argument);
    w.p = 0.0;
    CHECK_THROWS_AS(g_eval(0.5, w), std::invalid_argument);
}

TEST_CASE("linear perturbation term") {
    PiSpec spec;   // linear
    CHECK(pi_eval(0.3, spec) == -0.3);
    CHECK(pi_prime(2.7, spec) == -1.0);
    CHECK(pi_second(0.1, spec) == 0.0);
    CHECK(spec.lipschitz_constant() == 1.0);
    CHECK(spec.name() == "linear");
}

TEST_CASE("quartic perturbation: values, continuation, lipschitz bound") {
    PiSpec spec = PiSpec::from_name("quartic-clamped");
    CHECK(pi_eval(1.0, spec) == 0.0);
    CHECK(pi_eval(0.5, spec) == doctest::Approx(-0.375).epsilon(1e-16));
    CHECK(pi_prime(1.0, spec) == doctest::Approx(2.0).epsilon(1e-16));
    CHECK(pi_second(1.0, spec) == doctest::Approx(6.0).epsilon(1e-16));
    // linear continuation beyond |s| = 2 with matched value and slope
    CHECK(pi_eval(2.0, spec) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(pi_eval(3.0, spec) == doctest::Approx(17.0).epsilon(1e-15));
    CHECK(pi_prime(3.0, spec) == doctest::Approx(11.0).epsilon(1e-15));
    CHECK(pi_second(3.0, spec) == 0.0);
    double eps = 1e-7;
    CHECK(pi_eval(2.0 + eps, spec) - pi_eval(2.0 - eps, spec) ==
          doctest::Approx(2.0 * eps * 11.0).epsilon(1e-3));
    CHECK(spec.lipschitz_constant() == doctest::Approx(11.0).epsilon(1e-15));

    // sampled Lipschitz estimate never exceeds the reported constant
    double worst = 0.0;
    for (int i = 0; i < 600; ++i) {
        double s = -3.0 + 6.0 * i / 599.0;
        double slope = std::abs(pi_prime(s, spec));
        if (slope > worst) worst = slope;
    }
    CHECK(worst <= spec.lipschitz_constant() + 1e-12);
}

TEST_CASE("proliferation: constant and smoothstep variants") {
    ProliferationSpec c;
    c.kind = ProliferationSpec::Kind::constant;
    c.p0 = 2.0;
    CHECK(P_eval(0.0, c) == 2.0);
    CHECK(P_eval(-9.0, c) == 2.0);
    CHECK(P_prime(0.3, c) == 0.0);
    CHECK(c.lipschitz_constant() == 0.0);

    ProliferationSpec s;   // smoothstep, p0 = 1, width = 2
    s.p0 = 2.0;
    CHECK(P_eval(0.0, s) == doctest::Approx(1.0).epsilon(1e-15));      // p0 * S(1/2)
    CHECK(P_eval(-1.0, s) == 0.0);                                     // clamped below
    CHECK(P_eval(1.0, s) == 2.0);                                      // clamped above
    CHECK(P_eval(-5.0, s) == 0.0);
    s.p0 = 1.0;
    CHECK(P_prime(0.0, s) == doctest::Approx(1.875 / 2.0).epsilon(1e-15));  // S'(1/2)/width
    CHECK(P_second(0.0, s) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(s.lipschitz_constant() == doctest::Approx(1.875 / 2.0).epsilon(1e-15));

    // monotone, bounded, nonnegative
    double prev = -1.0;
    for (int i = 0; i <= 400; ++i) {
        double x = -2.0 + 4.0 * i / 400.0;
        double val = P_eval(x, s);
        CHECK(val >= prev - 1e-15);
        CHECK(val >= 0.0);
        CHECK(val <= s.p0 + 1e-15);
        prev = val;
    }

    ProliferationSpec bad;
    bad.p0 = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.p0 = 1.0;
    bad.width = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("spec name round-trips") {
    CHECK(PiSpec::from_name("linear").name() == "linear");
    CHECK(PiSpec::from_name("quartic-clamped").name() == "quartic-clamped");
    CHECK_THROWS_AS(PiSpec::from_name("cubic"), std::invalid_argument);
    CHECK(ProliferationSpec::from_name("constant").name() == "constant");
    CHECK(ProliferationSpec::from_name("smoothstep").name() == "smoothstep");
    CHECK_THROWS_AS(ProliferationSpec::from_name("bump"), std::invalid_argument);
}

TEST_CASE("obstacle subdifferential check") {
    Grid g = Grid::line(4, 1.0);
    Field phi(g), xi(g);
    phi[0] = 1.0;  xi[0] = 5.0;    // upper contact, xi >= 0: fine
    phi[1] = -1.0; xi[1] = -3.0;   // lower contact, xi <= 0: fine
    phi[2] = 0.5;  xi[2] = 0.0;    // interior, xi = 0: fine
    phi[3] = 0.2;  xi[3] = 5e-9;   // interior, below tol: fine
    SubdiffReport rep = obstacle_subdiff_check(phi, xi, 1e-8);
    CHECK(rep.pass());
    CHECK(rep.n_checked == 4);
    CHECK(rep.n_violations == 0);

    xi[3] = 1e-7;                  // interior with nonzero multiplier: violation
    rep = obstacle_subdiff_check(phi, xi, 1e-8);
    CHECK(!rep.pass());
    CHECK(rep.n_violations == 1);
    CHECK(rep.max_violation == doctest::Approx(1e-7 - 1e-8).epsilon(1e-12));
    REQUIRE(rep.violating_cells.size() == 1);
    CHECK(rep.violating_cells[0] == 3);

    xi[3] = 0.0;
    xi[0] = -1.0;                  // wrong sign at upper contact
    rep = obstacle_subdiff_check(phi, xi, 1e-8);
    CHECK(rep.n_violations == 1);
    CHECK(rep.max_violation == doctest::Approx(1.0 - 1e-8).epsilon(1e-12));

    phi[0] = 1.5;                  // outside the obstacle: not a valid input
    CHECK_THROWS_AS(obstacle_subdiff_check(phi, xi), std::invalid_argument);
}
