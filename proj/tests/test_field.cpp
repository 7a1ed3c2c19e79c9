#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "dq/field.hpp"

using namespace dq;

namespace {

Field random_field(const Grid& g, unsigned seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    Field f(g);
    for (int i = 0; i < f.size(); ++i) f[i] = dist(rng);
    return f;
}

} // namespace

TEST_CASE("grid factories and geometry") {
    Grid g = Grid::line(64, 1.0);
    CHECK(g.dim == 1);
    CHECK(g.nx == 64);
    CHECK(g.ny == 1);
    CHECK(g.dx == doctest::Approx(1.0 / 64.0).epsilon(1e-15));
    CHECK(g.dy == 1.0);
    CHECK(g.size() == 64);
    CHECK(g.lx() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g.cell_volume() == doctest::Approx(1.0 / 64.0).epsilon(1e-15));
    CHECK(g.x(0) == doctest::Approx(0.5 / 64.0).epsilon(1e-15));
    CHECK(g.x(63) == doctest::Approx(1.0 - 0.5 / 64.0).epsilon(1e-15));

    Grid b = Grid::box(8, 4, 2.0, 1.0);
    CHECK(b.dim == 2);
    CHECK(b.size() == 32);
    CHECK(b.cell_volume() == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK(b.y(0) == doctest::Approx(0.125).epsilon(1e-15));

    CHECK(g == Grid::line(64, 1.0));
    CHECK(g != b);
}

TEST_CASE("grid validation rejects degenerate inputs") {
    Grid g;
    g.nx = 1;
    g.dx = 0.5;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.nx = 4;
    g.dx = 0.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.dx = 0.25;
    g.dim = 3;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    CHECK_THROWS_AS(Grid::box(1, 4, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("time grid endpoints are exact") {
    TimeGrid tg(1.0, 1000);
    CHECK(tg.dt() == doctest::Approx(1e-3).epsilon(1e-15));
    CHECK(tg.t(0) == 0.0);
    CHECK(tg.t(1000) == 1.0);   // no accumulated drift
    CHECK(tg.t(500) == 0.5);
    CHECK_THROWS_AS(TimeGrid(0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid(1.0, 0), std::invalid_argument);
}

TEST_CASE("integration and inner products") {
    Grid g = Grid::line(32, 2.0);
    Field c(g, 3.0);
    CHECK(integrate(c) == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(norm_l2(c) == doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-14));
    CHECK(norm_linf(c) == 3.0);

    Field a = random_field(g, 11), b = random_field(g, 12);
    CHECK(inner_l2(a, b) == doctest::Approx(inner_l2(b, a)).epsilon(1e-15));
    CHECK(inner_l2(a, a) == doctest::Approx(norm_l2(a) * norm_l2(a)).epsilon(1e-14));
}

TEST_CASE("laplacian of a constant vanishes and the stencil conserves mass") {
    for (const Grid& g : {Grid::line(17, 1.3), Grid::box(9, 7, 1.0, 2.0)}) {
        Field c(g, 4.2);
        Field lc = laplacian(c);
        for (int i = 0; i < lc.size(); ++i) CHECK(lc[i] == 0.0);

        Field f = random_field(g, 21, -5.0, 5.0);
        double total = integrate(laplacian(f));
        CHECK(std::abs(total) <= 1e-12 * norm_linf(f) * g.size());
    }
}

TEST_CASE("laplacian is linear and self-adjoint") {
    for (const Grid& g : {Grid::line(24, 1.0), Grid::box(6, 10, 1.5, 0.7)}) {
        Field a = random_field(g, 31), b = random_field(g, 32);

        Field lab = laplacian(a + b);
        Field la = laplacian(a), lb = laplacian(b);
        for (int i = 0; i < lab.size(); ++i)
            CHECK(lab[i] == doctest::Approx(la[i] + lb[i]).epsilon(1e-13));

        double lhs = inner_l2(la, b), rhs = inner_l2(a, lb);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("cosine modes are exact eigenvectors of the stencil") {
    // with mirrored ghosts, cos(m*pi*(i+1/2)/nx) has eigenvalue
    // -(4/dx^2) sin^2(m*pi/(2 nx))
    Grid g = Grid::line(40, 1.0);
    for (int m : {1, 3, 7}) {
        Field f(g);
        for (int i = 0; i < g.nx; ++i) f[i] = std::cos(m * M_PI * g.x(i) / g.lx());
        double lam = 4.0 / (g.dx * g.dx) * std::pow(std::sin(m * M_PI / (2.0 * g.nx)), 2);
        Field lf = laplacian(f);
        for (int i = 0; i < g.nx; ++i)
            CHECK(lf[i] == doctest::Approx(-lam * f[i]).epsilon(1e-11));
    }
}

TEST_CASE("2-d laplacian handles anisotropic spacing") {
    Grid g = Grid::box(16, 8, 1.0, 2.0);
    Field f(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            f.at(i, j) = std::cos(M_PI * g.x(i) / g.lx()) * std::cos(2.0 * M_PI * g.y(j) / g.ly());
    double lamx = 4.0 / (g.dx * g.dx) * std::pow(std::sin(M_PI / (2.0 * g.nx)), 2);
    double lamy = 4.0 / (g.dy * g.dy) * std::pow(std::sin(2.0 * M_PI / (2.0 * g.ny)), 2);
    Field lf = laplacian(f);
    for (int i = 0; i < g.size(); ++i)
        CHECK(lf[i] == doctest::Approx(-(lamx + lamy) * f[i]).epsilon(1e-10));
}

TEST_CASE("h1 seminorm equals the dirichlet form and is nonnegative") {
    for (const Grid& g : {Grid::line(19, 1.0), Grid::box(7, 5, 1.0, 1.0)}) {
        Field f = random_field(g, 41);
        double dirichlet = -inner_l2(laplacian(f), f);
        double semi = seminorm_h1_sq(f);
        CHECK(semi >= 0.0);
        CHECK(semi == doctest::Approx(dirichlet).epsilon(1e-12));
        CHECK(norm_h1(f) == doctest::Approx(std::sqrt(norm_l2(f) * norm_l2(f) + semi)).epsilon(1e-13));
    }
    Field c(Grid::line(8, 1.0), 2.0);
    CHECK(seminorm_h1_sq(c) == 0.0);
}

TEST_CASE("time quadrature uses the left endpoint") {
    Grid g = Grid::line(4, 1.0);
    TimeGrid tg(1.0, 2);
    FieldSeries a = {Field(g, 1.0), Field(g, 2.0), Field(g, 100.0)};
    FieldSeries b = {Field(g, 1.0), Field(g, 2.0), Field(g, 100.0)};
    // entries 0..nt-1 only: (1*1 + 2*2) * dt * |Omega| = 2.5
    CHECK(inner_l2_time(a, b, tg) == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(norm_l2_time(a, tg) == doctest::Approx(std::sqrt(2.5)).epsilon(1e-14));

    FieldSeries short_a = {Field(g, 1.0), Field(g, 2.0)};   // nt entries also allowed
    CHECK(inner_l2_time(short_a, short_a, tg) == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("field arithmetic and axpy") {
    Grid g = Grid::line(12, 1.0);
    Field a = random_field(g, 51), b = random_field(g, 52);
    Field s = a + b, d = a - b, m = 2.5 * a;
    for (int i = 0; i < g.size(); ++i) {
        CHECK(s[i] == a[i] + b[i]);
        CHECK(d[i] == a[i] - b[i]);
        CHECK(m[i] == 2.5 * a[i]);
    }
    Field y = b;
    axpy(-1.5, a, y);
    for (int i = 0; i < g.size(); ++i) CHECK(y[i] == b[i] + -1.5 * a[i]);

    Field wrong(Grid::line(13, 1.0));
    CHECK_THROWS_AS(a + wrong, std::invalid_argument);
    CHECK_THROWS_AS(inner_l2(a, wrong), std::invalid_argument);
}
