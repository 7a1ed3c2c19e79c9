#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

// Cell-centered uniform grids on a rectangle with homogeneous Neumann
// boundaries.  The Laplacian uses mirrored ghost cells, which makes the
// stencil self-adjoint w.r.t. the midpoint-rule inner product and exactly
// conservative (the flux across the boundary is zero, so the stencil sums
// to zero over the domain).

namespace dq {

struct Grid {
    int dim = 1;
    int nx = 0;
    int ny = 1;          // 1 in 1-D
    double dx = 0.0;
    double dy = 1.0;     // 1 in 1-D so dx*dy is always the cell volume

    static Grid line(int nx, double lx);
    static Grid box(int nx, int ny, double lx, double ly);

    int size() const { return nx * ny; }
    double cell_volume() const { return dx * dy; }
    double lx() const { return nx * dx; }
    double ly() const { return ny * dy; }

    // cell centers
    double x(int i) const { return (i + 0.5) * dx; }
    double y(int j) const { return (j + 0.5) * dy; }

    void validate() const;

    bool operator==(const Grid& o) const {
        return dim == o.dim && nx == o.nx && ny == o.ny && dx == o.dx && dy == o.dy;
    }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

struct TimeGrid {
    double T = 0.0;
    int nt = 0;

    TimeGrid() = default;
    TimeGrid(double T_, int nt_) : T(T_), nt(nt_) {
        if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: T must be > 0");
        if (nt < 1) throw std::invalid_argument("TimeGrid: nt must be >= 1");
    }

    double dt() const { return T / nt; }
    // t(nt) == T exactly, no accumulated drift
    double t(int k) const { return T * static_cast<double>(k) / nt; }
};

// A scalar field sampled at cell centers, row-major in 2-D (index j*nx + i).
struct Field {
    Grid grid;
    std::vector<double> v;

    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0) : grid(g), v(g.size(), fill) {}

    int size() const { return static_cast<int>(v.size()); }
    double& operator[](int i) { return v[i]; }
    double operator[](int i) const { return v[i]; }

    double& at(int i, int j) { return v[j * grid.nx + i]; }
    double at(int i, int j) const { return v[j * grid.nx + i]; }
};

using FieldSeries = std::vector<Field>;

void require_same_grid(const Field& a, const Field& b, const char* where);

// 3-point / 5-point Neumann Laplacian with mirrored ghost cells.
// Low-level form writes into `out` (no aliasing with `in`).
void apply_laplacian(const Grid& g, const double* in, double* out);
Field laplacian(const Field& f);

// midpoint (exact for cellwise data) space quadrature
double integrate(const Field& f);
double inner_l2(const Field& a, const Field& b);
double norm_l2(const Field& f);
double norm_linf(const Field& f);

// Dirichlet form <-lap f, f>; the discrete H1 seminorm squared.  Computed
// face-by-face so it is nonnegative by construction.
double seminorm_h1_sq(const Field& f);
double norm_h1(const Field& f);   // sqrt(L2^2 + seminorm^2)

// Time-axis quadrature over [0,T): left-endpoint rectangle rule, matching
// the implicit-Euler stepper.  Series may have nt or nt+1 entries; entries
// 0..nt-1 are used.
double inner_l2_time(const FieldSeries& a, const FieldSeries& b, const TimeGrid& tg);
double norm_l2_time(const FieldSeries& a, const TimeGrid& tg);

// pointwise helpers
Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(double s, const Field& a);
void axpy(double a, const Field& x, Field& y);   // y += a*x

} // namespace dq
