#include "dq/field.hpp"

namespace dq {

Grid Grid::line(int nx, double lx) {
    Grid g;
    g.dim = 1;
    g.nx = nx;
    g.ny = 1;
    g.dx = lx / nx;
    g.dy = 1.0;
    g.validate();
    return g;
}

Grid Grid::box(int nx, int ny, double lx, double ly) {
    Grid g;
    g.dim = 2;
    g.nx = nx;
    g.ny = ny;
    g.dx = lx / nx;
    g.dy = ly / ny;
    g.validate();
    return g;
}

void Grid::validate() const {
    if (dim != 1 && dim != 2) throw std::invalid_argument("Grid: dim must be 1 or 2");
    if (nx < 2) throw std::invalid_argument("Grid: nx must be >= 2");
    if (!(dx > 0.0)) throw std::invalid_argument("Grid: dx must be > 0");
    if (dim == 1) {
        if (ny != 1) throw std::invalid_argument("Grid: ny must be 1 in 1-D");
    } else {
        if (ny < 2) throw std::invalid_argument("Grid: ny must be >= 2 in 2-D");
        if (!(dy > 0.0)) throw std::invalid_argument("Grid: dy must be > 0");
    }
}

void require_same_grid(const Field& a, const Field& b, const char* where) {
    if (a.grid != b.grid)
        throw std::invalid_argument(std::string(where) + ": grids differ");
}

void apply_laplacian(const Grid& g, const double* in, double* out) {
    const int nx = g.nx, ny = g.ny;
    const double ax = 1.0 / (g.dx * g.dx);
    if (g.dim == 1) {
        for (int i = 0; i < nx; ++i) {
            const double l = in[i > 0 ? i - 1 : 0];          // mirrored ghost
            const double r = in[i < nx - 1 ? i + 1 : nx - 1];
            out[i] = ax * (l - 2.0 * in[i] + r);
        }
        return;
    }
    const double ay = 1.0 / (g.dy * g.dy);
    for (int j = 0; j < ny; ++j) {
        const int row = j * nx;
        const int rm = (j > 0 ? j - 1 : 0) * nx;
        const int rp = (j < ny - 1 ? j + 1 : ny - 1) * nx;
        for (int i = 0; i < nx; ++i) {
            const double l = in[row + (i > 0 ? i - 1 : 0)];
            const double r = in[row + (i < nx - 1 ? i + 1 : nx - 1)];
            const double c = in[row + i];
            out[row + i] = ax * (l - 2.0 * c + r) + ay * (in[rm + i] - 2.0 * c + in[rp + i]);
        }
    }
}

Field laplacian(const Field& f) {
    Field out(f.grid);
    apply_laplacian(f.grid, f.v.data(), out.v.data());
    return out;
}

double integrate(const Field& f) {
    double s = 0.0;
    for (double x : f.v) s += x;
    return s * f.grid.cell_volume();
}

double inner_l2(const Field& a, const Field& b) {
    require_same_grid(a, b, "inner_l2");
    double s = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
    return s * a.grid.cell_volume();
}

double norm_l2(const Field& f) { return std::sqrt(inner_l2(f, f)); }

double norm_linf(const Field& f) {
    double m = 0.0;
    for (double x : f.v) m = std::max(m, std::fabs(x));
    return m;
}

double seminorm_h1_sq(const Field& f) {
    const Grid& g = f.grid;
    const int nx = g.nx, ny = g.ny;
    double s = 0.0;
    // sum of squared face differences; equals <-lap f, f> for the mirrored
    // ghost stencil (boundary faces carry zero difference)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const double d = f.at(i + 1, j) - f.at(i, j);
            s += d * d / (g.dx * g.dx);
        }
    if (g.dim == 2) {
        for (int j = 0; j + 1 < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const double d = f.at(i, j + 1) - f.at(i, j);
                s += d * d / (g.dy * g.dy);
            }
    }
    return s * g.cell_volume();
}

double norm_h1(const Field& f) {
    return std::sqrt(inner_l2(f, f) + seminorm_h1_sq(f));
}

double inner_l2_time(const FieldSeries& a, const FieldSeries& b, const TimeGrid& tg) {
    if (static_cast<int>(a.size()) < tg.nt || static_cast<int>(b.size()) < tg.nt)
        throw std::invalid_argument("inner_l2_time: series shorter than nt");
    double s = 0.0;
    for (int k = 0; k < tg.nt; ++k) s += inner_l2(a[k], b[k]);
    return s * tg.dt();
}

double norm_l2_time(const FieldSeries& a, const TimeGrid& tg) {
    return std::sqrt(inner_l2_time(a, a, tg));
}

Field operator+(const Field& a, const Field& b) {
    require_same_grid(a, b, "Field operator+");
    Field out = a;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += b.v[i];
    return out;
}

Field operator-(const Field& a, const Field& b) {
    require_same_grid(a, b, "Field operator-");
    Field out = a;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] -= b.v[i];
    return out;
}

Field operator*(double s, const Field& a) {
    Field out = a;
    for (double& x : out.v) x *= s;
    return out;
}

void axpy(double a, const Field& x, Field& y) {
    require_same_grid(x, y, "axpy");
    for (size_t i = 0; i < y.v.size(); ++i) y.v[i] += a * x.v[i];
}

} // namespace dq
