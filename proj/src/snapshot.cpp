#include "dq/snapshot.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace dq {

namespace {

void put_i32(std::vector<unsigned char>& b, std::int32_t v) {
    for (int k = 0; k < 4; ++k) b.push_back(static_cast<unsigned char>((v >> (8 * k)) & 0xff));
}

void put_f64(std::vector<unsigned char>& b, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int k = 0; k < 8; ++k) b.push_back(static_cast<unsigned char>((bits >> (8 * k)) & 0xff));
}

struct Reader {
    const unsigned char* p;
    std::size_t n;
    std::size_t pos = 0;

    void need(std::size_t k, const char* what) {
        if (pos + k > n)
            throw config_error(std::string("snapshot: truncated payload while reading ") + what);
    }
    std::int32_t i32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) v |= std::uint32_t(p[pos + k]) << (8 * k);
        pos += 4;
        return static_cast<std::int32_t>(v);
    }
    double f64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int k = 0; k < 8; ++k) v |= std::uint64_t(p[pos + k]) << (8 * k);
        pos += 8;
        double d;
        std::memcpy(&d, &v, 8);
        return d;
    }
    void magic(const char* m) {
        need(4, "magic");
        if (std::memcmp(p + pos, m, 4) != 0)
            throw config_error(std::string("snapshot: magic mismatch, expected ") + m);
        pos += 4;
    }
};

Field read_one(Reader& r, double* t_out) {
    r.magic("DQF1");
    std::int32_t dim = r.i32("dim"), nx = r.i32("nx"), ny = r.i32("ny");
    double dx = r.f64("dx"), dy = r.f64("dy"), t = r.f64("t");
    if (dim != 1 && dim != 2) throw config_error("snapshot: dimension must be 1 or 2");
    if (nx < 2 || ny < 1) throw config_error("snapshot: bad grid extents");
    Grid g;
    g.dim = dim;
    g.nx = nx;
    g.ny = ny;
    g.dx = dx;
    g.dy = dy;
    g.validate();
    Field f(g);
    for (int i = 0; i < g.size(); ++i) f[i] = r.f64("payload");
    if (t_out) *t_out = t;
    return f;
}

void append_one(std::vector<unsigned char>& b, const Field& f, double t) {
    f.grid.validate();
    b.push_back('D');
    b.push_back('Q');
    b.push_back('F');
    b.push_back('1');
    put_i32(b, f.grid.dim);
    put_i32(b, f.grid.nx);
    put_i32(b, f.grid.ny);
    put_f64(b, f.grid.dx);
    put_f64(b, f.grid.dy);
    put_f64(b, t);
    for (int i = 0; i < f.size(); ++i) put_f64(b, f[i]);
}

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("snapshot: cannot open file: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

void spew(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("snapshot: cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw config_error("snapshot: short write: " + path);
}

} // namespace

std::vector<unsigned char> write_snapshot(const Field& f, double t) {
    std::vector<unsigned char> b;
    b.reserve(4 + 12 + 24 + 8 * static_cast<std::size_t>(f.size()));
    append_one(b, f, t);
    return b;
}

Field read_snapshot(const std::vector<unsigned char>& bytes, double* t_out) {
    Reader r{bytes.data(), bytes.size()};
    Field f = read_one(r, t_out);
    if (r.pos != r.n) throw config_error("snapshot: trailing bytes after payload");
    return f;
}

void save_snapshot(const std::string& path, const Field& f, double t) {
    spew(path, write_snapshot(f, t));
}

Field load_snapshot(const std::string& path, double* t_out) {
    auto bytes = slurp(path);
    return read_snapshot(bytes, t_out);
}

void save_control(const std::string& path, const Control& u, const TimeGrid& tg) {
    if (u.nt() != tg.nt) throw std::invalid_argument("save_control: length mismatch");
    std::vector<unsigned char> b;
    b.push_back('D');
    b.push_back('Q');
    b.push_back('C');
    b.push_back('1');
    put_i32(b, u.nt());
    for (int k = 0; k < u.nt(); ++k) append_one(b, u[k], tg.t(k));
    spew(path, b);
}

Control load_control(const std::string& path) {
    auto bytes = slurp(path);
    Reader r{bytes.data(), bytes.size()};
    r.magic("DQC1");
    std::int32_t nt = r.i32("nt");
    if (nt < 1) throw config_error("control file: nt must be >= 1");
    Control u;
    u.u.reserve(nt);
    for (int k = 0; k < nt; ++k) u.u.push_back(read_one(r, nullptr));
    if (r.pos != r.n) throw config_error("control file: trailing bytes after payload");
    for (int k = 1; k < nt; ++k)
        if (u[k].grid != u[0].grid) throw config_error("control file: inconsistent grids");
    return u;
}

} // namespace dq
