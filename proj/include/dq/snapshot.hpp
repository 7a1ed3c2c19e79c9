#pragma once

#include <string>
#include <vector>

#include "dq/field.hpp"
#include "dq/model.hpp"

// Binary field snapshot, format "DQF1":
//   bytes 0..3   magic "DQF1"
//   3 x int32 little-endian: dim, nx, ny
//   3 x f64 little-endian: dx, dy, t
//   nx*ny x f64 little-endian payload, row-major (index j*nx + i)
// Round-trips are bitwise exact.  Controls (one field per time cell) are
// stored as "DQC1": magic, int32 nt, then nt back-to-back DQF1 records.

namespace dq {

std::vector<unsigned char> write_snapshot(const Field& f, double t = 0.0);
Field read_snapshot(const std::vector<unsigned char>& bytes, double* t_out = nullptr);

void save_snapshot(const std::string& path, const Field& f, double t = 0.0);
Field load_snapshot(const std::string& path, double* t_out = nullptr);

void save_control(const std::string& path, const Control& u, const TimeGrid& tg);
Control load_control(const std::string& path);

} // namespace dq
