#pragma once

// Characteristic lattice shared by the integral-equation machinery and the
// marching scheme: equal spacing in x and t, centered in x, wide enough
// that the light cone from the data never reaches the lattice edge.
// Field dumps: plain CSV and a little-endian binary format with a 16-byte
// header (magic, h, x_max, t_max as float32) and float64 row-major payload.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwlab {

/// I/O failure carrying the offending path in the message.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what, const std::string& path)
      : std::runtime_error(what + ": " + path) {}
};

struct CharacteristicGrid {
  double h = 0.0;      // lattice spacing, equal in x and t
  double x_max = 0.0;  // columns span [-x_max, x_max]
  double t_max = 0.0;  // rows span [0, t_max]
  double k = 0.0;      // data support bound carried along for bookkeeping
  int nx = 0;
  int nt = 0;

  /// Lattice with spacing k / cells_per_k covering [0, t_max] in time and
  /// wide enough in x that x_max >= t_max + k.
  static CharacteristicGrid make(double k, int cells_per_k, double t_max) {
    if (!(k > 1.0)) throw std::invalid_argument("grid: need k > 1");
    if (cells_per_k < 1) throw std::invalid_argument("grid: cells_per_k >= 1");
    if (!(t_max >= 0.0)) throw std::invalid_argument("grid: t_max >= 0");
    CharacteristicGrid g;
    g.k = k;
    g.h = k / cells_per_k;
    g.nt = static_cast<int>(std::ceil(t_max / g.h - 1e-9)) + 1;
    const double T = g.h * (g.nt - 1);
    const int m = static_cast<int>(std::ceil((T + k) / g.h - 1e-9));
    g.x_max = m * g.h;
    g.nx = 2 * m + 1;
    g.t_max = T;
    return g;
  }

  double x(int i) const { return -x_max + h * i; }
  double t(int n) const { return h * n; }

  bool same_lattice(const CharacteristicGrid& o) const {
    return std::fabs(h - o.h) < 1e-12 && std::fabs(x_max - o.x_max) < 1e-9 &&
           nx == o.nx;
  }
};

/// Row-major samples over a characteristic lattice, row n = time level n.
struct CharacteristicField {
  CharacteristicGrid grid;
  std::vector<double> data;

  CharacteristicField() = default;
  explicit CharacteristicField(const CharacteristicGrid& g)
      : grid(g),
        data(static_cast<std::size_t>(g.nt) * static_cast<std::size_t>(g.nx),
             0.0) {}

  double& at(int n, int i) {
    return data[static_cast<std::size_t>(n) * grid.nx + i];
  }
  double at(int n, int i) const {
    return data[static_cast<std::size_t>(n) * grid.nx + i];
  }

  double sup_abs() const {
    double m = 0.0;
    for (double v : data) m = std::max(m, std::fabs(v));
    return m;
  }
};

/// Sample a function of (x, t) on the lattice.
template <class Fn>
CharacteristicField field_from_function(const CharacteristicGrid& g, Fn&& fn) {
  CharacteristicField out(g);
  for (int n = 0; n < g.nt; ++n)
    for (int i = 0; i < g.nx; ++i) out.at(n, i) = fn(g.x(i), g.t(n));
  return out;
}

inline double max_abs_diff(const CharacteristicField& a,
                           const CharacteristicField& b) {
  if (!a.grid.same_lattice(b.grid) || a.data.size() != b.data.size())
    throw std::invalid_argument("max_abs_diff: lattice mismatch");
  double m = 0.0;
  for (std::size_t j = 0; j < a.data.size(); ++j)
    m = std::max(m, std::fabs(a.data[j] - b.data[j]));
  return m;
}

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace detail

/// One "x,t,value" line per node.
inline void write_field_csv(const CharacteristicField& f,
                            const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw IoError("cannot open for writing", path);
  std::fprintf(fp, "x,t,value\n");
  for (int n = 0; n < f.grid.nt; ++n)
    for (int i = 0; i < f.grid.nx; ++i)
      std::fprintf(fp, "%.17g,%.17g,%.17g\n", f.grid.x(i), f.grid.t(n),
                   f.at(n, i));
  if (std::fclose(fp) != 0) throw IoError("write failed", path);
}

inline constexpr std::uint32_t field_magic = 0x464C5744;  // "DWLF"

/// 16-byte header (magic u32, h f32, x_max f32, t_max f32), then the
/// row-major float64 payload.  Row and column counts are recovered by
/// rounding, so h must be exactly representable in float32 (true for
/// k = 2 and power-of-two refinements).
inline void write_field_binary(const CharacteristicField& f,
                               const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open for writing", path);
  const std::uint32_t magic = field_magic;
  const float head[3] = {static_cast<float>(f.grid.h),
                         static_cast<float>(f.grid.x_max),
                         static_cast<float>(f.grid.t_max)};
  bool ok = std::fwrite(&magic, 4, 1, fp) == 1 &&
            std::fwrite(head, 4, 3, fp) == 3 &&
            std::fwrite(f.data.data(), 8, f.data.size(), fp) == f.data.size();
  if (std::fclose(fp) != 0) ok = false;
  if (!ok) throw IoError("write failed", path);
}

/// Inverse of write_field_binary.  The lattice's k is not part of the dump;
/// the caller may set it afterwards.
inline CharacteristicField read_field_binary(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open for reading", path);
  std::unique_ptr<std::FILE, detail::FileCloser> guard(fp);
  std::uint32_t magic = 0;
  float head[3] = {0, 0, 0};
  if (std::fread(&magic, 4, 1, fp) != 1 || std::fread(head, 4, 3, fp) != 3)
    throw IoError("truncated header", path);
  if (magic != field_magic) throw IoError("bad magic", path);
  CharacteristicGrid g;
  g.h = head[0];
  g.x_max = head[1];
  g.t_max = head[2];
  if (!(g.h > 0.0)) throw IoError("bad spacing in header", path);
  const long m = std::lround(g.x_max / g.h);
  g.nx = static_cast<int>(2 * m + 1);
  g.nt = static_cast<int>(std::lround(g.t_max / g.h)) + 1;
  g.x_max = m * g.h;
  g.t_max = (g.nt - 1) * g.h;
  if (g.nx <= 0 || g.nt <= 0) throw IoError("bad extents in header", path);
  CharacteristicField f(g);
  if (std::fread(f.data.data(), 8, f.data.size(), fp) != f.data.size())
    throw IoError("truncated payload", path);
  return f;
}

}  // namespace dwlab
