#include "hkt/hktg_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace hkt {

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ofstream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(const unsigned char* b) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::ofstream open_for_write(const std::string& path, const TorusGrid& grid) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write field dump '" + path + "'");
  out.write("HKTG", 4);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(grid.n()));
  for (int d : grid.dims()) put_u32(out, static_cast<std::uint32_t>(d));
  return out;
}

}  // namespace

void write_scalar_hktg(const std::string& path, const ScalarField& field) {
  std::ofstream out = open_for_write(path, field.grid);
  for (long p = 0; p < field.grid.points(); ++p) put_f64(out, field.values[p]);
  if (!out) throw ConfigError("short write on field dump '" + path + "'");
}

void write_herm_hktg(const std::string& path, const HermField& field) {
  std::ofstream out = open_for_write(path, field.grid);
  const int side = field.side();
  for (long p = 0; p < field.grid.points(); ++p) {
    const auto m = field.matrix(p);
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) {
        put_f64(out, m(r, c).real());
        put_f64(out, m(r, c).imag());
      }
  }
  if (!out) throw ConfigError("short write on field dump '" + path + "'");
}

HktgData read_hktg(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open field dump '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "HKTG", 4) != 0)
    throw ConfigError("'" + path + "' is not an HKTG field dump");
  if (get_u32(bytes.data() + 4) != 1)
    throw ConfigError("'" + path + "' has an unsupported HKTG version");
  const int n = static_cast<int>(get_u32(bytes.data() + 8));
  if (n < 1 || n > 64) throw ConfigError("'" + path + "' has an implausible dimension");
  const size_t header = 12 + 4UL * 4 * n;
  if (bytes.size() < header) throw ConfigError("'" + path + "' is truncated");
  std::vector<int> dims(4 * n);
  for (int i = 0; i < 4 * n; ++i)
    dims[i] = static_cast<int>(get_u32(bytes.data() + 12 + 4 * i));

  TorusGrid grid(n, dims);
  const size_t payload = (bytes.size() - header) / 8;
  if ((bytes.size() - header) % 8 != 0)
    throw ConfigError("'" + path + "' has a misaligned payload");

  HktgData data;
  const long points = grid.points();
  const long per_matrix = 2L * (2 * n) * (2 * n);
  if (payload == static_cast<size_t>(points)) {
    ScalarField f = ScalarField::zero(grid);
    for (long p = 0; p < points; ++p) f.values[p] = get_f64(bytes.data() + header + 8 * p);
    data.scalar = std::move(f);
  } else if (payload == static_cast<size_t>(points * per_matrix)) {
    HermField f = HermField::zero(grid);
    const int side = 2 * n;
    size_t off = header;
    for (long p = 0; p < points; ++p) {
      auto m = f.matrix(p);
      for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
          const double re = get_f64(bytes.data() + off);
          const double im = get_f64(bytes.data() + off + 8);
          m(r, c) = Complex(re, im);
          off += 16;
        }
    }
    data.herm = std::move(f);
  } else {
    throw ConfigError("'" + path + "' payload matches neither a scalar nor a matrix field");
  }
  return data;
}

}  // namespace hkt
