#include "kghait/binary_io.hpp"

#include <bit>
#include <cstring>

#include "kghait/error.hpp"

namespace kghait::io {
namespace {

template <typename U>
void put_le(std::ostream& out, U v) {
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  }
  out.write(buf, sizeof(U));
}

template <typename U>
U get_le(std::istream& in) {
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) {
    throw DataError("unexpected end of artifact file");
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }
void write_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

void write_header(std::ostream& out, const Magic& magic) {
  out.write(magic.data(), magic.size());
  write_u32(out, kFormatVersion);
}

void write_payload(std::ostream& out, const Matrix& m) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  } else {
    for (double v : m.values()) write_f64(out, v);
  }
  if (!out) throw DataError("failed writing artifact payload");
}

std::uint32_t read_u32(std::istream& in) { return get_le<std::uint32_t>(in); }
std::uint64_t read_u64(std::istream& in) { return get_le<std::uint64_t>(in); }
double read_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

void read_header(std::istream& in, const Magic& magic, std::string_view what) {
  Magic got{};
  if (!in.read(got.data(), got.size()) || got != magic) {
    throw DataError("not a " + std::string(what) + " artifact (bad magic)");
  }
  const auto version = read_u32(in);
  if (version != kFormatVersion) {
    throw DataError("unsupported " + std::string(what) + " format version " +
                    std::to_string(version));
  }
}

Matrix read_payload(std::istream& in, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(m.data()),
                 static_cast<std::streamsize>(m.size() * sizeof(double)))) {
      throw DataError("truncated artifact payload");
    }
  } else {
    for (double& v : m.values()) v = read_f64(in);
  }
  return m;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace kghait::io
