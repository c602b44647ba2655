#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "kghait/matrix.hpp"

namespace kghait::io {

/// All artifacts start with an 8-byte magic and a u32 format version, then
/// kind-specific scalar fields, then row-major little-endian f64 payloads.
inline constexpr std::uint32_t kFormatVersion = 1;

using Magic = std::array<char, 8>;

inline constexpr Magic kHifMagic{'K', 'G', 'H', 'I', 'F', '\0', '\0', '\0'};
inline constexpr Magic kSqueezeMagic{'K', 'G', 'S', 'Q', 'Z', '\0', '\0', '\0'};
inline constexpr Magic kCheckpointMagic{'K', 'G', 'C', 'K', 'P', 'T', '\0', '\0'};

void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
void write_header(std::ostream& out, const Magic& magic);
/// Writes rows*cols little-endian doubles (no shape prefix).
void write_payload(std::ostream& out, const Matrix& m);

std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
/// Checks magic and version; throws DataError naming `what` on mismatch.
void read_header(std::istream& in, const Magic& magic, std::string_view what);
Matrix read_payload(std::istream& in, std::size_t rows, std::size_t cols);

/// 64-bit FNV-1a, used for config fingerprints.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace kghait::io
