// CTF1 channel files: "CTF1", u32 version, u32 K, u32 M, u32 L, then L*K*M
// complex entries (subcarrier-major, antenna innermost) as pairs of
// little-endian IEEE-754 doubles.

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "antsel/channel.hpp"
#include "antsel/errors.hpp"

namespace antsel {
namespace {

constexpr std::size_t kHeaderBytes = 20;
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

double get_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::vector<unsigned char> encode_ctf1(const ChannelTensor& tensor) {
  const auto entries = tensor.entries();
  std::vector<unsigned char> out;
  out.reserve(kHeaderBytes + 16 * entries.size());
  for (char c : {'C', 'T', 'F', '1'}) out.push_back(static_cast<unsigned char>(c));
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(tensor.users()));
  put_u32(out, static_cast<std::uint32_t>(tensor.antennas()));
  put_u32(out, static_cast<std::uint32_t>(tensor.subcarriers()));
  for (const auto& h : entries) {
    put_f64(out, h.real());
    put_f64(out, h.imag());
  }
  return out;
}

ChannelTensor decode_ctf1(std::span<const unsigned char> bytes, std::string meta) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "CTF1", 4) != 0) {
    throw FormatError("bad magic, expected \"CTF1\"", 0);
  }
  if (bytes.size() < kHeaderBytes) {
    throw FormatError("truncated header", bytes.size());
  }
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kVersion) {
    throw FormatError("unsupported version " + std::to_string(version), 4);
  }
  const std::uint32_t K = get_u32(bytes.data() + 8);
  const std::uint32_t M = get_u32(bytes.data() + 12);
  const std::uint32_t L = get_u32(bytes.data() + 16);
  if (K == 0) throw DimensionError("CTF1 header: K=0 at byte offset 8");
  if (M == 0) throw DimensionError("CTF1 header: M=0 at byte offset 12");
  if (L == 0) throw DimensionError("CTF1 header: L=0 at byte offset 16");

  const std::uint64_t count = std::uint64_t{K} * M * L;
  const std::uint64_t expected = kHeaderBytes + 16 * count;
  if (bytes.size() < expected) {
    throw FormatError("truncated payload: expected " + std::to_string(expected) +
                          " bytes, got " + std::to_string(bytes.size()),
                      bytes.size());
  }
  if (bytes.size() > expected) {
    throw FormatError("trailing bytes after payload", expected);
  }

  std::vector<cplx> entries(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t offset = kHeaderBytes + 16 * i;
    const double re = get_f64(bytes.data() + offset);
    const double im = get_f64(bytes.data() + offset + 8);
    if (!std::isfinite(re)) throw FormatError("non-finite value", offset);
    if (!std::isfinite(im)) throw FormatError("non-finite value", offset + 8);
    entries[i] = cplx(re, im);
  }
  return ChannelTensor(K, M, L, std::move(entries), std::move(meta));
}

void save_channel(const ChannelTensor& tensor, const std::filesystem::path& path) {
  const auto bytes = encode_ctf1(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

ChannelTensor load_channel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_ctf1(bytes, path.filename().string());
}

}  // namespace antsel
