#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "padx/errors.hpp"
#include "padx/ica.hpp"

namespace padx::ica {

namespace {

constexpr std::array<char, 4> kMagic{'I', 'C', 'A', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_++]} << (8 * i);
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_++]} << (8 * i);
    return std::bit_cast<double>(v);
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw ParseError("ICA1 parameter file truncated at byte " +
                       std::to_string(pos_));
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 4;
};

// Row-major regardless of Eigen's column-major storage.
template <typename Block>
void write_block(std::vector<std::uint8_t>& out, const Block& b) {
  for (Eigen::Index r = 0; r < b.rows(); ++r) {
    for (Eigen::Index c = 0; c < b.cols(); ++c) put_f64(out, b(r, c));
  }
}

template <typename Block>
void read_block(Reader& in, Block& b) {
  for (Eigen::Index r = 0; r < b.rows(); ++r) {
    for (Eigen::Index c = 0; c < b.cols(); ++c) b(r, c) = in.f64();
  }
}

}  // namespace

std::vector<std::uint8_t> encode_params(const IcaParams& params) {
  params.check_shapes();
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  put_u32(out, static_cast<std::uint32_t>(params.dims.k));
  put_u32(out, static_cast<std::uint32_t>(params.dims.d));
  put_u32(out, static_cast<std::uint32_t>(params.dims.m));
  put_u32(out, static_cast<std::uint32_t>(params.dims.c));
  params.for_each_block([&](const auto& block) { write_block(out, block); });
  return out;
}

IcaParams decode_params(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic.data(), 4) != 0) {
    throw ParseError("not an ICA1 parameter file (bad magic)");
  }
  Reader in(bytes);
  IcaDims dims;
  const std::uint32_t raw[4] = {in.u32(), in.u32(), in.u32(), in.u32()};
  constexpr std::uint32_t kMaxDim = 1u << 16;
  for (std::uint32_t v : raw) {
    if (v == 0 || v > kMaxDim) {
      throw ParseError("ICA1 dimension " + std::to_string(v) + " out of range");
    }
  }
  dims.k = static_cast<int>(raw[0]);
  dims.d = static_cast<int>(raw[1]);
  dims.m = static_cast<int>(raw[2]);
  dims.c = static_cast<int>(raw[3]);
  IcaParams params = IcaParams::zeros(dims);
  params.for_each_block([&](auto& block) { read_block(in, block); });
  if (!in.done()) throw ParseError("ICA1 parameter file has trailing bytes");
  return params;
}

void save_params(const IcaParams& params, const std::filesystem::path& path) {
  const auto bytes = encode_params(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write '" + path.string() + "'", path.string());
}

IcaParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'", path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_params(bytes);
}

}  // namespace padx::ica
