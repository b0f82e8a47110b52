#include "gerseg/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "gerseg/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor file I/O writes raw little-endian payloads");

namespace gerseg::io {

namespace {

constexpr char kMagic[4] = {'G', 'T', 'E', 'N'};
constexpr uint32_t kVersion = 1;

void write_bytes(std::ofstream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, size_t n, const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) {
    throw FormatError("tensor file truncated: " + path);
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  return in;
}

struct Header {
  uint8_t dtype = 0;
  std::vector<int> dims;
};

Header read_header(std::ifstream& in, const std::string& path) {
  char magic[4];
  read_bytes(in, magic, 4, path);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("not a tensor file (bad magic): " + path);
  }
  uint32_t version = 0;
  read_bytes(in, &version, 4, path);
  if (version != kVersion) {
    throw FormatError("unsupported tensor file version " + std::to_string(version) + ": " + path);
  }
  Header h;
  read_bytes(in, &h.dtype, 1, path);
  if (h.dtype > 2) {
    throw FormatError("unknown tensor dtype tag " + std::to_string(int(h.dtype)) + ": " + path);
  }
  uint8_t ndim = 0;
  read_bytes(in, &ndim, 1, path);
  h.dims.resize(ndim);
  for (int i = 0; i < ndim; ++i) {
    uint32_t d = 0;
    read_bytes(in, &d, 4, path);
    if (d == 0 || d > (1u << 30)) {
      throw FormatError("bad tensor dimension " + std::to_string(d) + ": " + path);
    }
    h.dims[i] = static_cast<int>(d);
  }
  return h;
}

}  // namespace

template <typename T>
void write_tensor(const std::string& path, const Tensor<T>& t) {
  GERSEG_CHECK(t.ndim() >= 1 && t.ndim() <= 255, "write_tensor: rank out of range");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open file for writing: " + path);
  write_bytes(out, kMagic, 4);
  write_bytes(out, &kVersion, 4);
  const uint8_t dtype = dtype_tag<T>::value;
  write_bytes(out, &dtype, 1);
  const uint8_t ndim = static_cast<uint8_t>(t.ndim());
  write_bytes(out, &ndim, 1);
  for (int i = 0; i < t.ndim(); ++i) {
    const uint32_t d = static_cast<uint32_t>(t.dim(i));
    write_bytes(out, &d, 4);
  }
  write_bytes(out, t.data(), sizeof(T) * static_cast<size_t>(t.numel()));
  if (!out) throw FormatError("write failed: " + path);
}

template <typename T>
Tensor<T> read_tensor(const std::string& path) {
  std::ifstream in = open_input(path);
  const Header h = read_header(in, path);
  if (h.dtype != dtype_tag<T>::value) {
    throw FormatError("tensor dtype mismatch (file tag " + std::to_string(int(h.dtype)) + "): " + path);
  }
  Tensor<T> t(h.dims);
  read_bytes(in, t.data(), sizeof(T) * static_cast<size_t>(t.numel()), path);
  return t;
}

uint8_t tensor_file_dtype(const std::string& path) {
  std::ifstream in = open_input(path);
  return read_header(in, path).dtype;
}

template void write_tensor<float>(const std::string&, const Tensor<float>&);
template void write_tensor<double>(const std::string&, const Tensor<double>&);
template void write_tensor<uint8_t>(const std::string&, const Tensor<uint8_t>&);
template Tensor<float> read_tensor<float>(const std::string&);
template Tensor<double> read_tensor<double>(const std::string&);
template Tensor<uint8_t> read_tensor<uint8_t>(const std::string&);

namespace {

void write_pgm_bytes(const std::string& path, int H, int W, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open file for writing: " + path);
  out << "P5\n" << W << " " << H << "\n255\n";
  write_bytes(out, bytes.data(), bytes.size());
  if (!out) throw FormatError("write failed: " + path);
}

}  // namespace

void write_pgm(const std::string& path, const Tensor<uint8_t>& mask) {
  GERSEG_CHECK_SHAPE(mask.ndim() == 2, "write_pgm: mask must be [H,W], got " + shape_string(mask));
  std::vector<uint8_t> bytes(static_cast<size_t>(mask.numel()));
  for (int64_t i = 0; i < mask.numel(); ++i) bytes[static_cast<size_t>(i)] = mask[i] ? 255 : 0;
  write_pgm_bytes(path, mask.dim(0), mask.dim(1), bytes);
}

void write_pgm(const std::string& path, const Tensor<float>& plane, float lo, float hi) {
  GERSEG_CHECK_SHAPE(plane.ndim() == 2, "write_pgm: plane must be [H,W], got " + shape_string(plane));
  GERSEG_CHECK(hi > lo, "write_pgm: bad scaling range");
  std::vector<uint8_t> bytes(static_cast<size_t>(plane.numel()));
  const float scale = 255.0f / (hi - lo);
  for (int64_t i = 0; i < plane.numel(); ++i) {
    const float v = std::clamp((plane[i] - lo) * scale, 0.0f, 255.0f);
    bytes[static_cast<size_t>(i)] = static_cast<uint8_t>(std::lround(v));
  }
  write_pgm_bytes(path, plane.dim(0), plane.dim(1), bytes);
}

Tensor<uint8_t> read_pgm(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw FormatError("not a binary PGM (P5): " + path);
  int W = 0, H = 0, maxval = 0;
  in >> W >> H >> maxval;
  if (!in || W <= 0 || H <= 0) throw FormatError("bad PGM header: " + path);
  if (maxval != 255) throw FormatError("unsupported PGM maxval " + std::to_string(maxval) + ": " + path);
  in.get();  // single whitespace byte after the header
  Tensor<uint8_t> t({H, W});
  read_bytes(in, t.data(), static_cast<size_t>(t.numel()), path);
  return t;
}

}  // namespace gerseg::io
