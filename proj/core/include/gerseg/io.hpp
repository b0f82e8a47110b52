#pragma once

#include <cstdint>
#include <string>

#include "gerseg/tensor.hpp"

// Tensor and image file I/O.
//
// Tensor files: magic "GTEN", u32 LE version (1), u8 dtype (0 = f32,
// 1 = f64, 2 = u8), u8 ndim, ndim x u32 LE dims, then the row-major
// little-endian payload. A 2x2 f32 tensor is 4+4+1+1+8+16 = 34 bytes.
//
// Images: binary PGM (P5), maxval 255.
namespace gerseg::io {

template <typename T>
struct dtype_tag;
template <>
struct dtype_tag<float> {
  static constexpr uint8_t value = 0;
};
template <>
struct dtype_tag<double> {
  static constexpr uint8_t value = 1;
};
template <>
struct dtype_tag<uint8_t> {
  static constexpr uint8_t value = 2;
};

template <typename T>
void write_tensor(const std::string& path, const Tensor<T>& t);

// Fails with FormatError when the file's dtype is not T's.
template <typename T>
Tensor<T> read_tensor(const std::string& path);

// dtype byte of a tensor file without loading the payload.
uint8_t tensor_file_dtype(const std::string& path);

// Mask variant: 0 stays 0, anything else becomes 255.
void write_pgm(const std::string& path, const Tensor<uint8_t>& mask);

// Grayscale variant: values scaled from [lo, hi] to 0..255 and rounded.
void write_pgm(const std::string& path, const Tensor<float>& plane, float lo = 0.0f, float hi = 1.0f);

Tensor<uint8_t> read_pgm(const std::string& path);

}  // namespace gerseg::io
