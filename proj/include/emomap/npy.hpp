#pragma once

// Minimal NPY v1.0 writer/reader for little-endian float32 C-order arrays.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "emomap/container.hpp"
#include "emomap/error.hpp"

namespace emomap {

inline std::vector<std::uint8_t> encode_npy(std::span<const float> values, const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  if (n != values.size()) throw ShapeError("npy: values do not match shape");
  std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) dict += (i ? ", " : "") + std::to_string(shape[i]);
  if (shape.size() == 1) dict += ",";
  dict += "), }";
  // header (magic 6 + version 2 + len 2 + dict + '\n') padded to 64 bytes
  const std::size_t unpadded = 10 + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict += '\n';
  std::vector<std::uint8_t> out = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
  const auto len = static_cast<std::uint16_t>(dict.size());
  out.push_back(static_cast<std::uint8_t>(len & 0xff));
  out.push_back(static_cast<std::uint8_t>(len >> 8));
  out.insert(out.end(), dict.begin(), dict.end());
  const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
  out.insert(out.end(), p, p + values.size() * sizeof(float));
  return out;
}

inline void write_npy(const std::filesystem::path& path, std::span<const float> values,
                      const std::vector<std::size_t>& shape) {
  write_file_bytes(path, encode_npy(values, shape));
}

}  // namespace emomap
