#pragma once

// Checkpoint layout (little endian):
//   "EMOCKPT1"                      8 bytes
//   u32 blob count
//   per blob: u32 name length, name bytes, u32 rank, u64 dims[rank],
//             f32 values[prod(dims)]

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "emomap/cnn/network.hpp"
#include "emomap/container.hpp"
#include "emomap/error.hpp"

namespace emomap::cnn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

struct NamedBlob {
  std::string name;
  Shape shape;
  std::vector<float> values;
  bool operator==(const NamedBlob&) const = default;
};

inline constexpr char kCheckpointMagic[8] = {'E', 'M', 'O', 'C', 'K', 'P', 'T', '1'};

template <class T>
std::vector<NamedBlob> export_blobs(Network<T>& net, const std::string& prefix = "") {
  std::vector<NamedBlob> out;
  for (auto& p : net.params()) {
    NamedBlob b{prefix + p.name, p.value->shape(), {}};
    b.values.assign(p.value->flat().begin(), p.value->flat().end());
    out.push_back(std::move(b));
  }
  for (auto& [name, buf] : net.buffers()) {
    NamedBlob b{prefix + name, {buf->size()}, {}};
    b.values.assign(buf->begin(), buf->end());
    out.push_back(std::move(b));
  }
  return out;
}

template <class T>
void import_blobs(Network<T>& net, const std::vector<NamedBlob>& blobs, const std::string& prefix = "") {
  auto find = [&](const std::string& name) -> const NamedBlob& {
    for (const auto& b : blobs)
      if (b.name == prefix + name) return b;
    throw ValidationError("checkpoint lacks blob '" + prefix + name + "'");
  };
  for (auto& p : net.params()) {
    const auto& b = find(p.name);
    if (b.shape != p.value->shape()) throw ShapeError("checkpoint blob '" + b.name + "' has shape " + to_string(b.shape));
    for (std::size_t i = 0; i < b.values.size(); ++i) (*p.value)[i] = static_cast<T>(b.values[i]);
  }
  for (auto& [name, buf] : net.buffers()) {
    const auto& b = find(name);
    if (b.values.size() != buf->size()) throw ShapeError("checkpoint blob '" + b.name + "' has the wrong size");
    buf->assign(b.values.begin(), b.values.end());
  }
}

inline std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedBlob>& blobs) {
  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + 8);
  auto put = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  };
  const auto count = static_cast<std::uint32_t>(blobs.size());
  put(&count, 4);
  for (const auto& b : blobs) {
    if (shape_size(b.shape) != b.values.size()) throw ShapeError("blob '" + b.name + "' does not match its shape");
    const auto len = static_cast<std::uint32_t>(b.name.size());
    put(&len, 4);
    put(b.name.data(), b.name.size());
    const auto rank = static_cast<std::uint32_t>(b.shape.size());
    put(&rank, 4);
    for (auto d : b.shape) {
      const auto d64 = static_cast<std::uint64_t>(d);
      put(&d64, 8);
    }
    put(b.values.data(), b.values.size() * sizeof(float));
  }
  return out;
}

inline std::vector<NamedBlob> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (bytes.size() - pos < n) {
      throw FormatError(FormatError::Kind::truncated_frames, bytes.size(), "checkpoint truncated");
    }
  };
  auto get = [&](void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes.data() + pos, n);
    pos += n;
  };
  need(8);
  if (std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
    throw FormatError(FormatError::Kind::malformed_header, 0, "not a checkpoint file");
  }
  pos = 8;
  std::uint32_t count = 0;
  get(&count, 4);
  std::vector<NamedBlob> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedBlob b;
    std::uint32_t len = 0, rank = 0;
    get(&len, 4);
    need(len);
    b.name.assign(reinterpret_cast<const char*>(bytes.data() + pos), len);
    pos += len;
    get(&rank, 4);
    for (std::uint32_t r = 0; r < rank; ++r) {
      std::uint64_t d = 0;
      get(&d, 8);
      b.shape.push_back(static_cast<std::size_t>(d));
    }
    const std::size_t n = shape_size(b.shape);
    if (n > (bytes.size() - pos) / sizeof(float)) {
      throw FormatError(FormatError::Kind::truncated_frames, bytes.size(), "checkpoint blob '" + b.name + "' truncated");
    }
    b.values.resize(n);
    get(b.values.data(), n * sizeof(float));
    out.push_back(std::move(b));
  }
  if (pos != bytes.size()) throw FormatError(FormatError::Kind::invalid_content, pos, "trailing bytes after checkpoint");
  return out;
}

inline void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedBlob>& blobs) {
  write_file_bytes(path, encode_checkpoint(blobs));
}

inline std::vector<NamedBlob> read_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_checkpoint(bytes);
}

}  // namespace emomap::cnn
