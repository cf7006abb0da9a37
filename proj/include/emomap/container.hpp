#pragma once

// BSF container: a JSON header followed by raw float32 frames.
//
//   offset  size  field
//   0       4     magic "BSF\0"
//   4       4     u32 LE format version (1)
//   8       8     u64 LE header length H in bytes
//   16      H     UTF-8 JSON header (compact, keys sorted)
//   16+H    ...   payload: per recording, channels x frames float32 LE,
//                 channel-major (all frames of channel 0, then channel 1, ...)
//
// Header:
//   {"attributes": {...},
//    "channels": [{"kind": "cns"|"pns", "name": str, "pns_type": str?}, ...],
//    "format": "bsf", "version": 1,
//    "recordings": [{"baseline_frames", "channels", "frames", "offset",
//                    "ratings": {scale: value}, "sample_rate", "subject",
//                    "trial", "origin"?: {"kind", "segment", "subject",
//                    "trial"}}, ...]}
//
// "offset" is relative to the start of the payload. The writer is canonical,
// so store(load(bytes)) == bytes for any file it produced.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emomap/data.hpp"
#include "emomap/error.hpp"

namespace emomap {

static_assert(std::endian::native == std::endian::little, "BSF I/O assumes a little-endian host");

enum class ContainerFormat { bsf };

inline ContainerFormat parse_container_format(std::string_view s) {
  if (s == "bsf") return ContainerFormat::bsf;
  throw ValidationError("unknown container format '" + std::string(s) + "'");
}

inline constexpr char kBsfMagic[4] = {'B', 'S', 'F', '\0'};
inline constexpr std::uint32_t kBsfVersion = 1;
inline constexpr std::size_t kBsfPreamble = 16;

namespace detail {

template <class T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.insert(out.end(), b, b + sizeof(T));
}

template <class T>
T get_le(std::span<const std::uint8_t> in, std::size_t at) {
  T v;
  std::memcpy(&v, in.data() + at, sizeof(T));
  return v;
}

inline nlohmann::json channel_to_json(const ChannelInfo& c) {
  nlohmann::json j = {{"name", c.name}, {"kind", c.kind == ChannelKind::cns ? "cns" : "pns"}};
  if (c.pns_type) j["pns_type"] = std::string(to_string(*c.pns_type));
  return j;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_container(const Dataset& ds) {
  validate(ds);
  nlohmann::json header;
  header["format"] = "bsf";
  header["version"] = kBsfVersion;
  header["attributes"] = ds.attributes;
  header["channels"] = nlohmann::json::array();
  for (const auto& c : ds.channels) header["channels"].push_back(detail::channel_to_json(c));
  header["recordings"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& r : ds.recordings) {
    nlohmann::json e = {{"subject", r.subject_id},
                        {"trial", r.trial_id},
                        {"sample_rate", r.sample_rate},
                        {"baseline_frames", r.baseline_frames},
                        {"channels", r.channels()},
                        {"frames", r.frames()},
                        {"offset", offset},
                        {"ratings", r.ratings}};
    if (r.origin) {
      e["origin"] = {{"subject", r.origin->subject_id},
                     {"trial", r.origin->trial_id},
                     {"segment", r.origin->segment_index},
                     {"kind", std::string(to_string(r.origin->kind))}};
    }
    header["recordings"].push_back(std::move(e));
    offset += static_cast<std::uint64_t>(r.samples.size()) * sizeof(float);
  }
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kBsfPreamble + text.size() + offset);
  out.insert(out.end(), kBsfMagic, kBsfMagic + 4);
  detail::put_le<std::uint32_t>(out, kBsfVersion);
  detail::put_le<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& r : ds.recordings) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(r.samples.data().data());
    out.insert(out.end(), p, p + r.samples.size() * sizeof(float));
  }
  return out;
}

inline Dataset decode_container(std::span<const std::uint8_t> bytes) {
  using Kind = FormatError::Kind;
  if (bytes.size() < kBsfPreamble) throw FormatError(Kind::malformed_header, bytes.size(), "file shorter than preamble");
  if (std::memcmp(bytes.data(), kBsfMagic, 4) != 0) throw FormatError(Kind::malformed_header, 0, "bad magic");
  const auto version = detail::get_le<std::uint32_t>(bytes, 4);
  if (version != kBsfVersion) {
    throw FormatError(Kind::malformed_header, 4, "unsupported version " + std::to_string(version));
  }
  const auto header_len = detail::get_le<std::uint64_t>(bytes, 8);
  if (header_len > bytes.size() - kBsfPreamble) {
    throw FormatError(Kind::malformed_header, 8, "header length exceeds file size");
  }
  const std::uint64_t payload_start = kBsfPreamble + header_len;

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + kBsfPreamble, bytes.begin() + static_cast<std::ptrdiff_t>(payload_start));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(Kind::malformed_header, kBsfPreamble + (e.byte > 0 ? e.byte - 1 : 0),
                      std::string("header is not valid JSON: ") + e.what());
  }

  Dataset ds;
  try {
    if (header.at("format") != "bsf") throw FormatError(Kind::malformed_header, kBsfPreamble, "format tag is not 'bsf'");
    ds.attributes = header.value("attributes", nlohmann::json::object());
    for (const auto& c : header.at("channels")) {
      ChannelInfo ci;
      ci.name = c.at("name").get<std::string>();
      const auto kind = c.at("kind").get<std::string>();
      if (kind == "cns") {
        ci.kind = ChannelKind::cns;
      } else if (kind == "pns") {
        ci.kind = ChannelKind::pns;
        ci.pns_type = parse_pns_type(c.at("pns_type").get<std::string>());
      } else {
        throw FormatError(Kind::malformed_header, kBsfPreamble, "unknown channel kind '" + kind + "'");
      }
      ds.channels.push_back(std::move(ci));
    }
    const std::size_t n_channels = ds.channels.size();
    std::uint64_t expected_offset = 0;
    for (const auto& e : header.at("recordings")) {
      TrialRecording r;
      r.subject_id = e.at("subject").get<int>();
      r.trial_id = e.at("trial").get<int>();
      r.sample_rate = e.at("sample_rate").get<int>();
      r.baseline_frames = e.at("baseline_frames").get<std::size_t>();
      r.ratings = e.at("ratings").get<std::map<std::string, double>>();
      const auto ch = e.at("channels").get<std::size_t>();
      const auto frames = e.at("frames").get<std::size_t>();
      const auto offset = e.at("offset").get<std::uint64_t>();
      const std::uint64_t at = payload_start + offset;
      if (ch != n_channels) {
        throw FormatError(Kind::channel_count_mismatch, at,
                          "recording (subject " + std::to_string(r.subject_id) + ", trial " +
                              std::to_string(r.trial_id) + ") stores " + std::to_string(ch) +
                              " channels but the channel table declares " + std::to_string(n_channels));
      }
      if (offset != expected_offset) {
        throw FormatError(Kind::invalid_content, at, "recording offset is not contiguous");
      }
      const std::uint64_t n_bytes = static_cast<std::uint64_t>(ch) * frames * sizeof(float);
      if (at + n_bytes > bytes.size()) {
        throw FormatError(Kind::truncated_frames, bytes.size(),
                          "frames truncated: recording needs bytes up to " + std::to_string(at + n_bytes));
      }
      std::vector<float> samples(ch * frames);
      std::memcpy(samples.data(), bytes.data() + at, n_bytes);
      r.samples = Matrix<float>(ch, frames, std::move(samples));
      if (e.contains("origin")) {
        const auto& o = e.at("origin");
        SegmentOrigin so;
        so.subject_id = o.at("subject").get<int>();
        so.trial_id = o.at("trial").get<int>();
        so.segment_index = o.at("segment").get<std::size_t>();
        so.kind = o.at("kind").get<std::string>() == "baseline" ? SegmentKind::baseline : SegmentKind::trial;
        r.origin = so;
      }
      expected_offset += n_bytes;
      ds.recordings.push_back(std::move(r));
    }
    if (payload_start + expected_offset != bytes.size()) {
      throw FormatError(Kind::invalid_content, payload_start + expected_offset, "trailing bytes after last recording");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(Kind::malformed_header, kBsfPreamble, std::string("header field error: ") + e.what());
  }
  try {
    validate(ds);
  } catch (const ValidationError& e) {
    throw FormatError(Kind::invalid_content, kBsfPreamble, e.what());
  }
  return ds;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
    throw IoError("cannot read '" + path.string() + "'");
  }
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

inline Dataset load_dataset(const std::filesystem::path& path, ContainerFormat = ContainerFormat::bsf) {
  return decode_container(read_file_bytes(path));
}

inline void store_dataset(const Dataset& ds, const std::filesystem::path& path) {
  write_file_bytes(path, encode_container(ds));
}

}  // namespace emomap
