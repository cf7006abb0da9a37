#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "emomap/container.hpp"
#include "emomap/data.hpp"

using namespace emomap;

namespace {

std::vector<std::uint8_t> assemble(const nlohmann::json& header, std::size_t payload_floats) {
  const std::string text = header.dump();
  std::vector<std::uint8_t> out{'B', 'S', 'F', 0};
  const std::uint32_t version = 1;
  const std::uint64_t len = text.size();
  out.resize(16);
  std::memcpy(out.data() + 4, &version, 4);
  std::memcpy(out.data() + 8, &len, 8);
  out.insert(out.end(), text.begin(), text.end());
  out.resize(out.size() + payload_floats * sizeof(float), 0);
  return out;
}

nlohmann::json minimal_header(std::size_t declared_channels, std::size_t stored_channels, std::size_t frames) {
  nlohmann::json h;
  h["format"] = "bsf";
  h["version"] = 1;
  h["attributes"] = nlohmann::json::object();
  h["channels"] = nlohmann::json::array();
  for (std::size_t c = 0; c < declared_channels; ++c) h["channels"].push_back({{"name", "ch" + std::to_string(c)}, {"kind", "cns"}});
  h["recordings"] = nlohmann::json::array({{{"subject", 1},
                                           {"trial", 1},
                                           {"sample_rate", 128},
                                           {"baseline_frames", 4},
                                           {"channels", stored_channels},
                                           {"frames", frames},
                                           {"offset", 0},
                                           {"ratings", {{"valence", 5.0}}}}});
  return h;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("emomap_test_" + name);
}

}  // namespace

TEST(Container, MinimalFileLoads) {
  const auto bytes = assemble(minimal_header(2, 2, 8), 16);
  const auto ds = decode_container(bytes);
  ASSERT_EQ(ds.recordings.size(), 1u);
  EXPECT_EQ(ds.recordings[0].channels(), 2u);
  EXPECT_EQ(ds.recordings[0].frames(), 8u);
  EXPECT_EQ(ds.channel_names(), (std::vector<std::string>{"ch0", "ch1"}));
}

TEST(Container, ChannelCountMismatchReportsOffset) {
  const auto h = minimal_header(3, 2, 8);
  const auto bytes = assemble(h, 16);
  try {
    decode_container(bytes);
    FAIL() << "expected a format error";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatError::Kind::channel_count_mismatch);
    EXPECT_EQ(e.offset(), 16 + h.dump().size());
    EXPECT_EQ(e.exit_code(), 3);
  }
}

TEST(Container, TruncatedFramesReportOffset) {
  auto bytes = assemble(minimal_header(2, 2, 8), 16);
  bytes.resize(bytes.size() - 5);
  try {
    decode_container(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatError::Kind::truncated_frames);
    EXPECT_EQ(e.offset(), bytes.size());
  }
}

TEST(Container, MalformedHeaders) {
  auto bytes = assemble(minimal_header(2, 2, 8), 16);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_container(bad_magic), FormatError);
  auto bad_json = bytes;
  bad_json[16] = '#';
  try {
    decode_container(bad_json);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatError::Kind::malformed_header);
    EXPECT_EQ(e.offset(), 16u);
  }
  auto bad_len = bytes;
  const std::uint64_t huge = 1ULL << 40;
  std::memcpy(bad_len.data() + 8, &huge, 8);
  EXPECT_THROW(decode_container(bad_len), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_container(trailing), FormatError);
  EXPECT_THROW(decode_container(std::span<const std::uint8_t>(bytes.data(), 10)), FormatError);
}

TEST(Container, RoundTripIsBitExact) {
  SyntheticSpec spec;
  spec.subjects = 2;
  spec.trials = 3;
  spec.channels = 40;
  spec.signal_mode = SignalMode::class_correlated;
  auto ds = generate_synthetic(spec, 77);
  ds.recordings[1].origin = SegmentOrigin{1, 2, 5, SegmentKind::trial};
  const auto bytes = encode_container(ds);
  const auto back = decode_container(bytes);
  EXPECT_EQ(back, ds);
  EXPECT_EQ(encode_container(back), bytes);

  const auto path = temp_path("roundtrip.bsf");
  store_dataset(ds, path);
  EXPECT_EQ(read_file_bytes(path), bytes);
  EXPECT_EQ(load_dataset(path), ds);
  std::filesystem::remove(path);
}

TEST(Container, RoundTripPreservesSpecialFloats) {
  Dataset ds;
  ds.channels = default_channel_table(1);
  TrialRecording r;
  r.samples = Matrix<float>(1, 4, std::vector<float>{-0.0f, 1e-45f, 3.4e38f, -1.5f});
  r.baseline_frames = 1;
  ds.recordings.push_back(r);
  const auto back = decode_container(encode_container(ds));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(std::bit_cast<std::uint32_t>(back.recordings[0].samples.flat()[i]),
              std::bit_cast<std::uint32_t>(r.samples.flat()[i]));
  }
}

TEST(Container, MissingFileIsIoError) {
  try {
    load_dataset(temp_path("does_not_exist.bsf"));
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.exit_code(), 3);
  }
}

TEST(Container, DeapShapedParticipantFile) {
  // One participant's array of the DEAP layout: 40 trials x 40 channels x 8064 frames.
  SyntheticSpec spec;
  spec.subjects = 1;
  spec.trials = 40;
  spec.channels = 40;
  spec.frames = 8064;
  spec.baseline_frames = 384;
  const auto ds = generate_synthetic(spec, 3);
  const auto path = temp_path("deap_shape.bsf");
  store_dataset(ds, path);
  const auto back = load_dataset(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.recordings.size(), 40u);
  EXPECT_EQ(back.channels.size(), 40u);
  for (const auto& r : back.recordings) {
    EXPECT_EQ(r.channels(), 40u);
    EXPECT_EQ(r.frames(), 8064u);
    EXPECT_EQ(r.ratings.size(), 4u);
  }
  EXPECT_EQ(back, ds);
}
