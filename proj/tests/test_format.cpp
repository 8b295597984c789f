// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#include <catch2/catch_amalgamated.hpp>
#include <cstring>
#include <filesystem>

#include "support.hpp"

using namespace alti;
using alti::test::toy_config;

namespace {

// Splits an encoded file, lets the caller edit manifest and payload, and
// reassembles it with a fresh checksum.
struct Image {
  nlohmann::json manifest;
  std::vector<unsigned char> payload;

  static Image split(const std::vector<unsigned char>& bytes) {
    std::uint64_t len;
    std::memcpy(&len, bytes.data() + 8, 8);
    Image img;
    img.manifest = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(len));
    img.payload.assign(bytes.begin() + 16 + static_cast<std::ptrdiff_t>(len), bytes.end() - 4);
    return img;
  }

  std::vector<unsigned char> join() const {
    const std::string text = manifest.dump();
    std::vector<unsigned char> out(kWeightMagic, kWeightMagic + 8);
    const std::uint64_t len = text.size();
    out.resize(16);
    std::memcpy(out.data() + 8, &len, 8);
    out.insert(out.end(), text.begin(), text.end());
    out.insert(out.end(), payload.begin(), payload.end());
    const std::uint32_t crc = payload_checksum(payload.data(), payload.size());
    out.resize(out.size() + 4);
    std::memcpy(out.data() + out.size() - 4, &crc, 4);
    return out;
  }

  nlohmann::json& tensor(const std::string& name) {
    for (auto& t : manifest["tensors"])
      if (t["name"] == name) return t;
    throw std::logic_error("no tensor " + name);
  }
};

template <class Real>
void require_same_tensors(const TransformerWeights<Real>& a, const TransformerWeights<Real>& b) {
  std::vector<std::vector<Real>> flat_a, flat_b;
  for_each_tensor(a, [&](const std::string&, const Shape&, std::span<const Real> d) { flat_a.emplace_back(d.begin(), d.end()); });
  for_each_tensor(b, [&](const std::string&, const Shape&, std::span<const Real> d) { flat_b.emplace_back(d.begin(), d.end()); });
  REQUIRE(flat_a.size() == flat_b.size());
  for (std::size_t k = 0; k < flat_a.size(); ++k) {
    REQUIRE(flat_a[k].size() == flat_b[k].size());
    REQUIRE(std::memcmp(flat_a[k].data(), flat_b[k].data(), flat_a[k].size() * sizeof(Real)) == 0);
  }
}

FormatError decode_error(const std::vector<unsigned char>& bytes) {
  try {
    decode_model<float>(bytes);
  } catch (const FormatError& e) {
    return e;
  }
  FAIL("decode_model accepted a malformed image");
  throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("save then load reproduces every tensor bit for bit") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ModelConfig c = toy_config(2, 2, 2, 8);
    if (seed == 2) c.positional = Positional::learned;
    c.model_id = "roundtrip";
    const auto w = random_weights<float>(c, seed);
    const auto path = std::filesystem::temp_directory_path() / ("alti-format-" + std::to_string(seed) + ".altiw");
    save_model(w, path);
    const auto back = load_model<float>(path);
    std::filesystem::remove(path);
    CHECK(back.config.num_encoder_layers == 2);
    CHECK(back.config.num_decoder_layers == 2);
    CHECK(back.config.positional == c.positional);
    CHECK(back.config.unk_id == c.unk_id);
    CHECK(back.config.model_id == "roundtrip");
    require_same_tensors(w, back);
  }
}

TEST_CASE("f64 weights load from the f32 payload without loss for f32-representable values") {
  const auto w = random_weights<float>(toy_config(1, 1, 1, 8), 9);
  const auto bytes = encode_model(w);
  const auto d = decode_model<double>(bytes);
  std::vector<double> widened;
  for_each_tensor(w, [&](const std::string&, const Shape&, std::span<const float> v) {
    for (float x : v) widened.push_back(x);
  });
  std::size_t k = 0;
  for_each_tensor(d, [&](const std::string&, const Shape&, std::span<const double> v) {
    for (double x : v) REQUIRE(x == widened[k++]);
  });
}

TEST_CASE("naming grammar covers every tensor the config implies") {
  ModelConfig c = toy_config(2, 3, 2, 8);
  std::vector<std::string> names;
  for_each_tensor(make_weights<float>(c), [&](const std::string& n, const Shape&, std::span<const float>) { names.push_back(n); });
  CHECK(std::find(names.begin(), names.end(), "enc.1.self.Wq") != names.end());
  CHECK(std::find(names.begin(), names.end(), "dec.2.cross.bo") != names.end());
  CHECK(std::find(names.begin(), names.end(), "dec.0.cross_ln.gamma") != names.end());
  CHECK(std::find(names.begin(), names.end(), "out.W") != names.end());
  CHECK(std::find(names.begin(), names.end(), "src.pos") == names.end());
  // per layer: encoder 8 + 2 + 4 + 2, decoder 8 + 2 + 8 + 2 + 4 + 2; plus embeddings and output
  CHECK(names.size() == 2 + 2 * 16 + 3 * 26 + 2);
}

TEST_CASE("shape off by one is reported with the tensor name") {
  auto img = Image::split(encode_model(random_weights<float>(toy_config(2, 2, 2, 8), 4)));
  img.tensor("dec.1.cross.Wv")["shape"][1] = 9;
  const FormatError e = decode_error(img.join());
  CHECK(e.code() == FormatErrc::shape_mismatch);
  CHECK(e.tensor() == "dec.1.cross.Wv");
  CHECK(std::string(e.what()).find("dec.1.cross.Wv") != std::string::npos);
}

TEST_CASE("missing tensor is reported with its name") {
  auto img = Image::split(encode_model(random_weights<float>(toy_config(1, 1, 1, 8), 4)));
  auto& tensors = img.manifest["tensors"];
  for (auto it = tensors.begin(); it != tensors.end(); ++it)
    if ((*it)["name"] == "enc.0.ffn.b2") {
      tensors.erase(it);
      break;
    }
  const FormatError e = decode_error(img.join());
  CHECK(e.code() == FormatErrc::missing_tensor);
  CHECK(e.tensor() == "enc.0.ffn.b2");
}

TEST_CASE("unsupported dtype is reported with its name") {
  auto img = Image::split(encode_model(random_weights<float>(toy_config(1, 1, 1, 8), 4)));
  img.tensor("tgt.embed")["dtype"] = "f16";
  const FormatError e = decode_error(img.join());
  CHECK(e.code() == FormatErrc::unsupported_dtype);
  CHECK(e.tensor() == "tgt.embed");
}

TEST_CASE("a flipped payload bit fails the checksum") {
  auto bytes = encode_model(random_weights<float>(toy_config(1, 1, 1, 8), 4));
  bytes[bytes.size() - 40] ^= 0x01;
  CHECK(decode_error(bytes).code() == FormatErrc::checksum_mismatch);
}

TEST_CASE("file-level corruption") {
  const auto good = encode_model(random_weights<float>(toy_config(1, 1, 1, 8), 4));

  SECTION("bad magic") {
    auto bytes = good;
    bytes[0] = 'X';
    CHECK(decode_error(bytes).code() == FormatErrc::bad_magic);
  }
  SECTION("truncated file") {
    auto bytes = good;
    bytes.resize(bytes.size() / 2);
    const auto code = decode_error(bytes).code();
    CHECK((code == FormatErrc::checksum_mismatch || code == FormatErrc::truncated));
  }
  SECTION("tensor past the payload end") {
    auto img = Image::split(good);
    img.tensor("out.b")["byte_offset"] = img.payload.size();
    const FormatError e = decode_error(img.join());
    CHECK(e.code() == FormatErrc::truncated);
    CHECK(e.tensor() == "out.b");
  }
  SECTION("extra tensor") {
    auto img = Image::split(good);
    img.manifest["tensors"].push_back({{"name", "enc.7.self.Wq"}, {"shape", {1}}, {"dtype", "f32"}, {"byte_offset", 0}, {"byte_len", 4}});
    const FormatError e = decode_error(img.join());
    CHECK(e.code() == FormatErrc::unexpected_tensor);
    CHECK(e.tensor() == "enc.7.self.Wq");
  }
  SECTION("manifest is not JSON") {
    auto bytes = good;
    bytes[16] = '#';
    CHECK(decode_error(bytes).code() == FormatErrc::bad_manifest);
  }
  SECTION("inconsistent head_dim") {
    auto img = Image::split(good);
    img.manifest["config"]["head_dim"] = 3;
    CHECK(decode_error(img.join()).code() == FormatErrc::invalid_config);
  }
  SECTION("zero layers") {
    auto img = Image::split(good);
    img.manifest["config"]["num_encoder_layers"] = 0;
    CHECK(decode_error(img.join()).code() == FormatErrc::invalid_config);
  }
}

TEST_CASE("nonexistent path is an io error") {
  try {
    load_model<float>("/nonexistent/alti/model.altiw");
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(e.code() == FormatErrc::io);
  }
}

TEST_CASE("config validation") {
  ModelConfig c = toy_config(1, 1, 3, 8);
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = toy_config(1, 1, 2, 8);
  c.ln_epsilon = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = toy_config(1, 1, 2, 8);
  CHECK_NOTHROW(c.validate());
  CHECK(c.head_dim() == 4);
}

TEST_CASE("per-head slices concatenate back to the full projection") {
  const auto w = random_weights<double>(toy_config(1, 1, 4, 16), 5);
  const auto& a = w.encoder[0].self;
  const std::size_t dh = 4;
  for (std::size_t h = 0; h < 4; ++h) {
    const auto rows = head_rows(a.wv, h, dh);
    const auto cols = head_cols(a.wo, h, dh);
    for (std::size_t r = 0; r < dh; ++r)
      for (std::size_t c = 0; c < 16; ++c) REQUIRE(rows(r, c) == a.wv(h * dh + r, c));
    for (std::size_t r = 0; r < 16; ++r)
      for (std::size_t c = 0; c < dh; ++c) REQUIRE(cols(r, c) == a.wo(r, h * dh + c));
  }
}
