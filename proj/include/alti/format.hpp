// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#ifndef ALTI_FORMAT_HPP
#define ALTI_FORMAT_HPP

// ALTIWGT1 weight files:
//
//   bytes 0..7    magic "ALTIWGT1"
//   bytes 8..15   manifest length N, uint64 little-endian
//   next N bytes  UTF-8 JSON manifest {config, tensors: [{name, shape, dtype, byte_offset, byte_len}]}
//   payload       raw little-endian tensor data; byte_offset is relative to the payload start
//   last 4 bytes  CRC-32 (zlib polynomial) of the payload, uint32 little-endian
//
// Tensor names follow for_each_tensor() in weights.hpp. Only dtype "f32" is accepted.

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "alti/config.hpp"
#include "alti/weights.hpp"

namespace alti {

static_assert(std::endian::native == std::endian::little, "ALTIWGT1 I/O assumes a little-endian host");

inline constexpr char kWeightMagic[8] = {'A', 'L', 'T', 'I', 'W', 'G', 'T', '1'};

enum class FormatErrc {
  io,
  bad_magic,
  bad_manifest,
  invalid_config,
  missing_tensor,
  unexpected_tensor,
  shape_mismatch,
  unsupported_dtype,
  truncated,
  checksum_mismatch,
};

inline const char* to_string(FormatErrc e) {
  switch (e) {
    case FormatErrc::io: return "io";
    case FormatErrc::bad_magic: return "bad magic";
    case FormatErrc::bad_manifest: return "bad manifest";
    case FormatErrc::invalid_config: return "invalid config";
    case FormatErrc::missing_tensor: return "missing tensor";
    case FormatErrc::unexpected_tensor: return "unexpected tensor";
    case FormatErrc::shape_mismatch: return "shape mismatch";
    case FormatErrc::unsupported_dtype: return "unsupported dtype";
    case FormatErrc::truncated: return "truncated";
    case FormatErrc::checksum_mismatch: return "checksum mismatch";
  }
  return "unknown";
}

class FormatError : public std::runtime_error {
 public:
  FormatError(FormatErrc code, std::string tensor, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + (tensor.empty() ? "" : " [" + tensor + "]") + ": " +
                           detail),
        code_(code),
        tensor_(std::move(tensor)) {}

  FormatErrc code() const { return code_; }
  /// Offending tensor name, empty for file-level errors.
  const std::string& tensor() const { return tensor_; }

 private:
  FormatErrc code_;
  std::string tensor_;
};

inline nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::json j = {
      {"num_encoder_layers", c.num_encoder_layers},
      {"num_decoder_layers", c.num_decoder_layers},
      {"num_heads", c.num_heads},
      {"model_dim", c.model_dim},
      {"ffn_dim", c.ffn_dim},
      {"vocab_size_src", c.vocab_size_src},
      {"vocab_size_tgt", c.vocab_size_tgt},
      {"max_positions", c.max_positions},
      {"ln_epsilon", c.ln_epsilon},
      {"positional", to_string(c.positional)},
      {"eos_id", c.eos_id},
  };
  if (c.unk_id) j["unk_id"] = *c.unk_id;
  if (!c.model_id.empty()) j["model_id"] = c.model_id;
  return j;
}

/// Parses and validates a config object. head_dim is optional and, when
/// present, must equal model_dim / num_heads.
inline ModelConfig config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.num_encoder_layers = j.at("num_encoder_layers").get<std::size_t>();
    c.num_decoder_layers = j.at("num_decoder_layers").get<std::size_t>();
    c.num_heads = j.at("num_heads").get<std::size_t>();
    c.model_dim = j.at("model_dim").get<std::size_t>();
    c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
    c.vocab_size_src = j.at("vocab_size_src").get<std::size_t>();
    c.vocab_size_tgt = j.at("vocab_size_tgt").get<std::size_t>();
    c.max_positions = j.at("max_positions").get<std::size_t>();
    c.ln_epsilon = j.at("ln_epsilon").get<double>();
    const std::string pos = j.value("positional", std::string("sinusoidal"));
    if (pos == "sinusoidal")
      c.positional = Positional::sinusoidal;
    else if (pos == "learned")
      c.positional = Positional::learned;
    else
      throw std::invalid_argument("unknown positional kind '" + pos + "'");
    c.eos_id = j.value("eos_id", TokenId{2});
    if (j.contains("unk_id")) c.unk_id = j.at("unk_id").get<TokenId>();
    c.model_id = j.value("model_id", std::string());
    if (j.contains("head_dim") && j.at("head_dim").get<std::size_t>() * c.num_heads != c.model_dim)
      throw std::invalid_argument("head_dim * num_heads != model_dim");
    c.validate();
    return c;
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(FormatErrc::invalid_config, "", e.what());
  }
}

inline std::uint32_t payload_checksum(const unsigned char* data, std::size_t len) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (len > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(len, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    len -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

/// Serialises to the ALTIWGT1 byte layout. Values are stored as f32.
template <class Real>
std::vector<unsigned char> encode_model(const TransformerWeights<Real>& weights) {
  nlohmann::json tensors = nlohmann::json::array();
  std::vector<unsigned char> payload;
  for_each_tensor(weights, [&](const std::string& name, const Shape& shape, std::span<const Real> data) {
    const std::size_t offset = payload.size();
    payload.resize(offset + data.size() * sizeof(float));
    for (std::size_t k = 0; k < data.size(); ++k) {
      const float v = static_cast<float>(data[k]);
      std::memcpy(payload.data() + offset + k * sizeof(float), &v, sizeof(float));
    }
    tensors.push_back({{"name", name},
                       {"shape", shape},
                       {"dtype", "f32"},
                       {"byte_offset", offset},
                       {"byte_len", data.size() * sizeof(float)}});
  });
  nlohmann::json manifest = {{"config", config_to_json(weights.config)}, {"tensors", tensors}};
  const std::string text = manifest.dump();

  std::vector<unsigned char> out(kWeightMagic, kWeightMagic + 8);
  const std::uint64_t len = text.size();
  out.resize(16);
  std::memcpy(out.data() + 8, &len, sizeof(len));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), payload.begin(), payload.end());
  const std::uint32_t crc = payload_checksum(payload.data(), payload.size());
  out.resize(out.size() + 4);
  std::memcpy(out.data() + out.size() - 4, &crc, sizeof(crc));
  return out;
}

template <class Real>
void save_model(const TransformerWeights<Real>& weights, const std::filesystem::path& path) {
  const auto bytes = encode_model(weights);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError(FormatErrc::io, "", "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FormatError(FormatErrc::io, "", "write failed for " + path.string());
}

/// Parses an in-memory ALTIWGT1 image. Every expected tensor must be
/// present exactly once with the shape the config implies.
template <class Real>
TransformerWeights<Real> decode_model(std::span<const unsigned char> bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kWeightMagic, 8) != 0)
    throw FormatError(FormatErrc::bad_magic, "", "not an ALTIWGT1 file");
  std::uint64_t manifest_len = 0;
  std::memcpy(&manifest_len, bytes.data() + 8, sizeof(manifest_len));
  if (manifest_len > bytes.size() - 20)
    throw FormatError(FormatErrc::truncated, "", "manifest length exceeds file size");
  const auto* manifest_begin = reinterpret_cast<const char*>(bytes.data() + 16);

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(manifest_begin, manifest_begin + manifest_len);
  } catch (const std::exception& e) {
    throw FormatError(FormatErrc::bad_manifest, "", e.what());
  }
  if (!manifest.is_object() || !manifest.contains("config") || !manifest.contains("tensors") ||
      !manifest["tensors"].is_array())
    throw FormatError(FormatErrc::bad_manifest, "", "manifest needs 'config' and 'tensors'");

  const std::size_t payload_begin = 16 + manifest_len;
  const std::size_t payload_len = bytes.size() - 4 - payload_begin;
  const unsigned char* payload = bytes.data() + payload_begin;
  std::uint32_t stored_crc = 0;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, sizeof(stored_crc));
  if (payload_checksum(payload, payload_len) != stored_crc)
    throw FormatError(FormatErrc::checksum_mismatch, "", "payload CRC-32 does not match trailer");

  const ModelConfig config = config_from_json(manifest["config"]);

  std::map<std::string, const nlohmann::json*> entries;
  for (const auto& t : manifest["tensors"]) {
    if (!t.is_object() || !t.contains("name") || !t["name"].is_string())
      throw FormatError(FormatErrc::bad_manifest, "", "tensor entry without a name");
    const std::string name = t["name"].get<std::string>();
    if (!entries.emplace(name, &t).second) throw FormatError(FormatErrc::bad_manifest, name, "duplicate tensor");
  }

  TransformerWeights<Real> weights = make_weights<Real>(config);
  for_each_tensor(weights, [&](const std::string& name, const Shape& shape, std::span<Real> data) {
    const auto it = entries.find(name);
    if (it == entries.end()) throw FormatError(FormatErrc::missing_tensor, name, "required by config");
    const nlohmann::json& t = *it->second;
    Shape stored;
    std::string dtype;
    std::size_t offset = 0, len = 0;
    try {
      stored = t.at("shape").get<Shape>();
      dtype = t.at("dtype").get<std::string>();
      offset = t.at("byte_offset").get<std::size_t>();
      len = t.at("byte_len").get<std::size_t>();
    } catch (const std::exception& e) {
      throw FormatError(FormatErrc::bad_manifest, name, e.what());
    }
    if (dtype != "f32") throw FormatError(FormatErrc::unsupported_dtype, name, "dtype '" + dtype + "'");
    if (stored != shape) {
      std::string want, got;
      for (auto s : shape) want += (want.empty() ? "" : "x") + std::to_string(s);
      for (auto s : stored) got += (got.empty() ? "" : "x") + std::to_string(s);
      throw FormatError(FormatErrc::shape_mismatch, name, "expected " + want + ", found " + got);
    }
    if (len != data.size() * sizeof(float))
      throw FormatError(FormatErrc::shape_mismatch, name, "byte_len inconsistent with shape");
    if (offset > payload_len || len > payload_len - offset)
      throw FormatError(FormatErrc::truncated, name, "tensor extends past the payload");
    for (std::size_t k = 0; k < data.size(); ++k) {
      float v;
      std::memcpy(&v, payload + offset + k * sizeof(float), sizeof(float));
      data[k] = static_cast<Real>(v);
    }
    entries.erase(it);
  });
  if (!entries.empty())
    throw FormatError(FormatErrc::unexpected_tensor, entries.begin()->first, "not part of the naming grammar");
  return weights;
}

template <class Real>
TransformerWeights<Real> load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(FormatErrc::io, "", "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_model<Real>(bytes);
}

}  // namespace alti

#endif  // ALTI_FORMAT_HPP
