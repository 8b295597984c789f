// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#ifndef ALTI_CONFIG_HPP
#define ALTI_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace alti {

using TokenId = std::int32_t;

enum class Positional { sinusoidal, learned };

inline const char* to_string(Positional p) { return p == Positional::sinusoidal ? "sinusoidal" : "learned"; }

/// Hyperparameters of a post-LN encoder-decoder Transformer.
struct ModelConfig {
  std::size_t num_encoder_layers = 0;
  std::size_t num_decoder_layers = 0;
  std::size_t num_heads = 0;
  std::size_t model_dim = 0;
  std::size_t ffn_dim = 0;
  std::size_t vocab_size_src = 0;
  std::size_t vocab_size_tgt = 0;
  std::size_t max_positions = 0;
  double ln_epsilon = 1e-5;
  Positional positional = Positional::sinusoidal;
  // Sentence boundary token, shared by both vocabularies.
  TokenId eos_id = 2;
  std::optional<TokenId> unk_id;
  std::string model_id;

  std::size_t head_dim() const { return num_heads == 0 ? 0 : model_dim / num_heads; }

  void validate() const {
    auto positive = [](std::size_t v, const char* name) {
      if (v == 0) throw std::invalid_argument(std::string("config: ") + name + " must be positive");
    };
    positive(num_encoder_layers, "num_encoder_layers");
    positive(num_decoder_layers, "num_decoder_layers");
    positive(num_heads, "num_heads");
    positive(model_dim, "model_dim");
    positive(ffn_dim, "ffn_dim");
    positive(vocab_size_src, "vocab_size_src");
    positive(vocab_size_tgt, "vocab_size_tgt");
    positive(max_positions, "max_positions");
    if (model_dim % num_heads != 0)
      throw std::invalid_argument("config: model_dim " + std::to_string(model_dim) +
                                  " is not a multiple of num_heads " + std::to_string(num_heads));
    if (!(ln_epsilon > 0.0)) throw std::invalid_argument("config: ln_epsilon must be > 0");
    if (eos_id < 0 || static_cast<std::size_t>(eos_id) >= vocab_size_src ||
        static_cast<std::size_t>(eos_id) >= vocab_size_tgt)
      throw std::invalid_argument("config: eos_id outside a vocabulary");
    if (unk_id && (*unk_id < 0 || static_cast<std::size_t>(*unk_id) >= vocab_size_tgt))
      throw std::invalid_argument("config: unk_id outside the target vocabulary");
  }
};

}  // namespace alti

#endif  // ALTI_CONFIG_HPP
