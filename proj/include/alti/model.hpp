// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#ifndef ALTI_MODEL_HPP
#define ALTI_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "alti/config.hpp"
#include "alti/layer_norm.hpp"
#include "alti/tensor.hpp"
#include "alti/weights.hpp"

namespace alti {

enum class SequenceRole { source, target_prefix, target };

struct TokenSequence {
  std::vector<TokenId> ids;
  SequenceRole role = SequenceRole::source;
  // Word index per subword, empty when not provided. Negative entries mark
  // tokens that belong to no word (e.g. </s>).
  std::vector<int> subword_to_word;

  std::size_t size() const { return ids.size(); }
};

/// Checks vocabulary range, length and the </s> placement rules:
/// a source ends with </s>, a target prefix starts with it.
inline void validate_sequence(const TokenSequence& seq, const ModelConfig& config) {
  if (seq.ids.empty()) throw std::invalid_argument("empty token sequence");
  if (seq.ids.size() > config.max_positions)
    throw std::invalid_argument("sequence of length " + std::to_string(seq.ids.size()) + " exceeds max_positions " +
                                std::to_string(config.max_positions));
  const std::size_t vocab = seq.role == SequenceRole::source ? config.vocab_size_src : config.vocab_size_tgt;
  for (std::size_t k = 0; k < seq.ids.size(); ++k)
    if (seq.ids[k] < 0 || static_cast<std::size_t>(seq.ids[k]) >= vocab)
      throw std::out_of_range("token id " + std::to_string(seq.ids[k]) + " at position " + std::to_string(k) +
                              " outside vocabulary of size " + std::to_string(vocab));
  if (seq.role == SequenceRole::source && seq.ids.back() != config.eos_id)
    throw std::invalid_argument("source sequence must end with </s>");
  if (seq.role == SequenceRole::target_prefix && seq.ids.front() != config.eos_id)
    throw std::invalid_argument("target prefix must start with </s>");
  if (!seq.subword_to_word.empty() && seq.subword_to_word.size() != seq.ids.size())
    throw std::invalid_argument("subword_to_word length differs from sequence length");
}

/// One attention block (MHA + residual + LN) as executed.
template <class Real>
struct AttentionTrace {
  std::vector<Matrix<Real>> weights;  // per head, queries × keys
  Matrix<Real> pre_norm;              // MHA output + residual
  std::vector<LayerNormStats> norm;   // per query row, as used by the forward pass
  Matrix<Real> output;
};

template <class Real>
struct FeedForwardTrace {
  Matrix<Real> pre_norm;  // MLP output + residual
  std::vector<LayerNormStats> norm;
  Matrix<Real> output;
};

template <class Real>
struct EncoderLayerTrace {
  Matrix<Real> input;  // J × d
  AttentionTrace<Real> self;
  FeedForwardTrace<Real> ffn;
};

template <class Real>
struct DecoderLayerTrace {
  Matrix<Real> input;  // T × d, row p is y_p
  AttentionTrace<Real> self;   // ỹ^s
  AttentionTrace<Real> cross;  // ỹ, queries are ỹ^s, keys are e
  FeedForwardTrace<Real> ffn;
};

template <class Real>
struct EncoderTrace {
  std::vector<TokenId> source;
  std::vector<EncoderLayerTrace<Real>> layers;
  Matrix<Real> output;  // e, J × d
};

/// Everything needed to replay any block of a teacher-forced pass.
/// Decoder row p processes y_p and produces the prediction of y_{p+1}.
template <class Real>
struct ForwardTrace {
  EncoderTrace<Real> encoder;
  std::vector<TokenId> prefix;
  std::vector<DecoderLayerTrace<Real>> decoder;
  Matrix<Real> logits;  // T × vocab_size_tgt

  std::size_t source_length() const { return encoder.source.size(); }
  std::size_t prefix_length() const { return prefix.size(); }
};

namespace detail {

template <class Real>
Matrix<Real> embed(const Matrix<Real>& table, const Matrix<Real>& learned_pos, const std::vector<TokenId>& ids,
                   const ModelConfig& config) {
  const std::size_t d = config.model_dim;
  const double scale = std::sqrt(static_cast<double>(d));
  Matrix<Real> out(ids.size(), d);
  for (std::size_t p = 0; p < ids.size(); ++p) {
    const auto row = table.row(static_cast<std::size_t>(ids[p]));
    for (std::size_t k = 0; k < d; ++k) {
      double pos;
      if (config.positional == Positional::learned) {
        pos = static_cast<double>(learned_pos(p, k));
      } else {
        const double freq = std::pow(10000.0, -static_cast<double>(k - k % 2) / static_cast<double>(d));
        pos = k % 2 == 0 ? std::sin(static_cast<double>(p) * freq) : std::cos(static_cast<double>(p) * freq);
      }
      out(p, k) = static_cast<Real>(scale * static_cast<double>(row[k]) + pos);
    }
  }
  return out;
}

template <class Real>
void normalize_rows(const Matrix<Real>& pre, const LayerNormWeights<Real>& ln, double eps,
                    std::vector<LayerNormStats>& stats, Matrix<Real>& out) {
  stats.resize(pre.rows());
  out = Matrix<Real>(pre.rows(), pre.cols());
  for (std::size_t i = 0; i < pre.rows(); ++i) {
    stats[i] = layer_norm_stats(pre.row(i), eps);
    layer_norm_apply(pre.row(i), std::span<const Real>(ln.gamma), std::span<const Real>(ln.beta), stats[i],
                     out.row(i));
  }
}

/// Post-LN attention block. `queries` doubles as the residual stream. With
/// `causal`, query i only sees keys 0..i.
template <class Real>
AttentionTrace<Real> attention_block(const AttentionWeights<Real>& w, const LayerNormWeights<Real>& ln,
                                     const Matrix<Real>& queries, const Matrix<Real>& keys, bool causal,
                                     const ModelConfig& config) {
  const std::size_t heads = config.num_heads, dh = config.head_dim(), d = config.model_dim;
  const Matrix<Real> q = affine_rows(w.wq, std::span<const Real>(w.bq), queries);
  const Matrix<Real> k = affine_rows(w.wk, std::span<const Real>(w.bk), keys);
  const Matrix<Real> v = affine_rows(w.wv, std::span<const Real>(w.bv), keys);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t nq = queries.rows(), nk = keys.rows();

  AttentionTrace<Real> trace;
  trace.weights.assign(heads, Matrix<Real>(nq, nk));
  trace.pre_norm = Matrix<Real>(nq, d);
  std::vector<double> scores(nk);
  std::vector<Real> z(d), mha(d);
  for (std::size_t i = 0; i < nq; ++i) {
    const std::size_t limit = causal ? std::min(i + 1, nk) : nk;
    for (std::size_t h = 0; h < heads; ++h) {
      const auto qh = q.row(i).subspan(h * dh, dh);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < limit; ++j) {
        scores[j] = dot(qh, k.row(j).subspan(h * dh, dh)) * inv_sqrt;
        best = std::max(best, scores[j]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < limit; ++j) {
        scores[j] = std::exp(scores[j] - best);
        total += scores[j];
      }
      Matrix<Real>& alpha = trace.weights[h];
      for (std::size_t j = 0; j < limit; ++j) alpha(i, j) = static_cast<Real>(scores[j] / total);
      for (std::size_t c = 0; c < dh; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < limit; ++j)
          acc += static_cast<double>(alpha(i, j)) * static_cast<double>(v(j, h * dh + c));
        z[h * dh + c] = static_cast<Real>(acc);
      }
    }
    affine(w.wo, std::span<const Real>(w.bo), std::span<const Real>(z), std::span<Real>(mha));
    for (std::size_t c = 0; c < d; ++c)
      trace.pre_norm(i, c) = static_cast<Real>(static_cast<double>(mha[c]) + static_cast<double>(queries(i, c)));
  }
  normalize_rows(trace.pre_norm, ln, config.ln_epsilon, trace.norm, trace.output);
  return trace;
}

template <class Real>
FeedForwardTrace<Real> feed_forward_block(const FeedForwardWeights<Real>& w, const LayerNormWeights<Real>& ln,
                                          const Matrix<Real>& x, const ModelConfig& config) {
  FeedForwardTrace<Real> trace;
  trace.pre_norm = Matrix<Real>(x.rows(), x.cols());
  std::vector<Real> hidden(config.ffn_dim), out(config.model_dim);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    affine(w.w1, std::span<const Real>(w.b1), x.row(i), std::span<Real>(hidden));
    for (Real& h : hidden) h = std::max(h, Real{0});
    affine(w.w2, std::span<const Real>(w.b2), std::span<const Real>(hidden), std::span<Real>(out));
    for (std::size_t c = 0; c < x.cols(); ++c)
      trace.pre_norm(i, c) = static_cast<Real>(static_cast<double>(out[c]) + static_cast<double>(x(i, c)));
  }
  normalize_rows(trace.pre_norm, ln, config.ln_epsilon, trace.norm, trace.output);
  return trace;
}

}  // namespace detail

/// Runs the encoder over a source ending in </s>.
template <class Real>
EncoderTrace<Real> encode(const TransformerWeights<Real>& weights, const TokenSequence& source) {
  const ModelConfig& config = weights.config;
  validate_sequence(source, config);
  if (source.role != SequenceRole::source) throw std::invalid_argument("encode: expected a source sequence");
  EncoderTrace<Real> trace;
  trace.source = source.ids;
  Matrix<Real> x = detail::embed(weights.src_embed, weights.src_pos, source.ids, config);
  trace.layers.reserve(weights.encoder.size());
  for (const auto& layer : weights.encoder) {
    EncoderLayerTrace<Real> lt;
    lt.input = x;
    lt.self = detail::attention_block(layer.self, layer.self_ln, x, x, false, config);
    lt.ffn = detail::feed_forward_block(layer.ffn, layer.ffn_ln, lt.self.output, config);
    x = lt.ffn.output;
    trace.layers.push_back(std::move(lt));
  }
  trace.output = std::move(x);
  return trace;
}

/// Teacher-forced decoder pass against an existing encoding.
template <class Real>
ForwardTrace<Real> decode(const TransformerWeights<Real>& weights, EncoderTrace<Real> encoder,
                          const TokenSequence& prefix) {
  const ModelConfig& config = weights.config;
  validate_sequence(prefix, config);
  if (prefix.role != SequenceRole::target_prefix) throw std::invalid_argument("decode: expected a target prefix");
  ForwardTrace<Real> trace;
  trace.encoder = std::move(encoder);
  trace.prefix = prefix.ids;
  Matrix<Real> y = detail::embed(weights.tgt_embed, weights.tgt_pos, prefix.ids, config);
  trace.decoder.reserve(weights.decoder.size());
  for (const auto& layer : weights.decoder) {
    DecoderLayerTrace<Real> lt;
    lt.input = y;
    lt.self = detail::attention_block(layer.self, layer.self_ln, y, y, true, config);
    lt.cross = detail::attention_block(layer.cross, layer.cross_ln, lt.self.output, trace.encoder.output, false,
                                       config);
    lt.ffn = detail::feed_forward_block(layer.ffn, layer.ffn_ln, lt.cross.output, config);
    y = lt.ffn.output;
    trace.decoder.push_back(std::move(lt));
  }
  trace.logits = affine_rows(weights.out_w, std::span<const Real>(weights.out_b), y);
  return trace;
}

/// Full teacher-forced forward pass. Logits row p scores y_{p+1} given
/// (x, y_0..y_p).
template <class Real>
ForwardTrace<Real> forward_with_trace(const TransformerWeights<Real>& weights, const TokenSequence& source,
                                      const TokenSequence& prefix) {
  return decode(weights, encode(weights, source), prefix);
}

struct DecodeOptions {
  std::size_t max_len = 0;
  // Tokens forced right after the initial </s>, before free decoding starts.
  std::vector<TokenId> forced;
};

/// Greedy decoding. Returns the generated tokens y_1.. (forced tokens and
/// the initial </s> excluded), ending in </s> unless a length limit hit.
template <class Real>
TokenSequence greedy_decode(const TransformerWeights<Real>& weights, const TokenSequence& source,
                            const DecodeOptions& options) {
  if (options.max_len == 0) throw std::invalid_argument("greedy_decode: max_len must be positive");
  const ModelConfig& config = weights.config;
  const EncoderTrace<Real> encoder = encode(weights, source);
  TokenSequence prefix{{config.eos_id}, SequenceRole::target_prefix, {}};
  prefix.ids.insert(prefix.ids.end(), options.forced.begin(), options.forced.end());
  TokenSequence out{{}, SequenceRole::target, {}};
  while (out.ids.size() < options.max_len && prefix.ids.size() <= config.max_positions) {
    const ForwardTrace<Real> trace = decode(weights, encoder, prefix);
    const auto next = static_cast<TokenId>(argmax(trace.logits.row(trace.logits.rows() - 1)));
    out.ids.push_back(next);
    if (next == config.eos_id) break;
    prefix.ids.push_back(next);
  }
  return out;
}

template <class Real>
TokenSequence greedy_decode(const TransformerWeights<Real>& weights, const TokenSequence& source,
                            std::size_t max_len) {
  return greedy_decode(weights, source, DecodeOptions{max_len, {}});
}

}  // namespace alti

#endif  // ALTI_MODEL_HPP
