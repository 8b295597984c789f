// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#ifndef ALTI_WEIGHTS_HPP
#define ALTI_WEIGHTS_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "alti/config.hpp"
#include "alti/tensor.hpp"

namespace alti {

// Linear maps follow the out×in convention: y = W x + b.

template <class Real>
struct AttentionWeights {
  Matrix<Real> wq, wk, wv, wo;
  std::vector<Real> bq, bk, bv, bo;
};

template <class Real>
struct LayerNormWeights {
  std::vector<Real> gamma, beta;
};

template <class Real>
struct FeedForwardWeights {
  Matrix<Real> w1;  // ffn_dim × model_dim
  std::vector<Real> b1;
  Matrix<Real> w2;  // model_dim × ffn_dim
  std::vector<Real> b2;
};

template <class Real>
struct EncoderLayerWeights {
  AttentionWeights<Real> self;
  LayerNormWeights<Real> self_ln;
  FeedForwardWeights<Real> ffn;
  LayerNormWeights<Real> ffn_ln;
};

template <class Real>
struct DecoderLayerWeights {
  AttentionWeights<Real> self;
  LayerNormWeights<Real> self_ln;
  AttentionWeights<Real> cross;
  LayerNormWeights<Real> cross_ln;
  FeedForwardWeights<Real> ffn;
  LayerNormWeights<Real> ffn_ln;
};

/// All learned parameters of a post-LN encoder-decoder Transformer.
/// Immutable after load; share freely across threads.
template <class Real>
struct TransformerWeights {
  ModelConfig config;
  Matrix<Real> src_embed;  // vocab_size_src × model_dim
  Matrix<Real> tgt_embed;  // vocab_size_tgt × model_dim
  Matrix<Real> src_pos;    // max_positions × model_dim, learned positions only
  Matrix<Real> tgt_pos;
  std::vector<EncoderLayerWeights<Real>> encoder;
  std::vector<DecoderLayerWeights<Real>> decoder;
  Matrix<Real> out_w;  // vocab_size_tgt × model_dim
  std::vector<Real> out_b;
};

using Shape = std::vector<std::size_t>;

namespace detail {

template <class Real, class Fn>
void visit_attention(const std::string& prefix, AttentionWeights<Real>& a, Fn& fn) {
  auto mat = [&](const char* n, Matrix<Real>& m) { fn(prefix + n, Shape{m.rows(), m.cols()}, m.flat()); };
  auto vec = [&](const char* n, std::vector<Real>& v) { fn(prefix + n, Shape{v.size()}, std::span<Real>(v)); };
  mat("Wq", a.wq);
  vec("bq", a.bq);
  mat("Wk", a.wk);
  vec("bk", a.bk);
  mat("Wv", a.wv);
  vec("bv", a.bv);
  mat("Wo", a.wo);
  vec("bo", a.bo);
}

template <class Real, class Fn>
void visit_ln(const std::string& prefix, LayerNormWeights<Real>& ln, Fn& fn) {
  fn(prefix + "gamma", Shape{ln.gamma.size()}, std::span<Real>(ln.gamma));
  fn(prefix + "beta", Shape{ln.beta.size()}, std::span<Real>(ln.beta));
}

template <class Real, class Fn>
void visit_ffn(const std::string& prefix, FeedForwardWeights<Real>& f, Fn& fn) {
  fn(prefix + "W1", Shape{f.w1.rows(), f.w1.cols()}, f.w1.flat());
  fn(prefix + "b1", Shape{f.b1.size()}, std::span<Real>(f.b1));
  fn(prefix + "W2", Shape{f.w2.rows(), f.w2.cols()}, f.w2.flat());
  fn(prefix + "b2", Shape{f.b2.size()}, std::span<Real>(f.b2));
}

template <class Real>
void init_attention(AttentionWeights<Real>& a, std::size_t d) {
  a.wq = a.wk = a.wv = a.wo = Matrix<Real>(d, d);
  a.bq = a.bk = a.bv = a.bo = std::vector<Real>(d, Real{0});
}

template <class Real>
void init_ln(LayerNormWeights<Real>& ln, std::size_t d) {
  ln.gamma.assign(d, Real{1});
  ln.beta.assign(d, Real{0});
}

template <class Real>
void init_ffn(FeedForwardWeights<Real>& f, std::size_t d, std::size_t ffn) {
  f.w1 = Matrix<Real>(ffn, d);
  f.b1.assign(ffn, Real{0});
  f.w2 = Matrix<Real>(d, ffn);
  f.b2.assign(d, Real{0});
}

}  // namespace detail

/// Calls fn(name, shape, data) for every tensor in canonical order. This
/// function is the single definition of the tensor naming grammar:
///
///   src.embed  tgt.embed  [src.pos  tgt.pos]
///   enc.{l}.self.{Wq,bq,Wk,bk,Wv,bv,Wo,bo}  enc.{l}.self_ln.{gamma,beta}
///   enc.{l}.ffn.{W1,b1,W2,b2}               enc.{l}.ffn_ln.{gamma,beta}
///   dec.{l}.self.*  dec.{l}.self_ln.*  dec.{l}.cross.*  dec.{l}.cross_ln.*
///   dec.{l}.ffn.*   dec.{l}.ffn_ln.*
///   out.W  out.b
///
/// Layers are numbered from 0.
template <class Real, class Fn>
void for_each_tensor(TransformerWeights<Real>& w, Fn&& fn) {
  auto mat = [&](const std::string& n, Matrix<Real>& m) { fn(n, Shape{m.rows(), m.cols()}, m.flat()); };
  mat("src.embed", w.src_embed);
  mat("tgt.embed", w.tgt_embed);
  if (w.config.positional == Positional::learned) {
    mat("src.pos", w.src_pos);
    mat("tgt.pos", w.tgt_pos);
  }
  for (std::size_t l = 0; l < w.encoder.size(); ++l) {
    const std::string p = "enc." + std::to_string(l) + ".";
    detail::visit_attention(p + "self.", w.encoder[l].self, fn);
    detail::visit_ln(p + "self_ln.", w.encoder[l].self_ln, fn);
    detail::visit_ffn(p + "ffn.", w.encoder[l].ffn, fn);
    detail::visit_ln(p + "ffn_ln.", w.encoder[l].ffn_ln, fn);
  }
  for (std::size_t l = 0; l < w.decoder.size(); ++l) {
    const std::string p = "dec." + std::to_string(l) + ".";
    detail::visit_attention(p + "self.", w.decoder[l].self, fn);
    detail::visit_ln(p + "self_ln.", w.decoder[l].self_ln, fn);
    detail::visit_attention(p + "cross.", w.decoder[l].cross, fn);
    detail::visit_ln(p + "cross_ln.", w.decoder[l].cross_ln, fn);
    detail::visit_ffn(p + "ffn.", w.decoder[l].ffn, fn);
    detail::visit_ln(p + "ffn_ln.", w.decoder[l].ffn_ln, fn);
  }
  mat("out.W", w.out_w);
  fn(std::string("out.b"), Shape{w.out_b.size()}, std::span<Real>(w.out_b));
}

template <class Real, class Fn>
void for_each_tensor(const TransformerWeights<Real>& w, Fn&& fn) {
  // The visitor only hands out const views.
  for_each_tensor(const_cast<TransformerWeights<Real>&>(w),
                  [&](const std::string& n, const Shape& s, std::span<Real> data) {
                    fn(n, s, std::span<const Real>(data.data(), data.size()));
                  });
}

/// Zero-filled weights with every shape implied by the config
/// (LN gains are 1).
template <class Real>
TransformerWeights<Real> make_weights(const ModelConfig& config) {
  config.validate();
  const std::size_t d = config.model_dim;
  TransformerWeights<Real> w;
  w.config = config;
  w.src_embed = Matrix<Real>(config.vocab_size_src, d);
  w.tgt_embed = Matrix<Real>(config.vocab_size_tgt, d);
  if (config.positional == Positional::learned) {
    w.src_pos = Matrix<Real>(config.max_positions, d);
    w.tgt_pos = Matrix<Real>(config.max_positions, d);
  }
  w.encoder.resize(config.num_encoder_layers);
  for (auto& layer : w.encoder) {
    detail::init_attention(layer.self, d);
    detail::init_ln(layer.self_ln, d);
    detail::init_ffn(layer.ffn, d, config.ffn_dim);
    detail::init_ln(layer.ffn_ln, d);
  }
  w.decoder.resize(config.num_decoder_layers);
  for (auto& layer : w.decoder) {
    detail::init_attention(layer.self, d);
    detail::init_ln(layer.self_ln, d);
    detail::init_attention(layer.cross, d);
    detail::init_ln(layer.cross_ln, d);
    detail::init_ffn(layer.ffn, d, config.ffn_dim);
    detail::init_ln(layer.ffn_ln, d);
  }
  w.out_w = Matrix<Real>(config.vocab_size_tgt, d);
  w.out_b.assign(config.vocab_size_tgt, Real{0});
  return w;
}

/// Rows of a d×d projection belonging to head h (the W_V^h block, d_h×d).
template <class Real>
Matrix<Real> head_rows(const Matrix<Real>& w, std::size_t h, std::size_t head_dim) {
  Matrix<Real> out(head_dim, w.cols());
  for (std::size_t r = 0; r < head_dim; ++r)
    for (std::size_t c = 0; c < w.cols(); ++c) out(r, c) = w(h * head_dim + r, c);
  return out;
}

/// Columns of the output projection belonging to head h (W_O^h, d×d_h).
template <class Real>
Matrix<Real> head_cols(const Matrix<Real>& w, std::size_t h, std::size_t head_dim) {
  Matrix<Real> out(w.rows(), head_dim);
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = 0; c < head_dim; ++c) out(r, c) = w(r, h * head_dim + c);
  return out;
}

/// Portable uniform stream: mt19937_64 is bit-specified by the standard,
/// the library's real distributions are not.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}
  double next(double lo, double hi) {
    const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
  }

 private:
  std::mt19937_64 engine_;
};

/// Randomly initialised model, deterministic in (config, seed).
template <class Real>
TransformerWeights<Real> random_weights(const ModelConfig& config, std::uint64_t seed) {
  TransformerWeights<Real> w = make_weights<Real>(config);
  UniformStream rng(seed);
  const double d = static_cast<double>(config.model_dim);
  for_each_tensor(w, [&](const std::string& name, const Shape& shape, std::span<Real> data) {
    const bool is_gamma = name.ends_with("gamma");
    const bool is_bias = shape.size() == 1 && !is_gamma;
    const bool is_table = name.ends_with("embed") || name.ends_with("pos");
    double scale = 0.1;
    if (is_table)
      scale = 1.0 / std::sqrt(d);
    else if (!is_bias && !is_gamma)
      scale = 1.0 / std::sqrt(static_cast<double>(shape[1]));
    for (Real& v : data) {
      const double u = rng.next(-1.0, 1.0);
      v = static_cast<Real>(is_gamma ? 1.0 + 0.2 * u : scale * u);
    }
  });
  return w;
}

}  // namespace alti

#endif  // ALTI_WEIGHTS_HPP
