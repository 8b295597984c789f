// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#ifndef ALTI_TESTS_SUPPORT_HPP
#define ALTI_TESTS_SUPPORT_HPP

// Test fixtures and independent oracles. Nothing in here calls into the
// forward, decomposition or rollout code it is used to check.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "alti/alti.hpp"

namespace alti::test {

inline ModelConfig toy_config(std::size_t enc_layers, std::size_t dec_layers, std::size_t heads, std::size_t dim,
                              std::size_t vocab = 12) {
  ModelConfig c;
  c.num_encoder_layers = enc_layers;
  c.num_decoder_layers = dec_layers;
  c.num_heads = heads;
  c.model_dim = dim;
  c.ffn_dim = 2 * dim;
  c.vocab_size_src = vocab;
  c.vocab_size_tgt = vocab + 2;
  c.max_positions = 32;
  c.ln_epsilon = 1e-5;
  c.eos_id = 2;
  c.unk_id = 3;
  return c;
}

inline TokenSequence make_source(std::vector<TokenId> ids) { return {std::move(ids), SequenceRole::source, {}}; }
inline TokenSequence make_prefix(std::vector<TokenId> ids) {
  return {std::move(ids), SequenceRole::target_prefix, {}};
}

/// Random source of length j (ending in </s>) and prefix of length t
/// (starting with </s>), drawn from non-special ids.
struct RandomPair {
  TokenSequence source, prefix;
};

inline RandomPair random_pair(const ModelConfig& c, std::size_t j, std::size_t t, std::uint64_t seed) {
  UniformStream rng(seed);
  auto draw = [&](std::size_t vocab) {
    return static_cast<TokenId>(4 + static_cast<std::size_t>(rng.next(0.0, 1.0) * static_cast<double>(vocab - 4)));
  };
  RandomPair p{make_source({}), make_prefix({c.eos_id})};
  for (std::size_t k = 0; k + 1 < j; ++k) p.source.ids.push_back(draw(c.vocab_size_src));
  p.source.ids.push_back(c.eos_id);
  for (std::size_t k = 1; k < t; ++k) p.prefix.ids.push_back(draw(c.vocab_size_tgt));
  return p;
}

inline Matrix<double> random_stochastic(std::size_t rows, std::size_t cols, UniformStream& rng,
                                        bool lower_triangular = false) {
  Matrix<double> m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    const std::size_t limit = lower_triangular ? std::min(cols, r + 1) : cols;
    for (std::size_t c = 0; c < limit; ++c) total += m(r, c) = rng.next(0.01, 1.0);
    for (std::size_t c = 0; c < limit; ++c) m(r, c) /= total;
  }
  return m;
}

inline double row_sum(const Matrix<double>& m, std::size_t r) {
  double s = 0.0;
  for (double v : m.row(r)) s += v;
  return s;
}

// ---------------------------------------------------------------------------
// Straight-line reference forward pass, double precision, written directly
// from the block equations with explicit per-head slicing.

using Vec = std::vector<double>;

template <class Real>
Vec ref_linear(const Matrix<Real>& w, const std::vector<Real>& b, const Vec& x) {
  Vec y(w.rows());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    double s = b[r];
    for (std::size_t c = 0; c < w.cols(); ++c) s += double(w(r, c)) * x[c];
    y[r] = s;
  }
  return y;
}

template <class Real>
Vec ref_layer_norm(const Vec& x, const LayerNormWeights<Real>& ln, double eps) {
  double mu = 0;
  for (double v : x) mu += v;
  mu /= double(x.size());
  double var = 0;
  for (double v : x) var += (v - mu) * (v - mu);
  var /= double(x.size());
  Vec y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = (x[k] - mu) / std::sqrt(var + eps) * double(ln.gamma[k]) + double(ln.beta[k]);
  return y;
}

template <class Real>
std::vector<Vec> ref_attention(const AttentionWeights<Real>& w, const LayerNormWeights<Real>& ln,
                               const std::vector<Vec>& queries, const std::vector<Vec>& keys, bool causal,
                               const ModelConfig& c) {
  const std::size_t dh = c.model_dim / c.num_heads;
  std::vector<Vec> out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    Vec mha(c.model_dim, 0.0);
    for (std::size_t h = 0; h < c.num_heads; ++h) {
      const Matrix<Real> wq = head_rows(w.wq, h, dh), wk = head_rows(w.wk, h, dh), wv = head_rows(w.wv, h, dh);
      const std::vector<Real> bq(w.bq.begin() + h * dh, w.bq.begin() + (h + 1) * dh);
      const std::vector<Real> bk(w.bk.begin() + h * dh, w.bk.begin() + (h + 1) * dh);
      const std::vector<Real> bv(w.bv.begin() + h * dh, w.bv.begin() + (h + 1) * dh);
      const Vec q = ref_linear(wq, bq, queries[i]);
      const std::size_t n = causal ? i + 1 : keys.size();
      Vec score(n);
      for (std::size_t j = 0; j < n; ++j) {
        const Vec k = ref_linear(wk, bk, keys[j]);
        double s = 0;
        for (std::size_t a = 0; a < dh; ++a) s += q[a] * k[a];
        score[j] = s / std::sqrt(double(dh));
      }
      double mx = score[0];
      for (double s : score) mx = std::max(mx, s);
      double z = 0;
      for (double& s : score) z += (s = std::exp(s - mx));
      Vec head(dh, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const Vec v = ref_linear(wv, bv, keys[j]);
        for (std::size_t a = 0; a < dh; ++a) head[a] += score[j] / z * v[a];
      }
      const Matrix<Real> wo = head_cols(w.wo, h, dh);
      for (std::size_t r = 0; r < c.model_dim; ++r)
        for (std::size_t a = 0; a < dh; ++a) mha[r] += double(wo(r, a)) * head[a];
    }
    for (std::size_t r = 0; r < c.model_dim; ++r) mha[r] += double(w.bo[r]) + queries[i][r];
    out.push_back(ref_layer_norm(mha, ln, c.ln_epsilon));
  }
  return out;
}

template <class Real>
std::vector<Vec> ref_ffn(const FeedForwardWeights<Real>& w, const LayerNormWeights<Real>& ln,
                         const std::vector<Vec>& xs, const ModelConfig& c) {
  std::vector<Vec> out;
  for (const Vec& x : xs) {
    Vec h = ref_linear(w.w1, w.b1, x);
    for (double& v : h) v = v > 0 ? v : 0;
    Vec y = ref_linear(w.w2, w.b2, h);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += x[k];
    out.push_back(ref_layer_norm(y, ln, c.ln_epsilon));
  }
  return out;
}

template <class Real>
std::vector<Vec> ref_embed(const Matrix<Real>& table, const Matrix<Real>& pos, const std::vector<TokenId>& ids,
                           const ModelConfig& c) {
  std::vector<Vec> out;
  for (std::size_t p = 0; p < ids.size(); ++p) {
    Vec e(c.model_dim);
    for (std::size_t k = 0; k < c.model_dim; ++k) {
      double pe;
      if (c.positional == Positional::learned) {
        pe = double(pos(p, k));
      } else {
        const double i2 = double(2 * (k / 2));
        const double angle = double(p) / std::pow(10000.0, i2 / double(c.model_dim));
        pe = (k % 2 == 0) ? std::sin(angle) : std::cos(angle);
      }
      e[k] = std::sqrt(double(c.model_dim)) * double(table(std::size_t(ids[p]), k)) + pe;
    }
    out.push_back(e);
  }
  return out;
}

/// Logits per prefix row.
template <class Real>
std::vector<Vec> reference_logits(const TransformerWeights<Real>& w, const std::vector<TokenId>& src,
                                  const std::vector<TokenId>& prefix) {
  const ModelConfig& c = w.config;
  std::vector<Vec> x = ref_embed(w.src_embed, w.src_pos, src, c);
  for (const auto& layer : w.encoder) x = ref_ffn(layer.ffn, layer.ffn_ln, ref_attention(layer.self, layer.self_ln, x, x, false, c), c);
  std::vector<Vec> y = ref_embed(w.tgt_embed, w.tgt_pos, prefix, c);
  for (const auto& layer : w.decoder) {
    auto s = ref_attention(layer.self, layer.self_ln, y, y, true, c);
    auto cr = ref_attention(layer.cross, layer.cross_ln, s, x, false, c);
    y = ref_ffn(layer.ffn, layer.ffn_ln, cr, c);
  }
  std::vector<Vec> logits;
  for (const Vec& v : y) logits.push_back(ref_linear(w.out_w, w.out_b, v));
  return logits;
}

/// F_i(x_j) = Σ_h W_O^h α^h_ij (W_V^h x_j + b_V^h), one head slice at a time.
template <class Real>
Vec per_head_attention_term(const AttentionWeights<Real>& w, const std::vector<Matrix<Real>>& alpha,
                            std::span<const Real> x_j, std::size_t i, std::size_t j, const ModelConfig& c) {
  const std::size_t dh = c.model_dim / c.num_heads;
  Vec f(c.model_dim, 0.0);
  Vec x(x_j.begin(), x_j.end());
  for (std::size_t h = 0; h < c.num_heads; ++h) {
    const Matrix<Real> wv = head_rows(w.wv, h, dh);
    const Matrix<Real> wo = head_cols(w.wo, h, dh);
    const std::vector<Real> bv(w.bv.begin() + h * dh, w.bv.begin() + (h + 1) * dh);
    const Vec v = ref_linear(wv, bv, x);
    for (std::size_t r = 0; r < c.model_dim; ++r)
      for (std::size_t a = 0; a < dh; ++a) f[r] += double(wo(r, a)) * double(alpha[h](i, j)) * v[a];
  }
  return f;
}

// ---------------------------------------------------------------------------
// Exhaustive path enumeration over the layered contribution graph.
//
// Nodes: encoder (level l, position i), level 0 being the source tokens;
// decoder (level l, row t), level 0 being the prefix tokens y_t. Encoder
// level l > 0 links to level l-1 through enc[l-1]; decoder level l links to
// the top encoder level through cross[l-1] and to decoder level l-1 through
// residual[l-1][t] * self[l-1](t, k).

struct LayeredGraph {
  std::vector<Matrix<double>> enc;
  std::vector<Matrix<double>> cross;
  std::vector<std::vector<double>> residual;
  std::vector<Matrix<double>> self;
};

struct PathTotals {
  Matrix<double> source;  // T×J
  Matrix<double> target;  // T×T
  Matrix<double> encoder;  // J×J, top encoder level to source tokens
};

namespace detail {

inline void walk_encoder(const LayeredGraph& g, std::size_t level, std::size_t i, double weight,
                         std::span<double> sink) {
  if (level == 0) {
    sink[i] += weight;
    return;
  }
  const Matrix<double>& m = g.enc[level - 1];
  for (std::size_t k = 0; k < m.cols(); ++k)
    if (m(i, k) != 0.0) walk_encoder(g, level - 1, k, weight * m(i, k), sink);
}

inline void walk_decoder(const LayeredGraph& g, std::size_t level, std::size_t t, double weight,
                         std::span<double> source_sink, std::span<double> target_sink) {
  if (level == 0) {
    target_sink[t] += weight;
    return;
  }
  const Matrix<double>& cross = g.cross[level - 1];
  for (std::size_t j = 0; j < cross.cols(); ++j)
    if (cross(t, j) != 0.0) walk_encoder(g, g.enc.size(), j, weight * cross(t, j), source_sink);
  const Matrix<double>& self = g.self[level - 1];
  for (std::size_t k = 0; k < self.cols(); ++k) {
    const double e = g.residual[level - 1][t] * self(t, k);
    if (e != 0.0) walk_decoder(g, level - 1, k, weight * e, source_sink, target_sink);
  }
}

}  // namespace detail

inline PathTotals enumerate_paths(const LayeredGraph& g) {
  const std::size_t j = g.enc.front().rows(), t = g.cross.front().rows();
  PathTotals out{Matrix<double>(t, j), Matrix<double>(t, t), Matrix<double>(j, j)};
  for (std::size_t i = 0; i < j; ++i) detail::walk_encoder(g, g.enc.size(), i, 1.0, out.encoder.row(i));
  for (std::size_t r = 0; r < t; ++r)
    detail::walk_decoder(g, g.cross.size(), r, 1.0, out.source.row(r), out.target.row(r));
  return out;
}

/// Random layered graph whose every node's outgoing weights sum to 1.
inline LayeredGraph random_graph(std::size_t enc_layers, std::size_t dec_layers, std::size_t j, std::size_t t,
                                 UniformStream& rng) {
  LayeredGraph g;
  for (std::size_t l = 0; l < enc_layers; ++l) g.enc.push_back(random_stochastic(j, j, rng));
  for (std::size_t l = 0; l < dec_layers; ++l) {
    // J+1 columns: the last one is the residual share.
    Matrix<double> full = random_stochastic(t, j + 1, rng);
    Matrix<double> cross(t, j);
    std::vector<double> res(t);
    for (std::size_t r = 0; r < t; ++r) {
      for (std::size_t c = 0; c < j; ++c) cross(r, c) = full(r, c);
      res[r] = full(r, j);
    }
    g.cross.push_back(cross);
    g.residual.push_back(res);
    g.self.push_back(random_stochastic(t, t, rng, true));
  }
  return g;
}

inline std::vector<DecoderLayerContributions> decoder_layers_of(const LayeredGraph& g) {
  std::vector<DecoderLayerContributions> out;
  for (std::size_t l = 0; l < g.cross.size(); ++l) out.push_back(assemble_decoder_layer(l, g.cross[l], g.residual[l], g.self[l]));
  return out;
}

inline double max_abs_diff(const Matrix<double>& a, const Matrix<double>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  return alti::max_abs_diff(a.flat(), b.flat());
}

}  // namespace alti::test

#endif  // ALTI_TESTS_SUPPORT_HPP
