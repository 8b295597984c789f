// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#ifndef ALTI_DECOMPOSITION_HPP
#define ALTI_DECOMPOSITION_HPP

// Rewrites an attention block output LN(Σ_j F(x_j) + b_O + residual) as
// Σ_j T(x_j) + ε, where T(x_j) = L(F(x_j)) and the residual is folded into
// exactly one contributor. L is the linear part of LN with the sigma of the
// full sum taken from the trace, and ε = L(b_O) + β.
//
// F includes the value bias: Σ_j α_ij = 1, so attaching b_V to each value
// vector reproduces the forward pass exactly.

#include <stdexcept>
#include <string>
#include <vector>

#include "alti/layer_norm.hpp"
#include "alti/model.hpp"
#include "alti/tensor.hpp"
#include "alti/weights.hpp"

namespace alti {

enum class Site { encoder_self, decoder_self, decoder_cross };

inline const char* to_string(Site s) {
  switch (s) {
    case Site::encoder_self: return "encoder-self";
    case Site::decoder_self: return "decoder-self";
    case Site::decoder_cross: return "decoder-cross";
  }
  return "unknown";
}

template <class Real>
struct TransformedVectorSet {
  Site site = Site::encoder_self;
  std::size_t layer = 0;
  std::size_t position = 0;
  // F(x_j) per token contributor, before the residual and LN. At the cross
  // site this covers the J encoder outputs only.
  std::vector<std::vector<Real>> attention_terms;
  std::vector<std::vector<Real>> transformed;
  std::size_t residual_index = 0;
  std::vector<Real> epsilon;
  std::vector<Real> block_output;

  std::size_t contributors() const { return transformed.size(); }

  /// Σ_j T(x_j) + ε.
  std::vector<Real> reconstruction() const {
    std::vector<double> acc(epsilon.begin(), epsilon.end());
    for (const auto& t : transformed)
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += static_cast<double>(t[k]);
    return std::vector<Real>(acc.begin(), acc.end());
  }
};

/// W_O^h (W_V^h x_j + b_V^h) for every key token j and head h, in double.
struct HeadValueProjections {
  std::size_t heads = 0;
  std::vector<std::vector<double>> values;  // index j * heads + h

  const std::vector<double>& at(std::size_t j, std::size_t h) const { return values[j * heads + h]; }
  std::size_t tokens() const { return heads == 0 ? 0 : values.size() / heads; }
};

template <class Real>
HeadValueProjections project_head_values(const AttentionWeights<Real>& w, const Matrix<Real>& keys,
                                         const ModelConfig& config) {
  const std::size_t heads = config.num_heads, dh = config.head_dim(), d = config.model_dim;
  // Same routine as the forward pass, so v is bit-identical to what it used.
  const Matrix<Real> v = affine_rows(w.wv, std::span<const Real>(w.bv), keys);
  HeadValueProjections out;
  out.heads = heads;
  out.values.reserve(keys.rows() * heads);
  for (std::size_t j = 0; j < keys.rows(); ++j)
    for (std::size_t h = 0; h < heads; ++h) {
      std::vector<double> u(d, 0.0);
      for (std::size_t r = 0; r < d; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < dh; ++c)
          acc += static_cast<double>(w.wo(r, h * dh + c)) * static_cast<double>(v(j, h * dh + c));
        u[r] = acc;
      }
      out.values.push_back(std::move(u));
    }
  return out;
}

/// F_i(x_j) = Σ_h α^h_ij W_O^h v^h_j for contributors j < count.
template <class Real>
std::vector<std::vector<double>> attention_terms(const HeadValueProjections& proj,
                                                 const std::vector<Matrix<Real>>& alpha, std::size_t query,
                                                 std::size_t count) {
  std::vector<std::vector<double>> terms;
  terms.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    std::vector<double> f(proj.at(j, 0).size(), 0.0);
    for (std::size_t h = 0; h < proj.heads; ++h) {
      const double a = static_cast<double>(alpha[h](query, j));
      const auto& u = proj.at(j, h);
      for (std::size_t r = 0; r < f.size(); ++r) f[r] += a * u[r];
    }
    terms.push_back(std::move(f));
  }
  return terms;
}

template <class Real>
struct LinearizedBlock {
  std::vector<std::vector<Real>> transformed;
  std::vector<Real> epsilon;
};

/// Applies L to each term after adding `residual` to term `residual_index`
/// (or appending it as its own contributor when residual_index ==
/// terms.size()).
template <class Real>
LinearizedBlock<Real> linearize_block(std::vector<std::vector<double>> terms, std::span<const Real> residual,
                                      std::size_t residual_index, std::span<const Real> out_bias,
                                      const LayerNormWeights<Real>& ln, const LayerNormStats& stats) {
  if (residual_index > terms.size()) throw std::out_of_range("linearize_block: residual index out of range");
  std::vector<double> res(residual.begin(), residual.end());
  if (residual_index == terms.size())
    terms.push_back(std::move(res));
  else
    for (std::size_t k = 0; k < res.size(); ++k) terms[residual_index][k] += res[k];

  const std::span<const Real> gamma(ln.gamma);
  LinearizedBlock<Real> out;
  out.transformed.reserve(terms.size());
  for (const auto& t : terms) out.transformed.push_back(ln_linear_part(std::span<const double>(t), gamma, stats.sigma));
  out.epsilon = ln_linear_part(out_bias, gamma, stats.sigma);
  for (std::size_t k = 0; k < out.epsilon.size(); ++k)
    out.epsilon[k] = static_cast<Real>(static_cast<double>(out.epsilon[k]) + static_cast<double>(ln.beta[k]));
  return out;
}

namespace detail {

inline void check_index(std::size_t value, std::size_t bound, const char* what) {
  if (value >= bound)
    throw std::out_of_range(std::string(what) + " " + std::to_string(value) + " out of range (size " +
                            std::to_string(bound) + ")");
}

template <class Real>
TransformedVectorSet<Real> build_set(Site site, std::size_t layer, std::size_t position,
                                     const AttentionWeights<Real>& w, const LayerNormWeights<Real>& ln,
                                     const AttentionTrace<Real>& block, const HeadValueProjections& proj,
                                     std::size_t count, std::span<const Real> residual, std::size_t residual_index) {
  TransformedVectorSet<Real> set;
  set.site = site;
  set.layer = layer;
  set.position = position;
  auto terms = attention_terms(proj, block.weights, position, count);
  set.attention_terms.reserve(terms.size());
  for (const auto& t : terms) set.attention_terms.emplace_back(t.begin(), t.end());
  auto lin = linearize_block(std::move(terms), residual, residual_index, std::span<const Real>(w.bo), ln,
                             block.norm[position]);
  set.transformed = std::move(lin.transformed);
  set.epsilon = std::move(lin.epsilon);
  set.residual_index = residual_index;
  const auto out = block.output.row(position);
  set.block_output.assign(out.begin(), out.end());
  return set;
}

}  // namespace detail

/// Per-layer decomposition context; projections are computed once and
/// shared by every position of the layer.
template <class Real>
class LayerDecomposer {
 public:
  LayerDecomposer(const TransformerWeights<Real>& weights, const ForwardTrace<Real>& trace, Site site,
                  std::size_t layer)
      : weights_(weights), trace_(trace), site_(site), layer_(layer) {
    const ModelConfig& c = weights.config;
    if (site == Site::encoder_self) {
      detail::check_index(layer, trace.encoder.layers.size(), "encoder layer");
      proj_ = project_head_values(weights.encoder[layer].self, trace.encoder.layers[layer].input, c);
    } else if (site == Site::decoder_self) {
      detail::check_index(layer, trace.decoder.size(), "decoder layer");
      proj_ = project_head_values(weights.decoder[layer].self, trace.decoder[layer].input, c);
    } else {
      detail::check_index(layer, trace.decoder.size(), "decoder layer");
      proj_ = project_head_values(weights.decoder[layer].cross, trace.encoder.output, c);
    }
  }

  std::size_t positions() const {
    return site_ == Site::encoder_self ? trace_.source_length() : trace_.prefix_length();
  }

  TransformedVectorSet<Real> at(std::size_t position) const {
    detail::check_index(position, positions(), "position");
    if (site_ == Site::encoder_self) {
      const auto& w = weights_.encoder[layer_];
      const auto& lt = trace_.encoder.layers[layer_];
      return detail::build_set(site_, layer_, position, w.self, w.self_ln, lt.self, proj_, trace_.source_length(),
                               lt.input.row(position), position);
    }
    const auto& w = weights_.decoder[layer_];
    const auto& lt = trace_.decoder[layer_];
    if (site_ == Site::decoder_self)
      return detail::build_set(site_, layer_, position, w.self, w.self_ln, lt.self, proj_, position + 1,
                               lt.input.row(position), position);
    const std::size_t j = trace_.source_length();
    return detail::build_set(site_, layer_, position, w.cross, w.cross_ln, lt.cross, proj_, j,
                             lt.self.output.row(position), j);
  }

  std::vector<TransformedVectorSet<Real>> all() const {
    std::vector<TransformedVectorSet<Real>> out;
    out.reserve(positions());
    for (std::size_t p = 0; p < positions(); ++p) out.push_back(at(p));
    return out;
  }

 private:
  const TransformerWeights<Real>& weights_;
  const ForwardTrace<Real>& trace_;
  Site site_;
  std::size_t layer_;
  HeadValueProjections proj_;
};

/// T_i(x_j) for encoder layer `layer`, query position i; the residual x_i
/// rides on contributor i.
template <class Real>
TransformedVectorSet<Real> encoder_transformed_vectors(const TransformerWeights<Real>& weights,
                                                       const ForwardTrace<Real>& trace, std::size_t layer,
                                                       std::size_t i) {
  return LayerDecomposer<Real>(weights, trace, Site::encoder_self, layer).at(i);
}

/// Decoder self-attention at prefix row p (predicting y_{p+1}); contributors
/// y_0..y_p, residual on y_p.
template <class Real>
TransformedVectorSet<Real> decoder_self_transformed_vectors(const TransformerWeights<Real>& weights,
                                                            const ForwardTrace<Real>& trace, std::size_t layer,
                                                            std::size_t p) {
  return LayerDecomposer<Real>(weights, trace, Site::decoder_self, layer).at(p);
}

/// Cross-attention at prefix row p: J encoder contributors followed by the
/// residual ỹ^s_p as contributor J.
template <class Real>
TransformedVectorSet<Real> cross_transformed_vectors(const TransformerWeights<Real>& weights,
                                                     const ForwardTrace<Real>& trace, std::size_t layer,
                                                     std::size_t p) {
  return LayerDecomposer<Real>(weights, trace, Site::decoder_cross, layer).at(p);
}

}  // namespace alti

#endif  // ALTI_DECOMPOSITION_HPP
