// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#ifndef ALTI_CONTRIBUTIONS_HPP
#define ALTI_CONTRIBUTIONS_HPP

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "alti/decomposition.hpp"
#include "alti/model.hpp"
#include "alti/tensor.hpp"

namespace alti {

struct ContributionRow {
  std::vector<double> values;
  std::vector<double> distances;  // d_j = ‖output - T_j‖_1
  // Every raw score clipped to zero; values fell back to uniform over the
  // nonzero contributors.
  bool degenerate = false;
};

/// Row-stochastic matrix of token-to-token contributions for one block.
/// Rows are output positions, columns input positions.
struct ContributionMatrix {
  Site site = Site::encoder_self;
  std::size_t layer = 0;
  Matrix<double> values;
  Matrix<double> distances;  // optional, empty unless computed from distances
  std::vector<std::size_t> degenerate_rows;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
};

/// Normalises non-negative scores into a distribution. An all-zero row
/// becomes uniform and is flagged.
inline bool normalize_scores(std::vector<double>& scores) {
  double total = 0.0;
  for (double s : scores) total += s;
  if (total > 0.0) {
    for (double& s : scores) s /= total;
    return false;
  }
  std::fill(scores.begin(), scores.end(), 1.0 / static_cast<double>(scores.size()));
  return true;
}

/// c_j = max(0, ‖y‖_1 - ‖y - T_j‖_1) / Σ_k max(0, ‖y‖_1 - ‖y - T_k‖_1).
/// A contributor with T_j == 0 gets exactly 0: its distance equals ‖y‖_1
/// bit-for-bit (see l1_distance).
template <class Real>
ContributionRow contributions_from_vectors(std::span<const Real> output,
                                           const std::vector<std::vector<Real>>& transformed) {
  if (transformed.empty()) throw std::invalid_argument("contributions: no contributors");
  ContributionRow row;
  const double norm = l1_norm(output);
  row.distances.reserve(transformed.size());
  row.values.reserve(transformed.size());
  for (const auto& t : transformed) {
    if (t.size() != output.size()) throw std::invalid_argument("contributions: vector length mismatch");
    const double dist = l1_distance(output, std::span<const Real>(t));
    row.distances.push_back(dist);
    row.values.push_back(std::max(0.0, -dist + norm));
  }
  row.degenerate = normalize_scores(row.values);
  if (row.degenerate) {
    // Uniform over the contributors that carry anything at all; a zero
    // vector keeps its exact 0 even here.
    std::vector<double> live(transformed.size(), 0.0);
    for (std::size_t j = 0; j < transformed.size(); ++j)
      live[j] = l1_norm(std::span<const Real>(transformed[j])) > 0.0 ? 1.0 : 0.0;
    normalize_scores(live);
    row.values = std::move(live);
  }
  return row;
}

template <class Real>
ContributionRow contributions_from_transformed(const TransformedVectorSet<Real>& set) {
  return contributions_from_vectors(std::span<const Real>(set.block_output), set.transformed);
}

namespace detail {

template <class Real>
ContributionMatrix site_matrix(const TransformerWeights<Real>& weights, const ForwardTrace<Real>& trace, Site site,
                               std::size_t layer, std::size_t cols) {
  const LayerDecomposer<Real> dec(weights, trace, site, layer);
  ContributionMatrix m;
  m.site = site;
  m.layer = layer;
  m.values = Matrix<double>(dec.positions(), cols);
  m.distances = Matrix<double>(dec.positions(), cols);
  for (std::size_t p = 0; p < dec.positions(); ++p) {
    const ContributionRow row = contributions_from_transformed(dec.at(p));
    for (std::size_t j = 0; j < row.values.size(); ++j) {
      m.values(p, j) = row.values[j];
      m.distances(p, j) = row.distances[j];
    }
    if (row.degenerate) m.degenerate_rows.push_back(p);
  }
  return m;
}

}  // namespace detail

/// J×J contributions of encoder layer `layer` (0-based).
template <class Real>
ContributionMatrix encoder_layer_matrix(const TransformerWeights<Real>& weights, const ForwardTrace<Real>& trace,
                                        std::size_t layer) {
  return detail::site_matrix(weights, trace, Site::encoder_self, layer, trace.source_length());
}

/// Contributions of one decoder layer, split by origin.
struct DecoderLayerContributions {
  std::size_t layer = 0;
  Matrix<double> cross_part;          // T×J, C_{ỹ←e}
  std::vector<double> residual_part;  // T,   C_{ỹ←ỹ^s}
  Matrix<double> self_part;           // T×T, C_{ỹ^s←y<t}, lower triangular
  Matrix<double> combined;            // T×(J+T), [cross ; residual ⊙ self]
  std::vector<std::size_t> degenerate_cross_rows;
  std::vector<std::size_t> degenerate_self_rows;

  std::size_t steps() const { return cross_part.rows(); }
  std::size_t source_length() const { return cross_part.cols(); }

  /// C_{ỹ←y<t}: the self part with row t scaled by residual_part[t].
  Matrix<double> target_block() const {
    Matrix<double> out(steps(), steps());
    for (std::size_t t = 0; t < steps(); ++t)
      for (std::size_t k = 0; k < steps(); ++k) out(t, k) = combined(t, source_length() + k);
    return out;
  }
};

/// Builds the full decoder layer matrix by substituting each residual
/// contribution with the self-attention row it stands for.
inline DecoderLayerContributions assemble_decoder_layer(std::size_t layer, Matrix<double> cross_part,
                                                        std::vector<double> residual_part, Matrix<double> self_part) {
  const std::size_t steps = cross_part.rows(), j = cross_part.cols();
  if (residual_part.size() != steps || self_part.rows() != steps || self_part.cols() != steps)
    throw std::invalid_argument("assemble_decoder_layer: shape mismatch");
  DecoderLayerContributions out;
  out.layer = layer;
  out.combined = Matrix<double>(steps, j + steps);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t c = 0; c < j; ++c) out.combined(t, c) = cross_part(t, c);
    for (std::size_t k = 0; k < steps; ++k) out.combined(t, j + k) = residual_part[t] * self_part(t, k);
  }
  out.cross_part = std::move(cross_part);
  out.residual_part = std::move(residual_part);
  out.self_part = std::move(self_part);
  return out;
}

template <class Real>
DecoderLayerContributions decoder_layer_matrices(const TransformerWeights<Real>& weights,
                                                 const ForwardTrace<Real>& trace, std::size_t layer) {
  const std::size_t steps = trace.prefix_length(), j = trace.source_length();
  ContributionMatrix self = detail::site_matrix(weights, trace, Site::decoder_self, layer, steps);
  // J encoder columns plus the residual in column J.
  ContributionMatrix cross = detail::site_matrix(weights, trace, Site::decoder_cross, layer, j + 1);
  Matrix<double> cross_part(steps, j);
  std::vector<double> residual(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t c = 0; c < j; ++c) cross_part(t, c) = cross.values(t, c);
    residual[t] = cross.values(t, j);
  }
  DecoderLayerContributions out =
      assemble_decoder_layer(layer, std::move(cross_part), std::move(residual), std::move(self.values));
  out.degenerate_cross_rows = std::move(cross.degenerate_rows);
  out.degenerate_self_rows = std::move(self.degenerate_rows);
  return out;
}

namespace detail {

template <class Real>
const AttentionTrace<Real>& block_at(const ForwardTrace<Real>& trace, std::size_t layer, Site site) {
  if (site == Site::encoder_self) {
    check_index(layer, trace.encoder.layers.size(), "encoder layer");
    return trace.encoder.layers[layer].self;
  }
  check_index(layer, trace.decoder.size(), "decoder layer");
  return site == Site::decoder_self ? trace.decoder[layer].self : trace.decoder[layer].cross;
}

}  // namespace detail

/// Raw attention weights averaged over heads.
template <class Real>
ContributionMatrix attention_matrix_baseline(const ForwardTrace<Real>& trace, std::size_t layer, Site site) {
  const AttentionTrace<Real>& block = detail::block_at(trace, layer, site);
  const auto& heads = block.weights;
  ContributionMatrix m;
  m.site = site;
  m.layer = layer;
  m.values = Matrix<double>(heads.front().rows(), heads.front().cols());
  for (std::size_t i = 0; i < m.values.rows(); ++i)
    for (std::size_t j = 0; j < m.values.cols(); ++j) {
      double acc = 0.0;
      for (const auto& h : heads) acc += static_cast<double>(h(i, j));
      m.values(i, j) = acc / static_cast<double>(heads.size());
    }
  return m;
}

struct NormBaselines {
  ContributionMatrix f_norm;  // ‖F_i(x_j)‖_2
  ContributionMatrix t_norm;  // ‖T_i(x_j)‖_2
};

/// Vector-norm attributions over token contributors. At the cross site only
/// the J encoder columns are kept; rows are normalised to sum to 1.
template <class Real>
NormBaselines vector_norm_baselines(const TransformerWeights<Real>& weights, const ForwardTrace<Real>& trace,
                                    std::size_t layer, Site site) {
  const LayerDecomposer<Real> dec(weights, trace, site, layer);
  const std::size_t cols = site == Site::encoder_self ? trace.source_length()
                           : site == Site::decoder_self ? trace.prefix_length()
                                                        : trace.source_length();
  NormBaselines out;
  for (ContributionMatrix* m : {&out.f_norm, &out.t_norm}) {
    m->site = site;
    m->layer = layer;
    m->values = Matrix<double>(dec.positions(), cols);
  }
  for (std::size_t p = 0; p < dec.positions(); ++p) {
    const auto set = dec.at(p);
    const std::size_t n = set.attention_terms.size();
    std::vector<double> f(n), t(n);
    for (std::size_t j = 0; j < n; ++j) {
      f[j] = l2_norm(std::span<const Real>(set.attention_terms[j]));
      t[j] = l2_norm(std::span<const Real>(set.transformed[j]));
    }
    if (normalize_scores(f)) out.f_norm.degenerate_rows.push_back(p);
    if (normalize_scores(t)) out.t_norm.degenerate_rows.push_back(p);
    for (std::size_t j = 0; j < n; ++j) {
      out.f_norm.values(p, j) = f[j];
      out.t_norm.values(p, j) = t[j];
    }
  }
  return out;
}

}  // namespace alti

#endif  // ALTI_CONTRIBUTIONS_HPP
