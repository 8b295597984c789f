// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#ifndef ALTI_EVAL_EOS_HPP
#define ALTI_EVAL_EOS_HPP

#include <span>
#include <stdexcept>
#include <vector>

#include "alti/contributions.hpp"
#include "alti/eval/stats.hpp"
#include "alti/model.hpp"

namespace alti::eval {

/// One decoding step: head-averaged cross-attention on the source </s>
/// (last source position) and the residual share of the cross block.
struct EosResidualPoint {
  double eos_attention = 0.0;
  double residual = 0.0;
};

template <class Real>
std::vector<EosResidualPoint> eos_residual_points(const ForwardTrace<Real>& trace,
                                                  const DecoderLayerContributions& layer) {
  const ContributionMatrix attention = attention_matrix_baseline(trace, layer.layer, Site::decoder_cross);
  const std::size_t eos_col = attention.cols() - 1;
  std::vector<EosResidualPoint> out;
  for (std::size_t t = 0; t < attention.rows(); ++t) out.push_back({attention.values(t, eos_col), layer.residual_part[t]});
  return out;
}

inline double eos_residual_correlation(std::span<const EosResidualPoint> points) {
  if (points.size() < 2) throw std::invalid_argument("eos_residual_correlation: fewer than two points");
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    xs.push_back(p.eos_attention);
    ys.push_back(p.residual);
  }
  return pearson(xs, ys);
}

/// Pearson r between attention to </s> and the cross-attention residual
/// contribution over every decoding step of a corpus, for decoder layer
/// `layer` (0-based). Points are pooled in corpus order.
template <class Real>
double eos_residual_correlation(const TransformerWeights<Real>& weights, std::span<const ForwardTrace<Real>> traces,
                                std::size_t layer) {
  std::vector<EosResidualPoint> points;
  for (const auto& trace : traces) {
    const auto pts = eos_residual_points(trace, decoder_layer_matrices(weights, trace, layer));
    points.insert(points.end(), pts.begin(), pts.end());
  }
  return eos_residual_correlation(std::span<const EosResidualPoint>(points));
}

}  // namespace alti::eval

#endif  // ALTI_EVAL_EOS_HPP
