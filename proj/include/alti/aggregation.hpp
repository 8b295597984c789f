// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#ifndef ALTI_AGGREGATION_HPP
#define ALTI_AGGREGATION_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "alti/contributions.hpp"
#include "alti/tensor.hpp"

namespace alti {

/// C^L · C^{L-1} · … · C^1, accumulated from the left one layer at a time.
/// layers[0] is the first encoder layer.
inline Matrix<double> encoder_rollout(std::span<const Matrix<double>> layers) {
  if (layers.empty()) throw std::invalid_argument("encoder_rollout: no layers");
  Matrix<double> acc = layers.front();
  if (acc.rows() != acc.cols()) throw std::invalid_argument("encoder_rollout: layer matrices must be square");
  for (std::size_t l = 1; l < layers.size(); ++l) {
    if (layers[l].rows() != acc.rows() || layers[l].cols() != acc.cols())
      throw std::invalid_argument("encoder_rollout: shape mismatch at layer " + std::to_string(l));
    acc = matmul(layers[l], acc);
  }
  return acc;
}

inline Matrix<double> encoder_rollout(std::span<const ContributionMatrix> layers) {
  std::vector<Matrix<double>> values;
  values.reserve(layers.size());
  for (const auto& m : layers) values.push_back(m.values);
  return encoder_rollout(std::span<const Matrix<double>>(values));
}

struct SourceRelevance {
  Matrix<double> relevance;                         // R^L, T×J
  std::vector<Matrix<double>> per_layer;            // R^l
  std::vector<Matrix<double>> cross_through_encoder;  // C*^l = C^l_{ỹ←e} · C^enc
};

/// Source relevance of every prediction:
///   C*^l = C^l_{ỹ←e} · C^enc      for l = 1..L
///   R^1  = C*^1
///   R^l  = C^l_{ỹ←y<t} · R^{l-1} + C*^l   for l = 2..L
inline SourceRelevance source_relevance(const Matrix<double>& encoder_contributions,
                                        std::span<const DecoderLayerContributions> layers) {
  if (layers.empty()) throw std::invalid_argument("source_relevance: no decoder layers");
  SourceRelevance out;
  for (const auto& layer : layers) {
    if (layer.cross_part.cols() != encoder_contributions.rows())
      throw std::invalid_argument("source_relevance: cross part has " + std::to_string(layer.cross_part.cols()) +
                                  " columns, encoder has " + std::to_string(encoder_contributions.rows()) + " rows");
    if (layer.steps() != layers.front().steps()) throw std::invalid_argument("source_relevance: step count mismatch");
    out.cross_through_encoder.push_back(matmul(layer.cross_part, encoder_contributions));
  }
  out.per_layer.push_back(out.cross_through_encoder.front());
  for (std::size_t l = 1; l < layers.size(); ++l)
    out.per_layer.push_back(add(matmul(layers[l].target_block(), out.per_layer.back()), out.cross_through_encoder[l]));
  out.relevance = out.per_layer.back();
  return out;
}

/// C^L_{ỹ←y<t} · … · C^1_{ỹ←y<t}.
inline Matrix<double> target_relevance(std::span<const DecoderLayerContributions> layers) {
  if (layers.empty()) throw std::invalid_argument("target_relevance: no decoder layers");
  Matrix<double> acc = layers.front().target_block();
  for (std::size_t l = 1; l < layers.size(); ++l) {
    if (layers[l].steps() != acc.rows()) throw std::invalid_argument("target_relevance: step count mismatch");
    acc = matmul(layers[l].target_block(), acc);
  }
  return acc;
}

/// Input attributions for every predicted token of one sentence pair.
/// Row t scores the prediction made at prefix row t (i.e. y_{t+1});
/// target_relevance columns index the prefix tokens y_0..y_{T-1}.
struct RelevanceResult {
  std::vector<TokenId> source_tokens;
  std::vector<TokenId> prefix_tokens;
  Matrix<double> source_relevance;  // T×J
  Matrix<double> target_relevance;  // T×T
  std::vector<Matrix<double>> per_layer_source;
  std::vector<Matrix<double>> cross_through_encoder;
  Matrix<double> encoder_rollout;  // J×J
  std::vector<ContributionMatrix> encoder_layers;
  std::vector<DecoderLayerContributions> decoder_layers;
};

/// Runs the whole attribution pipeline on a forward trace.
template <class Real>
RelevanceResult compute_relevance(const TransformerWeights<Real>& weights, const ForwardTrace<Real>& trace) {
  RelevanceResult r;
  r.source_tokens = trace.encoder.source;
  r.prefix_tokens = trace.prefix;
  for (std::size_t l = 0; l < trace.encoder.layers.size(); ++l)
    r.encoder_layers.push_back(encoder_layer_matrix(weights, trace, l));
  r.encoder_rollout = encoder_rollout(std::span<const ContributionMatrix>(r.encoder_layers));
  for (std::size_t l = 0; l < trace.decoder.size(); ++l)
    r.decoder_layers.push_back(decoder_layer_matrices(weights, trace, l));
  SourceRelevance src =
      source_relevance(r.encoder_rollout, std::span<const DecoderLayerContributions>(r.decoder_layers));
  r.source_relevance = std::move(src.relevance);
  r.per_layer_source = std::move(src.per_layer);
  r.cross_through_encoder = std::move(src.cross_through_encoder);
  r.target_relevance = target_relevance(std::span<const DecoderLayerContributions>(r.decoder_layers));
  return r;
}

struct SourceContribution {
  std::vector<double> per_step;
  double mean = 0.0;
};

/// Σ_j source_relevance[t][j] per step and its mean over steps.
inline SourceContribution total_source_contribution(const Matrix<double>& source_relevance) {
  SourceContribution out;
  out.per_step.resize(source_relevance.rows(), 0.0);
  for (std::size_t t = 0; t < source_relevance.rows(); ++t)
    for (double v : source_relevance.row(t)) out.per_step[t] += v;
  for (double v : out.per_step) out.mean += v;
  if (!out.per_step.empty()) out.mean /= static_cast<double>(out.per_step.size());
  return out;
}

inline SourceContribution total_source_contribution(const RelevanceResult& result) {
  return total_source_contribution(result.source_relevance);
}

struct DiagonalShare {
  std::vector<double> diagonal;
  double mean = 0.0;
  double stddev = 0.0;  // population
};

/// Share of each encoder representation coming from the input token at the
/// same position, after rolling out layers 1..up_to_layer.
inline DiagonalShare encoder_diagonal_share(std::span<const Matrix<double>> layers, std::size_t up_to_layer) {
  if (up_to_layer == 0 || up_to_layer > layers.size())
    throw std::out_of_range("encoder_diagonal_share: up_to_layer " + std::to_string(up_to_layer) +
                            " outside 1.." + std::to_string(layers.size()));
  const Matrix<double> rolled = encoder_rollout(layers.first(up_to_layer));
  DiagonalShare out;
  for (std::size_t i = 0; i < rolled.rows(); ++i) out.diagonal.push_back(rolled(i, i));
  for (double v : out.diagonal) out.mean += v;
  out.mean /= static_cast<double>(out.diagonal.size());
  for (double v : out.diagonal) out.stddev += (v - out.mean) * (v - out.mean);
  out.stddev = std::sqrt(out.stddev / static_cast<double>(out.diagonal.size()));
  return out;
}

inline DiagonalShare encoder_diagonal_share(std::span<const ContributionMatrix> layers, std::size_t up_to_layer) {
  std::vector<Matrix<double>> values;
  for (const auto& m : layers) values.push_back(m.values);
  return encoder_diagonal_share(std::span<const Matrix<double>>(values), up_to_layer);
}

}  // namespace alti

#endif  // ALTI_AGGREGATION_HPP
