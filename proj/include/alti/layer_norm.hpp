// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#ifndef ALTI_LAYER_NORM_HPP
#define ALTI_LAYER_NORM_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "alti/weights.hpp"

namespace alti {

/// Statistics of one normalised vector. sigma = sqrt(population variance + eps).
struct LayerNormStats {
  double mean = 0.0;
  double sigma = 1.0;
};

template <class Real>
LayerNormStats layer_norm_stats(std::span<const Real> x, double eps) {
  if (x.empty()) throw std::invalid_argument("layer_norm: empty input");
  double mean = 0.0;
  for (Real v : x) mean += static_cast<double>(v);
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (Real v : x) {
    const double c = static_cast<double>(v) - mean;
    var += c * c;
  }
  var /= static_cast<double>(x.size());
  const double sigma = std::sqrt(var + eps);
  if (!(sigma > 0.0)) throw std::invalid_argument("layer_norm: zero standard deviation with eps = 0");
  return {mean, sigma};
}

/// Normalises x with precomputed statistics.
template <class Real>
void layer_norm_apply(std::span<const Real> x, std::span<const Real> gamma, std::span<const Real> beta,
                      const LayerNormStats& stats, std::span<Real> out) {
  for (std::size_t k = 0; k < x.size(); ++k)
    out[k] = static_cast<Real>((static_cast<double>(x[k]) - stats.mean) / stats.sigma * static_cast<double>(gamma[k]) +
                               static_cast<double>(beta[k]));
}

template <class Real>
std::vector<Real> layer_norm(std::span<const Real> x, std::span<const Real> gamma, std::span<const Real> beta,
                             double eps) {
  if (gamma.size() != x.size() || beta.size() != x.size())
    throw std::invalid_argument("layer_norm: length mismatch");
  const LayerNormStats stats = layer_norm_stats(x, eps);
  std::vector<Real> out(x.size());
  layer_norm_apply(x, gamma, beta, stats, std::span<Real>(out));
  return out;
}

/// The linear part of LN for one component of a sum:
/// L(u) = gamma ⊙ (u - mean(u)) / sigma, with sigma taken from the full sum.
template <class In, class Real>
std::vector<Real> ln_linear_part(std::span<const In> u, std::span<const Real> gamma, double sigma) {
  double mean = 0.0;
  for (In v : u) mean += static_cast<double>(v);
  mean /= static_cast<double>(u.size());
  std::vector<Real> out(u.size());
  for (std::size_t k = 0; k < u.size(); ++k)
    out[k] = static_cast<Real>(static_cast<double>(gamma[k]) * (static_cast<double>(u[k]) - mean) / sigma);
  return out;
}

template <class Real>
struct LinearizedNorm {
  std::vector<std::vector<Real>> parts;  // L(u_j)
  std::vector<Real> bias;                // beta
};

/// Splits LN(Σ_j u_j) into Σ_j L(u_j) + beta, computing sigma from the sum.
template <class Real>
LinearizedNorm<Real> ln_linearize(const std::vector<std::vector<Real>>& components, std::span<const Real> gamma,
                                  std::span<const Real> beta, double eps) {
  if (components.empty()) throw std::invalid_argument("ln_linearize: no components");
  const std::size_t d = gamma.size();
  if (beta.size() != d) throw std::invalid_argument("ln_linearize: gamma/beta length mismatch");
  std::vector<double> acc(d, 0.0);
  for (const auto& u : components) {
    if (u.size() != d) throw std::invalid_argument("ln_linearize: component length mismatch");
    for (std::size_t k = 0; k < d; ++k) acc[k] += static_cast<double>(u[k]);
  }
  const LayerNormStats stats = layer_norm_stats(std::span<const double>(acc), eps);
  LinearizedNorm<Real> out;
  out.parts.reserve(components.size());
  for (const auto& u : components) out.parts.push_back(ln_linear_part(std::span<const Real>(u), gamma, stats.sigma));
  out.bias.assign(beta.begin(), beta.end());
  return out;
}

}  // namespace alti

#endif  // ALTI_LAYER_NORM_HPP
