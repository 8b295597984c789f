// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#ifndef ALTI_EVAL_BLEU_HPP
#define ALTI_EVAL_BLEU_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace alti::eval {

struct NgramStats {
  std::vector<std::size_t> matched;  // clipped matches per order
  std::vector<std::size_t> total;    // hypothesis n-grams per order
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;
};

template <class Token>
NgramStats ngram_stats(std::span<const Token> hyp, std::span<const Token> ref, std::size_t max_order) {
  NgramStats s;
  s.hyp_length = hyp.size();
  s.ref_length = ref.size();
  s.matched.assign(max_order, 0);
  s.total.assign(max_order, 0);
  for (std::size_t n = 1; n <= max_order; ++n) {
    std::map<std::vector<Token>, std::size_t> ref_counts;
    for (std::size_t k = 0; k + n <= ref.size(); ++k) ++ref_counts[std::vector<Token>(ref.begin() + k, ref.begin() + k + n)];
    std::map<std::vector<Token>, std::size_t> hyp_counts;
    for (std::size_t k = 0; k + n <= hyp.size(); ++k) ++hyp_counts[std::vector<Token>(hyp.begin() + k, hyp.begin() + k + n)];
    for (const auto& [gram, count] : hyp_counts) {
      s.total[n - 1] += count;
      const auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) s.matched[n - 1] += std::min(count, it->second);
    }
  }
  return s;
}

/// Smoothed sentence BLEU on a 0-100 scale: unigram precision unsmoothed,
/// add-one on both counts for orders 2..max_order, geometric mean, brevity
/// penalty exp(1 - r/c) when c < r. An order with no hypothesis n-grams
/// (hypothesis shorter than n) counts as 0/1 before smoothing, i.e. 1/2.
template <class Token>
double sentence_bleu(std::span<const Token> hyp, std::span<const Token> ref, std::size_t max_order = 4) {
  if (ref.empty()) throw std::invalid_argument("sentence_bleu: empty reference");
  if (hyp.empty()) return 0.0;
  const NgramStats s = ngram_stats(hyp, ref, max_order);
  if (s.matched[0] == 0) return 0.0;
  double log_sum = std::log(static_cast<double>(s.matched[0]) / static_cast<double>(s.total[0]));
  for (std::size_t n = 1; n < max_order; ++n)
    log_sum += std::log((static_cast<double>(s.matched[n]) + 1.0) /
                        (static_cast<double>(std::max<std::size_t>(s.total[n], 1)) + 1.0));
  const double c = static_cast<double>(s.hyp_length), r = static_cast<double>(s.ref_length);
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return 100.0 * bp * std::exp(log_sum / static_cast<double>(max_order));
}

template <class Token>
double sentence_bleu(const std::vector<Token>& hyp, const std::vector<Token>& ref, std::size_t max_order = 4) {
  return sentence_bleu(std::span<const Token>(hyp), std::span<const Token>(ref), max_order);
}

}  // namespace alti::eval

#endif  // ALTI_EVAL_BLEU_HPP
