// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#ifndef ALTI_EVAL_HALLUCINATION_HPP
#define ALTI_EVAL_HALLUCINATION_HPP

#include <algorithm>
#include <iterator>
#include <stdexcept>
#include <vector>

#include "alti/eval/bleu.hpp"
#include "alti/model.hpp"

namespace alti::eval {

struct HallucinationThresholds {
  double min_original_bleu = 20.0;
  double max_perturbed_bleu = 3.0;
};

struct HallucinationVerdict {
  double original_bleu = 0.0;
  double perturbed_bleu = 0.0;
  bool is_hallucination = false;
  HallucinationThresholds thresholds;
};

/// Hallucination iff the clean translation is good enough and the
/// perturbed one collapses.
inline HallucinationVerdict hallucination_verdict(double original_bleu, double perturbed_bleu,
                                                  const HallucinationThresholds& thresholds = {}) {
  return {original_bleu, perturbed_bleu,
          original_bleu >= thresholds.min_original_bleu && perturbed_bleu <= thresholds.max_perturbed_bleu,
          thresholds};
}

struct HallucinationProbe {
  TokenSequence original;   // free greedy output
  TokenSequence perturbed;  // greedy output after the forced <unk>, which is not included
  HallucinationVerdict verdict;
};

/// Token ids with every </s> removed, the unit BLEU is computed on.
inline std::vector<TokenId> strip_eos(const std::vector<TokenId>& ids, TokenId eos) {
  std::vector<TokenId> out;
  std::copy_if(ids.begin(), ids.end(), std::back_inserter(out), [eos](TokenId t) { return t != eos; });
  return out;
}

/// Decodes the source twice, the second time with <unk> forced right after
/// the initial </s> of the prefix, scores both against the reference and
/// applies the threshold rule.
template <class Real>
HallucinationProbe detect_hallucination(const TransformerWeights<Real>& weights, const TokenSequence& source,
                                        const std::vector<TokenId>& reference, std::size_t max_len,
                                        const HallucinationThresholds& thresholds = {}) {
  const ModelConfig& config = weights.config;
  if (!config.unk_id) throw std::invalid_argument("detect_hallucination: model has no unknown-token id");
  const auto ref = strip_eos(reference, config.eos_id);
  if (ref.empty()) throw std::invalid_argument("detect_hallucination: empty reference");
  HallucinationProbe probe;
  probe.original = greedy_decode(weights, source, DecodeOptions{max_len, {}});
  probe.perturbed = greedy_decode(weights, source, DecodeOptions{max_len, {*config.unk_id}});
  probe.verdict = hallucination_verdict(sentence_bleu(strip_eos(probe.original.ids, config.eos_id), ref),
                                        sentence_bleu(strip_eos(probe.perturbed.ids, config.eos_id), ref), thresholds);
  return probe;
}

}  // namespace alti::eval

#endif  // ALTI_EVAL_HALLUCINATION_HPP
