// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#ifndef ALTI_EVAL_ALIGNMENT_HPP
#define ALTI_EVAL_ALIGNMENT_HPP

// Word alignments and Alignment Error Rate.
//
// Gold file format: one line per sentence, whitespace-separated links.
// "i-j" is a sure link and "i?j" a possible one, i the source word and j the
// target word, both 1-indexed. Sure links are also possible links. In memory
// indices are 0-based.

#include <algorithm>
#include <compare>
#include <istream>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "alti/parse_error.hpp"
#include "alti/tensor.hpp"

namespace alti::eval {

struct Link {
  int source = 0;
  int target = 0;
  auto operator<=>(const Link&) const = default;
};

using Alignment = std::set<Link>;

struct AlignmentSet {
  Alignment sure;
  Alignment possible;  // superset of sure
  std::size_t sentence_id = 0;

  /// Throws unless sure ⊆ possible and all indices fit the word counts.
  void validate(std::size_t source_words, std::size_t target_words) const {
    for (const Link& l : sure)
      if (!possible.contains(l)) throw std::invalid_argument("alignment: sure link missing from possible set");
    for (const Link& l : possible)
      if (l.source < 0 || l.target < 0 || static_cast<std::size_t>(l.source) >= source_words ||
          static_cast<std::size_t>(l.target) >= target_words)
        throw std::out_of_range("alignment: link " + std::to_string(l.source + 1) + "-" +
                                std::to_string(l.target + 1) + " outside sentence " + std::to_string(sentence_id + 1));
  }
};

namespace detail {

inline int parse_index(std::string_view text, std::size_t line, std::size_t column) {
  if (text.empty()) throw ParseError(line, column, "missing word index");
  long value = 0;
  for (std::size_t k = 0; k < text.size(); ++k) {
    if (text[k] < '0' || text[k] > '9')
      throw ParseError(line, column + k, std::string("unexpected character '") + text[k] + "'");
    value = value * 10 + (text[k] - '0');
    if (value > 1'000'000'000) throw ParseError(line, column, "word index too large");
  }
  if (value == 0) throw ParseError(line, column, "word indices are 1-based");
  return static_cast<int>(value - 1);
}

}  // namespace detail

inline AlignmentSet parse_alignment_line(std::string_view text, std::size_t line_no, std::size_t sentence_id = 0) {
  AlignmentSet out;
  out.sentence_id = sentence_id;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\r') {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < text.size() && text[end] != ' ' && text[end] != '\t' && text[end] != '\r') ++end;
    const std::string_view token = text.substr(pos, end - pos);
    const std::size_t sep = token.find_first_of("-?");
    if (sep == std::string_view::npos) throw ParseError(line_no, pos + 1, "link needs '-' or '?' separator");
    const Link link{detail::parse_index(token.substr(0, sep), line_no, pos + 1),
                    detail::parse_index(token.substr(sep + 1), line_no, pos + sep + 2)};
    if (token[sep] == '-') out.sure.insert(link);
    out.possible.insert(link);
    pos = end;
  }
  return out;
}

inline std::vector<AlignmentSet> read_alignments(std::istream& is) {
  std::vector<AlignmentSet> out;
  std::string line;
  while (std::getline(is, line)) out.push_back(parse_alignment_line(line, out.size() + 1, out.size()));
  return out;
}

/// Gold-file line for a set (sure links as i-j, the rest as i?j).
inline std::string format_alignment(const AlignmentSet& a) {
  std::string out;
  for (const Link& l : a.possible) {
    if (!out.empty()) out += ' ';
    out += std::to_string(l.source + 1) + (a.sure.contains(l) ? "-" : "?") + std::to_string(l.target + 1);
  }
  return out;
}

namespace detail {

inline std::size_t word_count(std::span<const int> map, const char* side) {
  int top = -1;
  for (int w : map) top = std::max(top, w);
  std::vector<bool> seen(static_cast<std::size_t>(top + 1), false);
  for (int w : map)
    if (w >= 0) seen[static_cast<std::size_t>(w)] = true;
  for (std::size_t w = 0; w < seen.size(); ++w)
    if (!seen[w])
      throw std::invalid_argument(std::string("extract_alignments: ") + side + " word " + std::to_string(w) +
                                  " has no subword");
  return seen.size();
}

}  // namespace detail

/// Sum-pools a (target subword × source subword) matrix to words and links
/// each target word to its highest-scoring source word (ties to the lower
/// index). Map entries < 0 drop the row or column, which is how </s> is
/// kept out of the argmax.
inline Alignment extract_alignments(const Matrix<double>& m, std::span<const int> source_map,
                                    std::span<const int> target_map) {
  if (m.empty()) throw std::invalid_argument("extract_alignments: empty matrix");
  if (source_map.size() != m.cols() || target_map.size() != m.rows())
    throw std::invalid_argument("extract_alignments: maps do not cover the matrix (" +
                                std::to_string(target_map.size()) + "x" + std::to_string(source_map.size()) +
                                " vs " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")");
  const std::size_t src_words = detail::word_count(source_map, "source");
  const std::size_t tgt_words = detail::word_count(target_map, "target");
  Alignment out;
  if (src_words == 0) return out;
  Matrix<double> pooled(tgt_words, src_words);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (target_map[r] < 0) continue;
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (source_map[c] >= 0) pooled(static_cast<std::size_t>(target_map[r]), static_cast<std::size_t>(source_map[c])) += m(r, c);
  }
  for (std::size_t t = 0; t < tgt_words; ++t)
    out.insert(Link{static_cast<int>(argmax(pooled.row(t))), static_cast<int>(t)});
  return out;
}

struct AerCounts {
  std::size_t hyp = 0;           // |A|
  std::size_t sure = 0;          // |S|
  std::size_t hyp_sure = 0;      // |A ∩ S|
  std::size_t hyp_possible = 0;  // |A ∩ P|

  double value() const {
    if (hyp + sure == 0) throw std::invalid_argument("aer: undefined for |A| + |S| = 0");
    // Written as a single quotient so small cases come out exact (1/3, not 1 - 2/3).
    return static_cast<double>(hyp + sure - hyp_sure - hyp_possible) / static_cast<double>(hyp + sure);
  }
};

inline AerCounts aer_counts(const Alignment& hyp, const AlignmentSet& gold) {
  AerCounts c;
  c.hyp = hyp.size();
  c.sure = gold.sure.size();
  for (const Link& l : hyp) {
    if (gold.sure.contains(l)) ++c.hyp_sure;
    if (gold.possible.contains(l) || gold.sure.contains(l)) ++c.hyp_possible;
  }
  return c;
}

/// AER = 1 - (|A∩S| + |A∩P|) / (|A| + |S|).
inline double aer(const Alignment& hyp, const AlignmentSet& gold) { return aer_counts(hyp, gold).value(); }

struct CorpusAer {
  std::vector<std::optional<double>> per_sentence;  // empty when |A| + |S| = 0
  double mean = 0.0;    // mean of the defined per-sentence values
  double pooled = 0.0;  // counts summed over the corpus
};

inline CorpusAer corpus_aer(std::span<const Alignment> hyps, std::span<const AlignmentSet> gold) {
  if (hyps.size() != gold.size())
    throw std::invalid_argument("corpus_aer: " + std::to_string(hyps.size()) + " hypotheses vs " +
                                std::to_string(gold.size()) + " gold sentences");
  CorpusAer out;
  AerCounts total;
  std::size_t defined = 0;
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    const AerCounts c = aer_counts(hyps[s], gold[s]);
    total.hyp += c.hyp;
    total.sure += c.sure;
    total.hyp_sure += c.hyp_sure;
    total.hyp_possible += c.hyp_possible;
    if (c.hyp + c.sure == 0) {
      out.per_sentence.emplace_back();
      continue;
    }
    out.per_sentence.emplace_back(c.value());
    out.mean += *out.per_sentence.back();
    ++defined;
  }
  if (defined == 0) throw std::invalid_argument("corpus_aer: no sentence with links");
  out.mean /= static_cast<double>(defined);
  out.pooled = total.value();
  return out;
}

}  // namespace alti::eval

#endif  // ALTI_EVAL_ALIGNMENT_HPP
