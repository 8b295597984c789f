// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#ifndef ALTI_IO_HPP
#define ALTI_IO_HPP

// Text and JSON I/O: token corpora, word maps, matrix and relevance
// exports. Layer numbers are written 1-based. See docs/formats.md.

#include <charconv>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "alti/aggregation.hpp"
#include "alti/contributions.hpp"
#include "alti/parse_error.hpp"

namespace alti::io {

/// Shortest text that round-trips the double.
inline std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline nlohmann::json matrix_json(const Matrix<double>& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

inline nlohmann::json contribution_matrix_json(const ContributionMatrix& m) {
  return {{"site", to_string(m.site)},
          {"layer", m.layer + 1},
          {"shape", {m.rows(), m.cols()}},
          {"values", matrix_json(m.values)}};
}

/// {source_tokens, target_tokens, predicted_tokens, source_relevance, target_relevance}.
/// target_tokens are the prefix tokens indexing target_relevance columns;
/// predicted_tokens label the rows when known.
inline nlohmann::json relevance_json(const RelevanceResult& r, const std::vector<TokenId>& predicted) {
  nlohmann::json j = {{"source_tokens", r.source_tokens},
                      {"target_tokens", r.prefix_tokens},
                      {"source_relevance", matrix_json(r.source_relevance)},
                      {"target_relevance", matrix_json(r.target_relevance)}};
  if (!predicted.empty()) j["predicted_tokens"] = predicted;
  return j;
}

inline void write_csv_row(std::ostream& os, const std::string& label, std::span<const double> values) {
  os << label;
  for (double v : values) os << ',' << format_number(v);
  os << '\n';
}

/// Header row of column labels, then one labelled row per output position.
inline void write_matrix_csv(std::ostream& os, const Matrix<double>& m, const std::vector<std::string>& row_labels,
                             const std::vector<std::string>& col_labels) {
  os << "token";
  for (const auto& c : col_labels) os << ',' << c;
  os << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r)
    write_csv_row(os, r < row_labels.size() ? row_labels[r] : std::to_string(r), m.row(r));
}

/// Heatmap with rows = predicted tokens and columns = source tokens then
/// prefix tokens. Labels are "src<j>:<id>", "tgt<k>:<id>", "pred<t>:<id>".
inline void write_relevance_csv(std::ostream& os, const RelevanceResult& r, const std::vector<TokenId>& predicted) {
  const std::size_t j = r.source_relevance.cols(), t = r.target_relevance.cols();
  Matrix<double> joined(r.source_relevance.rows(), j + t);
  for (std::size_t row = 0; row < joined.rows(); ++row) {
    for (std::size_t c = 0; c < j; ++c) joined(row, c) = r.source_relevance(row, c);
    for (std::size_t c = 0; c < t; ++c) joined(row, j + c) = r.target_relevance(row, c);
  }
  std::vector<std::string> cols, rows;
  for (std::size_t c = 0; c < j; ++c) cols.push_back("src" + std::to_string(c) + ":" + std::to_string(r.source_tokens[c]));
  for (std::size_t c = 0; c < t; ++c) cols.push_back("tgt" + std::to_string(c) + ":" + std::to_string(r.prefix_tokens[c]));
  for (std::size_t row = 0; row < joined.rows(); ++row)
    rows.push_back("pred" + std::to_string(row + 1) + ":" +
                   (row < predicted.size() ? std::to_string(predicted[row]) : std::string("?")));
  write_matrix_csv(os, joined, rows, cols);
}

namespace detail {

template <class Int>
std::vector<Int> parse_int_line(std::string_view line, std::size_t line_no, bool allow_negative) {
  std::vector<Int> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    if (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r') {
      ++pos;
      continue;
    }
    Int value{};
    const auto res = std::from_chars(line.data() + pos, line.data() + line.size(), value);
    if (res.ec != std::errc() || (res.ptr != line.data() + line.size() && *res.ptr != ' ' && *res.ptr != '\t' &&
                                  *res.ptr != '\r'))
      throw ParseError(line_no, pos + 1, "expected an integer");
    if (!allow_negative && value < 0) throw ParseError(line_no, pos + 1, "negative token id");
    out.push_back(value);
    pos = static_cast<std::size_t>(res.ptr - line.data());
  }
  return out;
}

}  // namespace detail

/// One sentence per line, whitespace-separated integer token ids.
inline std::vector<std::vector<TokenId>> read_token_corpus(std::istream& is) {
  std::vector<std::vector<TokenId>> out;
  std::string line;
  while (std::getline(is, line)) {
    out.push_back(detail::parse_int_line<TokenId>(line, out.size() + 1, false));
    if (out.back().empty()) throw ParseError(out.size(), 1, "empty sentence");
  }
  return out;
}

/// One line per sentence with a 0-based word index per token; -1 marks a
/// token outside every word.
inline std::vector<std::vector<int>> read_word_maps(std::istream& is) {
  std::vector<std::vector<int>> out;
  std::string line;
  while (std::getline(is, line)) out.push_back(detail::parse_int_line<int>(line, out.size() + 1, true));
  return out;
}

}  // namespace alti::io

#endif  // ALTI_IO_HPP
