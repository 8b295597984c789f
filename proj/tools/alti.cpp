// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

// Command-line front end: attribution reports, alignment evaluation and
// the diagnostics built on top of the library. See README.md for usage.

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "alti/alti.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace alti;

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::string model;
  std::string precision = "f32";
  bool json = false;
  int layer = 0;  // 1-based, 0 = command default
  unsigned threads = 1;
};

struct AttributeOptions {
  std::string source, target, output, csv_dir;
  std::size_t max_len = 100;
};

struct AerOptions {
  std::string source, target, gold, method = "alti", src_map, tgt_map, output;
};

struct EosOptions {
  std::string source, target, output;
  std::size_t max_len = 100;
};

struct HallucinationOptions {
  std::string source, reference, output;
  std::size_t max_len = 100;
  double min_bleu = 20.0;
  double max_bleu = 3.0;
};

struct EncoderOptions {
  std::string source, output;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return is;
}

std::vector<std::vector<TokenId>> read_corpus(const std::string& path) {
  auto is = open_input(path);
  try {
    return io::read_token_corpus(is);
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " +
                             e.what());
  }
}

std::vector<std::vector<int>> read_maps(const std::string& path) {
  auto is = open_input(path);
  try {
    return io::read_word_maps(is);
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " +
                             e.what());
  }
}

// Writes through a sibling temp file so a failed run never leaves a
// truncated output behind. Empty path or "-" means stdout.
void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << content;
    if (!os.flush()) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, target);
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers and returns the
/// results in index order. The first failing sentence (in corpus order)
/// is reported.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, unsigned threads, Fn fn) {
  std::vector<std::optional<T>> slots(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(n, 1)));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < count; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!slots[i]) throw std::runtime_error("sentence " + std::to_string(i + 1) + ": " + errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

TokenSequence as_source(std::vector<TokenId> ids, const ModelConfig& c) {
  if (ids.empty() || ids.back() != c.eos_id) ids.push_back(c.eos_id);
  return {std::move(ids), SequenceRole::source, {}};
}

// A target sentence y_1..y_n (</s> appended when missing) becomes the
// prefix y_0..y_{n-1}; prefix row p then predicts target[p].
struct TeacherForcing {
  TokenSequence prefix;
  std::vector<TokenId> predicted;
};

TeacherForcing teacher_forcing(std::vector<TokenId> target, const ModelConfig& c) {
  if (target.empty() || target.back() != c.eos_id) target.push_back(c.eos_id);
  TeacherForcing out{{{c.eos_id}, SequenceRole::target_prefix, {}}, target};
  out.prefix.ids.insert(out.prefix.ids.end(), target.begin(), target.end() - 1);
  return out;
}

/// Forced target when one is given, greedy output otherwise.
template <class Real>
TeacherForcing target_for(const TransformerWeights<Real>& w, const TokenSequence& source,
                          const std::vector<std::vector<TokenId>>& targets, std::size_t i, std::size_t max_len) {
  if (!targets.empty()) return teacher_forcing(targets[i], w.config);
  // Greedy output is taken as is, so a run cut off by max_len has no </s>.
  TeacherForcing out{{{w.config.eos_id}, SequenceRole::target_prefix, {}}, greedy_decode(w, source, max_len).ids};
  out.prefix.ids.insert(out.prefix.ids.end(), out.predicted.begin(), out.predicted.end() - 1);
  return out;
}

std::size_t resolve_layer(int flag, std::size_t count, std::size_t fallback) {
  if (flag == 0) return fallback;
  if (flag < 1 || static_cast<std::size_t>(flag) > count)
    throw UsageError("--layer " + std::to_string(flag) + " outside 1.." + std::to_string(count));
  return static_cast<std::size_t>(flag) - 1;
}

json header(const char* format, const ModelConfig& c, const GlobalOptions& g) {
  return {{"format", format}, {"version", 1}, {"model_id", c.model_id}, {"precision", g.precision}};
}

std::string render(const json& j) { return j.dump(2) + "\n"; }

std::vector<std::vector<TokenId>> optional_corpus(const std::string& path, std::size_t expected, const char* what) {
  if (path.empty()) return {};
  auto corpus = read_corpus(path);
  if (corpus.size() != expected)
    throw std::runtime_error(std::string(what) + " has " + std::to_string(corpus.size()) + " lines, source has " +
                             std::to_string(expected));
  return corpus;
}

// ---------------------------------------------------------------------------

template <class Real>
int cmd_attribute(const TransformerWeights<Real>& w, const GlobalOptions& g, const AttributeOptions& o) {
  const ModelConfig& c = w.config;
  const auto sources = read_corpus(o.source);
  const auto targets = optional_corpus(o.target, sources.size(), "target file");
  const std::size_t layer = resolve_layer(g.layer, c.num_decoder_layers, c.num_decoder_layers - 1);

  struct Item {
    json report;
    std::string csv;
  };
  auto items = parallel_map<Item>(sources.size(), g.threads, [&](std::size_t i) {
    const TokenSequence source = as_source(sources[i], c);
    const TeacherForcing tf = target_for(w, source, targets, i, o.max_len);
    const ForwardTrace<Real> trace = forward_with_trace(w, source, tf.prefix);
    RelevanceResult r = compute_relevance(w, trace);
    if (layer + 1 < r.decoder_layers.size()) {
      r.source_relevance = r.per_layer_source[layer];
      r.target_relevance = target_relevance(std::span<const DecoderLayerContributions>(r.decoder_layers).first(layer + 1));
    }
    json report = io::relevance_json(r, tf.predicted);
    report["index"] = i + 1;
    report["layer"] = layer + 1;
    report["source_contribution"] = total_source_contribution(r).per_step;
    json degenerate = json::array();
    for (const auto& m : r.encoder_layers)
      if (!m.degenerate_rows.empty())
        degenerate.push_back({{"site", to_string(m.site)}, {"layer", m.layer + 1}, {"rows", m.degenerate_rows}});
    for (const auto& d : r.decoder_layers) {
      if (!d.degenerate_self_rows.empty())
        degenerate.push_back({{"site", "decoder-self"}, {"layer", d.layer + 1}, {"rows", d.degenerate_self_rows}});
      if (!d.degenerate_cross_rows.empty())
        degenerate.push_back({{"site", "decoder-cross"}, {"layer", d.layer + 1}, {"rows", d.degenerate_cross_rows}});
    }
    report["degenerate_rows"] = degenerate;
    std::string csv;
    if (!o.csv_dir.empty()) {
      std::ostringstream os;
      io::write_relevance_csv(os, r, tf.predicted);
      csv = os.str();
    }
    return Item{std::move(report), std::move(csv)};
  });

  json doc = header("alti-attribution", c, g);
  doc["sentences"] = json::array();
  for (auto& item : items) doc["sentences"].push_back(std::move(item.report));
  if (!o.csv_dir.empty()) {
    fs::create_directories(o.csv_dir);
    for (std::size_t i = 0; i < items.size(); ++i)
      write_output((fs::path(o.csv_dir) / ("sentence-" + std::to_string(i + 1) + ".csv")).string(), items[i].csv);
  }
  write_output(o.output, render(doc));
  return kExitOk;
}

// ---------------------------------------------------------------------------

std::vector<int> default_map(std::size_t n, bool last_is_eos) {
  std::vector<int> m(n);
  for (std::size_t k = 0; k < n; ++k) m[k] = static_cast<int>(k);
  if (last_is_eos && n > 0) m.back() = -1;
  return m;
}

// Maps given in the file cover the tokens as written; an appended </s>
// is mapped to no word.
std::vector<int> fit_map(std::vector<int> map, std::size_t written, std::size_t full, const char* side,
                         std::size_t sentence) {
  if (map.size() == written && full == written + 1) map.push_back(-1);
  if (map.size() != full)
    throw std::runtime_error(std::string(side) + " word map for sentence " + std::to_string(sentence + 1) + " has " +
                             std::to_string(map.size()) + " entries, expected " + std::to_string(full));
  return map;
}

std::size_t words_in(const std::vector<int>& map) {
  int top = -1;
  for (int v : map) top = std::max(top, v);
  return static_cast<std::size_t>(top + 1);
}

template <class Real>
Matrix<double> alignment_scores(const TransformerWeights<Real>& w, const ForwardTrace<Real>& trace,
                                std::size_t layer, const std::string& method) {
  if (method == "alti") return decoder_layer_matrices(w, trace, layer).cross_part;
  if (method == "attention") return attention_matrix_baseline(trace, layer, Site::decoder_cross).values;
  NormBaselines nb = vector_norm_baselines(w, trace, layer, Site::decoder_cross);
  return method == "norm-f" ? nb.f_norm.values : nb.t_norm.values;
}

template <class Real>
int cmd_evaluate_aer(const TransformerWeights<Real>& w, const GlobalOptions& g, const AerOptions& o) {
  const ModelConfig& c = w.config;
  const auto sources = read_corpus(o.source);
  const auto targets = read_corpus(o.target);
  auto gold_is = open_input(o.gold);
  std::vector<eval::AlignmentSet> gold;
  try {
    gold = eval::read_alignments(gold_is);
  } catch (const ParseError& e) {
    throw std::runtime_error(o.gold + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " +
                             e.what());
  }
  if (targets.size() != sources.size() || gold.size() != sources.size())
    throw std::runtime_error("corpus size mismatch: " + std::to_string(sources.size()) + " source, " +
                             std::to_string(targets.size()) + " target, " + std::to_string(gold.size()) +
                             " gold lines");
  const auto src_maps = o.src_map.empty() ? std::vector<std::vector<int>>{} : read_maps(o.src_map);
  const auto tgt_maps = o.tgt_map.empty() ? std::vector<std::vector<int>>{} : read_maps(o.tgt_map);
  if ((!src_maps.empty() && src_maps.size() != sources.size()) || (!tgt_maps.empty() && tgt_maps.size() != sources.size()))
    throw std::runtime_error("word map line count differs from the corpus");
  const std::size_t fallback = c.num_decoder_layers >= 2 ? c.num_decoder_layers - 2 : 0;
  const std::size_t layer = resolve_layer(g.layer, c.num_decoder_layers, fallback);

  auto hyps = parallel_map<eval::Alignment>(sources.size(), g.threads, [&](std::size_t i) {
    const TokenSequence source = as_source(sources[i], c);
    const TeacherForcing tf = teacher_forcing(targets[i], c);
    const auto smap = src_maps.empty() ? default_map(source.size(), true)
                                       : fit_map(src_maps[i], sources[i].size(), source.size(), "source", i);
    const auto tmap = tgt_maps.empty()
                          ? default_map(tf.predicted.size(), true)
                          : fit_map(tgt_maps[i], targets[i].size(), tf.predicted.size(), "target", i);
    gold[i].validate(words_in(smap), words_in(tmap));
    const ForwardTrace<Real> trace = forward_with_trace(w, source, tf.prefix);
    return eval::extract_alignments(alignment_scores(w, trace, layer, o.method), smap, tmap);
  });
  const eval::CorpusAer result = eval::corpus_aer(hyps, gold);

  if (g.json) {
    json doc = header("alti-aer", c, g);
    doc["method"] = o.method;
    doc["layer"] = layer + 1;
    doc["sentences"] = json::array();
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      eval::AlignmentSet as_set{hyps[i], hyps[i], i};
      json s = {{"index", i + 1}, {"alignment", eval::format_alignment(as_set)}};
      s["aer"] = result.per_sentence[i] ? json(*result.per_sentence[i]) : json(nullptr);
      doc["sentences"].push_back(std::move(s));
    }
    doc["mean_aer"] = result.mean;
    doc["pooled_aer"] = result.pooled;
    write_output(o.output, render(doc));
  } else {
    std::ostringstream os;
    os << "method " << o.method << ", layer " << layer + 1 << "\n";
    for (std::size_t i = 0; i < hyps.size(); ++i)
      os << "sentence " << i + 1 << ": "
         << (result.per_sentence[i] ? io::format_number(*result.per_sentence[i]) : std::string("undefined")) << "\n";
    os << "mean AER " << io::format_number(result.mean) << "\n";
    os << "pooled AER " << io::format_number(result.pooled) << "\n";
    write_output(o.output, os.str());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

template <class Real>
int cmd_analyze_eos(const TransformerWeights<Real>& w, const GlobalOptions& g, const EosOptions& o) {
  const ModelConfig& c = w.config;
  const auto sources = read_corpus(o.source);
  const auto targets = optional_corpus(o.target, sources.size(), "target file");
  std::vector<std::size_t> layers;
  if (g.layer != 0)
    layers.push_back(resolve_layer(g.layer, c.num_decoder_layers, 0));
  else
    for (std::size_t l = 0; l < c.num_decoder_layers; ++l) layers.push_back(l);

  using Points = std::vector<std::vector<eval::EosResidualPoint>>;  // per requested layer
  auto per_sentence = parallel_map<Points>(sources.size(), g.threads, [&](std::size_t i) {
    const TokenSequence source = as_source(sources[i], c);
    const TeacherForcing tf = target_for(w, source, targets, i, o.max_len);
    const ForwardTrace<Real> trace = forward_with_trace(w, source, tf.prefix);
    Points pts;
    for (std::size_t l : layers) pts.push_back(eval::eos_residual_points(trace, decoder_layer_matrices(w, trace, l)));
    return pts;
  });

  json doc = header("alti-eos", c, g);
  doc["layers"] = json::array();
  std::ostringstream text;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    std::vector<eval::EosResidualPoint> pooled;
    for (const auto& s : per_sentence) pooled.insert(pooled.end(), s[k].begin(), s[k].end());
    json entry = {{"layer", layers[k] + 1}, {"points", pooled.size()}};
    try {
      const double r = eval::eos_residual_correlation(std::span<const eval::EosResidualPoint>(pooled));
      entry["pearson_r"] = r;
      text << "layer " << layers[k] + 1 << ": r = " << io::format_number(r) << " over " << pooled.size()
           << " steps\n";
    } catch (const std::invalid_argument& e) {
      if (g.layer != 0) throw;
      entry["pearson_r"] = nullptr;
      entry["error"] = e.what();
      text << "layer " << layers[k] + 1 << ": undefined (" << e.what() << ")\n";
    }
    doc["layers"].push_back(std::move(entry));
  }
  write_output(o.output, g.json ? render(doc) : text.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------

template <class Real>
int cmd_detect_hallucination(const TransformerWeights<Real>& w, const GlobalOptions& g,
                             const HallucinationOptions& o) {
  const ModelConfig& c = w.config;
  if (!c.unk_id) throw std::runtime_error("model config has no unk_id");
  const auto sources = read_corpus(o.source);
  const auto refs = optional_corpus(o.reference, sources.size(), "reference file");
  const eval::HallucinationThresholds thresholds{o.min_bleu, o.max_bleu};
  auto probes = parallel_map<eval::HallucinationProbe>(sources.size(), g.threads, [&](std::size_t i) {
    return eval::detect_hallucination(w, as_source(sources[i], c), refs[i], o.max_len, thresholds);
  });

  json doc = header("alti-hallucination", c, g);
  doc["min_bleu"] = o.min_bleu;
  doc["max_bleu"] = o.max_bleu;
  doc["sentences"] = json::array();
  std::ostringstream text;
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& p = probes[i];
    flagged += p.verdict.is_hallucination ? 1 : 0;
    doc["sentences"].push_back({{"index", i + 1},
                                {"original", p.original.ids},
                                {"perturbed", p.perturbed.ids},
                                {"original_bleu", p.verdict.original_bleu},
                                {"perturbed_bleu", p.verdict.perturbed_bleu},
                                {"hallucination", p.verdict.is_hallucination}});
    text << "sentence " << i + 1 << ": bleu " << io::format_number(p.verdict.original_bleu) << " -> "
         << io::format_number(p.verdict.perturbed_bleu) << (p.verdict.is_hallucination ? "  HALLUCINATION" : "")
         << "\n";
  }
  doc["hallucinations"] = flagged;
  text << flagged << " of " << probes.size() << " flagged\n";
  write_output(o.output, g.json ? render(doc) : text.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------

template <class Real>
int cmd_inspect_encoder(const TransformerWeights<Real>& w, const GlobalOptions& g, const EncoderOptions& o) {
  const ModelConfig& c = w.config;
  const auto sources = read_corpus(o.source);
  std::vector<std::size_t> layers;
  if (g.layer != 0)
    layers.push_back(resolve_layer(g.layer, c.num_encoder_layers, 0));
  else
    for (std::size_t l = 0; l < c.num_encoder_layers; ++l) layers.push_back(l);

  using Diagonals = std::vector<std::vector<double>>;  // per requested layer
  auto per_sentence = parallel_map<Diagonals>(sources.size(), g.threads, [&](std::size_t i) {
    const TokenSequence source = as_source(sources[i], c);
    ForwardTrace<Real> trace;
    trace.encoder = encode(w, source);
    std::vector<ContributionMatrix> mats;
    for (std::size_t l = 0; l < c.num_encoder_layers; ++l) mats.push_back(encoder_layer_matrix(w, trace, l));
    Diagonals out;
    for (std::size_t l : layers)
      out.push_back(encoder_diagonal_share(std::span<const ContributionMatrix>(mats), l + 1).diagonal);
    return out;
  });

  json doc = header("alti-encoder", c, g);
  doc["layers"] = json::array();
  std::ostringstream text;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    std::vector<double> all;
    for (const auto& s : per_sentence) all.insert(all.end(), s[k].begin(), s[k].end());
    double mean = 0.0, var = 0.0;
    for (double v : all) mean += v;
    mean /= static_cast<double>(all.size());
    for (double v : all) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(all.size()));
    doc["layers"].push_back({{"layer", layers[k] + 1}, {"tokens", all.size()}, {"mean", mean}, {"stddev", sd}});
    text << "layer " << layers[k] + 1 << ": self share " << io::format_number(mean) << " +- "
         << io::format_number(sd) << " over " << all.size() << " tokens\n";
  }
  write_output(o.output, g.json ? render(doc) : text.str());
  return kExitOk;
}

template <class Real>
int dispatch(const GlobalOptions& g, CLI::App& app, const AttributeOptions& attr, const AerOptions& aer,
             const EosOptions& eos, const HallucinationOptions& hal, const EncoderOptions& enc) {
  const TransformerWeights<Real> w = load_model<Real>(g.model);
  if (app.got_subcommand("attribute")) return cmd_attribute(w, g, attr);
  if (app.got_subcommand("evaluate-aer")) return cmd_evaluate_aer(w, g, aer);
  if (app.got_subcommand("analyze-eos")) return cmd_analyze_eos(w, g, eos);
  if (app.got_subcommand("detect-hallucination")) return cmd_detect_hallucination(w, g, hal);
  return cmd_inspect_encoder(w, g, enc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Input attributions for encoder-decoder Transformers"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--model", g.model, "weight file (ALTIWGT1)")->required();
  app.add_option("--precision", g.precision, "arithmetic precision")->check(CLI::IsMember({"f32", "f64"}));
  app.add_flag("--json", g.json, "machine-readable output");
  app.add_option("--layer", g.layer, "1-based layer (command-specific default)")->check(CLI::PositiveNumber);
  app.add_option("--threads", g.threads, "sentences processed in parallel")->check(CLI::Range(1u, 256u));

  AttributeOptions attr;
  auto* a = app.add_subcommand("attribute", "source and target relevance of every predicted token");
  a->add_option("--source", attr.source, "source corpus, one sentence of token ids per line")->required();
  a->add_option("--target", attr.target, "forced target corpus (greedy decoding when absent)");
  a->add_option("--output,-o", attr.output, "report path (stdout when absent)");
  a->add_option("--csv-dir", attr.csv_dir, "also write one heatmap CSV per sentence here");
  a->add_option("--max-len", attr.max_len, "greedy length limit")->check(CLI::PositiveNumber);

  AerOptions aer;
  auto* e = app.add_subcommand("evaluate-aer", "alignment error rate of cross-attention attributions");
  e->add_option("--source", aer.source)->required();
  e->add_option("--target", aer.target)->required();
  e->add_option("--gold", aer.gold, "gold alignments (i-j sure, i?j possible, 1-indexed)")->required();
  e->add_option("--method", aer.method)->check(CLI::IsMember({"alti", "attention", "norm-f", "norm-t"}));
  e->add_option("--src-map", aer.src_map, "subword-to-word maps for the source");
  e->add_option("--tgt-map", aer.tgt_map, "subword-to-word maps for the target");
  e->add_option("--output,-o", aer.output);

  EosOptions eos;
  auto* s = app.add_subcommand("analyze-eos", "correlate attention to </s> with the cross-attention residual share");
  s->add_option("--source", eos.source)->required();
  s->add_option("--target", eos.target, "forced target corpus (greedy decoding when absent)");
  s->add_option("--max-len", eos.max_len)->check(CLI::PositiveNumber);
  s->add_option("--output,-o", eos.output);

  HallucinationOptions hal;
  auto* h = app.add_subcommand("detect-hallucination", "BLEU drop after forcing <unk> into the target prefix");
  h->add_option("--source", hal.source)->required();
  h->add_option("--reference", hal.reference)->required();
  h->add_option("--max-len", hal.max_len)->check(CLI::PositiveNumber);
  h->add_option("--min-bleu", hal.min_bleu);
  h->add_option("--max-bleu", hal.max_bleu);
  h->add_option("--output,-o", hal.output);

  EncoderOptions enc;
  auto* n = app.add_subcommand("inspect-encoder", "share of each encoder state kept from its own input token");
  n->add_option("--source", enc.source)->required();
  n->add_option("--output,-o", enc.output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitUsage;
  }

  try {
    return g.precision == "f64" ? dispatch<double>(g, app, attr, aer, eos, hal, enc)
                                : dispatch<float>(g, app, attr, aer, eos, hal, enc);
  } catch (const UsageError& ex) {
    std::cerr << "alti: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& ex) {
    std::cerr << "alti: " << g.model << ": " << ex.what() << "\n";
    return kExitData;
  } catch (const std::exception& ex) {
    std::cerr << "alti: " << ex.what() << "\n";
    return kExitData;
  }
}
