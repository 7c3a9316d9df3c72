#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "cooccurrence.hpp"
#include "corpus.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "preprocess.hpp"
#include "svg.hpp"
#include "volatility.hpp"

namespace ctxvol {

namespace fs = std::filesystem;

/// 64-bit FNV-1a over length-prefixed fields.
class ContentHash {
public:
  ContentHash &add(std::string_view s) {
    add_raw(std::to_string(s.size()));
    add_raw(":");
    add_raw(s);
    return *this;
  }

  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

private:
  void add_raw(std::string_view s) {
    for (unsigned char c : s) {
      h_ ^= c;
      h_ *= 0x100000001b3ull;
    }
  }
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

/// Corpus, vocabulary and slice matrices for one configuration.
struct PreparedCorpus {
  SlicedCorpus corpus;
  Vocabulary vocab;
  std::vector<SliceCoocMatrix> matrices;
  std::size_t rejected_records = 0;
  std::string cache_key;
  bool cache_hit = false;
};

namespace detail {

/// Runs one pipeline stage, prefixing any error with the stage name while
/// keeping its category.
template <class F> auto stage(const char *name, F &&f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError &e) {
    throw ConfigError(std::string(name) + ": " + e.what());
  } catch (const InputError &e) {
    throw InputError(std::string(name) + ": " + e.what());
  } catch (const std::exception &e) {
    throw Error(std::string(name) + ": " + e.what());
  }
}

template <class Set> std::vector<std::string> sorted_items(const Set &s) {
  std::vector<std::string> out;
  for (const auto &item : s) {
    if constexpr (requires { item.first; }) out.push_back(item.first + "\t" + item.second);
    else out.push_back(item);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string matrix_file_name(std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "slice_%04zu.ctxm", t);
  return buf;
}

inline std::string cache_key(const PipelineConfig &cfg, const SlicedCorpus &corpus, const LemmaMap &lemmas) {
  ContentHash h;
  h.add("ctxvol-matrices-v1").add(to_string(corpus.granularity()));
  for (const auto &d : corpus.documents()) h.add(d.id).add(d.date.iso()).add(d.text);
  h.add(cfg.lowercase ? "lower" : "cased");
  for (const auto &s : sorted_items(lemmas)) h.add(s);
  h.add("stop");
  for (const auto &s : sorted_items(cfg.pruning.stopwords)) h.add(s);
  h.add("block");
  for (const auto &s : sorted_items(cfg.pruning.blocklist)) h.add(s);
  const auto &p = cfg.pruning;
  h.add(std::to_string(p.absolute)).add(std::to_string(p.min_doc_freq)).add(std::to_string(p.relative));
  h.add(format_number(p.relative_low)).add(format_number(p.relative_high));
  h.add(std::to_string(static_cast<int>(cfg.window.kind))).add(std::to_string(cfg.window.size));
  const auto &m = cfg.matrix;
  h.add(to_string(m.measure)).add(std::to_string(m.top_k)).add(std::to_string(m.min_joint));
  h.add(m.min_score ? format_number(*m.min_score) : "-");
  return h.hex();
}

inline std::optional<std::vector<SliceCoocMatrix>> load_cached(const fs::path &dir, std::size_t T, std::size_t V) {
  if (!fs::is_regular_file(dir / "complete")) return std::nullopt;
  std::vector<SliceCoocMatrix> out;
  try {
    for (std::size_t t = 0; t < T; ++t) {
      out.push_back(read_matrix(dir / matrix_file_name(t)));
      if (out.back().dim() != V || out.back().slice_index() != t) return std::nullopt;
    }
  } catch (const InputError &e) {
    Log::warn(std::string("ignoring unreadable matrix cache: ") + e.what());
    return std::nullopt;
  }
  return out;
}

inline void store_cached(const fs::path &dir, const std::vector<SliceCoocMatrix> &matrices) {
  std::error_code ec;
  auto tmp = dir;
  tmp += ".tmp-" + std::to_string(::getpid());
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp);
  for (const auto &m : matrices) write_matrix(tmp / matrix_file_name(m.slice_index()), m);
  std::ofstream(tmp / "complete") << matrices.size() << '\n';
  fs::remove_all(dir, ec);
  fs::rename(tmp, dir, ec);
  if (ec) fs::remove_all(tmp, ec);
}

} // namespace detail

/// Ingest, slice, select, tokenize, prune and build (or load cached) slice
/// matrices. With `check_history`, h > T is rejected before tokenization.
inline PreparedCorpus prepare_corpus(PipelineConfig cfg, bool check_history = true) {
  using detail::stage;
  PreparedCorpus out;
  stage("config", [&] { cfg.validate(); });

  auto ingest = stage("ingest", [&] { return ingest_documents(cfg.input, cfg.ingest); });
  out.rejected_records = ingest.rejected.size();
  if (ingest.documents.empty()) throw InputError("ingest: no valid documents in " + cfg.input.string());

  out.corpus = stage("slice", [&] {
    auto c = assign_time_slices(std::move(ingest.documents), cfg.granularity);
    if (cfg.date_start || cfg.date_end) {
      Date lo = cfg.date_start.value_or(Date{1, 1, 1});
      Date hi = cfg.date_end.value_or(Date{9999, 12, 31});
      c = filter_by_date_range(c, lo, hi);
    }
    if (!cfg.topic_table.empty()) {
      auto table = load_doc_topic_table(cfg.topic_table);
      c = filter_by_topic_share(c, table, cfg.topic, cfg.min_topic_share);
    }
    if (c.empty()) throw InputError("sub-corpus selection left no documents");
    return c;
  });

  const std::size_t T = out.corpus.slice_count();
  if (check_history && cfg.volatility.history > T)
    throw ConfigError("config: history h=" + std::to_string(cfg.volatility.history) +
                      " exceeds the number of slices T=" + std::to_string(T));

  LemmaMap lemmas;
  stage("preprocess", [&] {
    if (!cfg.lemma_map.empty()) lemmas = load_lemma_map(cfg.lemma_map);
    if (!cfg.stopwords.empty()) cfg.pruning.stopwords = load_term_set(cfg.stopwords);
    if (!cfg.blocklist.empty()) cfg.pruning.blocklist = load_term_set(cfg.blocklist);
    TokenizerOptions tok{cfg.lowercase, lemmas.empty() ? nullptr : &lemmas};
    tokenize_corpus(out.corpus, tok, cfg.workers);
    out.vocab = build_vocabulary(out.corpus, cfg.pruning);
  });

  out.cache_key = detail::cache_key(cfg, out.corpus, lemmas);
  const fs::path cache_dir = cfg.effective_cache_dir() / out.cache_key;
  if (cfg.cache) {
    if (auto cached = detail::load_cached(cache_dir, T, out.vocab.size())) {
      out.matrices = std::move(*cached);
      out.cache_hit = true;
      return out;
    }
  }
  out.matrices = stage("cooccurrence", [&] {
    return build_slice_matrices(out.corpus, out.vocab, cfg.window, cfg.matrix, cfg.workers);
  });
  if (cfg.cache) stage("cache", [&] { detail::store_cached(cache_dir, out.matrices); });
  return out;
}

// ---------------------------------------------------------------------------
// Writers

inline void write_vocabulary(std::ostream &out, const Vocabulary &v) {
  out << "id\tterm\tdoc_freq\tcount\n";
  for (TermId i = 0; i < v.size(); ++i)
    out << i << '\t' << v.term(i) << '\t' << v.doc_freq(i) << '\t' << v.count(i) << '\n';
}

inline void write_slices(std::ostream &out, const SlicedCorpus &c, const Vocabulary &v) {
  out << "slice_index,start_date,end_date,documents,tokens\n";
  for (const auto &s : c.slices())
    out << s.index << ',' << s.start.iso() << ',' << s.end.iso() << ',' << s.docs.size() << ','
        << v.slice_tokens(s.index) << '\n';
}

inline void write_global_report(std::ostream &out, const std::vector<TermScore> &ranked) {
  out << "term,S_w\n";
  for (const auto &r : ranked) csv::write_row(out, {r.term, format_number(r.score)});
}

inline void write_volatility_series(std::ostream &out, const std::string &term, const VolatilitySeries &s,
                                    const SlicedCorpus &c) {
  out << "term,slice_start_date,cv\n";
  for (std::size_t i = 0; i < s.values.size(); ++i)
    csv::write_row(out, {term, c.slice(s.end_slice(i)).start.iso(), format_number(s.values[i])});
}

/// Generic series CSV: series_name,slice_start_date,value.
inline void write_series_rows(std::ostream &out, const std::string &name, std::span<const double> values,
                              const SlicedCorpus &c, std::size_t first_slice) {
  for (std::size_t i = 0; i < values.size(); ++i)
    csv::write_row(out, {name, c.slice(first_slice + i).start.iso(), format_number(values[i])});
}

namespace detail {

inline std::ofstream open_output(const fs::path &p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write " + p.string());
  return out;
}

/// Output directory written through a staging area: files appear in the
/// target only on commit(); otherwise the staging area is removed.
class StagedOutput {
public:
  explicit StagedOutput(fs::path target) : target_(std::move(target)) {
    fs::create_directories(target_);
    staging_ = target_ / (".staging-" + std::to_string(::getpid()));
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  StagedOutput(const StagedOutput &) = delete;
  StagedOutput &operator=(const StagedOutput &) = delete;
  ~StagedOutput() {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }

  fs::path path(const std::string &name) const { return staging_ / name; }

  void commit() {
    std::vector<fs::path> entries;
    for (const auto &e : fs::directory_iterator(staging_)) entries.push_back(e.path());
    std::sort(entries.begin(), entries.end());
    for (const auto &e : entries) {
      auto dest = target_ / e.filename();
      fs::remove_all(dest);
      fs::rename(e, dest);
      committed_.push_back(dest);
    }
  }

  const std::vector<fs::path> &committed() const { return committed_; }

private:
  fs::path target_, staging_;
  std::vector<fs::path> committed_;
};

inline std::vector<std::string> slice_labels(const SlicedCorpus &c, std::size_t first, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(c.slice(first + i).start.iso());
  return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Commands

struct AnalyzeResult {
  std::vector<fs::path> files;
  std::vector<std::string> skipped_terms;
  std::size_t slices = 0;
  std::size_t vocabulary = 0;
  double wall_seconds = 0;
};

/// Full run: vocabulary, slice table, matrices, global volatility report,
/// per-term series for the configured terms and a manifest.
inline AnalyzeResult run_analyze(const PipelineConfig &cfg) {
  const auto started = std::chrono::steady_clock::now();
  auto prep = prepare_corpus(cfg);
  const auto &corpus = prep.corpus;
  const auto &vocab = prep.vocab;
  const std::size_t T = corpus.slice_count();

  detail::StagedOutput staged(cfg.output);
  AnalyzeResult result;
  result.slices = T;
  result.vocabulary = vocab.size();

  detail::stage("report", [&] {
    {
      auto out = detail::open_output(staged.path("vocabulary.tsv"));
      write_vocabulary(out, vocab);
    }
    {
      auto out = detail::open_output(staged.path("slices.csv"));
      write_slices(out, corpus, vocab);
    }
    fs::create_directories(staged.path("matrices"));
    for (const auto &m : prep.matrices)
      write_matrix(staged.path("matrices") / detail::matrix_file_name(m.slice_index()), m);

    VolatilityConfig global = cfg.volatility;
    global.history = T;
    auto scores = global_volatility(prep.matrices, vocab.size(), global, cfg.workers);
    {
      auto out = detail::open_output(staged.path("top_volatile.csv"));
      write_global_report(out, rank_terms(scores, vocab, cfg.report_top_k));
    }

    for (const auto &term : cfg.terms) {
      auto id = vocab.id(term);
      if (!id) {
        Log::warn("term '" + term + "' is not in the vocabulary; skipped");
        result.skipped_terms.push_back(term);
        continue;
      }
      auto series = volatility_series(prep.matrices, *id, cfg.volatility);
      {
        auto out = detail::open_output(staged.path("volatility_" + term + ".csv"));
        write_volatility_series(out, term, series, corpus);
      }
      auto freq = relative_frequency_series(vocab, term);
      auto out = detail::open_output(staged.path("frequency_" + term + ".csv"));
      out << "series_name,slice_start_date,value\n";
      write_series_rows(out, "relative_frequency", freq, corpus, 0);
    }

    std::size_t pairs = 0;
    for (const auto &m : prep.matrices) pairs += m.pair_count();
    nlohmann::ordered_json manifest;
    for (const auto &[k, v] : cfg.entries()) manifest["config"][k] = v;
    manifest["corpus"] = {{"documents", corpus.documents().size()},
                          {"rejected_records", prep.rejected_records},
                          {"slices", T},
                          {"first_slice", corpus.slice(0).start.iso()},
                          {"last_slice", corpus.slice(T - 1).start.iso()},
                          {"vocabulary", vocab.size()},
                          {"excluded_stopword", vocab.exclusions().stopword},
                          {"excluded_absolute", vocab.exclusions().absolute},
                          {"excluded_relative", vocab.exclusions().relative},
                          {"matrix_pairs", pairs}};
    manifest["skipped_terms"] = result.skipped_terms;
    manifest["cache"] = {{"key", prep.cache_key}, {"hit", prep.cache_hit}};
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    manifest["wall_seconds"] = result.wall_seconds;
    auto out = detail::open_output(staged.path("manifest.json"));
    out << manifest.dump(2) << '\n';
  });

  staged.commit();
  result.files = staged.committed();
  return result;
}

struct TermsResult {
  std::vector<fs::path> files;
  std::vector<std::string> skipped_terms;
};

/// Per term: min-max aligned volatility and relative frequency over the
/// windowed slices (plus the raw values), optionally as an SVG overlay.
inline TermsResult run_terms(const PipelineConfig &cfg, const std::vector<std::string> &terms, bool emit_plot) {
  auto prep = prepare_corpus(cfg);
  const auto &corpus = prep.corpus;
  TermsResult result;
  fs::create_directories(cfg.output);

  for (const auto &term : terms) {
    auto id = prep.vocab.id(term);
    if (!id) {
      Log::warn("term '" + term + "' is not in the vocabulary; skipped");
      result.skipped_terms.push_back(term);
      continue;
    }
    auto series = volatility_series(prep.matrices, *id, cfg.volatility);
    auto freq_all = relative_frequency_series(prep.vocab, term);
    const std::size_t first = series.end_slice(0);
    std::vector<double> freq(freq_all.begin() + static_cast<std::ptrdiff_t>(first), freq_all.end());
    auto [vol_aligned, freq_aligned] = min_max_align(series.values, freq);

    auto csv_path = cfg.output / ("term_" + term + ".csv");
    {
      auto out = detail::open_output(csv_path);
      out << "series_name,slice_start_date,value\n";
      write_series_rows(out, "volatility", vol_aligned, corpus, first);
      write_series_rows(out, "frequency", freq_aligned, corpus, first);
      write_series_rows(out, "volatility_raw", series.values, corpus, first);
      write_series_rows(out, "frequency_raw", freq, corpus, first);
    }
    result.files.push_back(csv_path);
    if (emit_plot) {
      auto svg_path = cfg.output / ("term_" + term + ".svg");
      auto out = detail::open_output(svg_path);
      svg::write_overlay_chart(out, term + ": context volatility (h=" + std::to_string(cfg.volatility.history) +
                                        ") and relative frequency",
                               vol_aligned, freq_aligned, detail::slice_labels(corpus, first, freq.size()));
      result.files.push_back(svg_path);
    }
  }
  return result;
}

/// Edge list of `word`'s context graph in slice `slice`.
inline std::size_t run_graph(const PipelineConfig &cfg, const std::string &word, std::size_t slice,
                             const fs::path &out_path) {
  auto prep = prepare_corpus(cfg, false);
  const std::size_t T = prep.corpus.slice_count();
  if (slice >= T)
    throw ConfigError("slice " + std::to_string(slice) + " out of range; valid slices are 0.." +
                      std::to_string(T - 1));
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  return export_context_graph(prep.matrices[slice], prep.vocab, word, out_path);
}

} // namespace ctxvol
