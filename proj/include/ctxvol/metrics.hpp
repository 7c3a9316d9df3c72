#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "preprocess.hpp"

namespace ctxvol {

/// Per-slice token-level relative frequency: occurrences of the word divided
/// by all tokens in the slice (0 for slices without tokens). A word outside
/// the vocabulary gives an all-zero series.
inline std::vector<double> relative_frequency_series(const Vocabulary &vocab, const std::string &word) {
  std::vector<double> out(vocab.slices(), 0.0);
  auto id = vocab.id(word);
  if (!id) return out;
  for (std::size_t t = 0; t < out.size(); ++t) {
    auto total = vocab.slice_tokens(t);
    if (total > 0) out[t] = static_cast<double>(vocab.occurrences(*id, t)) / static_cast<double>(total);
  }
  return out;
}

enum class TermFrequency { raw, log };

/// tf(t, d) * ln(D / df(t)); tf is the raw count in the document, or
/// 1 + ln(count) in log mode.
inline double tf_idf(const std::string &term, std::size_t doc, const SlicedCorpus &corpus, const Vocabulary &vocab,
                     TermFrequency mode = TermFrequency::raw) {
  auto id = vocab.id(term);
  if (!id) throw InputError("'" + term + "' is not in the vocabulary");
  std::size_t count = 0;
  for (const auto &sentence : corpus.documents().at(doc).sentences)
    count += static_cast<std::size_t>(std::count(sentence.begin(), sentence.end(), term));
  if (count == 0) return 0.0;
  const double tf = mode == TermFrequency::raw ? static_cast<double>(count) : 1.0 + std::log(static_cast<double>(count));
  return tf * std::log(static_cast<double>(vocab.document_count()) / static_cast<double>(vocab.doc_freq(*id)));
}

enum class SalienceNormalization { none, slice_documents, global_max };

/// Per-slice number of documents whose share of `topic` reaches `threshold`,
/// optionally divided by the slice's document count or by the series max.
inline std::vector<double> topic_salience_series(const SlicedCorpus &corpus, const DocTopicTable &table,
                                                 const std::string &topic, double threshold,
                                                 SalienceNormalization norm = SalienceNormalization::none) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("salience threshold must be in (0, 1]");
  table.require_topic(topic);
  std::vector<double> out(corpus.slice_count(), 0.0);
  for (const auto &slice : corpus.slices()) {
    std::size_t n = 0;
    for (auto d : slice.docs)
      if (table.share(corpus.documents()[d].id, topic) >= threshold) ++n;
    out[slice.index] = static_cast<double>(n);
    if (norm == SalienceNormalization::slice_documents && !slice.docs.empty())
      out[slice.index] /= static_cast<double>(slice.docs.size());
  }
  if (norm == SalienceNormalization::global_max) {
    double mx = out.empty() ? 0.0 : *std::max_element(out.begin(), out.end());
    if (mx > 0)
      for (auto &v : out) v /= mx;
  }
  return out;
}

/// Maps a series to [0, 1] by (x - min) / (max - min); a constant series maps
/// to all zeros with a warning.
inline std::vector<double> min_max_scale(std::span<const double> s) {
  std::vector<double> out(s.size(), 0.0);
  if (s.empty()) return out;
  auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  const double range = *hi - *lo;
  if (!(range > 0)) {
    Log::warn("constant series scaled to all zeros");
    return out;
  }
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = (s[i] - *lo) / range;
  return out;
}

/// Independently rescales two equal-length series onto [0, 1] for overlay.
inline std::pair<std::vector<double>, std::vector<double>> min_max_align(std::span<const double> a,
                                                                         std::span<const double> b) {
  if (a.size() != b.size())
    throw Error("min_max_align: series lengths differ (" + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + ")");
  return {min_max_scale(a), min_max_scale(b)};
}

/// Pearson correlation; nullopt when either series is constant (undefined).
inline std::optional<double> series_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("series_correlation: series lengths differ");
  if (a.size() < 3) throw Error("series_correlation needs at least 3 points");
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0) || !(sbb > 0)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

} // namespace ctxvol
