#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cooccurrence.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "preprocess.hpp"

namespace ctxvol {

enum class Dispersion { iqr, stddev };
enum class AbsentPolicy { max_rank, skip };

inline Dispersion parse_dispersion(std::string_view s) {
  if (s == "iqr") return Dispersion::iqr;
  if (s == "stddev") return Dispersion::stddev;
  throw ConfigError("unknown dispersion '" + std::string(s) + "' (iqr|stddev)");
}

inline AbsentPolicy parse_absent_policy(std::string_view s) {
  if (s == "max_rank") return AbsentPolicy::max_rank;
  if (s == "skip") return AbsentPolicy::skip;
  throw ConfigError("unknown absent policy '" + std::string(s) + "' (max_rank|skip)");
}

inline std::string to_string(Dispersion d) { return d == Dispersion::iqr ? "iqr" : "stddev"; }
inline std::string to_string(AbsentPolicy p) { return p == AbsentPolicy::max_rank ? "max_rank" : "skip"; }

struct VolatilityConfig {
  std::size_t history = 6; // h, in slices
  Dispersion dispersion = Dispersion::iqr;
  AbsentPolicy absent = AbsentPolicy::max_rank;
};

// ---------------------------------------------------------------------------
// Dispersion

/// Quantile of sorted data by linear interpolation between order statistics
/// at zero-based position q (n - 1).
inline double sorted_quantile(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Q3 - Q1 with linearly interpolated quartiles. Throws on empty input.
inline double interquartile_range(std::span<const double> values) {
  if (values.empty()) throw Error("interquartile_range of an empty sequence");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return sorted_quantile(v, 0.75) - sorted_quantile(v, 0.25);
}

/// Population standard deviation.
inline double standard_deviation(std::span<const double> values) {
  if (values.empty()) throw Error("standard_deviation of an empty sequence");
  double mean = 0;
  for (double x : values) mean += x;
  mean /= static_cast<double>(values.size());
  double ss = 0;
  for (double x : values) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

inline double dispersion(std::span<const double> values, Dispersion d) {
  return d == Dispersion::iqr ? interquartile_range(values) : standard_deviation(values);
}

// ---------------------------------------------------------------------------
// Ranks

struct RankedTerm {
  TermId term = 0;
  double rank = 0;
  friend bool operator==(const RankedTerm &, const RankedTerm &) = default;
};

/// Fractional ranks of a word's co-occurrents in one slice: the highest
/// weight gets rank 1, tied weights share the mean of their positions.
/// Sorted by term id.
inline std::vector<RankedTerm> slice_ranks(const SliceCoocMatrix &m, TermId word) {
  auto row = ranked_row(m, word);
  std::vector<RankedTerm> out;
  out.reserve(row.size());
  for (std::size_t i = 0; i < row.size();) {
    std::size_t j = i;
    while (j < row.size() && row[j].weight == row[i].weight) ++j;
    const double rank = static_cast<double>(i + 1 + j) / 2.0; // mean of positions i+1..j
    for (std::size_t k = i; k < j; ++k) out.push_back({row[k].term, rank});
    i = j;
  }
  std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.term < b.term; });
  return out;
}

/// Ranks of all of a word's co-occurrents over a run of consecutive slices.
/// Rows are the union of co-occurrents seen in any of the slices (ascending
/// id), columns the slices. Absent cells hold (present count + 1) under
/// max_rank; under skip they are excluded from dispersion.
class RankMatrix {
public:
  RankMatrix() = default;

  TermId word() const { return word_; }
  std::size_t first_slice() const { return first_slice_; }
  std::size_t slices() const { return cols_; }
  AbsentPolicy policy() const { return policy_; }
  const std::vector<TermId> &cooccurrents() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  bool present(std::size_t row, std::size_t col) const { return present_[row * cols_ + col] != 0; }
  /// Rank in the cell; under max_rank an absent cell reports the filled rank.
  double rank(std::size_t row, std::size_t col) const { return ranks_[row * cols_ + col]; }
  /// Number of co-occurrents ranked in slice col.
  std::size_t present_count(std::size_t col) const { return present_counts_[col]; }

  /// Values entering the dispersion of `row` over columns [from, to).
  void collect(std::size_t row, std::size_t from, std::size_t to, std::vector<double> &out) const {
    out.clear();
    for (std::size_t c = from; c < to; ++c)
      if (policy_ == AbsentPolicy::max_rank || present(row, c)) out.push_back(rank(row, c));
  }

  /// True when the row has at least one present cell in [from, to).
  bool seen(std::size_t row, std::size_t from, std::size_t to) const {
    for (std::size_t c = from; c < to; ++c)
      if (present(row, c)) return true;
    return false;
  }

private:
  friend RankMatrix build_rank_matrix(std::span<const SliceCoocMatrix>, TermId, AbsentPolicy);

  TermId word_ = 0;
  std::size_t first_slice_ = 0;
  std::size_t cols_ = 0;
  AbsentPolicy policy_ = AbsentPolicy::max_rank;
  std::vector<TermId> terms_;
  std::vector<double> ranks_;
  std::vector<char> present_;
  std::vector<std::size_t> present_counts_;
};

inline RankMatrix build_rank_matrix(std::span<const SliceCoocMatrix> slices, TermId word,
                                    AbsentPolicy policy = AbsentPolicy::max_rank) {
  if (slices.empty()) throw Error("build_rank_matrix needs at least one slice");
  RankMatrix rm;
  rm.word_ = word;
  rm.first_slice_ = slices.front().slice_index();
  rm.cols_ = slices.size();
  rm.policy_ = policy;

  std::vector<std::vector<RankedTerm>> per_slice(slices.size());
  for (std::size_t c = 0; c < slices.size(); ++c) {
    per_slice[c] = slice_ranks(slices[c], word);
    for (const auto &r : per_slice[c]) rm.terms_.push_back(r.term);
  }
  std::sort(rm.terms_.begin(), rm.terms_.end());
  rm.terms_.erase(std::unique(rm.terms_.begin(), rm.terms_.end()), rm.terms_.end());

  const std::size_t rows = rm.terms_.size(), cols = rm.cols_;
  rm.ranks_.assign(rows * cols, 0.0);
  rm.present_.assign(rows * cols, 0);
  rm.present_counts_.assign(cols, 0);
  for (std::size_t c = 0; c < cols; ++c) {
    const auto &ranks = per_slice[c];
    rm.present_counts_[c] = ranks.size();
    const double fill = static_cast<double>(ranks.size() + 1);
    // both lists ascend by term id
    std::size_t k = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      if (k < ranks.size() && ranks[k].term == rm.terms_[r]) {
        rm.ranks_[r * cols + c] = ranks[k].rank;
        rm.present_[r * cols + c] = 1;
        ++k;
      } else {
        rm.ranks_[r * cols + c] = fill;
      }
    }
  }
  return rm;
}

// ---------------------------------------------------------------------------
// Volatility

namespace detail {

/// Mean dispersion over columns [from, to) of the rows seen in that window.
inline double windowed_volatility(const RankMatrix &rm, std::size_t from, std::size_t to, Dispersion d) {
  std::vector<double> buf;
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < rm.cooccurrents().size(); ++r) {
    if (!rm.seen(r, from, to)) continue;
    rm.collect(r, from, to, buf);
    sum += dispersion(buf, d);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

} // namespace detail

/// Context volatility of `word` over the given slices: the mean, over the
/// word's co-occurrents in those slices, of the dispersion of each
/// co-occurrent's rank sequence. Zero when the word has no co-occurrents.
inline double context_volatility(std::span<const SliceCoocMatrix> window, TermId word,
                                 const VolatilityConfig &config = {}) {
  auto rm = build_rank_matrix(window, word, config.absent);
  return detail::windowed_volatility(rm, 0, rm.slices(), config.dispersion);
}

struct VolatilitySeries {
  TermId word = 0;
  std::size_t history = 0;
  std::vector<double> values; // values[i] covers slices [i, i + history)
  std::size_t empty_windows = 0; // windows in which the word had no co-occurrents

  /// Slice index at which value i ends (the "t" of the window).
  std::size_t end_slice(std::size_t i) const { return i + history - 1; }
};

/// Windowed volatility for every t in [h-1, T) (zero-based): T - h + 1
/// values. With h = T this is the single global constant.
inline VolatilitySeries volatility_series(std::span<const SliceCoocMatrix> slices, TermId word,
                                          const VolatilityConfig &config) {
  const std::size_t T = slices.size(), h = config.history;
  if (h < 1 || h > T)
    throw ConfigError("history h=" + std::to_string(h) + " must be within [1, T=" + std::to_string(T) + "]");
  VolatilitySeries s;
  s.word = word;
  s.history = h;
  auto rm = build_rank_matrix(slices, word, config.absent);
  s.values.reserve(T - h + 1);
  for (std::size_t from = 0; from + h <= T; ++from) {
    bool any = false;
    for (std::size_t r = 0; r < rm.cooccurrents().size() && !any; ++r) any = rm.seen(r, from, from + h);
    if (!any) ++s.empty_windows;
    s.values.push_back(detail::windowed_volatility(rm, from, from + h, config.dispersion));
  }
  return s;
}

/// Global volatility S_w (history = all slices) for every vocabulary term,
/// computed per term in parallel.
inline std::vector<double> global_volatility(std::span<const SliceCoocMatrix> slices, std::size_t vocab_size,
                                             const VolatilityConfig &config, unsigned workers = 1) {
  std::vector<double> out(vocab_size, 0.0);
  if (slices.empty()) return out;
  parallel_for(vocab_size, workers, [&](std::size_t w) {
    out[w] = context_volatility(slices, static_cast<TermId>(w), config);
  });
  return out;
}

struct TermScore {
  std::string term;
  double score = 0;
};

/// Terms by descending global volatility, ties lexicographic; the first k
/// (all when k = 0).
inline std::vector<TermScore> rank_terms(const std::vector<double> &scores, const Vocabulary &vocab,
                                         std::size_t k = 0) {
  std::vector<TermScore> out;
  out.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out.push_back({vocab.term(static_cast<TermId>(i)), scores[i]});
  std::sort(out.begin(), out.end(), [](const TermScore &a, const TermScore &b) {
    return a.score != b.score ? a.score > b.score : a.term < b.term;
  });
  if (k > 0 && out.size() > k) out.resize(k);
  return out;
}

inline std::vector<TermScore> top_volatile_terms(std::span<const SliceCoocMatrix> slices, const Vocabulary &vocab,
                                                 const VolatilityConfig &config, std::size_t k,
                                                 unsigned workers = 1) {
  if (vocab.empty()) throw Error("top_volatile_terms: empty vocabulary");
  return rank_terms(global_volatility(slices, vocab.size(), config, workers), vocab, k);
}

} // namespace ctxvol
