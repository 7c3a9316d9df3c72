#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "corpus.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "measures.hpp"
#include "parallel.hpp"
#include "preprocess.hpp"

namespace ctxvol {

/// Context unit for co-occurrence counting: whole sentences, or a window of
/// `size` tokens on each side of every token position (within a sentence).
struct Window {
  enum class Kind { sentence, tokens };
  Kind kind = Kind::sentence;
  std::size_t size = 5;

  friend bool operator==(const Window &, const Window &) = default;
};

struct PairCount {
  TermId a = 0; // a < b
  TermId b = 0;
  std::uint32_t joint = 0;

  friend bool operator==(const PairCount &, const PairCount &) = default;
};

/// Unit-level counts of one slice: N, per-term unit counts and joint counts.
struct SliceCounts {
  std::size_t slice_index = 0;
  std::uint64_t units = 0;
  std::vector<std::uint64_t> term_units; // indexed by term id
  std::vector<PairCount> pairs;          // sorted by (a, b)

  ContingencyCounts table(const PairCount &p) const {
    return ContingencyCounts::from_marginals(p.joint, static_cast<double>(term_units[p.a]),
                                             static_cast<double>(term_units[p.b]), static_cast<double>(units));
  }
};

namespace detail {

inline std::uint64_t pair_key(TermId a, TermId b) { return (std::uint64_t{a} << 32) | b; }

/// Adds one unit given its (possibly repeated) in-vocabulary ids.
class UnitCounter {
public:
  explicit UnitCounter(std::size_t vocab) : term_units_(vocab, 0) {}

  void add_unit(std::vector<TermId> &ids) {
    ++units_;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      ++term_units_[ids[i]];
      for (std::size_t j = i + 1; j < ids.size(); ++j) ++joint_[pair_key(ids[i], ids[j])];
    }
  }

  SliceCounts finish(std::size_t slice_index) {
    SliceCounts out;
    out.slice_index = slice_index;
    out.units = units_;
    out.term_units = std::move(term_units_);
    out.pairs.reserve(joint_.size());
    for (const auto &[key, n] : joint_)
      out.pairs.push_back({static_cast<TermId>(key >> 32), static_cast<TermId>(key & 0xFFFFFFFFu), n});
    joint_ = {};
    std::sort(out.pairs.begin(), out.pairs.end(),
              [](const PairCount &x, const PairCount &y) { return x.a != y.a ? x.a < y.a : x.b < y.b; });
    return out;
  }

private:
  std::uint64_t units_ = 0;
  std::vector<std::uint64_t> term_units_;
  std::unordered_map<std::uint64_t, std::uint32_t> joint_;
};

} // namespace detail

/// Binary per-unit counts for slice t: a pair counts at most once per unit.
/// Tokens outside the vocabulary are ignored.
inline SliceCounts count_slice_cooccurrences(const SlicedCorpus &corpus, std::size_t t, const Vocabulary &vocab,
                                             const Window &window = {}) {
  detail::UnitCounter counter(vocab.size());
  std::vector<TermId> ids;
  std::vector<std::optional<TermId>> mapped;

  for (std::size_t d : corpus.slice(t).docs) {
    for (const auto &sentence : corpus.documents()[d].sentences) {
      if (window.kind == Window::Kind::sentence) {
        ids.clear();
        for (const auto &tok : sentence)
          if (auto id = vocab.id(tok)) ids.push_back(*id);
        counter.add_unit(ids);
        continue;
      }
      mapped.clear();
      for (const auto &tok : sentence) mapped.push_back(vocab.id(tok));
      const std::size_t n = mapped.size(), k = window.size;
      for (std::size_t i = 0; i < n; ++i) {
        ids.clear();
        for (std::size_t j = i > k ? i - k : 0; j < std::min(n, i + k + 1); ++j)
          if (mapped[j]) ids.push_back(*mapped[j]);
        counter.add_unit(ids);
      }
    }
  }
  return counter.finish(t);
}

// ---------------------------------------------------------------------------

struct MatrixOptions {
  Measure measure = Measure::llr;
  std::size_t top_k = 200;
  std::uint32_t min_joint = 1;
  std::optional<double> min_score; // no cutoff by default

  friend bool operator==(const MatrixOptions &, const MatrixOptions &) = default;
};

/// Sparse symmetric term-term significance matrix of one slice. Rows are
/// stored sorted by term id; the diagonal is never stored.
class SliceCoocMatrix {
public:
  struct Entry {
    TermId term = 0;
    double weight = 0;
    friend bool operator==(const Entry &, const Entry &) = default;
  };

  /// Upper-triangle triple (a < b).
  struct Triple {
    TermId a = 0;
    TermId b = 0;
    double weight = 0;
  };

  SliceCoocMatrix() = default;

  /// Builds both directions from upper-triangle triples.
  SliceCoocMatrix(std::size_t slice_index, std::size_t dim, std::span<const Triple> triples,
                  MatrixOptions options = {})
      : slice_index_(slice_index), dim_(dim), options_(options), offsets_(dim + 1, 0) {
    for (const auto &tr : triples) {
      if (tr.a >= dim || tr.b >= dim || tr.a == tr.b) throw InputError("matrix triple out of range");
      ++offsets_[tr.a + 1];
      ++offsets_[tr.b + 1];
    }
    for (std::size_t i = 0; i < dim; ++i) offsets_[i + 1] += offsets_[i];
    entries_.resize(offsets_[dim]);
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (const auto &tr : triples) {
      entries_[fill[tr.a]++] = {tr.b, tr.weight};
      entries_[fill[tr.b]++] = {tr.a, tr.weight};
    }
    for (std::size_t i = 0; i < dim; ++i)
      std::sort(entries_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
                entries_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]),
                [](const Entry &x, const Entry &y) { return x.term < y.term; });
  }

  std::size_t slice_index() const { return slice_index_; }
  std::size_t dim() const { return dim_; }
  const MatrixOptions &options() const { return options_; }
  /// Stored pairs (each unordered pair once).
  std::size_t pair_count() const { return entries_.size() / 2; }

  std::span<const Entry> row(TermId a) const {
    if (a >= dim_) return {};
    return {entries_.data() + offsets_[a], offsets_[a + 1] - offsets_[a]};
  }

  std::optional<double> weight(TermId a, TermId b) const {
    auto r = row(a);
    auto it = std::lower_bound(r.begin(), r.end(), b, [](const Entry &e, TermId t) { return e.term < t; });
    if (it == r.end() || it->term != b) return std::nullopt;
    return it->weight;
  }

  /// Upper-triangle triples sorted by (a, b).
  std::vector<Triple> triples() const {
    std::vector<Triple> out;
    out.reserve(pair_count());
    for (TermId a = 0; a < dim_; ++a)
      for (const auto &e : row(a))
        if (a < e.term) out.push_back({a, e.term, e.weight});
    return out;
  }

  friend bool operator==(const SliceCoocMatrix &x, const SliceCoocMatrix &y) {
    return x.slice_index_ == y.slice_index_ && x.dim_ == y.dim_ && x.offsets_ == y.offsets_ &&
           x.entries_ == y.entries_;
  }

private:
  std::size_t slice_index_ = 0;
  std::size_t dim_ = 0;
  MatrixOptions options_;
  std::vector<std::size_t> offsets_ = {0};
  std::vector<Entry> entries_;
};

/// Scores every pair, keeps per row the top_k co-occurrents (weight
/// descending, lower id first on ties) and restores symmetry by union: a pair
/// survives when either endpoint selected it.
inline SliceCoocMatrix build_slice_matrix(const SliceCounts &counts, const MatrixOptions &opt = {}) {
  const std::size_t dim = counts.term_units.size();
  struct Candidate {
    TermId a, b;
    double weight;
  };
  std::vector<Candidate> cand;
  for (const auto &p : counts.pairs) {
    if (p.joint < opt.min_joint) continue;
    auto w = significance(opt.measure, counts.table(p));
    if (!w || (opt.min_score && *w < *opt.min_score)) continue;
    cand.push_back({p.a, p.b, *w});
  }

  // Per-row candidate lists as (index into cand, other endpoint).
  std::vector<std::uint32_t> offsets(dim + 1, 0);
  for (const auto &c : cand) {
    ++offsets[c.a + 1];
    ++offsets[c.b + 1];
  }
  for (std::size_t i = 0; i < dim; ++i) offsets[i + 1] += offsets[i];
  struct Ref {
    std::uint32_t cand;
    TermId other;
  };
  std::vector<Ref> refs(offsets[dim]);
  {
    std::vector<std::uint32_t> fill(offsets.begin(), offsets.end() - 1);
    for (std::uint32_t i = 0; i < cand.size(); ++i) {
      refs[fill[cand[i].a]++] = {i, cand[i].b};
      refs[fill[cand[i].b]++] = {i, cand[i].a};
    }
  }

  std::vector<char> keep(cand.size(), 0);
  auto better = [&](const Ref &x, const Ref &y) {
    double wx = cand[x.cand].weight, wy = cand[y.cand].weight;
    return wx != wy ? wx > wy : x.other < y.other;
  };
  for (std::size_t a = 0; a < dim; ++a) {
    auto first = refs.begin() + offsets[a], last = refs.begin() + offsets[a + 1];
    auto n = static_cast<std::size_t>(last - first);
    if (n > opt.top_k) {
      std::nth_element(first, first + static_cast<std::ptrdiff_t>(opt.top_k), last, better);
      last = first + static_cast<std::ptrdiff_t>(opt.top_k);
    }
    for (auto it = first; it != last; ++it) keep[it->cand] = 1;
  }

  std::vector<SliceCoocMatrix::Triple> kept;
  for (std::size_t i = 0; i < cand.size(); ++i)
    if (keep[i]) kept.push_back({cand[i].a, cand[i].b, cand[i].weight});
  return SliceCoocMatrix(counts.slice_index, dim, kept, opt);
}

/// Counts and scores every slice; slices are independent and built in
/// parallel. Result i is slice i regardless of the worker count.
inline std::vector<SliceCoocMatrix> build_slice_matrices(const SlicedCorpus &corpus, const Vocabulary &vocab,
                                                         const Window &window, const MatrixOptions &opt,
                                                         unsigned workers = 1) {
  std::vector<SliceCoocMatrix> out(corpus.slice_count());
  parallel_for(out.size(), workers, [&](std::size_t t) {
    out[t] = build_slice_matrix(count_slice_cooccurrences(corpus, t, vocab, window), opt);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Context graph export

/// A word's row as (co-occurrent, weight), weight descending, lower id first
/// on ties.
inline std::vector<SliceCoocMatrix::Entry> ranked_row(const SliceCoocMatrix &m, TermId word) {
  auto r = m.row(word);
  std::vector<SliceCoocMatrix::Entry> out(r.begin(), r.end());
  std::sort(out.begin(), out.end(), [](const auto &x, const auto &y) {
    return x.weight != y.weight ? x.weight > y.weight : x.term < y.term;
  });
  return out;
}

/// Writes the word's context graph as a source,target,weight edge list and
/// returns the number of edges. A word without co-occurrents in this slice
/// gives a header-only file and a warning.
inline std::size_t export_context_graph(const SliceCoocMatrix &m, const Vocabulary &vocab, const std::string &word,
                                        std::ostream &out) {
  out << "source,target,weight\n";
  auto id = vocab.id(word);
  if (!id || m.row(*id).empty()) {
    Log::warn("'" + word + "' has no co-occurrents in slice " + std::to_string(m.slice_index()));
    return 0;
  }
  auto edges = ranked_row(m, *id);
  for (const auto &e : edges)
    csv::write_row(out, {word, vocab.term(e.term), format_number(e.weight)});
  return edges.size();
}

inline std::size_t export_context_graph(const SliceCoocMatrix &m, const Vocabulary &vocab, const std::string &word,
                                        const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return export_context_graph(m, vocab, word, out);
}

// ---------------------------------------------------------------------------
// Binary matrix persistence
//
// Layout (little-endian): "CTXM", u32 version, u64 slice index, u32 dim,
// u32 measure, u64 top_k, u64 pair count, then per pair u32 a, u32 b,
// f64 weight with a < b in (a, b) order.

namespace detail {
static_assert(std::endian::native == std::endian::little, "matrix files assume a little-endian host");

template <class T> void put(std::ostream &out, T v) { out.write(reinterpret_cast<const char *>(&v), sizeof v); }

template <class T> T get(std::istream &in) {
  T v{};
  if (!in.read(reinterpret_cast<char *>(&v), sizeof v)) throw InputError("truncated matrix file");
  return v;
}
inline constexpr char matrix_magic[4] = {'C', 'T', 'X', 'M'};
inline constexpr std::uint32_t matrix_version = 1;
} // namespace detail

inline void write_matrix(std::ostream &out, const SliceCoocMatrix &m) {
  out.write(detail::matrix_magic, 4);
  detail::put<std::uint32_t>(out, detail::matrix_version);
  detail::put<std::uint64_t>(out, m.slice_index());
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.options().measure));
  detail::put<std::uint64_t>(out, m.options().top_k);
  auto triples = m.triples();
  detail::put<std::uint64_t>(out, triples.size());
  for (const auto &t : triples) {
    detail::put<std::uint32_t>(out, t.a);
    detail::put<std::uint32_t>(out, t.b);
    detail::put<double>(out, t.weight);
  }
}

inline SliceCoocMatrix read_matrix(std::istream &in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, detail::matrix_magic, 4) != 0)
    throw InputError("not a matrix file");
  if (detail::get<std::uint32_t>(in) != detail::matrix_version) throw InputError("unsupported matrix version");
  auto slice = detail::get<std::uint64_t>(in);
  auto dim = detail::get<std::uint32_t>(in);
  MatrixOptions opt;
  opt.measure = static_cast<Measure>(detail::get<std::uint32_t>(in));
  opt.top_k = detail::get<std::uint64_t>(in);
  auto n = detail::get<std::uint64_t>(in);
  std::vector<SliceCoocMatrix::Triple> triples(n);
  for (auto &t : triples) {
    t.a = detail::get<std::uint32_t>(in);
    t.b = detail::get<std::uint32_t>(in);
    t.weight = detail::get<double>(in);
  }
  return SliceCoocMatrix(slice, dim, triples, opt);
}

inline void write_matrix(const std::filesystem::path &path, const SliceCoocMatrix &m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_matrix(out, m);
}

inline SliceCoocMatrix read_matrix(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  return read_matrix(in);
}

} // namespace ctxvol
