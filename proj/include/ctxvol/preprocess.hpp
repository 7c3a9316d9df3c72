#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "parallel.hpp"

namespace ctxvol {

using TermId = std::uint32_t;
using TermSet = std::unordered_set<std::string>;
using LemmaMap = std::unordered_map<std::string, std::string>;

struct TokenizerOptions {
  bool lowercase = true;
  const LemmaMap *lemmas = nullptr; // applied after lowercasing
};

namespace detail {

/// Decodes one UTF-8 sequence at s[i]; returns the code point and advances i.
/// Invalid bytes decode to U+FFFD and consume one byte.
inline char32_t next_code_point(std::string_view s, std::size_t &i) {
  auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = b0 >= 0xF0 && b0 < 0xF8 ? 4 : b0 >= 0xE0 ? 3 : b0 >= 0xC2 && b0 < 0xE0 ? 2 : 0;
  if (len == 0 || i + len > s.size()) {
    ++i;
    return 0xFFFD;
  }
  char32_t cp = b0 & (0x7F >> len);
  for (int k = 1; k < len; ++k) {
    auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return cp;
}

inline void append_utf8(std::string &out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

/// Letters and digits: ASCII alphanumerics plus non-ASCII code points outside
/// the Latin-1 symbol block, the punctuation/symbol blocks and CJK punctuation.
inline bool is_word_char(char32_t cp) {
  if (cp < 0x80)
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (cp == 0xFFFD) return false;
  if (cp < 0xC0) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
  return true;
}

/// Simple case folding for ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic.
inline char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp < 0x80) return cp;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp >= 0x100 && cp <= 0x137 && cp % 2 == 0) return cp + 1;
  if (cp >= 0x139 && cp <= 0x148 && cp % 2 == 1) return cp + 1;
  if (cp >= 0x14A && cp <= 0x177 && cp % 2 == 0) return cp + 1;
  if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 32;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  return cp;
}

inline bool is_terminal(char32_t cp) { return cp == '.' || cp == '!' || cp == '?'; }

inline bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' ||
         cp == 0xA0;
}

} // namespace detail

/// Splits text into sentences of tokens. A sentence ends at '.', '!' or '?'
/// followed by whitespace (or the end of the text); tokens are maximal runs of
/// letters/digits. Sentences without tokens are dropped.
inline std::vector<Sentence> segment_and_tokenize(std::string_view text, const TokenizerOptions &opt = {}) {
  std::vector<Sentence> sentences;
  Sentence current;
  std::string token;

  auto flush_token = [&] {
    if (token.empty()) return;
    if (opt.lemmas) {
      if (auto it = opt.lemmas->find(token); it != opt.lemmas->end()) token = it->second;
    }
    if (!token.empty()) current.push_back(std::move(token));
    token.clear();
  };
  auto flush_sentence = [&] {
    flush_token();
    if (!current.empty()) sentences.push_back(std::move(current));
    current.clear();
  };

  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = detail::next_code_point(text, i);
    if (detail::is_word_char(cp)) {
      detail::append_utf8(token, opt.lowercase ? detail::to_lower(cp) : cp);
      continue;
    }
    flush_token();
    if (detail::is_terminal(cp)) {
      std::size_t j = i;
      if (j >= text.size() || detail::is_space(detail::next_code_point(text, j))) flush_sentence();
    }
  }
  flush_sentence();
  return sentences;
}

/// Tokenizes every document in place; each document is independent so the
/// work is spread over `workers` threads.
inline void tokenize_corpus(SlicedCorpus &corpus, const TokenizerOptions &opt = {},
                            unsigned workers = 1) {
  const auto &docs = corpus.documents();
  std::vector<std::vector<Sentence>> out(docs.size());
  parallel_for(docs.size(), workers, [&](std::size_t i) { out[i] = segment_and_tokenize(docs[i].text, opt); });
  for (std::size_t i = 0; i < out.size(); ++i) corpus.set_sentences(i, std::move(out[i]));
  corpus.mark_tokenized();
}

// ---------------------------------------------------------------------------
// Term lists

namespace detail {
inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

inline std::ifstream open_list(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read term list " + path.string());
  return in;
}
} // namespace detail

/// One term per line; blank lines ignored.
inline TermSet load_term_set(const std::filesystem::path &path) {
  auto in = detail::open_list(path);
  TermSet terms;
  std::string line;
  while (std::getline(in, line)) {
    auto t = detail::trim(line);
    if (!t.empty()) terms.emplace(t);
  }
  return terms;
}

/// "form<TAB>lemma" per line.
inline LemmaMap load_lemma_map(const std::filesystem::path &path) {
  auto in = detail::open_list(path);
  LemmaMap map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = detail::trim(line);
    if (t.empty()) continue;
    auto tab = t.find('\t');
    if (tab == std::string_view::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected form<TAB>lemma");
    map[std::string(detail::trim(t.substr(0, tab)))] = std::string(detail::trim(t.substr(tab + 1)));
  }
  return map;
}

// ---------------------------------------------------------------------------
// Vocabulary

struct PruningConfig {
  bool absolute = true;
  std::size_t min_doc_freq = 3;
  bool relative = true;
  double relative_low = 0.01;
  double relative_high = 0.99;
  TermSet stopwords;
  TermSet blocklist; // entity deletion list, treated like stopwords

  void validate() const {
    if (min_doc_freq < 1) throw ConfigError("min_doc_freq must be >= 1");
    if (!(relative_low >= 0.0 && relative_low < relative_high && relative_high <= 1.0))
      throw ConfigError("relative pruning bounds must satisfy 0 <= low < high <= 1");
  }
};

/// Dense term <-> id mapping of the pruned vocabulary with document and
/// per-slice occurrence counts. Ids are assigned by descending corpus
/// frequency, ties broken lexicographically.
class Vocabulary {
public:
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  std::optional<TermId> id(const std::string &term) const {
    auto it = ids_.find(term);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(const std::string &term) const { return ids_.count(term) > 0; }
  const std::string &term(TermId id) const { return terms_.at(id); }
  const std::vector<std::string> &terms() const { return terms_; }

  std::size_t doc_freq(TermId id) const { return doc_freq_.at(id); }
  std::uint64_t count(TermId id) const { return count_.at(id); }
  /// Occurrences of the term in slice t.
  std::uint64_t occurrences(TermId id, std::size_t t) const { return slice_counts_.at(id * slices_ + t); }

  std::size_t document_count() const { return documents_; }
  std::size_t slices() const { return slices_; }
  /// All tokens in slice t, pruned or not.
  std::uint64_t slice_tokens(std::size_t t) const { return slice_tokens_.at(t); }

  struct Exclusions {
    std::size_t stopword = 0;
    std::size_t absolute = 0;
    std::size_t relative = 0;
  };
  const Exclusions &exclusions() const { return excluded_; }

private:
  friend Vocabulary build_vocabulary(const SlicedCorpus &, const PruningConfig &);

  std::vector<std::string> terms_;
  std::unordered_map<std::string, TermId> ids_;
  std::vector<std::size_t> doc_freq_;
  std::vector<std::uint64_t> count_;
  std::vector<std::uint64_t> slice_counts_; // id-major, slices_ per term
  std::vector<std::uint64_t> slice_tokens_;
  std::size_t documents_ = 0;
  std::size_t slices_ = 0;
  Exclusions excluded_;
};

/// Counts terms over a tokenized corpus and applies, in order, the stopword
/// and blocklist filter, the absolute document-frequency floor and the
/// relative document-frequency band [low, high]. Throws InputError when
/// nothing survives.
inline Vocabulary build_vocabulary(const SlicedCorpus &corpus, const PruningConfig &config) {
  config.validate();
  if (!corpus.tokenized()) throw InputError("build_vocabulary needs a tokenized corpus");

  struct Stats {
    std::size_t df = 0;
    std::uint64_t count = 0;
    std::size_t last_doc = static_cast<std::size_t>(-1);
    std::vector<std::uint64_t> per_slice;
  };
  const std::size_t T = corpus.slice_count();
  const std::size_t D = corpus.documents().size();
  std::unordered_map<std::string, Stats> stats;
  std::vector<std::uint64_t> slice_tokens(T, 0);

  for (std::size_t d = 0; d < D; ++d) {
    const std::size_t t = corpus.slice_of(d);
    for (const auto &sentence : corpus.documents()[d].sentences) {
      slice_tokens[t] += sentence.size();
      for (const auto &tok : sentence) {
        auto &s = stats[tok];
        if (s.per_slice.empty()) s.per_slice.assign(T, 0);
        ++s.count;
        ++s.per_slice[t];
        if (s.last_doc != d) {
          s.last_doc = d;
          ++s.df;
        }
      }
    }
  }

  Vocabulary v;
  v.documents_ = D;
  v.slices_ = T;
  v.slice_tokens_ = std::move(slice_tokens);

  std::vector<std::pair<const std::string *, const Stats *>> kept;
  for (const auto &[term, s] : stats) {
    if (config.stopwords.count(term) || config.blocklist.count(term)) {
      ++v.excluded_.stopword;
      continue;
    }
    if (config.absolute && s.df < config.min_doc_freq) {
      ++v.excluded_.absolute;
      continue;
    }
    if (config.relative) {
      double p = static_cast<double>(s.df) / static_cast<double>(D);
      if (p < config.relative_low || p > config.relative_high) {
        ++v.excluded_.relative;
        continue;
      }
    }
    kept.emplace_back(&term, &s);
  }
  if (kept.empty())
    throw InputError("vocabulary is empty after pruning (excluded: " + std::to_string(v.excluded_.stopword) +
                     " stopword/blocklist, " + std::to_string(v.excluded_.absolute) + " below min_doc_freq, " +
                     std::to_string(v.excluded_.relative) + " outside relative band)");

  std::sort(kept.begin(), kept.end(), [](const auto &a, const auto &b) {
    if (a.second->count != b.second->count) return a.second->count > b.second->count;
    return *a.first < *b.first;
  });

  v.terms_.reserve(kept.size());
  v.slice_counts_.reserve(kept.size() * T);
  for (const auto &[term, s] : kept) {
    auto id = static_cast<TermId>(v.terms_.size());
    v.terms_.push_back(*term);
    v.ids_.emplace(*term, id);
    v.doc_freq_.push_back(s->df);
    v.count_.push_back(s->count);
    v.slice_counts_.insert(v.slice_counts_.end(), s->per_slice.begin(), s->per_slice.end());
  }
  return v;
}

} // namespace ctxvol
