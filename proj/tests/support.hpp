#pragma once

// Shared test fixtures: temporary directories, synthetic corpora and a dense
// brute-force reference for the whole matrix -> rank -> volatility path.
// The reference deliberately shares no code with the library beyond the
// tokenized corpus and the vocabulary.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <quadmath.h>
#include <unistd.h>

#include "ctxvol/ctxvol.hpp"

namespace testing_support {

namespace fs = std::filesystem;

class TempDir {
public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("ctxvol-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const fs::path &path() const { return path_; }
  fs::path operator/(const std::string &name) const { return path_ / name; }

private:
  fs::path path_;
};

inline std::string read_file(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path &p, const std::string &content) {
  std::ofstream(p, std::ios::binary) << content;
}

inline ctxvol::Document doc(std::string id, std::string date, std::string text) {
  return ctxvol::Document{std::move(id), *ctxvol::parse_date(date), std::move(text), {}};
}

/// Joins token lists into text that the tokenizer splits back unchanged.
inline std::string to_text(const std::vector<std::vector<std::string>> &sentences) {
  std::string out;
  for (const auto &s : sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? " " : "") + s[i];
    out += ". ";
  }
  return out;
}

inline std::string month_date(int month_index, int day = 10, int base_year = 2005) {
  int y = base_year + month_index / 12, m = month_index % 12 + 1;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, day);
  return buf;
}

/// Term name for an integer id ("t007").
inline std::string term_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "t%03d", i);
  return buf;
}

struct RandomCorpusSpec {
  int vocab = 30;
  int slices = 6;
  int docs_per_slice = 5;
  int sentences_per_doc = 6;
  int min_tokens = 2;
  int max_tokens = 7;
  double zipf = 1.0;
  unsigned seed = 1;
};

/// Monthly documents whose tokens are drawn from a Zipf-like distribution.
inline std::vector<ctxvol::Document> random_documents(const RandomCorpusSpec &spec) {
  std::mt19937 rng(spec.seed);
  std::vector<double> w(spec.vocab);
  for (int i = 0; i < spec.vocab; ++i) w[i] = 1.0 / std::pow(i + 1, spec.zipf);
  std::discrete_distribution<int> pick(w.begin(), w.end());
  std::uniform_int_distribution<int> len(spec.min_tokens, spec.max_tokens);
  std::uniform_int_distribution<int> day(1, 28);
  std::vector<ctxvol::Document> docs;
  for (int t = 0; t < spec.slices; ++t)
    for (int d = 0; d < spec.docs_per_slice; ++d) {
      std::vector<std::vector<std::string>> sents(spec.sentences_per_doc);
      for (auto &s : sents) {
        int n = len(rng);
        for (int k = 0; k < n; ++k) s.push_back(term_name(pick(rng)));
      }
      docs.push_back(doc("d" + std::to_string(t) + "_" + std::to_string(d), month_date(t, day(rng)), to_text(sents)));
    }
  return docs;
}

inline ctxvol::SlicedCorpus tokenized_corpus(std::vector<ctxvol::Document> docs,
                                              ctxvol::Granularity g = {}) {
  auto c = ctxvol::assign_time_slices(std::move(docs), g);
  ctxvol::tokenize_corpus(c);
  return c;
}

inline ctxvol::PruningConfig no_pruning() {
  ctxvol::PruningConfig p;
  p.absolute = false;
  p.relative = false;
  return p;
}

// ---------------------------------------------------------------------------
// Dense reference

namespace reference {

using Dense = std::vector<std::vector<double>>; // V x V, 0 = absent

/// Joint sentence counts by testing every pair against every sentence.
inline std::vector<std::vector<long>> joint_counts(const ctxvol::SlicedCorpus &c, std::size_t t,
                                                   const ctxvol::Vocabulary &v, std::vector<long> &unit_counts,
                                                   long &units) {
  const std::size_t V = v.size();
  std::vector<std::vector<long>> joint(V, std::vector<long>(V, 0));
  unit_counts.assign(V, 0);
  units = 0;
  for (auto d : c.slice(t).docs)
    for (const auto &sentence : c.documents()[d].sentences) {
      ++units;
      std::vector<bool> has(V, false);
      for (const auto &tok : sentence)
        if (auto id = v.id(tok)) has[*id] = true;
      for (std::size_t a = 0; a < V; ++a) {
        if (!has[a]) continue;
        ++unit_counts[a];
        for (std::size_t b = 0; b < V; ++b)
          if (b != a && has[b]) ++joint[a][b];
      }
    }
  return joint;
}

/// G^2 = 2 sum O ln(O / E), E from the margins.
// Direct observed-over-expected sum in quad precision, rounded once.
inline double g_squared(double o11, double o12, double o21, double o22) {
  using q = __float128;
  const q n = q(o11) + o12 + o21 + o22;
  const q obs[2][2] = {{o11, o12}, {o21, o22}};
  const q row[2] = {obs[0][0] + obs[0][1], obs[1][0] + obs[1][1]};
  const q col[2] = {obs[0][0] + obs[1][0], obs[0][1] + obs[1][1]};
  q g = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      if (obs[i][j] > 0) g += obs[i][j] * logq(obs[i][j] * n / (row[i] * col[j]));
  return double(2 * g);
}

/// Dense LLR matrix with per-row top_k selection and union symmetrization.
inline Dense slice_matrix(const ctxvol::SlicedCorpus &c, std::size_t t, const ctxvol::Vocabulary &v,
                          std::size_t top_k) {
  const std::size_t V = v.size();
  std::vector<long> n;
  long units = 0;
  auto joint = joint_counts(c, t, v, n, units);
  Dense w(V, std::vector<double>(V, 0.0));
  for (std::size_t a = 0; a < V; ++a)
    for (std::size_t b = a + 1; b < V; ++b) {
      double o11 = joint[a][b];
      if (o11 <= 0) continue;
      double expected = static_cast<double>(n[a]) * n[b] / units;
      if (o11 <= expected) continue;
      double g = g_squared(o11, n[a] - o11, n[b] - o11, units - n[a] - n[b] + o11);
      if (g > 0) w[a][b] = w[b][a] = g;
    }
  Dense kept(V, std::vector<double>(V, 0.0));
  for (std::size_t a = 0; a < V; ++a) {
    std::vector<std::size_t> idx;
    for (std::size_t b = 0; b < V; ++b)
      if (w[a][b] > 0) idx.push_back(b);
    std::stable_sort(idx.begin(), idx.end(), [&](auto x, auto y) { return w[a][x] > w[a][y]; });
    for (std::size_t k = 0; k < idx.size() && k < top_k; ++k) kept[a][idx[k]] = kept[idx[k]][a] = w[a][idx[k]];
  }
  return kept;
}

/// Fractional rank of every present co-occurrent of a in the row;
/// 0 marks absence.
inline std::vector<double> ranks(const Dense &m, std::size_t a) {
  const std::size_t V = m.size();
  std::vector<double> r(V, 0.0);
  for (std::size_t b = 0; b < V; ++b) {
    if (m[a][b] <= 0) continue;
    double greater = 0, equal = 0;
    for (std::size_t x = 0; x < V; ++x) {
      if (m[a][x] > m[a][b]) ++greater;
      else if (m[a][x] == m[a][b]) ++equal;
    }
    r[b] = 1 + greater + (equal - 1) / 2;
  }
  return r;
}

/// Quantile at 1-based position p = 1 + q (n - 1).
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  double p = 1 + q * (v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(p)), hi = static_cast<std::size_t>(std::ceil(p));
  return v[lo - 1] + (p - lo) * (v[hi - 1] - v[lo - 1]);
}

inline double iqr(const std::vector<double> &v) { return quantile(v, 0.75) - quantile(v, 0.25); }

/// CV of word a over slices [from, to) from dense matrices.
inline double volatility(const std::vector<Dense> &slices, std::size_t a, std::size_t from, std::size_t to,
                         bool skip_absent = false) {
  const std::size_t V = slices.front().size();
  std::vector<std::vector<double>> table; // per slice rank vector
  std::vector<double> fill;
  for (std::size_t t = from; t < to; ++t) {
    table.push_back(ranks(slices[t], a));
    fill.push_back(1 + std::count_if(table.back().begin(), table.back().end(), [](double r) { return r > 0; }));
  }
  double sum = 0;
  int count = 0;
  for (std::size_t b = 0; b < V; ++b) {
    std::vector<double> values;
    bool seen = false;
    for (std::size_t k = 0; k < table.size(); ++k) {
      if (table[k][b] > 0) {
        seen = true;
        values.push_back(table[k][b]);
      } else if (!skip_absent) {
        values.push_back(fill[k]);
      }
    }
    if (!seen) continue;
    sum += iqr(values);
    ++count;
  }
  return count ? sum / count : 0.0;
}

} // namespace reference

} // namespace testing_support
