#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace ctxvol;
using testing_support::doc;
namespace ref = testing_support::reference;

namespace {

struct CapturedLog {
  int warnings = 0;
  CapturedLog() {
    Log::set_sink([this](Log::Level level, std::string_view) { warnings += level == Log::Level::warning; });
  }
  ~CapturedLog() { Log::reset(); }
};

struct Fixture {
  SlicedCorpus corpus;
  Vocabulary vocab;
};

Fixture fixture(std::vector<Document> docs, PruningConfig p = testing_support::no_pruning()) {
  auto c = testing_support::tokenized_corpus(std::move(docs));
  auto v = build_vocabulary(c, p);
  return {std::move(c), std::move(v)};
}

Fixture random_fixture(unsigned seed, int vocab = 40, int slices = 3) {
  testing_support::RandomCorpusSpec spec;
  spec.vocab = vocab;
  spec.slices = slices;
  spec.seed = seed;
  spec.docs_per_slice = 6;
  spec.sentences_per_doc = 5;
  return fixture(testing_support::random_documents(spec));
}

std::uint32_t joint_of(const SliceCounts &c, TermId a, TermId b) {
  if (a > b) std::swap(a, b);
  for (const auto &p : c.pairs)
    if (p.a == a && p.b == b) return p.joint;
  return 0;
}

SliceCounts hand_counts(std::uint64_t units, std::vector<std::uint64_t> term_units, std::vector<PairCount> pairs) {
  SliceCounts c;
  c.units = units;
  c.term_units = std::move(term_units);
  c.pairs = std::move(pairs);
  return c;
}

void expect_matches_dense(const SliceCoocMatrix &m, const ref::Dense &d) {
  ASSERT_EQ(m.dim(), d.size());
  std::size_t dense_pairs = 0;
  for (TermId a = 0; a < d.size(); ++a)
    for (TermId b = 0; b < d.size(); ++b) {
      auto w = m.weight(a, b);
      if (d[a][b] > 0) {
        if (a < b) ++dense_pairs;
        ASSERT_TRUE(w) << a << ',' << b;
        EXPECT_NEAR(*w, d[a][b], 1e-9 * d[a][b]);
      } else {
        EXPECT_FALSE(w) << a << ',' << b;
      }
    }
  EXPECT_EQ(m.pair_count(), dense_pairs);
}

} // namespace

TEST(Counting, PairCountsOncePerSentence) {
  auto f = fixture({doc("a", "2005-01-01", "bank kredit bank.")});
  auto c = count_slice_cooccurrences(f.corpus, 0, f.vocab);
  EXPECT_EQ(c.units, 1u);
  EXPECT_EQ(joint_of(c, *f.vocab.id("bank"), *f.vocab.id("kredit")), 1u);
  EXPECT_EQ(c.term_units[*f.vocab.id("bank")], 1u);

  auto g = fixture({doc("a", "2005-01-01", "bank kredit. kredit und bank!")});
  auto c2 = count_slice_cooccurrences(g.corpus, 0, g.vocab);
  EXPECT_EQ(joint_of(c2, *g.vocab.id("bank"), *g.vocab.id("kredit")), 2u);
}

TEST(Counting, OutOfVocabularyTokensAreIgnored) {
  auto p = testing_support::no_pruning();
  p.stopwords = {"und"};
  auto f = fixture({doc("a", "2005-01-01", "bank und kredit.")}, p);
  auto c = count_slice_cooccurrences(f.corpus, 0, f.vocab);
  EXPECT_EQ(c.pairs.size(), 1u);
}

TEST(Counting, EmptySliceGivesEmptyCounts) {
  auto f = fixture({doc("a", "2005-01-01", "bank kredit."), doc("b", "2005-03-01", "bank.")});
  auto c = count_slice_cooccurrences(f.corpus, 1, f.vocab);
  EXPECT_EQ(c.units, 0u);
  EXPECT_TRUE(c.pairs.empty());
  auto m = build_slice_matrix(c);
  EXPECT_EQ(m.pair_count(), 0u);
}

TEST(Counting, SentenceCountsMatchNestedLoopOracle) {
  for (unsigned seed = 1; seed <= 4; ++seed) {
    testing_support::RandomCorpusSpec spec;
    spec.slices = 1;
    spec.docs_per_slice = 10;
    spec.sentences_per_doc = 5; // 50 sentences
    spec.seed = seed;
    auto f = fixture(testing_support::random_documents(spec));
    std::vector<long> n;
    long units = 0;
    auto joint = ref::joint_counts(f.corpus, 0, f.vocab, n, units);
    auto c = count_slice_cooccurrences(f.corpus, 0, f.vocab);
    EXPECT_EQ(units, 50);
    EXPECT_EQ(c.units, 50u);
    std::size_t nonzero = 0;
    for (TermId a = 0; a < f.vocab.size(); ++a) {
      EXPECT_EQ(c.term_units[a], static_cast<std::uint64_t>(n[a]));
      for (TermId b = a + 1; b < f.vocab.size(); ++b) {
        EXPECT_EQ(joint_of(c, a, b), static_cast<std::uint32_t>(joint[a][b]));
        nonzero += joint[a][b] > 0;
      }
    }
    EXPECT_EQ(c.pairs.size(), nonzero);
    EXPECT_TRUE(std::is_sorted(c.pairs.begin(), c.pairs.end(),
                               [](auto &x, auto &y) { return x.a != y.a ? x.a < y.a : x.b < y.b; }));
  }
}

TEST(Counting, TokenWindowMatchesPositionOracle) {
  testing_support::RandomCorpusSpec spec;
  spec.slices = 1;
  spec.min_tokens = 1;
  spec.max_tokens = 20;
  spec.seed = 9;
  auto f = fixture(testing_support::random_documents(spec));
  for (std::size_t k : {1u, 2u, 5u}) {
    const std::size_t V = f.vocab.size();
    std::vector<std::vector<std::uint32_t>> joint(V, std::vector<std::uint32_t>(V, 0));
    std::vector<std::uint64_t> n(V, 0);
    std::uint64_t units = 0;
    for (const auto &d : f.corpus.documents())
      for (const auto &s : d.sentences)
        for (std::size_t p = 0; p < s.size(); ++p) {
          ++units;
          std::set<TermId> in;
          for (std::size_t q = 0; q < s.size(); ++q)
            if ((q > p ? q - p : p - q) <= k) in.insert(*f.vocab.id(s[q]));
          for (auto a : in) {
            ++n[a];
            for (auto b : in)
              if (a < b) ++joint[a][b];
          }
        }
    auto c = count_slice_cooccurrences(f.corpus, 0, f.vocab, {Window::Kind::tokens, k});
    EXPECT_EQ(c.units, units);
    EXPECT_EQ(c.term_units, n);
    for (TermId a = 0; a < V; ++a)
      for (TermId b = a + 1; b < V; ++b) EXPECT_EQ(joint_of(c, a, b), joint[a][b]) << k;
  }
}

TEST(SliceMatrix, TopKSelectsFromEachRowThenUnites) {
  // a=0, b=1, c=2, d=3; a's row {b strong, c weaker}; c's row {d strongest, a}
  auto counts = hand_counts(100, {10, 10, 10, 10}, {{0, 1, 8}, {0, 2, 4}, {2, 3, 10}});
  auto w_ab = *significance(Measure::llr, counts.table(counts.pairs[0]));
  auto w_ac = *significance(Measure::llr, counts.table(counts.pairs[1]));
  auto w_cd = *significance(Measure::llr, counts.table(counts.pairs[2]));
  ASSERT_GT(w_ab, w_ac);
  ASSERT_GT(w_cd, w_ac);

  MatrixOptions opt;
  opt.top_k = 1;
  auto m = build_slice_matrix(counts, opt);
  EXPECT_EQ(m.weight(0, 1), w_ab);
  EXPECT_EQ(m.weight(2, 3), w_cd);
  EXPECT_FALSE(m.weight(0, 2));
  EXPECT_EQ(m.pair_count(), 2u);

  opt.top_k = 2;
  EXPECT_EQ(build_slice_matrix(counts, opt).pair_count(), 3u);
}

TEST(SliceMatrix, UnionCanExceedTopKInARow) {
  // hub 0 co-occurs with 1..3; each leaf's only partner is the hub
  auto counts = hand_counts(100, {30, 10, 10, 10}, {{0, 1, 9}, {0, 2, 8}, {0, 3, 7}});
  MatrixOptions opt;
  opt.top_k = 1;
  auto m = build_slice_matrix(counts, opt);
  EXPECT_EQ(m.row(0).size(), 3u);
}

TEST(SliceMatrix, TiesPreferLowerTermId) {
  auto counts = hand_counts(100, {10, 10, 10, 10}, {{0, 1, 5}, {0, 2, 5}, {0, 3, 5}});
  MatrixOptions opt;
  opt.top_k = 1;
  auto m = build_slice_matrix(counts, opt);
  // row 0 picks 1; rows 2 and 3 each pick 0 through the union
  EXPECT_TRUE(m.weight(0, 1));
  EXPECT_EQ(m.row(0).size(), 3u);

  auto lone = hand_counts(100, {10, 10, 10, 10, 10}, {{0, 1, 5}, {0, 2, 5}, {1, 2, 5}});
  opt.top_k = 1;
  auto m2 = build_slice_matrix(lone, opt);
  // 0 -> 1, 1 -> 0, 2 -> 0
  EXPECT_TRUE(m2.weight(0, 1));
  EXPECT_TRUE(m2.weight(0, 2));
  EXPECT_FALSE(m2.weight(1, 2));
}

TEST(SliceMatrix, MinJointDropsRarePairs) {
  auto counts = hand_counts(50, {6, 6, 6, 6}, {{0, 1, 1}, {0, 2, 5}, {1, 3, 1}, {2, 3, 3}});
  MatrixOptions opt;
  opt.min_joint = 2;
  auto m = build_slice_matrix(counts, opt);
  EXPECT_FALSE(m.weight(0, 1));
  EXPECT_FALSE(m.weight(1, 3));
  EXPECT_TRUE(m.weight(0, 2));
  EXPECT_TRUE(m.weight(2, 3));
}

TEST(SliceMatrix, MinScoreCutoff) {
  auto counts = hand_counts(100, {10, 10, 10, 10}, {{0, 1, 8}, {0, 2, 4}, {2, 3, 10}});
  auto w_ac = *significance(Measure::llr, counts.table(counts.pairs[1]));
  MatrixOptions opt;
  opt.min_score = w_ac + 1e-9;
  auto m = build_slice_matrix(counts, opt);
  EXPECT_EQ(m.pair_count(), 2u);
}

TEST(SliceMatrix, MatchesSortOracleForEveryTopK) {
  for (unsigned seed = 1; seed <= 4; ++seed) {
    auto f = random_fixture(seed, 45);
    for (std::size_t top_k : {1u, 2u, 3u, 5u, 10u, 200u}) {
      MatrixOptions opt;
      opt.top_k = top_k;
      for (std::size_t t = 0; t < f.corpus.slice_count(); ++t) {
        auto m = build_slice_matrix(count_slice_cooccurrences(f.corpus, t, f.vocab), opt);
        expect_matches_dense(m, ref::slice_matrix(f.corpus, t, f.vocab, top_k));
      }
    }
  }
}

TEST(SliceMatrix, InvariantsHoldForEveryMeasure) {
  auto f = random_fixture(12, 50, 4);
  for (auto measure : {Measure::llr, Measure::dice, Measure::mi, Measure::poisson}) {
    MatrixOptions opt;
    opt.measure = measure;
    opt.top_k = 6;
    auto ms = build_slice_matrices(f.corpus, f.vocab, {}, opt);
    for (const auto &m : ms) {
      EXPECT_GT(m.pair_count(), 0u);
      for (TermId a = 0; a < m.dim(); ++a) {
        EXPECT_FALSE(m.weight(a, a));
        for (const auto &e : m.row(a)) {
          EXPECT_GT(e.weight, 0.0);
          EXPECT_EQ(m.weight(e.term, a), e.weight);
          if (measure == Measure::dice) {
            EXPECT_LE(e.weight, 1.0);
          }
        }
      }
    }
  }
}

TEST(SliceMatrix, WorkerCountDoesNotChangeMatrices) {
  auto f = random_fixture(5, 40, 8);
  MatrixOptions opt;
  opt.top_k = 7;
  auto one = build_slice_matrices(f.corpus, f.vocab, {}, opt, 1);
  auto many = build_slice_matrices(f.corpus, f.vocab, {}, opt, 6);
  ASSERT_EQ(one.size(), many.size());
  for (std::size_t t = 0; t < one.size(); ++t) {
    EXPECT_EQ(one[t], many[t]);
    EXPECT_EQ(one[t].slice_index(), t);
  }
}

TEST(ContextGraph, ThreeCooccurrentsGiveThreeEdges) {
  auto f = fixture({doc("a", "2005-01-01", "kredit bank. kredit zins. kredit euro. bank zins. haus. hof. weg. tor. dach. land. see.")});
  auto m = build_slice_matrix(count_slice_cooccurrences(f.corpus, 0, f.vocab));
  std::ostringstream out;
  EXPECT_EQ(export_context_graph(m, f.vocab, "kredit", out), 3u);
  std::istringstream in(out.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 4);
}

TEST(ContextGraph, AbsentWordGivesHeaderOnlyAndWarning) {
  CapturedLog log;
  auto f = fixture({doc("a", "2005-01-01", "kredit bank. haus.")});
  auto m = build_slice_matrix(count_slice_cooccurrences(f.corpus, 0, f.vocab));
  std::ostringstream out;
  EXPECT_EQ(export_context_graph(m, f.vocab, "haus", out), 0u);
  EXPECT_EQ(export_context_graph(m, f.vocab, "unbekannt", out), 0u);
  EXPECT_EQ(out.str(), "source,target,weight\nsource,target,weight\n");
  EXPECT_EQ(log.warnings, 2);
}

TEST(ContextGraph, EdgesEqualMatrixRowReadBack) {
  std::mt19937 rng(2009);
  const std::vector<std::string> context = {"bank", "zins", "krise", "lehman", "rettung", "euro", "haus", "staat"};
  std::uniform_int_distribution<int> pick(0, static_cast<int>(context.size()) - 1), len(1, 4);
  std::vector<Document> docs;
  for (int d = 0; d < 40; ++d) {
    std::string text;
    for (int s = 0; s < 5; ++s) {
      if (s % 2 == 0) text += "kredit ";
      for (int k = len(rng); k > 0; --k) text += context[pick(rng)] + " ";
      text += ". ";
    }
    docs.push_back(doc("d" + std::to_string(d), "2009-0" + std::to_string(1 + d % 9) + "-15", text));
  }
  auto f = fixture(docs);
  auto m = build_slice_matrices(f.corpus, f.vocab, {}, {})[3];
  testing_support::TempDir dir;
  auto n = export_context_graph(m, f.vocab, "kredit", dir / "kredit.csv");
  auto id = *f.vocab.id("kredit");
  EXPECT_EQ(n, m.row(id).size());
  EXPECT_GT(n, 0u);

  std::istringstream in(testing_support::read_file(dir / "kredit.csv"));
  csv::Reader reader(in);
  EXPECT_EQ(reader.next()->fields, (std::vector<std::string>{"source", "target", "weight"}));
  double previous = std::numeric_limits<double>::infinity();
  std::size_t rows = 0;
  while (auto rec = reader.next()) {
    ASSERT_EQ(rec->fields.size(), 3u);
    EXPECT_EQ(rec->fields[0], "kredit");
    double w = std::stod(rec->fields[2]);
    EXPECT_EQ(m.weight(id, *f.vocab.id(rec->fields[1])), w);
    EXPECT_LE(w, previous);
    previous = w;
    ++rows;
  }
  EXPECT_EQ(rows, n);
}

TEST(MatrixFile, BinaryRoundTrip) {
  auto f = random_fixture(21, 50, 3);
  MatrixOptions opt;
  opt.top_k = 9;
  opt.measure = Measure::dice;
  for (const auto &m : build_slice_matrices(f.corpus, f.vocab, {}, opt)) {
    std::stringstream buf;
    write_matrix(buf, m);
    auto back = read_matrix(buf);
    EXPECT_EQ(back, m);
    EXPECT_EQ(back.options().top_k, 9u);
    EXPECT_EQ(back.options().measure, Measure::dice);
    std::string bytes = buf.str();
    std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
    if (m.pair_count() > 0) {
      EXPECT_THROW(read_matrix(truncated), InputError);
    }
  }
  std::istringstream junk("not a matrix");
  EXPECT_THROW(read_matrix(junk), InputError);
}
