#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <sstream>

#include "oracle.hpp"
#include "raam/analysis.hpp"
#include "raam/error.hpp"
#include "raam/parser.hpp"

using namespace raam;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Io;
}

// Tokens t0, t1, ... with strictly decreasing frequency, so t<i> gets id
// kSpecialCount + i.
Vocab ranked_vocab(std::size_t words) {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < words; ++i) {
    for (std::size_t c = 0; c < words - i; ++c) tokens.push_back("t" + std::to_string(i));
  }
  return Vocab::build(tokens, words);
}

Bracketing from_text(const std::string& text) { return parse_bracketing(text).shape; }

}  // namespace

TEST(NearestWords, TwinIsTopNeighborAtZero) {
  const Vocab vocab = ranked_vocab(6);
  Model m = oracle::random_model(4, vocab.size(), 1);
  m.embed.row(5) = m.embed.row(3);
  const auto t = nearest_words(m, vocab, "t1", 1);
  ASSERT_EQ(t.neighbors.size(), 1u);
  EXPECT_EQ(t.neighbors[0].tokens, std::vector<std::string>{"t3"});
  EXPECT_EQ(t.neighbors[0].distance, 0.0);
  EXPECT_EQ(t.rank, 2u);
}

TEST(NearestWords, MatchesBruteForceScan) {
  const Vocab vocab = ranked_vocab(20);
  const Model m = oracle::random_model(5, vocab.size(), 2);
  for (Metric metric : {Metric::Euclidean, Metric::Cosine}) {
    const auto t = nearest_words(m, vocab, "t4", 8, metric);
    const WordId q = *vocab.find("t4");
    std::vector<std::pair<double, WordId>> all;
    for (WordId w = 0; w < vocab.size(); ++w) {
      if (w == q) continue;
      double dd = 0.0, dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t c = 0; c < m.dim(); ++c) {
        const double a = m.embed(w, c), b = m.embed(q, c);
        dd += (a - b) * (a - b);
        dot += a * b;
        na += a * a;
        nb += b * b;
      }
      all.emplace_back(metric == Metric::Euclidean ? std::sqrt(dd) : 1.0 - dot / std::sqrt(na * nb), w);
    }
    std::sort(all.begin(), all.end());
    ASSERT_EQ(t.neighbors.size(), 8u);
    for (std::size_t i = 0; i < 8; ++i) {
      EXPECT_EQ(t.neighbors[i].tokens[0], vocab.token(all[i].second));
      EXPECT_NEAR(t.neighbors[i].distance, all[i].first, 1e-12);
      if (i) EXPECT_LE(t.neighbors[i - 1].distance, t.neighbors[i].distance);
    }
  }
}

TEST(NearestWords, Errors) {
  const Vocab vocab = ranked_vocab(5);
  const Model m = oracle::random_model(3, vocab.size(), 3);
  try {
    nearest_words(m, vocab, "missing", 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Lookup);
    EXPECT_NE(std::string(e.what()).find("<unk>"), std::string::npos);
  }
  EXPECT_EQ(kind_of([&] { nearest_words(m, vocab, "t0", vocab.size()); }), ErrorKind::Config);
  EXPECT_NO_THROW(nearest_words(m, vocab, "<unk>", vocab.size() - 1));
  EXPECT_EQ(kind_of([] { parse_metric("manhattan"); }), ErrorKind::Config);
}

TEST(PhraseTable, CandidateCount) {
  EXPECT_EQ(phrase_candidate_count(500, 2), 250000u);
  EXPECT_EQ(phrase_candidate_count(500, 1), 500u);
  EXPECT_EQ(phrase_candidate_count(500, 3), 125000000u);
}

TEST(PhraseTable, FiveHundredWordPairs) {
  const Vocab vocab = ranked_vocab(500);
  const Model m = oracle::random_model(3, vocab.size(), 4, 0.5);
  PhraseTableOptions opt;
  opt.length = 2;
  opt.top_m = 500;
  opt.k = 5;
  const std::vector<std::vector<std::string>> queries{{"t0", "t1"}, {"t7", "t3"}};
  const auto tables = phrase_table(m, vocab, queries, opt);
  ASSERT_EQ(tables.size(), 2u);
  // Check the top neighbor of the first query against a scan of all pairs.
  const Repr q = greedy_parse(std::vector<WordId>{2, 3}, m).tree.root().repr;
  double best = std::numeric_limits<double>::infinity();
  for (WordId a = 2; a < 502; ++a) {
    for (WordId b = 2; b < 502; ++b) {
      if (a == 2 && b == 3) continue;
      best = std::min(best, (sequence_embedding(m, std::vector<WordId>{a, b}) - q).norm());
    }
  }
  EXPECT_EQ(tables[0].neighbors[0].distance, best);
  EXPECT_EQ(tables[0].neighbors.size(), 5u);
  for (const auto& nb : tables[1].neighbors) EXPECT_NE(nb.tokens, queries[1]);
}

TEST(PhraseTable, LengthOneIsNearestWordsWithinTopM) {
  const Vocab vocab = ranked_vocab(12);
  const Model m = oracle::random_model(4, vocab.size(), 5);
  PhraseTableOptions opt;
  opt.length = 1;
  opt.top_m = 8;
  opt.k = 4;
  const auto t = phrase_table(m, vocab, std::vector<std::vector<std::string>>{{"t2"}}, opt);
  const auto all = nearest_words(m, vocab, "t2", vocab.size() - 1);
  std::vector<Neighbor> restricted;
  for (const auto& nb : all.neighbors) {
    const WordId id = *vocab.find(nb.tokens[0]);
    if (id >= kSpecialCount && id < kSpecialCount + 8) restricted.push_back(nb);
  }
  ASSERT_EQ(t[0].neighbors.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(t[0].neighbors[i].tokens, restricted[i].tokens);
    EXPECT_EQ(t[0].neighbors[i].distance, restricted[i].distance);
  }
  EXPECT_EQ(t[0].rank, all.rank);
}

TEST(PhraseTable, EmbeddingIsGreedyRoot) {
  const Model m = oracle::random_model(4, 10, 6);
  const std::vector<WordId> seq{3, 7, 2};
  EXPECT_TRUE(sequence_embedding(m, seq) == greedy_parse(seq, m).tree.root().repr);
}

TEST(PhraseTable, Guards) {
  const Vocab vocab = ranked_vocab(30);
  const Model m = oracle::random_model(3, vocab.size(), 7);
  PhraseTableOptions opt;
  opt.top_m = 30;
  opt.length = 4;
  const std::vector<std::vector<std::string>> q2{{"t0", "t1"}};
  EXPECT_EQ(kind_of([&] { phrase_table(m, vocab, q2, opt); }), ErrorKind::Size);
  opt.length = 3;
  opt.budget = 1000;
  try {
    phrase_table(m, vocab, std::vector<std::vector<std::string>>{{"t0", "t1", "t2"}}, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Size);
    EXPECT_NE(std::string(e.what()).find("top_m"), std::string::npos);
  }
  opt.length = 2;
  opt.budget = 1'000'000;
  opt.top_m = 31;
  EXPECT_EQ(kind_of([&] { phrase_table(m, vocab, q2, opt); }), ErrorKind::Config);
  opt.top_m = 30;
  EXPECT_EQ(kind_of([&] { phrase_table(m, vocab, std::vector<std::vector<std::string>>{{"t0"}}, opt); }),
            ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { phrase_table(m, vocab, std::vector<std::vector<std::string>>{{"t0", "zz"}}, opt); }),
            ErrorKind::Lookup);
}

TEST(BracketF1, HandCases) {
  const Bracketing a = from_text("((a b) c)");
  const Bracketing b = from_text("(a (b c))");
  const auto same = bracket_f1(a, a);
  EXPECT_EQ(same.precision, 1.0);
  EXPECT_EQ(same.recall, 1.0);
  EXPECT_EQ(same.f1, 1.0);
  const auto diff = bracket_f1(a, b);
  EXPECT_EQ(diff.precision, 0.0);
  EXPECT_EQ(diff.recall, 0.0);
  EXPECT_EQ(diff.f1, 0.0);
  EXPECT_EQ(bracket_f1(from_text("(a b)"), from_text("(a b)")).f1, 1.0);
  // Countable spans [0,2) [2,4) [2,5) against [0,2) [3,5) [2,5): two shared.
  const Bracketing p = from_text("((a b) ((c d) e))");
  const Bracketing g = from_text("((a b) (c (d e)))");
  EXPECT_DOUBLE_EQ(bracket_f1(p, g).f1, 2.0 / 3.0);
  EXPECT_EQ(kind_of([&] { bracket_f1(a, from_text("(a b)")); }), ErrorKind::Structure);
}

TEST(BracketF1, SymmetricOverAllPairs) {
  const auto trees = oracle::all_bracketings(6);
  for (const auto& x : trees) {
    for (const auto& y : trees) {
      const auto s = bracket_f1(x, y);
      EXPECT_EQ(s.f1, bracket_f1(y, x).f1);
      EXPECT_EQ(s.precision, s.recall);
    }
  }
}

TEST(Tables, TextAndTsvLayout) {
  NeighborTable a{{"cat"}, 3, {{{"dog"}, 0.5}, {{"cow"}, 0.75}}};
  NeighborTable b{{"red"}, 10, {{{"blue"}, 0.25}}};
  std::ostringstream text;
  write_table_text(text, std::vector<NeighborTable>{a, b});
  EXPECT_EQ(text.str(),
            "cat  red\n"
            "(3)  (10)\n"
            "---------\n"
            "dog  blue\n"
            "cow\n");
  std::ostringstream tsv;
  write_table_tsv(tsv, std::vector<NeighborTable>{a});
  EXPECT_EQ(tsv.str(),
            "query\trank\tposition\tneighbor\tdistance\n"
            "cat\t3\t1\tdog\t0.5\n"
            "cat\t3\t2\tcow\t0.75\n");
}
