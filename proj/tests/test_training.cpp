#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "oracle.hpp"
#include "raam/error.hpp"
#include "raam/training.hpp"

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

Bracketing left_branching(std::size_t n) {
  Bracketing b;
  b.leaves = n;
  std::size_t prev = 0;
  for (std::size_t p = 1; p < n; ++p) {
    b.merges.push_back({prev, p});
    prev = n + b.merges.size() - 1;
  }
  return b;
}

Bracketing right_branching(std::size_t n) {
  Bracketing b;
  b.leaves = n;
  std::size_t prev = n - 1;
  for (std::size_t p = n - 1; p-- > 0;) {
    b.merges.push_back({p, prev});
    prev = n + b.merges.size() - 1;
  }
  return b;
}

// Same three-word model as the parser tests: greedy prefers (w1 (w2 w3)).
Model rigged() {
  Model m(2, 5);
  m.embed.row(3) << 1, 0;
  m.embed.row(4) << 0, 1;
  m.assoc_w.row(0) << 1, 0, 0, 1;
  m.sal_w << 1, 0;
  return m;
}

CorruptedPair pair_at(std::vector<WordId> words, std::size_t position, WordId replacement) {
  CorruptedPair p;
  p.genuine.words = words;
  words[position] = replacement;
  p.corrupted.words = words;
  p.position = position;
  p.replacement = replacement;
  return p;
}

std::vector<WordId> random_stream(std::size_t length, std::size_t V, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<WordId> out;
  for (std::size_t i = 0; i < length; ++i) out.push_back(static_cast<WordId>(kSpecialCount + rng.below(V - kSpecialCount)));
  return out;
}

}  // namespace

TEST(Corrupt, ChangesExactlyOnePosition) {
  Rng rng(3);
  Segment seg{{2, 3, 4, 5, 6}, 0};
  for (int i = 0; i < 1000; ++i) {
    const auto p = corrupt(seg, 10, rng);
    EXPECT_EQ(p.genuine, seg);
    std::size_t diffs = 0;
    for (std::size_t k = 0; k < seg.size(); ++k) diffs += p.corrupted.words[k] != seg.words[k];
    EXPECT_EQ(diffs, 1u);
    EXPECT_NE(p.corrupted.words[p.position], seg.words[p.position]);
    EXPECT_EQ(p.corrupted.words[p.position], p.replacement);
    EXPECT_GE(p.replacement, kSpecialCount);
    EXPECT_LT(p.replacement, 10u);
  }
}

TEST(Corrupt, TwoWordVocabularyPicksTheOtherWord) {
  Rng rng(1);
  Segment seg{{2, 3, 2}, 0};
  for (int i = 0; i < 100; ++i) {
    const auto p = corrupt(seg, kSpecialCount + 2, rng);
    EXPECT_EQ(p.replacement, seg.words[p.position] == 2 ? 3u : 2u);
  }
  EXPECT_EQ(kind_of([&] { corrupt(seg, kSpecialCount + 1, rng); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { corrupt(Segment{}, 10, rng); }), ErrorKind::Structure);
}

TEST(Corrupt, PositionAndReplacementAreUniform) {
  // Chi-square goodness of fit; the critical values are the 0.999 quantiles
  // for 4 and 5 degrees of freedom.
  Rng rng(17);
  const Segment seg{{2, 2, 2, 2, 2}, 0};
  const std::size_t draws = 100000;
  std::vector<double> pos(5, 0.0), rep(6, 0.0);
  for (std::size_t i = 0; i < draws; ++i) {
    const auto p = corrupt(seg, kSpecialCount + 7, rng);
    pos[p.position] += 1.0;
    rep[p.replacement - kSpecialCount - 1] += 1.0;
  }
  const auto chi2 = [&](const std::vector<double>& counts) {
    const double expected = static_cast<double>(draws) / static_cast<double>(counts.size());
    double s = 0.0;
    for (double c : counts) s += (c - expected) * (c - expected) / expected;
    return s;
  };
  EXPECT_LT(chi2(pos), 18.467);
  EXPECT_LT(chi2(rep), 20.515);
}

TEST(RandomBracketing, ValidAndVaried) {
  Rng rng(5);
  std::set<std::vector<Span>> seen;
  for (int i = 0; i < 500; ++i) {
    const Bracketing b = random_bracketing(4, rng);
    EXPECT_NO_THROW(validate(b));
    seen.insert(b.internal_spans());
  }
  EXPECT_EQ(seen.size(), 5u);
  EXPECT_EQ(random_bracketing(1, rng).merges.size(), 0u);
}

TEST(RankingLoss, CoveringNodesOnly) {
  // Zero model: every score is zero, so each covering node contributes the margin.
  const Model zero(3, 8);
  const Bracketing shape = left_branching(3);
  EXPECT_DOUBLE_EQ(ranking_loss(zero, pair_at({2, 3, 4}, 0, 5), shape, 1.0).loss, 2.0);
  EXPECT_DOUBLE_EQ(ranking_loss(zero, pair_at({2, 3, 4}, 1, 5), shape, 1.0).loss, 2.0);
  EXPECT_DOUBLE_EQ(ranking_loss(zero, pair_at({2, 3, 4}, 2, 5), shape, 1.0).loss, 1.0);
  EXPECT_DOUBLE_EQ(ranking_loss(zero, pair_at({2, 3, 4}, 2, 5), right_branching(3), 0.5).loss, 1.0);
}

TEST(RankingLoss, InactiveHingesGiveNoGradient) {
  const Model m = oracle::random_model(3, 8, 2);
  const auto pair = pair_at({2, 3, 4, 5}, 1, 6);
  const Bracketing shape = right_branching(4);
  const auto r = ranking_loss(m, pair, shape, 1e-9);
  const auto p = oracle::params_of(m);
  const auto hinges = oracle::ranking_hinges(p, pair.genuine.words, pair.corrupted.words, shape, 1, 1e-9);
  EXPECT_EQ(hinges.size(), 2u);
  double expected = 0.0;
  for (double h : hinges) expected += std::max(0.0, h);
  EXPECT_NEAR(r.loss, expected, 1e-12);
  if (expected == 0.0) EXPECT_TRUE(r.grads.empty());
  const Model flipped = [&] {
    Model f = m;
    f.sal_w.setZero();
    f.sal_b = 0.0;
    return f;
  }();
  EXPECT_DOUBLE_EQ(ranking_loss(flipped, pair, shape, 0.25).loss, 0.5);
}

TEST(ReconStep, MatchesReferenceAndZeroWeight) {
  const Model m = oracle::random_model(4, 7, 9);
  const std::vector<WordId> words{2, 5, 3, 6};
  const Bracketing shape = right_branching(4);
  const auto r = recon_step(m, words, shape, 0.7);
  EXPECT_NEAR(r.loss, oracle::recon_loss(oracle::params_of(m), words, shape, 0.7), 1e-12);
  const auto z = recon_step(m, words, shape, 0.0);
  EXPECT_EQ(z.loss, 0.0);
  EXPECT_TRUE(z.grads.empty());
  Bracketing leaf;
  leaf.leaves = 1;
  EXPECT_EQ(recon_step(m, std::vector<WordId>{2}, leaf, 1.0).loss, 0.0);
}

TEST(ReconStep, ExactInverseHasZeroLoss) {
  // d=1: x = tanh(0.5) and D maps x back to (0.5, 0.5).
  Model m(1, 4);
  m.embed(2, 0) = 0.5;
  m.embed(3, 0) = 0.5;
  m.assoc_w(0, 0) = 1.0;
  const double x = std::tanh(0.5);
  m.dissoc_w(0, 0) = 0.5 / x;
  m.dissoc_w(1, 0) = 0.5 / x;
  const auto r = recon_step(m, std::vector<WordId>{2, 3}, left_branching(2), 1.0);
  EXPECT_LT(r.loss, 1e-30);
}

TEST(SupStep, RiggedModelHingeAndDescent) {
  const Model m = rigged();
  TrainConfig cfg;
  const std::vector<WordId> words{2, 3, 4};
  const Bracketing gold = left_branching(3);
  const auto r = sup_step(m, words, gold, cfg);
  EXPECT_NEAR(r.loss, 1.0 + std::tanh(2.0) - std::tanh(1.0), 1e-12);
  EXPECT_NEAR(r.loss, 1.2024, 1e-4);
  const auto p = oracle::params_of(m);
  EXPECT_NEAR(r.loss, oracle::sup_hinge(p, words, right_branching(3), gold, 1.0), 1e-12);
  Model stepped = m;
  sgd_apply(stepped, r.grads, 1e-3);
  EXPECT_LT(oracle::sup_hinge(oracle::params_of(stepped), words, right_branching(3), gold, 1.0), r.loss);
}

TEST(SupStep, CorrectPredictionKeepsMarginWithoutGradient) {
  const Model m = rigged();
  TrainConfig cfg;
  cfg.margin = 0.3;
  const auto r = sup_step(m, std::vector<WordId>{2, 3, 4}, right_branching(3), cfg);
  EXPECT_EQ(r.loss, 0.3);
  EXPECT_TRUE(r.grads.empty());
  EXPECT_EQ(kind_of([&] { sup_step(m, std::vector<WordId>{2, 3}, right_branching(3), cfg); }),
            ErrorKind::Structure);
}

TEST(Curriculum, ParseAndFormat) {
  const auto stages = parse_curriculum("3:20:5, 5:all:-:0.005,7:all");
  ASSERT_EQ(stages.size(), 3u);
  EXPECT_EQ(stages[0].length, 3u);
  EXPECT_EQ(stages[0].vocab_cap, 20u);
  EXPECT_EQ(stages[0].epochs, 5u);
  EXPECT_FALSE(stages[0].learning_rate);
  EXPECT_EQ(stages[1].vocab_cap, kAllWords);
  EXPECT_FALSE(stages[1].epochs);
  EXPECT_EQ(stages[1].learning_rate, 0.005);
  EXPECT_EQ(format_curriculum(stages), "3:20:5, 5:all:-:0.005, 7:all");
  EXPECT_EQ(parse_curriculum(format_curriculum(stages)), stages);
  for (const char* bad : {"", "3", "3:x", "3:20:1:2:3", "a:all", "3:20:-1"}) {
    EXPECT_EQ(kind_of([&] { parse_curriculum(bad); }), ErrorKind::Config) << bad;
  }
}

TEST(Config, RoundTripAndValidation) {
  TrainConfig cfg;
  cfg.learning_rate = 0.003;
  cfg.margin = 0.5;
  cfg.recon_weight = 0.0;
  cfg.epochs = 7;
  cfg.seed = 99;
  cfg.curriculum = parse_curriculum("3:25, 5:all:2:0.001");
  cfg.parse = Strategy::beam(4);
  cfg.corruptions = 3;
  cfg.random_first_stage = true;
  cfg.heldout_fraction = 0.2;
  cfg.dim = 30;
  std::stringstream ss;
  write_config(ss, cfg);
  const TrainConfig back = parse_config(ss);
  std::stringstream again;
  write_config(again, back);
  EXPECT_EQ(ss.str(), again.str());
  EXPECT_EQ(back.learning_rate, 0.003);
  EXPECT_EQ(back.curriculum, cfg.curriculum);
  EXPECT_EQ(back.parse.str(), "beam:4");
  EXPECT_TRUE(back.random_first_stage);
  EXPECT_EQ(back.stage_rate(back.curriculum[0]), 0.003);
  EXPECT_EQ(back.stage_rate(back.curriculum[1]), 0.001);
  EXPECT_EQ(back.stage_epochs(back.curriculum[0]), 7u);

  std::stringstream partial("# comment\nmargin = 2  # trailing\n\n");
  const TrainConfig p = parse_config(partial);
  EXPECT_EQ(p.margin, 2.0);
  EXPECT_EQ(p.learning_rate, TrainConfig{}.learning_rate);

  for (const char* bad : {"nonsense\n", "colour = red\n", "margin = 0\n", "learning_rate = -1\n",
                          "heldout_fraction = 1\n", "corruptions = 0\n", "curriculum = 5:all, 3:all\n",
                          "curriculum = 1:all\n", "random_first_stage = maybe\n", "curriculum = 3:1\n"}) {
    std::stringstream in(bad);
    EXPECT_EQ(kind_of([&] { parse_config(in); }), ErrorKind::Config) << bad;
  }
  EXPECT_EQ(kind_of([] { load_config("/nonexistent/raam.conf"); }), ErrorKind::Io);
}

TEST(Train, ZeroEpochsLeavesModelUntouched) {
  const Model start = oracle::random_model(4, 10, 1, 0.3);
  Model m = start;
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.curriculum = parse_curriculum("3:all");
  TrainData data;
  data.streams.push_back(random_stream(50, 10, 1));
  const auto report = train(m, data, cfg);
  EXPECT_TRUE(report.epochs.empty());
  EXPECT_TRUE(identical(m, start));
}

TEST(Train, DeterministicForFixedSeed) {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.curriculum = parse_curriculum("3:4, 4:all");
  TrainData data;
  data.streams.push_back(random_stream(200, 12, 2));
  data.gold.push_back({{2, 3, 4}, right_branching(3)});
  Model a = oracle::random_model(5, 12, 3, 0.3);
  Model b = a;
  const auto ra = train(a, data, cfg);
  const auto rb = train(b, data, cfg);
  EXPECT_TRUE(identical(a, b));
  ASSERT_EQ(ra.epochs.size(), 4u);
  for (std::size_t e = 0; e < ra.epochs.size(); ++e) {
    EXPECT_EQ(ra.epochs[e].rank_loss, rb.epochs[e].rank_loss);
    EXPECT_EQ(ra.epochs[e].stage, e / 2);
    EXPECT_EQ(ra.epochs[e].epoch, e + 1);
  }
  cfg.seed = 2;
  Model c = oracle::random_model(5, 12, 3, 0.3);
  train(c, data, cfg);
  EXPECT_FALSE(identical(a, c));
}

TEST(Train, SmallCorpusLossDecreases) {
  // Ten 3-word segments from one 12-token stream, no held-out part. The
  // per-epoch loss is noisy over ten fresh corruptions, so the first and
  // last twenty epochs are compared.
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.heldout_fraction = 0.0;
  cfg.learning_rate = 0.05;
  cfg.curriculum = parse_curriculum("3:all");
  TrainData data;
  data.streams.push_back(random_stream(12, 9, 4));
  Model m = oracle::random_model(6, 9, 5, 0.3);
  const auto report = train(m, data, cfg);
  ASSERT_EQ(report.epochs.size(), 200u);
  EXPECT_EQ(report.epochs[0].examples, 10u);
  const auto total = [](const EpochReport& e) { return e.rank_loss + e.recon_loss; };
  double first = 0.0, last = 0.0;
  for (std::size_t e = 0; e < 20; ++e) first += total(report.epochs[e]);
  for (std::size_t e = 180; e < 200; ++e) last += total(report.epochs[e]);
  EXPECT_LT(last, first);
}

TEST(Train, CallbackAndHeldOutMetrics) {
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.heldout_fraction = 0.25;
  cfg.curriculum = parse_curriculum("3:all");
  TrainData data;
  data.streams.push_back(random_stream(100, 10, 6));
  data.gold.push_back({{2, 3, 4}, left_branching(3)});
  data.gold.push_back({{4, 3, 2}, left_branching(3)});
  data.gold.push_back({{5, 3, 2}, left_branching(3)});
  data.gold.push_back({{5, 6, 2}, left_branching(3)});
  Model m = oracle::random_model(4, 10, 7, 0.3);
  std::size_t calls = 0;
  TrainCallbacks cb;
  cb.on_epoch = [&](const EpochReport& e, const Model&) {
    ++calls;
    EXPECT_TRUE(e.heldout_accuracy);
    EXPECT_TRUE(e.heldout_recon);
    EXPECT_TRUE(e.heldout_f1);
    EXPECT_EQ(e.examples, 74u + 3u);
  };
  train(m, data, cfg, cb);
  EXPECT_EQ(calls, 1u);
}

TEST(Train, EmptyStageAndMissingDataAreConfigErrors) {
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.curriculum = parse_curriculum("3:all, 9:all");
  TrainData data;
  data.streams.push_back(random_stream(6, 10, 1));
  Model m = oracle::random_model(3, 10, 1, 0.3);
  try {
    train(m, data, cfg);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_NE(std::string(e.what()).find("stage 1"), std::string::npos) << e.what();
  }
  EXPECT_EQ(kind_of([&] { train(m, TrainData{}, cfg); }), ErrorKind::Config);
}

TEST(Train, DivergenceIsNumericError) {
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 1e200;
  cfg.curriculum = parse_curriculum("3:all");
  TrainData data;
  data.streams.push_back(random_stream(40, 10, 1));
  Model m = oracle::random_model(3, 10, 1, 0.3);
  EXPECT_EQ(kind_of([&] { train(m, data, cfg); }), ErrorKind::Numeric);
}

TEST(Metrics, RankingAccuracyAndF1Bounds) {
  const Model zero(3, 10);
  std::vector<Segment> segs;
  const auto stream = random_stream(40, 10, 3);
  segs = windows(stream, 4, 10, OovPolicy::Drop);
  // All scores tie on the zero model.
  EXPECT_DOUBLE_EQ(ranking_accuracy(zero, segs, 10, Strategy::greedy(), 1), 0.5);
  EXPECT_DOUBLE_EQ(ranking_accuracy(zero, segs, 10, Strategy::greedy(), 1, true), 0.5);
  EXPECT_DOUBLE_EQ(reconstruction_error(zero, segs, Strategy::greedy()), 0.0);
  const Model m = rigged();
  std::vector<GoldSentence> gold{{{2, 3, 4}, right_branching(3)}};
  EXPECT_DOUBLE_EQ(bracketing_f1(m, gold, Strategy::greedy()), 1.0);
  gold[0].shape = left_branching(3);
  EXPECT_DOUBLE_EQ(bracketing_f1(m, gold, Strategy::greedy()), 0.0);
}
