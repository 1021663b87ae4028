#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "raam/corpus.hpp"
#include "raam/gradient.hpp"
#include "raam/model.hpp"
#include "raam/parser.hpp"
#include "raam/random.hpp"
#include "raam/tape.hpp"
#include "raam/tree.hpp"

namespace raam {

inline constexpr std::size_t kAllWords = SIZE_MAX;

// One curriculum stage: segment length, number of vocabulary words in play,
// and optionally its own epoch count and learning rate.
struct Stage {
  std::size_t length = 5;
  std::size_t vocab_cap = kAllWords;
  std::optional<std::size_t> epochs;
  std::optional<double> learning_rate;

  bool operator==(const Stage&) const = default;
};

struct TrainConfig {
  double learning_rate = 0.01;
  double margin = 1.0;
  double recon_weight = 1.0;
  std::size_t epochs = 10;  // per stage unless the stage overrides it
  std::uint64_t seed = 1;
  std::vector<Stage> curriculum{Stage{}};
  Strategy parse = Strategy::greedy();
  std::size_t corruptions = 1;
  bool random_first_stage = false;  // random brackets throughout stage 0
  double heldout_fraction = 0.1;
  std::size_t dim = 50;  // used when the trainer creates the model

  std::size_t stage_epochs(const Stage& stage) const { return stage.epochs.value_or(epochs); }
  double stage_rate(const Stage& stage) const { return stage.learning_rate.value_or(learning_rate); }
  void validate() const;
};

// Flat "key = value" text; '#' starts a comment. Keys not present keep
// their defaults.
TrainConfig parse_config(std::istream& in, TrainConfig base = {});
TrainConfig load_config(const std::string& path, TrainConfig base = {});
void write_config(std::ostream& out, const TrainConfig& cfg);

// Comma-separated stages "length:cap[:epochs[:rate]]", cap being a word
// count or "all" and epochs "-" for the global count, e.g.
// "3:20:5, 5:all:20:0.005".
std::string format_curriculum(std::span<const Stage> stages);
std::vector<Stage> parse_curriculum(const std::string& text);

struct CorruptedPair {
  Segment genuine;
  Segment corrupted;
  std::size_t position = 0;
  WordId replacement = 0;
};

// Replaces a uniformly chosen position by a uniformly chosen word id in
// [kSpecialCount, vocab_limit) that differs from the original.
CorruptedPair corrupt(const Segment& segment, std::size_t vocab_limit, Rng& rng);
CorruptedPair corrupt(const Segment& segment, const Vocab& vocab, Rng& rng);

// Random binary bracketing built by merging uniformly chosen adjacent pairs.
Bracketing random_bracketing(std::size_t n, Rng& rng);

struct StepResult {
  double loss = 0.0;
  GradientSet grads;
};

// Tape nodes of a tree recorded on a tape: representation of every node
// (leaves first) and saliency of every internal node.
struct TapedTree {
  std::vector<Tape::Node> repr;
  std::vector<Tape::Node> score;  // score[k] belongs to node leaves + k
};
TapedTree tape_tree(Tape& tape, std::span<const WordId> words, const Bracketing& shape);

// Per-node hinge over the internal nodes whose span covers the corrupted
// position, both trees sharing `shape`.
StepResult ranking_loss(const Model& model, const CorruptedPair& pair, const Bracketing& shape, double margin);

struct UnsupStep {
  double loss = 0.0;
  GradientSet grads;
  Bracketing shape;  // bracketing of the genuine segment
};

// Brackets the segment (randomly when `random_brackets`), corrupts it
// cfg.corruptions times and sums the ranking losses.
UnsupStep unsup_step(const Model& model, const Segment& segment, const TrainConfig& cfg, std::size_t vocab_limit,
                     Rng& rng, bool random_brackets = false);

// lambda * mean over internal nodes of |dissociate(node) - [left; right]|^2.
StepResult recon_step(const Model& model, std::span<const WordId> words, const Bracketing& shape, double weight);
StepResult recon_step(const Model& model, const ParseTree& tree, double weight);

// max(0, margin + score(predicted) - score(gold)) with the prediction from
// cfg.parse. A prediction equal to gold yields loss = margin and no gradient.
StepResult sup_step(const Model& model, std::span<const WordId> words, const Bracketing& gold,
                    const TrainConfig& cfg);

struct GoldSentence {
  std::vector<WordId> words;
  Bracketing shape;
};

struct TrainData {
  std::vector<std::vector<WordId>> streams;  // unsupervised token streams
  std::vector<GoldSentence> gold;            // supervised sentences
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based across all stages
  std::size_t stage = 0;
  std::size_t examples = 0;
  double rank_loss = 0.0;   // mean per unsupervised example
  double recon_loss = 0.0;  // mean per unsupervised example, weighted
  double sup_loss = 0.0;    // mean per supervised example
  std::optional<double> heldout_accuracy;
  std::optional<double> heldout_recon;
  std::optional<double> heldout_f1;
  double wall_seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochReport> epochs;
};

struct TrainCallbacks {
  std::function<void(const EpochReport&, const Model&)> on_epoch;
};

// Runs every curriculum stage over its segments and gold sentences with
// plain SGD. Deterministic given cfg.seed.
TrainReport train(Model& model, const TrainData& data, const TrainConfig& cfg, const TrainCallbacks& callbacks = {});

// Fraction of segments whose genuine covering-node score beats the score of
// one corrupted copy (ties count half). Corruptions are drawn from `seed`.
// With `random_brackets` the shared bracketing is drawn at random instead of
// parsed, so it no longer depends on the genuine words.
double ranking_accuracy(const Model& model, std::span<const Segment> segments, std::size_t vocab_limit,
                        const Strategy& strategy, std::uint64_t seed, bool random_brackets = false);

// Mean unweighted reconstruction error of the parsed segments.
double reconstruction_error(const Model& model, std::span<const Segment> segments, const Strategy& strategy);

// Mean unlabeled bracketing F1 of `strategy` against gold trees.
double bracketing_f1(const Model& model, std::span<const GoldSentence> gold, const Strategy& strategy);

}  // namespace raam
