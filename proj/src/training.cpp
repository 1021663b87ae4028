#include "raam/training.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "raam/analysis.hpp"
#include "raam/error.hpp"

namespace raam {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Error(ErrorKind::Config, "bad value '" + text + "' for " + what);
  }
}

double parse_real(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Config, "bad value '" + text + "' for " + what);
  }
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(ErrorKind::Config, "bad value '" + text + "' for " + what + " (expected true or false)");
}

// Shortest text that reads back to the same double.
std::string shortest(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double covering_score(const ParseTree& tree, const std::vector<Span>& spans, std::size_t position) {
  double total = 0.0;
  for (std::size_t k = tree.leaves; k < tree.nodes.size(); ++k) {
    if (spans[k].contains(position)) total += tree.nodes[k].score;
  }
  return total;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::Config, "learning_rate must be positive");
  if (!(margin > 0.0)) throw Error(ErrorKind::Config, "margin must be positive");
  if (!(recon_weight >= 0.0)) throw Error(ErrorKind::Config, "recon_weight must be non-negative");
  if (corruptions == 0) throw Error(ErrorKind::Config, "corruptions must be at least 1");
  if (!(heldout_fraction >= 0.0 && heldout_fraction < 1.0)) {
    throw Error(ErrorKind::Config, "heldout_fraction must lie in [0, 1)");
  }
  if (curriculum.empty()) throw Error(ErrorKind::Config, "curriculum needs at least one stage");
  for (std::size_t s = 0; s < curriculum.size(); ++s) {
    const Stage& st = curriculum[s];
    if (st.learning_rate && !(*st.learning_rate > 0.0)) {
      throw Error(ErrorKind::Config, "stage " + std::to_string(s) + ": learning rate must be positive");
    }
    if (st.length < 2) throw Error(ErrorKind::Config, "stage " + std::to_string(s) + ": length must be at least 2");
    if (st.vocab_cap < 2) {
      throw Error(ErrorKind::Config, "stage " + std::to_string(s) + ": vocabulary cap must be at least 2");
    }
    if (s > 0 && (st.length < curriculum[s - 1].length || st.vocab_cap < curriculum[s - 1].vocab_cap)) {
      throw Error(ErrorKind::Config, "stage " + std::to_string(s) +
                                         " shrinks the segment length or vocabulary of the previous stage");
    }
  }
}

std::vector<Stage> parse_curriculum(const std::string& text) {
  std::vector<Stage> stages;
  std::stringstream list(text);
  std::string item;
  while (std::getline(list, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::vector<std::string> parts;
    std::stringstream fields(item);
    std::string f;
    while (std::getline(fields, f, ':')) parts.push_back(trim(f));
    if (parts.size() < 2 || parts.size() > 4) {
      throw Error(ErrorKind::Config, "curriculum stage '" + item + "' must be length:cap[:epochs[:rate]]");
    }
    Stage st;
    st.length = parse_count(parts[0], "stage length");
    st.vocab_cap = parts[1] == "all" ? kAllWords : parse_count(parts[1], "stage vocabulary cap");
    if (parts.size() >= 3 && parts[2] != "-") st.epochs = parse_count(parts[2], "stage epochs");
    if (parts.size() == 4) st.learning_rate = parse_real(parts[3], "stage learning rate");
    stages.push_back(st);
  }
  if (stages.empty()) throw Error(ErrorKind::Config, "empty curriculum");
  return stages;
}

std::string format_curriculum(std::span<const Stage> stages) {
  std::string out;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(stages[i].length) + ":" +
           (stages[i].vocab_cap == kAllWords ? std::string("all") : std::to_string(stages[i].vocab_cap));
    if (stages[i].epochs || stages[i].learning_rate) {
      out += ":" + (stages[i].epochs ? std::to_string(*stages[i].epochs) : std::string("-"));
    }
    if (stages[i].learning_rate) out += ":" + shortest(*stages[i].learning_rate);
  }
  return out;
}

TrainConfig parse_config(std::istream& in, TrainConfig cfg) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Config, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "learning_rate") {
      cfg.learning_rate = parse_real(value, key);
    } else if (key == "margin") {
      cfg.margin = parse_real(value, key);
    } else if (key == "recon_weight") {
      cfg.recon_weight = parse_real(value, key);
    } else if (key == "epochs") {
      cfg.epochs = parse_count(value, key);
    } else if (key == "seed") {
      cfg.seed = parse_count(value, key);
    } else if (key == "curriculum") {
      cfg.curriculum = parse_curriculum(value);
    } else if (key == "parse") {
      cfg.parse = Strategy::parse(value);
    } else if (key == "corruptions") {
      cfg.corruptions = parse_count(value, key);
    } else if (key == "random_first_stage") {
      cfg.random_first_stage = parse_bool(value, key);
    } else if (key == "heldout_fraction") {
      cfg.heldout_fraction = parse_real(value, key);
    } else if (key == "dim") {
      cfg.dim = parse_count(value, key);
    } else {
      throw Error(ErrorKind::Config, "config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config file " + path);
  return parse_config(in, std::move(base));
}

void write_config(std::ostream& out, const TrainConfig& cfg) {
  out << "learning_rate = " << shortest(cfg.learning_rate) << '\n'
      << "margin = " << shortest(cfg.margin) << '\n'
      << "recon_weight = " << shortest(cfg.recon_weight) << '\n'
      << "epochs = " << cfg.epochs << '\n'
      << "seed = " << cfg.seed << '\n'
      << "curriculum = " << format_curriculum(cfg.curriculum) << '\n'
      << "parse = " << cfg.parse.str() << '\n'
      << "corruptions = " << cfg.corruptions << '\n'
      << "random_first_stage = " << (cfg.random_first_stage ? "true" : "false") << '\n'
      << "heldout_fraction = " << shortest(cfg.heldout_fraction) << '\n'
      << "dim = " << cfg.dim << '\n';
}

CorruptedPair corrupt(const Segment& segment, std::size_t vocab_limit, Rng& rng) {
  if (segment.words.empty()) throw Error(ErrorKind::Structure, "cannot corrupt an empty segment");
  if (vocab_limit < kSpecialCount + 2) {
    throw Error(ErrorKind::Config, "corruption needs at least two non-special vocabulary words");
  }
  CorruptedPair pair;
  pair.genuine = segment;
  pair.corrupted = segment;
  pair.position = static_cast<std::size_t>(rng.below(segment.words.size()));
  const WordId original = segment.words[pair.position];
  const std::uint64_t choices = vocab_limit - kSpecialCount;
  WordId replacement = original;
  while (replacement == original) replacement = static_cast<WordId>(kSpecialCount + rng.below(choices));
  pair.replacement = replacement;
  pair.corrupted.words[pair.position] = replacement;
  return pair;
}

CorruptedPair corrupt(const Segment& segment, const Vocab& vocab, Rng& rng) {
  return corrupt(segment, vocab.size(), rng);
}

Bracketing random_bracketing(std::size_t n, Rng& rng) {
  if (n == 0) throw Error(ErrorKind::Structure, "cannot bracket zero leaves");
  Bracketing b;
  b.leaves = n;
  std::vector<std::size_t> items(n);
  for (std::size_t p = 0; p < n; ++p) items[p] = p;
  while (items.size() > 1) {
    const auto k = static_cast<std::size_t>(rng.below(items.size() - 1));
    b.merges.push_back({items[k], items[k + 1]});
    items[k] = n + b.merges.size() - 1;
    items.erase(items.begin() + static_cast<std::ptrdiff_t>(k) + 1);
  }
  return b;
}

TapedTree tape_tree(Tape& tape, std::span<const WordId> words, const Bracketing& shape) {
  if (words.size() != shape.leaves) {
    throw Error(ErrorKind::Structure, "tree has " + std::to_string(shape.leaves) + " leaves but the segment has " +
                                          std::to_string(words.size()) + " words");
  }
  TapedTree t;
  t.repr.reserve(shape.node_count());
  for (WordId w : words) t.repr.push_back(tape.embed(w));
  for (const auto& m : shape.merges) {
    t.repr.push_back(tape.associate(t.repr.at(m.left), t.repr.at(m.right)));
    t.score.push_back(tape.saliency(t.repr.back()));
  }
  return t;
}

StepResult ranking_loss(const Model& model, const CorruptedPair& pair, const Bracketing& shape, double margin) {
  validate(shape);
  Tape tape(model);
  const TapedTree good = tape_tree(tape, pair.genuine.words, shape);
  const TapedTree bad = tape_tree(tape, pair.corrupted.words, shape);
  const auto spans = shape.node_spans();
  StepResult out{0.0, GradientSet(model)};
  Upstream upstream;
  for (std::size_t k = 0; k < shape.merges.size(); ++k) {
    if (!spans[shape.leaves + k].contains(pair.position)) continue;
    const double hinge = margin - tape.scalar(good.score[k]) + tape.scalar(bad.score[k]);
    if (hinge <= 0.0) continue;
    out.loss += hinge;
    upstream.emplace_back(good.score[k], scalar_grad(-1.0));
    upstream.emplace_back(bad.score[k], scalar_grad(1.0));
  }
  if (!upstream.empty()) out.grads = backward(model, tape, upstream);
  return out;
}

UnsupStep unsup_step(const Model& model, const Segment& segment, const TrainConfig& cfg, std::size_t vocab_limit,
                     Rng& rng, bool random_brackets) {
  UnsupStep out;
  out.grads = GradientSet(model);
  out.shape = random_brackets ? random_bracketing(segment.size(), rng)
                              : parse(segment.words, model, cfg.parse).tree.bracketing();
  for (std::size_t c = 0; c < cfg.corruptions; ++c) {
    const CorruptedPair pair = corrupt(segment, vocab_limit, rng);
    StepResult r = ranking_loss(model, pair, out.shape, cfg.margin);
    out.loss += r.loss;
    out.grads += r.grads;
  }
  return out;
}

StepResult recon_step(const Model& model, std::span<const WordId> words, const Bracketing& shape, double weight) {
  StepResult out{0.0, GradientSet(model)};
  if (weight == 0.0 || shape.merges.empty()) return out;
  validate(shape);
  Tape tape(model);
  const TapedTree t = tape_tree(tape, words, shape);
  const auto d = static_cast<Eigen::Index>(model.dim());
  const double nodes = static_cast<double>(shape.merges.size());
  const double scale = 2.0 * weight / nodes;
  Upstream upstream;
  double total = 0.0;
  for (std::size_t k = 0; k < shape.merges.size(); ++k) {
    const auto& m = shape.merges[k];
    const auto self = t.repr[shape.leaves + k];
    const auto dis = tape.dissociate(self);
    Vector diff = tape.value(dis);
    diff.head(d) -= tape.value(t.repr[m.left]);
    diff.tail(d) -= tape.value(t.repr[m.right]);
    total += diff.squaredNorm();
    upstream.emplace_back(dis, scale * diff);
    upstream.emplace_back(t.repr[m.left], -scale * diff.head(d));
    upstream.emplace_back(t.repr[m.right], -scale * diff.tail(d));
  }
  out.loss = weight * total / nodes;
  out.grads = backward(model, tape, upstream);
  return out;
}

StepResult recon_step(const Model& model, const ParseTree& tree, double weight) {
  return recon_step(model, tree.words(), tree.bracketing(), weight);
}

StepResult sup_step(const Model& model, std::span<const WordId> words, const Bracketing& gold,
                    const TrainConfig& cfg) {
  validate(gold);
  if (gold.leaves != words.size()) {
    throw Error(ErrorKind::Structure, "gold tree has " + std::to_string(gold.leaves) + " leaves but the sentence has " +
                                          std::to_string(words.size()) + " words");
  }
  StepResult out{0.0, GradientSet(model)};
  const Bracketing predicted = parse(words, model, cfg.parse).tree.bracketing();
  if (predicted.same_tree(gold)) {
    out.loss = cfg.margin;
    return out;
  }
  Tape tape(model);
  const TapedTree pred = tape_tree(tape, words, predicted);
  const TapedTree good = tape_tree(tape, words, gold);
  double s_pred = 0.0;
  double s_gold = 0.0;
  for (auto node : pred.score) s_pred += tape.scalar(node);
  for (auto node : good.score) s_gold += tape.scalar(node);
  const double hinge = cfg.margin + s_pred - s_gold;
  if (hinge <= 0.0) return out;
  out.loss = hinge;
  Upstream upstream;
  for (auto node : pred.score) upstream.emplace_back(node, scalar_grad(1.0));
  for (auto node : good.score) upstream.emplace_back(node, scalar_grad(-1.0));
  out.grads = backward(model, tape, upstream);
  return out;
}

double ranking_accuracy(const Model& model, std::span<const Segment> segments, std::size_t vocab_limit,
                        const Strategy& strategy, std::uint64_t seed, bool random_brackets) {
  if (segments.empty()) return 0.0;
  Rng rng(seed);
  double correct = 0.0;
  for (const Segment& seg : segments) {
    const ParseTree good = random_brackets ? build_tree(model, seg.words, random_bracketing(seg.size(), rng))
                                           : parse(seg.words, model, strategy).tree;
    const Bracketing shape = good.bracketing();
    const CorruptedPair pair = corrupt(seg, vocab_limit, rng);
    const ParseTree bad = build_tree(model, pair.corrupted.words, shape);
    const auto spans = shape.node_spans();
    const double g = covering_score(good, spans, pair.position);
    const double b = covering_score(bad, spans, pair.position);
    correct += g > b ? 1.0 : (g == b ? 0.5 : 0.0);
  }
  return correct / static_cast<double>(segments.size());
}

double reconstruction_error(const Model& model, std::span<const Segment> segments, const Strategy& strategy) {
  if (segments.empty()) return 0.0;
  double total = 0.0;
  for (const Segment& seg : segments) {
    const ParseTree tree = parse(seg.words, model, strategy).tree;
    double err = 0.0;
    for (std::size_t k = tree.leaves; k < tree.nodes.size(); ++k) {
      const auto& node = tree.nodes[k];
      const auto [u, v] = dissociate(model, node.repr);
      err += (u - tree.nodes[node.left].repr).squaredNorm() + (v - tree.nodes[node.right].repr).squaredNorm();
    }
    if (tree.internal_count() > 0) total += err / static_cast<double>(tree.internal_count());
  }
  return total / static_cast<double>(segments.size());
}

double bracketing_f1(const Model& model, std::span<const GoldSentence> gold, const Strategy& strategy) {
  if (gold.empty()) return 0.0;
  double total = 0.0;
  for (const auto& g : gold) {
    total += bracket_f1(parse(g.words, model, strategy).tree.bracketing(), g.shape).f1;
  }
  return total / static_cast<double>(gold.size());
}

TrainReport train(Model& model, const TrainData& data, const TrainConfig& cfg, const TrainCallbacks& callbacks) {
  cfg.validate();
  if (data.streams.empty() && data.gold.empty()) {
    throw Error(ErrorKind::Config, "training needs unsupervised streams or gold sentences");
  }
  TrainReport report;
  Rng rng(cfg.seed);
  const std::uint64_t eval_seed = cfg.seed ^ 0x5DEECE66DULL;
  const std::size_t vocab_size = model.vocab_size();
  std::size_t epoch_counter = 0;

  for (std::size_t s = 0; s < cfg.curriculum.size(); ++s) {
    const Stage& stage = cfg.curriculum[s];
    const std::size_t limit =
        stage.vocab_cap == kAllWords ? vocab_size : std::min(vocab_size, kSpecialCount + stage.vocab_cap);

    std::vector<Segment> train_segs;
    std::vector<Segment> heldout_segs;
    for (const auto& stream : data.streams) {
      auto segs = windows(stream, stage.length, limit, OovPolicy::Drop);
      const auto held = static_cast<std::size_t>(cfg.heldout_fraction * static_cast<double>(segs.size()));
      const auto split = segs.begin() + static_cast<std::ptrdiff_t>(segs.size() - held);
      train_segs.insert(train_segs.end(), segs.begin(), split);
      heldout_segs.insert(heldout_segs.end(), split, segs.end());
    }

    std::vector<const GoldSentence*> stage_gold;
    for (const auto& g : data.gold) {
      const bool fits = g.words.size() <= stage.length &&
                        std::all_of(g.words.begin(), g.words.end(),
                                    [limit](WordId w) { return w != kUnkId && w < limit; });
      if (fits) stage_gold.push_back(&g);
    }
    const auto gold_held = static_cast<std::size_t>(cfg.heldout_fraction * static_cast<double>(stage_gold.size()));
    std::vector<GoldSentence> heldout_gold;
    for (std::size_t i = stage_gold.size() - gold_held; i < stage_gold.size(); ++i) {
      heldout_gold.push_back(*stage_gold[i]);
    }
    stage_gold.resize(stage_gold.size() - gold_held);

    if (train_segs.empty() && stage_gold.empty()) {
      throw Error(ErrorKind::Config, "curriculum stage " + std::to_string(s) + " (length " +
                                         std::to_string(stage.length) + ", vocabulary " +
                                         (stage.vocab_cap == kAllWords ? std::string("all")
                                                                       : std::to_string(stage.vocab_cap)) +
                                         ") has no training data");
    }
    if (!train_segs.empty() && limit < kSpecialCount + 2) {
      throw Error(ErrorKind::Config, "curriculum stage " + std::to_string(s) +
                                         " needs at least two vocabulary words for corruption");
    }

    const bool random_brackets = cfg.random_first_stage && s == 0;
    // Unsupervised items are encoded as their index, supervised as index + offset.
    const std::size_t sup_offset = train_segs.size();
    std::vector<std::size_t> order(train_segs.size() + stage_gold.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const double rate = cfg.stage_rate(stage);
    for (std::size_t e = 0; e < cfg.stage_epochs(stage); ++e) {
      const auto start = std::chrono::steady_clock::now();
      shuffle(order.begin(), order.end(), rng);
      double rank_sum = 0.0;
      double recon_sum = 0.0;
      double sup_sum = 0.0;
      for (std::size_t item : order) {
        double loss = 0.0;
        GradientSet grads(model);
        if (item < sup_offset) {
          const Segment& seg = train_segs[item];
          UnsupStep u = unsup_step(model, seg, cfg, limit, rng, random_brackets);
          rank_sum += u.loss;
          loss += u.loss;
          grads = std::move(u.grads);
          if (cfg.recon_weight > 0.0) {
            StepResult r = recon_step(model, seg.words, u.shape, cfg.recon_weight);
            recon_sum += r.loss;
            loss += r.loss;
            grads += r.grads;
          }
        } else {
          const GoldSentence& g = *stage_gold[item - sup_offset];
          StepResult r = sup_step(model, g.words, g.shape, cfg);
          sup_sum += r.loss;
          loss += r.loss;
          grads = std::move(r.grads);
        }
        if (!std::isfinite(loss)) {
          throw Error(ErrorKind::Numeric, "non-finite loss in epoch " + std::to_string(epoch_counter + 1));
        }
        sgd_apply(model, grads, rate);
      }
      if (!all_finite(model)) {
        throw Error(ErrorKind::Numeric, "non-finite parameters after epoch " + std::to_string(epoch_counter + 1));
      }

      EpochReport er;
      er.epoch = ++epoch_counter;
      er.stage = s;
      er.examples = order.size();
      if (!train_segs.empty()) {
        er.rank_loss = rank_sum / static_cast<double>(train_segs.size());
        er.recon_loss = recon_sum / static_cast<double>(train_segs.size());
      }
      if (!stage_gold.empty()) er.sup_loss = sup_sum / static_cast<double>(stage_gold.size());
      if (!heldout_segs.empty()) {
        er.heldout_accuracy = ranking_accuracy(model, heldout_segs, limit, cfg.parse, eval_seed);
        er.heldout_recon = reconstruction_error(model, heldout_segs, cfg.parse);
      }
      if (!heldout_gold.empty()) er.heldout_f1 = bracketing_f1(model, heldout_gold, cfg.parse);
      er.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      report.epochs.push_back(er);
      if (callbacks.on_epoch) callbacks.on_epoch(er, model);
    }
  }
  return report;
}

}  // namespace raam
