#include "raam/parser.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <tuple>

#include "raam/error.hpp"

namespace raam {

namespace {

void require_words(std::span<const WordId> words) {
  if (words.empty()) throw Error(ErrorKind::Structure, "cannot parse an empty segment");
}

void add_leaves(ParseTree& tree, std::span<const WordId> words, const Model& model) {
  tree.leaves = words.size();
  for (std::size_t p = 0; p < words.size(); ++p) {
    TreeNode leaf;
    leaf.span = Span::single(p);
    leaf.word = words[p];
    leaf.repr = embed(model, words[p]);
    tree.nodes.push_back(std::move(leaf));
  }
}

}  // namespace

std::string format_actions(std::span<const Action> actions) {
  std::string out;
  out.reserve(actions.size());
  for (Action a : actions) out.push_back(a == Action::Shift ? 'S' : 'R');
  return out;
}

ParseResult greedy_parse(std::span<const WordId> words, const Model& model, Adjacency policy) {
  require_words(words);
  ParseResult result;
  add_leaves(result.tree, words, model);

  Stm stm(policy);
  for (std::size_t p = 0; p < words.size(); ++p) {
    stm.insert(StmItem{result.tree.nodes[p].repr, result.tree.nodes[p].span, p});
  }

  // Speculative associations, keyed by (left node, right node). A pair's
  // value does not change until one of its items is consumed.
  std::map<std::pair<std::size_t, std::size_t>, double> scores;
  std::size_t next_node = words.size();
  while (stm.size() > 1) {
    const auto& items = stm.items();
    std::size_t best_i = 0;
    std::size_t best_j = 0;
    double best_score = 0.0;
    std::pair<std::size_t, std::size_t> best_key{SIZE_MAX, SIZE_MAX};
    bool found = false;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const std::size_t j_end = policy == Adjacency::AdjacentOnly ? std::min(i + 2, items.size()) : items.size();
      for (std::size_t j = i + 1; j < j_end; ++j) {
        if (!stm.can_reduce(i, j)) continue;
        const auto cache_key = std::make_pair(items[i].node, items[j].node);
        auto it = scores.find(cache_key);
        if (it == scores.end()) {
          const double s = saliency(model, associate(model, items[i].repr, items[j].repr));
          it = scores.emplace(cache_key, s).first;
        }
        const std::size_t first = items[i].span.first();
        const std::size_t extent = std::max(items[i].span.last(), items[j].span.last()) - first;
        const auto key = std::make_pair(first, extent);
        if (!found || it->second > best_score || (it->second == best_score && key < best_key)) {
          found = true;
          best_score = it->second;
          best_key = key;
          best_i = i;
          best_j = j;
        }
      }
    }
    result.tree.nodes.push_back(stm.reduce(best_i, best_j, model, next_node++));
  }
  result.total_score = result.tree.total_score();
  return result;
}

ParseResult shift_reduce_beam(std::span<const WordId> words, const Model& model, std::size_t width,
                              std::optional<std::size_t> capacity) {
  if (width == 0) throw Error(ErrorKind::Config, "beam width must be at least 1");
  require_words(words);
  const std::size_t n = words.size();
  if (capacity && *capacity < 1) throw Error(ErrorKind::Config, "memory capacity must be at least 1");

  std::vector<Repr> leaves;
  leaves.reserve(n);
  for (WordId w : words) leaves.push_back(embed(model, w));

  struct State {
    Stm stm;
    std::vector<TreeNode> internal;
    std::size_t cursor = 0;
    double score = 0.0;
    std::vector<Action> actions;
  };
  const auto better = [](const State& a, const State& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.actions < b.actions;
  };

  std::vector<State> beam;
  beam.push_back(State{Stm(Adjacency::AdjacentOnly, capacity), {}, 0, 0.0, {}});
  for (std::size_t step = 0; step < 2 * n - 1; ++step) {
    std::vector<State> next;
    next.reserve(2 * beam.size());
    for (const State& s : beam) {
      if (s.cursor < n && !s.stm.full()) {
        State t = s;
        t.stm.insert(StmItem{leaves[t.cursor], Span::single(t.cursor), t.cursor});
        ++t.cursor;
        t.actions.push_back(Action::Shift);
        next.push_back(std::move(t));
      }
      if (s.stm.size() >= 2) {
        State t = s;
        const std::size_t top = t.stm.size() - 1;
        t.internal.push_back(t.stm.reduce(top - 1, top, model, n + t.internal.size()));
        t.score += t.internal.back().score;
        t.actions.push_back(Action::Reduce);
        next.push_back(std::move(t));
      }
    }
    if (next.empty()) {
      throw Error(ErrorKind::Capacity, "memory capacity too small to complete a parse");
    }
    const std::size_t keep = std::min(width, next.size());
    std::partial_sort(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(keep), next.end(), better);
    next.resize(keep);
    beam = std::move(next);
  }

  // After 2n-1 actions every surviving state has shifted all words and
  // reduced to a single item.
  State& best = beam.front();
  ParseResult result;
  add_leaves(result.tree, words, model);
  for (auto& node : best.internal) result.tree.nodes.push_back(std::move(node));
  result.total_score = best.score;
  result.actions = std::move(best.actions);
  return result;
}

std::vector<Bracketing> enumerate_bracketings(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::Structure, "cannot enumerate trees over zero leaves");
  // Each subtree over [i, j) is its post-order list of (begin, split, end).
  using Triple = std::tuple<std::size_t, std::size_t, std::size_t>;
  using Shape = std::vector<Triple>;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Shape>> memo;
  std::function<const std::vector<Shape>&(std::size_t, std::size_t)> trees =
      [&](std::size_t i, std::size_t j) -> const std::vector<Shape>& {
    const auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::vector<Shape> out;
    if (j - i == 1) {
      out.emplace_back();
    } else {
      for (std::size_t k = j - 1; k > i; --k) {
        const auto& lefts = trees(i, k);
        const auto& rights = trees(k, j);
        for (const auto& l : lefts) {
          for (const auto& r : rights) {
            Shape s = l;
            s.insert(s.end(), r.begin(), r.end());
            s.emplace_back(i, k, j);
            out.push_back(std::move(s));
          }
        }
      }
    }
    return memo.emplace(key, std::move(out)).first->second;
  };

  std::vector<Bracketing> result;
  for (const Shape& shape : trees(0, n)) {
    Bracketing b;
    b.leaves = n;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> node_of;
    for (std::size_t p = 0; p < n; ++p) node_of[{p, p + 1}] = p;
    for (const auto& [i, k, j] : shape) {
      b.merges.push_back({node_of.at({i, k}), node_of.at({k, j})});
      node_of[{i, j}] = n + b.merges.size() - 1;
    }
    result.push_back(std::move(b));
  }
  return result;
}

ParseResult exhaustive_parse(std::span<const WordId> words, const Model& model) {
  require_words(words);
  if (words.size() > kExhaustiveLimit) {
    throw Error(ErrorKind::Size, "exhaustive parsing is limited to " + std::to_string(kExhaustiveLimit) +
                                     " words (got " + std::to_string(words.size()) +
                                     "); use beam search for longer input");
  }
  ParseResult best;
  bool found = false;
  for (const auto& shape : enumerate_bracketings(words.size())) {
    ParseTree tree = build_tree(model, words, shape);
    const double total = tree.total_score();
    if (!found || total > best.total_score) {
      found = true;
      best.total_score = total;
      best.tree = std::move(tree);
    }
  }
  return best;
}

ParseTree unfold(const Model& model, const Repr& x, double threshold, std::size_t max_depth) {
  struct Raw {
    Repr repr;
    double score = 0.0;
    std::size_t left = TreeNode::kNone;
    std::size_t right = TreeNode::kNone;
  };
  std::vector<Raw> raw;
  std::function<std::size_t(const Repr&, std::size_t)> grow = [&](const Repr& v, std::size_t depth) {
    const double s = saliency(model, v);
    if (depth >= max_depth || !(s >= threshold)) {
      raw.push_back({v, 0.0});
      return raw.size() - 1;
    }
    auto [a, b] = dissociate(model, v);
    const std::size_t l = grow(a, depth + 1);
    const std::size_t r = grow(b, depth + 1);
    raw.push_back({v, s, l, r});
    return raw.size() - 1;
  };
  grow(x, 0);

  // raw is in post-order; renumber with leaves first.
  ParseTree tree;
  std::vector<std::size_t> id(raw.size());
  std::size_t leaves = 0;
  for (const auto& r : raw) leaves += r.left == TreeNode::kNone;
  tree.leaves = leaves;
  tree.nodes.resize(raw.size());
  std::size_t next_leaf = 0;
  std::size_t next_internal = leaves;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    TreeNode node;
    node.repr = raw[k].repr;
    node.score = raw[k].score;
    if (raw[k].left == TreeNode::kNone) {
      id[k] = next_leaf;
      node.span = Span::single(next_leaf++);
    } else {
      id[k] = next_internal++;
      node.left = id[raw[k].left];
      node.right = id[raw[k].right];
      node.span = tree.nodes[node.left].span.merged(tree.nodes[node.right].span);
    }
    tree.nodes[id[k]] = std::move(node);
  }
  return tree;
}

Strategy Strategy::parse(std::string_view text) {
  if (text == "greedy") return greedy();
  if (text == "greedy:any") return greedy(Adjacency::AnyPair);
  if (text == "exhaustive") return exhaustive();
  if (text.rfind("beam:", 0) == 0) {
    const auto digits = text.substr(5);
    std::size_t width = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), width);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) {
      throw Error(ErrorKind::Config, "bad beam width in strategy '" + std::string(text) + "'");
    }
    if (width == 0) throw Error(ErrorKind::Config, "beam width must be at least 1");
    return beam(width);
  }
  throw Error(ErrorKind::Config, "unknown strategy '" + std::string(text) +
                                     "' (expected greedy, greedy:any, beam:K or exhaustive)");
}

std::string Strategy::str() const {
  switch (kind) {
    case Kind::Greedy: return adjacency == Adjacency::AnyPair ? "greedy:any" : "greedy";
    case Kind::Beam: return "beam:" + std::to_string(width);
    case Kind::Exhaustive: return "exhaustive";
  }
  return "greedy";
}

ParseResult parse(std::span<const WordId> words, const Model& model, const Strategy& strategy) {
  switch (strategy.kind) {
    case Strategy::Kind::Greedy: return greedy_parse(words, model, strategy.adjacency);
    case Strategy::Kind::Beam: return shift_reduce_beam(words, model, strategy.width);
    case Strategy::Kind::Exhaustive: return exhaustive_parse(words, model);
  }
  return greedy_parse(words, model);
}

}  // namespace raam
