#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "raam/model.hpp"

namespace raam {

// Set of leaf positions covered by a tree node or STM item. Contiguous for
// everything built under the adjacent-only policy.
class Span {
 public:
  Span() = default;
  static Span single(std::size_t position);
  // Half-open [begin, end).
  static Span interval(std::size_t begin, std::size_t end);

  const std::vector<std::uint32_t>& positions() const { return positions_; }
  std::size_t size() const { return positions_.size(); }
  bool empty() const { return positions_.empty(); }
  std::size_t first() const { return positions_.front(); }
  std::size_t last() const { return positions_.back(); }
  bool contiguous() const;
  bool contains(std::size_t position) const;
  bool overlaps(const Span& other) const;
  Span merged(const Span& other) const;

  // "[i,j)" when contiguous, "{a,b,...}" otherwise.
  std::string str() const;

  auto operator<=>(const Span&) const = default;
  bool operator==(const Span&) const = default;

 private:
  std::vector<std::uint32_t> positions_;
};

// Tree shape independent of words and parameters. Nodes 0..leaves-1 are the
// leaves in position order; merge k creates node leaves+k.
struct Merge {
  std::size_t left;
  std::size_t right;
  bool operator==(const Merge&) const = default;
};

struct Bracketing {
  std::size_t leaves = 0;
  std::vector<Merge> merges;

  std::size_t node_count() const { return leaves + merges.size(); }
  std::size_t root() const { return node_count() - 1; }
  // Span of every node, leaves first.
  std::vector<Span> node_spans() const;
  // Spans of the internal nodes, sorted.
  std::vector<Span> internal_spans() const;
  // Same tree regardless of merge order.
  bool same_tree(const Bracketing& other) const;
};

// Throws a structure error unless `b` is a binary tree over its leaves.
void validate(const Bracketing& b);

inline constexpr WordId kNoWord = std::numeric_limits<WordId>::max();

struct TreeNode {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::size_t left = kNone;
  std::size_t right = kNone;
  Span span;
  WordId word = kNoWord;  // leaves built from text
  Repr repr;
  double score = 0.0;  // saliency, internal nodes only

  bool is_leaf() const { return left == kNone; }
};

// Binary tree with representations. Leaves come first in position order;
// internal nodes follow in creation order, so the root is last.
struct ParseTree {
  std::vector<TreeNode> nodes;
  std::size_t leaves = 0;

  std::size_t internal_count() const { return nodes.size() - leaves; }
  const TreeNode& root() const { return nodes.back(); }
  Bracketing bracketing() const;
  std::vector<WordId> words() const;
  // Sum of internal-node saliencies in creation order.
  double total_score() const;
};

// Evaluates every association and saliency of `shape` over `words`.
ParseTree build_tree(const Model& model, std::span<const WordId> words, const Bracketing& shape);

// Nested parentheses, e.g. "((the cat) (sat (on (the mat))))". Parentheses
// inside tokens are written as -LRB- / -RRB-.
std::string format_bracketing(const Bracketing& shape, std::span<const std::string> tokens);

struct BracketedSentence {
  std::vector<std::string> tokens;
  Bracketing shape;
};
BracketedSentence parse_bracketing(std::string_view text);

}  // namespace raam
