#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "raam/model.hpp"
#include "raam/stm.hpp"
#include "raam/tree.hpp"

namespace raam {

enum class Action : unsigned char { Shift = 0, Reduce = 1 };

struct ParseResult {
  ParseTree tree;
  double total_score = 0.0;
  std::vector<Action> actions;  // shift-reduce only
};

std::string format_actions(std::span<const Action> actions);

// Inserts every word, then repeatedly associates the candidate pair whose
// association has the highest saliency. Ties go to the leftmost, then
// shortest, merged span.
ParseResult greedy_parse(std::span<const WordId> words, const Model& model,
                         Adjacency policy = Adjacency::AdjacentOnly);

// Beam search over shift/reduce action sequences. States are compared only
// at equal action counts; score ties go to the lexicographically smaller
// action log (shift before reduce).
ParseResult shift_reduce_beam(std::span<const WordId> words, const Model& model, std::size_t width,
                              std::optional<std::size_t> capacity = std::nullopt);

inline constexpr std::size_t kExhaustiveLimit = 10;

// All binary bracketings of n contiguous leaves, left-recursive splits first.
std::vector<Bracketing> enumerate_bracketings(std::size_t n);

// Best-scoring bracketing by enumeration; n <= kExhaustiveLimit.
ParseResult exhaustive_parse(std::span<const WordId> words, const Model& model);

// Recovers a tree from a single vector: dissociate while the saliency is at
// least `threshold` and depth remains. Leaves carry no word id.
ParseTree unfold(const Model& model, const Repr& x, double threshold, std::size_t max_depth);

struct Strategy {
  enum class Kind { Greedy, Beam, Exhaustive };

  Kind kind = Kind::Greedy;
  std::size_t width = 1;
  Adjacency adjacency = Adjacency::AdjacentOnly;

  static Strategy greedy(Adjacency adjacency = Adjacency::AdjacentOnly) { return {Kind::Greedy, 1, adjacency}; }
  static Strategy beam(std::size_t width) { return {Kind::Beam, width, Adjacency::AdjacentOnly}; }
  static Strategy exhaustive() { return {Kind::Exhaustive, 1, Adjacency::AdjacentOnly}; }

  // "greedy", "greedy:any", "beam:K" or "exhaustive".
  static Strategy parse(std::string_view text);
  std::string str() const;
};

ParseResult parse(std::span<const WordId> words, const Model& model, const Strategy& strategy);

}  // namespace raam
