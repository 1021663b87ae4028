#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "raam/model.hpp"
#include "raam/tree.hpp"

namespace raam {

enum class Adjacency { AdjacentOnly, AnyPair };

struct StmItem {
  Repr repr;
  Span span;
  std::size_t node = 0;  // id of the tree node this item stands for
};

// Short-term memory of the parser template: a working set of
// (representation, span) items kept ordered by span start, with pairwise
// disjoint spans and an optional capacity.
class Stm {
 public:
  explicit Stm(Adjacency policy = Adjacency::AdjacentOnly,
               std::optional<std::size_t> capacity = std::nullopt)
      : policy_(policy), capacity_(capacity) {}

  void insert(StmItem item);

  // Replaces items i and j by (associate(r_i, r_j), merged span) and returns
  // the new internal node, which is given id `node`.
  TreeNode reduce(std::size_t i, std::size_t j, const Model& model, std::size_t node);

  bool can_reduce(std::size_t i, std::size_t j) const;
  bool full() const { return capacity_ && items_.size() >= *capacity_; }

  const std::vector<StmItem>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  Adjacency policy() const { return policy_; }
  std::optional<std::size_t> capacity() const { return capacity_; }

 private:
  void place(StmItem item);

  Adjacency policy_;
  std::optional<std::size_t> capacity_;
  std::vector<StmItem> items_;
};

}  // namespace raam
