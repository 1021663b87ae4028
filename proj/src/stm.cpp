#include "raam/stm.hpp"

#include <algorithm>

#include "raam/error.hpp"

namespace raam {

void Stm::place(StmItem item) {
  const auto at = std::upper_bound(items_.begin(), items_.end(), item.span.first(),
                                   [](std::size_t start, const StmItem& it) { return start < it.span.first(); });
  items_.insert(at, std::move(item));
}

void Stm::insert(StmItem item) {
  if (item.span.empty()) throw Error(ErrorKind::Span, "cannot insert an item with an empty span");
  if (full()) {
    throw Error(ErrorKind::Capacity, "short-term memory is full (capacity " + std::to_string(*capacity_) + ")");
  }
  for (const auto& existing : items_) {
    if (existing.span.overlaps(item.span)) {
      throw Error(ErrorKind::Span, "span " + item.span.str() + " overlaps " + existing.span.str());
    }
  }
  place(std::move(item));
}

bool Stm::can_reduce(std::size_t i, std::size_t j) const {
  if (i == j || i >= items_.size() || j >= items_.size()) return false;
  if (policy_ == Adjacency::AnyPair) return true;
  const auto& a = items_[i].span;
  const auto& b = items_[j].span;
  return a.contiguous() && b.contiguous() && a.last() + 1 == b.first();
}

TreeNode Stm::reduce(std::size_t i, std::size_t j, const Model& model, std::size_t node) {
  if (items_.size() < 2) {
    throw Error(ErrorKind::Structure, "reduce needs at least two items, the memory holds " +
                                          std::to_string(items_.size()));
  }
  if (i == j || i >= items_.size() || j >= items_.size()) {
    throw Error(ErrorKind::Index, "reduce indices " + std::to_string(i) + ", " + std::to_string(j) +
                                      " invalid for memory of size " + std::to_string(items_.size()));
  }
  if (!can_reduce(i, j)) {
    throw Error(ErrorKind::Policy, "adjacent-only memory cannot associate " + items_[i].span.str() + " with " +
                                       items_[j].span.str());
  }
  TreeNode out;
  out.left = items_[i].node;
  out.right = items_[j].node;
  out.span = items_[i].span.merged(items_[j].span);
  out.repr = associate(model, items_[i].repr, items_[j].repr);
  out.score = saliency(model, out.repr);

  items_.erase(items_.begin() + static_cast<std::ptrdiff_t>(std::max(i, j)));
  items_.erase(items_.begin() + static_cast<std::ptrdiff_t>(std::min(i, j)));
  place(StmItem{out.repr, out.span, node});
  return out;
}

}  // namespace raam
