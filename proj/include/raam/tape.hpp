#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "raam/gradient.hpp"
#include "raam/model.hpp"

namespace raam {

// Forward record of embed / associate / saliency / dissociate applications
// against one model, in execution order. Values are computed with the same
// functions used for inference, so taped and untaped results agree bitwise.
class Tape {
 public:
  using Node = std::size_t;

  explicit Tape(const Model& model) : model_(&model) {}

  Node embed(WordId id);
  // A value that carries no parameter dependence.
  Node constant(Vector value);
  Node associate(Node left, Node right);
  // Value is a 1-vector holding the score.
  Node saliency(Node x);
  // Value is the 2d-vector [u'; v'].
  Node dissociate(Node x);

  const Vector& value(Node node) const { return entries_.at(node).value; }
  double scalar(Node node) const;
  std::size_t size() const { return entries_.size(); }
  const Model& model() const { return *model_; }

 private:
  friend GradientSet backward(const Model& model, const Tape& tape,
                              const std::vector<std::pair<Tape::Node, Vector>>& upstream);

  enum class Op { Embed, Constant, Associate, Saliency, Dissociate };
  struct Entry {
    Op op;
    Node a = 0;
    Node b = 0;
    WordId word = 0;
    Vector value;
  };

  Node push(Entry entry);
  void check(Node node, const char* what) const;

  const Model* model_;
  std::vector<Entry> entries_;
};

// d(loss)/d(node value) for selected nodes.
using Upstream = std::vector<std::pair<Tape::Node, Vector>>;

inline Vector scalar_grad(double g) { return Vector::Constant(1, g); }

// Reverse-mode gradients of the loss defined by `upstream` with respect to
// every parameter block reached from the upstream nodes.
GradientSet backward(const Model& model, const Tape& tape, const Upstream& upstream);

}  // namespace raam
