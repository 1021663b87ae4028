#pragma once

#include <cstddef>
#include <map>

#include "raam/model.hpp"

namespace raam {

// Gradient accumulator mirroring a Model. Dense blocks are allocated on
// first touch; embedding gradients are kept per touched row.
class GradientSet {
 public:
  GradientSet() = default;
  explicit GradientSet(const Model& model) : dim_(model.dim()), vocab_size_(model.vocab_size()) {}
  GradientSet(std::size_t dim, std::size_t vocab_size) : dim_(dim), vocab_size_(vocab_size) {}

  std::size_t dim() const { return dim_; }
  std::size_t vocab_size() const { return vocab_size_; }

  // True when no block has been touched.
  bool empty() const;

  Vector& embed_row(WordId id);
  Matrix& assoc_w();
  Vector& assoc_b();
  Matrix& dissoc_w();
  Vector& dissoc_b();
  Vector& sal_w();
  double& sal_b();

  const std::map<WordId, Vector>& embed_rows() const { return embed_; }
  // Untouched blocks are returned with size zero.
  const Matrix& assoc_w() const { return assoc_w_; }
  const Vector& assoc_b() const { return assoc_b_; }
  const Matrix& dissoc_w() const { return dissoc_w_; }
  const Vector& dissoc_b() const { return dissoc_b_; }
  const Vector& sal_w() const { return sal_w_; }
  bool has_sal_b() const { return has_sal_b_; }
  double sal_b() const { return sal_b_; }

  GradientSet& operator+=(const GradientSet& other);
  GradientSet& operator*=(double factor);

  // Largest absolute entry across all blocks.
  double max_abs() const;

 private:
  std::size_t dim_ = 0;
  std::size_t vocab_size_ = 0;
  std::map<WordId, Vector> embed_;
  Matrix assoc_w_;
  Vector assoc_b_;
  Matrix dissoc_w_;
  Vector dissoc_b_;
  Vector sal_w_;
  double sal_b_ = 0.0;
  bool has_sal_b_ = false;
};

// p <- p - lr * g for every touched block. Only touched embedding rows move.
void sgd_apply(Model& model, const GradientSet& grads, double lr);

}  // namespace raam
