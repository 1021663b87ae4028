#include "raam/gradient.hpp"

#include <algorithm>
#include <cmath>

#include "raam/error.hpp"

namespace raam {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

template <typename Block>
void add_block(Block& into, const Block& from) {
  if (from.size() == 0) return;
  if (into.size() == 0) {
    into = from;
  } else {
    into += from;
  }
}

template <typename Block>
void step(Block& param, const Block& grad, double lr) {
  if (grad.size() == 0) return;
  param.noalias() -= lr * grad;
}

}  // namespace

bool GradientSet::empty() const {
  return embed_.empty() && assoc_w_.size() == 0 && assoc_b_.size() == 0 && dissoc_w_.size() == 0 &&
         dissoc_b_.size() == 0 && sal_w_.size() == 0 && !has_sal_b_;
}

Vector& GradientSet::embed_row(WordId id) {
  if (id >= vocab_size_) {
    throw Error(ErrorKind::Index, "gradient row " + std::to_string(id) + " out of range for V=" +
                                      std::to_string(vocab_size_));
  }
  auto [it, inserted] = embed_.try_emplace(id);
  if (inserted) it->second = Vector::Zero(idx(dim_));
  return it->second;
}

Matrix& GradientSet::assoc_w() {
  if (assoc_w_.size() == 0) assoc_w_ = Matrix::Zero(idx(dim_), idx(2 * dim_));
  return assoc_w_;
}

Vector& GradientSet::assoc_b() {
  if (assoc_b_.size() == 0) assoc_b_ = Vector::Zero(idx(dim_));
  return assoc_b_;
}

Matrix& GradientSet::dissoc_w() {
  if (dissoc_w_.size() == 0) dissoc_w_ = Matrix::Zero(idx(2 * dim_), idx(dim_));
  return dissoc_w_;
}

Vector& GradientSet::dissoc_b() {
  if (dissoc_b_.size() == 0) dissoc_b_ = Vector::Zero(idx(2 * dim_));
  return dissoc_b_;
}

Vector& GradientSet::sal_w() {
  if (sal_w_.size() == 0) sal_w_ = Vector::Zero(idx(dim_));
  return sal_w_;
}

double& GradientSet::sal_b() {
  has_sal_b_ = true;
  return sal_b_;
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  if (other.empty()) return *this;
  if (empty() && dim_ == 0) {
    *this = other;
    return *this;
  }
  if (other.dim_ != dim_ || other.vocab_size_ != vocab_size_) {
    throw Error(ErrorKind::Structure, "cannot merge gradient sets of different shapes");
  }
  for (const auto& [id, row] : other.embed_) {
    auto [it, inserted] = embed_.try_emplace(id, row);
    if (!inserted) it->second += row;
  }
  add_block(assoc_w_, other.assoc_w_);
  add_block(assoc_b_, other.assoc_b_);
  add_block(dissoc_w_, other.dissoc_w_);
  add_block(dissoc_b_, other.dissoc_b_);
  add_block(sal_w_, other.sal_w_);
  if (other.has_sal_b_) sal_b() += other.sal_b_;
  return *this;
}

GradientSet& GradientSet::operator*=(double factor) {
  for (auto& [id, row] : embed_) row *= factor;
  assoc_w_ *= factor;
  assoc_b_ *= factor;
  dissoc_w_ *= factor;
  dissoc_b_ *= factor;
  sal_w_ *= factor;
  sal_b_ *= factor;
  return *this;
}

double GradientSet::max_abs() const {
  double m = 0.0;
  const auto upd = [&m](const auto& block) {
    if (block.size() != 0) m = std::max(m, block.cwiseAbs().maxCoeff());
  };
  for (const auto& [id, row] : embed_) upd(row);
  upd(assoc_w_);
  upd(assoc_b_);
  upd(dissoc_w_);
  upd(dissoc_b_);
  upd(sal_w_);
  if (has_sal_b_) m = std::max(m, std::abs(sal_b_));
  return m;
}

void sgd_apply(Model& model, const GradientSet& grads, double lr) {
  if (grads.empty()) return;
  if (grads.dim() != model.dim() || grads.vocab_size() != model.vocab_size()) {
    throw Error(ErrorKind::Structure, "gradient shape (d=" + std::to_string(grads.dim()) + ", V=" +
                                          std::to_string(grads.vocab_size()) + ") does not match model (d=" +
                                          std::to_string(model.dim()) + ", V=" +
                                          std::to_string(model.vocab_size()) + ")");
  }
  if (lr == 0.0) return;
  for (const auto& [id, row] : grads.embed_rows()) {
    model.embed.row(idx(id)).noalias() -= lr * row.transpose();
  }
  step(model.assoc_w, grads.assoc_w(), lr);
  step(model.assoc_b, grads.assoc_b(), lr);
  step(model.dissoc_w, grads.dissoc_w(), lr);
  step(model.dissoc_b, grads.dissoc_b(), lr);
  step(model.sal_w, grads.sal_w(), lr);
  if (grads.has_sal_b()) model.sal_b -= lr * grads.sal_b();
}

}  // namespace raam
