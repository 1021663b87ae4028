#include "raam/tape.hpp"

#include "raam/error.hpp"

namespace raam {

Tape::Node Tape::push(Entry entry) {
  entries_.push_back(std::move(entry));
  return entries_.size() - 1;
}

void Tape::check(Node node, const char* what) const {
  if (node >= entries_.size()) {
    throw Error(ErrorKind::Structure, std::string(what) + ": tape node " + std::to_string(node) +
                                          " does not exist");
  }
}

Tape::Node Tape::embed(WordId id) {
  return push({Op::Embed, 0, 0, id, raam::embed(*model_, id)});
}

Tape::Node Tape::constant(Vector value) { return push({Op::Constant, 0, 0, 0, std::move(value)}); }

Tape::Node Tape::associate(Node left, Node right) {
  check(left, "associate");
  check(right, "associate");
  Vector out = raam::associate(*model_, entries_[left].value, entries_[right].value);
  return push({Op::Associate, left, right, 0, std::move(out)});
}

Tape::Node Tape::saliency(Node x) {
  check(x, "saliency");
  const double s = raam::saliency(*model_, entries_[x].value);
  return push({Op::Saliency, x, 0, 0, Vector::Constant(1, s)});
}

Tape::Node Tape::dissociate(Node x) {
  check(x, "dissociate");
  auto [u, v] = raam::dissociate(*model_, entries_[x].value);
  Vector out(u.size() + v.size());
  out << u, v;
  return push({Op::Dissociate, x, 0, 0, std::move(out)});
}

double Tape::scalar(Node node) const {
  const auto& v = entries_.at(node).value;
  if (v.size() != 1) throw Error(ErrorKind::Structure, "tape node is not a scalar");
  return v[0];
}

GradientSet backward(const Model& model, const Tape& tape, const Upstream& upstream) {
  if (tape.model_ != &model && (tape.model_->dim() != model.dim() ||
                                tape.model_->vocab_size() != model.vocab_size())) {
    throw Error(ErrorKind::Structure, "tape was recorded against a model of a different shape");
  }
  GradientSet grads(model);
  const auto& entries = tape.entries_;
  std::vector<Vector> adjoint(entries.size());
  for (const auto& [node, g] : upstream) {
    if (node >= entries.size()) {
      throw Error(ErrorKind::Structure, "upstream gradient for missing tape node " + std::to_string(node));
    }
    if (g.size() != entries[node].value.size()) {
      throw Error(ErrorKind::Structure, "upstream gradient for tape node " + std::to_string(node) + " has size " +
                                            std::to_string(g.size()) + ", expected " +
                                            std::to_string(entries[node].value.size()));
    }
    if (adjoint[node].size() == 0) {
      adjoint[node] = g;
    } else {
      adjoint[node] += g;
    }
  }

  const auto d = static_cast<Eigen::Index>(model.dim());
  const auto accumulate = [&adjoint](Tape::Node node, const auto& g) {
    if (adjoint[node].size() == 0) {
      adjoint[node] = g;
    } else {
      adjoint[node] += g;
    }
  };

  for (std::size_t k = entries.size(); k-- > 0;) {
    if (adjoint[k].size() == 0) continue;
    const auto& e = entries[k];
    const Vector& g = adjoint[k];
    switch (e.op) {
      case Tape::Op::Constant:
        break;
      case Tape::Op::Embed:
        grads.embed_row(e.word) += g;
        break;
      case Tape::Op::Associate: {
        // tanh'(z) = 1 - y^2 with the recorded output y.
        const Vector dz = g.cwiseProduct((1.0 - e.value.array().square()).matrix());
        const Vector& u = entries[e.a].value;
        const Vector& v = entries[e.b].value;
        grads.assoc_w().leftCols(d).noalias() += dz * u.transpose();
        grads.assoc_w().rightCols(d).noalias() += dz * v.transpose();
        grads.assoc_b() += dz;
        accumulate(e.a, model.assoc_w.leftCols(d).transpose() * dz);
        accumulate(e.b, model.assoc_w.rightCols(d).transpose() * dz);
        break;
      }
      case Tape::Op::Saliency: {
        const double s = g[0];
        grads.sal_w() += s * entries[e.a].value;
        grads.sal_b() += s;
        accumulate(e.a, s * model.sal_w);
        break;
      }
      case Tape::Op::Dissociate: {
        grads.dissoc_w().noalias() += g * entries[e.a].value.transpose();
        grads.dissoc_b() += g;
        accumulate(e.a, model.dissoc_w.transpose() * g);
        break;
      }
    }
  }
  return grads;
}

}  // namespace raam
