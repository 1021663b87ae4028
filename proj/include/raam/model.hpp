#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "raam/corpus.hpp"

namespace raam {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A representation vector: a word embedding or an association output.
using Repr = Vector;

// All trainable parameters. Every association, dissociation and saliency
// evaluation reads these blocks; there is exactly one copy per model.
struct Model {
  static constexpr std::uint32_t kFormatVersion = 1;

  Model() = default;
  // Zero-initialized parameters.
  Model(std::size_t dim, std::size_t vocab_size);

  std::size_t dim() const { return static_cast<std::size_t>(sal_w.size()); }
  std::size_t vocab_size() const { return static_cast<std::size_t>(embed.rows()); }
  std::size_t parameter_count() const;

  Matrix embed;     // V x d lookup table
  Matrix assoc_w;   // d x 2d
  Vector assoc_b;   // d
  Matrix dissoc_w;  // 2d x d
  Vector dissoc_b;  // 2d
  Vector sal_w;     // d
  double sal_b = 0.0;
};

// Bitwise equality of every parameter block.
bool identical(const Model& a, const Model& b);
bool all_finite(const Model& model);

struct DimBounds {
  std::size_t min = 20;
  std::size_t max = 200;
};

struct InitOptions {
  DimBounds bounds;
  // Embedding TSV (token<TAB>v1..vd); rows for words missing from the file stay random.
  std::optional<std::string> pretrained;
};

// W ~ U(-1/sqrt(d), 1/sqrt(d)); A and D weights ~ U(-1/sqrt(2d), 1/sqrt(2d));
// R weights ~ U(-1/sqrt(d), 1/sqrt(d)); biases zero.
Model init_model(std::size_t dim, const Vocab& vocab, std::uint64_t seed,
                 const InitOptions& options = {});

Repr embed(const Model& model, WordId id);

// tanh(A_w [u; v] + A_b), kept strictly inside (-1, 1).
Repr associate(const Model& model, const Repr& u, const Repr& v);

// R_w . x + R_b
double saliency(const Model& model, const Repr& x);

// D_w x + D_b split into its two halves.
std::pair<Repr, Repr> dissociate(const Model& model, const Repr& x);

// Largest double below one; association outputs are clamped to it so the
// open-interval invariant survives saturation.
inline constexpr double kTanhBound = 1.0 - 0x1.0p-53;

void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

struct ModelHeader {
  std::uint32_t version = 0;
  std::uint32_t dim = 0;
  std::uint32_t vocab_size = 0;
};
ModelHeader read_model_header(const std::string& path);

void export_embeddings(const Model& model, const Vocab& vocab, std::ostream& out);

}  // namespace raam
