#include "raam/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "raam/error.hpp"
#include "raam/random.hpp"

namespace raam {

Model::Model(std::size_t dim, std::size_t vocab_size)
    : embed(Matrix::Zero(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(dim))),
      assoc_w(Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(2 * dim))),
      assoc_b(Vector::Zero(static_cast<Eigen::Index>(dim))),
      dissoc_w(Matrix::Zero(static_cast<Eigen::Index>(2 * dim), static_cast<Eigen::Index>(dim))),
      dissoc_b(Vector::Zero(static_cast<Eigen::Index>(2 * dim))),
      sal_w(Vector::Zero(static_cast<Eigen::Index>(dim))) {}

std::size_t Model::parameter_count() const {
  return static_cast<std::size_t>(embed.size() + assoc_w.size() + assoc_b.size() + dissoc_w.size() +
                                  dissoc_b.size() + sal_w.size() + 1);
}

namespace {

template <typename Derived>
bool same_bits(const Eigen::DenseBase<Derived>& a, const Eigen::DenseBase<Derived>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.derived().data(), b.derived().data(),
                     static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

void check_finite(const Repr& x, const char* what) {
  if (!x.allFinite()) throw Error(ErrorKind::Numeric, std::string("non-finite input to ") + what);
}

void check_dim(const Model& model, const Repr& x, const char* what) {
  if (static_cast<std::size_t>(x.size()) != model.dim()) {
    throw Error(ErrorKind::Structure, std::string(what) + ": expected a " + std::to_string(model.dim()) +
                                          "-vector, got " + std::to_string(x.size()));
  }
}

void fill_uniform(double* data, Eigen::Index count, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < count; ++i) data[i] = rng.uniform(-bound, bound);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

template <typename Derived>
void put_block(std::ostream& out, const Eigen::DenseBase<Derived>& block) {
  const double* data = block.derived().data();
  for (Eigen::Index i = 0; i < block.size(); ++i) put_f64(out, data[i]);
}

std::uint32_t get_u32(std::istream& in, const char* field) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw Error(ErrorKind::Format, std::string("model file truncated while reading ") + field);
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

template <typename Derived>
void get_block(std::istream& in, Eigen::DenseBase<Derived>& block, const char* field) {
  const auto bytes = static_cast<std::size_t>(block.size()) * 8;
  std::string raw(bytes, '\0');
  if (!in.read(raw.data(), static_cast<std::streamsize>(bytes))) {
    throw Error(ErrorKind::Format, std::string("model file truncated while reading ") + field);
  }
  double* data = block.derived().data();
  for (Eigen::Index i = 0; i < block.size(); ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[static_cast<std::size_t>(i) * 8 + k]))
              << (8 * k);
    }
    data[i] = std::bit_cast<double>(bits);
  }
}

ModelHeader read_header(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "RAAM", 4) != 0) {
    throw Error(ErrorKind::Format, "model file: bad magic (expected \"RAAM\")");
  }
  ModelHeader h;
  h.version = get_u32(in, "version");
  if (h.version != Model::kFormatVersion) {
    throw Error(ErrorKind::Format, "model file: unsupported version " + std::to_string(h.version));
  }
  h.dim = get_u32(in, "d");
  h.vocab_size = get_u32(in, "V");
  if (h.dim == 0) throw Error(ErrorKind::Format, "model file: dimension d is zero");
  return h;
}

void load_pretrained(Model& model, const Vocab& vocab, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open pretrained embeddings " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string token;
    std::getline(fields, token, '\t');
    std::vector<double> values;
    std::string cell;
    while (std::getline(fields, cell, '\t')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorKind::Format, path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (values.size() != model.dim()) {
      throw Error(ErrorKind::Format, "pretrained embeddings " + path + " have dimension " +
                                         std::to_string(values.size()) + " but the model has dimension " +
                                         std::to_string(model.dim()));
    }
    const auto id = vocab.find(token);
    if (!id) continue;
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (!std::isfinite(values[j])) {
        throw Error(ErrorKind::Format, path + ":" + std::to_string(lineno) + ": non-finite value");
      }
      model.embed(*id, static_cast<Eigen::Index>(j)) = values[j];
    }
  }
}

}  // namespace

bool identical(const Model& a, const Model& b) {
  return same_bits(a.embed, b.embed) && same_bits(a.assoc_w, b.assoc_w) &&
         same_bits(a.assoc_b, b.assoc_b) && same_bits(a.dissoc_w, b.dissoc_w) &&
         same_bits(a.dissoc_b, b.dissoc_b) && same_bits(a.sal_w, b.sal_w) &&
         std::bit_cast<std::uint64_t>(a.sal_b) == std::bit_cast<std::uint64_t>(b.sal_b);
}

bool all_finite(const Model& m) {
  return m.embed.allFinite() && m.assoc_w.allFinite() && m.assoc_b.allFinite() &&
         m.dissoc_w.allFinite() && m.dissoc_b.allFinite() && m.sal_w.allFinite() &&
         std::isfinite(m.sal_b);
}

Model init_model(std::size_t dim, const Vocab& vocab, std::uint64_t seed, const InitOptions& options) {
  if (dim < options.bounds.min || dim > options.bounds.max) {
    throw Error(ErrorKind::Config, "dimension " + std::to_string(dim) + " outside [" +
                                       std::to_string(options.bounds.min) + ", " +
                                       std::to_string(options.bounds.max) + "]");
  }
  Model model(dim, vocab.size());
  Rng rng(seed);
  const double d = static_cast<double>(dim);
  fill_uniform(model.embed.data(), model.embed.size(), 1.0 / std::sqrt(d), rng);
  fill_uniform(model.assoc_w.data(), model.assoc_w.size(), 1.0 / std::sqrt(2.0 * d), rng);
  fill_uniform(model.dissoc_w.data(), model.dissoc_w.size(), 1.0 / std::sqrt(2.0 * d), rng);
  fill_uniform(model.sal_w.data(), model.sal_w.size(), 1.0 / std::sqrt(d), rng);
  if (options.pretrained) load_pretrained(model, vocab, *options.pretrained);
  return model;
}

Repr embed(const Model& model, WordId id) {
  if (id >= model.vocab_size()) {
    throw Error(ErrorKind::Index, "word id " + std::to_string(id) + " out of range for model with V=" +
                                      std::to_string(model.vocab_size()));
  }
  return model.embed.row(id).transpose();
}

Repr associate(const Model& model, const Repr& u, const Repr& v) {
  check_dim(model, u, "associate");
  check_dim(model, v, "associate");
  check_finite(u, "associate");
  check_finite(v, "associate");
  const auto d = static_cast<Eigen::Index>(model.dim());
  Repr out = model.assoc_b;
  out.noalias() += model.assoc_w.leftCols(d) * u;
  out.noalias() += model.assoc_w.rightCols(d) * v;
  for (Eigen::Index i = 0; i < d; ++i) out[i] = std::clamp(std::tanh(out[i]), -kTanhBound, kTanhBound);
  return out;
}

double saliency(const Model& model, const Repr& x) {
  check_dim(model, x, "saliency");
  check_finite(x, "saliency");
  return model.sal_w.dot(x) + model.sal_b;
}

std::pair<Repr, Repr> dissociate(const Model& model, const Repr& x) {
  check_dim(model, x, "dissociate");
  check_finite(x, "dissociate");
  const auto d = static_cast<Eigen::Index>(model.dim());
  Vector out = model.dissoc_b;
  out.noalias() += model.dissoc_w * x;
  return {out.head(d), out.tail(d)};
}

void write_model(std::ostream& out, const Model& model) {
  out.write("RAAM", 4);
  put_u32(out, Model::kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(model.dim()));
  put_u32(out, static_cast<std::uint32_t>(model.vocab_size()));
  put_block(out, model.embed);
  put_block(out, model.assoc_w);
  put_block(out, model.assoc_b);
  put_block(out, model.dissoc_w);
  put_block(out, model.dissoc_b);
  put_block(out, model.sal_w);
  put_f64(out, model.sal_b);
}

Model read_model(std::istream& in) {
  const ModelHeader h = read_header(in);
  Model model(h.dim, h.vocab_size);
  get_block(in, model.embed, "W");
  get_block(in, model.assoc_w, "A_w");
  get_block(in, model.assoc_b, "A_b");
  get_block(in, model.dissoc_w, "D_w");
  get_block(in, model.dissoc_b, "D_b");
  get_block(in, model.sal_w, "R_w");
  Eigen::Matrix<double, 1, 1> bias;
  get_block(in, bias, "R_b");
  model.sal_b = bias(0);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorKind::Format, "model file: trailing bytes after R_b");
  }
  if (!all_finite(model)) throw Error(ErrorKind::Format, "model file: non-finite parameter");
  return model;
}

void save_model(const Model& model, const std::string& path) {
  // The previous file stays in place until the new one is complete.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write model file " + path);
    write_model(out, model);
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "failed writing model file " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw Error(ErrorKind::Io, "cannot rename " + tmp + " to " + path);
  }
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open model file " + path);
  return read_model(in);
}

ModelHeader read_model_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open model file " + path);
  return read_header(in);
}

void export_embeddings(const Model& model, const Vocab& vocab, std::ostream& out) {
  if (vocab.size() != model.vocab_size()) {
    throw Error(ErrorKind::Structure, "vocabulary size " + std::to_string(vocab.size()) +
                                          " does not match model V=" + std::to_string(model.vocab_size()));
  }
  const auto old = out.precision(17);
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    out << vocab.token(static_cast<WordId>(id));
    for (Eigen::Index j = 0; j < model.embed.cols(); ++j) out << '\t' << model.embed(static_cast<Eigen::Index>(id), j);
    out << '\n';
  }
  out.precision(old);
}

}  // namespace raam
