#include "raam/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "raam/error.hpp"
#include "raam/parser.hpp"

namespace raam {

Metric parse_metric(const std::string& name) {
  if (name == "euclidean") return Metric::Euclidean;
  if (name == "cosine") return Metric::Cosine;
  throw Error(ErrorKind::Config, "unknown metric '" + name + "' (expected euclidean or cosine)");
}

double distance(const Vector& a, const Vector& b, Metric metric) {
  if (metric == Metric::Euclidean) return (a - b).norm();
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - a.dot(b) / (na * nb);
}

namespace {

struct Hit {
  double distance;
  std::size_t index;
  bool operator<(const Hit& o) const {
    return distance != o.distance ? distance < o.distance : index < o.index;
  }
};

// Exact k smallest hits of a full scan over the rows of `table`.
std::vector<Hit> scan(const Matrix& table, const Vector& query, std::size_t k, Metric metric,
                      std::size_t exclude) {
  std::vector<Hit> hits;
  hits.reserve(static_cast<std::size_t>(table.rows()));
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    if (static_cast<std::size_t>(r) == exclude) continue;
    hits.push_back({distance(table.row(r).transpose(), query, metric), static_cast<std::size_t>(r)});
  }
  const std::size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end());
  hits.resize(keep);
  return hits;
}

WordId lookup(const Vocab& vocab, const std::string& token) {
  const auto id = vocab.find(token);
  if (!id) {
    throw Error(ErrorKind::Lookup, "'" + token + "' is not in the vocabulary (query " + std::string(kUnkToken) +
                                       " to inspect the unknown-word embedding)");
  }
  return *id;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

NeighborTable nearest_words(const Model& model, const Vocab& vocab, const std::string& query, std::size_t k,
                            Metric metric) {
  if (vocab.size() != model.vocab_size()) {
    throw Error(ErrorKind::Structure, "vocabulary and model sizes differ");
  }
  const WordId id = lookup(vocab, query);
  if (k >= vocab.size()) {
    throw Error(ErrorKind::Config, "k=" + std::to_string(k) + " must be smaller than the vocabulary size " +
                                       std::to_string(vocab.size()));
  }
  NeighborTable table;
  table.query = {query};
  table.rank = vocab.frequency_rank(id);
  for (const Hit& h : scan(model.embed, embed(model, id), k, metric, id)) {
    table.neighbors.push_back({{vocab.token(static_cast<WordId>(h.index))}, h.distance});
  }
  return table;
}

std::size_t phrase_candidate_count(std::size_t top_m, std::size_t length) {
  std::size_t count = 1;
  for (std::size_t i = 0; i < length; ++i) {
    if (top_m != 0 && count > SIZE_MAX / top_m) return SIZE_MAX;
    count *= top_m;
  }
  return count;
}

Repr sequence_embedding(const Model& model, std::span<const WordId> words) {
  return greedy_parse(words, model).tree.root().repr;
}

std::vector<NeighborTable> phrase_table(const Model& model, const Vocab& vocab,
                                        std::span<const std::vector<std::string>> queries,
                                        const PhraseTableOptions& options) {
  if (options.length == 0 || options.length > kMaxPhraseLength) {
    throw Error(ErrorKind::Size, "phrase length must be between 1 and " + std::to_string(kMaxPhraseLength));
  }
  if (options.top_m == 0 || options.top_m > vocab.word_count()) {
    throw Error(ErrorKind::Config, "top_m=" + std::to_string(options.top_m) + " must be between 1 and the " +
                                       std::to_string(vocab.word_count()) + " vocabulary words");
  }
  const std::size_t count = phrase_candidate_count(options.top_m, options.length);
  if (count > options.budget) {
    throw Error(ErrorKind::Size, std::to_string(count) + " candidate sequences exceed the budget of " +
                                     std::to_string(options.budget) + "; use a smaller top_m");
  }
  if (options.k >= count) {
    throw Error(ErrorKind::Config, "k must be smaller than the candidate count " + std::to_string(count));
  }

  std::vector<std::vector<WordId>> query_ids;
  for (const auto& q : queries) {
    if (q.size() != options.length) {
      throw Error(ErrorKind::Config, "query '" + join(q) + "' does not have " + std::to_string(options.length) +
                                         " words");
    }
    std::vector<WordId> ids;
    for (const auto& t : q) ids.push_back(lookup(vocab, t));
    query_ids.push_back(std::move(ids));
  }

  // Candidates in odometer order over ids [kSpecialCount, kSpecialCount + top_m).
  const auto d = static_cast<Eigen::Index>(model.dim());
  Matrix table(static_cast<Eigen::Index>(count), d);
  std::vector<WordId> seq(options.length, kSpecialCount);
  const auto index_of = [&](const std::vector<WordId>& ids) -> std::size_t {
    std::size_t idx = 0;
    for (WordId w : ids) {
      if (w < kSpecialCount || w >= kSpecialCount + options.top_m) return SIZE_MAX;
      idx = idx * options.top_m + (w - kSpecialCount);
    }
    return idx;
  };
  for (std::size_t c = 0; c < count; ++c) {
    table.row(static_cast<Eigen::Index>(c)) = sequence_embedding(model, seq).transpose();
    for (std::size_t p = options.length; p-- > 0;) {
      if (++seq[p] < kSpecialCount + options.top_m) break;
      seq[p] = kSpecialCount;
    }
  }

  std::vector<NeighborTable> out;
  for (std::size_t qi = 0; qi < query_ids.size(); ++qi) {
    NeighborTable t;
    t.query = queries[qi];
    t.rank = options.length == 1 ? vocab.frequency_rank(query_ids[qi][0]) : 0;
    const Repr q = sequence_embedding(model, query_ids[qi]);
    for (const Hit& h : scan(table, q, options.k, options.metric, index_of(query_ids[qi]))) {
      Neighbor nb;
      std::size_t idx = h.index;
      nb.tokens.resize(options.length);
      for (std::size_t p = options.length; p-- > 0;) {
        nb.tokens[p] = vocab.token(static_cast<WordId>(kSpecialCount + idx % options.top_m));
        idx /= options.top_m;
      }
      nb.distance = h.distance;
      t.neighbors.push_back(std::move(nb));
    }
    out.push_back(std::move(t));
  }
  return out;
}

void write_table_text(std::ostream& out, std::span<const NeighborTable> tables) {
  const bool ranked = std::any_of(tables.begin(), tables.end(), [](const auto& t) { return t.rank != 0; });
  const std::size_t header_rows = ranked ? 2 : 1;
  std::size_t rows = 0;
  std::vector<std::vector<std::string>> columns;
  for (const auto& t : tables) {
    std::vector<std::string> col;
    col.push_back(join(t.query));
    if (ranked) col.push_back(t.rank ? "(" + std::to_string(t.rank) + ")" : "");
    for (const auto& nb : t.neighbors) col.push_back(join(nb.tokens));
    rows = std::max(rows, col.size());
    columns.push_back(std::move(col));
  }
  std::vector<std::size_t> width;
  for (const auto& col : columns) {
    std::size_t w = 0;
    for (const auto& cell : col) w = std::max(w, cell.size());
    width.push_back(w + 2);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    std::string line;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const std::string cell = r < columns[c].size() ? columns[c][r] : "";
      line += cell;
      if (c + 1 < columns.size()) line.append(width[c] - cell.size(), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
    if (r + 1 == header_rows) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w;
      out << std::string(total - 2, '-') << '\n';
    }
  }
}

void write_table_tsv(std::ostream& out, std::span<const NeighborTable> tables) {
  out << "query\trank\tposition\tneighbor\tdistance\n";
  const auto old = out.precision(17);
  for (const auto& t : tables) {
    for (std::size_t i = 0; i < t.neighbors.size(); ++i) {
      out << join(t.query) << '\t' << t.rank << '\t' << (i + 1) << '\t' << join(t.neighbors[i].tokens) << '\t'
          << t.neighbors[i].distance << '\n';
    }
  }
  out.precision(old);
}

BracketScore bracket_f1(const Bracketing& pred, const Bracketing& gold) {
  if (pred.leaves != gold.leaves) {
    throw Error(ErrorKind::Structure, "bracket comparison needs equal leaf counts (" + std::to_string(pred.leaves) +
                                          " vs " + std::to_string(gold.leaves) + ")");
  }
  const Span whole = Span::interval(0, pred.leaves);
  const auto countable = [&whole](const Bracketing& b) {
    auto spans = b.internal_spans();
    spans.erase(std::remove(spans.begin(), spans.end(), whole), spans.end());
    return spans;
  };
  const auto p = countable(pred);
  const auto g = countable(gold);
  std::vector<Span> shared;
  std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(shared));
  BracketScore s;
  s.precision = p.empty() ? 1.0 : static_cast<double>(shared.size()) / static_cast<double>(p.size());
  s.recall = g.empty() ? 1.0 : static_cast<double>(shared.size()) / static_cast<double>(g.size());
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

BracketScore bracket_f1(const ParseTree& pred, const ParseTree& gold) {
  return bracket_f1(pred.bracketing(), gold.bracketing());
}

}  // namespace raam
