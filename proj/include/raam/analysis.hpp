#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "raam/corpus.hpp"
#include "raam/model.hpp"
#include "raam/tree.hpp"

namespace raam {

enum class Metric { Euclidean, Cosine };

Metric parse_metric(const std::string& name);

// Euclidean distance, or 1 - cosine similarity.
double distance(const Vector& a, const Vector& b, Metric metric);

struct Neighbor {
  std::vector<std::string> tokens;
  double distance = 0.0;
};

struct NeighborTable {
  std::vector<std::string> query;
  std::size_t rank = 0;  // frequency rank of a single-word query, 0 otherwise
  std::vector<Neighbor> neighbors;  // ascending distance, query excluded
};

// Exact k nearest embedding rows; distance ties go to the lower id.
NeighborTable nearest_words(const Model& model, const Vocab& vocab, const std::string& query,
                            std::size_t k, Metric metric = Metric::Euclidean);

struct PhraseTableOptions {
  std::size_t length = 2;    // words per sequence
  std::size_t top_m = 500;   // candidates draw from the top_m most frequent words
  std::size_t k = 10;
  Metric metric = Metric::Euclidean;
  std::size_t budget = 1'000'000;  // maximum candidate count
};

inline constexpr std::size_t kMaxPhraseLength = 3;

// Number of candidate sequences phrase_table would embed.
std::size_t phrase_candidate_count(std::size_t top_m, std::size_t length);

// Embeds every length-`length` sequence over the top_m words with the
// greedy parser and returns the k nearest candidates of each query.
std::vector<NeighborTable> phrase_table(const Model& model, const Vocab& vocab,
                                        std::span<const std::vector<std::string>> queries,
                                        const PhraseTableOptions& options);

// Root representation of the greedy parse of `words`.
Repr sequence_embedding(const Model& model, std::span<const WordId> words);

// Columns per query, as in a neighbor listing: header, rank line, then neighbors.
void write_table_text(std::ostream& out, std::span<const NeighborTable> tables);
// One line per neighbor: query, rank, position, neighbor, distance.
void write_table_tsv(std::ostream& out, std::span<const NeighborTable> tables);

struct BracketScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Unlabeled span comparison over internal spans excluding the whole segment.
BracketScore bracket_f1(const Bracketing& pred, const Bracketing& gold);
BracketScore bracket_f1(const ParseTree& pred, const ParseTree& gold);

}  // namespace raam
