#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "raam/random.hpp"
#include "raam/tree.hpp"

namespace raam {

// Small weighted grammar for synthetic corpora. Text format, one entry per
// line ('#' comments):
//   class NAME: tok tok ...
//   rule LHS -> A B @weight        (weight optional, default 1)
// The start symbol is the left-hand side of the first rule.
struct ToyGrammar {
  struct Rule {
    std::string lhs;
    std::string left;
    std::string right;
    double weight = 1.0;
  };

  std::vector<std::string> class_names;  // file order
  std::map<std::string, std::vector<std::string>> classes;
  std::vector<Rule> rules;
  std::string start;

  bool is_class(const std::string& symbol) const { return classes.count(symbol) != 0; }
  // Class of a terminal token, if any.
  std::optional<std::string> class_of(const std::string& token) const;
  std::size_t word_count() const;
};

ToyGrammar parse_grammar(std::istream& in);
ToyGrammar load_grammar(const std::string& path);

struct ToySentence {
  std::vector<std::string> tokens;
  Bracketing shape;  // derivation tree
};

struct GenerateOptions {
  std::size_t min_length = 4;
  std::size_t max_length = 7;
  std::size_t max_depth = 12;
  std::size_t max_attempts = 10000;  // per sentence
};

// Samples derivations from the start symbol, rejecting those outside the
// length range.
ToySentence generate_sentence(const ToyGrammar& grammar, Rng& rng, const GenerateOptions& options = {});
std::vector<ToySentence> generate_corpus(const ToyGrammar& grammar, std::size_t count, std::uint64_t seed,
                                         const GenerateOptions& options = {});

}  // namespace raam
