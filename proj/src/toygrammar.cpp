#include "raam/toygrammar.hpp"

#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "raam/error.hpp"

namespace raam {

namespace {

std::vector<std::string> words_of(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

[[noreturn]] void bad_line(std::size_t lineno, const std::string& what) {
  throw Error(ErrorKind::Format, "grammar line " + std::to_string(lineno) + ": " + what);
}

// Expands `symbol` and returns its node in a post-order numbering where
// leaves and internal nodes share one counter; finish() renumbers.
struct Expander {
  const ToyGrammar& grammar;
  Rng& rng;
  std::size_t max_depth;
  std::size_t max_length;
  std::vector<std::string> tokens;
  struct Raw {
    bool leaf;
    std::size_t index;  // token position or child pair index
    std::size_t left = 0;
    std::size_t right = 0;
  };
  std::vector<Raw> raw;

  std::optional<std::size_t> expand(const std::string& symbol, std::size_t depth) {
    if (grammar.is_class(symbol)) {
      const auto& members = grammar.classes.at(symbol);
      tokens.push_back(members[rng.below(members.size())]);
      if (tokens.size() > max_length) return std::nullopt;
      raw.push_back({true, tokens.size() - 1});
      return raw.size() - 1;
    }
    if (depth >= max_depth) return std::nullopt;
    double total = 0.0;
    for (const auto& r : grammar.rules) {
      if (r.lhs == symbol) total += r.weight;
    }
    double pick = rng.unit() * total;
    const ToyGrammar::Rule* chosen = nullptr;
    for (const auto& r : grammar.rules) {
      if (r.lhs != symbol) continue;
      chosen = &r;
      if (pick < r.weight) break;
      pick -= r.weight;
    }
    const auto l = expand(chosen->left, depth + 1);
    if (!l) return std::nullopt;
    const auto rr = expand(chosen->right, depth + 1);
    if (!rr) return std::nullopt;
    raw.push_back({false, 0, *l, *rr});
    return raw.size() - 1;
  }

  Bracketing finish() const {
    Bracketing b;
    b.leaves = tokens.size();
    std::vector<std::size_t> id(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
      if (raw[k].leaf) {
        id[k] = raw[k].index;
      } else {
        b.merges.push_back({id[raw[k].left], id[raw[k].right]});
        id[k] = b.leaves + b.merges.size() - 1;
      }
    }
    return b;
  }
};

}  // namespace

std::optional<std::string> ToyGrammar::class_of(const std::string& token) const {
  for (const auto& name : class_names) {
    for (const auto& t : classes.at(name)) {
      if (t == token) return name;
    }
  }
  return std::nullopt;
}

std::size_t ToyGrammar::word_count() const {
  std::set<std::string> all;
  for (const auto& [name, members] : classes) all.insert(members.begin(), members.end());
  return all.size();
}

ToyGrammar parse_grammar(std::istream& in) {
  ToyGrammar g;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto parts = words_of(line);
    if (parts.empty()) continue;
    if (parts[0] == "class") {
      const auto colon = line.find(':');
      if (colon == std::string::npos) bad_line(lineno, "expected 'class NAME: tokens'");
      const auto head = words_of(line.substr(0, colon));
      if (head.size() != 2) bad_line(lineno, "expected one class name before ':'");
      const auto members = words_of(line.substr(colon + 1));
      if (members.empty()) bad_line(lineno, "class " + head[1] + " has no tokens");
      if (g.classes.count(head[1])) bad_line(lineno, "class " + head[1] + " defined twice");
      g.class_names.push_back(head[1]);
      g.classes[head[1]] = members;
    } else if (parts[0] == "rule") {
      ToyGrammar::Rule r;
      std::size_t used = 5;
      if (parts.size() < 5 || parts[2] != "->") bad_line(lineno, "expected 'rule LHS -> A B @weight'");
      r.lhs = parts[1];
      r.left = parts[3];
      r.right = parts[4];
      if (parts.size() > 5 && parts[5].size() > 1 && parts[5][0] == '@') {
        try {
          r.weight = std::stod(parts[5].substr(1));
        } catch (const std::exception&) {
          bad_line(lineno, "bad weight " + parts[5]);
        }
        ++used;
      }
      if (parts.size() != used) bad_line(lineno, "rules must be binary");
      if (!(r.weight > 0.0)) bad_line(lineno, "rule weight must be positive");
      if (g.rules.empty()) g.start = r.lhs;
      g.rules.push_back(std::move(r));
    } else {
      bad_line(lineno, "unknown entry '" + parts[0] + "'");
    }
  }
  if (g.rules.empty()) throw Error(ErrorKind::Format, "grammar has no rules");
  std::set<std::string> heads;
  for (const auto& r : g.rules) {
    if (g.is_class(r.lhs)) throw Error(ErrorKind::Format, "symbol " + r.lhs + " is both a class and a rule head");
    heads.insert(r.lhs);
  }
  for (const auto& r : g.rules) {
    for (const auto* sym : {&r.left, &r.right}) {
      if (!g.is_class(*sym) && !heads.count(*sym)) {
        throw Error(ErrorKind::Format, "symbol " + *sym + " has no class and no rule");
      }
    }
  }
  return g;
}

ToyGrammar load_grammar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open grammar file " + path);
  return parse_grammar(in);
}

ToySentence generate_sentence(const ToyGrammar& grammar, Rng& rng, const GenerateOptions& options) {
  if (options.min_length == 0 || options.min_length > options.max_length) {
    throw Error(ErrorKind::Config, "sentence length range is empty");
  }
  for (std::size_t attempt = 0; attempt < options.max_attempts; ++attempt) {
    Expander ex{grammar, rng, options.max_depth, options.max_length, {}, {}};
    if (!ex.expand(grammar.start, 0)) continue;
    if (ex.tokens.size() < options.min_length) continue;
    ToySentence s;
    s.shape = ex.finish();
    s.tokens = std::move(ex.tokens);
    return s;
  }
  throw Error(ErrorKind::Config, "grammar produced no sentence of length " + std::to_string(options.min_length) +
                                     "-" + std::to_string(options.max_length) + " in " +
                                     std::to_string(options.max_attempts) + " attempts");
}

std::vector<ToySentence> generate_corpus(const ToyGrammar& grammar, std::size_t count, std::uint64_t seed,
                                         const GenerateOptions& options) {
  Rng rng(seed);
  std::vector<ToySentence> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_sentence(grammar, rng, options));
  return out;
}

}  // namespace raam
