#include "raam/tree.hpp"

#include <algorithm>
#include <functional>

#include "raam/error.hpp"

namespace raam {

Span Span::single(std::size_t position) {
  Span s;
  s.positions_.push_back(static_cast<std::uint32_t>(position));
  return s;
}

Span Span::interval(std::size_t begin, std::size_t end) {
  Span s;
  for (std::size_t p = begin; p < end; ++p) s.positions_.push_back(static_cast<std::uint32_t>(p));
  return s;
}

bool Span::contiguous() const {
  return !positions_.empty() && last() - first() + 1 == positions_.size();
}

bool Span::contains(std::size_t position) const {
  return std::binary_search(positions_.begin(), positions_.end(), static_cast<std::uint32_t>(position));
}

bool Span::overlaps(const Span& other) const {
  auto a = positions_.begin();
  auto b = other.positions_.begin();
  while (a != positions_.end() && b != other.positions_.end()) {
    if (*a == *b) return true;
    if (*a < *b) {
      ++a;
    } else {
      ++b;
    }
  }
  return false;
}

Span Span::merged(const Span& other) const {
  Span s;
  s.positions_.reserve(size() + other.size());
  std::merge(positions_.begin(), positions_.end(), other.positions_.begin(), other.positions_.end(),
             std::back_inserter(s.positions_));
  return s;
}

std::string Span::str() const {
  if (empty()) return "{}";
  if (contiguous()) return "[" + std::to_string(first()) + "," + std::to_string(last() + 1) + ")";
  std::string out = "{";
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(positions_[i]);
  }
  return out + "}";
}

std::vector<Span> Bracketing::node_spans() const {
  std::vector<Span> spans;
  spans.reserve(node_count());
  for (std::size_t p = 0; p < leaves; ++p) spans.push_back(Span::single(p));
  for (const auto& m : merges) spans.push_back(spans.at(m.left).merged(spans.at(m.right)));
  return spans;
}

std::vector<Span> Bracketing::internal_spans() const {
  auto spans = node_spans();
  std::vector<Span> out(spans.begin() + static_cast<std::ptrdiff_t>(leaves), spans.end());
  std::sort(out.begin(), out.end());
  return out;
}

bool Bracketing::same_tree(const Bracketing& other) const {
  return leaves == other.leaves && internal_spans() == other.internal_spans();
}

void validate(const Bracketing& b) {
  if (b.leaves == 0) throw Error(ErrorKind::Structure, "tree has no leaves");
  if (b.merges.size() != b.leaves - 1) {
    throw Error(ErrorKind::Structure, "binary tree over " + std::to_string(b.leaves) + " leaves needs " +
                                          std::to_string(b.leaves - 1) + " internal nodes, got " +
                                          std::to_string(b.merges.size()));
  }
  std::vector<bool> used(b.node_count(), false);
  for (std::size_t k = 0; k < b.merges.size(); ++k) {
    const auto node = b.leaves + k;
    const auto& m = b.merges[k];
    if (m.left >= node || m.right >= node || m.left == m.right) {
      throw Error(ErrorKind::Structure, "merge " + std::to_string(k) + " refers to invalid children");
    }
    if (used[m.left] || used[m.right]) {
      throw Error(ErrorKind::Structure, "merge " + std::to_string(k) + " reuses a node that already has a parent");
    }
    used[m.left] = used[m.right] = true;
  }
}

Bracketing ParseTree::bracketing() const {
  Bracketing b;
  b.leaves = leaves;
  for (std::size_t k = leaves; k < nodes.size(); ++k) b.merges.push_back({nodes[k].left, nodes[k].right});
  return b;
}

std::vector<WordId> ParseTree::words() const {
  std::vector<WordId> out;
  for (std::size_t k = 0; k < leaves; ++k) out.push_back(nodes[k].word);
  return out;
}

double ParseTree::total_score() const {
  double total = 0.0;
  for (std::size_t k = leaves; k < nodes.size(); ++k) total += nodes[k].score;
  return total;
}

ParseTree build_tree(const Model& model, std::span<const WordId> words, const Bracketing& shape) {
  if (words.size() != shape.leaves) {
    throw Error(ErrorKind::Structure, "tree has " + std::to_string(shape.leaves) + " leaves but the segment has " +
                                          std::to_string(words.size()) + " words");
  }
  validate(shape);
  ParseTree tree;
  tree.leaves = shape.leaves;
  tree.nodes.reserve(shape.node_count());
  for (std::size_t p = 0; p < words.size(); ++p) {
    TreeNode leaf;
    leaf.span = Span::single(p);
    leaf.word = words[p];
    leaf.repr = embed(model, words[p]);
    tree.nodes.push_back(std::move(leaf));
  }
  for (const auto& m : shape.merges) {
    TreeNode node;
    node.left = m.left;
    node.right = m.right;
    node.span = tree.nodes[m.left].span.merged(tree.nodes[m.right].span);
    node.repr = associate(model, tree.nodes[m.left].repr, tree.nodes[m.right].repr);
    node.score = saliency(model, node.repr);
    tree.nodes.push_back(std::move(node));
  }
  return tree;
}

namespace {

std::string escape(const std::string& token) {
  if (token == "(") return "-LRB-";
  if (token == ")") return "-RRB-";
  return token;
}

std::string unescape(const std::string& token) {
  if (token == "-LRB-") return "(";
  if (token == "-RRB-") return ")";
  return token;
}

}  // namespace

std::string format_bracketing(const Bracketing& shape, std::span<const std::string> tokens) {
  if (tokens.size() != shape.leaves) {
    throw Error(ErrorKind::Structure, "token count does not match tree leaves");
  }
  validate(shape);
  std::function<void(std::size_t, std::string&)> emit = [&](std::size_t node, std::string& out) {
    if (node < shape.leaves) {
      out += escape(tokens[node]);
      return;
    }
    const auto& m = shape.merges[node - shape.leaves];
    out += '(';
    emit(m.left, out);
    out += ' ';
    emit(m.right, out);
    out += ')';
  };
  std::string out;
  emit(shape.root(), out);
  return out;
}

BracketedSentence parse_bracketing(std::string_view text) {
  // Lex into "(", ")" and atoms.
  std::vector<std::string> lexemes;
  std::string atom;
  const auto flush = [&] {
    if (!atom.empty()) lexemes.push_back(std::move(atom));
    atom.clear();
  };
  for (char c : text) {
    if (c == '(' || c == ')') {
      flush();
      lexemes.emplace_back(1, c);
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      flush();
    } else {
      atom.push_back(c);
    }
  }
  flush();
  if (lexemes.empty()) throw Error(ErrorKind::Structure, "empty bracketing");

  BracketedSentence out;
  std::size_t pos = 0;
  // Returns the node id of the parsed subtree.
  std::function<std::size_t()> parse_node = [&]() -> std::size_t {
    if (pos >= lexemes.size()) throw Error(ErrorKind::Structure, "unexpected end of bracketing");
    const std::string& lx = lexemes[pos++];
    if (lx == ")") throw Error(ErrorKind::Structure, "unexpected ')' in bracketing");
    if (lx != "(") {
      out.tokens.push_back(unescape(lx));
      return out.tokens.size() - 1;
    }
    std::vector<std::size_t> children;
    while (pos < lexemes.size() && lexemes[pos] != ")") children.push_back(parse_node());
    if (pos >= lexemes.size()) throw Error(ErrorKind::Structure, "unbalanced '(' in bracketing");
    ++pos;
    if (children.size() != 2) {
      throw Error(ErrorKind::Structure, "bracketing is not binary: a group has " + std::to_string(children.size()) +
                                            " children");
    }
    out.shape.merges.push_back({children[0], children[1]});
    return SIZE_MAX - (out.shape.merges.size() - 1);
  };
  parse_node();
  if (pos != lexemes.size()) throw Error(ErrorKind::Structure, "trailing input after bracketing");

  // Internal nodes were numbered from the top of the id space while leaves
  // were still being counted; renumber them after the leaves.
  const std::size_t n = out.tokens.size();
  out.shape.leaves = n;
  const auto fix = [n](std::size_t id) { return id < n ? id : n + (SIZE_MAX - id); };
  for (auto& m : out.shape.merges) {
    m.left = fix(m.left);
    m.right = fix(m.right);
  }
  validate(out.shape);
  return out;
}

}  // namespace raam
