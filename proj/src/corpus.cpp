#include "raam/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "raam/error.hpp"

namespace raam {

namespace {

constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
constexpr std::string_view kVocabMagic = "#raam-vocab v1";
constexpr std::string_view kVocabSpecials = "#specials UNK NUM";

// Length of the valid UTF-8 sequence starting at text[i], or 0 if invalid.
std::size_t utf8_length(std::string_view text, std::size_t i) {
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
  const unsigned char lead = byte(i);
  std::size_t len = 0;
  std::uint32_t min = 0;
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) {
    len = 2;
    min = 0x80;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3;
    min = 0x800;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4;
    min = 0x10000;
  } else {
    return 0;
  }
  if (i + len > text.size()) return 0;
  std::uint32_t cp = lead & (0x7F >> len);
  for (std::size_t k = 1; k < len; ++k) {
    if ((byte(i + k) & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (byte(i + k) & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  return len;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 0x21 && u <= 0x2F) || (u >= 0x3A && u <= 0x40) || (u >= 0x5B && u <= 0x60) ||
         (u >= 0x7B && u <= 0x7E);
}

void flush(std::string& current, std::vector<std::string>& out) {
  if (current.empty()) return;
  const bool digits = std::all_of(current.begin(), current.end(),
                                  [](char c) { return c >= '0' && c <= '9'; });
  out.push_back(digits ? std::string(kNumToken) : std::move(current));
  current.clear();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t len = utf8_length(text, i);
    if (len == 0) {
      current.append(kReplacement);
      ++i;
      continue;
    }
    if (len > 1) {
      current.append(text.substr(i, len));
      i += len;
      continue;
    }
    const char c = text[i++];
    if (is_space(c)) {
      flush(current, out);
    } else if (is_punct(c)) {
      flush(current, out);
      out.emplace_back(1, c);
    } else if (c >= 'A' && c <= 'Z') {
      current.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if (c != '\0') {
      current.push_back(c);
    }
  }
  flush(current, out);
  return out;
}

Vocab::Vocab() {
  push(std::string(kUnkToken), 0);
  push(std::string(kNumToken), 0);
}

void Vocab::push(std::string token, std::uint64_t freq) {
  index_.emplace(token, static_cast<WordId>(tokens_.size()));
  tokens_.push_back(std::move(token));
  freq_.push_back(freq);
}

Vocab Vocab::build(std::span<const std::string> tokens, std::size_t max_size,
                   std::size_t min_freq) {
  if (max_size < 1) throw Error(ErrorKind::Config, "vocabulary max_size must be at least 1");
  std::unordered_map<std::string, std::uint64_t> counts;
  std::uint64_t numerals = 0;
  for (const auto& t : tokens) {
    if (t == kNumToken) {
      ++numerals;
    } else if (t != kUnkToken) {
      ++counts[t];
    }
  }
  std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocab vocab;
  vocab.freq_[kNumId] = numerals;
  for (auto& [token, count] : ranked) {
    if (vocab.word_count() >= max_size || count < min_freq) break;
    vocab.push(std::move(token), count);
  }
  return vocab;
}

const std::string& Vocab::token(WordId id) const {
  if (id >= tokens_.size()) {
    throw Error(ErrorKind::Index, "word id " + std::to_string(id) + " out of range for vocabulary of size " +
                                      std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::uint64_t Vocab::freq(WordId id) const {
  token(id);
  return freq_[id];
}

std::optional<WordId> Vocab::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

WordId Vocab::id_or_unk(std::string_view token) const { return find(token).value_or(kUnkId); }

std::size_t Vocab::frequency_rank(WordId id) const {
  token(id);
  return id < kSpecialCount ? 0 : id - kSpecialCount + 1;
}

Vocab Vocab::truncated(std::size_t cap) const {
  Vocab out;
  out.freq_ = {freq_[kUnkId], freq_[kNumId]};
  for (std::size_t id = kSpecialCount; id < tokens_.size() && out.word_count() < cap; ++id) {
    out.push(tokens_[id], freq_[id]);
  }
  return out;
}

std::vector<WordId> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<WordId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id_or_unk(t));
  return ids;
}

std::vector<std::string> Vocab::decode(std::span<const WordId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (WordId id : ids) out.push_back(token(id));
  return out;
}

void Vocab::write(std::ostream& out) const {
  out << kVocabMagic << '\n' << kVocabSpecials << '\n';
  for (std::size_t id = 0; id < tokens_.size(); ++id) {
    out << tokens_[id] << '\t' << freq_[id] << '\n';
  }
}

Vocab Vocab::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kVocabMagic) {
    throw Error(ErrorKind::Format, "vocabulary header: expected '" + std::string(kVocabMagic) + "'");
  }
  if (!std::getline(in, line) || line != kVocabSpecials) {
    throw Error(ErrorKind::Format, "vocabulary header: expected '" + std::string(kVocabSpecials) + "'");
  }
  Vocab vocab;
  vocab.tokens_.clear();
  vocab.freq_.clear();
  vocab.index_.clear();
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    // No token starts with "#raam-": '#' and '-' are single-character tokens.
    if (line.empty() || line.rfind("#raam-", 0) == 0) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(ErrorKind::Format, "vocabulary line " + std::to_string(lineno) + ": expected token<TAB>frequency");
    }
    std::string token = line.substr(0, tab);
    std::uint64_t freq = 0;
    try {
      std::size_t used = 0;
      freq = std::stoull(line.substr(tab + 1), &used);
      if (used != line.size() - tab - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorKind::Format, "vocabulary line " + std::to_string(lineno) + ": bad frequency");
    }
    if (vocab.index_.count(token)) {
      throw Error(ErrorKind::Format, "vocabulary line " + std::to_string(lineno) + ": duplicate token '" + token + "'");
    }
    vocab.push(std::move(token), freq);
  }
  if (vocab.size() < kSpecialCount || vocab.tokens_[kUnkId] != kUnkToken ||
      vocab.tokens_[kNumId] != kNumToken) {
    throw Error(ErrorKind::Format, "vocabulary must start with <unk> and <num>");
  }
  return vocab;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write vocabulary file " + path);
  write(out);
  if (!out) throw Error(ErrorKind::Io, "failed writing vocabulary file " + path);
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open vocabulary file " + path);
  return read(in);
}

std::vector<Segment> windows(std::span<const WordId> ids, std::size_t n, std::size_t limit,
                             OovPolicy policy) {
  if (n < 2) throw Error(ErrorKind::Config, "segment length must be at least 2");
  std::vector<Segment> out;
  if (ids.size() < n) return out;
  std::vector<WordId> mapped(ids.begin(), ids.end());
  for (auto& id : mapped) {
    if (id >= limit) id = kUnkId;
  }
  std::size_t last_oov = SIZE_MAX;
  for (std::size_t end = 0; end < mapped.size(); ++end) {
    if (mapped[end] == kUnkId) last_oov = end;
    if (end + 1 < n) continue;
    const std::size_t start = end + 1 - n;
    if (policy == OovPolicy::Drop && last_oov != SIZE_MAX && last_oov >= start) continue;
    out.push_back(Segment{{mapped.begin() + static_cast<std::ptrdiff_t>(start),
                           mapped.begin() + static_cast<std::ptrdiff_t>(end + 1)},
                          start});
  }
  return out;
}

std::vector<Segment> segments(std::span<const std::string> tokens, const Vocab& vocab,
                              std::size_t n, OovPolicy policy) {
  const auto ids = vocab.encode(tokens);
  return windows(ids, n, vocab.size(), policy);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("#raam", 0) == 0) continue;
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<std::string> read_corpus(const std::string& path) {
  std::vector<std::string> tokens;
  for (const auto& line : read_lines(path)) {
    auto t = tokenize(line);
    tokens.insert(tokens.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
  }
  return tokens;
}

}  // namespace raam
