#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace raam {

using WordId = std::uint32_t;

inline constexpr WordId kUnkId = 0;
inline constexpr WordId kNumId = 1;
inline constexpr WordId kSpecialCount = 2;
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kNumToken = "<num>";

// Lowercases ASCII letters, splits on whitespace, emits every ASCII
// punctuation character as its own token and maps digit-only tokens to
// <num>. Invalid UTF-8 bytes become U+FFFD.
std::vector<std::string> tokenize(std::string_view text);

// Token <-> id map. Ids 0 and 1 are <unk> and <num>; the remaining ids are
// ordered by descending corpus frequency, ties broken lexicographically.
class Vocab {
 public:
  Vocab();

  static Vocab build(std::span<const std::string> tokens, std::size_t max_size,
                     std::size_t min_freq = 1);

  std::size_t size() const { return tokens_.size(); }
  std::size_t word_count() const { return tokens_.size() - kSpecialCount; }

  const std::string& token(WordId id) const;
  std::uint64_t freq(WordId id) const;
  std::optional<WordId> find(std::string_view token) const;
  WordId id_or_unk(std::string_view token) const;

  // 1-based rank among non-special words; 0 for specials.
  std::size_t frequency_rank(WordId id) const;

  // Vocabulary restricted to the `cap` most frequent words.
  Vocab truncated(std::size_t cap) const;

  std::vector<WordId> encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const WordId> ids) const;

  void write(std::ostream& out) const;
  static Vocab read(std::istream& in);
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_ && freq_ == other.freq_; }

 private:
  void push(std::string token, std::uint64_t freq);

  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> freq_;
  std::unordered_map<std::string, WordId> index_;
};

enum class OovPolicy { Drop, Unk };

struct Segment {
  std::vector<WordId> words;
  std::size_t offset = 0;

  std::size_t size() const { return words.size(); }
  bool operator==(const Segment&) const = default;
};

// Stride-1 windows of length n. Ids at or above `limit` are out of
// vocabulary, as is <unk>; under Drop any window touching one is skipped,
// under Unk they are replaced by <unk>.
std::vector<Segment> windows(std::span<const WordId> ids, std::size_t n, std::size_t limit,
                             OovPolicy policy = OovPolicy::Drop);

std::vector<Segment> segments(std::span<const std::string> tokens, const Vocab& vocab,
                              std::size_t n, OovPolicy policy = OovPolicy::Drop);

// Lines starting with "#raam" are treated as provenance headers and skipped.
std::vector<std::string> read_corpus(const std::string& path);
std::vector<std::string> read_lines(const std::string& path);

}  // namespace raam
