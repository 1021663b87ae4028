#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "raam/corpus.hpp"
#include "raam/error.hpp"

using namespace raam;

namespace {

std::string unescape(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      if (s[i + 1] == 't') {
        out += '\t';
        ++i;
        continue;
      }
      if (s[i + 1] == 'x' && i + 3 < s.size()) {
        out += static_cast<char>(std::stoi(s.substr(i + 2, 2), nullptr, 16));
        i += 3;
        continue;
      }
    }
    out += s[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string t;
  while (std::getline(in, t, ' ')) {
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<std::string> words(std::initializer_list<const char*> list) { return {list.begin(), list.end()}; }

}  // namespace

TEST(Tokenize, GoldenFile) {
  std::ifstream in(std::string(RAAM_TEST_DATA) + "/tokenize_golden.tsv");
  ASSERT_TRUE(in);
  std::string line;
  std::size_t cases = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    ASSERT_NE(tab, std::string::npos) << line;
    const std::string input = unescape(line.substr(0, tab));
    EXPECT_EQ(tokenize(input), split(unescape(line.substr(tab + 1)))) << "input: " << line.substr(0, tab);
    ++cases;
  }
  EXPECT_GE(cases, 20u);
}

TEST(Tokenize, EmptyAndWhitespaceOnly) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize(" \t\n ").empty());
}

TEST(Tokenize, DigitRuleAppliesToWholeTokens) {
  EXPECT_EQ(tokenize("1998"), words({"<num>"}));
  EXPECT_EQ(tokenize("ps2"), words({"ps2"}));
}

TEST(Vocab, CountsAndSpecials) {
  const auto v = Vocab::build(words({"a", "a", "b"}), 10);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v.token(kUnkId), "<unk>");
  EXPECT_EQ(v.token(kNumId), "<num>");
  EXPECT_EQ(v.token(2), "a");
  EXPECT_EQ(v.freq(2), 2u);
  EXPECT_EQ(v.token(3), "b");
  EXPECT_EQ(v.freq(3), 1u);
  EXPECT_EQ(v.frequency_rank(2), 1u);
  EXPECT_EQ(v.frequency_rank(kUnkId), 0u);
}

TEST(Vocab, EmptyStreamHasOnlySpecials) {
  const auto v = Vocab::build({}, 10);
  EXPECT_EQ(v.size(), kSpecialCount);
  EXPECT_EQ(v.word_count(), 0u);
}

TEST(Vocab, TruncatesToMostFrequent) {
  std::vector<std::string> stream;
  for (int i = 0; i < 2000; ++i) {
    for (int r = 0; r <= i % 7; ++r) stream.push_back("w" + std::to_string(i));
  }
  const auto v = Vocab::build(stream, 1000);
  EXPECT_EQ(v.word_count(), 1000u);
  for (WordId id = kSpecialCount + 1; id < v.size(); ++id) EXPECT_GE(v.freq(id - 1), v.freq(id));
}

TEST(Vocab, FrequencyTiesAreLexicographic) {
  const auto v = Vocab::build(words({"y", "x"}), 1);
  ASSERT_EQ(v.word_count(), 1u);
  EXPECT_EQ(v.token(2), "x");
}

TEST(Vocab, MinFreqAndSmallMaxSize) {
  const auto v = Vocab::build(words({"a", "a", "b", "c", "c", "c"}), 10, 2);
  EXPECT_EQ(v.word_count(), 2u);
  EXPECT_FALSE(v.find("b"));
  EXPECT_EQ(Vocab::build(words({"a", "b", "c"}), 2).word_count(), 2u);
  EXPECT_THROW(Vocab::build(words({"a"}), 0), Error);
}

TEST(Vocab, NumeralsCountTowardNum) {
  const auto v = Vocab::build(tokenize("1 2 three 4"), 10);
  EXPECT_EQ(v.freq(kNumId), 3u);
  EXPECT_EQ(v.word_count(), 1u);
}

TEST(Vocab, WriteReadRoundTrip) {
  const auto v = Vocab::build(tokenize("the cat sat on the mat ; 12 #"), 100);
  std::stringstream buf;
  v.write(buf);
  const auto text = buf.str();
  EXPECT_EQ(text.rfind("#raam-vocab v1\n#specials UNK NUM\n", 0), 0u);
  const auto back = Vocab::read(buf);
  EXPECT_EQ(back, v);
  std::stringstream again;
  back.write(again);
  EXPECT_EQ(again.str(), text);
}

TEST(Vocab, ReadSkipsProvenanceLines) {
  std::stringstream in("#raam-vocab v1\n#specials UNK NUM\n#raam-config max_size=3\n<unk>\t0\n<num>\t0\nx\t4\n");
  const auto v = Vocab::read(in);
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.token(2), "x");
}

TEST(Vocab, MalformedFilesAreFormatErrors) {
  const auto kind_of = [](const std::string& text) {
    std::stringstream in(text);
    try {
      Vocab::read(in);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Config;
  };
  EXPECT_EQ(kind_of("nope\n"), ErrorKind::Format);
  EXPECT_EQ(kind_of("#raam-vocab v1\n#specials UNK NUM\n<unk>\t0\n<num>\tzz\n"), ErrorKind::Format);
  EXPECT_EQ(kind_of("#raam-vocab v1\n#specials UNK NUM\n<unk>\t0\n<num>\t0\na\t1\na\t1\n"), ErrorKind::Format);
  EXPECT_EQ(kind_of("#raam-vocab v1\n#specials UNK NUM\nx\t0\n<num>\t0\n"), ErrorKind::Format);
}

TEST(Vocab, MissingFileIsIoError) {
  try {
    Vocab::load("/nonexistent/vocab.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/vocab.txt"), std::string::npos);
  }
}

TEST(Vocab, TruncatedKeepsTopWords) {
  const auto v = Vocab::build(words({"a", "a", "a", "b", "b", "c"}), 10);
  const auto t = v.truncated(2);
  EXPECT_EQ(t.word_count(), 2u);
  EXPECT_EQ(t.token(2), "a");
  EXPECT_EQ(t.token(3), "b");
}

TEST(Vocab, EncodeDecodeRoundTrip) {
  const auto toks = tokenize("the cat sat on the mat");
  const auto v = Vocab::build(toks, 100);
  EXPECT_EQ(v.decode(v.encode(toks)), toks);
  EXPECT_EQ(v.encode(words({"dog"})), std::vector<WordId>{kUnkId});
  EXPECT_THROW(v.token(99), Error);
}

TEST(Segments, SlidingWindows) {
  const auto v = Vocab::build(words({"a", "b", "c", "d"}), 10);
  const auto one = segments(words({"a", "b", "c"}), v, 3);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(v.decode(one[0].words), words({"a", "b", "c"}));
  const auto two = segments(words({"a", "b", "c", "d"}), v, 3);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(v.decode(two[0].words), words({"a", "b", "c"}));
  EXPECT_EQ(v.decode(two[1].words), words({"b", "c", "d"}));
  EXPECT_EQ(two[1].offset, 1u);
}

TEST(Segments, DropPolicySkipsOov) {
  const auto v = Vocab::build(words({"a", "c", "d", "e", "f"}), 10);
  const auto segs = segments(words({"a", "zzz", "c", "d", "e", "f"}), v, 3, OovPolicy::Drop);
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(v.decode(segs[0].words), words({"c", "d", "e"}));
  EXPECT_EQ(v.decode(segs[1].words), words({"d", "e", "f"}));
  const auto unk = segments(words({"a", "zzz", "c", "d", "e", "f"}), v, 3, OovPolicy::Unk);
  ASSERT_EQ(unk.size(), 4u);
  EXPECT_EQ(unk[0].words[1], kUnkId);
}

TEST(Segments, CountIsStreamLengthMinusNPlusOne) {
  std::vector<WordId> ids;
  for (WordId t = 0; t < 50; ++t) {
    ids.push_back(kSpecialCount + t % 5);
    for (std::size_t n = 2; n < 8; ++n) {
      const std::size_t expect = ids.size() >= n ? ids.size() - n + 1 : 0;
      EXPECT_EQ(windows(ids, n, kSpecialCount + 5).size(), expect);
    }
  }
}

TEST(Segments, LimitMarksHigherIdsOutOfVocabulary) {
  const std::vector<WordId> ids{2, 3, 9, 4, 5, 6};
  EXPECT_EQ(windows(ids, 2, 7).size(), 3u);
  EXPECT_EQ(windows(ids, 2, 10).size(), 5u);
}

TEST(Segments, ShortStreamAndBadLength) {
  EXPECT_TRUE(windows(std::vector<WordId>{2}, 3, 10).empty());
  EXPECT_THROW(windows(std::vector<WordId>{2, 3}, 1, 10), Error);
}
