#include <gtest/gtest.h>

#include <fstream>

#include "chdzdt/chartok.hpp"
#include "chdzdt/error.hpp"
#include "chdzdt/io.hpp"
#include "chdzdt/random.hpp"
#include "chdzdt/utf8.hpp"

namespace chdzdt {
namespace {

TEST(CharVocab, CountsAndIdOrder) {
  auto v = CharVocab::build(VocabSpec{{{'a', 'c'}}, {}, {}});
  EXPECT_EQ(v.size(), 8u);
  EXPECT_EQ(v.id_of('a'), 5);
  EXPECT_EQ(v.id_of('b'), 6);
  EXPECT_EQ(v.id_of('c'), 7);
  EXPECT_EQ(v.id_of('z'), kUnk);
  for (std::int32_t i = 0; i < kNumSpecials; ++i) EXPECT_EQ(v.char_of(i), kSpecialChars[i]);
}

TEST(CharVocab, OverlapsAndExtrasAreDeduplicated) {
  auto v = CharVocab::build(VocabSpec{{{'a', 'e'}, {'c', 'g'}, {'b', 'b'}}, {"gh", "é"}, {}});
  EXPECT_EQ(v.size(), 5u + 7u + 1u + 1u);  // a-g, h, é
  EXPECT_LT(v.id_of('h'), v.id_of(U'é'));
}

TEST(CharVocab, BuildIsDeterministicAndBijective) {
  auto a = CharVocab::default_vocab();
  auto b = CharVocab::default_vocab();
  ASSERT_EQ(a.size(), b.size());
  for (std::int32_t i = 0; i < static_cast<std::int32_t>(a.size()); ++i) {
    EXPECT_EQ(a.char_of(i), b.char_of(i));
    EXPECT_EQ(a.id_of(a.char_of(i)), i);
  }
}

TEST(CharVocab, InvalidSpecsRejected) {
  EXPECT_THROW(CharVocab::build(VocabSpec{{{'z', 'a'}}, {}, {}}), ConfigError);
  EXPECT_THROW(CharVocab::build(VocabSpec{{{0xD800, 0xD800}}, {}, {}}), ConfigError);
  EXPECT_THROW(CharVocab::build(VocabSpec{{{0xE000, 0xE010}}, {}, {}}), ConfigError);
  EXPECT_THROW(VocabSpec::from_json(nlohmann::json::parse(R"({"ranges": [[1]]})")), ConfigError);
  EXPECT_THROW(VocabSpec::from_json(nlohmann::json::parse(R"({"ranges": [[1, 1114112]]})")), ConfigError);
}

TEST(CharVocab, DefaultSpecCoversMixedScriptSample) {
  auto v = CharVocab::default_vocab();
  for (char32_t c : utf8::decode("chdz شدز ⵣ 😀 3")) {
    EXPECT_NE(v.id_of(c), kUnk) << static_cast<std::uint32_t>(c);
  }
  EXPECT_TRUE(v.is_emoji(U'😀'));
  EXPECT_TRUE(v.is_emoji(U'❤'));
  EXPECT_FALSE(v.is_emoji(U'a'));
}

TEST(CharVocab, ShippedSpecFileMatchesBuiltInDefault) {
  auto spec = VocabSpec::load(std::string(CHDZDT_DATA_DIR) + "/default_vocab.json");
  EXPECT_EQ(spec, VocabSpec::default_spec());
  EXPECT_EQ(VocabSpec::from_json(spec.to_json()), spec);
}

TEST(EncodeWord, Layout) {
  auto v = CharVocab::build(VocabSpec{{{'a', 'z'}}, {}, {}});
  auto t = v.encode_word("abc");
  ASSERT_EQ(t.ids.size(), 21u);
  EXPECT_EQ(t.ids[0], kCls);
  EXPECT_EQ(t.ids[1], v.id_of('a'));
  EXPECT_EQ(t.ids[3], v.id_of('c'));
  for (std::size_t i = 4; i < 21; ++i) {
    EXPECT_EQ(t.ids[i], kPad);
    EXPECT_EQ(t.attention[i], 0);
  }
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(t.attention[i], 1);
  EXPECT_EQ(t.original_length, 3u);
  EXPECT_EQ(t.char_count(), 3u);
}

TEST(EncodeWord, TruncatesOverlongWords) {
  auto v = CharVocab::default_vocab();
  auto t = v.encode_word("abcdefghijklmnopqrstuvwxy");
  EXPECT_EQ(t.original_length, 25u);
  EXPECT_EQ(t.char_count(), 20u);
  EXPECT_EQ(t.ids.size(), 21u);
  EXPECT_EQ(v.decode(t.ids), "abcdefghijklmnopqrst");
}

TEST(EncodeWord, UnknownCharacterBecomesUnk) {
  auto v = CharVocab::default_vocab();
  auto t = v.encode_word("a日b");  // CJK is outside the default ranges
  EXPECT_EQ(t.ids[2], kUnk);
  EXPECT_EQ(t.ids[1], v.id_of('a'));
}

TEST(EncodeWord, EmptyWordRejected) {
  auto v = CharVocab::default_vocab();
  EXPECT_THROW(v.encode_word(""), InputError);
  EXPECT_THROW(v.encode_word("   "), InputError);
}

TEST(Decode, Examples) {
  auto v = CharVocab::default_vocab();
  EXPECT_EQ(v.decode(v.encode_word("dar").ids), "dar");
  EXPECT_EQ(v.decode(v.encode_word("علاش").ids), "علاش");
  std::vector<std::int32_t> pads(21, kPad);
  EXPECT_EQ(v.decode(pads), "");
  std::vector<std::int32_t> bad{static_cast<std::int32_t>(v.size())};
  EXPECT_THROW(v.decode(bad), IndexError);
}

TEST(Decode, RandomRoundTrip) {
  auto v = CharVocab::default_vocab();
  Rng rng(11);
  const std::int32_t n = static_cast<std::int32_t>(v.size());
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t len = 1 + uniform_index(rng, 20);
    std::u32string w;
    while (w.size() < len) {
      const char32_t c = v.char_of(kNumSpecials + static_cast<std::int32_t>(uniform_index(rng, n - kNumSpecials)));
      // Whitespace at the edges is trimmed by encode_word.
      if (c == ' ' && (w.empty() || w.size() + 1 == len)) continue;
      w.push_back(c);
    }
    const auto s = utf8::encode(w);
    auto t = v.encode_word(s);
    ASSERT_EQ(t.ids.size(), 21u);
    ASSERT_EQ(v.decode(t.ids), s);
  }
}

}  // namespace
}  // namespace chdzdt
