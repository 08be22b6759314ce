#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "chdzdt/error.hpp"
#include "chdzdt/io.hpp"
#include "chdzdt/preprocess.hpp"
#include "chdzdt/random.hpp"
#include "chdzdt/utf8.hpp"

namespace chdzdt {
namespace {

namespace fs = std::filesystem;

class Pipeline : public ::testing::Test {
 protected:
  Normalizer norm{NormRules::default_rules(), VocabSpec::default_spec()};
};

TEST_F(Pipeline, EmojiRunsAreCapped) {
  EXPECT_EQ(norm.normalize_emojis("❤❤❤❤ merci"), "❤❤ merci");
  EXPECT_EQ(norm.normalize("❤❤❤❤ merci"), "❤ ❤ merci");
  EXPECT_EQ(norm.normalize_emojis("ok 👍"), "ok 👍");
  EXPECT_EQ(norm.normalize_emojis("😀 😀 😀 😀 top"), "😀 😀 top");
  // Units with modifiers compare as a whole.
  EXPECT_EQ(norm.normalize_emojis("👍🏽👍🏽👍🏽👍"), "👍🏽👍🏽👍");
}

TEST_F(Pipeline, TextualEmoticonsBecomeEmoji) {
  EXPECT_EQ(norm.normalize_emojis(":-)"), "🙂");
  EXPECT_EQ(norm.normalize_emojis("merci :)"), "merci 🙂");
  EXPECT_EQ(norm.normalize_emojis("<3 <3 <3"), "❤ ❤");
  // Letter-bearing aliases need a word boundary.
  EXPECT_EQ(norm.normalize_emojis("xD"), "😆");
  EXPECT_EQ(norm.normalize_emojis("fixDone"), "fixDone");
  EXPECT_EQ(norm.normalize_emojis(":Desole"), ":Desole");
}

TEST_F(Pipeline, CharactersAreUnified) {
  EXPECT_EQ(norm.normalize_chars("«mot»"), "\"mot\"");
  EXPECT_EQ(norm.normalize_chars("“a” ‘b’"), "\"a\" 'b'");
  EXPECT_EQ(norm.normalize_chars("a—b"), "a-b");
  EXPECT_EQ(norm.normalize_chars("a b"), "a b");
  EXPECT_EQ(norm.normalize_chars("plain ASCII, text!"), "plain ASCII, text!");
}

TEST_F(Pipeline, ElongationIsCapped) {
  EXPECT_EQ(cap_elongation("برافووووووو"), "برافوو");
  EXPECT_EQ(cap_elongation("cool"), "cool");
  EXPECT_EQ(cap_elongation("cooool"), "cool");
  EXPECT_EQ(cap_elongation("yesss!!!!"), "yess!!!!");
  EXPECT_EQ(cap_elongation("100000"), "100000");
  EXPECT_EQ(cap_elongation("aaaa", 1), "a");
  // Diacritics inside a run do not hide it.
  EXPECT_EQ(norm.cap_elongation("وَوَوَو"), "وَوَ");
}

TEST_F(Pipeline, ElongationIsIdempotent) {
  Rng rng(2);
  const std::u32string alphabet = U"aab.ووَـ ";
  for (int i = 0; i < 500; ++i) {
    std::u32string s;
    for (std::size_t n = uniform_index(rng, 15); n > 0; --n) s.push_back(alphabet[uniform_index(rng, alphabet.size())]);
    const auto once = norm.cap_elongation(utf8::encode(s));
    EXPECT_EQ(norm.cap_elongation(once), once);
  }
}

TEST_F(Pipeline, SpacingIsRepaired) {
  EXPECT_EQ(norm.fix_spacing("✅✅yes. No!✅"), "✅ ✅ yes . No ! ✅");
  EXPECT_EQ(norm.fix_spacing("a b"), "a b");
  EXPECT_EQ(norm.fix_spacing("word,"), "word ,");
  EXPECT_EQ(norm.fix_spacing("  many   spaces "), "many spaces");
  EXPECT_EQ(norm.fix_spacing("quoi?!"), "quoi ?!");
  EXPECT_EQ(norm.fix_spacing("aujourd'hui peut-être"), "aujourd'hui peut-être");
  EXPECT_EQ(norm.fix_spacing("3.5kg"), "3.5kg");
  EXPECT_EQ(norm.fix_spacing("slt👋🏼cv"), "slt 👋🏼 cv");
  EXPECT_EQ(norm.fix_spacing("واش؟"), "واش ؟");
}

TEST_F(Pipeline, DiacriticsAndTatweelStripped) {
  EXPECT_EQ(norm.strip_diacritics("مَجَلَّــــــــــــة"), "مجلة");
  EXPECT_EQ(norm.strip_diacritics("abc"), "abc");
  const auto once = norm.strip_diacritics("كِتَابٌ");
  EXPECT_EQ(norm.strip_diacritics(once), once);
}

TEST_F(Pipeline, RegionFilter) {
  EXPECT_FALSE(norm.region_keep("راني جاي دابا"));
  EXPECT_FALSE(norm.region_keep("برشا حاجات"));
  EXPECT_TRUE(norm.region_keep("راني جاي ضرك"));
  Normalizer empty(NormRules{}, VocabSpec::default_spec());
  EXPECT_TRUE(empty.region_keep("دابا"));
  // Region filtering applies to social sources only.
  EXPECT_TRUE(norm.process_line("دابا", SourceKind::kSocial).empty());
  EXPECT_EQ(norm.process_line("دابا", SourceKind::kStandard), std::vector<std::string>{"دابا"});
}

TEST_F(Pipeline, MalformedPatternIsConfigError) {
  NormRules r;
  r.region_patterns = {"(unclosed"};
  EXPECT_THROW(Normalizer(r, VocabSpec::default_spec()), ConfigError);
}

TEST_F(Pipeline, FullPipelineIsIdempotent) {
  const std::vector<std::string> samples = {
      "✅✅yes. No!✅", "برافووووووو 😂😂😂😂😂", "مَجَلَّــــــــــــة", "«Bravo» — c'est tooop :-) :-)",
      "Wesh   khoya,ça va?!", "3la  7sab💯💯💯💯", "❤ ❤ ❤ ❤", "وَوَوَو", "a'  -b -- c...", ":'( <3<3<3"};
  for (const auto& s : samples) {
    const auto once = norm.normalize(s);
    EXPECT_EQ(norm.normalize(once), once) << s;
  }
  Rng rng(5);
  const std::u32string alphabet = U"ab ,.'-!وـَ😀❤:)(<3«»—";
  for (int i = 0; i < 2000; ++i) {
    std::u32string s;
    for (std::size_t n = uniform_index(rng, 20); n > 0; --n) s.push_back(alphabet[uniform_index(rng, alphabet.size())]);
    const auto once = norm.normalize(utf8::encode(s));
    ASSERT_EQ(norm.normalize(once), once) << utf8::encode(s);
  }
}

TEST(Rules, ShippedFileParsesAndRoundTrips) {
  auto r = NormRules::load(std::string(CHDZDT_DATA_DIR) + "/default_rules.json");
  EXPECT_EQ(r.elongation_cap, 2u);
  EXPECT_EQ(r.region_patterns.size(), 3u);
  EXPECT_EQ(NormRules::from_json(r.to_json()).to_json(), r.to_json());
  EXPECT_THROW(NormRules::from_json(nlohmann::json::parse(R"({"unify": {"ab": "c"}})")), ConfigError);
  EXPECT_THROW(NormRules::from_json(nlohmann::json::parse(R"({"elongation_cap": 0})")), ConfigError);
}

// --- lexicon ---------------------------------------------------------------

class LexiconFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("chdzdt_lex_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& content) {
    auto p = dir_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

  fs::path dir_;
  Normalizer norm{NormRules::default_rules(), VocabSpec::default_spec()};
};

TEST_F(LexiconFixture, LabelsAreUnionsAndLongWordsDropped) {
  const std::string long31 = "abcdefghijklmnopqrstuvwxyzabcde";
  const std::string long30 = "abcdefghijklmnopqrstuvwxyzabcd";
  std::vector<SourceStream> streams = {
      {"ar", write("ar.txt", "كتاب جميل\nكتاب\n"), Lang::AR, SourceKind::kStandard},
      {"dz", write("dz.txt", "كتاب دابا\nwesh " + long31 + " " + long30 + "\n"), Lang::DZ, SourceKind::kStandard},
      {"dz_social", write("dzs.txt", "wesh dabaa\nراني دابا هنا\n"), Lang::DZ, SourceKind::kSocial},
  };
  auto lex = build_lexicon(streams, norm);
  std::map<std::string, LexiconEntry> by_word;
  for (const auto& e : lex) by_word[e.word] = e;
  EXPECT_EQ(by_word.at("كتاب").labels, bit(Lang::AR) | bit(Lang::DZ));
  EXPECT_EQ(by_word.at("كتاب").counts[0], 2u);
  EXPECT_EQ(by_word.at("كتاب").counts[2], 1u);
  EXPECT_EQ(by_word.count(long31), 0u);
  EXPECT_EQ(by_word.count(long30), 1u);
  EXPECT_EQ(by_word.at("wesh").counts[2], 2u);
  EXPECT_EQ(by_word.count("راني"), 0u);  // dropped line
  EXPECT_EQ(by_word.count("دابا"), 1u);  // standard source keeps it
  EXPECT_TRUE(std::is_sorted(lex.begin(), lex.end(), [](const auto& a, const auto& b) { return a.word < b.word; }));
  for (const auto& e : lex) {
    EXPECT_LE(utf8::length(e.word), 30u);
    EXPECT_EQ(e.word.find(' '), std::string::npos);
  }
}

TEST_F(LexiconFixture, TsvRoundTripAndDeterminism) {
  std::vector<SourceStream> streams = {
      {"fr", write("fr.txt", "Bonjour, le monde! le monde.\n"), Lang::FR, SourceKind::kStandard},
      {"en", write("en.txt", "hello world, le world\n"), Lang::EN, SourceKind::kStandard},
  };
  const auto a = lexicon_to_tsv(build_lexicon(streams, norm));
  const auto b = lexicon_to_tsv(build_lexicon(streams, norm));
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("le\tEN,FR\tEN:1,FR:2\n"), std::string::npos) << a;
  EXPECT_EQ(lexicon_to_tsv(lexicon_from_tsv(a)), a);
}

TEST_F(LexiconFixture, MissingStreamNamesSource) {
  std::vector<SourceStream> streams = {{"ghost", dir_ / "missing.txt", Lang::AR, SourceKind::kStandard}};
  try {
    build_lexicon(streams, norm);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
  EXPECT_THROW(build_lexicon({}, norm), InputError);
}

TEST(LexiconBuilder, MergeOrderDoesNotMatter) {
  LexiconBuilder a, b, ab, ba;
  a.add("x", Lang::AR);
  a.add("y", Lang::FR, 3);
  b.add("x", Lang::DZ, 2);
  b.add("z", Lang::EN);
  ab.merge(a);
  ab.merge(b);
  ba.merge(b);
  ba.merge(a);
  EXPECT_EQ(lexicon_to_tsv(ab.finish()), lexicon_to_tsv(ba.finish()));
}

TEST(LexiconStats, SingleWordAndPartition) {
  LexiconBuilder one;
  one.add("wesh", Lang::DZ);
  auto st = lexicon_stats(one.finish());
  for (unsigned s = 1; s < 32; ++s) EXPECT_EQ(st.combos[s], s == bit(Lang::DZ) ? 1u : 0u);
  EXPECT_EQ(st.length_bins[0], 1u);
}

TEST(LexiconStats, MatchesBruteForceRecount) {
  Rng rng(8);
  LexiconBuilder builder;
  std::map<std::string, std::set<int>> truth;
  const std::string letters = "abcdefgh";
  for (int i = 0; i < 600; ++i) {
    std::string w;
    for (std::size_t n = 1 + uniform_index(rng, 14); n > 0; --n) w.push_back(letters[uniform_index(rng, letters.size())]);
    const int lang = static_cast<int>(uniform_index(rng, 3)) * 2;  // three streams: AR, DZ, FR
    builder.add(w, static_cast<Lang>(lang));
    truth[w].insert(lang);
  }
  auto lex = builder.finish();
  auto st = lexicon_stats(lex);
  std::array<std::uint64_t, 32> expect{};
  std::vector<std::uint64_t> bins(3, 0);
  for (const auto& [w, langs] : truth) {
    unsigned mask = 0;
    for (int l : langs) mask |= 1u << l;
    ++expect[mask];
    ++bins[(w.size() - 1) / 5];
  }
  EXPECT_EQ(st.combos, expect);
  std::uint64_t sum = 0;
  for (auto c : st.combos) sum += c;
  EXPECT_EQ(sum, lex.size());
  EXPECT_EQ(st.total, truth.size());
  for (std::size_t b = 0; b < bins.size(); ++b) EXPECT_EQ(st.length_bins[b], bins[b]);
}

}  // namespace
}  // namespace chdzdt
