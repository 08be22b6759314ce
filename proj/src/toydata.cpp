#include "chdzdt/toydata.hpp"

#include <set>

#include "chdzdt/error.hpp"
#include "chdzdt/random.hpp"
#include "chdzdt/utf8.hpp"

namespace chdzdt::toy {

namespace {

const std::vector<std::string> kBaseAffixes = {"-a",  "-ek", "-ou", "-ine", "-tha",
                                               "-at", "m-",  "t-",  "el-",  "ne-"};

template <typename C>
const auto& pick(const C& c, Rng& rng) {
  return c[uniform_index(rng, c.size())];
}

std::string latin_syllables(Rng& rng, std::size_t n) {
  static const std::string consonants = "bdfghjklmnrstwz";
  static const std::string vowels = "aeiou";
  std::string w;
  for (std::size_t i = 0; i < n; ++i) {
    w += consonants[uniform_index(rng, consonants.size())];
    w += vowels[uniform_index(rng, vowels.size())];
  }
  return w;
}

}  // namespace

std::string RootAffixLanguage::apply(const std::string& root, const std::string& affix) {
  if (!affix.empty() && affix.front() == '-') return root + affix.substr(1);
  if (!affix.empty() && affix.back() == '-') return affix.substr(0, affix.size() - 1) + root;
  throw InputError("affix '" + affix + "' must start or end with '-'");
}

RootAffixLanguage RootAffixLanguage::generate(std::size_t n_roots, std::size_t n_affixes,
                                              std::uint64_t seed) {
  static const std::string consonants = "bdfghklmnrstwz";
  static const std::string vowels = "aeiou";
  Rng rng(seed);
  RootAffixLanguage lang;
  std::set<std::string> seen;
  while (lang.roots.size() < n_roots) {
    // CVC or CVCC
    std::string r;
    r += consonants[uniform_index(rng, consonants.size())];
    r += vowels[uniform_index(rng, vowels.size())];
    r += consonants[uniform_index(rng, consonants.size())];
    if (uniform01(rng) < 0.5) r += consonants[uniform_index(rng, consonants.size())];
    if (seen.insert(r).second) lang.roots.push_back(r);
  }
  std::set<std::string> affix_seen;
  for (std::size_t i = 0; i < n_affixes; ++i) {
    if (i < kBaseAffixes.size()) {
      lang.affixes.push_back(kBaseAffixes[i]);
      continue;
    }
    std::string a;
    do {
      a = latin_syllables(rng, 1);
      a = uniform01(rng) < 0.5 ? "-" + a : a + "-";
    } while (!affix_seen.insert(a).second ||
             std::find(kBaseAffixes.begin(), kBaseAffixes.end(), a) != kBaseAffixes.end());
    lang.affixes.push_back(a);
  }
  for (const auto& r : lang.roots) {
    std::vector<std::string> row;
    for (const auto& a : lang.affixes) row.push_back(apply(r, a));
    lang.words.push_back(std::move(row));
  }
  return lang;
}

Lexicon trilingual_lexicon(std::uint64_t seed, std::size_t n_words, RootAffixLanguage* morph) {
  auto lang = RootAffixLanguage::generate(20, 10, seed);
  Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);
  LexiconBuilder builder;
  std::set<std::string> used;
  for (const auto& row : lang.words) {
    for (const auto& w : row) {
      builder.add(w, Lang::DZ);
      used.insert(w);
    }
  }
  const std::size_t rest = n_words > used.size() ? n_words - used.size() : 0;
  const std::size_t n_ar = rest / 2, n_fr = rest - n_ar;

  // Both other languages are root x pattern as well. Roots are drawn until
  // enough new words exist; every fourth root is shared with DZ, so the
  // second label is a property of the root.
  auto add_language = [&](std::size_t target, Lang label, auto make_root,
                          const auto& patterns, auto realize) {
    std::size_t made = 0, root_index = 0;
    while (made < target) {
      const auto root = make_root();
      const bool shared = root_index++ % 4 == 3;
      for (const auto& p : patterns) {
        if (made == target) break;
        const auto word = realize(root, p);
        if (!used.insert(word).second) continue;
        builder.add(word, label);
        if (shared) builder.add(word, Lang::DZ);
        ++made;
      }
    }
  };

  // Arabic-script triliteral roots; digits in a template mark root slots.
  static const std::vector<std::u32string> letters = {U"ك", U"ت", U"ب", U"د", U"ر", U"س",
                                                      U"ع", U"ل", U"م", U"ق", U"ف", U"ج"};
  static const std::vector<std::u32string> templates = {
      U"123",  U"1ا23", U"م12و3", U"1و23",  U"ال123",
      U"12ي3", U"ي123", U"ت1ا23", U"م1ا23", U"12ا3ة"};
  add_language(
      n_ar, Lang::AR,
      [&] { return pick(letters, rng) + pick(letters, rng) + pick(letters, rng); }, templates,
      [](const std::u32string& root, const std::u32string& t) {
        std::u32string w;
        for (char32_t c : t) w += (c >= U'1' && c <= U'3') ? root[c - U'1'] : c;
        return utf8::encode(w);
      });

  static const std::vector<std::string> endings = {"tion", "ment", "eur", "ette", "ier",
                                                   "é",    "age",  "eux", "ique", "er"};
  add_language(
      n_fr, Lang::FR, [&] { return latin_syllables(rng, 1 + uniform_index(rng, 2)); }, endings,
      [](const std::string& stem, const std::string& e) { return stem + e; });

  if (morph) *morph = lang;
  return builder.finish();
}

std::vector<Cluster> root_clusters(const RootAffixLanguage& lang) {
  std::vector<Cluster> out;
  for (std::size_t i = 0; i < lang.roots.size(); ++i) out.push_back({lang.roots[i], lang.words[i]});
  return out;
}

std::vector<TaggedSentence> suffix_pos(std::size_t n_sentences, std::uint64_t seed,
                                       std::size_t min_len, std::size_t max_len) {
  auto lang = RootAffixLanguage::generate(20, 10, seed);
  // Suffix affixes decide the tag.
  const std::vector<std::pair<std::string, std::string>> tag_of = {
      {"-a", "NOUN"}, {"-at", "NOUN"}, {"-ek", "VERB"}, {"-ine", "VERB"}, {"-ou", "ADJ"}, {"-tha", "ADJ"}};
  Rng rng(seed + 1);
  std::vector<TaggedSentence> out;
  for (std::size_t s = 0; s < n_sentences; ++s) {
    TaggedSentence sent;
    const std::size_t len = min_len + uniform_index(rng, max_len - min_len + 1);
    for (std::size_t i = 0; i < len; ++i) {
      const auto& [affix, tag] = pick(tag_of, rng);
      sent.tokens.emplace_back(RootAffixLanguage::apply(pick(lang.roots, rng), affix), tag);
    }
    out.push_back(std::move(sent));
  }
  return out;
}

std::vector<SentimentExample> marker_sentiment(std::size_t n, std::uint64_t seed) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> markers = {
      {"positive", {"mlih", "zwin", "top"}},
      {"neutral", {"3adi", "normal", "kifkif"}},
      {"negative", {"khayeb", "nul", "mauvais"}}};
  Rng rng(seed);
  std::vector<std::string> filler;
  std::set<std::string> seen;
  while (filler.size() < 40) {
    auto w = latin_syllables(rng, 2 + uniform_index(rng, 2));
    if (seen.insert(w).second) filler.push_back(w);
  }
  std::vector<SentimentExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [label, words] = markers[i % markers.size()];
    const std::size_t len = 3 + uniform_index(rng, 6);
    const std::size_t at = uniform_index(rng, len);
    std::string text;
    for (std::size_t k = 0; k < len; ++k) {
      if (k) text += ' ';
      text += k == at ? pick(words, rng) : pick(filler, rng);
    }
    out.push_back({label, text});
  }
  shuffle(out, rng);
  return out;
}

ProbeFixture separable_affixes(std::size_t n, std::size_t n_affixes, std::size_t dim,
                               std::uint64_t seed) {
  if (dim < n_affixes) throw ContractError("separable_affixes: dim must be >= n_affixes");
  Rng rng(seed);
  ProbeFixture f;
  f.dim = dim;
  f.n_affixes = n_affixes;
  f.points.resize(n * dim);
  f.labels.assign(n, std::vector<std::uint8_t>(n_affixes, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      if (j < n_affixes) {
        const bool on = uniform01(rng) < 0.4;
        f.labels[i][j] = on;
        f.points[i * dim + j] = (on ? 1.0 : -1.0) * uniform(rng, 0.5, 1.5);
      } else {
        f.points[i * dim + j] = uniform(rng, -1.0, 1.0);
      }
    }
  }
  return f;
}

}  // namespace chdzdt::toy
