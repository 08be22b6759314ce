#pragma once

// Corpus-to-lexicon pipeline: region filtering, emoji/character
// normalization, elongation capping, spacing repair, diacritic stripping and
// whitespace tokenization, followed by multi-label merging into a lexicon.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chdzdt/chartok.hpp"
#include "chdzdt/labels.hpp"

namespace chdzdt {

struct NormRules {
  // Textual emoticon -> emoji string.
  std::map<std::string, std::string> emoji_aliases;
  // Single character -> canonical replacement (may be empty to delete).
  std::map<char32_t, std::string> unify;
  std::vector<char32_t> diacritics;
  std::size_t elongation_cap = 2;
  std::size_t emoji_cap = 2;
  // ECMAScript regular expressions; any match drops a social-media line.
  std::vector<std::string> region_patterns;

  static NormRules from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static NormRules load(const std::filesystem::path& path);
  static NormRules default_rules();
};

enum class SourceKind { kSocial, kStandard };

struct SourceStream {
  std::string name;  // used in error messages
  std::filesystem::path path;
  Lang label = Lang::DZ;
  SourceKind kind = SourceKind::kStandard;
};

struct LexiconEntry {
  std::string word;
  LabelSet labels = 0;
  std::array<std::uint64_t, kNumLangs> counts{};
};

using Lexicon = std::vector<LexiconEntry>;  // sorted by word (byte order)

class Normalizer {
 public:
  // Emoji membership comes from the tokenizer spec's emoji ranges. Throws
  // ConfigError on malformed region patterns or elongation_cap == 0.
  Normalizer(NormRules rules, const VocabSpec& vocab_spec);

  const NormRules& rules() const { return rules_; }

  bool is_emoji(char32_t c) const;

  // True when the line should be kept (no region pattern matches).
  bool region_keep(std::string_view line) const;
  std::string normalize_emojis(std::string_view text) const;
  std::string normalize_chars(std::string_view text) const;
  std::string cap_elongation(std::string_view text) const;
  std::string fix_spacing(std::string_view text) const;
  std::string strip_diacritics(std::string_view text) const;

  // Everything after the region filter, in pipeline order.
  std::string normalize(std::string_view text) const;
  // Region filter (social sources only), normalize, split on spaces. A
  // dropped line yields no words.
  std::vector<std::string> process_line(std::string_view line, SourceKind kind) const;

 private:
  NormRules rules_;
  std::vector<CodeRange> emoji_;
  std::vector<std::regex> patterns_;
};

// Free-function forms over the default rules and tokenizer spec.
std::string cap_elongation(std::string_view text, std::size_t k = 2);

bool is_letter(char32_t c);
bool is_punct(char32_t c);

// Label-set union and per-label count sum; insertion order does not matter.
class LexiconBuilder {
 public:
  explicit LexiconBuilder(std::size_t max_len = 30) : max_len_(max_len) {}
  // Words longer than max_len scalars, empty words and words containing
  // whitespace are ignored.
  void add(std::string_view word, Lang label, std::uint64_t count = 1);
  void merge(const LexiconBuilder& other);
  Lexicon finish() const;

 private:
  std::size_t max_len_;
  std::map<std::string, LexiconEntry, std::less<>> entries_;
};

// Reads every stream (throws IoError naming the stream when unreadable).
Lexicon build_lexicon(const std::vector<SourceStream>& streams, const Normalizer& normalizer,
                      std::size_t max_len = 30);

std::string lexicon_to_tsv(const Lexicon& lexicon);
Lexicon lexicon_from_tsv(std::string_view text);
Lexicon load_lexicon(const std::filesystem::path& path);

struct LexiconStats {
  // Index = LabelSet value (1..31); entry 0 unused.
  std::array<std::uint64_t, 32> combos{};
  // Word lengths grouped as 1-5, 6-10, ...; last bin holds everything longer.
  std::vector<std::uint64_t> length_bins;
  std::uint64_t total = 0;
  std::size_t bin_width = 5;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

LexiconStats lexicon_stats(const Lexicon& lexicon, std::size_t bin_width = 5,
                           std::size_t max_len = 30);

}  // namespace chdzdt
