#pragma once

// Word-level character tokenizer. A vocabulary is declared as inclusive
// code-point ranges plus explicit extra characters; ids 0-4 are reserved for
// single-character special tokens and the remaining characters follow in
// ascending code-point order.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace chdzdt {

enum SpecialId : std::int32_t { kPad = 0, kCls = 1, kMask = 2, kUnk = 3, kSep = 4 };
inline constexpr std::int32_t kNumSpecials = 5;

// Private-use code points standing in for the special tokens.
inline constexpr char32_t kSpecialChars[kNumSpecials] = {0xE000, 0xE001, 0xE002, 0xE003, 0xE004};

struct CodeRange {
  char32_t lo;
  char32_t hi;
  friend bool operator==(const CodeRange&, const CodeRange&) = default;
};

struct VocabSpec {
  std::vector<CodeRange> ranges;
  std::vector<std::string> extras;
  // Subset of the character domain treated as emoji by the preprocessor.
  std::vector<CodeRange> emoji_ranges;

  static VocabSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static VocabSpec load(const std::filesystem::path& path);

  // Latin (basic, supplement, extended), IPA, Arabic, Tifinagh, punctuation
  // and the symbol/emoji blocks.
  static VocabSpec default_spec();

  friend bool operator==(const VocabSpec&, const VocabSpec&) = default;
};

struct TokenizedWord {
  std::vector<std::int32_t> ids;        // length 1 + max_chars
  std::vector<std::uint8_t> attention;  // 1 on CLS and on filled character slots
  std::size_t original_length = 0;      // scalar count before truncation

  // Number of populated character slots (excluding CLS).
  std::size_t char_count() const;
};

class CharVocab {
 public:
  // Overlapping ranges are merged. Throws ConfigError on lo > hi, on
  // non-scalar code points, or when a range/extra covers a special code point.
  static CharVocab build(const VocabSpec& spec);
  static CharVocab default_vocab() { return build(VocabSpec::default_spec()); }

  std::size_t size() const { return chars_.size(); }
  const VocabSpec& spec() const { return spec_; }

  bool contains(char32_t c) const { return index_.count(c) != 0; }
  bool is_emoji(char32_t c) const;
  // Id of a character, kUnk when outside the vocabulary.
  std::int32_t id_of(char32_t c) const;
  // Character of an id (special ids give their placeholder). Throws IndexError.
  char32_t char_of(std::int32_t id) const;

  // CLS, then the first max_chars characters, then PAD. Throws InputError on
  // an empty (or all-whitespace) word or invalid UTF-8.
  TokenizedWord encode_word(std::string_view word, std::size_t max_chars = 20) const;

  // Concatenates non-special ids. Throws IndexError on ids outside [0, V).
  std::string decode(std::span<const std::int32_t> ids) const;

 private:
  VocabSpec spec_;
  std::vector<CodeRange> emoji_;
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, std::int32_t> index_;
};

}  // namespace chdzdt
