#pragma once

// Evaluation dataset records and their TSV loaders. Loaders throw InputError
// with the file name and line number for malformed rows.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace chdzdt::eval {

struct Cluster {
  std::string root;
  std::vector<std::string> members;
};

// Clean word and one noisy variant of it.
struct NoiseTuple {
  std::string clean;
  std::string noisy;
};

enum class NoiseMode { kStar, kHash, kSimilar };

std::string_view to_string(NoiseMode mode);
// Accepts "star", "hash", "similar" and the file suffixes "star", "hash", "sim".
NoiseMode parse_noise_mode(std::string_view name);

struct AffixRow {
  std::string word;
  std::vector<std::string> affixes;
};

struct SimilarityPair {
  std::string w1;
  std::string w2;
  double score = 0;
};

struct TaggedSentence {
  std::vector<std::pair<std::string, std::string>> tokens;  // word, tag
};

struct MorphRow {
  std::string word;
  std::map<std::string, std::string> features;  // feature -> value ("NA" when not applicable)
};

struct SentimentExample {
  std::string label;  // positive, neutral, negative
  std::string text;
};

// root TAB member TAB member ...
std::vector<Cluster> parse_clusters(std::string_view text, std::string_view source = "clusters");
// clean TAB noisy
std::vector<NoiseTuple> parse_tuples(std::string_view text, std::string_view source = "tuples");
// word TAB a,b,c
std::vector<AffixRow> parse_affixes(std::string_view text, std::string_view source = "affixes");
// w1 TAB w2 TAB score
std::vector<SimilarityPair> parse_similarity(std::string_view text,
                                             std::string_view source = "similarity");
// word TAB tag, blank line between sentences
std::vector<TaggedSentence> parse_pos(std::string_view text, std::string_view source = "pos");
// word TAB f=v;f=v
std::vector<MorphRow> parse_morph(std::string_view text, std::string_view source = "morph");
// label TAB text
std::vector<SentimentExample> parse_sentiment(std::string_view text,
                                              std::string_view source = "sentiment");

std::vector<Cluster> load_clusters(const std::filesystem::path& path);
// Mode comes from the file suffix: x.star, x.hash or x.sim.
std::pair<NoiseMode, std::vector<NoiseTuple>> load_tuples(const std::filesystem::path& path);
std::vector<AffixRow> load_affixes(const std::filesystem::path& path);
std::vector<SimilarityPair> load_similarity(const std::filesystem::path& path);
std::vector<TaggedSentence> load_pos(const std::filesystem::path& path);
std::vector<MorphRow> load_morph(const std::filesystem::path& path);
std::vector<SentimentExample> load_sentiment(const std::filesystem::path& path);

std::string format_clusters(const std::vector<Cluster>& clusters);
std::string format_tuples(const std::vector<NoiseTuple>& tuples);
std::string format_affixes(const std::vector<AffixRow>& rows);
std::string format_similarity(const std::vector<SimilarityPair>& pairs);
std::string format_pos(const std::vector<TaggedSentence>& sentences);
std::string format_morph(const std::vector<MorphRow>& rows);
std::string format_sentiment(const std::vector<SentimentExample>& rows);

}  // namespace chdzdt::eval
