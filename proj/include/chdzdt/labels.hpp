#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chdzdt {

// Language labels of the pre-training lexicon, in bit order.
enum class Lang : std::uint8_t { AR = 0, BER = 1, DZ = 2, EN = 3, FR = 4 };

inline constexpr std::size_t kNumLangs = 5;
inline constexpr std::array<std::string_view, kNumLangs> kLangCodes = {"AR", "BER", "DZ", "EN",
                                                                        "FR"};

// Bit set over Lang; bit i corresponds to Lang(i).
using LabelSet = std::uint8_t;

inline constexpr LabelSet bit(Lang l) { return static_cast<LabelSet>(1u << static_cast<unsigned>(l)); }

std::optional<Lang> parse_lang(std::string_view code);

// "AR,DZ" in bit order.
std::string format_labels(LabelSet set);
// Inverse of format_labels; throws InputError on unknown codes or an empty set.
LabelSet parse_labels(std::string_view text);

// 0/1 vector of length kNumLangs.
std::vector<float> label_targets(LabelSet set);

}  // namespace chdzdt
