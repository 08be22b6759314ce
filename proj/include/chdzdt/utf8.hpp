#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace chdzdt::utf8 {

// Decodes UTF-8 into Unicode scalar values. Invalid sequences throw InputError.
std::u32string decode(std::string_view text);

// Lenient variant: each invalid byte becomes U+FFFD.
std::u32string decode_lossy(std::string_view text);

std::string encode(std::u32string_view cps);
std::string encode(char32_t cp);
void append(std::string& out, char32_t cp);

bool is_valid(std::string_view text);

// Unicode scalar value (not a surrogate, at most U+10FFFF).
constexpr bool is_scalar(std::uint32_t cp) {
  return cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
}

// Number of scalar values in a valid UTF-8 string.
std::size_t length(std::string_view text);

}  // namespace chdzdt::utf8
