#include "chdzdt/labels.hpp"

#include "chdzdt/error.hpp"
#include "chdzdt/io.hpp"

namespace chdzdt {

std::optional<Lang> parse_lang(std::string_view code) {
  for (std::size_t i = 0; i < kNumLangs; ++i) {
    if (kLangCodes[i] == code) return static_cast<Lang>(i);
  }
  return std::nullopt;
}

std::string format_labels(LabelSet set) {
  std::string out;
  for (std::size_t i = 0; i < kNumLangs; ++i) {
    if (set & (1u << i)) {
      if (!out.empty()) out += ',';
      out += kLangCodes[i];
    }
  }
  return out;
}

LabelSet parse_labels(std::string_view text) {
  LabelSet set = 0;
  for (const auto& part : io::split(text, ',')) {
    const auto code = io::trim(part);
    if (code.empty()) continue;
    const auto lang = parse_lang(code);
    if (!lang) throw InputError("unknown language label '" + std::string(code) + "'");
    set |= bit(*lang);
  }
  if (set == 0) throw InputError("empty label set");
  return set;
}

std::vector<float> label_targets(LabelSet set) {
  std::vector<float> y(kNumLangs);
  for (std::size_t i = 0; i < kNumLangs; ++i) y[i] = (set >> i) & 1u ? 1.0f : 0.0f;
  return y;
}

}  // namespace chdzdt
