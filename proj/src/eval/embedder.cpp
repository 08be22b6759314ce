#include "chdzdt/eval/embedder.hpp"

#include <charconv>
#include <cmath>

#include "chdzdt/error.hpp"
#include "chdzdt/io.hpp"

namespace chdzdt::eval {

Matrix Embedder::embed_all(const std::vector<std::string>& words) const {
  Matrix m(words.size(), dim());
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto v = embed(words[i]);
    if (v.size() != dim()) {
      throw DimensionError("embedder " + name() + " returned " + std::to_string(v.size()) +
                           " values for '" + words[i] + "', expected " + std::to_string(dim()));
    }
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

EncoderEmbedder::EncoderEmbedder(std::shared_ptr<const Encoder<float>> model, std::string name)
    : model_(std::move(model)), name_(std::move(name)) {
  if (!model_) throw ContractError("EncoderEmbedder: model is required");
}

std::vector<double> EncoderEmbedder::embed(std::string_view word) const {
  {
    std::lock_guard lock(mu_);
    auto it = cache_.find(std::string(word));
    if (it != cache_.end()) return it->second;
  }
  auto v = model_->word_embedding(word);
  std::vector<double> out(v.begin(), v.end());
  std::lock_guard lock(mu_);
  return cache_.emplace(std::string(word), std::move(out)).first->second;
}

Matrix EncoderEmbedder::embed_all(const std::vector<std::string>& words) const {
  std::vector<std::string> missing;
  {
    std::lock_guard lock(mu_);
    std::unordered_map<std::string, bool> queued;
    for (const auto& w : words) {
      if (!cache_.count(w) && !queued[w]) {
        queued[w] = true;
        missing.push_back(w);
      }
    }
  }
  if (!missing.empty()) {
    auto flat = model_->embed_words(missing);
    const std::size_t d = dim();
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < missing.size(); ++i) {
      cache_.emplace(missing[i], std::vector<double>(flat.begin() + i * d, flat.begin() + (i + 1) * d));
    }
  }
  Matrix m(words.size(), dim());
  std::lock_guard lock(mu_);
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto& v = cache_.at(words[i]);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

TableEmbedder TableEmbedder::parse(std::string_view text, std::string name) {
  auto lines = io::split_lines(text);
  std::size_t first = 0;
  while (first < lines.size() && io::trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw InputError("embedding table: missing '#dim d' header");
  const auto header = io::trim(lines[first]);
  std::size_t dim = 0;
  if (header.rfind("#dim", 0) != 0) throw InputError("embedding table: missing '#dim d' header");
  {
    const auto num = io::trim(header.substr(4));
    auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), dim);
    if (ec != std::errc() || p != num.data() + num.size() || dim == 0) {
      throw InputError("embedding table: bad header '" + std::string(header) + "'");
    }
  }
  TableEmbedder t(dim, std::move(name));
  for (std::size_t i = first + 1; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (io::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw InputError("embedding table line " + std::to_string(i + 1) + ": missing TAB");
    }
    std::vector<double> v;
    for (auto tok : io::split(line.substr(tab + 1), ' ')) {
      if (tok.empty()) continue;
      // Float precision, so encoder output read back matches the encoder.
      float x = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(x)) {
        throw InputError("embedding table line " + std::to_string(i + 1) + ": bad number '" +
                         std::string(tok) + "'");
      }
      v.push_back(x);
    }
    if (v.size() != dim) {
      throw InputError("embedding table line " + std::to_string(i + 1) + ": " +
                       std::to_string(v.size()) + " values, header says " + std::to_string(dim));
    }
    t.add(std::string(line.substr(0, tab)), std::move(v));
  }
  return t;
}

TableEmbedder TableEmbedder::load(const std::filesystem::path& path) {
  return parse(io::read_file(path), path.filename().string());
}

void TableEmbedder::add(const std::string& word, std::vector<double> vec) {
  if (vec.size() != dim_) throw DimensionError("embedding for '" + word + "' has wrong dimension");
  table_[word] = std::move(vec);
}

bool TableEmbedder::contains(std::string_view word) const {
  return table_.count(std::string(word)) != 0;
}

std::vector<double> TableEmbedder::embed(std::string_view word) const {
  auto it = table_.find(std::string(word));
  if (it == table_.end()) throw InputError("no embedding for '" + std::string(word) + "' in " + name_);
  return it->second;
}

std::vector<double> FunctionEmbedder::embed(std::string_view word) const {
  auto v = fn_(word);
  if (v.size() != dim_) {
    throw DimensionError("embedder " + name_ + " returned " + std::to_string(v.size()) +
                         " values, expected " + std::to_string(dim_));
  }
  return v;
}

std::string format_embedding_tsv(const std::vector<std::string>& words, const Matrix& vectors) {
  std::string out = "#dim " + std::to_string(vectors.cols) + "\n";
  char buf[64];
  for (std::size_t i = 0; i < words.size(); ++i) {
    out += words[i];
    out += '\t';
    for (std::size_t j = 0; j < vectors.cols; ++j) {
      if (j) out += ' ';
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, static_cast<float>(vectors.row(i)[j]));
      out.append(buf, p);
    }
    out += '\n';
  }
  return out;
}

}  // namespace chdzdt::eval
