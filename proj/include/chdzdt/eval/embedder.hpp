#pragma once

// Word -> vector functions evaluated by the suite.

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chdzdt/encoder.hpp"

namespace chdzdt::eval {

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
  // Throws InputError for words it cannot embed.
  virtual std::vector<double> embed(std::string_view word) const = 0;
  // One row per word.
  virtual Matrix embed_all(const std::vector<std::string>& words) const;
};

// CLS vectors of a chDzDT encoder, memoized per word.
class EncoderEmbedder final : public Embedder {
 public:
  explicit EncoderEmbedder(std::shared_ptr<const Encoder<float>> model, std::string name = "chdzdt");

  std::size_t dim() const override { return model_->config().hidden; }
  std::string name() const override { return name_; }
  std::vector<double> embed(std::string_view word) const override;
  Matrix embed_all(const std::vector<std::string>& words) const override;

  const Encoder<float>& model() const { return *model_; }

 private:
  std::shared_ptr<const Encoder<float>> model_;
  std::string name_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, std::vector<double>> cache_;
};

// Fixed vectors loaded from "word TAB f f f ..." lines after a "#dim d" header.
class TableEmbedder final : public Embedder {
 public:
  TableEmbedder(std::size_t dim, std::string name = "table") : dim_(dim), name_(std::move(name)) {}

  // Throws InputError on malformed lines or a missing/mismatched header.
  static TableEmbedder parse(std::string_view text, std::string name = "table");
  static TableEmbedder load(const std::filesystem::path& path);

  void add(const std::string& word, std::vector<double> vec);
  std::size_t size() const { return table_.size(); }
  bool contains(std::string_view word) const;

  std::size_t dim() const override { return dim_; }
  std::string name() const override { return name_; }
  std::vector<double> embed(std::string_view word) const override;

 private:
  std::size_t dim_;
  std::string name_;
  std::unordered_map<std::string, std::vector<double>> table_;
};

// Wraps an arbitrary function (tests and constructed baselines).
class FunctionEmbedder final : public Embedder {
 public:
  using Fn = std::function<std::vector<double>(std::string_view)>;
  FunctionEmbedder(std::size_t dim, Fn fn, std::string name = "function")
      : dim_(dim), fn_(std::move(fn)), name_(std::move(name)) {}

  std::size_t dim() const override { return dim_; }
  std::string name() const override { return name_; }
  std::vector<double> embed(std::string_view word) const override;

 private:
  std::size_t dim_;
  Fn fn_;
  std::string name_;
};

// "#dim d" header then one "word TAB v1 v2 ..." line per row; values use the
// shortest representation that round-trips a float.
std::string format_embedding_tsv(const std::vector<std::string>& words, const Matrix& vectors);

}  // namespace chdzdt::eval
