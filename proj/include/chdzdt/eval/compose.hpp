#pragma once

// Reconstructing a word vector from its prefix, root and suffix vectors.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "chdzdt/eval/embedder.hpp"

namespace chdzdt::eval {

enum class CompositionKind { kAdd, kMul, kWAdd, kWMul, kMpCnc, kMpAdd };

std::string_view to_string(CompositionKind kind);
CompositionKind parse_composition_kind(std::string_view name);
const std::vector<CompositionKind>& all_composition_kinds();

// word TAB prefix TAB root TAB suffix; an empty field means no prefix/suffix.
struct CompositionWords {
  std::string word;
  std::string prefix;
  std::string root;
  std::string suffix;
};

std::vector<CompositionWords> parse_composition(std::string_view text,
                                                std::string_view source = "composition");
std::vector<CompositionWords> load_composition(const std::filesystem::path& path);
std::string format_composition(const std::vector<CompositionWords>& rows);

// Vectors of one decomposed word. A missing part is the identity of the
// composition: absent from sums, a factor of one in products.
struct Triple {
  std::vector<double> p, r, s, w;
  bool has_p = false;
  bool has_s = false;
};

std::vector<Triple> embed_triples(const Embedder& embedder, const std::vector<CompositionWords>& rows);

struct CompositionModel {
  CompositionKind kind = CompositionKind::kAdd;
  std::size_t dim = 0;
  double alpha = 1, beta = 1, gamma = 1;  // WAdd weights, WMul exponents
  Matrix w;                               // [d, 3d] MpCnc, [d, d] MpAdd
  // WMul works on components shifted by `shift` so all are >= epsilon; the
  // result is shifted back.
  double shift = 0;

  std::vector<double> apply(const Triple& t) const;
};

struct ComposeConfig {
  std::size_t epochs = 300;
  double lr = 1e-2;
  bool cosine_objective = false;  // fit 1 - cos instead of squared error
  bool wmul_shift = true;
  double epsilon = 1e-3;
  std::uint64_t seed = 42;
};

// Add and Mul have no parameters. The weighted kinds start from the additive
// solution (weights 1, W = [I|I|I] or I) and minimize mean squared error by
// Adam over all triples at once.
CompositionModel compose_fit(CompositionKind kind, const std::vector<Triple>& train,
                             const ComposeConfig& config = {});

struct ComposeEval {
  std::size_t n = 0;
  std::size_t skipped = 0;  // zero-norm targets or outputs
  double acs = 0;
  double aed = 0;
  // Frobenius norms of W_p, W_r, W_s (MpCnc) or of W (MpAdd, single entry).
  std::vector<double> frobenius;
  std::vector<std::string> warnings;
};

ComposeEval compose_eval(const CompositionModel& model, const std::vector<Triple>& test);

double frobenius(const Matrix& m, std::size_t col_begin, std::size_t col_end);

}  // namespace chdzdt::eval
