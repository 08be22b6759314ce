#include "chdzdt/eval/compose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chdzdt/adam.hpp"
#include "chdzdt/error.hpp"
#include "chdzdt/eval/metrics.hpp"
#include "chdzdt/io.hpp"
#include "chdzdt/tensor.hpp"

namespace chdzdt::eval {

namespace {

using ad::Tensor;

bool multiplicative(CompositionKind k) { return k == CompositionKind::kMul || k == CompositionKind::kWMul; }

// Stacks one part of every triple into [n, d]; missing parts become `fill`.
Tensor<double> stack(const std::vector<Triple>& ts, std::size_t d, int part, double offset, double fill) {
  std::vector<double> out(ts.size() * d);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& t = ts[i];
    const std::vector<double>* v = part == 0 ? &t.p : part == 1 ? &t.r : part == 2 ? &t.s : &t.w;
    const bool present = part == 0 ? t.has_p : part == 2 ? t.has_s : true;
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = present ? (*v)[j] + offset : fill;
  }
  return Tensor<double>({ts.size(), d}, std::move(out));
}

void check_triples(const std::vector<Triple>& ts, std::size_t d) {
  for (const auto& t : ts) {
    if (t.r.size() != d || t.w.size() != d || (t.has_p && t.p.size() != d) ||
        (t.has_s && t.s.size() != d)) {
      throw DimensionError("composition triple has vectors of the wrong dimension");
    }
  }
}

Matrix identity_blocks(std::size_t d, std::size_t blocks) {
  Matrix m(d, d * blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t i = 0; i < d; ++i) m.row(i)[b * d + i] = 1;
  }
  return m;
}

}  // namespace

std::string_view to_string(CompositionKind kind) {
  switch (kind) {
    case CompositionKind::kAdd: return "Add";
    case CompositionKind::kMul: return "Mul";
    case CompositionKind::kWAdd: return "WAdd";
    case CompositionKind::kWMul: return "WMul";
    case CompositionKind::kMpCnc: return "MpCnc";
    case CompositionKind::kMpAdd: return "MpAdd";
  }
  return "?";
}

CompositionKind parse_composition_kind(std::string_view name) {
  for (auto k : all_composition_kinds()) {
    std::string a(to_string(k)), b(name);
    std::transform(a.begin(), a.end(), a.begin(), ::tolower);
    std::transform(b.begin(), b.end(), b.begin(), ::tolower);
    if (a == b) return k;
  }
  throw InputError("unknown composition kind '" + std::string(name) +
                   "' (Add, Mul, WAdd, WMul, MpCnc, MpAdd)");
}

const std::vector<CompositionKind>& all_composition_kinds() {
  static const std::vector<CompositionKind> kinds = {
      CompositionKind::kAdd,  CompositionKind::kMul,   CompositionKind::kWAdd,
      CompositionKind::kWMul, CompositionKind::kMpCnc, CompositionKind::kMpAdd};
  return kinds;
}

std::vector<CompositionWords> parse_composition(std::string_view text, std::string_view source) {
  std::vector<CompositionWords> out;
  const auto lines = io::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (io::trim(lines[i]).empty()) continue;
    const auto cols = io::split(lines[i], '\t');
    if (cols.size() != 4) {
      throw InputError(std::string(source) + ":" + std::to_string(i + 1) +
                       ": expected word TAB prefix TAB root TAB suffix");
    }
    CompositionWords c{std::string(io::trim(cols[0])), std::string(io::trim(cols[1])),
                       std::string(io::trim(cols[2])), std::string(io::trim(cols[3]))};
    if (c.word.empty() || c.root.empty()) {
      throw InputError(std::string(source) + ":" + std::to_string(i + 1) + ": empty word or root");
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<CompositionWords> load_composition(const std::filesystem::path& path) {
  return parse_composition(io::read_file(path), path.string());
}

std::string format_composition(const std::vector<CompositionWords>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.word + "\t" + r.prefix + "\t" + r.root + "\t" + r.suffix + "\n";
  return out;
}

std::vector<Triple> embed_triples(const Embedder& embedder, const std::vector<CompositionWords>& rows) {
  std::vector<Triple> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    Triple t;
    t.w = embedder.embed(r.word);
    t.r = embedder.embed(r.root);
    t.has_p = !r.prefix.empty();
    t.has_s = !r.suffix.empty();
    if (t.has_p) t.p = embedder.embed(r.prefix);
    if (t.has_s) t.s = embedder.embed(r.suffix);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<double> CompositionModel::apply(const Triple& t) const {
  const std::size_t d = dim;
  std::vector<double> out(d, 0.0);
  switch (kind) {
    case CompositionKind::kAdd:
    case CompositionKind::kWAdd: {
      const bool weighted = kind == CompositionKind::kWAdd;
      for (std::size_t j = 0; j < d; ++j) {
        out[j] = (weighted ? beta : 1.0) * t.r[j];
        if (t.has_p) out[j] += (weighted ? alpha : 1.0) * t.p[j];
        if (t.has_s) out[j] += (weighted ? gamma : 1.0) * t.s[j];
      }
      break;
    }
    case CompositionKind::kMul:
      for (std::size_t j = 0; j < d; ++j) {
        out[j] = t.r[j] * (t.has_p ? t.p[j] : 1.0) * (t.has_s ? t.s[j] : 1.0);
      }
      break;
    case CompositionKind::kWMul: {
      // Components that fall below the fitted shift at evaluation time are
      // clamped to a tiny positive base.
      auto base = [&](double x) { return std::max(x + shift, 1e-12); };
      for (std::size_t j = 0; j < d; ++j) {
        double v = std::pow(base(t.r[j]), beta);
        if (t.has_p) v *= std::pow(base(t.p[j]), alpha);
        if (t.has_s) v *= std::pow(base(t.s[j]), gamma);
        out[j] = v - shift;
      }
      break;
    }
    case CompositionKind::kMpCnc:
      for (std::size_t i = 0; i < d; ++i) {
        const auto row = w.row(i);
        double v = 0;
        for (std::size_t j = 0; j < d; ++j) {
          v += row[d + j] * t.r[j];
          if (t.has_p) v += row[j] * t.p[j];
          if (t.has_s) v += row[2 * d + j] * t.s[j];
        }
        out[i] = v;
      }
      break;
    case CompositionKind::kMpAdd:
      for (std::size_t i = 0; i < d; ++i) {
        const auto row = w.row(i);
        double v = 0;
        for (std::size_t j = 0; j < d; ++j) {
          v += row[j] * (t.r[j] + (t.has_p ? t.p[j] : 0.0) + (t.has_s ? t.s[j] : 0.0));
        }
        out[i] = v;
      }
      break;
  }
  return out;
}

CompositionModel compose_fit(CompositionKind kind, const std::vector<Triple>& train,
                             const ComposeConfig& config) {
  if (train.empty()) throw InputError("composition fit: no training triples");
  const std::size_t d = train.front().r.size();
  if (d == 0) throw DimensionError("composition fit: empty vectors");
  check_triples(train, d);

  CompositionModel model;
  model.kind = kind;
  model.dim = d;
  if (kind == CompositionKind::kMpCnc) model.w = identity_blocks(d, 3);
  if (kind == CompositionKind::kMpAdd) model.w = identity_blocks(d, 1);

  if (kind == CompositionKind::kWMul) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& t : train) {
      for (double x : t.r) lo = std::min(lo, x);
      if (t.has_p) for (double x : t.p) lo = std::min(lo, x);
      if (t.has_s) for (double x : t.s) lo = std::min(lo, x);
    }
    if (lo <= 0 && !config.wmul_shift) {
      throw InputError(
          "WMul needs strictly positive components (minimum is " + std::to_string(lo) +
          "); enable the shift so every component is moved to at least epsilon before the powers");
    }
    model.shift = lo < config.epsilon ? config.epsilon - lo : 0.0;
  }
  if (kind == CompositionKind::kAdd || kind == CompositionKind::kMul) return model;

  const bool mult = multiplicative(kind);
  const double offset = kind == CompositionKind::kWMul ? model.shift : 0.0;
  const double fill = mult ? 1.0 : 0.0;
  const auto P = stack(train, d, 0, offset, fill);
  const auto R = stack(train, d, 1, offset, fill);
  const auto S = stack(train, d, 2, offset, fill);
  const auto W = stack(train, d, 3, 0.0, 0.0);
  Tensor<double> X;
  if (kind == CompositionKind::kMpCnc) X = ad::concat_cols<double>({P, R, S});
  if (kind == CompositionKind::kMpAdd) X = ad::add(ad::add(P, R), S);

  auto a = Tensor<double>::scalar(1.0, true);
  auto b = Tensor<double>::scalar(1.0, true);
  auto g = Tensor<double>::scalar(1.0, true);
  Tensor<double> M;
  std::vector<Tensor<double>> params;
  if (kind == CompositionKind::kWAdd || kind == CompositionKind::kWMul) {
    params = {a, b, g};
  } else {
    M = Tensor<double>({model.w.rows, model.w.cols}, model.w.data, true);
    params = {M};
  }
  Adam<double> opt(params, AdamConfig{config.lr});

  auto predict = [&]() -> Tensor<double> {
    switch (kind) {
      case CompositionKind::kWAdd:
        return ad::add(ad::add(ad::mul_scalar(P, a), ad::mul_scalar(R, b)), ad::mul_scalar(S, g));
      case CompositionKind::kWMul: {
        auto prod = ad::mul(ad::mul(ad::pow_scalar(P, a), ad::pow_scalar(R, b)), ad::pow_scalar(S, g));
        return ad::add(prod, Tensor<double>::full(prod.shape(), -model.shift));
      }
      default:
        return ad::matmul(X, ad::transpose(M));
    }
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    ad::Tape<double> tape;
    ad::TapeScope<double> scope(tape);
    const auto pred = predict();
    const auto loss = config.cosine_objective ? ad::cosine_loss(pred, W) : ad::mse(pred, W);
    if (!std::isfinite(loss.item())) {
      throw NumericalError("composition fit (" + std::string(to_string(kind)) + ") diverged at epoch " +
                           std::to_string(epoch + 1));
    }
    tape.backward(loss);
    opt.step();
  }
  model.alpha = a.item();
  model.beta = b.item();
  model.gamma = g.item();
  if (M.defined()) std::copy(M.data().begin(), M.data().end(), model.w.data.begin());
  return model;
}

double frobenius(const Matrix& m, std::size_t col_begin, std::size_t col_end) {
  double s = 0;
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = col_begin; j < col_end; ++j) s += m.row(i)[j] * m.row(i)[j];
  }
  return std::sqrt(s);
}

ComposeEval compose_eval(const CompositionModel& model, const std::vector<Triple>& test) {
  if (test.empty()) throw InputError("composition eval: no test triples");
  check_triples(test, model.dim);
  ComposeEval r;
  double cos_sum = 0, dist_sum = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto pred = model.apply(test[i]);
    if (norm(pred) == 0 || norm(test[i].w) == 0) {
      ++r.skipped;
      r.warnings.push_back("triple " + std::to_string(i) + ": zero vector, skipped");
      continue;
    }
    cos_sum += cosine(pred, test[i].w);
    dist_sum += euclidean(pred, test[i].w);
    ++r.n;
  }
  if (r.n == 0) throw InputError("composition eval: every triple was skipped");
  r.acs = cos_sum / static_cast<double>(r.n);
  r.aed = dist_sum / static_cast<double>(r.n) / std::sqrt(static_cast<double>(model.dim));
  const std::size_t d = model.dim;
  if (model.kind == CompositionKind::kMpCnc) {
    r.frobenius = {frobenius(model.w, 0, d), frobenius(model.w, d, 2 * d), frobenius(model.w, 2 * d, 3 * d)};
  } else if (model.kind == CompositionKind::kMpAdd) {
    r.frobenius = {frobenius(model.w, 0, d)};
  }
  return r;
}

}  // namespace chdzdt::eval
