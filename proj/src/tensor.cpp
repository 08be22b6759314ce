#include "chdzdt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "chdzdt/error.hpp"

namespace chdzdt::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream ss;
  ss << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) ss << ',';
    ss << shape[i];
  }
  ss << ']';
  return ss.str();
}

// ---------------------------------------------------------------------------
// Tensor / Tape

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad)
    : node_(std::make_shared<Node<T>>()) {
  if (numel(shape) != data.size()) {
    throw DimensionError("tensor shape " + shape_str(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  const auto n = numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, T(0)), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const auto n = numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{1}, std::vector<T>{value}, requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(node_->shape, node_->value, false);
}

namespace {
template <typename T>
Tape<T>*& active_slot() {
  thread_local Tape<T>* tape = nullptr;
  return tape;
}
}  // namespace

template <typename T>
Tape<T>* Tape<T>::active() {
  return active_slot<T>();
}

template <typename T>
void Tape<T>::set_active(Tape* tape) {
  active_slot<T>() = tape;
}

template <typename T>
std::vector<const Node<T>*> Tape<T>::nodes() const {
  std::vector<const Node<T>*> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n.get());
  return out;
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward() requires a scalar loss, got shape " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  auto it = std::find_if(nodes_.rbegin(), nodes_.rend(),
                         [&](const auto& n) { return n.get() == loss.node(); });
  if (it == nodes_.rend()) {
    throw ContractError("backward(): loss was not recorded on this tape");
  }
  loss.node()->ensure_grad()[0] += T(1);
  for (; it != nodes_.rend(); ++it) {
    Node<T>& node = **it;
    if (node.grad.empty() || !node.backward) continue;
    node.backward(node);
  }
}

// ---------------------------------------------------------------------------
// Kernels (row-major, accumulate into C)

namespace {

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T(0)) continue;
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,k] += A[m,n] * B[k,n]^T
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * n;
    T* crow = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T* brow = b + p * n;
      T acc = T(0);
      for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
      crow[p] += acc;
    }
  }
}

// C[k,n] += A[m,k]^T * B[m,n]
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    const T* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T(0)) continue;
      T* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
using Backward = std::function<void(Node<T>&)>;

// Creates the output node, attaching history only when a tape is active and
// some input needs a gradient.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value,
                      std::initializer_list<const Tensor<T>*> inputs, const char* op,
                      Backward<T> backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  Tape<T>* tape = Tape<T>::active();
  if (tape != nullptr) {
    bool any = false;
    for (const auto* in : inputs) any = any || in->requires_grad();
    if (any) {
      node->requires_grad = true;
      for (const auto* in : inputs) node->parents.push_back(in->ptr());
      node->backward = std::move(backward);
      tape->record(node);
    }
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> make_result_n(Shape shape, std::vector<T> value, const std::vector<Tensor<T>>& inputs,
                        const char* op, Backward<T> backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  Tape<T>* tape = Tape<T>::active();
  if (tape != nullptr) {
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (any) {
      node->requires_grad = true;
      for (const auto& in : inputs) node->parents.push_back(in.ptr());
      node->backward = std::move(backward);
      tape->record(node);
    }
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
void require_rank2(const Tensor<T>& t, const char* op) {
  if (!t.defined() || t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         (t.defined() ? shape_str(t.shape()) : std::string("<undefined>")));
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
  }
}

template <typename T>
bool wants(const Node<T>* n) {
  return n->requires_grad;
}

template <typename T, typename F, typename D>
Tensor<T> unary(const Tensor<T>& x, const char* op, F f, D df) {
  const auto xs = x.data();
  std::vector<T> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = f(xs[i]);
  return make_result<T>(x.shape(), std::move(out), {&x}, op, [df](Node<T>& self) {
    Node<T>* in = self.parents[0].get();
    if (!wants(in)) return;
    auto& g = in->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * df(in->value[i], self.value[i]);
    }
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// Linear algebra

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  std::vector<T> out(m * n, T(0));
  gemm_nn(m, n, k, a.data().data(), b.data().data(), out.data());
  return make_result<T>({m, n}, std::move(out), {&a, &b}, "matmul", [m, n, k](Node<T>& self) {
    Node<T>* pa = self.parents[0].get();
    Node<T>* pb = self.parents[1].get();
    if (wants(pa)) gemm_nt(m, n, k, self.grad.data(), pb->value.data(), pa->ensure_grad().data());
    if (wants(pb)) gemm_tn(m, n, k, pa->value.data(), self.grad.data(), pb->ensure_grad().data());
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_rank2(a, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<T> out(m * n);
  const auto xs = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = xs[i * n + j];
  return make_result<T>({n, m}, std::move(out), {&a}, "transpose", [m, n](Node<T>& self) {
    Node<T>* in = self.parents[0].get();
    if (!wants(in)) return;
    auto& g = in->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
  });
}

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return make_result<T>(a.shape(), std::move(out), {&a, &b}, "add", [](Node<T>& self) {
    for (auto& p : self.parents) {
      if (!wants(p.get())) continue;
      auto& g = p->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return make_result<T>(a.shape(), std::move(out), {&a, &b}, "sub", [](Node<T>& self) {
    Node<T>* pa = self.parents[0].get();
    Node<T>* pb = self.parents[1].get();
    if (wants(pa)) {
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants(pb)) {
      auto& g = pb->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return make_result<T>(a.shape(), std::move(out), {&a, &b}, "mul", [](Node<T>& self) {
    Node<T>* pa = self.parents[0].get();
    Node<T>* pb = self.parents[1].get();
    if (wants(pa)) {
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb->value[i];
    }
    if (wants(pb)) {
      auto& g = pb->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa->value[i];
    }
  });
}

template <typename T>
Tensor<T> add_row(const Tensor<T>& a, const Tensor<T>& row) {
  const std::size_t d = a.cols();
  if (row.size() != d) {
    throw DimensionError("add_row: row of shape " + shape_str(row.shape()) +
                         " cannot broadcast over " + shape_str(a.shape()));
  }
  const std::size_t n = a.size() / std::max<std::size_t>(d, 1);
  std::vector<T> out(a.size());
  const auto xs = a.data();
  const auto rs = row.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = xs[i * d + j] + rs[j];
  return make_result<T>(a.shape(), std::move(out), {&a, &row}, "add_row",
                        [n, d](Node<T>& self) {
                          Node<T>* pa = self.parents[0].get();
                          Node<T>* pr = self.parents[1].get();
                          if (wants(pa)) {
                            auto& g = pa->ensure_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                          }
                          if (wants(pr)) {
                            auto& g = pr->ensure_grad();
                            for (std::size_t i = 0; i < n; ++i)
                              for (std::size_t j = 0; j < d; ++j) g[j] += self.grad[i * d + j];
                          }
                        });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  return unary<T>(
      a, "scale", [factor](T x) { return x * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, const Tensor<T>& s) {
  if (s.size() != 1) throw DimensionError("mul_scalar: factor must have one element");
  const T sv = s[0];
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * sv;
  return make_result<T>(a.shape(), std::move(out), {&a, &s}, "mul_scalar", [](Node<T>& self) {
    Node<T>* pa = self.parents[0].get();
    Node<T>* ps = self.parents[1].get();
    if (wants(pa)) {
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * ps->value[0];
    }
    if (wants(ps)) {
      T acc = T(0);
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * pa->value[i];
      ps->ensure_grad()[0] += acc;
    }
  });
}

template <typename T>
Tensor<T> pow_scalar(const Tensor<T>& a, const Tensor<T>& s) {
  if (s.size() != 1) throw DimensionError("pow_scalar: exponent must have one element");
  const T sv = s[0];
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(a[i] > T(0))) throw InputError("pow_scalar: base must be strictly positive");
    out[i] = std::pow(a[i], sv);
  }
  return make_result<T>(a.shape(), std::move(out), {&a, &s}, "pow_scalar", [](Node<T>& self) {
    Node<T>* pa = self.parents[0].get();
    Node<T>* ps = self.parents[1].get();
    const T e = ps->value[0];
    if (wants(pa)) {
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] += self.grad[i] * e * std::pow(pa->value[i], e - T(1));
    }
    if (wants(ps)) {
      T acc = T(0);
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        acc += self.grad[i] * self.value[i] * std::log(pa->value[i]);
      ps->ensure_grad()[0] += acc;
    }
  });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr T c = T(0.7978845608028654);  // sqrt(2/pi)
  constexpr T k = T(0.044715);
  return unary<T>(
      x, "gelu",
      [](T v) { return T(0.5) * v * (T(1) + std::tanh(c * (v + k * v * v * v))); },
      [](T v, T) {
        const T t = std::tanh(c * (v + k * v * v * v));
        return T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * c * (T(1) + T(3) * k * v * v);
      });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return unary<T>(
      x, "tanh", [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary<T>(
      x, "sigmoid",
      [](T v) {
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary<T>(
      x, "relu", [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout probability must be < 1");
  const T keep_scale = T(1.0 / (1.0 - p));
  std::vector<T> mask(x.size());
  for (auto& m : mask) m = uniform01(rng) >= p ? keep_scale : T(0);
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * mask[i];
  return make_result<T>(x.shape(), std::move(out), {&x}, "dropout",
                        [mask = std::move(mask)](Node<T>& self) {
                          Node<T>* in = self.parents[0].get();
                          if (!wants(in)) return;
                          auto& g = in->ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
                        });
}

// ---------------------------------------------------------------------------
// Normalization / attention

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     double eps) {
  const std::size_t d = x.cols();
  if (d == 0) throw DimensionError("layer_norm: last dimension is zero");
  if (gain.size() != d || bias.size() != d) {
    throw DimensionError("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                         shape_str(bias.shape()) + " do not match input " + shape_str(x.shape()));
  }
  const std::size_t n = x.size() / d;
  std::vector<T> xhat(x.size());
  std::vector<T> inv_std(n);
  std::vector<T> out(x.size());
  const auto xs = x.data();
  const auto gs = gain.data();
  const auto bs = bias.data();
  for (std::size_t r = 0; r < n; ++r) {
    const T* row = xs.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = static_cast<T>(is);
    for (std::size_t j = 0; j < d; ++j) {
      const T h = static_cast<T>((row[j] - mu) * is);
      xhat[r * d + j] = h;
      out[r * d + j] = gs[j] * h + bs[j];
    }
  }
  return make_result<T>(
      x.shape(), std::move(out), {&x, &gain, &bias}, "layer_norm",
      [n, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
        Node<T>* px = self.parents[0].get();
        Node<T>* pg = self.parents[1].get();
        Node<T>* pb = self.parents[2].get();
        const T* dy = self.grad.data();
        if (wants(pg)) {
          auto& g = pg->ensure_grad();
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t j = 0; j < d; ++j) g[j] += dy[r * d + j] * xhat[r * d + j];
        }
        if (wants(pb)) {
          auto& g = pb->ensure_grad();
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t j = 0; j < d; ++j) g[j] += dy[r * d + j];
        }
        if (wants(px)) {
          auto& g = px->ensure_grad();
          const T* gain_v = pg->value.data();
          std::vector<T> dxhat(d);
          for (std::size_t r = 0; r < n; ++r) {
            T mean_d = T(0), mean_dx = T(0);
            for (std::size_t j = 0; j < d; ++j) {
              dxhat[j] = dy[r * d + j] * gain_v[j];
              mean_d += dxhat[j];
              mean_dx += dxhat[j] * xhat[r * d + j];
            }
            mean_d /= static_cast<T>(d);
            mean_dx /= static_cast<T>(d);
            for (std::size_t j = 0; j < d; ++j) {
              g[r * d + j] += inv_std[r] * (dxhat[j] - mean_d - xhat[r * d + j] * mean_dx);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
  const std::size_t d = x.cols();
  const std::size_t n = d == 0 ? 0 : x.size() / d;
  std::vector<T> out(x.size());
  const auto xs = x.data();
  for (std::size_t r = 0; r < n; ++r) {
    const T* row = xs.data() + r * d;
    const T mx = *std::max_element(row, row + d);
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) z += std::exp(static_cast<double>(row[j] - mx));
    for (std::size_t j = 0; j < d; ++j)
      out[r * d + j] = static_cast<T>(std::exp(static_cast<double>(row[j] - mx)) / z);
  }
  return make_result<T>(x.shape(), std::move(out), {&x}, "softmax", [n, d](Node<T>& self) {
    Node<T>* in = self.parents[0].get();
    if (!wants(in)) return;
    auto& g = in->ensure_grad();
    for (std::size_t r = 0; r < n; ++r) {
      T dot = T(0);
      for (std::size_t j = 0; j < d; ++j) dot += self.grad[r * d + j] * self.value[r * d + j];
      for (std::size_t j = 0; j < d; ++j)
        g[r * d + j] += self.value[r * d + j] * (self.grad[r * d + j] - dot);
    }
  });
}

template <typename T>
Tensor<T> masked_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                           std::span<const std::uint8_t> key_mask, std::size_t batch,
                           std::size_t seq, std::size_t heads, std::vector<T>* probs_out) {
  require_rank2(q, "attention");
  require_same_shape(q, k, "attention");
  require_same_shape(q, v, "attention");
  const std::size_t d = q.dim(1);
  if (q.dim(0) != batch * seq || key_mask.size() != batch * seq) {
    throw DimensionError("attention: expected " + std::to_string(batch * seq) + " rows, got " +
                         std::to_string(q.dim(0)) + " (mask " +
                         std::to_string(key_mask.size()) + ")");
  }
  if (heads == 0 || d % heads != 0) {
    throw DimensionError("attention: hidden size " + std::to_string(d) +
                         " not divisible by heads " + std::to_string(heads));
  }
  const std::size_t dh = d / heads;
  const T scale_f = T(1.0 / std::sqrt(static_cast<double>(dh)));
  std::vector<T> probs(batch * heads * seq * seq, T(0));
  std::vector<T> out(batch * seq * d, T(0));
  const T* qs = q.data().data();
  const T* ks = k.data().data();
  const T* vs = v.data().data();
  std::vector<double> scores(seq);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::uint8_t* mask = key_mask.data() + b * seq;
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * dh;
      for (std::size_t i = 0; i < seq; ++i) {
        const T* qi = qs + (b * seq + i) * d + off;
        double mx = -1e300;
        bool any = false;
        for (std::size_t j = 0; j < seq; ++j) {
          if (!mask[j]) continue;
          const T* kj = ks + (b * seq + j) * d + off;
          T acc = T(0);
          for (std::size_t t = 0; t < dh; ++t) acc += qi[t] * kj[t];
          scores[j] = static_cast<double>(acc * scale_f);
          mx = std::max(mx, scores[j]);
          any = true;
        }
        if (!any) continue;
        double z = 0.0;
        for (std::size_t j = 0; j < seq; ++j) {
          if (mask[j]) {
            scores[j] = std::exp(scores[j] - mx);
            z += scores[j];
          }
        }
        T* prow = probs.data() + ((b * heads + h) * seq + i) * seq;
        T* orow = out.data() + (b * seq + i) * d + off;
        for (std::size_t j = 0; j < seq; ++j) {
          if (!mask[j]) continue;
          const T p = static_cast<T>(scores[j] / z);
          prow[j] = p;
          const T* vj = vs + (b * seq + j) * d + off;
          for (std::size_t t = 0; t < dh; ++t) orow[t] += p * vj[t];
        }
      }
    }
  }
  if (probs_out != nullptr) *probs_out = probs;
  return make_result<T>(
      {batch * seq, d}, std::move(out), {&q, &k, &v}, "attention",
      [batch, seq, heads, d, dh, scale_f, probs = std::move(probs)](Node<T>& self) {
        Node<T>* pq = self.parents[0].get();
        Node<T>* pk = self.parents[1].get();
        Node<T>* pv = self.parents[2].get();
        T* gq = wants(pq) ? pq->ensure_grad().data() : nullptr;
        T* gk = wants(pk) ? pk->ensure_grad().data() : nullptr;
        T* gv = wants(pv) ? pv->ensure_grad().data() : nullptr;
        const T* qs = pq->value.data();
        const T* ks = pk->value.data();
        const T* vs = pv->value.data();
        const T* dout = self.grad.data();
        std::vector<T> dp(seq);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = h * dh;
            for (std::size_t i = 0; i < seq; ++i) {
              const T* prow = probs.data() + ((b * heads + h) * seq + i) * seq;
              const T* di = dout + (b * seq + i) * d + off;
              T dot = T(0);
              for (std::size_t j = 0; j < seq; ++j) {
                if (prow[j] == T(0)) {
                  dp[j] = T(0);
                  continue;
                }
                const T* vj = vs + (b * seq + j) * d + off;
                T acc = T(0);
                for (std::size_t t = 0; t < dh; ++t) acc += di[t] * vj[t];
                dp[j] = acc;
                dot += prow[j] * acc;
                if (gv != nullptr) {
                  T* gvj = gv + (b * seq + j) * d + off;
                  for (std::size_t t = 0; t < dh; ++t) gvj[t] += prow[j] * di[t];
                }
              }
              const T* qi = qs + (b * seq + i) * d + off;
              for (std::size_t j = 0; j < seq; ++j) {
                if (prow[j] == T(0)) continue;
                const T ds = prow[j] * (dp[j] - dot) * scale_f;
                const T* kj = ks + (b * seq + j) * d + off;
                if (gq != nullptr) {
                  T* gqi = gq + (b * seq + i) * d + off;
                  for (std::size_t t = 0; t < dh; ++t) gqi[t] += ds * kj[t];
                }
                if (gk != nullptr) {
                  T* gkj = gk + (b * seq + j) * d + off;
                  for (std::size_t t = 0; t < dh; ++t) gkj[t] += ds * qi[t];
                }
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Indexing / layout

template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const std::int32_t> ids) {
  require_rank2(table, "embedding");
  const std::size_t v = table.dim(0), d = table.dim(1);
  std::vector<T> out(ids.size() * d);
  const auto ts = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= v) {
      throw IndexError("embedding: id " + std::to_string(ids[i]) + " outside [0," +
                       std::to_string(v) + ")");
    }
    std::copy_n(ts.data() + static_cast<std::size_t>(ids[i]) * d, d, out.data() + i * d);
  }
  std::vector<std::int32_t> saved(ids.begin(), ids.end());
  return make_result<T>({ids.size(), d}, std::move(out), {&table}, "embedding",
                        [d, saved = std::move(saved)](Node<T>& self) {
                          Node<T>* in = self.parents[0].get();
                          if (!wants(in)) return;
                          auto& g = in->ensure_grad();
                          for (std::size_t i = 0; i < saved.size(); ++i) {
                            T* row = g.data() + static_cast<std::size_t>(saved[i]) * d;
                            for (std::size_t j = 0; j < d; ++j) row[j] += self.grad[i * d + j];
                          }
                        });
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> rows) {
  const std::size_t d = x.cols();
  const std::size_t n = x.rows();
  std::vector<T> out(rows.size() * d);
  const auto xs = x.data();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n) {
      throw IndexError("gather_rows: row " + std::to_string(rows[i]) + " outside [0," +
                       std::to_string(n) + ")");
    }
    std::copy_n(xs.data() + rows[i] * d, d, out.data() + i * d);
  }
  std::vector<std::size_t> saved(rows.begin(), rows.end());
  return make_result<T>({rows.size(), d}, std::move(out), {&x}, "gather_rows",
                        [d, saved = std::move(saved)](Node<T>& self) {
                          Node<T>* in = self.parents[0].get();
                          if (!wants(in)) return;
                          auto& g = in->ensure_grad();
                          for (std::size_t i = 0; i < saved.size(); ++i)
                            for (std::size_t j = 0; j < d; ++j)
                              g[saved[i] * d + j] += self.grad[i * d + j];
                        });
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t begin, std::size_t end) {
  require_rank2(x, "slice_rows");
  if (begin > end || end > x.dim(0)) throw IndexError("slice_rows: bad range");
  const std::size_t d = x.dim(1);
  std::vector<T> out(x.data().begin() + begin * d, x.data().begin() + end * d);
  return make_result<T>({end - begin, d}, std::move(out), {&x}, "slice_rows",
                        [begin, d](Node<T>& self) {
                          Node<T>* in = self.parents[0].get();
                          if (!wants(in)) return;
                          auto& g = in->ensure_grad();
                          for (std::size_t i = 0; i < self.grad.size(); ++i)
                            g[begin * d + i] += self.grad[i];
                        });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t begin, std::size_t end) {
  require_rank2(x, "slice_cols");
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (begin > end || end > d) throw IndexError("slice_cols: bad range");
  const std::size_t w = end - begin;
  std::vector<T> out(n * w);
  const auto xs = x.data();
  for (std::size_t i = 0; i < n; ++i)
    std::copy_n(xs.data() + i * d + begin, w, out.data() + i * w);
  return make_result<T>({n, w}, std::move(out), {&x}, "slice_cols",
                        [n, d, w, begin](Node<T>& self) {
                          Node<T>* in = self.parents[0].get();
                          if (!wants(in)) return;
                          auto& g = in->ensure_grad();
                          for (std::size_t i = 0; i < n; ++i)
                            for (std::size_t j = 0; j < w; ++j)
                              g[i * d + begin + j] += self.grad[i * w + j];
                        });
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t n = parts[0].rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    if (p.rows() != n) throw DimensionError("concat_cols: row counts differ");
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<T> out(n * total);
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto xs = parts[k].data();
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(xs.data() + i * widths[k], widths[k], out.data() + i * total + off);
    off += widths[k];
  }
  return make_result_n<T>({n, total}, std::move(out), parts, "concat_cols",
                          [n, total, widths](Node<T>& self) {
                            std::size_t off = 0;
                            for (std::size_t k = 0; k < self.parents.size(); ++k) {
                              Node<T>* in = self.parents[k].get();
                              const std::size_t w = widths[k];
                              if (wants(in)) {
                                auto& g = in->ensure_grad();
                                for (std::size_t i = 0; i < n; ++i)
                                  for (std::size_t j = 0; j < w; ++j)
                                    g[i * w + j] += self.grad[i * total + off + j];
                              }
                              off += w;
                            }
                          });
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t d = parts[0].cols();
  std::size_t n = 0;
  for (const auto& p : parts) {
    if (p.cols() != d) throw DimensionError("concat_rows: column counts differ");
    n += p.rows();
  }
  std::vector<T> out;
  out.reserve(n * d);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return make_result_n<T>({n, d}, std::move(out), parts, "concat_rows", [](Node<T>& self) {
    std::size_t off = 0;
    for (auto& p : self.parents) {
      const std::size_t len = p->value.size();
      if (wants(p.get())) {
        auto& g = p->ensure_grad();
        for (std::size_t i = 0; i < len; ++i) g[i] += self.grad[off + i];
      }
      off += len;
    }
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return make_result<T>(std::move(shape), std::move(out), {&x}, "reshape", [](Node<T>& self) {
    Node<T>* in = self.parents[0].get();
    if (!wants(in)) return;
    auto& g = in->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Reductions / losses

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  double acc = 0.0;
  for (T v : x.data()) acc += v;
  return make_result<T>({1}, {static_cast<T>(acc)}, {&x}, "sum", [](Node<T>& self) {
    Node<T>* in = self.parents[0].get();
    if (!wants(in)) return;
    auto& g = in->ensure_grad();
    for (auto& gi : g) gi += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (x.size() == 0) throw DimensionError("mean of empty tensor");
  double acc = 0.0;
  for (T v : x.data()) acc += v;
  const double n = static_cast<double>(x.size());
  return make_result<T>({1}, {static_cast<T>(acc / n)}, {&x}, "mean", [n](Node<T>& self) {
    Node<T>* in = self.parents[0].get();
    if (!wants(in)) return;
    auto& g = in->ensure_grad();
    const T share = static_cast<T>(self.grad[0] / n);
    for (auto& gi : g) gi += share;
  });
}

template <typename T>
Tensor<T> softmax_ce(const Tensor<T>& logits, std::span<const std::int32_t> targets,
                     Reduction reduction) {
  const std::size_t vsize = logits.cols();
  const std::size_t n = logits.rows();
  if (targets.size() != n) {
    throw DimensionError("softmax_ce: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(n) + " rows");
  }
  if (n == 0) throw ContractError("softmax_ce: no rows");
  std::vector<T> probs(logits.size());
  double total = 0.0;
  const auto xs = logits.data();
  for (std::size_t r = 0; r < n; ++r) {
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= vsize) {
      throw IndexError("softmax_ce: target " + std::to_string(targets[r]) + " outside [0," +
                       std::to_string(vsize) + ")");
    }
    const T* row = xs.data() + r * vsize;
    const double mx = static_cast<double>(*std::max_element(row, row + vsize));
    double z = 0.0;
    for (std::size_t j = 0; j < vsize; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
    const double logz = mx + std::log(z);
    for (std::size_t j = 0; j < vsize; ++j)
      probs[r * vsize + j] = static_cast<T>(std::exp(static_cast<double>(row[j]) - logz));
    total += logz - static_cast<double>(row[targets[r]]);
  }
  const double denom = reduction == Reduction::kMean ? static_cast<double>(n) : 1.0;
  std::vector<std::int32_t> saved(targets.begin(), targets.end());
  return make_result<T>(
      {1}, {static_cast<T>(total / denom)}, {&logits}, "softmax_ce",
      [n, vsize, denom, probs = std::move(probs), saved = std::move(saved)](Node<T>& self) {
        Node<T>* in = self.parents[0].get();
        if (!wants(in)) return;
        auto& g = in->ensure_grad();
        const T s = static_cast<T>(self.grad[0] / denom);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t j = 0; j < vsize; ++j) g[r * vsize + j] += s * probs[r * vsize + j];
          g[r * vsize + static_cast<std::size_t>(saved[r])] -= s;
        }
      });
}

template <typename T>
Tensor<T> bce_multilabel(const Tensor<T>& probs, std::span<const T> targets, double eps,
                         Reduction reduction) {
  if (targets.size() != probs.size()) {
    throw DimensionError("bce_multilabel: " + std::to_string(targets.size()) +
                         " targets for probabilities of shape " + shape_str(probs.shape()));
  }
  const std::size_t n = probs.rows();
  const std::size_t l = probs.cols();
  const auto ps = probs.data();
  double total = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double p = std::clamp(static_cast<double>(ps[i]), eps, 1.0 - eps);
    const double y = targets[i];
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  const double denom = reduction == Reduction::kMean ? static_cast<double>(n) : 1.0;
  std::vector<T> saved(targets.begin(), targets.end());
  (void)l;
  return make_result<T>({1}, {static_cast<T>(total / denom)}, {&probs}, "bce_multilabel",
                        [eps, denom, saved = std::move(saved)](Node<T>& self) {
                          Node<T>* in = self.parents[0].get();
                          if (!wants(in)) return;
                          auto& g = in->ensure_grad();
                          const double s = self.grad[0] / denom;
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            const double p = in->value[i];
                            if (p < eps || p > 1.0 - eps) continue;  // clamp is flat
                            const double y = saved[i];
                            g[i] += static_cast<T>(s * (-y / p + (1.0 - y) / (1.0 - p)));
                          }
                        });
}

template <typename T>
Tensor<T> mse(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mse");
  if (a.size() == 0) throw DimensionError("mse of empty tensors");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    total += diff * diff;
  }
  const double n = static_cast<double>(a.size());
  return make_result<T>({1}, {static_cast<T>(total / n)}, {&a, &b}, "mse", [n](Node<T>& self) {
    Node<T>* pa = self.parents[0].get();
    Node<T>* pb = self.parents[1].get();
    const T s = static_cast<T>(2.0 * self.grad[0] / n);
    for (std::size_t i = 0; i < pa->value.size(); ++i) {
      const T diff = pa->value[i] - pb->value[i];
      if (wants(pa)) pa->ensure_grad()[i] += s * diff;
      if (wants(pb)) pb->ensure_grad()[i] -= s * diff;
    }
  });
}

template <typename T>
Tensor<T> cosine_loss(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "cosine_loss");
  const std::size_t d = a.cols();
  const std::size_t n = a.rows();
  std::vector<double> na(n), nb(n), dots(n);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double aa = 0, bb = 0, ab = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const double x = a[r * d + j], y = b[r * d + j];
      aa += x * x;
      bb += y * y;
      ab += x * y;
    }
    na[r] = std::max(std::sqrt(aa), 1e-12);
    nb[r] = std::max(std::sqrt(bb), 1e-12);
    dots[r] = ab;
    total += ab / (na[r] * nb[r]);
  }
  const double rows = static_cast<double>(n);
  return make_result<T>(
      {1}, {static_cast<T>(1.0 - total / rows)}, {&a, &b}, "cosine_loss",
      [n, d, rows, na = std::move(na), nb = std::move(nb), dots = std::move(dots)](Node<T>& self) {
        Node<T>* pa = self.parents[0].get();
        Node<T>* pb = self.parents[1].get();
        const double s = -self.grad[0] / rows;
        for (std::size_t r = 0; r < n; ++r) {
          const double c = dots[r] / (na[r] * nb[r]);
          for (std::size_t j = 0; j < d; ++j) {
            const double x = pa->value[r * d + j], y = pb->value[r * d + j];
            if (wants(pa))
              pa->ensure_grad()[r * d + j] +=
                  static_cast<T>(s * (y / (na[r] * nb[r]) - c * x / (na[r] * na[r])));
            if (wants(pb))
              pb->ensure_grad()[r * d + j] +=
                  static_cast<T>(s * (x / (na[r] * nb[r]) - c * y / (nb[r] * nb[r])));
          }
        }
      });
}

// ---------------------------------------------------------------------------
// GRU

template <typename T>
GruParams<T> make_gru_params(std::size_t input_size, std::size_t hidden_size, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  auto init = [&](Shape shape) {
    std::vector<T> v(numel(shape));
    for (auto& x : v) x = static_cast<T>(uniform(rng, -bound, bound));
    return Tensor<T>(std::move(shape), std::move(v), true);
  };
  GruParams<T> p;
  p.w_input = init({input_size, 3 * hidden_size});
  p.b_input = init({3 * hidden_size});
  p.w_hidden = init({hidden_size, 3 * hidden_size});
  p.b_hidden = init({3 * hidden_size});
  return p;
}

template <typename T>
Tensor<T> gru_cell(const Tensor<T>& x_t, const Tensor<T>& h_prev, const GruParams<T>& params) {
  const std::size_t hs = params.hidden_size();
  if (x_t.cols() != params.input_size() || h_prev.cols() != hs || x_t.rows() != h_prev.rows() ||
      params.w_input.dim(1) != 3 * hs || params.w_hidden.dim(1) != 3 * hs) {
    throw DimensionError("gru_cell: input " + shape_str(x_t.shape()) + ", state " +
                         shape_str(h_prev.shape()) + " incompatible with W_in " +
                         shape_str(params.w_input.shape()) + ", W_h " +
                         shape_str(params.w_hidden.shape()));
  }
  const Tensor<T> x2 = x_t.rank() == 1 ? reshape(x_t, {1, x_t.size()}) : x_t;
  const Tensor<T> h2 = h_prev.rank() == 1 ? reshape(h_prev, {1, h_prev.size()}) : h_prev;
  const auto gi = add_row(matmul(x2, params.w_input), params.b_input);
  const auto gh = add_row(matmul(h2, params.w_hidden), params.b_hidden);
  const auto r = sigmoid(add(slice_cols(gi, 0, hs), slice_cols(gh, 0, hs)));
  const auto z = sigmoid(add(slice_cols(gi, hs, 2 * hs), slice_cols(gh, hs, 2 * hs)));
  const auto c = tanh(add(slice_cols(gi, 2 * hs, 3 * hs), mul(r, slice_cols(gh, 2 * hs, 3 * hs))));
  // (1 - z) * c + z * h  ==  c + z * (h - c)
  auto h = add(c, mul(z, sub(h2, c)));
  return h_prev.rank() == 1 ? reshape(h, {hs}) : h;
}

// ---------------------------------------------------------------------------

#define CHDZDT_INSTANTIATE(T)                                                                    \
  template class Tensor<T>;                                                                      \
  template class Tape<T>;                                                                        \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> transpose(const Tensor<T>&);                                                \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> add_row(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> scale(const Tensor<T>&, T);                                                 \
  template Tensor<T> mul_scalar(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> pow_scalar(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> gelu(const Tensor<T>&);                                                     \
  template Tensor<T> tanh(const Tensor<T>&);                                                     \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                  \
  template Tensor<T> relu(const Tensor<T>&);                                                     \
  template Tensor<T> dropout(const Tensor<T>&, double, Rng&);                                    \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double);   \
  template Tensor<T> softmax_rows(const Tensor<T>&);                                             \
  template Tensor<T> masked_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,      \
                                      std::span<const std::uint8_t>, std::size_t, std::size_t,   \
                                      std::size_t, std::vector<T>*);                             \
  template Tensor<T> embedding(const Tensor<T>&, std::span<const std::int32_t>);                 \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const std::size_t>);                \
  template Tensor<T> slice_rows(const Tensor<T>&, std::size_t, std::size_t);                     \
  template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);                     \
  template Tensor<T> concat_cols(const std::vector<Tensor<T>>&);                                 \
  template Tensor<T> concat_rows(const std::vector<Tensor<T>>&);                                 \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                           \
  template Tensor<T> sum(const Tensor<T>&);                                                      \
  template Tensor<T> mean(const Tensor<T>&);                                                     \
  template Tensor<T> softmax_ce(const Tensor<T>&, std::span<const std::int32_t>, Reduction);     \
  template Tensor<T> bce_multilabel(const Tensor<T>&, std::span<const T>, double, Reduction);    \
  template Tensor<T> mse(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> cosine_loss(const Tensor<T>&, const Tensor<T>&);                            \
  template GruParams<T> make_gru_params<T>(std::size_t, std::size_t, Rng&);                      \
  template Tensor<T> gru_cell(const Tensor<T>&, const Tensor<T>&, const GruParams<T>&);

CHDZDT_INSTANTIATE(float)
CHDZDT_INSTANTIATE(double)

#undef CHDZDT_INSTANTIATE

}  // namespace chdzdt::ad
