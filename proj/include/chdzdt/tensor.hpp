#pragma once

// Dense row-major tensors with tape-based reverse-mode differentiation.
//
// Operations record themselves on the thread's active Tape (see TapeScope)
// whenever one of their inputs requires a gradient; with no active tape they
// run as plain numeric kernels. Tape::backward replays the recorded nodes in
// reverse order of execution, which is a reverse topological order of the
// forward graph.
//
// Everything is instantiated for float (training) and double (gradient
// checking).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "chdzdt/random.hpp"

namespace chdzdt::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<T>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t size() const { return node_->value.size(); }
  // Rank-1 tensors behave as a single row.
  std::size_t rows() const { return rank() >= 2 ? node_->shape[0] : 1; }
  std::size_t cols() const { return rank() == 0 ? 1 : node_->shape.back(); }

  std::span<T> data() { return node_->value; }
  std::span<const T> data() const { return node_->value; }
  std::span<T> grad() { return node_->grad; }
  std::span<const T> grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }

  T item() const;
  T operator[](std::size_t i) const { return node_->value[i]; }
  T at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  void zero_grad() { node_->grad.clear(); }

  // Copy of the values with no history.
  Tensor detach() const;

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& ptr() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

template <typename T>
class Tape {
 public:
  void record(std::shared_ptr<Node<T>> node) { nodes_.push_back(std::move(node)); }

  // Seeds d(loss)/d(loss) = 1 and propagates to every node recorded before
  // the loss. Throws ContractError for non-scalar losses or losses that were
  // not produced under this tape.
  void backward(const Tensor<T>& loss);

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }
  // Op names in recording order; used by tests to inspect traversal order.
  std::vector<const Node<T>*> nodes() const;

  static Tape* active();
  static void set_active(Tape* tape);

 private:
  std::vector<std::shared_ptr<Node<T>>> nodes_;
};

// Activates a tape for the current thread for the lifetime of the scope.
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape) : previous_(Tape<T>::active()) { Tape<T>::set_active(&tape); }
  ~TapeScope() { Tape<T>::set_active(previous_); }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

enum class Reduction { kMean, kSum };

// --- linear algebra -------------------------------------------------------

// [m,k] x [k,n] -> [m,n]
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> transpose(const Tensor<T>& a);

// --- elementwise ----------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
// [n,d] + [d] broadcast over rows.
template <typename T>
Tensor<T> add_row(const Tensor<T>& a, const Tensor<T>& row);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);
// Multiplies every element by a (trainable) one-element tensor.
template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, const Tensor<T>& s);
// Elementwise a^s for a (trainable) one-element exponent; a must be > 0.
template <typename T>
Tensor<T> pow_scalar(const Tensor<T>& a, const Tensor<T>& s);

template <typename T>
Tensor<T> gelu(const Tensor<T>& x);  // tanh approximation
template <typename T>
Tensor<T> tanh(const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T>
Tensor<T> relu(const Tensor<T>& x);

// Inverted dropout; identity when p == 0.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, Rng& rng);

// --- normalization / attention --------------------------------------------

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     double eps);
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x);

// Multi-head scaled dot-product attention over `batch` sequences of `seq`
// rows each. q, k, v are [batch*seq, d]; key_mask has batch*seq entries and
// keys with mask 0 receive exactly zero weight. When `probs` is non-null it
// receives the attention weights laid out [batch][head][query][key].
template <typename T>
Tensor<T> masked_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                           std::span<const std::uint8_t> key_mask, std::size_t batch,
                           std::size_t seq, std::size_t heads,
                           std::vector<T>* probs = nullptr);

// --- indexing / layout ----------------------------------------------------

// Rows of `table` selected by ids; gradients scatter back into the table.
template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const std::int32_t> ids);
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> rows);
template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t begin, std::size_t end);
template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t begin, std::size_t end);
template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts);
template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts);
template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

// --- reductions / losses --------------------------------------------------

template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);

// Cross-entropy of row-wise softmax(logits) against class ids.
template <typename T>
Tensor<T> softmax_ce(const Tensor<T>& logits, std::span<const std::int32_t> targets,
                     Reduction reduction = Reduction::kMean);

// Per row: sum over labels of -[y ln p + (1-y) ln(1-p)], p clamped to
// [eps, 1-eps]; rows then reduced by `reduction`.
template <typename T>
Tensor<T> bce_multilabel(const Tensor<T>& probs, std::span<const T> targets,
                         double eps = 1e-7, Reduction reduction = Reduction::kMean);

// Mean over all elements of (a - b)^2.
template <typename T>
Tensor<T> mse(const Tensor<T>& a, const Tensor<T>& b);

// 1 - mean over rows of cos(a_i, b_i).
template <typename T>
Tensor<T> cosine_loss(const Tensor<T>& a, const Tensor<T>& b);

// --- recurrent ------------------------------------------------------------

template <typename T>
struct GruParams {
  Tensor<T> w_input;   // [d_in, 3*d_h], gate order: reset, update, candidate
  Tensor<T> b_input;   // [3*d_h]
  Tensor<T> w_hidden;  // [d_h, 3*d_h]
  Tensor<T> b_hidden;  // [3*d_h]

  std::size_t input_size() const { return w_input.dim(0); }
  std::size_t hidden_size() const { return w_hidden.dim(0); }
};

template <typename T>
GruParams<T> make_gru_params(std::size_t input_size, std::size_t hidden_size, Rng& rng);

// One GRU step for a batch of rows: x_t [n, d_in], h_prev [n, d_h] -> [n, d_h].
//   r = sigmoid(x W_r + b_ir + h U_r + b_hr)
//   z = sigmoid(x W_z + b_iz + h U_z + b_hz)
//   c = tanh(x W_c + b_ic + r * (h U_c + b_hc))
//   h = (1 - z) * c + z * h_prev
template <typename T>
Tensor<T> gru_cell(const Tensor<T>& x_t, const Tensor<T>& h_prev, const GruParams<T>& params);

}  // namespace chdzdt::ad
