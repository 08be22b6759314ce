#include "chdzdt/adam.hpp"

#include <cmath>

namespace chdzdt {

template <typename T>
Adam<T>::Adam(std::vector<ad::Tensor<T>> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

template <typename T>
void Adam<T>::step() {
  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    auto& m = m_[k];
    auto& v = v_[k];
    const bool has = p.has_grad();
    auto data = p.data();
    auto grad = p.grad();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = has ? static_cast<double>(grad[i]) : 0.0;
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      data[i] = static_cast<T>(data[i] - config_.lr * mhat / (std::sqrt(vhat) + config_.eps));
    }
    p.zero_grad();
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template class Adam<float>;
template class Adam<double>;

}  // namespace chdzdt
