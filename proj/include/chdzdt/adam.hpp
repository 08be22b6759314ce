#pragma once

#include <cstdint>
#include <vector>

#include "chdzdt/tensor.hpp"

namespace chdzdt {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list. Moments are allocated on
// construction, one per parameter, with matching sizes.
template <typename T>
class Adam {
 public:
  Adam(std::vector<ad::Tensor<T>> params, AdamConfig config);

  // Applies one update from the gradients currently held by the parameters
  // (parameters without a gradient are treated as having zero gradient) and
  // clears those gradients.
  void step();
  void zero_grad();

  std::int64_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  const std::vector<ad::Tensor<T>>& params() const { return params_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  std::vector<ad::Tensor<T>> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::int64_t step_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace chdzdt
