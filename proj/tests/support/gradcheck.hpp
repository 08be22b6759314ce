#pragma once

// Central finite-difference gradient checks for the double-precision engine.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "chdzdt/tensor.hpp"

namespace chdzdt::testing {

using TensorD = ad::Tensor<double>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

inline double rel_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / denom;
}

// `loss` builds a scalar from the given inputs (recording onto the active
// tape). Every element of every input is perturbed unless `limit` caps the
// number of checked coordinates per input.
inline GradCheckResult gradcheck(std::vector<TensorD> inputs,
                                 const std::function<TensorD(std::vector<TensorD>&)>& loss,
                                 double h = 1e-4, std::size_t limit = 0) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  {
    ad::Tape<double> tape;
    ad::TapeScope<double> scope(tape);
    auto l = loss(inputs);
    tape.backward(l);
  }
  std::vector<std::vector<double>> analytic;
  for (auto& t : inputs) {
    if (t.has_grad()) {
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    } else {
      analytic.emplace_back(t.size(), 0.0);
    }
  }
  GradCheckResult result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto data = inputs[k].data();
    const std::size_t n = limit == 0 ? data.size() : std::min(limit, data.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = loss(inputs).item();
      data[i] = saved - h;
      const double down = loss(inputs).item();
      data[i] = saved;
      const double numeric = (up - down) / (2 * h);
      result.max_rel_error = std::max(result.max_rel_error, rel_error(numeric, analytic[k][i]));
      ++result.checked;
    }
  }
  return result;
}

inline TensorD random_tensor(ad::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(ad::numel(shape));
  for (auto& x : v) x = uniform(rng, lo, hi);
  return TensorD(std::move(shape), std::move(v));
}

}  // namespace chdzdt::testing
