#pragma once

#include <stdexcept>
#include <vector>

#include "hellkan/numeric.hpp"

namespace hellkan {

// Nonnegative discrete measure given by support indices and weights.
struct DiscreteMeasure {
  std::vector<int> support;
  std::vector<double> weights;

  DiscreteMeasure() = default;
  DiscreteMeasure(std::vector<int> s, std::vector<double> w)
      : support(std::move(s)), weights(std::move(w)) {
    if (support.size() != weights.size())
      throw std::invalid_argument("measure support/weights size mismatch");
    for (double x : weights)
      if (x < 0.0) throw std::invalid_argument("measure weights must be nonnegative");
  }

  static DiscreteMeasure from_dense(const std::vector<double>& w) {
    DiscreteMeasure mu;
    for (int i = 0; i < static_cast<int>(w.size()); ++i)
      if (w[i] != 0.0) {
        mu.support.push_back(i);
        mu.weights.push_back(w[i]);
      }
    return mu;
  }

  double total() const { return stable_sum(weights); }
  bool empty() const { return total() == 0.0; }

  std::vector<double> dense(int n) const {
    std::vector<double> w(n, 0.0);
    for (std::size_t k = 0; k < support.size(); ++k) {
      if (support[k] < 0 || support[k] >= n)
        throw std::out_of_range("measure support index outside the ground space");
      w[support[k]] += weights[k];
    }
    return w;
  }

  DiscreteMeasure scaled(double lambda) const {
    DiscreteMeasure mu = *this;
    for (double& w : mu.weights) w *= lambda;
    return mu;
  }
};

}  // namespace hellkan
