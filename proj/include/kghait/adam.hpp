#pragma once

#include <cmath>
#include <cstddef>

#include "kghait/matrix.hpp"

namespace kghait {

struct AdamSettings {
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment buffers for one parameter matrix.
class AdamSlot {
 public:
  AdamSlot() = default;
  explicit AdamSlot(const Matrix& like) : m_(like.rows(), like.cols()), v_(like.rows(), like.cols()) {}

  /// One bias-corrected step; `step` counts from 1.
  void update(Matrix& param, const Matrix& grad, const AdamSettings& s, std::size_t step) {
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(step));
    double* p = param.data();
    const double* g = grad.data();
    double* m = m_.data();
    double* v = v_.data();
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
      v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
      p[i] -= s.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + s.eps);
    }
  }

 private:
  Matrix m_;
  Matrix v_;
};

}  // namespace kghait
