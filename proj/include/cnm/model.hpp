#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "cnm/error.hpp"
#include "cnm/types.hpp"

namespace cnm {

/// Linear SVM on top of a feature map: score(x) = w^T Z(x).
struct LinearModel {
  Vector w;
  double lambda = 1e-4;

  static LinearModel zeros(Index k, double lambda) { return {Vector::Zero(k), lambda}; }

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw InvalidArgument("lambda must be a positive finite number");
    if (w.size() < 1) throw InvalidArgument("model weight vector is empty");
  }
  /// Radius of the Pegasos feasible ball.
  double radius() const { return 1.0 / std::sqrt(lambda); }
};

inline double hinge_loss(int y, double score) {
  if (y != 1 && y != -1) throw InvalidArgument("hinge_loss: label must be -1 or +1");
  return std::max(0.0, 1.0 - static_cast<double>(y) * score);
}

/// Tie rule: a score of exactly zero predicts +1.
inline int predict_label(double score) { return score >= 0.0 ? 1 : -1; }

}  // namespace cnm
