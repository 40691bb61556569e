#pragma once

#include <algorithm>
#include <cmath>

#include "pawn/nn/tensor.hpp"

namespace pawn::nn {

template <class T>
struct LossResult {
  double loss = 0;
  Tensor<T> grad;  // dL/dpred
};

/// Mean Huber loss: 0.5 r^2 inside |r| <= delta, delta (|r| - delta/2) outside.
template <class T>
LossResult<T> huber_loss(const Tensor<T>& pred, const Tensor<T>& target, double delta = 1.0) {
  if (!(delta > 0)) throw std::invalid_argument("huber delta must be > 0");
  check_shape(target.shape, pred.shape, "huber target");
  if (pred.size() == 0) throw ShapeError("huber loss of an empty batch");
  const double n = static_cast<double>(pred.size());
  LossResult<T> out{0, Tensor<T>(pred.shape)};
  double sum = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = double(pred[i]) - double(target[i]);
    const double a = std::abs(r);
    if (a <= delta) {
      sum += 0.5 * r * r;
      out.grad[i] = static_cast<T>(r / n);
    } else {
      sum += delta * (a - 0.5 * delta);
      out.grad[i] = static_cast<T>((r > 0 ? delta : -delta) / n);
    }
  }
  out.loss = sum / n;
  return out;
}

/// Mean binary cross-entropy with predictions clamped to [eps, 1-eps].
template <class T>
LossResult<T> bce_loss(const Tensor<T>& pred, const Tensor<T>& target, double eps = 1e-7) {
  check_shape(target.shape, pred.shape, "bce target");
  if (pred.size() == 0) throw ShapeError("bce loss of an empty batch");
  const double n = static_cast<double>(pred.size());
  LossResult<T> out{0, Tensor<T>(pred.shape)};
  double sum = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(double(pred[i]), eps, 1 - eps);
    const double t = target[i];
    sum += -(t * std::log(p) + (1 - t) * std::log(1 - p));
    // The clamp passes gradients through so saturated wrong outputs still move.
    out.grad[i] = static_cast<T>((p - t) / (p * (1 - p)) / n);
  }
  out.loss = sum / n;
  return out;
}

/// BCE evaluated on logits z with p = sigmoid(z); the gradient is (p - t)/n
/// and stays finite when the sigmoid saturates.
template <class T>
LossResult<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& target) {
  check_shape(target.shape, logits.shape, "bce target");
  if (logits.size() == 0) throw ShapeError("bce loss of an empty batch");
  const double n = static_cast<double>(logits.size());
  LossResult<T> out{0, Tensor<T>(logits.shape)};
  double sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i], t = target[i];
    sum += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    const double p = 1.0 / (1.0 + std::exp(-z));
    out.grad[i] = static_cast<T>((p - t) / n);
  }
  out.loss = sum / n;
  return out;
}

}  // namespace pawn::nn
