#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pawn/nn/tensor.hpp"

namespace pawn::nn {

struct GradCheckResult {
  double max_rel_error = 0;
  std::string worst;  // "<tensor>[index]"
  std::size_t checked = 0;
};

/// One tensor under test: its values (perturbed in place) and the analytic
/// gradient already computed for them.
struct GradTarget {
  std::string name;
  Tensor<double>* value;
  const Tensor<double>* analytic;
};

/// Compares analytic gradients with central differences of `loss` at up to
/// `samples` randomly chosen entries per tensor. Relative error is
/// |a - n| / max(|a|, |n|, floor); the floor keeps entries whose gradient
/// is numerically zero from dominating.
inline GradCheckResult gradient_check(const std::function<double()>& loss, const std::vector<GradTarget>& targets,
                                      std::size_t samples = 40, std::uint64_t seed = 1, double h = 1e-5,
                                      double floor = 1e-8) {
  GradCheckResult r;
  std::mt19937_64 rng(seed);
  for (const auto& t : targets) {
    check_shape(t.analytic->shape, t.value->shape, "gradient_check");
    const std::size_t n = t.value->size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (n > samples) {
      for (std::size_t i = 0; i < samples; ++i) std::swap(idx[i], idx[i + rng() % (n - i)]);
      idx.resize(samples);
    }
    for (std::size_t i : idx) {
      double& x = t.value->data[i];
      const double saved = x;
      x = saved + h;
      const double up = loss();
      x = saved - h;
      const double down = loss();
      x = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = t.analytic->data[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++r.checked;
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst = t.name + "[" + std::to_string(i) + "] analytic=" + std::to_string(a) +
                  " numeric=" + std::to_string(numeric);
      }
    }
  }
  return r;
}

}  // namespace pawn::nn
