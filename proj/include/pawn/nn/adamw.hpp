#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "pawn/nn/layers.hpp"

namespace pawn::nn {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;

  void validate() const {
    if (!(lr > 0)) throw std::invalid_argument("learning rate must be > 0");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw std::invalid_argument("betas must be in [0,1)");
    if (!(eps > 0)) throw std::invalid_argument("adam eps must be > 0");
    if (!(weight_decay >= 0)) throw std::invalid_argument("weight decay must be >= 0");
  }
  nlohmann::json to_json() const {
    return {{"lr", lr}, {"beta1", beta1}, {"beta2", beta2}, {"eps", eps}, {"weight_decay", weight_decay}};
  }
};

/// Adam with decoupled weight decay: p <- p (1 - lr wd), then the
/// bias-corrected Adam step.
template <class T>
class AdamW {
 public:
  AdamW(std::vector<Param<T>*> params, AdamWConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    cfg_.validate();
    for (auto* p : params_) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }

  void step() {
    ++t_;
    const double c1 = 1 - std::pow(cfg_.beta1, double(t_));
    const double c2 = 1 - std::pow(cfg_.beta2, double(t_));
    const double decay = 1 - cfg_.lr * cfg_.weight_decay;
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = *params_[k];
      if (p.grad.shape != p.value.shape) throw ShapeError("adamw: gradient shape mismatch for " + p.name);
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        m[i] = cfg_.beta1 * m[i] + (1 - cfg_.beta1) * g;
        v[i] = cfg_.beta2 * v[i] + (1 - cfg_.beta2) * g * g;
        const double mh = m[i] / c1;
        const double vh = v[i] / c2;
        const double w = double(p.value[i]) * decay;
        p.value[i] = static_cast<T>(w - cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps));
      }
    }
  }

  void zero_grad() { nn::zero_grad(params_); }
  std::uint64_t step_count() const { return t_; }
  const AdamWConfig& config() const { return cfg_; }
  const std::vector<double>& first_moment(std::size_t k) const { return m_.at(k); }
  const std::vector<double>& second_moment(std::size_t k) const { return v_.at(k); }

 private:
  std::vector<Param<T>*> params_;
  AdamWConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::uint64_t t_ = 0;
};

}  // namespace pawn::nn
