#pragma once

#include <random>

#include "pawn/models.hpp"
#include "pawn/nn/gradcheck.hpp"
#include "pawn/nn/layers.hpp"
#include "pawn/nn/loss.hpp"

namespace pawn::testing {

using TD = nn::Tensor<double>;

inline TD random_tensor(nn::Shape s, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  TD t(std::move(s));
  for (auto& v : t.data) v = nn::uniform(rng, lo, hi);
  return t;
}

/// 3x3, stride 1, zero padding 1, written as plain loops.
inline TD naive_conv(const TD& x, const TD& k, const TD& b) {
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3), cout = k.dim(0);
  TD y({n, cout, h, w});
  for (int bi = 0; bi < n; ++bi)
    for (int co = 0; co < cout; ++co)
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
          double s = b[static_cast<std::size_t>(co)];
          for (int ci = 0; ci < cin; ++ci)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int sy = yy + ky - 1, sx = xx + kx - 1;
                if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                s += k[static_cast<std::size_t>(((co * cin + ci) * 3 + ky) * 3 + kx)] *
                     x[static_cast<std::size_t>(((bi * cin + ci) * h + sy) * w + sx)];
              }
          y[static_cast<std::size_t>(((bi * cout + co) * h + yy) * w + xx)] = s;
        }
  return y;
}

/// Largest |conv2d - naive_conv| over 100 random shapes; the first half use 8x8 boards.
inline double conv_oracle_max_error(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + int(rng() % 3), cin = 1 + int(rng() % 6), cout = 1 + int(rng() % 6);
    const int h = t < 50 ? 8 : 1 + int(rng() % 9), w = t < 50 ? 8 : 1 + int(rng() % 9);
    nn::Conv2d<double> c(cin, cout, rng);
    const TD x = random_tensor({n, cin, h, w}, rng, -3, 3);
    const TD y = c.forward(x, nn::Mode::Eval);
    if (y.shape != nn::Shape{n, cout, h, w}) return 1e300;
    const TD ref = naive_conv(x, c.weight().value, c.bias().value);
    for (std::size_t i = 0; i < y.size(); ++i) worst = std::max(worst, std::abs(y[i] - ref[i]));
  }
  return worst;
}

/// Checks d(sum(w * f(x)))/d{x, params} for a single module. `before` runs
/// ahead of every forward pass (e.g. to fix a dropout mask).
inline nn::GradCheckResult check_module(nn::Module<double>& m, TD x, nn::Mode mode, std::uint64_t seed = 5,
                                        const std::function<void()>& before = {}) {
  std::mt19937_64 rng(seed);
  if (before) before();
  const TD y0 = m.forward(x, mode);
  const TD w = random_tensor(y0.shape, rng);
  auto params = nn::parameters_of(m);
  nn::zero_grad(params);
  const TD dx = m.backward(w);
  auto loss = [&] {
    if (before) before();
    const TD y = m.forward(x, mode);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
    return s;
  };
  std::vector<TD> grads;
  for (auto* p : params) grads.push_back(p->grad);
  std::vector<nn::GradTarget> targets{{"x", &x, &dx}};
  for (std::size_t i = 0; i < params.size(); ++i) targets.push_back({params[i]->name, &params[i]->value, &grads[i]});
  return nn::gradient_check(loss, targets, 60, seed);
}

/// Gradient of Huber(model(boards, features), target) with respect to the
/// features and every trainable parameter, in batch-statistics mode.
/// Inputs are continuous: one-hot boards give many units identical
/// pre-activations, which then cross a ReLU kink together.
inline nn::GradCheckResult predictor_gradient_check(Predictor<double>& m, int n, std::uint64_t seed,
                                                    std::size_t samples) {
  std::mt19937_64 rng(seed);
  TD boards = random_tensor({n, 12, 8, 8}, rng, 0, 1);
  TD feats = random_tensor({n, m.spec().feature_dim()}, rng);
  const TD target = random_tensor({n, 1}, rng, -2, 2);

  std::vector<nn::Param<double>*> params;
  if (m.encoder()) params = nn::parameters_of<double>(*m.encoder());
  auto hp = nn::parameters_of<double>(m.head());
  params.insert(params.end(), hp.begin(), hp.end());
  nn::zero_grad(params);
  const TD y = m.forward(boards, feats, nn::Mode::BatchStats);
  const auto l = nn::huber_loss(y, target);
  const TD dfeat = m.backward(l.grad);

  auto loss = [&] { return nn::huber_loss(m.forward(boards, feats, nn::Mode::BatchStats), target).loss; };
  std::vector<TD> grads;
  for (auto* p : params) grads.push_back(p->grad);
  std::vector<nn::GradTarget> targets{{"features", &feats, &dfeat}};
  for (std::size_t i = 0; i < params.size(); ++i) targets.push_back({params[i]->name, &params[i]->value, &grads[i]});
  // The floor absorbs roundoff on gradients that are exactly zero, such as
  // biases feeding straight into batchnorm.
  return nn::gradient_check(loss, targets, samples, 3, 1e-6, 1e-5);
}

/// Gradient of the reconstruction BCE with respect to every autoencoder parameter.
inline nn::GradCheckResult autoencoder_gradient_check(Autoencoder<double>& ae, int n, std::uint64_t seed,
                                                      std::size_t samples) {
  std::mt19937_64 rng(seed);
  TD boards = random_tensor({n, 12, 8, 8}, rng, 0, 1);
  auto params = ae.parameters();
  nn::zero_grad(params);
  auto logits = [&] { return ae.decoder.forward(ae.encoder.forward(boards, nn::Mode::BatchStats), nn::Mode::BatchStats); };
  const auto l = nn::bce_with_logits(logits(), boards);
  ae.encoder.backward(ae.decoder.backward(l.grad));
  auto loss = [&] { return nn::bce_with_logits(logits(), boards).loss; };
  std::vector<TD> grads;
  for (auto* p : params) grads.push_back(p->grad);
  std::vector<nn::GradTarget> targets;
  for (std::size_t i = 0; i < params.size(); ++i) targets.push_back({params[i]->name, &params[i]->value, &grads[i]});
  return nn::gradient_check(loss, targets, samples, 4, 1e-6, 1e-5);
}

}  // namespace pawn::testing
