#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "pawn/nn/tensor.hpp"

namespace pawn::nn {

/// Train: batch statistics, running-stat updates, dropout on.
/// Eval: running statistics, dropout off.
/// BatchStats: batch statistics without updates and without dropout; a
/// deterministic training-mode forward for gradient checks.
enum class Mode { Train, Eval, BatchStats };

template <class T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Param() = default;
  Param(std::string n, Shape s) : name(std::move(n)), value(s), grad(s) {}
};

template <class T>
class Module {
 public:
  virtual ~Module() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
  /// Given dL/dy for the last forward, accumulates parameter gradients and returns dL/dx.
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  virtual void parameters(std::vector<Param<T>*>&) {}
  /// Non-trainable state that belongs in the model file (batchnorm running stats).
  virtual void buffers(std::vector<Param<T>*>&) {}
  virtual nlohmann::json describe() const = 0;
};

/// Kaiming-uniform weights (ReLU gain, fan-in) and U(+-1/sqrt(fan_in)) biases.
template <class T>
void kaiming_uniform(Tensor<T>& w, Tensor<T>& b, int fan_in, std::mt19937_64& rng) {
  const double wb = std::sqrt(6.0 / fan_in);
  const double bb = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : w.data) v = static_cast<T>(uniform(rng, -wb, wb));
  for (auto& v : b.data) v = static_cast<T>(uniform(rng, -bb, bb));
}

template <class T>
class Linear : public Module<T> {
 public:
  Linear(int in, int out, std::mt19937_64& rng) : in_(in), out_(out), w_("weight", {out, in}), b_("bias", {out}) {
    if (in < 1 || out < 1) throw ShapeError("linear layer needs positive sizes");
    kaiming_uniform(w_.value, b_.value, in, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    if (x.rank() != 2 || x.dim(1) != in_)
      throw ShapeError("linear: expected [batch," + std::to_string(in_) + "], got " + shape_str(x.shape));
    x_ = x;
    const int n = x.dim(0);
    Tensor<T> y({n, out_});
    MapR<T> Y(y.ptr(), n, out_);
    Y.noalias() = CMapR<T>(x.ptr(), n, in_) * CMapR<T>(w_.value.ptr(), out_, in_).transpose();
    Y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(b_.value.ptr(), out_);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    const int n = x_.dim(0);
    check_shape(g.shape, {n, out_}, "linear backward");
    CMapR<T> G(g.ptr(), n, out_);
    MapR<T>(w_.grad.ptr(), out_, in_).noalias() += G.transpose() * CMapR<T>(x_.ptr(), n, in_);
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(b_.grad.ptr(), out_) += G.colwise().sum();
    Tensor<T> dx({n, in_});
    MapR<T>(dx.ptr(), n, in_).noalias() = G * CMapR<T>(w_.value.ptr(), out_, in_);
    return dx;
  }

  void parameters(std::vector<Param<T>*>& out) override {
    out.push_back(&w_);
    out.push_back(&b_);
  }
  nlohmann::json describe() const override { return {{"type", "linear"}, {"in", in_}, {"out", out_}}; }

  Param<T>& weight() { return w_; }
  Param<T>& bias() { return b_; }

 private:
  int in_, out_;
  Param<T> w_, b_;
  Tensor<T> x_;
};

/// 3x3 convolution, stride 1, zero padding 1: spatial size is preserved.
/// Implemented as im2col + one GEMM over the whole batch.
template <class T>
class Conv2d : public Module<T> {
 public:
  Conv2d(int cin, int cout, std::mt19937_64& rng)
      : cin_(cin), cout_(cout), k_("weight", {cout, cin, 3, 3}), b_("bias", {cout}) {
    if (cin < 1 || cout < 1) throw ShapeError("conv layer needs positive channel counts");
    kaiming_uniform(k_.value, b_.value, cin * 9, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    if (x.rank() != 4 || x.dim(1) != cin_)
      throw ShapeError("conv2d: expected [batch," + std::to_string(cin_) + ",H,W], got " + shape_str(x.shape));
    n_ = x.dim(0);
    h_ = x.dim(2);
    w_ = x.dim(3);
    const int hw = h_ * w_;
    const int cols = n_ * hw;
    cols_.assign(static_cast<std::size_t>(cin_) * 9 * cols, T(0));
    for (int c = 0; c < cin_; ++c)
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          T* row = cols_.data() + static_cast<std::size_t>((c * 9 + ky * 3 + kx)) * cols;
          for (int b = 0; b < n_; ++b) {
            const T* src = x.ptr() + (static_cast<std::size_t>(b) * cin_ + c) * hw;
            T* dst = row + b * hw;
            for (int y = 0; y < h_; ++y) {
              const int sy = y + ky - 1;
              if (sy < 0 || sy >= h_) continue;
              for (int xx = 0; xx < w_; ++xx) {
                const int sx = xx + kx - 1;
                if (sx >= 0 && sx < w_) dst[y * w_ + xx] = src[sy * w_ + sx];
              }
            }
          }
        }
    MatrixR<T> out = CMapR<T>(k_.value.ptr(), cout_, cin_ * 9) * CMapR<T>(cols_.data(), cin_ * 9, cols);
    Tensor<T> y({n_, cout_, h_, w_});
    for (int b = 0; b < n_; ++b)
      for (int co = 0; co < cout_; ++co) {
        T* dst = y.ptr() + (static_cast<std::size_t>(b) * cout_ + co) * hw;
        const T* src = out.data() + static_cast<std::size_t>(co) * cols + b * hw;
        const T bias = b_.value[static_cast<std::size_t>(co)];
        for (int i = 0; i < hw; ++i) dst[i] = src[i] + bias;
      }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    check_shape(g.shape, {n_, cout_, h_, w_}, "conv2d backward");
    const int hw = h_ * w_;
    const int cols = n_ * hw;
    MatrixR<T> G(cout_, cols);
    for (int b = 0; b < n_; ++b)
      for (int co = 0; co < cout_; ++co) {
        const T* src = g.ptr() + (static_cast<std::size_t>(b) * cout_ + co) * hw;
        std::copy(src, src + hw, G.data() + static_cast<std::size_t>(co) * cols + b * hw);
      }
    CMapR<T> C(cols_.data(), cin_ * 9, cols);
    MapR<T>(k_.grad.ptr(), cout_, cin_ * 9).noalias() += G * C.transpose();
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(b_.grad.ptr(), cout_) += G.rowwise().sum();
    MatrixR<T> dcols = CMapR<T>(k_.value.ptr(), cout_, cin_ * 9).transpose() * G;

    Tensor<T> dx({n_, cin_, h_, w_});
    for (int c = 0; c < cin_; ++c)
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          const T* row = dcols.data() + static_cast<std::size_t>((c * 9 + ky * 3 + kx)) * cols;
          for (int b = 0; b < n_; ++b) {
            T* dst = dx.ptr() + (static_cast<std::size_t>(b) * cin_ + c) * hw;
            const T* src = row + b * hw;
            for (int y = 0; y < h_; ++y) {
              const int sy = y + ky - 1;
              if (sy < 0 || sy >= h_) continue;
              for (int xx = 0; xx < w_; ++xx) {
                const int sx = xx + kx - 1;
                if (sx >= 0 && sx < w_) dst[sy * w_ + sx] += src[y * w_ + xx];
              }
            }
          }
        }
    return dx;
  }

  void parameters(std::vector<Param<T>*>& out) override {
    out.push_back(&k_);
    out.push_back(&b_);
  }
  nlohmann::json describe() const override {
    return {{"type", "conv2d"}, {"in", cin_}, {"out", cout_}, {"kernel", 3}, {"padding", 1}};
  }

  Param<T>& weight() { return k_; }
  Param<T>& bias() { return b_; }

 private:
  int cin_, cout_;
  Param<T> k_, b_;
  int n_ = 0, h_ = 0, w_ = 0;
  AlignedVector<T> cols_;
};

/// Batch normalization over dim 1 of [N,C] or [N,C,H,W].
template <class T>
class BatchNorm : public Module<T> {
 public:
  static constexpr double kMomentum = 0.1;
  static constexpr double kEps = 1e-5;

  explicit BatchNorm(int channels)
      : c_(channels),
        gamma_("gamma", {channels}),
        beta_("beta", {channels}),
        running_mean_("running_mean", {channels}),
        running_var_("running_var", {channels}) {
    gamma_.value.fill(T(1));
    running_var_.value.fill(T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    if ((x.rank() != 2 && x.rank() != 4) || x.dim(1) != c_)
      throw ShapeError("batchnorm: expected [batch," + std::to_string(c_) + ",...], got " + shape_str(x.shape));
    n_ = x.dim(0);
    s_ = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
    shape_ = x.shape;
    mode_ = mode;
    const bool batch_stats = mode != Mode::Eval;
    if (batch_stats && n_ < 2) throw ShapeError("batchnorm needs a batch of at least 2 in training mode");
    xhat_ = Tensor<T>(x.shape);
    inv_std_.assign(static_cast<std::size_t>(c_), T(0));
    Tensor<T> y(x.shape);
    const double m = double(n_) * s_;
    for (int c = 0; c < c_; ++c) {
      double mean, var;
      if (batch_stats) {
        double sum = 0;
        for_each(c, [&](std::size_t i) { sum += x[i]; });
        mean = sum / m;
        double ss = 0;
        for_each(c, [&](std::size_t i) { ss += (x[i] - mean) * (x[i] - mean); });
        var = ss / m;
        if (mode == Mode::Train) {
          auto& rm = running_mean_.value[static_cast<std::size_t>(c)];
          auto& rv = running_var_.value[static_cast<std::size_t>(c)];
          rm = static_cast<T>((1 - kMomentum) * rm + kMomentum * mean);
          rv = static_cast<T>((1 - kMomentum) * rv + kMomentum * var * m / (m - 1));
        }
      } else {
        mean = running_mean_.value[static_cast<std::size_t>(c)];
        var = running_var_.value[static_cast<std::size_t>(c)];
      }
      const double inv = 1.0 / std::sqrt(var + kEps);
      inv_std_[static_cast<std::size_t>(c)] = static_cast<T>(inv);
      const T g = gamma_.value[static_cast<std::size_t>(c)], b = beta_.value[static_cast<std::size_t>(c)];
      for_each(c, [&](std::size_t i) {
        xhat_[i] = static_cast<T>((x[i] - mean) * inv);
        y[i] = g * xhat_[i] + b;
      });
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    check_shape(g.shape, shape_, "batchnorm backward");
    Tensor<T> dx(shape_);
    const double m = double(n_) * s_;
    for (int c = 0; c < c_; ++c) {
      const std::size_t cc = static_cast<std::size_t>(c);
      double sum_g = 0, sum_gx = 0;
      for_each(c, [&](std::size_t i) {
        sum_g += g[i];
        sum_gx += g[i] * xhat_[i];
      });
      gamma_.grad[cc] += static_cast<T>(sum_gx);
      beta_.grad[cc] += static_cast<T>(sum_g);
      const double gam = gamma_.value[cc], inv = inv_std_[cc];
      if (mode_ == Mode::Eval) {
        for_each(c, [&](std::size_t i) { dx[i] = static_cast<T>(g[i] * gam * inv); });
      } else {
        const double k = gam * inv / m;
        for_each(c, [&](std::size_t i) { dx[i] = static_cast<T>(k * (m * g[i] - sum_g - xhat_[i] * sum_gx)); });
      }
    }
    return dx;
  }

  void parameters(std::vector<Param<T>*>& out) override {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }
  void buffers(std::vector<Param<T>*>& out) override {
    out.push_back(&running_mean_);
    out.push_back(&running_var_);
  }
  nlohmann::json describe() const override {
    return {{"type", "batchnorm"}, {"channels", c_}, {"momentum", kMomentum}, {"eps", kEps}};
  }

  Param<T>& gamma() { return gamma_; }
  Param<T>& beta() { return beta_; }
  Param<T>& running_mean() { return running_mean_; }
  Param<T>& running_var() { return running_var_; }

 private:
  template <class F>
  void for_each(int c, F&& f) const {
    for (int b = 0; b < n_; ++b) {
      const std::size_t base = (static_cast<std::size_t>(b) * c_ + c) * s_;
      for (int s = 0; s < s_; ++s) f(base + s);
    }
  }

  int c_;
  Param<T> gamma_, beta_, running_mean_, running_var_;
  int n_ = 0, s_ = 1;
  Shape shape_;
  Mode mode_ = Mode::Eval;
  Tensor<T> xhat_;
  AlignedVector<T> inv_std_;
};

template <class T>
class ReLU : public Module<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    y_ = x;
    for (auto& v : y_.data) v = v > T(0) ? v : T(0);
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& g) override {
    check_shape(g.shape, y_.shape, "relu backward");
    Tensor<T> dx = g;
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (!(y_[i] > T(0))) dx[i] = T(0);
    return dx;
  }
  nlohmann::json describe() const override { return {{"type", "relu"}}; }

 private:
  Tensor<T> y_;
};

template <class T>
class Sigmoid : public Module<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    y_ = x;
    for (auto& v : y_.data) v = T(1) / (T(1) + std::exp(-v));
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& g) override {
    check_shape(g.shape, y_.shape, "sigmoid backward");
    Tensor<T> dx = g;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= y_[i] * (T(1) - y_[i]);
    return dx;
  }
  nlohmann::json describe() const override { return {{"type", "sigmoid"}}; }

 private:
  Tensor<T> y_;
};

/// Inverted dropout: survivors are scaled by 1/(1-p) in training, so
/// evaluation is the identity.
template <class T>
class Dropout : public Module<T> {
 public:
  Dropout(double p, std::uint64_t seed) : p_(p), rng_(seed) {
    if (!(p >= 0 && p < 1)) throw std::invalid_argument("dropout probability must be in [0,1)");
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    active_ = mode == Mode::Train && p_ > 0;
    if (!active_) return x;
    mask_.assign(x.size(), T(0));
    const T keep = static_cast<T>(1.0 / (1.0 - p_));
    Tensor<T> y = x;
    for (std::size_t i = 0; i < y.size(); ++i) {
      mask_[i] = uniform01(rng_) >= p_ ? keep : T(0);
      y[i] *= mask_[i];
    }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& g) override {
    if (!active_) return g;
    Tensor<T> dx = g;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask_[i];
    return dx;
  }
  nlohmann::json describe() const override { return {{"type", "dropout"}, {"p", p_}}; }

  double p() const { return p_; }
  void reseed(std::uint64_t seed) { rng_.seed(seed); }

 private:
  double p_;
  std::mt19937_64 rng_;
  bool active_ = false;
  AlignedVector<T> mask_;
};

/// [N,C,H,W] -> [N,C]: per-channel spatial mean.
template <class T>
class AdaptiveAvgPool : public Module<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    if (x.rank() != 4) throw ShapeError("avgpool: expected [N,C,H,W], got " + shape_str(x.shape));
    shape_ = x.shape;
    const int n = x.dim(0), c = x.dim(1), s = x.dim(2) * x.dim(3);
    if (s < 1) throw ShapeError("avgpool: empty spatial dims");
    Tensor<T> y({n, c});
    for (int i = 0; i < n * c; ++i) {
      T sum = 0;
      for (int j = 0; j < s; ++j) sum += x[static_cast<std::size_t>(i) * s + j];
      y[static_cast<std::size_t>(i)] = sum / T(s);
    }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& g) override {
    const int n = shape_[0], c = shape_[1], s = shape_[2] * shape_[3];
    check_shape(g.shape, {n, c}, "avgpool backward");
    Tensor<T> dx(shape_);
    for (int i = 0; i < n * c; ++i)
      for (int j = 0; j < s; ++j) dx[static_cast<std::size_t>(i) * s + j] = g[static_cast<std::size_t>(i)] / T(s);
    return dx;
  }
  nlohmann::json describe() const override { return {{"type", "adaptive_avg_pool"}}; }

 private:
  Shape shape_;
};

/// [N, C*H*W] -> [N,C,H,W].
template <class T>
class Unflatten : public Module<T> {
 public:
  Unflatten(int c, int h, int w) : c_(c), h_(h), w_(w) {}
  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    if (x.rank() != 2 || x.dim(1) != c_ * h_ * w_) throw ShapeError("unflatten: bad input " + shape_str(x.shape));
    return x.reshaped({x.dim(0), c_, h_, w_});
  }
  Tensor<T> backward(const Tensor<T>& g) override { return g.reshaped({g.dim(0), c_ * h_ * w_}); }
  nlohmann::json describe() const override { return {{"type", "unflatten"}, {"shape", {c_, h_, w_}}}; }

 private:
  int c_, h_, w_;
};

template <class T>
class Sequential : public Module<T> {
 public:
  template <class M, class... Args>
  M& add(Args&&... args) {
    auto m = std::make_unique<M>(std::forward<Args>(args)...);
    M& ref = *m;
    layers_.push_back(std::move(m));
    return ref;
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    Tensor<T> h = x;
    for (auto& l : layers_) h = l->forward(h, mode);
    return h;
  }
  Tensor<T> backward(const Tensor<T>& g) override {
    Tensor<T> d = g;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) d = (*it)->backward(d);
    return d;
  }
  void parameters(std::vector<Param<T>*>& out) override {
    for (auto& l : layers_) l->parameters(out);
  }
  void buffers(std::vector<Param<T>*>& out) override {
    for (auto& l : layers_) l->buffers(out);
  }
  nlohmann::json describe() const override {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : layers_) layers.push_back(l->describe());
    return {{"type", "sequential"}, {"layers", layers}};
  }

  std::size_t size() const { return layers_.size(); }
  Module<T>& at(std::size_t i) { return *layers_.at(i); }

 private:
  std::vector<std::unique_ptr<Module<T>>> layers_;
};

template <class T>
std::vector<Param<T>*> parameters_of(Module<T>& m) {
  std::vector<Param<T>*> out;
  m.parameters(out);
  return out;
}

/// Parameters followed by buffers: the order used by the model file.
template <class T>
std::vector<Param<T>*> state_of(Module<T>& m) {
  std::vector<Param<T>*> out;
  m.parameters(out);
  m.buffers(out);
  return out;
}

template <class T>
void zero_grad(const std::vector<Param<T>*>& ps) {
  for (auto* p : ps) p->grad.fill(T(0));
}

template <class T>
std::size_t count_parameters(Module<T>& m) {
  std::size_t n = 0;
  for (auto* p : parameters_of(m)) n += p->value.size();
  return n;
}

}  // namespace pawn::nn
