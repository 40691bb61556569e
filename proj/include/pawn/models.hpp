#pragma once

#include <cmath>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "pawn/chess.hpp"
#include "pawn/data/stats.hpp"
#include "pawn/encoding.hpp"
#include "pawn/nn/layers.hpp"
#include "pawn/nn/model_file.hpp"

namespace pawn {

enum class ModelKind { Mlp1, Mlp2, Mlp3, MlpCnn };

inline const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Mlp1: return "mlp1";
    case ModelKind::Mlp2: return "mlp2";
    case ModelKind::Mlp3: return "mlp3";
    case ModelKind::MlpCnn: return "mlp_cnn";
  }
  return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
  for (ModelKind k : {ModelKind::Mlp1, ModelKind::Mlp2, ModelKind::Mlp3, ModelKind::MlpCnn})
    if (s == model_kind_name(k)) return k;
  throw std::invalid_argument("unknown model kind '" + s + "' (mlp1, mlp2, mlp3, mlp_cnn)");
}

struct ModelSpec {
  ModelKind kind = ModelKind::Mlp1;
  std::optional<int> cnn_depth;  // 4, 6, 8 (mlp_cnn only)
  std::optional<int> mlp_depth;  // 3, 4, 5 (mlp_cnn only)
  int d = 512;

  bool has_encoder() const { return kind == ModelKind::MlpCnn; }
  FeatureVariant variant() const {
    return kind == ModelKind::Mlp1 || kind == ModelKind::Mlp2 ? FeatureVariant::Dim12 : FeatureVariant::Dim14;
  }
  int feature_dim() const { return pawn::feature_dim(variant()); }
  int input_dim() const { return has_encoder() ? d + 14 : feature_dim(); }

  void validate() const {
    if (has_encoder()) {
      if (!cnn_depth || !mlp_depth) throw std::invalid_argument("mlp_cnn needs cnn_depth and mlp_depth");
      if (*cnn_depth != 4 && *cnn_depth != 6 && *cnn_depth != 8)
        throw std::invalid_argument("cnn_depth must be 4, 6 or 8");
      if (*mlp_depth < 3 || *mlp_depth > 5) throw std::invalid_argument("mlp_depth must be 3, 4 or 5");
      if (d < 1) throw std::invalid_argument("representation size d must be >= 1");
    } else if (cnn_depth || mlp_depth) {
      throw std::invalid_argument(std::string(model_kind_name(kind)) + " takes no cnn_depth/mlp_depth");
    }
  }

  std::string name() const {
    std::string s = model_kind_name(kind);
    if (has_encoder())
      s += "-c" + std::to_string(*cnn_depth) + "-m" + std::to_string(*mlp_depth) + "-d" + std::to_string(d);
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", model_kind_name(kind)}, {"input_dim", input_dim()}};
    if (has_encoder()) {
      j["cnn_depth"] = *cnn_depth;
      j["mlp_depth"] = *mlp_depth;
      j["d"] = d;
    }
    return j;
  }

  static ModelSpec from_json(const nlohmann::json& j) {
    ModelSpec s;
    s.kind = parse_model_kind(j.at("kind").get<std::string>());
    if (j.contains("cnn_depth")) s.cnn_depth = j["cnn_depth"].get<int>();
    if (j.contains("mlp_depth")) s.mlp_depth = j["mlp_depth"].get<int>();
    if (j.contains("d")) s.d = j["d"].get<int>();
    s.validate();
    return s;
  }

  static ModelSpec mlp_cnn(int cnn_depth, int mlp_depth, int d = 512) {
    ModelSpec s;
    s.kind = ModelKind::MlpCnn;
    s.cnn_depth = cnn_depth;
    s.mlp_depth = mlp_depth;
    s.d = d;
    s.validate();
    return s;
  }
  static ModelSpec baseline(ModelKind k) {
    ModelSpec s;
    s.kind = k;
    s.validate();
    return s;
  }
};

/// Conv output channels of the encoder.
inline std::vector<int> encoder_channels(int depth, int d) {
  switch (depth) {
    case 4: return {32, 64, d, d};
    case 6: return {32, 64, 128, d, d, d};
    case 8: return {32, 64, 128, 256, d, d, d, d};
  }
  throw std::invalid_argument("encoder depth must be 4, 6 or 8");
}

inline std::vector<int> mlp_hidden(const ModelSpec& s) {
  switch (s.kind) {
    case ModelKind::Mlp1: return {64, 32};
    case ModelKind::Mlp2:
    case ModelKind::Mlp3: return {128, 64, 32};
    case ModelKind::MlpCnn:
      switch (*s.mlp_depth) {
        case 3: return {256, 128, 64};
        case 4: return {512, 256, 128, 64};
        case 5: return {1024, 512, 256, 128, 64};
      }
  }
  throw std::invalid_argument("bad model spec");
}

/// Per hidden layer dropout: 0.2 for the baselines; for mlp_cnn a linear ramp
/// from 0.4 at the widest layer down to 0.1 at the narrowest.
inline std::vector<double> dropout_schedule(const ModelSpec& s) {
  const auto hidden = mlp_hidden(s);
  const std::size_t n = hidden.size();
  if (!s.has_encoder()) return std::vector<double>(n, 0.2);
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = 0.4 - 0.3 * double(i) / double(n - 1);
  return p;
}

/// Conv blocks (conv, ReLU, batchnorm) then adaptive average pooling: a board
/// tensor [N,12,8,8] becomes a representation [N,d].
template <class T>
class Encoder : public nn::Sequential<T> {
 public:
  Encoder(int depth, int d, std::mt19937_64& rng) : depth_(depth), d_(d) {
    int cin = BoardTensor::kChannels;
    for (int c : encoder_channels(depth, d)) {
      this->template add<nn::Conv2d<T>>(cin, c, rng);
      this->template add<nn::ReLU<T>>();
      this->template add<nn::BatchNorm<T>>(c);
      cin = c;
    }
    this->template add<nn::AdaptiveAvgPool<T>>();
  }
  int depth() const { return depth_; }
  int d() const { return d_; }

 private:
  int depth_, d_;
};

/// Linear d -> d*64, reshape to [N,d,8,8], conv blocks over the encoder's
/// channel list in reverse, then a conv to 12 channels. forward() returns
/// logits; apply a sigmoid for cell probabilities.
template <class T>
class DecoderLogits : public nn::Sequential<T> {
 public:
  DecoderLogits(int depth, int d, std::mt19937_64& rng) {
    this->template add<nn::Linear<T>>(d, d * 64, rng);
    this->template add<nn::Unflatten<T>>(d, 8, 8);
    auto ch = encoder_channels(depth, d);
    int cin = d;
    for (int i = static_cast<int>(ch.size()) - 2; i >= 0; --i) {
      const int c = ch[static_cast<std::size_t>(i)];
      this->template add<nn::Conv2d<T>>(cin, c, rng);
      this->template add<nn::ReLU<T>>();
      this->template add<nn::BatchNorm<T>>(c);
      cin = c;
    }
    this->template add<nn::Conv2d<T>>(cin, BoardTensor::kChannels, rng);
  }
};

template <class T>
struct Autoencoder {
  int depth, d;
  std::uint64_t seed;
  Encoder<T> encoder;
  DecoderLogits<T> decoder;

  Autoencoder(int depth_, int d_, std::uint64_t seed_, std::mt19937_64 rng)
      : depth(depth_), d(d_), seed(seed_), encoder(depth_, d_, rng), decoder(depth_, d_, rng) {}
  Autoencoder(int depth_, int d_, std::uint64_t seed_) : Autoencoder(depth_, d_, seed_, std::mt19937_64(seed_)) {}

  /// Reconstruction probabilities [N,12,8,8].
  nn::Tensor<T> reconstruct(const nn::Tensor<T>& boards, nn::Mode mode) {
    nn::Tensor<T> z = decoder.forward(encoder.forward(boards, mode), mode);
    for (auto& v : z.data) v = T(1) / (T(1) + std::exp(-v));
    return z;
  }

  std::vector<nn::Param<T>*> state() {
    auto s = nn::state_of<T>(encoder);
    auto s2 = nn::state_of<T>(decoder);
    s.insert(s.end(), s2.begin(), s2.end());
    return s;
  }
  std::vector<nn::Param<T>*> parameters() {
    auto s = nn::parameters_of<T>(encoder);
    auto s2 = nn::parameters_of<T>(decoder);
    s.insert(s.end(), s2.begin(), s2.end());
    return s;
  }
};

/// Hidden blocks (linear, batchnorm, ReLU, dropout) then a linear to one output.
template <class T>
class MlpHead : public nn::Sequential<T> {
 public:
  MlpHead(int input, const std::vector<int>& hidden, const std::vector<double>& dropout, std::mt19937_64& rng,
          std::uint64_t dropout_seed) {
    int in = input;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      this->template add<nn::Linear<T>>(in, hidden[i], rng);
      this->template add<nn::BatchNorm<T>>(hidden[i]);
      this->template add<nn::ReLU<T>>();
      this->template add<nn::Dropout<T>>(dropout[i], dropout_seed + i);
      in = hidden[i];
    }
    this->template add<nn::Linear<T>>(in, 1, rng);
  }
};

/// Constant so dropout streams never coincide with the init stream.
inline constexpr std::uint64_t kDropoutSeedOffset = 0x9e3779b97f4a7c15ull;

/// A piece-value predictor: per-piece features, plus for mlp_cnn the encoder's
/// representation of the whole board, through an MLP head. Outputs are
/// z-scores; predict_value de-normalizes to centipawns.
template <class T>
class Predictor {
 public:
  Predictor(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
    spec_.validate();
    std::mt19937_64 rng(seed);
    if (spec_.has_encoder()) encoder_ = std::make_unique<Encoder<T>>(*spec_.cnn_depth, spec_.d, rng);
    head_ = std::make_unique<MlpHead<T>>(spec_.input_dim(), mlp_hidden(spec_), dropout_schedule(spec_), rng,
                                         seed ^ kDropoutSeedOffset);
  }

  const ModelSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  Encoder<T>* encoder() { return encoder_.get(); }
  MlpHead<T>& head() { return *head_; }

  Normalizer normalizer;
  nlohmann::json metadata = nlohmann::json::object();  // training provenance, metrics

  /// Head input rows: features (feature_dim wide) and, for mlp_cnn, the
  /// representation (d wide) placed first.
  nn::Tensor<T> head_input(const nn::Tensor<T>& features, const nn::Tensor<T>* reps) const {
    const int n = features.dim(0), f = spec_.feature_dim();
    nn::check_shape(features.shape, {n, f}, "predictor features");
    if (!spec_.has_encoder()) return features;
    if (!reps) throw nn::ShapeError("mlp_cnn needs board representations");
    nn::check_shape(reps->shape, {n, spec_.d}, "predictor representations");
    nn::Tensor<T> x({n, spec_.input_dim()});
    for (int i = 0; i < n; ++i) {
      T* row = x.ptr() + static_cast<std::size_t>(i) * spec_.input_dim();
      std::copy_n(reps->ptr() + static_cast<std::size_t>(i) * spec_.d, spec_.d, row);
      std::copy_n(features.ptr() + static_cast<std::size_t>(i) * f, f, row + spec_.d);
    }
    return x;
  }

  /// Full forward: boards [N,12,8,8] (ignored by baselines) and features [N,F] -> [N,1].
  nn::Tensor<T> forward(const nn::Tensor<T>& boards, const nn::Tensor<T>& features, nn::Mode mode) {
    if (!spec_.has_encoder()) return head_->forward(features, mode);
    const nn::Tensor<T> reps = encoder_->forward(boards, mode);
    return head_->forward(head_input(features, &reps), mode);
  }

  /// Backward through head and encoder; returns dL/dfeatures.
  nn::Tensor<T> backward(const nn::Tensor<T>& grad_out) {
    const nn::Tensor<T> gin = head_->backward(grad_out);
    if (!spec_.has_encoder()) return gin;
    const int n = gin.dim(0), f = spec_.feature_dim(), w = spec_.input_dim();
    nn::Tensor<T> greps({n, spec_.d}), gfeat({n, f});
    for (int i = 0; i < n; ++i) {
      const T* row = gin.ptr() + static_cast<std::size_t>(i) * w;
      std::copy_n(row, spec_.d, greps.ptr() + static_cast<std::size_t>(i) * spec_.d);
      std::copy_n(row + spec_.d, f, gfeat.ptr() + static_cast<std::size_t>(i) * f);
    }
    encoder_->backward(greps);
    return gfeat;
  }

  /// Encoder state first, then the head.
  std::vector<nn::Param<T>*> state() {
    std::vector<nn::Param<T>*> s;
    if (encoder_) s = nn::state_of<T>(*encoder_);
    auto h = nn::state_of<T>(*head_);
    s.insert(s.end(), h.begin(), h.end());
    return s;
  }

  std::size_t parameter_count() {
    std::size_t n = nn::count_parameters<T>(*head_);
    if (encoder_) n += nn::count_parameters<T>(*encoder_);
    return n;
  }

  /// Predicted value in centipawns of the piece on `sq`, White's view.
  double predict_value(const Position& p, Square sq) {
    const auto& pc = p.at(sq);
    if (!pc) throw std::invalid_argument("no piece on " + sq.algebraic());
    if (pc->kind == PieceKind::King) throw KingNotEncodable();
    return predict_values(p, {sq}).front();
  }

  /// Batched predict_value for several squares of one position. Layers cache
  /// activations, so concurrent callers are serialized.
  std::vector<double> predict_values(const Position& p, const std::vector<Square>& squares) {
    if (squares.empty()) return {};
    std::lock_guard lock(*infer_mu_);
    const int n = static_cast<int>(squares.size()), f = spec_.feature_dim();
    nn::Tensor<T> feats({n, f});
    for (int i = 0; i < n; ++i) {
      const auto& pc = p.at(squares[static_cast<std::size_t>(i)]);
      if (!pc) throw std::invalid_argument("no piece on " + squares[static_cast<std::size_t>(i)].algebraic());
      encode_piece_into(*pc, squares[static_cast<std::size_t>(i)], spec_.variant(),
                        feats.ptr() + static_cast<std::size_t>(i) * f);
    }
    nn::Tensor<T> out;
    if (spec_.has_encoder()) {
      const nn::Tensor<T> board = board_tensor<T>(p);
      const nn::Tensor<T> rep = encoder_->forward(board, nn::Mode::Eval);
      nn::Tensor<T> reps({n, spec_.d});
      for (int i = 0; i < n; ++i) std::copy_n(rep.ptr(), spec_.d, reps.ptr() + static_cast<std::size_t>(i) * spec_.d);
      out = head_->forward(head_input(feats, &reps), nn::Mode::Eval);
    } else {
      out = head_->forward(feats, nn::Mode::Eval);
    }
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = normalizer.invert(double(out[static_cast<std::size_t>(i)]));
    return v;
  }

  template <class U>
  static nn::Tensor<U> board_tensor(const Position& p) {
    const BoardTensor b = encode_board(p);
    nn::Tensor<U> t({1, 12, 8, 8});
    for (std::size_t i = 0; i < b.data.size(); ++i) t[i] = U(b.data[i]);
    return t;
  }

 private:
  ModelSpec spec_;
  std::uint64_t seed_;
  std::unique_ptr<Encoder<T>> encoder_;
  std::unique_ptr<MlpHead<T>> head_;
  std::unique_ptr<std::mutex> infer_mu_ = std::make_unique<std::mutex>();
};

template <class T>
Predictor<T> build_model(const ModelSpec& spec, std::uint64_t seed) {
  return Predictor<T>(spec, seed);
}

/// Orderings baked into every model file so parameters stay interpretable.
inline nlohmann::json encoding_header() {
  return {{"board_channels", {"WP", "WN", "WB", "WR", "WQ", "WK", "BP", "BN", "BB", "BR", "BQ", "BK"}},
          {"board_index", "channel*64 + rank*8 + file"},
          {"piece_one_hot", {"WP", "WN", "WB", "WR", "WQ", "BP", "BN", "BB", "BR", "BQ"}},
          {"location", {"file/7", "rank/7", "(file/7)^2", "(rank/7)^2"}}};
}

using TrainedModel = Predictor<float>;

inline void save_predictor(const std::string& path, TrainedModel& m) {
  nlohmann::json h{{"format", "pawn-predictor"},
                   {"version", 1},
                   {"spec", m.spec().to_json()},
                   {"seed", m.seed()},
                   {"normalizer", {{"mean", m.normalizer.mean}, {"std", m.normalizer.std}}},
                   {"encoding", encoding_header()},
                   {"decoder_mirror", "encoder channel list reversed"},
                   {"metadata", m.metadata}};
  if (m.encoder()) h["encoder_layers"] = m.encoder()->describe();
  h["head_layers"] = m.head().describe();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw nn::ModelFileError("cannot write " + path);
  nn::write_model<float>(out, h, m.state());
}

inline std::unique_ptr<TrainedModel> load_predictor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw nn::ModelFileError("cannot read " + path);
  const nn::ModelBlob blob = nn::read_model(in);
  try {
    const auto& h = blob.header;
    if (h.at("format") != "pawn-predictor") throw nn::ModelFileError(path + " is not a predictor model");
    auto m = std::make_unique<TrainedModel>(ModelSpec::from_json(h.at("spec")), h.at("seed").get<std::uint64_t>());
    m->normalizer = {h.at("normalizer").at("mean").get<double>(), h.at("normalizer").at("std").get<double>()};
    if (h.contains("metadata")) m->metadata = h["metadata"];
    nn::load_state(blob, m->state());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw nn::ModelFileError(path + ": bad header: " + e.what());
  }
}

inline void save_autoencoder(const std::string& path, Autoencoder<float>& ae, const nlohmann::json& metadata = {}) {
  nlohmann::json h{{"format", "pawn-autoencoder"}, {"version", 1},       {"depth", ae.depth},
                   {"d", ae.d},                    {"seed", ae.seed},    {"encoding", encoding_header()},
                   {"encoder_layers", ae.encoder.describe()},          {"decoder_layers", ae.decoder.describe()},
                   {"metadata", metadata}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw nn::ModelFileError("cannot write " + path);
  nn::write_model<float>(out, h, ae.state());
}

inline std::unique_ptr<Autoencoder<float>> load_autoencoder(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw nn::ModelFileError("cannot read " + path);
  const nn::ModelBlob blob = nn::read_model(in);
  try {
    const auto& h = blob.header;
    if (h.at("format") != "pawn-autoencoder") throw nn::ModelFileError(path + " is not an autoencoder");
    auto ae = std::make_unique<Autoencoder<float>>(h.at("depth").get<int>(), h.at("d").get<int>(),
                                                   h.at("seed").get<std::uint64_t>());
    nn::load_state(blob, ae->state());
    return ae;
  } catch (const nlohmann::json::exception& e) {
    throw nn::ModelFileError(path + ": bad header: " + e.what());
  }
}

/// Copies trained encoder weights (and running stats) into a predictor.
template <class T>
void install_encoder(Predictor<T>& p, Encoder<T>& trained) {
  if (!p.encoder()) throw std::invalid_argument("model has no encoder");
  if (p.encoder()->depth() != trained.depth() || p.encoder()->d() != trained.d())
    throw std::invalid_argument("encoder shape does not match the model spec");
  auto dst = nn::state_of<T>(*p.encoder());
  auto src = nn::state_of<T>(trained);
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i]->value = src[i]->value;
}

}  // namespace pawn
