#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "pawn/data/record.hpp"
#include "pawn/data/split.hpp"
#include "pawn/data/stats.hpp"
#include "pawn/encoding.hpp"
#include "pawn/models.hpp"
#include "pawn/nn/adamw.hpp"
#include "pawn/nn/loss.hpp"

namespace pawn {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 64;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  std::uint64_t seed = 1;
  bool shuffle = true;
  double huber_delta = 1.0;
  std::string checkpoint_path;     // predictor: best-val model written here
  bool fine_tune_encoder = false;  // predictor: update encoder weights too
  double stop_at_accuracy = 0;     // autoencoder: stop once cell accuracy exceeds this (0 = off)

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 2) throw std::invalid_argument("batch size must be >= 2 (batchnorm)");
    if (!(huber_delta > 0)) throw std::invalid_argument("huber delta must be > 0");
    optimizer().validate();
  }
  nn::AdamWConfig optimizer() const {
    nn::AdamWConfig c;
    c.lr = lr;
    c.weight_decay = weight_decay;
    return c;
  }
  nlohmann::json to_json() const {
    return {{"epochs", epochs},
            {"batch_size", batch_size},
            {"seed", seed},
            {"shuffle", shuffle},
            {"huber_delta", huber_delta},
            {"fine_tune_encoder", fine_tune_encoder},
            {"stop_at_accuracy", stop_at_accuracy},
            {"optimizer", optimizer().to_json()}};
  }
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean absolute error in centipawns.
inline double mae(const std::vector<double>& pred, const std::vector<double>& target) {
  if (pred.size() != target.size())
    throw std::invalid_argument("mae: " + std::to_string(pred.size()) + " predictions for " +
                                std::to_string(target.size()) + " targets");
  if (pred.empty()) throw std::invalid_argument("mae of an empty set");
  double s = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
  return s / double(pred.size());
}

// ------------------------------------------------------------------ batches

/// Epoch order: identity, or a Fisher-Yates shuffle from `rng`. Batches are
/// consecutive slices; a trailing batch of one is dropped (batchnorm).
inline std::vector<std::vector<std::size_t>> make_batches(std::size_t n, int batch_size, bool shuffle,
                                                          std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (shuffle)
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  std::vector<std::vector<std::size_t>> out;
  const auto b = static_cast<std::size_t>(batch_size);
  for (std::size_t s = 0; s < n; s += b) {
    const std::size_t e = std::min(n, s + b);
    if (e - s < 2) break;
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s), order.begin() + static_cast<std::ptrdiff_t>(e));
  }
  return out;
}

template <class T>
nn::Tensor<T> stack_boards(const std::vector<BoardTensor>& boards, const std::vector<std::size_t>& idx) {
  nn::Tensor<T> t({static_cast<int>(idx.size()), 12, 8, 8});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& b = boards[idx[i]].data;
    std::transform(b.begin(), b.end(), t.data.begin() + static_cast<std::ptrdiff_t>(i * BoardTensor::kSize),
                   [](std::uint8_t v) { return T(v); });
  }
  return t;
}

/// Distinct boards of a record set, in first-seen order.
inline std::vector<BoardTensor> distinct_boards(const std::vector<PieceValueRecord>& records) {
  std::vector<BoardTensor> out;
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& r : records) {
    const std::string key = position_key(r.fen);
    if (seen.emplace(key, out.size()).second) out.push_back(encode_board(parse_fen(r.fen)));
  }
  return out;
}

/// Autoencoder training input: boards of training-split games only.
inline std::vector<BoardTensor> training_boards(const std::vector<PieceValueRecord>& records,
                                                const SplitManifest& m) {
  std::vector<PieceValueRecord> train;
  for (const auto& r : records)
    if (m.is_train(r.game_id)) train.push_back(r);
  return distinct_boards(train);
}

// -------------------------------------------------------------- autoencoder

struct AutoencoderEpoch {
  int epoch = 0;
  double loss = 0;           // mean BCE over the epoch's batches
  double cell_accuracy = 0;  // thresholded at 0.5, eval mode
  double square_accuracy = 0;
  double seconds = 0;

  nlohmann::json to_json() const {
    return {{"kind", "autoencoder"}, {"epoch", epoch},   {"loss", loss}, {"cell_accuracy", cell_accuracy},
            {"square_accuracy", square_accuracy},        {"seconds", seconds}};
  }
};

struct ReconstructionAccuracy {
  double cells = 0;    // fraction of the 768 board entries matching after thresholding
  double squares = 0;  // fraction of squares whose argmax decode is right
};

template <class T>
ReconstructionAccuracy reconstruction_accuracy(Autoencoder<T>& ae, const std::vector<BoardTensor>& boards,
                                               int batch = 64) {
  std::size_t cells_ok = 0, squares_ok = 0;
  for (std::size_t s = 0; s < boards.size(); s += static_cast<std::size_t>(batch)) {
    std::vector<std::size_t> idx;
    for (std::size_t i = s; i < std::min(boards.size(), s + static_cast<std::size_t>(batch)); ++i) idx.push_back(i);
    const nn::Tensor<T> r = ae.reconstruct(stack_boards<T>(boards, idx), nn::Mode::Eval);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const T* probs = r.ptr() + i * BoardTensor::kSize;
      const auto& truth = boards[idx[i]];
      for (int k = 0; k < BoardTensor::kSize; ++k) cells_ok += (probs[k] > T(0.5)) == (truth.data[static_cast<std::size_t>(k)] != 0);
      const auto decoded = decode_board(probs);
      for (int sq = 0; sq < 64; ++sq) {
        std::optional<Piece> want;
        for (int c = 0; c < BoardTensor::kChannels; ++c)
          if (truth.data[static_cast<std::size_t>(c * 64 + sq)]) want = Piece::from_index(c);
        squares_ok += decoded[static_cast<std::size_t>(sq)] == want;
      }
    }
  }
  return {double(cells_ok) / double(boards.size() * BoardTensor::kSize), double(squares_ok) / double(boards.size() * 64)};
}

struct AutoencoderResult {
  std::vector<AutoencoderEpoch> curve;
  bool stopped_early = false;
};

/// Minimizes BCE between reconstructions and boards with AdamW.
template <class T>
AutoencoderResult train_autoencoder(Autoencoder<T>& ae, const std::vector<BoardTensor>& boards, const TrainConfig& cfg,
                                    const std::function<void(const AutoencoderEpoch&)>& on_epoch = {}) {
  cfg.validate();
  if (boards.empty()) throw std::invalid_argument("autoencoder needs at least one training board");
  auto params = ae.parameters();
  nn::AdamW<T> opt(params, cfg.optimizer());
  std::mt19937_64 rng(cfg.seed);
  AutoencoderResult res;
  // A single board still gets a batch of two so batchnorm has statistics.
  const std::vector<BoardTensor> padded = boards.size() == 1 ? std::vector<BoardTensor>{boards[0], boards[0]} : boards;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double loss_sum = 0;
    std::size_t batches = 0;
    for (const auto& idx : make_batches(padded.size(), cfg.batch_size, cfg.shuffle, rng)) {
      const nn::Tensor<T> x = stack_boards<T>(padded, idx);
      opt.zero_grad();
      const nn::Tensor<T> logits = ae.decoder.forward(ae.encoder.forward(x, nn::Mode::Train), nn::Mode::Train);
      const auto l = nn::bce_with_logits(logits, x);
      if (!std::isfinite(double(l.loss)))
        throw TrainingDiverged("autoencoder loss is not finite at epoch " + std::to_string(epoch) + ", batch " +
                               std::to_string(batches + 1) + " (lr " + std::to_string(cfg.lr) + ")");
      ae.encoder.backward(ae.decoder.backward(l.grad));
      opt.step();
      loss_sum += double(l.loss);
      ++batches;
    }
    AutoencoderEpoch e;
    e.epoch = epoch;
    e.loss = loss_sum / double(batches);
    const auto acc = reconstruction_accuracy(ae, boards);
    e.cell_accuracy = acc.cells;
    e.square_accuracy = acc.squares;
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.curve.push_back(e);
    if (on_epoch) on_epoch(e);
    if (cfg.stop_at_accuracy > 0 && e.cell_accuracy > cfg.stop_at_accuracy) {
      res.stopped_early = epoch < cfg.epochs;
      break;
    }
  }
  return res;
}

// ---------------------------------------------------------------- predictor

/// Records encoded for one model: features, z-scored targets, and the index
/// of each record's board.
template <class T>
struct EncodedRecords {
  nn::Tensor<T> features;  // [N, F]
  std::vector<double> target_cp;
  std::vector<double> target_z;
  std::vector<PieceKind> kind;
  std::vector<std::size_t> board_of;
  std::vector<BoardTensor> boards;

  std::size_t size() const { return target_cp.size(); }
};

template <class T>
EncodedRecords<T> encode_records(const std::vector<PieceValueRecord>& records, FeatureVariant variant,
                                 const Normalizer& norm) {
  EncodedRecords<T> out;
  const int f = feature_dim(variant);
  out.features = nn::Tensor<T>({static_cast<int>(records.size()), f});
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    encode_piece_into(r.piece, r.square, variant, out.features.ptr() + i * static_cast<std::size_t>(f));
    out.target_cp.push_back(double(r.value_cp));
    out.target_z.push_back(norm.apply(double(r.value_cp)));
    out.kind.push_back(r.piece.kind);
    const auto [it, fresh] = seen.emplace(position_key(r.fen), out.boards.size());
    if (fresh) out.boards.push_back(encode_board(parse_fen(r.fen)));
    out.board_of.push_back(it->second);
  }
  return out;
}

template <class T>
nn::Tensor<T> gather_rows(const nn::Tensor<T>& m, const std::vector<std::size_t>& idx) {
  const auto w = static_cast<std::size_t>(m.dim(1));
  nn::Tensor<T> out({static_cast<int>(idx.size()), m.dim(1)});
  for (std::size_t i = 0; i < idx.size(); ++i) std::copy_n(m.ptr() + idx[i] * w, w, out.ptr() + i * w);
  return out;
}

/// Eval-mode encoder output for every board: [boards, d].
template <class T>
nn::Tensor<T> representations(Encoder<T>& enc, const std::vector<BoardTensor>& boards, int batch = 128) {
  nn::Tensor<T> out({static_cast<int>(boards.size()), enc.d()});
  for (std::size_t s = 0; s < boards.size(); s += static_cast<std::size_t>(batch)) {
    std::vector<std::size_t> idx;
    for (std::size_t i = s; i < std::min(boards.size(), s + static_cast<std::size_t>(batch)); ++i) idx.push_back(i);
    const nn::Tensor<T> r = enc.forward(stack_boards<T>(boards, idx), nn::Mode::Eval);
    std::copy(r.data.begin(), r.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(s * static_cast<std::size_t>(enc.d())));
  }
  return out;
}

/// Eval-mode predictions in centipawns for every record.
template <class T>
std::vector<double> predict_records(Predictor<T>& m, const EncodedRecords<T>& data, int batch = 512) {
  std::optional<nn::Tensor<T>> reps;
  if (m.encoder()) reps = representations(*m.encoder(), data.boards);
  std::vector<double> out;
  out.reserve(data.size());
  for (std::size_t s = 0; s < data.size(); s += static_cast<std::size_t>(batch)) {
    std::vector<std::size_t> idx;
    for (std::size_t i = s; i < std::min(data.size(), s + static_cast<std::size_t>(batch)); ++i) idx.push_back(i);
    const nn::Tensor<T> feats = gather_rows(data.features, idx);
    nn::Tensor<T> y;
    if (reps) {
      std::vector<std::size_t> bidx;
      for (std::size_t i : idx) bidx.push_back(data.board_of[i]);
      const nn::Tensor<T> r = gather_rows(*reps, bidx);
      y = m.head().forward(m.head_input(feats, &r), nn::Mode::Eval);
    } else {
      y = m.head().forward(feats, nn::Mode::Eval);
    }
    for (std::size_t i = 0; i < idx.size(); ++i) out.push_back(m.normalizer.invert(double(y[i])));
  }
  return out;
}

struct PredictorEpoch {
  int epoch = 0;
  double loss = 0;  // mean Huber over the epoch's batches, normalized units
  double train_mae_cp = 0;
  std::optional<double> val_mae_cp;
  double seconds = 0;

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", "predictor"}, {"epoch", epoch}, {"loss", loss}, {"train_mae_cp", train_mae_cp},
                     {"seconds", seconds}};
    if (val_mae_cp) j["val_mae_cp"] = *val_mae_cp;
    return j;
  }
};

struct PredictorResult {
  std::vector<PredictorEpoch> curve;
  int best_epoch = 0;  // epoch whose weights the model holds on return
};

/// Mini-batch AdamW on Huber loss over z-scored targets. The model's
/// normalizer must already be fitted on the training split. With validation
/// records the weights of the best validation epoch are kept; otherwise the
/// last epoch's. The encoder is frozen unless cfg.fine_tune_encoder.
template <class T>
PredictorResult train_predictor(Predictor<T>& m, const std::vector<PieceValueRecord>& train,
                                const std::vector<PieceValueRecord>& val, const TrainConfig& cfg,
                                const std::function<void(const PredictorEpoch&)>& on_epoch = {}) {
  cfg.validate();
  if (train.size() < 2) throw std::invalid_argument("predictor training needs at least two records");
  const auto tr = encode_records<T>(train, m.spec().variant(), m.normalizer);
  std::optional<EncodedRecords<T>> va;
  if (!val.empty()) va = encode_records<T>(val, m.spec().variant(), m.normalizer);

  const bool joint = cfg.fine_tune_encoder && m.encoder();
  auto params = nn::parameters_of<T>(m.head());
  if (joint) {
    auto ep = nn::parameters_of<T>(*m.encoder());
    params.insert(params.end(), ep.begin(), ep.end());
  }
  nn::AdamW<T> opt(params, cfg.optimizer());

  std::optional<nn::Tensor<T>> frozen_reps;
  if (m.encoder() && !joint) frozen_reps = representations(*m.encoder(), tr.boards);

  nn::Tensor<T> targets_all({static_cast<int>(tr.size()), 1});
  for (std::size_t i = 0; i < tr.size(); ++i) targets_all[i] = T(tr.target_z[i]);

  std::mt19937_64 rng(cfg.seed);
  PredictorResult res;
  std::optional<double> best_val;
  std::vector<nn::Tensor<T>> best_state;
  auto state = m.state();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double loss_sum = 0;
    std::size_t batches = 0;
    for (const auto& idx : make_batches(tr.size(), cfg.batch_size, cfg.shuffle, rng)) {
      const nn::Tensor<T> feats = gather_rows(tr.features, idx);
      const nn::Tensor<T> target = gather_rows(targets_all, idx);
      opt.zero_grad();
      nn::Tensor<T> y;
      if (joint) {
        std::vector<std::size_t> bidx;
        for (std::size_t i : idx) bidx.push_back(tr.board_of[i]);
        y = m.forward(stack_boards<T>(tr.boards, bidx), feats, nn::Mode::Train);
      } else if (frozen_reps) {
        std::vector<std::size_t> bidx;
        for (std::size_t i : idx) bidx.push_back(tr.board_of[i]);
        const nn::Tensor<T> r = gather_rows(*frozen_reps, bidx);
        y = m.head().forward(m.head_input(feats, &r), nn::Mode::Train);
      } else {
        y = m.head().forward(feats, nn::Mode::Train);
      }
      const auto l = nn::huber_loss(y, target, cfg.huber_delta);
      if (!std::isfinite(double(l.loss)))
        throw TrainingDiverged("predictor loss is not finite at epoch " + std::to_string(epoch) + ", batch " +
                               std::to_string(batches + 1) + " (lr " + std::to_string(cfg.lr) + ")");
      if (joint)
        m.backward(l.grad);
      else
        m.head().backward(l.grad);
      opt.step();
      loss_sum += double(l.loss);
      ++batches;
    }
    PredictorEpoch e;
    e.epoch = epoch;
    e.loss = loss_sum / double(std::max<std::size_t>(batches, 1));
    e.train_mae_cp = mae(predict_records(m, tr), tr.target_cp);
    if (va) e.val_mae_cp = mae(predict_records(m, *va), va->target_cp);
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.curve.push_back(e);
    if (on_epoch) on_epoch(e);

    if (e.val_mae_cp && (!best_val || *e.val_mae_cp < *best_val)) {
      best_val = e.val_mae_cp;
      res.best_epoch = epoch;
      best_state.clear();
      for (auto* p : state) best_state.push_back(p->value);
      if constexpr (std::is_same_v<T, float>) {
        if (!cfg.checkpoint_path.empty()) {
          m.metadata["checkpoint_epoch"] = epoch;
          save_predictor(cfg.checkpoint_path, m);
        }
      }
    }
  }
  if (best_state.empty()) {
    res.best_epoch = cfg.epochs;
  } else {
    for (std::size_t i = 0; i < state.size(); ++i) state[i]->value = best_state[i];
  }
  return res;
}

// --------------------------------------------------------------- evaluation

struct KindMae {
  std::optional<double> train_mae_cp, val_mae_cp;
  std::size_t train_count = 0, val_count = 0;
};

struct EvalReport {
  double train_mae_cp = 0;
  double val_mae_cp = 0;
  double gap = 0;  // val - train; positive means overfitting
  std::size_t train_count = 0, val_count = 0;
  std::map<PieceKind, KindMae> per_kind;

  nlohmann::json to_json() const {
    nlohmann::json kinds = nlohmann::json::object();
    for (const auto& [k, v] : per_kind) {
      nlohmann::json e{{"train_count", v.train_count}, {"val_count", v.val_count}};
      e["train_mae_cp"] = v.train_mae_cp ? nlohmann::json(*v.train_mae_cp) : nlohmann::json(nullptr);
      e["val_mae_cp"] = v.val_mae_cp ? nlohmann::json(*v.val_mae_cp) : nlohmann::json(nullptr);
      kinds[std::string(1, Piece{Color::White, k}.fen_char())] = e;
    }
    return {{"train_mae_cp", train_mae_cp}, {"val_mae_cp", val_mae_cp}, {"gap", gap},
            {"train_count", train_count},   {"val_count", val_count},   {"per_kind", kinds}};
  }

  std::string to_text() const {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << std::left << std::setw(8) << "piece" << std::right << std::setw(12) << "train MAE" << std::setw(12)
       << "val MAE" << std::setw(10) << "n train" << std::setw(10) << "n val" << '\n';
    auto cell = [&](const std::optional<double>& v) {
      if (v)
        os << std::setw(12) << *v;
      else
        os << std::setw(12) << "-";
    };
    for (const auto& [k, v] : per_kind) {
      os << std::left << std::setw(8) << Piece{Color::White, k}.fen_char() << std::right;
      cell(v.train_mae_cp);
      cell(v.val_mae_cp);
      os << std::setw(10) << v.train_count << std::setw(10) << v.val_count << '\n';
    }
    os << std::left << std::setw(8) << "all" << std::right << std::setw(12) << train_mae_cp << std::setw(12)
       << val_mae_cp << std::setw(10) << train_count << std::setw(10) << val_count << '\n';
    os << "gap (val - train): " << std::showpos << gap << std::noshowpos << " cp\n";
    return os.str();
  }
};

/// MAE of `m` on both splits, overall and per piece kind.
template <class T>
EvalReport evaluate(Predictor<T>& m, const std::vector<PieceValueRecord>& train,
                    const std::vector<PieceValueRecord>& val) {
  if (train.empty()) throw std::invalid_argument("evaluate: empty training split");
  if (val.empty()) throw std::invalid_argument("evaluate: empty validation split");
  EvalReport rep;
  auto run = [&](const std::vector<PieceValueRecord>& recs, bool is_train) {
    const auto enc = encode_records<T>(recs, m.spec().variant(), m.normalizer);
    const auto pred = predict_records(m, enc);
    std::map<PieceKind, std::pair<std::vector<double>, std::vector<double>>> by;
    for (std::size_t i = 0; i < enc.size(); ++i) {
      by[enc.kind[i]].first.push_back(pred[i]);
      by[enc.kind[i]].second.push_back(enc.target_cp[i]);
    }
    for (const auto& [k, pt] : by) {
      auto& km = rep.per_kind[k];
      (is_train ? km.train_mae_cp : km.val_mae_cp) = mae(pt.first, pt.second);
      (is_train ? km.train_count : km.val_count) = pt.first.size();
    }
    return mae(pred, enc.target_cp);
  };
  rep.train_mae_cp = run(train, true);
  rep.val_mae_cp = run(val, false);
  rep.train_count = train.size();
  rep.val_count = val.size();
  rep.gap = rep.val_mae_cp - rep.train_mae_cp;
  return rep;
}

}  // namespace pawn
