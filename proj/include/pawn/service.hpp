#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "pawn/chess.hpp"
#include "pawn/data/labeling.hpp"
#include "pawn/engine/engine.hpp"
#include "pawn/models.hpp"

namespace pawn {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kDefaultPort = 8650;

/// An error with the HTTP status it maps to.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string kind, const std::string& msg)
      : std::runtime_error(msg), status_(status), kind_(std::move(kind)) {}
  int status() const { return status_; }
  const std::string& kind() const { return kind_; }

 private:
  int status_;
  std::string kind_;
};

struct ServiceOptions {
  std::optional<EngineConfig> engine;  // engine mode is unavailable without one
  std::size_t engine_pool_size = 1;
  std::chrono::milliseconds request_timeout{600000};  // wait for a free engine slot
  std::string models_dir;                             // *.pawn files here are loaded on demand
  bool debug = false;                                 // always include engine internals
};

struct LoadedModel {
  std::string id;
  std::string path;
  std::filesystem::file_time_type mtime{};
  std::shared_ptr<TrainedModel> model;

  nlohmann::json summary() const {
    nlohmann::json j{{"id", id}, {"path", path}, {"spec", model->spec().to_json()}, {"name", model->spec().name()}};
    j["normalizer"] = {{"mean", model->normalizer.mean}, {"std", model->normalizer.std}};
    const auto& md = model->metadata;
    for (const char* k : {"dataset_hash", "train_mae_cp", "val_mae_cp"})
      j[k] = md.contains(k) ? md[k] : nlohmann::json(nullptr);
    return j;
  }
};

/// Request handling behind the HTTP routes: model-mode prediction,
/// engine-mode ablation labeling, single evaluations, health and model
/// listing. Safe to call from many threads.
class PredictionService {
 public:
  explicit PredictionService(ServiceOptions opt = {})
      : opt_(std::move(opt)), gate_(static_cast<std::ptrdiff_t>(std::min<std::size_t>(opt_.engine_pool_size, kMaxGate))) {
    if (opt_.engine) {
      opt_.engine->validate();
      pool_ = std::make_unique<EnginePool>(*opt_.engine, opt_.engine_pool_size);
    }
    if (!opt_.models_dir.empty()) refresh();
  }

  bool engine_available() const { return pool_ != nullptr; }

  void add_model(const std::string& id, std::shared_ptr<TrainedModel> m, const std::string& path = {}) {
    std::unique_lock lock(mu_);
    models_[id] = LoadedModel{id, path, {}, std::move(m)};
  }

  /// Loads a model file; its id is the file name without extension.
  std::string load_model_file(const std::string& path) {
    const std::filesystem::path p(path);
    std::shared_ptr<TrainedModel> m = load_predictor(path);
    const std::string id = p.stem().string();
    std::error_code ec;
    const auto mtime = std::filesystem::last_write_time(p, ec);
    std::unique_lock lock(mu_);
    models_[id] = LoadedModel{id, path, mtime, std::move(m)};
    return id;
  }

  /// Picks up new or rewritten *.pawn files in the models directory.
  void refresh() {
    if (opt_.models_dir.empty()) return;
    std::error_code ec;
    std::vector<std::filesystem::path> candidates;
    for (const auto& e : std::filesystem::directory_iterator(opt_.models_dir, ec))
      if (e.is_regular_file() && e.path().extension() == ".pawn") candidates.push_back(e.path());
    std::sort(candidates.begin(), candidates.end());
    for (const auto& p : candidates) {
      const auto mtime = std::filesystem::last_write_time(p, ec);
      {
        std::shared_lock lock(mu_);
        auto it = models_.find(p.stem().string());
        if (it != models_.end() && it->second.path == p.string() && it->second.mtime == mtime) continue;
      }
      try {
        load_model_file(p.string());
        std::unique_lock lock(mu_);
        load_errors_.erase(p.string());
      } catch (const std::exception& e) {
        std::unique_lock lock(mu_);
        load_errors_[p.string()] = e.what();
      }
    }
  }

  nlohmann::json health() const {
    std::shared_lock lock(mu_);
    nlohmann::json j{{"status", "ok"}, {"version", kVersion}, {"engine", engine_available()}, {"models", models_.size()}};
    if (pool_) {
      j["engine_name"] = pool_->engine_name();
      j["engine_depth"] = pool_->config().depth;
    }
    return j;
  }

  nlohmann::json models() {
    refresh();
    std::shared_lock lock(mu_);
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [id, m] : models_) list.push_back(m.summary());
    nlohmann::json j{{"models", list}};
    if (!load_errors_.empty()) j["load_errors"] = load_errors_;
    return j;
  }

  nlohmann::json predict(const nlohmann::json& req) {
    if (!req.is_object()) throw ServiceError(400, "bad_request", "request body must be a JSON object");
    const Position p = parse_request_fen(req);
    const std::string mode = req.value("mode", "model");
    const bool debug = opt_.debug || req.value("debug", false);
    if (mode == "model") return predict_model(p, req);
    if (mode == "engine") return predict_engine(p, req, debug);
    throw ServiceError(400, "bad_request", "mode must be \"model\" or \"engine\"");
  }

  /// One engine evaluation of the position.
  nlohmann::json evaluate_fen(const nlohmann::json& req) {
    if (!req.is_object()) throw ServiceError(400, "bad_request", "request body must be a JSON object");
    const Position p = parse_request_fen(req);
    const EngineConfig cfg = engine_config(req);
    EngineSlot slot(*this);
    try {
      auto lease = pool_->acquire();
      const EvalCp e = evaluate(*lease, p, cfg);
      nlohmann::json j{{"fen", to_fen(p)},
                       {"eval_cp", e.value},
                       {"was_mate", e.was_mate},
                       {"depth", e.depth},
                       {"reduced_depth", e.reduced_depth},
                       {"engine", pool_->engine_name()}};
      j["mate_distance"] = e.mate_distance ? nlohmann::json(*e.mate_distance) : nlohmann::json(nullptr);
      return j;
    } catch (const EngineError& e) {
      throw ServiceError(503, "engine_unavailable", e.what());
    }
  }

 private:
  static constexpr std::ptrdiff_t kMaxGate = 1024;

  // Admits at most pool-size engine requests at once; others queue for up to
  // the request timeout.
  class EngineSlot {
   public:
    explicit EngineSlot(PredictionService& s) : s_(s) {
      if (!s.pool_) throw ServiceError(503, "engine_unavailable", "no engine configured");
      if (!s.gate_.try_acquire_for(s.opt_.request_timeout))
        throw ServiceError(503, "engine_busy", "timed out waiting for a free engine");
    }
    ~EngineSlot() { s_.gate_.release(); }
    EngineSlot(const EngineSlot&) = delete;
    EngineSlot& operator=(const EngineSlot&) = delete;

   private:
    PredictionService& s_;
  };

  static Position parse_request_fen(const nlohmann::json& req) {
    if (!req.contains("fen") || !req["fen"].is_string())
      throw ServiceError(400, "invalid_fen", "missing \"fen\" string");
    Position p;
    try {
      p = parse_fen(req["fen"].get<std::string>());
    } catch (const ChessError& e) {
      throw ServiceError(400, "invalid_fen", e.what());
    }
    if (opponent_in_check(p)) throw ServiceError(400, "invalid_fen", "side not to move is in check");
    return p;
  }

  EngineConfig engine_config(const nlohmann::json& req) const {
    if (!pool_) throw ServiceError(503, "engine_unavailable", "no engine configured");
    EngineConfig cfg = pool_->config();
    if (req.contains("depth") && !req["depth"].is_null()) {
      if (!req["depth"].is_number_integer()) throw ServiceError(400, "bad_request", "depth must be an integer");
      const int d = req["depth"].get<int>();
      if (d < 1 || d > 99) throw ServiceError(400, "bad_request", "depth must be in [1, 99]");
      cfg.depth = d;
    }
    return cfg;
  }

  std::shared_ptr<TrainedModel> find_model(const nlohmann::json& req, std::string& id) {
    if (req.contains("model_id") && !req["model_id"].is_null()) {
      if (!req["model_id"].is_string()) throw ServiceError(400, "bad_request", "model_id must be a string");
      id = req["model_id"].get<std::string>();
    }
    auto lookup = [&]() -> std::shared_ptr<TrainedModel> {
      std::shared_lock lock(mu_);
      if (id.empty()) {
        if (models_.empty()) return nullptr;
        id = models_.begin()->first;
        return models_.begin()->second.model;
      }
      auto it = models_.find(id);
      return it == models_.end() ? nullptr : it->second.model;
    };
    auto m = lookup();
    if (!m) {
      refresh();
      m = lookup();
    }
    if (!m) {
      if (id.empty()) throw ServiceError(404, "unknown_model", "no models loaded");
      throw ServiceError(404, "unknown_model", "unknown model '" + id + "'");
    }
    return m;
  }

  static nlohmann::json entry(Square sq, Piece pc) {
    return {{"square", sq.algebraic()}, {"piece", std::string(1, pc.fen_char())}};
  }

  nlohmann::json predict_model(const Position& p, const nlohmann::json& req) {
    std::string id;
    auto m = find_model(req, id);
    std::vector<Square> eligible;
    std::vector<nlohmann::json> values;
    std::vector<std::size_t> slot;
    for (int i = 0; i < 64; ++i) {
      const auto& pc = p.board[static_cast<std::size_t>(i)];
      if (!pc || pc->kind == PieceKind::King) continue;
      const Square sq = Square::from_index(i);
      nlohmann::json e = entry(sq, *pc);
      if (std::holds_alternative<IllegalRemoval>(remove_piece(p, sq))) {
        e["skipped"] = skip_reason_name(SkipReason::IllegalRemoval);
      } else {
        eligible.push_back(sq);
        slot.push_back(values.size());
      }
      values.push_back(std::move(e));
    }
    const auto pred = m->predict_values(p, eligible);
    for (std::size_t k = 0; k < pred.size(); ++k) values[slot[k]]["value_cp"] = std::lround(pred[k]);
    return {{"fen", to_fen(p)}, {"values", values}, {"provenance", {{"mode", "model"}, {"model_id", id}}}};
  }

  nlohmann::json predict_engine(const Position& p, const nlohmann::json& req, bool debug) {
    const EngineConfig cfg = engine_config(req);
    EngineSlot slot(*this);
    LabeledPosition lp;
    try {
      lp = label_position(*pool_, p, cfg);
    } catch (const EngineError& e) {
      throw ServiceError(503, "engine_unavailable", e.what());
    }
    std::map<int, nlohmann::json> by_square;
    for (const auto& r : lp.records) {
      nlohmann::json e = entry(r.square, r.piece);
      e["value_cp"] = r.value_cp;
      if (r.mate_involved()) e["mate_involved"] = true;
      if (r.reduced_depth()) e["reduced_depth"] = true;
      if (debug) {
        e["eval_base_cp"] = r.eval_base_cp;
        e["eval_ablated_cp"] = r.eval_ablated_cp;
      }
      by_square[r.square.index()] = std::move(e);
    }
    for (const auto& s : lp.skipped) {
      nlohmann::json e = entry(s.square, s.piece);
      e["skipped"] = skip_reason_name(s.reason);
      by_square[s.square.index()] = std::move(e);
    }
    nlohmann::json values = nlohmann::json::array();
    for (auto& [_, e] : by_square) values.push_back(std::move(e));
    nlohmann::json prov{{"mode", "engine"}, {"engine", pool_->engine_name()}, {"depth", cfg.depth}};
    nlohmann::json out{{"fen", to_fen(p)}, {"values", values}, {"provenance", prov}};
    if (debug) out["eval_base_cp"] = lp.base ? nlohmann::json(lp.base->value) : nlohmann::json(nullptr);
    return out;
  }

  ServiceOptions opt_;
  std::unique_ptr<EnginePool> pool_;
  std::counting_semaphore<kMaxGate> gate_;
  mutable std::shared_mutex mu_;
  std::map<std::string, LoadedModel> models_;
  std::map<std::string, std::string> load_errors_;
};

}  // namespace pawn
