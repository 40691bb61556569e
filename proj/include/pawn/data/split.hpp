#pragma once

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "pawn/chess/position.hpp"
#include "pawn/data/record.hpp"
#include "pawn/data/stats.hpp"

namespace pawn {

struct EngineProvenance {
  std::string name;
  int depth = 0;
  int threads = 1;
};

struct SplitManifest {
  std::uint64_t seed = 0;
  double ratio = 0.8;
  std::vector<std::string> train_game_ids;  // sorted
  std::vector<std::string> val_game_ids;    // sorted
  std::optional<Normalizer> normalizer;
  std::optional<EngineProvenance> engine;

  bool is_train(const std::string& game_id) const {
    return std::binary_search(train_game_ids.begin(), train_game_ids.end(), game_id);
  }
  bool is_val(const std::string& game_id) const {
    return std::binary_search(val_game_ids.begin(), val_game_ids.end(), game_id);
  }
};

/// Shuffles the distinct game ids with `seed` and sends the first
/// ceil(ratio * n) to train. Both sides keep at least one game.
inline SplitManifest split_by_game(const std::vector<PieceValueRecord>& records, double ratio, std::uint64_t seed) {
  if (!(ratio > 0 && ratio < 1)) throw std::invalid_argument("split ratio must be in (0,1)");
  std::set<std::string> distinct;
  for (const auto& r : records) {
    if (r.game_id.empty()) throw std::invalid_argument("record without game_id");
    distinct.insert(r.game_id);
  }
  if (distinct.size() < 2) throw std::invalid_argument("split needs at least 2 games");
  std::vector<std::string> ids(distinct.begin(), distinct.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(ids[i], ids[j]);
  }
  const std::size_t n = ids.size();
  std::size_t n_train = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  SplitManifest m;
  m.seed = seed;
  m.ratio = ratio;
  m.train_game_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  m.val_game_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  std::sort(m.train_game_ids.begin(), m.train_game_ids.end());
  std::sort(m.val_game_ids.begin(), m.val_game_ids.end());
  return m;
}

struct SplitRecords {
  std::vector<PieceValueRecord> train, val;
};

inline SplitRecords partition(const std::vector<PieceValueRecord>& records, const SplitManifest& m) {
  SplitRecords out;
  for (const auto& r : records) {
    if (m.is_train(r.game_id)) out.train.push_back(r);
    else if (m.is_val(r.game_id)) out.val.push_back(r);
    else throw std::invalid_argument("game " + r.game_id + " is in neither split");
  }
  return out;
}

/// Key used for position identity: the first four FEN fields.
inline std::string position_key(const std::string& fen) {
  std::size_t spaces = 0;
  for (std::size_t i = 0; i < fen.size(); ++i)
    if (fen[i] == ' ' && ++spaces == 4) return fen.substr(0, i);
  return fen;
}

struct OverlapReport {
  std::size_t val_positions = 0;   // unique validation positions
  std::size_t shared_positions = 0;  // of those, also seen in train
  std::size_t shared_games = 0;
  double fraction() const { return val_positions ? double(shared_positions) / double(val_positions) : 0.0; }
};

inline OverlapReport measure_overlap(const SplitRecords& s) {
  std::unordered_set<std::string> train_keys, val_keys, train_games;
  for (const auto& r : s.train) {
    train_keys.insert(position_key(r.fen));
    train_games.insert(r.game_id);
  }
  OverlapReport rep;
  std::unordered_set<std::string> val_games;
  for (const auto& r : s.val) {
    if (val_keys.insert(position_key(r.fen)).second && train_keys.count(position_key(r.fen))) ++rep.shared_positions;
    val_games.insert(r.game_id);
  }
  rep.val_positions = val_keys.size();
  for (const auto& g : val_games) rep.shared_games += train_games.count(g);
  return rep;
}

inline nlohmann::json to_json(const SplitManifest& m) {
  nlohmann::json j;
  j["seed"] = m.seed;
  j["ratio"] = m.ratio;
  j["train_game_ids"] = m.train_game_ids;
  j["val_game_ids"] = m.val_game_ids;
  if (m.normalizer) j["normalizer"] = {{"mean", m.normalizer->mean}, {"std", m.normalizer->std}};
  else j["normalizer"] = nullptr;
  if (m.engine) j["engine"] = {{"name", m.engine->name}, {"depth", m.engine->depth}, {"threads", m.engine->threads}};
  else j["engine"] = nullptr;
  return j;
}

inline SplitManifest manifest_from_json(const nlohmann::json& j) {
  SplitManifest m;
  try {
    m.seed = j.at("seed").get<std::uint64_t>();
    m.ratio = j.at("ratio").get<double>();
    m.train_game_ids = j.at("train_game_ids").get<std::vector<std::string>>();
    m.val_game_ids = j.at("val_game_ids").get<std::vector<std::string>>();
    if (j.contains("normalizer") && !j["normalizer"].is_null())
      m.normalizer = Normalizer{j["normalizer"].at("mean").get<double>(), j["normalizer"].at("std").get<double>()};
    if (j.contains("engine") && !j["engine"].is_null())
      m.engine = EngineProvenance{j["engine"].at("name").get<std::string>(), j["engine"].at("depth").get<int>(),
                                  j["engine"].at("threads").get<int>()};
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("bad manifest: ") + e.what());
  }
  std::sort(m.train_game_ids.begin(), m.train_game_ids.end());
  std::sort(m.val_game_ids.begin(), m.val_game_ids.end());
  std::vector<std::string> both;
  std::set_intersection(m.train_game_ids.begin(), m.train_game_ids.end(), m.val_game_ids.begin(),
                        m.val_game_ids.end(), std::back_inserter(both));
  if (!both.empty()) throw DatasetError("bad manifest: game " + both.front() + " is in both splits");
  return m;
}

inline void save_manifest(const std::string& path, const SplitManifest& m) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write " + path);
  out << to_json(m).dump(2) << '\n';
}

inline SplitManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError("bad manifest " + path + ": " + e.what());
  }
  return manifest_from_json(j);
}

}  // namespace pawn
