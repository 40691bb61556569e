#pragma once

#include <atomic>
#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_set>
#include <variant>
#include <vector>

#include "json.hpp"

#include "pawn/chess.hpp"
#include "pawn/data/record.hpp"
#include "pawn/data/split.hpp"
#include "pawn/engine/engine.hpp"

namespace pawn {

enum class SkipReason { IllegalRemoval, Timeout };

inline const char* skip_reason_name(SkipReason r) {
  return r == SkipReason::IllegalRemoval ? "illegal_removal" : "timeout";
}

struct SkippedSquare {
  Square square;
  Piece piece;
  SkipReason reason;
};

struct LabeledPosition {
  std::vector<PieceValueRecord> records;
  std::vector<SkippedSquare> skipped;  // rank-major, like records
  std::optional<EvalCp> base;          // absent when the base search timed out
};

namespace detail {

inline std::optional<EvalCp> evaluate_or_timeout(EnginePool& pool, const Position& p, const EngineConfig& cfg) {
  auto lease = pool.acquire();
  try {
    return evaluate(*lease, p, cfg);
  } catch (const EngineError& e) {
    if (e.kind() == EngineError::Kind::Timeout) return std::nullopt;
    throw;
  }
}

}  // namespace detail

/// Labels every non-king piece of `p`: one engine call for the position,
/// one per legal removal. Illegal removals and timed-out searches become
/// skips. Other engine failures propagate (the caller abandons the position).
inline LabeledPosition label_position(EnginePool& pool, const Position& p, const EngineConfig& cfg,
                                      const std::string& game_id = {}) {
  LabeledPosition out;
  const std::string fen = to_fen(p);
  out.base = detail::evaluate_or_timeout(pool, p, cfg);
  for (int i = 0; i < 64; ++i) {
    const auto& pc = p.board[static_cast<std::size_t>(i)];
    if (!pc || pc->kind == PieceKind::King) continue;
    const Square sq = Square::from_index(i);
    const RemovalResult removed = remove_piece(p, sq);
    if (std::holds_alternative<IllegalRemoval>(removed)) {
      out.skipped.push_back({sq, *pc, SkipReason::IllegalRemoval});
      continue;
    }
    if (!out.base) {
      out.skipped.push_back({sq, *pc, SkipReason::Timeout});
      continue;
    }
    const auto ablated = detail::evaluate_or_timeout(pool, std::get<Position>(removed), cfg);
    if (!ablated) {
      out.skipped.push_back({sq, *pc, SkipReason::Timeout});
      continue;
    }
    PieceValueRecord r;
    r.game_id = game_id;
    r.fen = fen;
    r.square = sq;
    r.piece = *pc;
    r.eval_base_cp = out.base->value;
    r.eval_ablated_cp = ablated->value;
    r.value_cp = r.eval_base_cp - r.eval_ablated_cp;
    if (out.base->was_mate || ablated->was_mate) r.flags |= kMateInvolved;
    if (out.base->reduced_depth || ablated->reduced_depth) r.flags |= kReducedDepth;
    out.records.push_back(std::move(r));
  }
  return out;
}

struct IngestOptions {
  std::size_t workers = 1;       // concurrent label_position calls
  std::size_t sample_every = 1;  // label every k-th ply of each game
  bool drop_mate = false;        // drop records flagged mate_involved
};

struct IngestReport {
  std::size_t games = 0;
  std::size_t positions = 0;         // positions sent to the engine
  std::size_t unique_positions = 0;  // distinct by the first four FEN fields
  std::size_t records = 0;
  std::size_t skipped_illegal = 0;
  std::size_t skipped_timeout = 0;
  std::size_t abandoned_positions = 0;  // engine failure on the position
  std::size_t dropped_mate = 0;
  std::size_t source_warnings = 0;
  std::string engine_name;
  int depth = 0;
  double seconds = 0;

  double skip_rate() const {
    const double attempted = double(records + dropped_mate + skipped_illegal + skipped_timeout);
    return attempted > 0 ? double(skipped_illegal + skipped_timeout) / attempted : 0.0;
  }

  nlohmann::json to_json() const {
    return {{"games", games},
            {"positions", positions},
            {"unique_positions", unique_positions},
            {"records", records},
            {"skipped", {{"illegal_removal", skipped_illegal}, {"timeout", skipped_timeout}}},
            {"skip_rate", skip_rate()},
            {"abandoned_positions", abandoned_positions},
            {"dropped_mate", dropped_mate},
            {"source_warnings", source_warnings},
            {"engine", {{"name", engine_name}, {"depth", depth}}},
            {"seconds", seconds}};
  }
};

struct SourcePosition {
  std::string game_id;
  Position position;
};

struct LoadedSources {
  std::size_t games = 0;
  std::vector<SourcePosition> positions;
  std::vector<std::string> warnings;
};

/// Reads .pgn files as games and anything else as one FEN per line. Each FEN
/// line is its own game, identified by a hash of its position key, so equal
/// positions always land in the same split.
inline LoadedSources load_sources(const std::vector<std::string>& paths, std::size_t sample_every = 1) {
  if (sample_every == 0) throw std::invalid_argument("sample_every must be >= 1");
  LoadedSources out;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot read " + path);
    const bool is_pgn = path.size() >= 4 && (path.compare(path.size() - 4, 4, ".pgn") == 0 ||
                                             path.compare(path.size() - 4, 4, ".PGN") == 0);
    if (is_pgn) {
      PgnReader reader(in);
      while (auto g = reader.next()) {
        ++out.games;
        for (std::size_t i = 1; i < g->positions.size(); ++i)
          if (i % sample_every == 0) out.positions.push_back({g->game_id, g->positions[i]});
      }
      for (const auto& w : reader.warnings())
        out.warnings.push_back(path + ": game " + std::to_string(w.game_number) + ": " + w.message);
    } else {
      std::string line;
      std::size_t n = 0;
      while (std::getline(in, line)) {
        ++n;
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        const auto e = line.find_last_not_of(" \t\r");
        try {
          Position p = parse_fen(line.substr(b, e - b + 1));
          ++out.games;
          out.positions.push_back({hex64(fnv1a64("fen:" + fen_key(p))), std::move(p)});
        } catch (const std::exception& ex) {
          out.warnings.push_back(path + ":" + std::to_string(n) + ": " + ex.what());
        }
      }
    }
  }
  return out;
}

/// Labels every source position and streams records to `out` as CSV (header
/// included). Records are written in source order.
inline IngestReport ingest(const std::vector<std::string>& sources, EnginePool& pool, const EngineConfig& cfg,
                           std::ostream& out, const IngestOptions& opt = {},
                           const std::function<void(const std::string&)>& log = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  LoadedSources src = load_sources(sources, opt.sample_every);
  IngestReport rep;
  rep.games = src.games;
  rep.positions = src.positions.size();
  rep.source_warnings = src.warnings.size();
  rep.engine_name = pool.engine_name();
  rep.depth = cfg.depth;
  if (log)
    for (const auto& w : src.warnings) log("warning: " + w);
  {
    std::unordered_set<std::string> keys;
    for (const auto& sp : src.positions) keys.insert(fen_key(sp.position));
    rep.unique_positions = keys.size();
  }

  out << kDatasetHeader << '\n';
  std::mutex mu;
  std::map<std::size_t, LabeledPosition> done;
  std::size_t next_write = 0;
  std::atomic<std::size_t> next_index{0};
  const std::size_t total = src.positions.size();

  auto flush_locked = [&] {
    for (auto it = done.find(next_write); it != done.end(); it = done.find(next_write)) {
      for (const auto& r : it->second.records) {
        if (opt.drop_mate && r.mate_involved()) {
          ++rep.dropped_mate;
          continue;
        }
        write_record(out, r);
        ++rep.records;
      }
      for (const auto& s : it->second.skipped)
        ++(s.reason == SkipReason::IllegalRemoval ? rep.skipped_illegal : rep.skipped_timeout);
      done.erase(it);
      ++next_write;
      if (log && (next_write % 100 == 0 || next_write == total))
        log("labeled " + std::to_string(next_write) + "/" + std::to_string(total) + " positions");
    }
  };

  auto worker = [&] {
    while (true) {
      const std::size_t i = next_index.fetch_add(1);
      if (i >= total) return;
      LabeledPosition lp;
      try {
        lp = label_position(pool, src.positions[i].position, cfg, src.positions[i].game_id);
      } catch (const EngineError& e) {
        std::lock_guard lock(mu);
        ++rep.abandoned_positions;
        if (log) log("warning: abandoned " + to_fen(src.positions[i].position) + ": " + e.what());
      }
      std::lock_guard lock(mu);
      done.emplace(i, std::move(lp));
      flush_locked();
    }
  };

  const std::size_t n_workers = std::max<std::size_t>(1, std::min(opt.workers, std::max<std::size_t>(total, 1)));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  out.flush();
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (total > 0 && rep.abandoned_positions == total)
    throw EngineError(EngineError::Kind::Crash, "engine failed on every position");
  return rep;
}

}  // namespace pawn
