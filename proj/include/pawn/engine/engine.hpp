#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pawn/chess/position.hpp"
#include "pawn/engine/subprocess.hpp"
#include "pawn/engine/uci.hpp"

namespace pawn {

struct EngineConfig {
  std::string binary_path;
  std::vector<std::string> args;  // extra command-line arguments
  int depth = 20;
  std::chrono::milliseconds timeout{300'000};
  int threads = 1;
  int hash_mb = 256;
  std::chrono::milliseconds handshake_timeout{30'000};
  std::chrono::milliseconds grace{2'000};

  void validate() const {
    if (binary_path.empty()) throw std::invalid_argument("engine binary path is empty");
    if (depth < 1) throw std::invalid_argument("engine depth must be >= 1");
    if (timeout.count() <= 0) throw std::invalid_argument("engine timeout must be > 0");
    if (threads < 1) throw std::invalid_argument("engine threads must be >= 1");
    if (hash_mb < 1) throw std::invalid_argument("engine hash must be >= 1 MB");
  }
};

/// Engine path from PAWN_ENGINE if set, otherwise `fallback`.
inline std::string resolve_engine_path(const std::string& fallback) {
  if (const char* env = std::getenv("PAWN_ENGINE"); env && *env) return env;
  return fallback;
}

class EngineError : public std::runtime_error {
 public:
  enum class Kind { SpawnFailure, HandshakeTimeout, OptionRejected, Timeout, Crash, Protocol };
  EngineError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// A live UCI engine process. Single owner, one evaluation in flight.
class EngineHandle {
 public:
  EngineHandle() = default;
  EngineHandle(EngineHandle&&) noexcept = default;
  EngineHandle& operator=(EngineHandle&&) noexcept = default;

  bool alive() const { return alive_ && proc_.running(); }
  const std::string& name() const { return name_; }
  std::optional<int> exit_code() const { return proc_.exit_code(); }

 private:
  friend EngineHandle spawn(const EngineConfig&);
  friend EvalCp evaluate(EngineHandle&, const Position&, const EngineConfig&);
  friend void shutdown(EngineHandle&, std::chrono::milliseconds);

  Subprocess proc_;
  std::string name_;
  std::set<std::string> options_;
  bool alive_ = false;
};

namespace detail {

inline std::string read_until(Subprocess& p, std::string_view token, Subprocess::Clock::time_point deadline,
                              EngineError::Kind on_timeout, std::vector<std::string>* seen = nullptr) {
  std::string line;
  while (true) {
    switch (p.read_line(line, deadline)) {
      case Subprocess::ReadStatus::Line:
        if (seen) seen->push_back(line);
        if (line.rfind(token, 0) == 0) return line;
        break;
      case Subprocess::ReadStatus::Timeout:
        throw EngineError(on_timeout, "timed out waiting for '" + std::string(token) + "'");
      case Subprocess::ReadStatus::Eof:
        throw EngineError(EngineError::Kind::Crash, "engine closed its output waiting for '" + std::string(token) + "'");
    }
  }
}

}  // namespace detail

/// Starts the engine and completes the uci / setoption / isready handshake.
inline EngineHandle spawn(const EngineConfig& cfg) {
  cfg.validate();
  EngineHandle h;
  try {
    std::vector<std::string> argv{cfg.binary_path};
    argv.insert(argv.end(), cfg.args.begin(), cfg.args.end());
    h.proc_ = Subprocess(argv);
  } catch (const std::exception& e) {
    throw EngineError(EngineError::Kind::SpawnFailure, std::string("cannot start engine: ") + e.what());
  }
  const auto deadline = Subprocess::Clock::now() + cfg.handshake_timeout;
  h.proc_.write_line("uci");
  std::vector<std::string> lines;
  detail::read_until(h.proc_, "uciok", deadline, EngineError::Kind::HandshakeTimeout, &lines);
  for (const auto& l : lines) {
    if (l.rfind("id name ", 0) == 0) h.name_ = l.substr(8);
    if (l.rfind("option name ", 0) == 0) {
      const auto end = l.find(" type ");
      h.options_.insert(l.substr(12, end == std::string::npos ? std::string::npos : end - 12));
    }
  }
  auto set_option = [&](const std::string& name, int value, int default_ok) {
    if (h.options_.count(name)) {
      h.proc_.write_line("setoption name " + name + " value " + std::to_string(value));
    } else if (value != default_ok) {
      throw EngineError(EngineError::Kind::OptionRejected, "engine does not support option " + name);
    }
  };
  set_option("Threads", cfg.threads, 1);
  set_option("Hash", cfg.hash_mb, cfg.hash_mb);
  h.proc_.write_line("isready");
  detail::read_until(h.proc_, "readyok", deadline, EngineError::Kind::HandshakeTimeout);
  h.alive_ = true;
  return h;
}

/// Searches `p` to cfg.depth and returns the deepest exact score, White's view.
/// On timeout the search is stopped; the deepest completed score is returned
/// flagged reduced_depth, or EngineError::Timeout if none arrived.
inline EvalCp evaluate(EngineHandle& h, const Position& p, const EngineConfig& cfg) {
  if (!h.alive()) throw EngineError(EngineError::Kind::Crash, "engine handle is not alive");
  auto fail = [&](EngineError::Kind k, const std::string& msg) -> EngineError {
    h.alive_ = false;
    h.proc_.terminate();
    return EngineError(k, msg);
  };
  const auto start = Subprocess::Clock::now();
  const auto deadline = start + cfg.timeout;
  try {
    h.proc_.write_line("ucinewgame");
    h.proc_.write_line("isready");
    detail::read_until(h.proc_, "readyok", deadline, EngineError::Kind::Timeout);
  } catch (const EngineError& e) {
    throw fail(e.kind(), e.what());
  }
  h.proc_.write_line("position fen " + to_fen(p));
  h.proc_.write_line("go depth " + std::to_string(cfg.depth));

  std::optional<UciInfo> best;
  bool timed_out = false;
  std::string bestmove;
  std::string line;
  auto current_deadline = deadline;
  while (bestmove.empty()) {
    const auto st = h.proc_.read_line(line, current_deadline);
    if (st == Subprocess::ReadStatus::Eof) throw fail(EngineError::Kind::Crash, "engine exited during search");
    if (st == Subprocess::ReadStatus::Timeout) {
      if (timed_out) throw fail(EngineError::Kind::Timeout, "engine ignored stop after timeout");
      timed_out = true;
      h.proc_.write_line("stop");
      current_deadline = Subprocess::Clock::now() + cfg.grace;
      continue;
    }
    if (line.rfind("bestmove", 0) == 0) {
      bestmove = line;
      break;
    }
    std::optional<UciInfo> info;
    try {
      info = parse_info_line(line);
    } catch (const UciParseError& e) {
      throw fail(EngineError::Kind::Protocol, e.what());
    }
    if (!info || info->bound || info->multipv != 1) continue;
    if (!best || info->depth >= best->depth) best = info;
  }
  if (!best) {
    if (timed_out) throw EngineError(EngineError::Kind::Timeout, "no score before timeout");
    throw EngineError(EngineError::Kind::Protocol, "search ended without a score");
  }
  EvalCp e = to_white_perspective(*best, p.side_to_move);
  const bool terminal = bestmove.find("(none)") != std::string::npos;
  e.reduced_depth = timed_out || (!terminal && best->depth < cfg.depth);
  return e;
}

/// Sends quit and reaps the process, force-killing after `grace`. Idempotent.
inline void shutdown(EngineHandle& h, std::chrono::milliseconds grace = std::chrono::milliseconds(2000)) {
  if (!h.proc_.running()) {
    h.alive_ = false;
    return;
  }
  h.proc_.write_line("quit");
  h.proc_.wait_or_kill(grace);
  h.alive_ = false;
}

/// Fixed-size set of engine processes handed out under a mutex. Dead
/// handles are respawned on their next checkout.
class EnginePool {
 public:
  EnginePool(EngineConfig cfg, std::size_t size) : cfg_(std::move(cfg)) {
    if (size == 0) throw std::invalid_argument("engine pool size must be >= 1");
    for (std::size_t i = 0; i < size; ++i) {
      handles_.push_back(std::make_unique<EngineHandle>(spawn(cfg_)));
      free_.push_back(handles_.back().get());
    }
    name_ = handles_.front()->name();
  }
  EnginePool(const EnginePool&) = delete;
  EnginePool& operator=(const EnginePool&) = delete;
  ~EnginePool() {
    for (auto& h : handles_) shutdown(*h);
  }

  class Lease {
   public:
    Lease(EnginePool* pool, EngineHandle* h) : pool_(pool), h_(h) {}
    Lease(Lease&& o) noexcept : pool_(std::exchange(o.pool_, nullptr)), h_(std::exchange(o.h_, nullptr)) {}
    Lease& operator=(Lease&&) = delete;
    ~Lease() {
      if (pool_) pool_->release(h_);
    }
    EngineHandle& operator*() const { return *h_; }
    EngineHandle* operator->() const { return h_; }

   private:
    EnginePool* pool_;
    EngineHandle* h_;
  };

  Lease acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !free_.empty(); });
    return checkout(lock);
  }

  std::optional<Lease> try_acquire_for(std::chrono::milliseconds wait) {
    std::unique_lock lock(mu_);
    if (!cv_.wait_for(lock, wait, [&] { return !free_.empty(); })) return std::nullopt;
    return checkout(lock);
  }

  const EngineConfig& config() const { return cfg_; }
  const std::string& engine_name() const { return name_; }
  std::size_t size() const { return handles_.size(); }

 private:
  Lease checkout(std::unique_lock<std::mutex>& lock) {
    EngineHandle* h = free_.back();
    free_.pop_back();
    if (!h->alive()) {
      lock.unlock();
      try {
        *h = spawn(cfg_);
      } catch (...) {
        release(h);
        throw;
      }
    }
    return Lease(this, h);
  }

  void release(EngineHandle* h) {
    {
      std::lock_guard lock(mu_);
      free_.push_back(h);
    }
    cv_.notify_one();
  }

  EngineConfig cfg_;
  std::string name_;
  std::vector<std::unique_ptr<EngineHandle>> handles_;
  std::vector<EngineHandle*> free_;
  std::mutex mu_;
  std::condition_variable cv_;
};

}  // namespace pawn
