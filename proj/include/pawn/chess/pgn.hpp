#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pawn/chess/san.hpp"

namespace pawn {

struct Game {
  std::string game_id;
  std::vector<std::pair<std::string, std::string>> headers;
  /// positions[0] is the initial position; positions[i] follows the i-th ply.
  std::vector<Position> positions;
  std::vector<std::string> moves;
  std::string result = "*";

  const std::string* header(std::string_view key) const {
    for (const auto& [k, v] : headers)
      if (k == key) return &v;
    return nullptr;
  }
  std::size_t plies() const { return moves.size(); }
};

struct PgnWarning {
  std::size_t game_number = 0;  // 1-based index in the stream
  std::string message;
};

/// 64-bit FNV-1a, stable across platforms; used for game and dataset ids.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Streams games out of PGN export text. Mainline only: comments, NAGs and
/// variations are skipped. Games that fail to replay are dropped with a warning.
class PgnReader {
 public:
  explicit PgnReader(std::istream& in) : in_(in) {}

  std::optional<Game> next() {
    while (true) {
      auto raw = read_raw();
      if (!raw) return std::nullopt;
      ++game_number_;
      if (auto g = build(*raw)) return g;
    }
  }

  const std::vector<PgnWarning>& warnings() const { return warnings_; }

 private:
  struct RawGame {
    std::vector<std::pair<std::string, std::string>> headers;
    std::vector<std::string> tokens;
    std::string result;
    bool terminated = false;
  };

  int get() { return in_.get(); }
  int peek() { return in_.peek(); }

  void skip_line() {
    int c;
    while ((c = get()) != EOF && c != '\n') {}
  }

  std::optional<std::pair<std::string, std::string>> read_tag() {
    // '[' already consumed
    std::string key, value;
    int c;
    while ((c = get()) != EOF && std::isspace(c)) {}
    while (c != EOF && !std::isspace(c) && c != '"' && c != ']') {
      key += static_cast<char>(c);
      c = get();
    }
    while (c != EOF && c != '"' && c != ']') c = get();
    if (c == '"') {
      while ((c = get()) != EOF && c != '"') {
        if (c == '\\') c = get();
        if (c != EOF) value += static_cast<char>(c);
      }
      while (c != EOF && c != ']') c = get();
    }
    if (c == EOF) return std::nullopt;
    return std::make_pair(key, value);
  }

  static bool is_result(const std::string& t) {
    return t == "1-0" || t == "0-1" || t == "1/2-1/2" || t == "*";
  }

  std::optional<RawGame> read_raw() {
    RawGame g;
    bool in_movetext = false;
    int depth = 0;
    bool line_start = true;
    while (true) {
      int c = peek();
      if (c == EOF) break;
      if (line_start && c == '%') {
        skip_line();
        continue;
      }
      line_start = false;
      if (c == '\n') {
        get();
        line_start = true;
        continue;
      }
      if (std::isspace(c)) {
        get();
        continue;
      }
      if (c == '[' && depth == 0) {
        if (in_movetext) {
          // A new game's tags while this one still lacks a result.
          return g;
        }
        get();
        if (auto tag = read_tag()) g.headers.push_back(std::move(*tag));
        continue;
      }
      in_movetext = true;
      get();
      if (c == '{') {
        while ((c = get()) != EOF && c != '}') {}
        continue;
      }
      if (c == ';') {
        skip_line();
        line_start = true;
        continue;
      }
      if (c == '(') {
        ++depth;
        continue;
      }
      if (c == ')') {
        if (depth > 0) --depth;
        continue;
      }
      std::string tok(1, static_cast<char>(c));
      while ((c = peek()) != EOF && !std::isspace(c) && c != '{' && c != '(' && c != ')' && c != ';' &&
             !(c == '[' && depth == 0)) {
        tok += static_cast<char>(get());
      }
      if (depth > 0 || tok[0] == '$') continue;
      if (is_result(tok)) {
        g.result = tok;
        g.terminated = true;
        return g;
      }
      // strip move numbers such as "12." or "12..." (possibly glued to the move)
      std::size_t k = 0;
      while (k < tok.size() && std::isdigit(static_cast<unsigned char>(tok[k]))) ++k;
      if (k > 0 && k < tok.size() && tok[k] == '.') {
        while (k < tok.size() && tok[k] == '.') ++k;
        tok = tok.substr(k);
      } else if (k == tok.size()) {
        continue;
      }
      while (!tok.empty() && tok[0] == '.') tok.erase(0, 1);
      if (!tok.empty()) g.tokens.push_back(std::move(tok));
    }
    if (!in_movetext && g.headers.empty()) return std::nullopt;
    return g;
  }

  std::optional<Game> build(const RawGame& raw) {
    if (!raw.terminated) {
      warnings_.push_back({game_number_, "unterminated game (no result token); dropped"});
      return std::nullopt;
    }
    Game g;
    g.headers = raw.headers;
    g.result = raw.result;
    Position pos = start_position();
    if (const auto* fen = g.header("FEN")) {
      try {
        pos = parse_fen(*fen);
      } catch (const FenError& e) {
        warnings_.push_back({game_number_, std::string("bad FEN header: ") + e.what() + "; dropped"});
        return std::nullopt;
      }
    }
    g.positions.push_back(pos);
    for (const auto& san : raw.tokens) {
      try {
        pos = apply_san(pos, san);
      } catch (const SanError& e) {
        warnings_.push_back({game_number_, std::string(e.what()) + " at ply " +
                                               std::to_string(g.moves.size() + 1) + "; dropped"});
        return std::nullopt;
      }
      g.positions.push_back(pos);
      g.moves.push_back(san);
    }
    std::string canon;
    for (const auto& [k, v] : g.headers) canon += k + "=" + v + "\n";
    canon += "\n";
    for (const auto& m : g.moves) canon += m + " ";
    canon += g.result;
    g.game_id = hex64(fnv1a64(canon));
    return g;
  }

  std::istream& in_;
  std::size_t game_number_ = 0;
  std::vector<PgnWarning> warnings_;
};

inline std::vector<Game> parse_pgn(std::istream& in, std::vector<PgnWarning>* warnings = nullptr) {
  PgnReader reader(in);
  std::vector<Game> games;
  while (auto g = reader.next()) games.push_back(std::move(*g));
  if (warnings) *warnings = reader.warnings();
  return games;
}

inline std::vector<Game> parse_pgn(std::string_view text, std::vector<PgnWarning>* warnings = nullptr) {
  std::istringstream in{std::string(text)};
  return parse_pgn(in, warnings);
}

}  // namespace pawn
