#pragma once

#include <charconv>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pawn/chess/types.hpp"

namespace pawn {

/// Largest absolute evaluation; mate scores map just below it.
inline constexpr int kMateCap = 20000;

/// Engine evaluation from White's point of view.
struct EvalCp {
  int value = 0;
  bool was_mate = false;
  std::optional<int> mate_distance;  // plies; positive when White mates
  int depth = 0;                     // deepest completed search depth
  bool reduced_depth = false;        // search stopped short of the requested depth

  friend bool operator==(const EvalCp&, const EvalCp&) = default;
};

class UciParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The fields of an "info" line relevant to scoring.
struct UciInfo {
  int depth = 0;
  int multipv = 1;
  std::optional<int> cp;
  std::optional<int> mate;  // moves, side-to-move perspective
  bool bound = false;       // lowerbound/upperbound: not an exact score
};

namespace detail {

inline std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline int to_int(std::string_view s, std::string_view line) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw UciParseError("bad integer '" + std::string(s) + "' in: " + std::string(line));
  return v;
}

}  // namespace detail

/// Parses a UCI "info" line. Returns nullopt for lines that are not info
/// lines or carry no score (currmove updates, info string).
inline std::optional<UciInfo> parse_info_line(std::string_view line) {
  const auto t = detail::tokens(line);
  if (t.empty() || t[0] != "info") return std::nullopt;
  UciInfo info;
  bool has_depth = false;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] == "string") return std::nullopt;
    if (t[i] == "pv") break;
    if (t[i] == "depth" && i + 1 < t.size()) {
      info.depth = detail::to_int(t[++i], line);
      has_depth = true;
    } else if (t[i] == "multipv" && i + 1 < t.size()) {
      info.multipv = detail::to_int(t[++i], line);
    } else if (t[i] == "score") {
      if (i + 2 >= t.size()) throw UciParseError("truncated score in: " + std::string(line));
      if (t[i + 1] == "cp") info.cp = detail::to_int(t[i + 2], line);
      else if (t[i + 1] == "mate") info.mate = detail::to_int(t[i + 2], line);
      else throw UciParseError("unknown score kind in: " + std::string(line));
      i += 2;
      while (i + 1 < t.size() && (t[i + 1] == "lowerbound" || t[i + 1] == "upperbound")) {
        info.bound = true;
        ++i;
      }
    }
  }
  if (!has_depth || (!info.cp && !info.mate)) return std::nullopt;
  return info;
}

/// Converts a side-to-move score into a White-perspective EvalCp.
/// Mate in n moves maps to sign(n) * (kMateCap - 10|n|); "mate 0" means the
/// side to move is already mated.
inline EvalCp to_white_perspective(const UciInfo& info, Color side_to_move) {
  const int flip = side_to_move == Color::White ? 1 : -1;
  EvalCp e;
  e.depth = info.depth;
  if (info.mate) {
    const int n = *info.mate;
    const bool mover_wins = n > 0;
    const int abs_n = n < 0 ? -n : n;
    const int sign = (mover_wins ? 1 : -1) * flip;
    e.was_mate = true;
    e.value = sign * (kMateCap - 10 * abs_n);
    e.mate_distance = sign * (mover_wins ? 2 * abs_n - 1 : 2 * abs_n);
  } else {
    int v = *info.cp * flip;
    if (v > kMateCap) v = kMateCap;
    if (v < -kMateCap) v = -kMateCap;
    e.value = v;
  }
  return e;
}

}  // namespace pawn
