#pragma once

#include <string>
#include <string_view>

#include "pawn/chess/move.hpp"

namespace pawn {

class SanError : public ChessError {
 public:
  enum class Kind { Unparseable, Illegal, Ambiguous };

  SanError(Kind kind, std::string_view san, const std::string& why)
      : ChessError(label(kind) + " SAN '" + std::string(san) + "': " + why), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  static std::string label(Kind k) {
    switch (k) {
      case Kind::Unparseable: return "unparseable";
      case Kind::Illegal: return "illegal";
      case Kind::Ambiguous: return "ambiguous";
    }
    return "bad";
  }
  Kind kind_;
};

/// Resolves a SAN token against the legal moves of `p`.
inline Move parse_san(const Position& p, std::string_view san) {
  using K = SanError::Kind;
  std::string_view s = san;
  while (!s.empty() && (s.back() == '+' || s.back() == '#' || s.back() == '!' || s.back() == '?')) s.remove_suffix(1);
  if (s.empty()) throw SanError(K::Unparseable, san, "empty move");

  const auto legal = legal_moves(p);
  const int home_rank = p.side_to_move == Color::White ? 0 : 7;

  if (s == "O-O" || s == "0-0" || s == "O-O-O" || s == "0-0-0") {
    const Move want{Square(4, home_rank), Square(s.size() == 3 ? 6 : 2, home_rank), std::nullopt};
    const auto& king = p.at(want.from);
    if (king && king->kind == PieceKind::King && king->color == p.side_to_move) {
      for (const Move& m : legal)
        if (m == want) return m;
    }
    throw SanError(K::Illegal, san, "castling not available");
  }

  PieceKind kind = PieceKind::Pawn;
  std::size_t i = 0;
  if (auto k = kind_from_letter(s[0]); k && s[0] != 'P') {
    kind = *k;
    i = 1;
  } else if (s[0] == 'P') {
    i = 1;
  }

  std::optional<PieceKind> promotion;
  if (auto eq = s.find('='); eq != std::string_view::npos) {
    if (eq + 2 != s.size()) throw SanError(K::Unparseable, san, "bad promotion suffix");
    promotion = kind_from_letter(s[eq + 1]);
    if (!promotion || *promotion == PieceKind::Pawn || *promotion == PieceKind::King)
      throw SanError(K::Unparseable, san, "bad promotion piece");
    s = s.substr(0, eq);
  } else if (kind == PieceKind::Pawn && s.size() >= 3 && kind_from_letter(s.back()) && s.back() != 'P' &&
             s.back() != 'K') {
    promotion = kind_from_letter(s.back());
    s.remove_suffix(1);
  }

  if (s.size() < i + 2) throw SanError(K::Unparseable, san, "missing destination");
  const auto dest = Square::parse(s.substr(s.size() - 2));
  if (!dest) throw SanError(K::Unparseable, san, "bad destination square");

  std::optional<int> from_file, from_rank;
  for (std::size_t j = i; j + 2 < s.size(); ++j) {
    const char c = s[j];
    if (c == 'x' || c == ':' || c == '-') continue;
    if (c >= 'a' && c <= 'h') from_file = c - 'a';
    else if (c >= '1' && c <= '8') from_rank = c - '1';
    else throw SanError(K::Unparseable, san, std::string("unexpected character '") + c + "'");
  }

  const Move* found = nullptr;
  int matches = 0;
  for (const Move& m : legal) {
    if (m.to != *dest) continue;
    const auto& pc = p.at(m.from);
    if (pc->kind != kind) continue;
    if (from_file && m.from.file() != *from_file) continue;
    if (from_rank && m.from.rank() != *from_rank) continue;
    if (m.promotion != promotion) continue;
    if (pc->kind == PieceKind::King && std::abs(m.to.file() - m.from.file()) == 2) continue;
    found = &m;
    ++matches;
  }
  if (matches == 0) throw SanError(K::Illegal, san, "no legal move matches");
  if (matches > 1) throw SanError(K::Ambiguous, san, std::to_string(matches) + " legal moves match");
  return *found;
}

/// Plays a SAN move; throws SanError when it is unparseable, illegal, or ambiguous.
inline Position apply_san(const Position& p, std::string_view san) { return make_move(p, parse_san(p, san)); }

}  // namespace pawn
