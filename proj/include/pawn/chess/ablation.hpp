#pragma once

#include <variant>
#include <vector>

#include "pawn/chess/attacks.hpp"

namespace pawn {

/// Removal leaves the side not to move in check; the ablated value is undefined.
struct IllegalRemoval {
  Square square;
  friend bool operator==(const IllegalRemoval&, const IllegalRemoval&) = default;
};

class RemovalError : public ChessError {
 public:
  enum class Kind { EmptySquare, KingRemoval };
  RemovalError(Kind kind, Square sq)
      : ChessError((kind == Kind::EmptySquare ? "no piece on " : "kings cannot be removed: ") + sq.algebraic()),
        kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

using RemovalResult = std::variant<Position, IllegalRemoval>;

/// Position `p` with the piece on `sq` taken off the board. Stale en passant
/// and castling flags that the removal invalidates are cleared.
inline RemovalResult remove_piece(const Position& p, Square sq) {
  const auto& pc = p.at(sq);
  if (!pc) throw RemovalError(RemovalError::Kind::EmptySquare, sq);
  if (pc->kind == PieceKind::King) throw RemovalError(RemovalError::Kind::KingRemoval, sq);

  Position n = p;
  n.at(sq).reset();

  if (n.en_passant && pc->kind == PieceKind::Pawn) {
    // The pawn that just double-pushed sits one rank past the en passant square.
    const int dir = pc->color == Color::White ? 1 : -1;
    if (sq.file() == n.en_passant->file() && sq.rank() == n.en_passant->rank() + dir) n.en_passant.reset();
  }
  if (pc->kind == PieceKind::Rook) {
    if (sq == Square(7, 0) && pc->color == Color::White) n.castling.white_king = false;
    if (sq == Square(0, 0) && pc->color == Color::White) n.castling.white_queen = false;
    if (sq == Square(7, 7) && pc->color == Color::Black) n.castling.black_king = false;
    if (sq == Square(0, 7) && pc->color == Color::Black) n.castling.black_queen = false;
  }

  if (opponent_in_check(n)) return IllegalRemoval{sq};
  return n;
}

/// Occupied non-king squares whose removal yields a legal position, in
/// rank-major then file order (a1, b1, ..., h8).
inline std::vector<Square> ablation_targets(const Position& p) {
  std::vector<Square> out;
  for (int i = 0; i < 64; ++i) {
    const auto& pc = p.board[static_cast<std::size_t>(i)];
    if (!pc || pc->kind == PieceKind::King) continue;
    const Square sq = Square::from_index(i);
    if (std::holds_alternative<Position>(remove_piece(p, sq))) out.push_back(sq);
  }
  return out;
}

}  // namespace pawn
