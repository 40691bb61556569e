#pragma once

#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "pawn/chess/attacks.hpp"

namespace pawn {

struct Move {
  Square from;
  Square to;
  std::optional<PieceKind> promotion;

  /// Long algebraic form as spoken by UCI ("e2e4", "e7e8q").
  std::string uci() const {
    std::string s = from.algebraic() + to.algebraic();
    if (promotion) s += static_cast<char>(kind_letter(*promotion) - 'A' + 'a');
    return s;
  }

  friend bool operator==(const Move&, const Move&) = default;
};

/// Plays `m` on `p` without legality checks. Handles captures, en passant,
/// castling rook hops, promotion, rights bookkeeping and clocks.
inline Position make_move(const Position& p, const Move& m) {
  Position n = p;
  const Piece mover = *p.at(m.from);
  const bool capture = p.at(m.to).has_value();
  const bool is_pawn = mover.kind == PieceKind::Pawn;

  n.at(m.to) = mover;
  n.at(m.from).reset();

  if (is_pawn && p.en_passant && m.to == *p.en_passant && m.to.file() != m.from.file()) {
    n.at(Square(m.to.file(), m.from.rank())).reset();
  }
  if (is_pawn && m.promotion) n.at(m.to) = Piece{mover.color, *m.promotion};

  if (mover.kind == PieceKind::King && std::abs(m.to.file() - m.from.file()) == 2) {
    const int rank = m.from.rank();
    const bool king_side = m.to.file() == 6;
    const Square rook_from(king_side ? 7 : 0, rank), rook_to(king_side ? 5 : 3, rank);
    n.at(rook_to) = n.at(rook_from);
    n.at(rook_from).reset();
  }

  auto touch = [&](Square s) {
    if (s == Square(4, 0)) n.castling.white_king = n.castling.white_queen = false;
    if (s == Square(4, 7)) n.castling.black_king = n.castling.black_queen = false;
    if (s == Square(7, 0)) n.castling.white_king = false;
    if (s == Square(0, 0)) n.castling.white_queen = false;
    if (s == Square(7, 7)) n.castling.black_king = false;
    if (s == Square(0, 7)) n.castling.black_queen = false;
  };
  touch(m.from);
  touch(m.to);

  n.en_passant.reset();
  if (is_pawn && std::abs(m.to.rank() - m.from.rank()) == 2)
    n.en_passant = Square(m.from.file(), (m.from.rank() + m.to.rank()) / 2);

  n.halfmove_clock = (is_pawn || capture) ? 0 : p.halfmove_clock + 1;
  if (p.side_to_move == Color::Black) ++n.fullmove_number;
  n.side_to_move = ~p.side_to_move;
  return n;
}

/// All pseudo-legal moves for the side to move (own king may be left in check).
inline std::vector<Move> pseudo_legal_moves(const Position& p) {
  std::vector<Move> out;
  const BoardBits b(p);
  const Color us = p.side_to_move;
  const Bitboard own = b.by_color[static_cast<std::size_t>(us)];
  const Bitboard theirs = b.by_color[static_cast<std::size_t>(~us)];

  auto emit_targets = [&](int from, Bitboard targets) {
    while (targets) {
      const int to = std::countr_zero(targets);
      targets &= targets - 1;
      out.push_back({Square::from_index(from), Square::from_index(to), std::nullopt});
    }
  };
  auto emit_pawn = [&](int from, int to) {
    const int last = us == Color::White ? 7 : 0;
    if (to / 8 == last) {
      for (PieceKind k : {PieceKind::Queen, PieceKind::Rook, PieceKind::Bishop, PieceKind::Knight})
        out.push_back({Square::from_index(from), Square::from_index(to), k});
    } else {
      out.push_back({Square::from_index(from), Square::from_index(to), std::nullopt});
    }
  };

  for (int sq = 0; sq < 64; ++sq) {
    if (!(own & bit(sq))) continue;
    const PieceKind kind = p.board[static_cast<std::size_t>(sq)]->kind;
    switch (kind) {
      case PieceKind::Pawn: {
        const int dir = us == Color::White ? 8 : -8;
        const int start_rank = us == Color::White ? 1 : 6;
        const int one = sq + dir;
        if (one >= 0 && one < 64 && !(b.occupied & bit(one))) {
          emit_pawn(sq, one);
          const int two = one + dir;
          if (sq / 8 == start_rank && !(b.occupied & bit(two))) emit_pawn(sq, two);
        }
        Bitboard caps = pawn_attacks(us, sq) & theirs;
        if (p.en_passant) caps |= pawn_attacks(us, sq) & bit(p.en_passant->index());
        while (caps) {
          const int to = std::countr_zero(caps);
          caps &= caps - 1;
          emit_pawn(sq, to);
        }
        break;
      }
      case PieceKind::Knight: emit_targets(sq, knight_attacks(sq) & ~own); break;
      case PieceKind::Bishop: emit_targets(sq, bishop_attacks(sq, b.occupied) & ~own); break;
      case PieceKind::Rook: emit_targets(sq, rook_attacks(sq, b.occupied) & ~own); break;
      case PieceKind::Queen:
        emit_targets(sq, (rook_attacks(sq, b.occupied) | bishop_attacks(sq, b.occupied)) & ~own);
        break;
      case PieceKind::King: {
        emit_targets(sq, king_attacks(sq) & ~own);
        const int rank = us == Color::White ? 0 : 7;
        if (sq != rank * 8 + 4) break;
        const bool ks = us == Color::White ? p.castling.white_king : p.castling.black_king;
        const bool qs = us == Color::White ? p.castling.white_queen : p.castling.black_queen;
        const int base = rank * 8;
        if (ks && !(b.occupied & (bit(base + 5) | bit(base + 6))) && !is_attacked(b, base + 4, ~us) &&
            !is_attacked(b, base + 5, ~us) && !is_attacked(b, base + 6, ~us))
          out.push_back({Square(4, rank), Square(6, rank), std::nullopt});
        if (qs && !(b.occupied & (bit(base + 1) | bit(base + 2) | bit(base + 3))) &&
            !is_attacked(b, base + 4, ~us) && !is_attacked(b, base + 3, ~us) && !is_attacked(b, base + 2, ~us))
          out.push_back({Square(4, rank), Square(2, rank), std::nullopt});
        break;
      }
    }
  }
  return out;
}

/// Pseudo-legal moves that do not leave the mover's king attacked.
inline std::vector<Move> legal_moves(const Position& p) {
  std::vector<Move> out;
  for (const Move& m : pseudo_legal_moves(p)) {
    if (!in_check(make_move(p, m), p.side_to_move)) out.push_back(m);
  }
  return out;
}

}  // namespace pawn
