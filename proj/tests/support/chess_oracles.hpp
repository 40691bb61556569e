#pragma once

// Test-only reference code. Deliberately shares nothing with the bitboard
// attack tables or move generator under test.

#include <random>
#include <vector>

#include "pawn/chess/position.hpp"

namespace pawn::testing {

/// Every square a piece standing on `from` attacks, found by walking the
/// board square by square.
inline std::vector<int> naive_attacked_squares(const Position& p, int from) {
  std::vector<int> out;
  const Piece pc = *p.board[static_cast<std::size_t>(from)];
  const int f0 = from % 8, r0 = from / 8;
  auto on_board = [](int f, int r) { return f >= 0 && f < 8 && r >= 0 && r < 8; };
  auto leap = [&](std::initializer_list<std::pair<int, int>> ds) {
    for (auto [df, dr] : ds)
      if (on_board(f0 + df, r0 + dr)) out.push_back((r0 + dr) * 8 + f0 + df);
  };
  auto slide = [&](std::initializer_list<std::pair<int, int>> ds) {
    for (auto [df, dr] : ds) {
      int f = f0 + df, r = r0 + dr;
      while (on_board(f, r)) {
        out.push_back(r * 8 + f);
        if (p.board[static_cast<std::size_t>(r * 8 + f)]) break;
        f += df;
        r += dr;
      }
    }
  };
  switch (pc.kind) {
    case PieceKind::Pawn: {
      const int dr = pc.color == Color::White ? 1 : -1;
      leap({{-1, dr}, {1, dr}});
      break;
    }
    case PieceKind::Knight: leap({{1, 2}, {2, 1}, {2, -1}, {1, -2}, {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}}); break;
    case PieceKind::King: leap({{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}); break;
    case PieceKind::Bishop: slide({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}); break;
    case PieceKind::Rook: slide({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}); break;
    case PieceKind::Queen: slide({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}}); break;
  }
  return out;
}

/// Brute force: enumerate every attacker's attack set and look for the king.
inline bool naive_opponent_in_check(const Position& p) {
  const Color victim = ~p.side_to_move;
  int king = -1;
  for (int i = 0; i < 64; ++i) {
    const auto& pc = p.board[static_cast<std::size_t>(i)];
    if (pc && pc->kind == PieceKind::King && pc->color == victim) king = i;
  }
  for (int i = 0; i < 64; ++i) {
    const auto& pc = p.board[static_cast<std::size_t>(i)];
    if (!pc || pc->color != p.side_to_move) continue;
    for (int sq : naive_attacked_squares(p, i))
      if (sq == king) return true;
  }
  return false;
}

/// Random placement: two kings plus up to `max_extra` other pieces, pawns off
/// the back ranks. Not necessarily reachable in play; either side may be in check.
inline Position random_placement(std::mt19937_64& rng, int max_extra = 24) {
  Position p;
  std::uniform_int_distribution<int> sq(0, 63), coin(0, 1);
  std::uniform_int_distribution<int> count(0, max_extra), kind(0, 4);
  const int wk = sq(rng);
  int bk;
  do bk = sq(rng);
  while (bk == wk);
  p.board[static_cast<std::size_t>(wk)] = Piece{Color::White, PieceKind::King};
  p.board[static_cast<std::size_t>(bk)] = Piece{Color::Black, PieceKind::King};
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const int s = sq(rng);
    if (p.board[static_cast<std::size_t>(s)]) continue;
    const auto k = static_cast<PieceKind>(kind(rng));
    if (k == PieceKind::Pawn && (s / 8 == 0 || s / 8 == 7)) continue;
    p.board[static_cast<std::size_t>(s)] = Piece{coin(rng) ? Color::White : Color::Black, k};
  }
  p.side_to_move = coin(rng) ? Color::White : Color::Black;
  return p;
}

}  // namespace pawn::testing
