#pragma once

#include <array>
#include <bit>
#include <cstdint>

#include "pawn/chess/position.hpp"

namespace pawn {

using Bitboard = std::uint64_t;

constexpr Bitboard bit(int sq) { return Bitboard{1} << sq; }

namespace detail {

constexpr Bitboard step_mask(int sq, const int (&deltas)[8][2]) {
  Bitboard out = 0;
  const int f = sq % 8, r = sq / 8;
  for (const auto& d : deltas) {
    const int nf = f + d[0], nr = r + d[1];
    if (nf >= 0 && nf < 8 && nr >= 0 && nr < 8) out |= bit(nr * 8 + nf);
  }
  return out;
}

inline constexpr int kKnightDeltas[8][2] = {{1, 2}, {2, 1}, {2, -1}, {1, -2}, {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}};
inline constexpr int kKingDeltas[8][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};

// Ray directions, first four point to higher square indices.
enum Dir { North, East, NorthEast, NorthWest, South, West, SouthWest, SouthEast };
inline constexpr int kDirDelta[8][2] = {{0, 1}, {1, 0}, {1, 1}, {-1, 1}, {0, -1}, {-1, 0}, {-1, -1}, {1, -1}};

constexpr std::array<std::array<Bitboard, 64>, 8> make_rays() {
  std::array<std::array<Bitboard, 64>, 8> rays{};
  for (int d = 0; d < 8; ++d) {
    for (int sq = 0; sq < 64; ++sq) {
      Bitboard b = 0;
      int f = sq % 8 + kDirDelta[d][0], r = sq / 8 + kDirDelta[d][1];
      while (f >= 0 && f < 8 && r >= 0 && r < 8) {
        b |= bit(r * 8 + f);
        f += kDirDelta[d][0];
        r += kDirDelta[d][1];
      }
      rays[static_cast<std::size_t>(d)][static_cast<std::size_t>(sq)] = b;
    }
  }
  return rays;
}

constexpr std::array<Bitboard, 64> make_steps(const int (&deltas)[8][2]) {
  std::array<Bitboard, 64> t{};
  for (int sq = 0; sq < 64; ++sq) t[static_cast<std::size_t>(sq)] = step_mask(sq, deltas);
  return t;
}

// pawn_attacks[c][sq]: squares attacked by a pawn of color c standing on sq.
constexpr std::array<std::array<Bitboard, 64>, 2> make_pawn_attacks() {
  std::array<std::array<Bitboard, 64>, 2> t{};
  for (int sq = 0; sq < 64; ++sq) {
    const int f = sq % 8, r = sq / 8;
    for (int c = 0; c < 2; ++c) {
      const int nr = c == 0 ? r + 1 : r - 1;
      Bitboard b = 0;
      if (nr >= 0 && nr < 8) {
        if (f > 0) b |= bit(nr * 8 + f - 1);
        if (f < 7) b |= bit(nr * 8 + f + 1);
      }
      t[static_cast<std::size_t>(c)][static_cast<std::size_t>(sq)] = b;
    }
  }
  return t;
}

inline constexpr auto kRays = make_rays();
inline constexpr auto kKnightAttacks = make_steps(kKnightDeltas);
inline constexpr auto kKingAttacks = make_steps(kKingDeltas);
inline constexpr auto kPawnAttacks = make_pawn_attacks();

inline Bitboard ray_attacks(int sq, int dir, Bitboard occupied) {
  const Bitboard ray = kRays[static_cast<std::size_t>(dir)][static_cast<std::size_t>(sq)];
  const Bitboard blockers = ray & occupied;
  if (!blockers) return ray;
  const int first = dir < 4 ? std::countr_zero(blockers) : 63 - std::countl_zero(blockers);
  return ray ^ kRays[static_cast<std::size_t>(dir)][static_cast<std::size_t>(first)];
}

}  // namespace detail

inline Bitboard rook_attacks(int sq, Bitboard occ) {
  using namespace detail;
  return ray_attacks(sq, North, occ) | ray_attacks(sq, East, occ) | ray_attacks(sq, South, occ) |
         ray_attacks(sq, West, occ);
}

inline Bitboard bishop_attacks(int sq, Bitboard occ) {
  using namespace detail;
  return ray_attacks(sq, NorthEast, occ) | ray_attacks(sq, NorthWest, occ) | ray_attacks(sq, SouthWest, occ) |
         ray_attacks(sq, SouthEast, occ);
}

inline Bitboard knight_attacks(int sq) { return detail::kKnightAttacks[static_cast<std::size_t>(sq)]; }
inline Bitboard king_attacks(int sq) { return detail::kKingAttacks[static_cast<std::size_t>(sq)]; }
inline Bitboard pawn_attacks(Color c, int sq) {
  return detail::kPawnAttacks[static_cast<std::size_t>(c)][static_cast<std::size_t>(sq)];
}

/// Per-piece bitboards derived from a Position's mailbox.
struct BoardBits {
  std::array<Bitboard, 12> pieces{};
  std::array<Bitboard, 2> by_color{};
  Bitboard occupied = 0;

  explicit BoardBits(const Position& p) {
    for (int i = 0; i < 64; ++i) {
      const auto& pc = p.board[static_cast<std::size_t>(i)];
      if (!pc) continue;
      pieces[static_cast<std::size_t>(pc->index())] |= bit(i);
      by_color[static_cast<std::size_t>(pc->color)] |= bit(i);
      occupied |= bit(i);
    }
  }

  Bitboard of(Color c, PieceKind k) const { return pieces[static_cast<std::size_t>(Piece{c, k}.index())]; }
};

/// True when any piece of color `by` attacks `sq`, looking outward from the target.
inline bool is_attacked(const BoardBits& b, int sq, Color by) {
  if (pawn_attacks(~by, sq) & b.of(by, PieceKind::Pawn)) return true;
  if (knight_attacks(sq) & b.of(by, PieceKind::Knight)) return true;
  if (king_attacks(sq) & b.of(by, PieceKind::King)) return true;
  const Bitboard queens = b.of(by, PieceKind::Queen);
  if (rook_attacks(sq, b.occupied) & (b.of(by, PieceKind::Rook) | queens)) return true;
  if (bishop_attacks(sq, b.occupied) & (b.of(by, PieceKind::Bishop) | queens)) return true;
  return false;
}

inline bool is_attacked(const Position& p, Square sq, Color by) { return is_attacked(BoardBits(p), sq.index(), by); }

/// True when the king of color `c` is attacked.
inline bool in_check(const Position& p, Color c) {
  const BoardBits b(p);
  const Bitboard king = b.of(c, PieceKind::King);
  if (!king) return false;
  return is_attacked(b, std::countr_zero(king), ~c);
}

/// True iff the king of the side NOT to move is attacked by the side to move,
/// i.e. the position could never arise in play.
inline bool opponent_in_check(const Position& p) { return in_check(p, ~p.side_to_move); }

}  // namespace pawn
