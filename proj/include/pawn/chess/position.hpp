#pragma once

#include <array>
#include <charconv>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pawn/chess/types.hpp"

namespace pawn {

class FenError : public ChessError {
 public:
  using ChessError::ChessError;
};

struct CastlingRights {
  bool white_king = false;
  bool white_queen = false;
  bool black_king = false;
  bool black_queen = false;

  constexpr bool any() const { return white_king || white_queen || black_king || black_queen; }
  friend constexpr bool operator==(CastlingRights, CastlingRights) = default;
};

/// Full game state. Value type; copy freely.
struct Position {
  std::array<std::optional<Piece>, 64> board{};
  Color side_to_move = Color::White;
  CastlingRights castling;
  std::optional<Square> en_passant;
  int halfmove_clock = 0;
  int fullmove_number = 1;

  const std::optional<Piece>& at(Square sq) const { return board[static_cast<std::size_t>(sq.index())]; }
  std::optional<Piece>& at(Square sq) { return board[static_cast<std::size_t>(sq.index())]; }

  int piece_count() const {
    int n = 0;
    for (const auto& p : board) n += p.has_value();
    return n;
  }

  std::optional<Square> king_square(Color c) const {
    for (int i = 0; i < 64; ++i) {
      const auto& p = board[static_cast<std::size_t>(i)];
      if (p && p->kind == PieceKind::King && p->color == c) return Square::from_index(i);
    }
    return std::nullopt;
  }

  friend bool operator==(const Position&, const Position&) = default;
};

inline constexpr std::string_view kStartFen = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline int parse_counter(std::string_view field, const char* what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || v < 0)
    throw FenError(std::string("invalid ") + what + " '" + std::string(field) + "'");
  return v;
}

}  // namespace detail

/// Checks the structural invariants every Position must satisfy; throws FenError.
inline void validate(const Position& p) {
  int kings[2] = {0, 0};
  for (int i = 0; i < 64; ++i) {
    const auto& pc = p.board[static_cast<std::size_t>(i)];
    if (!pc) continue;
    if (pc->kind == PieceKind::King) ++kings[static_cast<int>(pc->color)];
    if (pc->kind == PieceKind::Pawn && (i / 8 == 0 || i / 8 == 7))
      throw FenError("pawn on back rank at " + Square::from_index(i).algebraic());
  }
  if (kings[0] != 1 || kings[1] != 1)
    throw FenError("impossible king count (white " + std::to_string(kings[0]) + ", black " +
                   std::to_string(kings[1]) + ")");
  if (p.en_passant) {
    const int want = p.side_to_move == Color::White ? 5 : 2;
    if (p.en_passant->rank() != want)
      throw FenError("en passant square " + p.en_passant->algebraic() + " inconsistent with side to move");
  }
  auto has = [&](int file, int rank, Piece pc) {
    const auto& q = p.at(Square(file, rank));
    return q && *q == pc;
  };
  const Piece wk{Color::White, PieceKind::King}, bk{Color::Black, PieceKind::King};
  const Piece wr{Color::White, PieceKind::Rook}, br{Color::Black, PieceKind::Rook};
  if (p.castling.white_king && !(has(4, 0, wk) && has(7, 0, wr))) throw FenError("castling right K without king/rook");
  if (p.castling.white_queen && !(has(4, 0, wk) && has(0, 0, wr))) throw FenError("castling right Q without king/rook");
  if (p.castling.black_king && !(has(4, 7, bk) && has(7, 7, br))) throw FenError("castling right k without king/rook");
  if (p.castling.black_queen && !(has(4, 7, bk) && has(0, 7, br))) throw FenError("castling right q without king/rook");
  if (p.fullmove_number < 1) throw FenError("fullmove number must be >= 1");
}

inline Position parse_fen(std::string_view text) {
  const auto fields = detail::split_ws(text);
  if (fields.size() != 6)
    throw FenError("expected 6 fields, got " + std::to_string(fields.size()));

  Position p;
  int rank = 7, file = 0;
  for (char c : fields[0]) {
    if (c == '/') {
      if (file != 8) throw FenError("rank " + std::to_string(rank + 1) + " has " + std::to_string(file) + " files");
      if (--rank < 0) throw FenError("too many ranks");
      file = 0;
    } else if (c >= '0' && c <= '9') {
      if (c == '0') throw FenError("zero-length empty run");
      file += c - '0';
      if (file > 8) throw FenError("rank overflow on rank " + std::to_string(rank + 1));
    } else if (auto pc = Piece::from_fen_char(c)) {
      if (file >= 8) throw FenError("rank overflow on rank " + std::to_string(rank + 1));
      p.at(Square(file, rank)) = *pc;
      ++file;
    } else {
      throw FenError(std::string("invalid piece letter '") + c + "'");
    }
  }
  if (rank != 0 || file != 8) throw FenError("placement does not describe 8 full ranks");

  if (fields[1] == "w") p.side_to_move = Color::White;
  else if (fields[1] == "b") p.side_to_move = Color::Black;
  else throw FenError("invalid side to move '" + std::string(fields[1]) + "'");

  if (fields[2] != "-") {
    for (char c : fields[2]) {
      bool* flag = nullptr;
      switch (c) {
        case 'K': flag = &p.castling.white_king; break;
        case 'Q': flag = &p.castling.white_queen; break;
        case 'k': flag = &p.castling.black_king; break;
        case 'q': flag = &p.castling.black_queen; break;
        default: throw FenError(std::string("invalid castling flag '") + c + "'");
      }
      if (*flag) throw FenError("duplicate castling flag");
      *flag = true;
    }
  }

  if (fields[3] != "-") {
    auto sq = Square::parse(fields[3]);
    if (!sq || (sq->rank() != 2 && sq->rank() != 5))
      throw FenError("invalid en passant square '" + std::string(fields[3]) + "'");
    p.en_passant = sq;
  }

  p.halfmove_clock = detail::parse_counter(fields[4], "halfmove clock");
  p.fullmove_number = detail::parse_counter(fields[5], "fullmove number");
  validate(p);
  return p;
}

/// The first four FEN fields: placement, side, castling, en passant.
inline std::string fen_key(const Position& p) {
  std::string out;
  for (int rank = 7; rank >= 0; --rank) {
    int empty = 0;
    for (int file = 0; file < 8; ++file) {
      const auto& pc = p.at(Square(file, rank));
      if (!pc) {
        ++empty;
        continue;
      }
      if (empty) out += static_cast<char>('0' + empty);
      empty = 0;
      out += pc->fen_char();
    }
    if (empty) out += static_cast<char>('0' + empty);
    if (rank) out += '/';
  }
  out += p.side_to_move == Color::White ? " w " : " b ";
  if (!p.castling.any()) {
    out += '-';
  } else {
    if (p.castling.white_king) out += 'K';
    if (p.castling.white_queen) out += 'Q';
    if (p.castling.black_king) out += 'k';
    if (p.castling.black_queen) out += 'q';
  }
  out += ' ';
  out += p.en_passant ? p.en_passant->algebraic() : "-";
  return out;
}

inline std::string to_fen(const Position& p) {
  return fen_key(p) + ' ' + std::to_string(p.halfmove_clock) + ' ' + std::to_string(p.fullmove_number);
}

inline Position start_position() { return parse_fen(kStartFen); }

}  // namespace pawn
