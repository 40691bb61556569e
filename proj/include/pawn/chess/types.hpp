#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pawn {

enum class Color : std::uint8_t { White = 0, Black = 1 };

constexpr Color operator~(Color c) { return c == Color::White ? Color::Black : Color::White; }

enum class PieceKind : std::uint8_t { Pawn = 0, Knight, Bishop, Rook, Queen, King };

inline constexpr std::array<PieceKind, 6> kAllKinds = {
    PieceKind::Pawn, PieceKind::Knight, PieceKind::Bishop,
    PieceKind::Rook, PieceKind::Queen,  PieceKind::King};

/// The five kinds that carry an ablation value.
inline constexpr std::array<PieceKind, 5> kValuedKinds = {
    PieceKind::Pawn, PieceKind::Knight, PieceKind::Bishop, PieceKind::Rook, PieceKind::Queen};

constexpr char kind_letter(PieceKind k) {
  constexpr std::array<char, 6> letters = {'P', 'N', 'B', 'R', 'Q', 'K'};
  return letters[static_cast<int>(k)];
}

constexpr std::optional<PieceKind> kind_from_letter(char upper) {
  switch (upper) {
    case 'P': return PieceKind::Pawn;
    case 'N': return PieceKind::Knight;
    case 'B': return PieceKind::Bishop;
    case 'R': return PieceKind::Rook;
    case 'Q': return PieceKind::Queen;
    case 'K': return PieceKind::King;
    default: return std::nullopt;
  }
}

inline std::string kind_name(PieceKind k) {
  constexpr std::array<const char*, 6> names = {"pawn", "knight", "bishop", "rook", "queen", "king"};
  return names[static_cast<int>(k)];
}

struct Piece {
  Color color = Color::White;
  PieceKind kind = PieceKind::Pawn;

  /// Index in [0, 12): White pieces 0..5, Black pieces 6..11, kind order P N B R Q K.
  constexpr int index() const { return static_cast<int>(color) * 6 + static_cast<int>(kind); }
  static constexpr Piece from_index(int i) {
    return {i < 6 ? Color::White : Color::Black, static_cast<PieceKind>(i % 6)};
  }

  /// FEN letter: uppercase for White, lowercase for Black.
  constexpr char fen_char() const {
    char c = kind_letter(kind);
    return color == Color::White ? c : static_cast<char>(c - 'A' + 'a');
  }

  static constexpr std::optional<Piece> from_fen_char(char c) {
    if (c >= 'A' && c <= 'Z') {
      if (auto k = kind_from_letter(c)) return Piece{Color::White, *k};
    } else if (c >= 'a' && c <= 'z') {
      if (auto k = kind_from_letter(static_cast<char>(c - 'a' + 'A'))) return Piece{Color::Black, *k};
    }
    return std::nullopt;
  }

  friend constexpr bool operator==(Piece, Piece) = default;
};

/// Board coordinate from White's side: file a=0..h=7, rank 1=0..8=7.
class Square {
 public:
  constexpr Square() = default;
  constexpr Square(int file, int rank) : file_(static_cast<std::int8_t>(file)), rank_(static_cast<std::int8_t>(rank)) {
    if (file < 0 || file > 7 || rank < 0 || rank > 7) throw std::out_of_range("square coordinate outside 0..7");
  }

  static constexpr Square from_index(int index) { return Square(index % 8, index / 8); }

  static constexpr std::optional<Square> parse(std::string_view s) {
    if (s.size() != 2 || s[0] < 'a' || s[0] > 'h' || s[1] < '1' || s[1] > '8') return std::nullopt;
    return Square(s[0] - 'a', s[1] - '1');
  }

  constexpr int file() const { return file_; }
  constexpr int rank() const { return rank_; }
  constexpr int index() const { return rank_ * 8 + file_; }

  std::string algebraic() const {
    return {static_cast<char>('a' + file_), static_cast<char>('1' + rank_)};
  }

  friend constexpr bool operator==(Square, Square) = default;
  friend constexpr auto operator<=>(Square a, Square b) { return a.index() <=> b.index(); }

 private:
  std::int8_t file_ = 0;
  std::int8_t rank_ = 0;
};

/// Base class for malformed chess input (FEN, SAN, PGN).
class ChessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pawn
