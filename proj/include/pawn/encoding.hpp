#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pawn/chess/position.hpp"

namespace pawn {

/// 12x8x8 occupancy planes. Channel = Piece::index(), i.e. WP,WN,WB,WR,WQ,WK,
/// BP,BN,BB,BR,BQ,BK; cell index = channel*64 + rank*8 + file.
struct BoardTensor {
  static constexpr int kChannels = 12;
  static constexpr int kSize = kChannels * 64;
  std::array<std::uint8_t, kSize> data{};

  std::uint8_t at(int channel, int rank, int file) const { return data[offset(channel, rank, file)]; }
  static constexpr std::size_t offset(int channel, int rank, int file) {
    return static_cast<std::size_t>(channel * 64 + rank * 8 + file);
  }
  int sum() const {
    int s = 0;
    for (auto v : data) s += v;
    return s;
  }
  friend bool operator==(const BoardTensor&, const BoardTensor&) = default;
};

inline BoardTensor encode_board(const Position& p) {
  BoardTensor t;
  for (int i = 0; i < 64; ++i)
    if (const auto& pc = p.board[static_cast<std::size_t>(i)])
      t.data[BoardTensor::offset(pc->index(), i / 8, i % 8)] = 1;
  return t;
}

/// Inverse of encode_board on probabilities: per square, the most likely
/// channel if it reaches `threshold`, otherwise empty.
template <class T>
std::array<std::optional<Piece>, 64> decode_board(const T* probs, double threshold = 0.5) {
  std::array<std::optional<Piece>, 64> out;
  for (int sq = 0; sq < 64; ++sq) {
    int best = -1;
    double best_p = threshold;
    for (int c = 0; c < BoardTensor::kChannels; ++c) {
      const double v = static_cast<double>(probs[c * 64 + sq]);
      if (v >= best_p) {
        best = c;
        best_p = v;
      }
    }
    if (best >= 0) out[static_cast<std::size_t>(sq)] = Piece::from_index(best);
  }
  return out;
}

enum class FeatureVariant { Dim12 = 12, Dim14 = 14 };

inline constexpr int feature_dim(FeatureVariant v) { return static_cast<int>(v); }

class KingNotEncodable : public std::invalid_argument {
 public:
  KingNotEncodable() : std::invalid_argument("kings have no piece features") {}
};

/// One-hot slot in [WP,WN,WB,WR,WQ,BP,BN,BB,BR,BQ].
inline int one_hot_index(Piece p) {
  if (p.kind == PieceKind::King) throw KingNotEncodable();
  return static_cast<int>(p.color) * 5 + static_cast<int>(p.kind);
}

/// Writes the per-piece features into out[0..dim): one-hot, file/7, rank/7,
/// and for Dim14 their squares.
template <class T>
void encode_piece_into(Piece piece, Square sq, FeatureVariant variant, T* out) {
  const int hot = one_hot_index(piece);
  for (int i = 0; i < 10; ++i) out[i] = T(i == hot ? 1 : 0);
  const T f = T(sq.file()) / T(7);
  const T r = T(sq.rank()) / T(7);
  out[10] = f;
  out[11] = r;
  if (variant == FeatureVariant::Dim14) {
    out[12] = f * f;
    out[13] = r * r;
  }
}

template <class T = double>
std::vector<T> encode_piece(Piece piece, Square sq, FeatureVariant variant) {
  std::vector<T> v(static_cast<std::size_t>(feature_dim(variant)));
  encode_piece_into(piece, sq, variant, v.data());
  return v;
}

}  // namespace pawn
