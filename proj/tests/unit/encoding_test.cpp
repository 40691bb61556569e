#include <gtest/gtest.h>

#include <random>
#include <set>

#include "chess_oracles.hpp"
#include "pawn/chess.hpp"
#include "pawn/encoding.hpp"

namespace pawn {
namespace {

TEST(BoardEncoding, StartPosition) {
  const BoardTensor t = encode_board(start_position());
  EXPECT_EQ(t.sum(), 32);
  for (int f = 0; f < 8; ++f) {
    EXPECT_EQ(t.at(0, 1, f), 1);   // white pawns on rank index 1
    EXPECT_EQ(t.at(6, 6, f), 1);   // black pawns on rank index 6
  }
  EXPECT_EQ(t.at(5, 0, 4), 1);   // WK e1
  EXPECT_EQ(t.at(11, 7, 4), 1);  // BK e8
  EXPECT_EQ(t.at(4, 0, 3), 1);   // WQ d1
}

TEST(BoardEncoding, KingsOnly) {
  const BoardTensor t = encode_board(parse_fen("8/8/8/4k3/8/4K3/8/8 w - - 0 1"));
  EXPECT_EQ(t.sum(), 2);
  EXPECT_EQ(t.at(5, 2, 4), 1);
  EXPECT_EQ(t.at(11, 4, 4), 1);
}

TEST(BoardEncoding, DecodingRecoversRandomPlacements) {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 1000; ++n) {
    const Position p = pawn::testing::random_placement(rng);
    const BoardTensor t = encode_board(p);
    EXPECT_EQ(t.sum(), p.piece_count());
    int king_w = 0, king_b = 0;
    for (int sq = 0; sq < 64; ++sq) {
      int col = 0;
      for (int c = 0; c < 12; ++c) col += t.data[static_cast<std::size_t>(c * 64 + sq)];
      ASSERT_LE(col, 1);
      king_w += t.data[static_cast<std::size_t>(5 * 64 + sq)];
      king_b += t.data[static_cast<std::size_t>(11 * 64 + sq)];
    }
    EXPECT_EQ(king_w, 1);
    EXPECT_EQ(king_b, 1);
    EXPECT_EQ(decode_board(t.data.data()), p.board);
  }
}

TEST(PieceEncoding, WhitePawnE2Dim14) {
  const auto v = encode_piece(Piece{Color::White, PieceKind::Pawn}, *Square::parse("e2"), FeatureVariant::Dim14);
  ASSERT_EQ(v.size(), 14u);
  EXPECT_EQ(v[0], 1);
  for (int i = 1; i < 10; ++i) EXPECT_EQ(v[static_cast<std::size_t>(i)], 0);
  EXPECT_DOUBLE_EQ(v[10], 4.0 / 7);
  EXPECT_DOUBLE_EQ(v[11], 1.0 / 7);
  EXPECT_DOUBLE_EQ(v[12], (4.0 / 7) * (4.0 / 7));
  EXPECT_DOUBLE_EQ(v[13], (1.0 / 7) * (1.0 / 7));
}

TEST(PieceEncoding, BlackQueenD8Dim12) {
  const auto v = encode_piece(Piece{Color::Black, PieceKind::Queen}, *Square::parse("d8"), FeatureVariant::Dim12);
  ASSERT_EQ(v.size(), 12u);
  EXPECT_EQ(v[9], 1);
  EXPECT_DOUBLE_EQ(v[10], 3.0 / 7);
  EXPECT_DOUBLE_EQ(v[11], 1.0);
}

TEST(PieceEncoding, KingsAreRejected) {
  EXPECT_THROW(encode_piece(Piece{Color::White, PieceKind::King}, Square(4, 0), FeatureVariant::Dim12),
               KingNotEncodable);
  EXPECT_THROW(encode_piece(Piece{Color::Black, PieceKind::King}, Square(4, 7), FeatureVariant::Dim14),
               KingNotEncodable);
}

TEST(PieceEncoding, InjectiveAndPrefixConsistent) {
  for (auto variant : {FeatureVariant::Dim12, FeatureVariant::Dim14}) {
    std::set<std::vector<double>> seen;
    for (int pi = 0; pi < 12; ++pi) {
      const Piece p = Piece::from_index(pi);
      if (p.kind == PieceKind::King) continue;
      for (int sq = 0; sq < 64; ++sq) {
        const auto v = encode_piece(p, Square::from_index(sq), variant);
        EXPECT_TRUE(seen.insert(v).second);
        double hot = 0;
        for (int i = 0; i < 10; ++i) hot += v[static_cast<std::size_t>(i)];
        EXPECT_EQ(hot, 1);
        for (std::size_t i = 10; i < v.size(); ++i) {
          EXPECT_GE(v[i], 0);
          EXPECT_LE(v[i], 1);
        }
        if (variant == FeatureVariant::Dim14) {
          const auto short_v = encode_piece(p, Square::from_index(sq), FeatureVariant::Dim12);
          EXPECT_TRUE(std::equal(short_v.begin(), short_v.end(), v.begin()));
        }
      }
    }
    EXPECT_EQ(seen.size(), 640u);
  }
}

}  // namespace
}  // namespace pawn
