#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "pawn/data/record.hpp"

namespace pawn {

/// Z-score transform fitted on training values.
struct Normalizer {
  double mean = 0.0;
  double std = 1.0;

  double apply(double v) const { return (v - mean) / std; }
  double invert(double z) const { return z * std + mean; }
};

/// Population mean and standard deviation (divide by n).
inline Normalizer fit_normalizer(const std::vector<double>& values) {
  if (values.size() < 2) throw std::invalid_argument("normalizer needs at least 2 values");
  long double sum = 0;
  for (double v : values) sum += v;
  const long double mean = sum / static_cast<long double>(values.size());
  long double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const long double var = ss / static_cast<long double>(values.size());
  if (!(var > 0)) throw std::invalid_argument("normalizer: values have zero variance");
  return {static_cast<double>(mean), static_cast<double>(std::sqrt(var))};
}

inline Normalizer fit_normalizer(const std::vector<PieceValueRecord>& train) {
  std::vector<double> v;
  v.reserve(train.size());
  for (const auto& r : train) v.push_back(r.value_cp);
  return fit_normalizer(v);
}

/// Standard material in cp, indexed by PieceKind (king unused).
inline constexpr std::array<int, 6> kStandardMaterialCp = {100, 300, 300, 500, 1000, 0};

struct CapResult {
  std::vector<PieceValueRecord> records;
  std::array<std::size_t, 6> capped{};  // per PieceKind
};

/// Clamps each value to +-multiplier * standard material of its kind.
/// Only value_cp is clamped; the raw engine evaluations are kept, so the
/// ablation identity no longer holds for capped rows.
inline CapResult cap_values(const std::vector<PieceValueRecord>& records, double multiplier) {
  if (!(multiplier > 0)) throw std::invalid_argument("cap multiplier must be > 0");
  CapResult out;
  out.records = records;
  for (auto& r : out.records) {
    const int k = static_cast<int>(r.piece.kind);
    const double limit = multiplier * kStandardMaterialCp[static_cast<std::size_t>(k)];
    const int hi = static_cast<int>(std::floor(limit));
    if (r.value_cp > hi || r.value_cp < -hi) {
      r.value_cp = r.value_cp > 0 ? hi : -hi;
      ++out.capped[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

struct PieceStat {
  double mean_cp = 0;
  double median_cp = 0;
  std::size_t count = 0;
};

/// Per (color, kind) statistics keyed by Piece::index().
struct PieceStats {
  std::map<int, PieceStat> by_piece;

  const PieceStat* find(Piece p) const {
    auto it = by_piece.find(p.index());
    return it == by_piece.end() ? nullptr : &it->second;
  }
  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& [_, s] : by_piece) n += s.count;
    return n;
  }
};

/// Lower median for even counts.
inline double lower_median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

inline PieceStats compute_stats(const std::vector<PieceValueRecord>& records) {
  if (records.empty()) throw std::invalid_argument("stats of an empty dataset");
  std::map<int, std::vector<double>> values;
  for (const auto& r : records) values[r.piece.index()].push_back(r.value_cp);
  PieceStats out;
  for (auto& [idx, v] : values) {
    long double sum = 0;
    for (double x : v) sum += x;
    PieceStat s;
    s.count = v.size();
    s.mean_cp = static_cast<double>(sum / static_cast<long double>(v.size()));
    s.median_cp = lower_median(std::move(v));
    out.by_piece[idx] = s;
  }
  return out;
}

/// Pawn-relative value per kind from the absolute medians of both colours.
inline std::map<PieceKind, double> derive_valuation(const PieceStats& stats) {
  auto abs_median = [&](PieceKind k) {
    const PieceStat* w = stats.find({Color::White, k});
    const PieceStat* b = stats.find({Color::Black, k});
    if (!w || !b)
      throw std::invalid_argument(std::string("valuation needs both colours of ") + kind_name(k));
    return (std::abs(w->median_cp) + std::abs(b->median_cp)) / 2.0;
  };
  const double pawn = abs_median(PieceKind::Pawn);
  if (pawn == 0) throw std::invalid_argument("pawn median is zero");
  std::map<PieceKind, double> out;
  for (PieceKind k : kValuedKinds) out[k] = abs_median(k) / pawn;
  return out;
}

}  // namespace pawn
