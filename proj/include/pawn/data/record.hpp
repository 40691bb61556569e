#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pawn/chess/types.hpp"

namespace pawn {

enum RecordFlag : std::uint8_t {
  kMateInvolved = 1 << 0,
  kReducedDepth = 1 << 1,
};

/// One labeled ablation: value_cp = eval_base_cp - eval_ablated_cp.
struct PieceValueRecord {
  std::string game_id;
  std::string fen;
  Square square;
  Piece piece;
  int value_cp = 0;
  int eval_base_cp = 0;
  int eval_ablated_cp = 0;
  std::uint8_t flags = 0;

  bool mate_involved() const { return flags & kMateInvolved; }
  bool reduced_depth() const { return flags & kReducedDepth; }

  friend bool operator==(const PieceValueRecord&, const PieceValueRecord&) = default;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kDatasetHeader = "game_id,fen,square,piece,value_cp,eval_base_cp,eval_ablated_cp,flags";

inline std::string flags_to_string(std::uint8_t flags) {
  std::string s;
  if (flags & kMateInvolved) s += "mate_involved";
  if (flags & kReducedDepth) s += s.empty() ? "reduced_depth" : "|reduced_depth";
  return s;
}

inline std::uint8_t flags_from_string(std::string_view s) {
  std::uint8_t f = 0;
  while (!s.empty()) {
    const auto bar = s.find('|');
    const auto tok = s.substr(0, bar);
    if (tok == "mate_involved") f |= kMateInvolved;
    else if (tok == "reduced_depth") f |= kReducedDepth;
    else throw DatasetError("unknown record flag '" + std::string(tok) + "'");
    if (bar == std::string_view::npos) break;
    s.remove_prefix(bar + 1);
  }
  return f;
}

inline void write_record(std::ostream& out, const PieceValueRecord& r) {
  out << r.game_id << ',' << r.fen << ',' << r.square.algebraic() << ',' << r.piece.fen_char() << ','
      << r.value_cp << ',' << r.eval_base_cp << ',' << r.eval_ablated_cp << ',' << flags_to_string(r.flags) << '\n';
}

inline void write_dataset(std::ostream& out, const std::vector<PieceValueRecord>& records) {
  out << kDatasetHeader << '\n';
  for (const auto& r : records) write_record(out, r);
}

inline void write_dataset(const std::string& path, const std::vector<PieceValueRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write " + path);
  write_dataset(out, records);
  if (!out) throw DatasetError("write failed: " + path);
}

namespace detail {

inline int parse_int_field(const std::string& s, std::size_t line_no, const char* what) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != s.size()) throw DatasetError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  return v;
}

}  // namespace detail

/// Parses one CSV row. Checks the ablation identity and the no-king rule.
inline PieceValueRecord parse_record(const std::string& line, std::size_t line_no = 0) {
  std::vector<std::string> f;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) f.push_back(cell);
  if (!line.empty() && line.back() == ',') f.emplace_back();
  if (f.size() != 8)
    throw DatasetError("line " + std::to_string(line_no) + ": expected 8 fields, got " + std::to_string(f.size()));
  PieceValueRecord r;
  r.game_id = f[0];
  r.fen = f[1];
  const auto where = "line " + std::to_string(line_no) + ": ";
  const auto sq = Square::parse(f[2]);
  if (!sq) throw DatasetError(where + "bad square '" + f[2] + "'");
  r.square = *sq;
  if (f[3].size() != 1) throw DatasetError(where + "bad piece '" + f[3] + "'");
  const auto pc = Piece::from_fen_char(f[3][0]);
  if (!pc) throw DatasetError(where + "bad piece '" + f[3] + "'");
  if (pc->kind == PieceKind::King) throw DatasetError(where + "king records are not allowed");
  r.piece = *pc;
  r.value_cp = detail::parse_int_field(f[4], line_no, "value_cp");
  r.eval_base_cp = detail::parse_int_field(f[5], line_no, "eval_base_cp");
  r.eval_ablated_cp = detail::parse_int_field(f[6], line_no, "eval_ablated_cp");
  if (r.value_cp != r.eval_base_cp - r.eval_ablated_cp)
    throw DatasetError(where + "value_cp != eval_base_cp - eval_ablated_cp");
  try {
    r.flags = flags_from_string(f[7]);
  } catch (const DatasetError& e) {
    throw DatasetError(where + e.what());
  }
  return r;
}

inline std::vector<PieceValueRecord> read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DatasetError("empty dataset");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDatasetHeader) throw DatasetError("unexpected dataset header: " + line);
  std::vector<PieceValueRecord> out;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(parse_record(line, n));
  }
  return out;
}

inline std::vector<PieceValueRecord> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot read " + path);
  return read_dataset(in);
}

}  // namespace pawn
