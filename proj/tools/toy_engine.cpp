// Minimal UCI engine used by the test suites when no real engine is around.
// Scores are a static material/placement/mobility sum, so results are fully
// deterministic. Flags inject the failure modes the client must survive:
//
//   --delay-ms N     sleep N ms before each depth line (exercises timeouts)
//   --ignore-quit    never exit on quit or EOF (exercises force-kill)
//   --crash-after N  exit abruptly on the N-th go command
//   --mate N         report "score mate N" instead of a cp score
//   --name S         engine id name

#include <poll.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "pawn/chess.hpp"

namespace {

using namespace pawn;

struct Flags {
  int delay_ms = 0;
  bool ignore_quit = false;
  int crash_after = -1;
  std::optional<int> mate;
  std::string name = "pawn-toy-engine 1.0";
};

int placement_bonus(Piece pc, Square sq) {
  const int rank = pc.color == Color::White ? sq.rank() : 7 - sq.rank();
  const int center = 6 - (std::abs(2 * sq.file() - 7) + std::abs(2 * sq.rank() - 7)) / 2;
  switch (pc.kind) {
    case PieceKind::Pawn: return 6 * rank + (sq.file() >= 2 && sq.file() <= 5 ? 4 : 0);
    case PieceKind::Knight: return 6 * center - 10;
    case PieceKind::Bishop: return 3 * center;
    case PieceKind::Rook: return rank == 6 ? 20 : 0;
    case PieceKind::Queen: return center;
    case PieceKind::King: return rank == 0 ? 10 : -5 * rank;
  }
  return 0;
}

int material(PieceKind k) {
  constexpr int v[6] = {100, 310, 330, 500, 950, 0};
  return v[static_cast<int>(k)];
}

/// Static score from the side to move's point of view.
int static_eval(const Position& p) {
  int white = 0;
  for (int i = 0; i < 64; ++i) {
    const auto& pc = p.board[static_cast<std::size_t>(i)];
    if (!pc) continue;
    const int s = material(pc->kind) + placement_bonus(*pc, Square::from_index(i));
    white += pc->color == Color::White ? s : -s;
  }
  Position other = p;
  other.side_to_move = ~p.side_to_move;
  other.en_passant.reset();
  const int mobility = static_cast<int>(pseudo_legal_moves(p).size()) -
                       static_cast<int>(pseudo_legal_moves(other).size());
  const int stm = p.side_to_move == Color::White ? white : -white;
  return stm + 3 * mobility + 10;  // small tempo bonus
}

bool stdin_has_stop(int wait_ms, std::string& pending) {
  pollfd pfd{STDIN_FILENO, POLLIN, 0};
  if (::poll(&pfd, 1, wait_ms) <= 0) return false;
  std::string line;
  if (!std::getline(std::cin, line)) return false;
  if (line == "stop") return true;
  pending = line;
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  Flags f;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    auto next = [&] { return i + 1 < argc ? std::string(argv[++i]) : std::string(); };
    if (a == "--delay-ms") f.delay_ms = std::stoi(next());
    else if (a == "--ignore-quit") f.ignore_quit = true;
    else if (a == "--crash-after") f.crash_after = std::stoi(next());
    else if (a == "--mate") f.mate = std::stoi(next());
    else if (a == "--name") f.name = next();
  }
  std::cout.setf(std::ios::unitbuf);

  Position pos = start_position();
  int gos = 0;
  std::string line, pending;
  while (true) {
    if (!pending.empty()) {
      line = std::exchange(pending, {});
    } else if (!std::getline(std::cin, line)) {
      break;
    }
    std::istringstream in(line);
    std::string cmd;
    in >> cmd;
    if (cmd == "uci") {
      std::cout << "id name " << f.name << "\nid author pawn tests\n"
                << "option name Threads type spin default 1 min 1 max 1\n"
                << "option name Hash type spin default 16 min 1 max 4096\n"
                << "uciok\n";
    } else if (cmd == "isready") {
      std::cout << "readyok\n";
    } else if (cmd == "position") {
      std::string kind;
      in >> kind;
      std::string rest;
      std::getline(in, rest);
      std::string fen = rest;
      std::string moves;
      if (auto m = rest.find(" moves "); m != std::string::npos) {
        fen = rest.substr(0, m);
        moves = rest.substr(m + 7);
      }
      try {
        pos = kind == "startpos" ? start_position() : parse_fen(fen);
        std::istringstream ms(moves);
        std::string uci;
        while (ms >> uci) {
          for (const Move& mv : legal_moves(pos))
            if (mv.uci() == uci) {
              pos = make_move(pos, mv);
              break;
            }
        }
      } catch (const std::exception& e) {
        std::cout << "info string bad position: " << e.what() << "\n";
      }
    } else if (cmd == "go") {
      if (++gos == f.crash_after) std::_Exit(3);
      std::string tok;
      int depth = 1;
      while (in >> tok)
        if (tok == "depth") in >> depth;
      const auto moves = legal_moves(pos);
      if (moves.empty()) {
        std::cout << "info depth 0 score " << (in_check(pos, pos.side_to_move) ? "mate 0" : "cp 0") << "\n"
                  << "bestmove (none)\n";
        continue;
      }
      const int score = static_eval(pos);
      bool stopped = false;
      for (int d = 1; d <= depth && !stopped; ++d) {
        if (f.delay_ms > 0 && stdin_has_stop(f.delay_ms, pending)) {
          stopped = true;
          break;
        }
        std::cout << "info depth " << d << " seldepth " << d << " multipv 1 score ";
        if (f.mate) std::cout << "mate " << *f.mate;
        else std::cout << "cp " << score;
        std::cout << " nodes " << 100 * d << " pv " << moves.front().uci() << "\n";
      }
      std::cout << "bestmove " << moves.front().uci() << "\n";
    } else if (cmd == "quit") {
      if (!f.ignore_quit) return 0;
    }
  }
  if (f.ignore_quit) {
    while (true) std::this_thread::sleep_for(std::chrono::seconds(1));
  }
  return 0;
}
