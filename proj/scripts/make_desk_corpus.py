#!/usr/bin/env python3
"""Generate the small self-play PGN corpus used by the integration tests.

Games start with a few random legal moves and continue with shallow engine
play, so openings vary while middlegames stay plausible. The companion
oracle file records, per game, the ply count and final FEN as computed by
python-chess, an implementation independent of ours.

usage: make_desk_corpus.py ENGINE OUT.pgn OUT_oracle.tsv [--games N] [--plies N]
"""
import argparse
import random

import chess
import chess.engine
import chess.pgn


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("engine")
    ap.add_argument("pgn")
    ap.add_argument("oracle")
    ap.add_argument("--games", type=int, default=50)
    ap.add_argument("--plies", type=int, default=60)
    ap.add_argument("--seed", type=int, default=2025)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    engine = chess.engine.SimpleEngine.popen_uci(args.engine)
    with open(args.pgn, "w") as pgn_out, open(args.oracle, "w") as oracle_out:
        for g in range(args.games):
            board = chess.Board()
            game = chess.pgn.Game()
            game.headers["Event"] = "Desk corpus"
            game.headers["Site"] = "local"
            game.headers["Date"] = "2025.01.01"
            game.headers["Round"] = str(g + 1)
            game.headers["White"] = "Engine A"
            game.headers["Black"] = "Engine B"
            node = game
            opening = rng.randint(2, 6)
            target = rng.randint(args.plies // 2, args.plies)
            while not board.is_game_over() and board.ply() < target:
                if board.ply() < opening:
                    move = rng.choice(list(board.legal_moves))
                else:
                    res = engine.play(board, chess.engine.Limit(depth=rng.randint(3, 6)))
                    move = res.move
                node = node.add_variation(move)
                board.push(move)
            game.headers["Result"] = board.result() if board.is_game_over() else "*"
            print(game, file=pgn_out, end="\n\n")
            oracle_out.write(f"{g + 1}\t{board.ply()}\t{board.fen(en_passant='fen')}\n")
    engine.quit()


if __name__ == "__main__":
    main()
