#!/usr/bin/env python3
"""Emit per-game ply counts and final FENs for a PGN file using python-chess.

The en passant field is written whenever a double pawn push just happened,
matching plain FEN rules rather than python-chess's legal-only default.

usage: pgn_oracle.py IN.pgn > OUT.tsv
"""
import sys

import chess.pgn

with open(sys.argv[1]) as f:
    n = 0
    while True:
        game = chess.pgn.read_game(f)
        if game is None:
            break
        n += 1
        board = game.board()
        plies = 0
        for move in game.mainline_moves():
            board.push(move)
            plies += 1
        print(f"{n}\t{plies}\t{board.fen(en_passant='fen')}")
