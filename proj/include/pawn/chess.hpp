#pragma once

#include "pawn/chess/ablation.hpp"
#include "pawn/chess/attacks.hpp"
#include "pawn/chess/move.hpp"
#include "pawn/chess/pgn.hpp"
#include "pawn/chess/position.hpp"
#include "pawn/chess/san.hpp"
#include "pawn/chess/types.hpp"
