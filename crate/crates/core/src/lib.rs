//! Game-tree search workbench: desk-scale games, heuristic evaluations,
//! depth-bounded and best-first minimax searches, Monte Carlo tree search,
//! an integrated solver, a tournament arena and its statistics.

pub mod arena;
pub mod engine;
pub mod eval;
pub mod game;
pub mod search;
pub mod solver;
pub mod stats;
pub mod tt;
pub mod verify;
