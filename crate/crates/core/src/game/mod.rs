//! Two-player zero-sum perfect-information game contract and the concrete
//! games used as benchmarks and oracles.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

mod breakthrough;
mod clobber;
mod hex;
mod othello;
pub mod random_tree;
mod tictactoe;

pub use breakthrough::Breakthrough;
pub use clobber::Clobber;
pub use hex::{hex_connection, Hex};
pub use othello::Othello;
pub use random_tree::{RandomTree, TreeCorpus};
pub use tictactoe::TicTacToe;

/// Default number of plies after which a match is adjudicated.
pub const DEFAULT_DRAW_CAP: u32 = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    First,
    Second,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::First => Player::Second,
            Player::Second => Player::First,
        }
    }

    /// `+1.0` for the first player, `-1.0` for the second. Multiplying a
    /// first-player-view value by this gives the value for `self`.
    pub fn sign(self) -> f64 {
        match self {
            Player::First => 1.0,
            Player::Second => -1.0,
        }
    }

    pub fn is_first(self) -> bool {
        self == Player::First
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::First => "first",
            Player::Second => "second",
        })
    }
}

impl FromStr for Player {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" | "1" | "x" => Ok(Player::First),
            "second" | "2" | "o" => Ok(Player::Second),
            other => Err(GameError::Notation(format!("unknown player `{other}`"))),
        }
    }
}

/// Game-specific move descriptor. Each game documents its own encoding; the
/// numeric order is the canonical action order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action(pub u16);

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Result of a finished game, seen from the first player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    FirstWins,
    Draw,
    SecondWins,
}

impl Outcome {
    pub fn from_sign(sign: i64) -> Outcome {
        match sign.signum() {
            1 => Outcome::FirstWins,
            -1 => Outcome::SecondWins,
            _ => Outcome::Draw,
        }
    }

    pub fn winner(player: Player) -> Outcome {
        match player {
            Player::First => Outcome::FirstWins,
            Player::Second => Outcome::SecondWins,
        }
    }

    /// `+1`, `0` or `-1`.
    pub fn score(self) -> i8 {
        match self {
            Outcome::FirstWins => 1,
            Outcome::Draw => 0,
            Outcome::SecondWins => -1,
        }
    }

    pub fn value(self) -> f64 {
        f64::from(self.score())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("illegal action {action} in position `{position}`")]
    IllegalAction { action: String, position: String },
    #[error("nothing to undo")]
    EmptyHistory,
    #[error("state is not terminal")]
    NotTerminal,
    #[error("state is terminal")]
    Terminal,
    #[error("invalid game spec: {0}")]
    InvalidSpec(String),
    #[error("notation: {0}")]
    Notation(String),
}

/// Mutable game position with apply/undo.
///
/// Values reported by [`Game::outcome`] are from the first player's point of
/// view. Every action flips the side to move.
pub trait Game: Clone + Send + Sync + fmt::Debug {
    fn to_move(&self) -> Player;

    /// Legal actions in canonical (ascending) order. Empty iff terminal.
    fn legal_actions(&self) -> Vec<Action>;

    fn apply(&mut self, action: Action) -> Result<(), GameError>;

    fn undo(&mut self) -> Result<(), GameError>;

    /// `Some` iff the state is terminal, including draw-cap adjudication.
    fn outcome(&self) -> Option<Outcome>;

    /// Stable 64-bit position key; includes the side to move.
    fn key(&self) -> u64;

    fn ply(&self) -> u32;

    fn is_terminal(&self) -> bool {
        self.outcome().is_some()
    }

    fn first_player(&self) -> bool {
        self.to_move().is_first()
    }

    fn terminal_value(&self) -> Result<i8, GameError> {
        self.outcome().map(Outcome::score).ok_or(GameError::NotTerminal)
    }

    fn format_action(&self, action: Action) -> String {
        action.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GameId {
    TicTacToe,
    Breakthrough,
    Othello8,
    Hex,
    Clobber,
}

impl GameId {
    pub const ALL: [GameId; 5] = [
        GameId::TicTacToe,
        GameId::Breakthrough,
        GameId::Othello8,
        GameId::Hex,
        GameId::Clobber,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GameId::TicTacToe => "tictactoe",
            GameId::Breakthrough => "breakthrough",
            GameId::Othello8 => "othello8",
            GameId::Hex => "hex",
            GameId::Clobber => "clobber",
        }
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GameId {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GameId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| GameError::InvalidSpec(format!("unknown game `{s}`")))
    }
}

/// Board dimensions and rule flags of one of the concrete games.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GameSpec {
    pub id: GameId,
    pub rows: usize,
    pub cols: usize,
    /// Hex swap rule.
    pub swap: bool,
    pub draw_cap: u32,
}

impl GameSpec {
    pub fn new(id: GameId) -> GameSpec {
        let (rows, cols) = match id {
            GameId::TicTacToe => (3, 3),
            GameId::Breakthrough => (6, 6),
            GameId::Othello8 => (8, 8),
            GameId::Hex => (7, 7),
            GameId::Clobber => (5, 6),
        };
        GameSpec {
            id,
            rows,
            cols,
            swap: false,
            draw_cap: DEFAULT_DRAW_CAP,
        }
    }

    pub fn with_size(mut self, rows: usize, cols: usize) -> GameSpec {
        self.rows = rows;
        self.cols = cols;
        self
    }

    pub fn with_swap(mut self, swap: bool) -> GameSpec {
        self.swap = swap;
        self
    }

    pub fn with_draw_cap(mut self, cap: u32) -> GameSpec {
        self.draw_cap = cap;
        self
    }

    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<(), GameError> {
        let bad = |msg: String| Err(GameError::InvalidSpec(msg));
        if self.rows == 0 || self.cols == 0 {
            return bad(format!("{}: dimensions must be positive", self.id));
        }
        if self.draw_cap == 0 {
            return bad("draw cap must be at least 1".into());
        }
        match self.id {
            GameId::TicTacToe if (self.rows, self.cols) != (3, 3) => {
                bad("tictactoe is 3x3 only".into())
            }
            GameId::Othello8 if (self.rows, self.cols) != (8, 8) => {
                bad("othello8 is 8x8 only".into())
            }
            GameId::Hex if self.rows != self.cols => bad("hex board must be square".into()),
            GameId::Breakthrough if self.rows < 5 => {
                bad("breakthrough needs at least 5 rows".into())
            }
            // Actions pack `from * 4 + direction` into 16 bits.
            _ if self.cells() > 4096 => bad("board too large".into()),
            _ => Ok(()),
        }
    }
}

/// A concrete game constructible from a [`GameSpec`], with a one-line text
/// notation `<game> <rows separated by '/'> <mover>` used for test fixtures.
///
/// Cells are written `x` (first player), `o` (second player) or `.`.
pub trait BoardGame: Game + 'static {
    fn from_spec(spec: &GameSpec) -> Result<Self, GameError>;

    fn spec(&self) -> &GameSpec;

    fn to_notation(&self) -> String;

    /// Parses a position. The result has an empty undo history.
    fn from_notation(spec: &GameSpec, line: &str) -> Result<Self, GameError>;
}

/// Splits a notation line into its board rows and mover after checking the
/// game id.
pub(crate) fn split_notation<'a>(
    expected: GameId,
    line: &'a str,
) -> Result<(Vec<&'a str>, Player), GameError> {
    let mut parts = line.split_whitespace();
    let (Some(id), Some(board), Some(mover), None) =
        (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(GameError::Notation(format!(
            "expected `<game> <board> <mover>`, got `{line}`"
        )));
    };
    if id != expected.as_str() {
        return Err(GameError::Notation(format!(
            "expected game `{expected}`, got `{id}`"
        )));
    }
    Ok((board.split('/').collect(), mover.parse()?))
}

pub(crate) fn format_notation(id: GameId, rows: &[String], mover: Player) -> String {
    format!("{} {} {}", id, rows.join("/"), mover)
}

pub(crate) fn check_rows(spec: &GameSpec, rows: &[&str]) -> Result<(), GameError> {
    if rows.len() != spec.rows || rows.iter().any(|r| r.chars().count() != spec.cols) {
        return Err(GameError::Notation(format!(
            "board must be {}x{}",
            spec.rows, spec.cols
        )));
    }
    Ok(())
}

pub(crate) fn parse_cell(c: char) -> Result<Option<Player>, GameError> {
    match c {
        'x' => Ok(Some(Player::First)),
        'o' => Ok(Some(Player::Second)),
        '.' => Ok(None),
        other => Err(GameError::Notation(format!("bad cell `{other}`"))),
    }
}

pub(crate) fn cell_char(cell: Option<Player>) -> char {
    match cell {
        Some(Player::First) => 'x',
        Some(Player::Second) => 'o',
        None => '.',
    }
}

pub(crate) fn illegal<G: Game>(game: &G, action: Action) -> GameError {
    GameError::IllegalAction {
        action: game.format_action(action),
        position: format!("{game:?}"),
    }
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Zobrist component for `(game, cell, piece)`. Derived by hashing rather than
/// table lookup so arbitrary board sizes share one deterministic scheme.
pub(crate) fn zobrist(game: GameId, cell: usize, piece: Player) -> u64 {
    let tag = (game as u64) << 56 | (piece as u64) << 48 | cell as u64;
    mix64(tag ^ 0x5eed_0f_2a11_c0de)
}

pub(crate) fn side_key(game: GameId) -> u64 {
    mix64(0xface_0000 ^ game as u64)
}

/// Invokes a generic callback with the concrete game type selected by a
/// spec's id.
pub trait GameVisitor {
    type Output;
    fn visit<G: BoardGame + crate::eval::Featurized>(self, initial: G) -> Self::Output;
}

pub fn dispatch<V: GameVisitor>(spec: &GameSpec, visitor: V) -> Result<V::Output, GameError> {
    Ok(match spec.id {
        GameId::TicTacToe => visitor.visit(TicTacToe::from_spec(spec)?),
        GameId::Breakthrough => visitor.visit(Breakthrough::from_spec(spec)?),
        GameId::Othello8 => visitor.visit(Othello::from_spec(spec)?),
        GameId::Hex => visitor.visit(Hex::from_spec(spec)?),
        GameId::Clobber => visitor.visit(Clobber::from_spec(spec)?),
    })
}
