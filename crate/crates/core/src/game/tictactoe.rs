use super::*;

const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

/// 3x3 noughts and crosses. Action `i` places a mark on cell `i`
/// (row-major).
#[derive(Clone)]
pub struct TicTacToe {
    spec: GameSpec,
    cells: [Option<Player>; 9],
    mover: Player,
    history: Vec<u8>,
    key: u64,
    outcome: Option<Outcome>,
    ply: u32,
}

impl TicTacToe {
    pub fn new() -> TicTacToe {
        TicTacToe::from_spec(&GameSpec::new(GameId::TicTacToe)).expect("default spec is valid")
    }

    pub fn cell(&self, index: usize) -> Option<Player> {
        self.cells[index]
    }

    pub fn lines() -> &'static [[usize; 3]; 8] {
        &LINES
    }

    fn compute_outcome(&self) -> Option<Outcome> {
        for line in &LINES {
            if let Some(p) = self.cells[line[0]] {
                if self.cells[line[1]] == Some(p) && self.cells[line[2]] == Some(p) {
                    return Some(Outcome::winner(p));
                }
            }
        }
        if self.cells.iter().all(Option::is_some) || self.ply >= self.spec.draw_cap {
            return Some(Outcome::Draw);
        }
        None
    }

    fn rehash(&mut self) {
        let mut key = 0;
        for (i, c) in self.cells.iter().enumerate() {
            if let Some(p) = c {
                key ^= zobrist(GameId::TicTacToe, i, *p);
            }
        }
        if self.mover == Player::Second {
            key ^= side_key(GameId::TicTacToe);
        }
        self.key = key;
    }
}

impl Default for TicTacToe {
    fn default() -> Self {
        TicTacToe::new()
    }
}

impl fmt::Debug for TicTacToe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_notation())
    }
}

impl Game for TicTacToe {
    fn to_move(&self) -> Player {
        self.mover
    }

    fn legal_actions(&self) -> Vec<Action> {
        if self.outcome.is_some() {
            return Vec::new();
        }
        (0..9)
            .filter(|&i| self.cells[i].is_none())
            .map(|i| Action(i as u16))
            .collect()
    }

    fn apply(&mut self, action: Action) -> Result<(), GameError> {
        let i = action.0 as usize;
        if self.outcome.is_some() || i >= 9 || self.cells[i].is_some() {
            return Err(illegal(self, action));
        }
        self.cells[i] = Some(self.mover);
        self.key ^= zobrist(GameId::TicTacToe, i, self.mover) ^ side_key(GameId::TicTacToe);
        self.mover = self.mover.opponent();
        self.history.push(i as u8);
        self.ply += 1;
        self.outcome = self.compute_outcome();
        Ok(())
    }

    fn undo(&mut self) -> Result<(), GameError> {
        let i = self.history.pop().ok_or(GameError::EmptyHistory)? as usize;
        self.mover = self.mover.opponent();
        self.cells[i] = None;
        self.key ^= zobrist(GameId::TicTacToe, i, self.mover) ^ side_key(GameId::TicTacToe);
        self.ply -= 1;
        self.outcome = self.compute_outcome();
        Ok(())
    }

    fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    fn key(&self) -> u64 {
        self.key
    }

    fn ply(&self) -> u32 {
        self.ply
    }

    fn format_action(&self, action: Action) -> String {
        let i = action.0 as usize;
        format!("{}{}", (b'a' + (i % 3) as u8) as char, i / 3 + 1)
    }
}

impl BoardGame for TicTacToe {
    fn from_spec(spec: &GameSpec) -> Result<Self, GameError> {
        spec.validate()?;
        if spec.id != GameId::TicTacToe {
            return Err(GameError::InvalidSpec(format!("expected tictactoe, got {}", spec.id)));
        }
        let mut game = TicTacToe {
            spec: spec.clone(),
            cells: [None; 9],
            mover: Player::First,
            history: Vec::with_capacity(9),
            key: 0,
            outcome: None,
            ply: 0,
        };
        game.rehash();
        Ok(game)
    }

    fn spec(&self) -> &GameSpec {
        &self.spec
    }

    fn to_notation(&self) -> String {
        let rows: Vec<String> = self
            .cells
            .chunks(3)
            .map(|r| r.iter().map(|c| cell_char(*c)).collect())
            .collect();
        format_notation(GameId::TicTacToe, &rows, self.mover)
    }

    fn from_notation(spec: &GameSpec, line: &str) -> Result<Self, GameError> {
        let (rows, mover) = split_notation(GameId::TicTacToe, line)?;
        check_rows(spec, &rows)?;
        let mut game = TicTacToe::from_spec(spec)?;
        for (i, c) in rows.iter().flat_map(|r| r.chars()).enumerate() {
            game.cells[i] = parse_cell(c)?;
        }
        game.mover = mover;
        game.ply = game.cells.iter().filter(|c| c.is_some()).count() as u32;
        game.rehash();
        game.outcome = game.compute_outcome();
        Ok(game)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::testutil::check_round_trip;

    #[test]
    fn empty_board_has_nine_actions() {
        assert_eq!(TicTacToe::new().legal_actions().len(), 9);
    }

    #[test]
    fn center_move() {
        let mut g = TicTacToe::new();
        g.apply(Action(4)).unwrap();
        assert_eq!(g.cell(4), Some(Player::First));
        assert_eq!(g.to_move(), Player::Second);
        assert_eq!(g.legal_actions().len(), 8);
    }

    #[test]
    fn three_in_a_row_wins() {
        let g = TicTacToe::from_notation(
            &GameSpec::new(GameId::TicTacToe),
            "tictactoe xxx/oo./... second",
        )
        .unwrap();
        assert_eq!(g.terminal_value(), Ok(1));
        assert!(g.legal_actions().is_empty());
    }

    #[test]
    fn apply_undo_restores_key() {
        let mut g = TicTacToe::new();
        let key = g.key();
        g.apply(Action(0)).unwrap();
        assert_ne!(g.key(), key);
        g.undo().unwrap();
        assert_eq!(g.key(), key);
    }

    #[test]
    fn undo_on_fresh_state_fails() {
        assert_eq!(TicTacToe::new().undo(), Err(GameError::EmptyHistory));
    }

    #[test]
    fn illegal_action_names_the_move() {
        let mut g = TicTacToe::new();
        g.apply(Action(4)).unwrap();
        let err = g.apply(Action(4)).unwrap_err();
        assert!(err.to_string().contains("b2"), "{err}");
    }

    #[test]
    fn terminal_value_on_open_position_errors() {
        assert_eq!(TicTacToe::new().terminal_value(), Err(GameError::NotTerminal));
    }

    #[test]
    fn side_to_move_is_keyed() {
        let spec = GameSpec::new(GameId::TicTacToe);
        let a = TicTacToe::from_notation(&spec, "tictactoe x../.o./... first").unwrap();
        let b = TicTacToe::from_notation(&spec, "tictactoe x../.o./... second").unwrap();
        assert_ne!(a.key(), b.key());
    }

    #[test]
    fn notation_round_trip() {
        let mut g = TicTacToe::new();
        for a in [4, 0, 8] {
            g.apply(Action(a)).unwrap();
        }
        let parsed = TicTacToe::from_notation(g.spec(), &g.to_notation()).unwrap();
        assert_eq!(parsed.key(), g.key());
        assert_eq!(parsed.legal_actions(), g.legal_actions());
    }

    #[test]
    fn random_round_trips() {
        for seed in 0..20 {
            check_round_trip(&TicTacToe::new(), 9, seed);
        }
    }
}
