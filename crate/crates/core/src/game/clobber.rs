use super::*;

/// Clobber on a board filled with a checkerboard pattern (first player on
/// cells where `row + col` is even). A move takes one of the mover's stones
/// orthogonally onto an adjacent opponent stone, removing it. The player
/// without a move loses.
///
/// Action encoding: `from * 4 + dir` with `dir` 0 = up (row - 1), 1 = left,
/// 2 = right, 3 = down.
#[derive(Clone)]
pub struct Clobber {
    spec: GameSpec,
    cells: Vec<Option<Player>>,
    mover: Player,
    history: Vec<(u16, u16, Option<Outcome>)>,
    key: u64,
    outcome: Option<Outcome>,
    ply: u32,
}

impl Clobber {
    pub fn new() -> Clobber {
        Clobber::from_spec(&GameSpec::new(GameId::Clobber)).expect("default spec")
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<Player> {
        self.cells[row * self.spec.cols + col]
    }

    pub fn stones(&self, player: Player) -> usize {
        self.cells.iter().filter(|c| **c == Some(player)).count()
    }

    fn neighbour(&self, from: usize, dir: usize) -> Option<usize> {
        let (rows, cols) = (self.spec.rows, self.spec.cols);
        let (r, c) = (from / cols, from % cols);
        match dir {
            0 if r > 0 => Some(from - cols),
            1 if c > 0 => Some(from - 1),
            2 if c + 1 < cols => Some(from + 1),
            3 if r + 1 < rows => Some(from + cols),
            _ => None,
        }
    }

    fn move_ok(&self, from: usize, dir: usize, player: Player) -> Option<usize> {
        if self.cells.get(from).copied().flatten() != Some(player) {
            return None;
        }
        let to = self.neighbour(from, dir)?;
        (self.cells[to] == Some(player.opponent())).then_some(to)
    }

    /// Number of moves available to `player` in the current position.
    pub fn mobility(&self, player: Player) -> usize {
        (0..self.cells.len())
            .map(|from| (0..4).filter(|&d| self.move_ok(from, d, player).is_some()).count())
            .sum()
    }

    /// Stones of `player` with at least one adjacent opponent stone.
    pub fn active_stones(&self, player: Player) -> usize {
        (0..self.cells.len())
            .filter(|&from| (0..4).any(|d| self.move_ok(from, d, player).is_some()))
            .count()
    }

    fn compute_outcome(&self) -> Option<Outcome> {
        let any_move = (0..self.cells.len())
            .any(|from| (0..4).any(|d| self.move_ok(from, d, self.mover).is_some()));
        if !any_move {
            return Some(Outcome::winner(self.mover.opponent()));
        }
        if self.ply >= self.spec.draw_cap {
            return Some(Outcome::Draw);
        }
        None
    }

    fn rehash(&mut self) {
        self.key = self
            .cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|p| zobrist(GameId::Clobber, i, p)))
            .fold(0, |k, z| k ^ z);
        if self.mover == Player::Second {
            self.key ^= side_key(GameId::Clobber);
        }
    }
}

impl Default for Clobber {
    fn default() -> Self {
        Clobber::new()
    }
}

impl fmt::Debug for Clobber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_notation())
    }
}

impl Game for Clobber {
    fn to_move(&self) -> Player {
        self.mover
    }

    fn legal_actions(&self) -> Vec<Action> {
        let mut out = Vec::new();
        if self.outcome.is_some() {
            return out;
        }
        for from in 0..self.cells.len() {
            for dir in 0..4 {
                if self.move_ok(from, dir, self.mover).is_some() {
                    out.push(Action((from * 4 + dir) as u16));
                }
            }
        }
        out
    }

    fn apply(&mut self, action: Action) -> Result<(), GameError> {
        let (from, dir) = (action.0 as usize / 4, action.0 as usize % 4);
        let to = match (self.outcome, self.move_ok(from, dir, self.mover)) {
            (None, Some(to)) => to,
            _ => return Err(illegal(self, action)),
        };
        let me = self.mover;
        let them = me.opponent();
        self.key ^= zobrist(GameId::Clobber, from, me)
            ^ zobrist(GameId::Clobber, to, me)
            ^ zobrist(GameId::Clobber, to, them)
            ^ side_key(GameId::Clobber);
        self.cells[from] = None;
        self.cells[to] = Some(me);
        self.history.push((from as u16, to as u16, self.outcome));
        self.mover = them;
        self.ply += 1;
        self.outcome = self.compute_outcome();
        Ok(())
    }

    fn undo(&mut self) -> Result<(), GameError> {
        let (from, to, outcome) = self.history.pop().ok_or(GameError::EmptyHistory)?;
        let (from, to) = (from as usize, to as usize);
        let them = self.mover;
        let me = them.opponent();
        self.key ^= zobrist(GameId::Clobber, from, me)
            ^ zobrist(GameId::Clobber, to, me)
            ^ zobrist(GameId::Clobber, to, them)
            ^ side_key(GameId::Clobber);
        self.cells[from] = Some(me);
        self.cells[to] = Some(them);
        self.mover = me;
        self.ply -= 1;
        self.outcome = outcome;
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
}

impl BoardGame for Clobber {
    fn from_spec(spec: &GameSpec) -> Result<Self, GameError> {
        spec.validate()?;
        if spec.id != GameId::Clobber {
            return Err(GameError::InvalidSpec(format!("expected clobber, got {}", spec.id)));
        }
        let cells = (0..spec.cells())
            .map(|i| {
                Some(if (i / spec.cols + i % spec.cols) % 2 == 0 {
                    Player::First
                } else {
                    Player::Second
                })
            })
            .collect();
        let mut game = Clobber {
            spec: spec.clone(),
            cells,
            mover: Player::First,
            history: Vec::new(),
            key: 0,
            outcome: None,
            ply: 0,
        };
        game.rehash();
        game.outcome = game.compute_outcome();
        Ok(game)
    }

    fn spec(&self) -> &GameSpec {
        &self.spec
    }

    fn to_notation(&self) -> String {
        let rows: Vec<String> = self
            .cells
            .chunks(self.spec.cols)
            .map(|r| r.iter().map(|c| cell_char(*c)).collect())
            .collect();
        format_notation(GameId::Clobber, &rows, self.mover)
    }

    fn from_notation(spec: &GameSpec, line: &str) -> Result<Self, GameError> {
        let (rows, mover) = split_notation(GameId::Clobber, line)?;
        check_rows(spec, &rows)?;
        let mut game = Clobber::from_spec(spec)?;
        for (i, ch) in rows.iter().flat_map(|r| r.chars()).enumerate() {
            game.cells[i] = parse_cell(ch)?;
        }
        game.mover = mover;
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
    fn capture_relocates_and_removes() {
        let mut g = Clobber::new();
        // (0,0) is first's; (0,1) is second's. dir 2 = right.
        let a = Action(2);
        assert!(g.legal_actions().contains(&a));
        let before = g.stones(Player::Second);
        g.apply(a).unwrap();
        assert_eq!(g.cell(0, 0), None);
        assert_eq!(g.cell(0, 1), Some(Player::First));
        assert_eq!(g.stones(Player::Second), before - 1);
    }

    #[test]
    fn cannot_move_onto_empty_or_own() {
        let spec = GameSpec::new(GameId::Clobber);
        let mut g = Clobber::from_notation(
            &spec,
            "clobber x.x.../o...../....../....../...... first",
        )
        .unwrap();
        assert!(g.apply(Action(2)).is_err());
        assert_eq!(g.legal_actions(), vec![Action(3)]);
    }

    #[test]
    fn player_without_move_loses() {
        let spec = GameSpec::new(GameId::Clobber);
        let g = Clobber::from_notation(&spec, "clobber x.o.../....../....../....../...... first")
            .unwrap();
        assert_eq!(g.terminal_value(), Ok(-1));
        let g = Clobber::from_notation(&spec, "clobber x.o.../....../....../....../...... second")
            .unwrap();
        assert_eq!(g.terminal_value(), Ok(1));
    }

    #[test]
    fn random_round_trips() {
        for seed in 0..10 {
            check_round_trip(&Clobber::new(), 40, seed);
        }
    }
}
