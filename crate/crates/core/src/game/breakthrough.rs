use super::*;

/// Breakthrough on a configurable board. The first player starts on the two
/// bottom rows (row 0 and 1) and moves towards higher rows; the second player
/// starts on the two top rows.
///
/// Action encoding: `from * 4 + dir` with `dir` 0 = diagonal towards lower
/// column, 1 = straight, 2 = diagonal towards higher column.
#[derive(Clone)]
pub struct Breakthrough {
    spec: GameSpec,
    cells: Vec<Option<Player>>,
    mover: Player,
    pieces: [u32; 2],
    history: Vec<Frame>,
    key: u64,
    outcome: Option<Outcome>,
    ply: u32,
}

#[derive(Clone, Debug)]
struct Frame {
    from: u16,
    to: u16,
    captured: bool,
    outcome: Option<Outcome>,
}

impl Breakthrough {
    pub fn new() -> Breakthrough {
        Breakthrough::from_spec(&GameSpec::new(GameId::Breakthrough)).expect("default spec")
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<Player> {
        self.cells[row * self.spec.cols + col]
    }

    pub fn pieces(&self, player: Player) -> u32 {
        self.pieces[player as usize]
    }

    pub fn rows(&self) -> usize {
        self.spec.rows
    }

    pub fn cols(&self) -> usize {
        self.spec.cols
    }

    fn forward(player: Player) -> isize {
        match player {
            Player::First => 1,
            Player::Second => -1,
        }
    }

    /// Target cell of a move, if on the board.
    fn target(&self, from: usize, dir: usize, player: Player) -> Option<usize> {
        let cols = self.spec.cols as isize;
        let row = (from / self.spec.cols) as isize + Self::forward(player);
        let col = (from % self.spec.cols) as isize + dir as isize - 1;
        if row < 0 || row >= self.spec.rows as isize || col < 0 || col >= cols {
            return None;
        }
        Some((row * cols + col) as usize)
    }

    fn move_ok(&self, from: usize, dir: usize, player: Player) -> Option<usize> {
        if dir > 2 || self.cells.get(from).copied().flatten() != Some(player) {
            return None;
        }
        let to = self.target(from, dir, player)?;
        match (dir, self.cells[to]) {
            (_, None) => Some(to),
            (0 | 2, Some(p)) if p != player => Some(to),
            _ => None,
        }
    }

    fn moves_for(&self, player: Player, out: &mut Vec<Action>) {
        for from in 0..self.cells.len() {
            if self.cells[from] != Some(player) {
                continue;
            }
            for dir in 0..3 {
                if self.move_ok(from, dir, player).is_some() {
                    out.push(Action((from * 4 + dir) as u16));
                }
            }
        }
    }

    fn has_move(&self, player: Player) -> bool {
        (0..self.cells.len())
            .filter(|&i| self.cells[i] == Some(player))
            .any(|from| (0..3).any(|dir| self.move_ok(from, dir, player).is_some()))
    }

    fn goal_row(&self, player: Player) -> usize {
        match player {
            Player::First => self.spec.rows - 1,
            Player::Second => 0,
        }
    }

    fn compute_outcome(&self) -> Option<Outcome> {
        for p in [Player::First, Player::Second] {
            let row = self.goal_row(p);
            let cols = self.spec.cols;
            if self.cells[row * cols..(row + 1) * cols].contains(&Some(p)) {
                return Some(Outcome::winner(p));
            }
            if self.pieces[p as usize] == 0 {
                return Some(Outcome::winner(p.opponent()));
            }
        }
        if !self.has_move(self.mover) {
            return Some(Outcome::winner(self.mover.opponent()));
        }
        if self.ply >= self.spec.draw_cap {
            let diff = i64::from(self.pieces[0]) - i64::from(self.pieces[1]);
            return Some(Outcome::from_sign(diff));
        }
        None
    }

    fn rehash(&mut self) {
        self.key = self
            .cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|p| zobrist(GameId::Breakthrough, i, p)))
            .fold(0, |k, z| k ^ z);
        if self.mover == Player::Second {
            self.key ^= side_key(GameId::Breakthrough);
        }
        self.pieces = [Player::First, Player::Second]
            .map(|p| self.cells.iter().filter(|c| **c == Some(p)).count() as u32);
    }
}

impl Default for Breakthrough {
    fn default() -> Self {
        Breakthrough::new()
    }
}

impl fmt::Debug for Breakthrough {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_notation())
    }
}

impl Game for Breakthrough {
    fn to_move(&self) -> Player {
        self.mover
    }

    fn legal_actions(&self) -> Vec<Action> {
        let mut out = Vec::new();
        if self.outcome.is_none() {
            self.moves_for(self.mover, &mut out);
        }
        out
    }

    fn apply(&mut self, action: Action) -> Result<(), GameError> {
        let from = action.0 as usize / 4;
        let dir = action.0 as usize % 4;
        let to = match (self.outcome, self.move_ok(from, dir, self.mover)) {
            (None, Some(to)) => to,
            _ => return Err(illegal(self, action)),
        };
        let captured = self.cells[to].is_some();
        let me = self.mover;
        let them = me.opponent();
        if captured {
            self.key ^= zobrist(GameId::Breakthrough, to, them);
            self.pieces[them as usize] -= 1;
        }
        self.key ^= zobrist(GameId::Breakthrough, from, me)
            ^ zobrist(GameId::Breakthrough, to, me)
            ^ side_key(GameId::Breakthrough);
        self.cells[from] = None;
        self.cells[to] = Some(me);
        self.history.push(Frame {
            from: from as u16,
            to: to as u16,
            captured,
            outcome: self.outcome,
        });
        self.mover = them;
        self.ply += 1;
        self.outcome = self.compute_outcome();
        Ok(())
    }

    fn undo(&mut self) -> Result<(), GameError> {
        let frame = self.history.pop().ok_or(GameError::EmptyHistory)?;
        let (from, to) = (frame.from as usize, frame.to as usize);
        let them = self.mover;
        let me = them.opponent();
        self.key ^= zobrist(GameId::Breakthrough, from, me)
            ^ zobrist(GameId::Breakthrough, to, me)
            ^ side_key(GameId::Breakthrough);
        self.cells[from] = Some(me);
        self.cells[to] = None;
        if frame.captured {
            self.cells[to] = Some(them);
            self.key ^= zobrist(GameId::Breakthrough, to, them);
            self.pieces[them as usize] += 1;
        }
        self.mover = me;
        self.ply -= 1;
        self.outcome = frame.outcome;
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
        let from = action.0 as usize / 4;
        let dir = action.0 as usize % 4;
        let name = |i: usize| {
            let col = (b'a' + (i % self.spec.cols) as u8) as char;
            format!("{}{}", col, i / self.spec.cols + 1)
        };
        match self.target(from, dir.min(2), self.mover) {
            Some(to) if dir <= 2 => format!("{}-{}", name(from), name(to)),
            _ => format!("#{}", action.0),
        }
    }
}

impl BoardGame for Breakthrough {
    fn from_spec(spec: &GameSpec) -> Result<Self, GameError> {
        spec.validate()?;
        if spec.id != GameId::Breakthrough {
            return Err(GameError::InvalidSpec(format!("expected breakthrough, got {}", spec.id)));
        }
        let (rows, cols) = (spec.rows, spec.cols);
        let mut cells = vec![None; rows * cols];
        for c in 0..cols {
            for r in 0..2 {
                cells[r * cols + c] = Some(Player::First);
                cells[(rows - 1 - r) * cols + c] = Some(Player::Second);
            }
        }
        let mut game = Breakthrough {
            spec: spec.clone(),
            cells,
            mover: Player::First,
            pieces: [0, 0],
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

    /// Rows are written top (highest row index) first.
    fn to_notation(&self) -> String {
        let cols = self.spec.cols;
        let rows: Vec<String> = (0..self.spec.rows)
            .rev()
            .map(|r| (0..cols).map(|c| cell_char(self.cells[r * cols + c])).collect())
            .collect();
        format_notation(GameId::Breakthrough, &rows, self.mover)
    }

    fn from_notation(spec: &GameSpec, line: &str) -> Result<Self, GameError> {
        let (rows, mover) = split_notation(GameId::Breakthrough, line)?;
        check_rows(spec, &rows)?;
        let mut game = Breakthrough::from_spec(spec)?;
        let cols = spec.cols;
        for (i, row) in rows.iter().enumerate() {
            let r = spec.rows - 1 - i;
            for (c, ch) in row.chars().enumerate() {
                game.cells[r * cols + c] = parse_cell(ch)?;
            }
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

    /// Independent count: every front-row piece has one straight move plus one
    /// diagonal per in-board neighbouring column; back-row pieces are blocked.
    fn brute_force_initial_moves(cols: usize) -> usize {
        (0..cols)
            .map(|c| 1 + usize::from(c > 0) + usize::from(c + 1 < cols))
            .sum()
    }

    #[test]
    fn initial_action_counts() {
        assert_eq!(Breakthrough::new().legal_actions().len(), 16);
        assert_eq!(brute_force_initial_moves(6), 16);
        let eight = Breakthrough::from_spec(&GameSpec::new(GameId::Breakthrough).with_size(8, 8))
            .unwrap();
        assert_eq!(eight.legal_actions().len(), 22);
        assert_eq!(brute_force_initial_moves(8), 22);
    }

    #[test]
    fn reaching_back_rank_wins() {
        let spec = GameSpec::new(GameId::Breakthrough);
        let open = Breakthrough::from_notation(
            &spec,
            "breakthrough ....../..x.../....../....../o.o.../...... second",
        )
        .unwrap();
        assert!(!open.is_terminal());
        // Second's piece sits on row 0, the first player's back rank.
        let lost = Breakthrough::from_notation(
            &spec,
            "breakthrough ....../....../....../....../xx..../o..... first",
        )
        .unwrap();
        assert_eq!(lost.terminal_value(), Ok(-1));
        assert!(lost.legal_actions().is_empty());
    }

    #[test]
    fn malformed_notation_is_rejected() {
        let spec = GameSpec::new(GameId::Breakthrough);
        assert!(Breakthrough::from_notation(&spec, "breakthrough ....../.. first").is_err());
        assert!(Breakthrough::from_notation(&spec, "hex ....../ first").is_err());
    }

    #[test]
    fn diagonal_capture_and_undo() {
        let spec = GameSpec::new(GameId::Breakthrough);
        let mut g = Breakthrough::from_notation(
            &spec,
            "breakthrough oo..../....../...o../..x.../....../...... first",
        )
        .unwrap();
        let key = g.key();
        // x at (2,2) captures o at (3,3): from = 14, dir = 2.
        let capture = Action(14 * 4 + 2);
        assert!(g.legal_actions().contains(&capture));
        g.apply(capture).unwrap();
        assert_eq!(g.cell(3, 3), Some(Player::First));
        assert_eq!(g.pieces(Player::Second), 2);
        g.undo().unwrap();
        assert_eq!(g.key(), key);
        assert_eq!(g.cell(3, 3), Some(Player::Second));
        assert_eq!(g.pieces(Player::Second), 3);
    }

    #[test]
    fn straight_move_cannot_capture() {
        let spec = GameSpec::new(GameId::Breakthrough);
        let mut g = Breakthrough::from_notation(
            &spec,
            "breakthrough oo..../....../..o.../..x.../....../...... first",
        )
        .unwrap();
        assert!(g.apply(Action(14 * 4 + 1)).is_err());
    }

    #[test]
    fn twenty_step_random_walk_restores_key() {
        for seed in 0..10 {
            check_round_trip(&Breakthrough::new(), 20, seed);
        }
    }

    #[test]
    fn notation_round_trip() {
        let mut g = Breakthrough::new();
        let a = g.legal_actions()[3];
        g.apply(a).unwrap();
        let parsed = Breakthrough::from_notation(g.spec(), &g.to_notation()).unwrap();
        assert_eq!(parsed.key(), g.key());
    }
}
