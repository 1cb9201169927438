use std::collections::VecDeque;

use super::*;

const NEIGHBOURS: [(isize, isize); 6] = [(-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0)];

/// Hex on an `n x n` rhombus. The first player connects row 0 with row
/// `n - 1`; the second player connects column 0 with column `n - 1`.
///
/// Actions are cells `0..n*n` (row-major). With the swap rule enabled, action
/// `n*n` is legal as the second player's first move: the opening stone is
/// replaced by a second-player stone on the mirrored cell.
#[derive(Clone)]
pub struct Hex {
    spec: GameSpec,
    cells: Vec<Option<Player>>,
    mover: Player,
    history: Vec<Frame>,
    key: u64,
    outcome: Option<Outcome>,
    ply: u32,
}

#[derive(Clone, Debug)]
enum Frame {
    Place { cell: u16, outcome: Option<Outcome> },
    Swap { opening: u16 },
}

fn neighbours(n: usize, cell: usize) -> impl Iterator<Item = usize> {
    let (r, c) = ((cell / n) as isize, (cell % n) as isize);
    NEIGHBOURS.iter().filter_map(move |(dr, dc)| {
        let (rr, cc) = (r + dr, c + dc);
        (rr >= 0 && cc >= 0 && rr < n as isize && cc < n as isize)
            .then(|| (rr as usize) * n + cc as usize)
    })
}

fn touches_start(n: usize, cell: usize, player: Player) -> bool {
    match player {
        Player::First => cell / n == 0,
        Player::Second => cell % n == 0,
    }
}

fn touches_end(n: usize, cell: usize, player: Player) -> bool {
    match player {
        Player::First => cell / n == n - 1,
        Player::Second => cell % n == n - 1,
    }
}

/// Whether `player` connects their two sides on an arbitrary `n x n` board.
pub fn hex_connection(cells: &[Option<Player>], n: usize, player: Player) -> bool {
    let mut seen = vec![false; cells.len()];
    let mut queue: VecDeque<usize> = (0..cells.len())
        .filter(|&i| cells[i] == Some(player) && touches_start(n, i, player))
        .collect();
    for &i in &queue {
        seen[i] = true;
    }
    while let Some(i) = queue.pop_front() {
        if touches_end(n, i, player) {
            return true;
        }
        for j in neighbours(n, i) {
            if !seen[j] && cells[j] == Some(player) {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    false
}

impl Hex {
    pub fn new() -> Hex {
        Hex::from_spec(&GameSpec::new(GameId::Hex)).expect("default spec")
    }

    pub fn size(&self) -> usize {
        self.spec.rows
    }

    pub fn cells(&self) -> &[Option<Player>] {
        &self.cells
    }

    pub fn swap_action(&self) -> Action {
        Action((self.spec.cells()) as u16)
    }

    /// Minimum number of empty cells `player` must still fill to connect
    /// (0-1 BFS: own stones cost 0, empty cells 1, opponent stones block).
    /// Returns `n * n + 1` when no connection is possible.
    pub fn connection_distance(&self, player: Player) -> u32 {
        let n = self.size();
        let blocked = u32::try_from(n * n + 1).unwrap_or(u32::MAX);
        let cost = |i: usize| match self.cells[i] {
            Some(p) if p == player => Some(0),
            None => Some(1),
            _ => None,
        };
        let mut dist = vec![blocked; self.cells.len()];
        let mut queue = VecDeque::new();
        for i in (0..self.cells.len()).filter(|&i| touches_start(n, i, player)) {
            if let Some(c) = cost(i) {
                dist[i] = c;
                if c == 0 {
                    queue.push_front(i);
                } else {
                    queue.push_back(i);
                }
            }
        }
        while let Some(i) = queue.pop_front() {
            for j in neighbours(n, i) {
                if let Some(c) = cost(j) {
                    if dist[i] + c < dist[j] {
                        dist[j] = dist[i] + c;
                        if c == 0 {
                            queue.push_front(j);
                        } else {
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        (0..self.cells.len())
            .filter(|&i| touches_end(n, i, player))
            .map(|i| dist[i])
            .min()
            .unwrap_or(blocked)
    }

    fn swap_legal(&self) -> bool {
        self.spec.swap
            && self.ply == 1
            && matches!(self.history.as_slice(), [Frame::Place { .. }])
    }

    fn group_wins(&self, cell: usize, player: Player) -> bool {
        let n = self.size();
        let (mut start, mut end) = (false, false);
        let mut seen = vec![false; self.cells.len()];
        let mut stack = vec![cell];
        seen[cell] = true;
        while let Some(i) = stack.pop() {
            start |= touches_start(n, i, player);
            end |= touches_end(n, i, player);
            if start && end {
                return true;
            }
            for j in neighbours(n, i) {
                if !seen[j] && self.cells[j] == Some(player) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        false
    }

    fn outcome_after_place(&self, cell: usize, player: Player) -> Option<Outcome> {
        if self.group_wins(cell, player) {
            Some(Outcome::winner(player))
        } else if self.ply >= self.spec.draw_cap {
            Some(Outcome::Draw)
        } else {
            None
        }
    }

    fn mirror(&self, cell: usize) -> usize {
        let n = self.size();
        (cell % n) * n + cell / n
    }

    fn rehash(&mut self) {
        self.key = self
            .cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|p| zobrist(GameId::Hex, i, p)))
            .fold(0, |k, z| k ^ z);
        if self.mover == Player::Second {
            self.key ^= side_key(GameId::Hex);
        }
    }
}

impl Default for Hex {
    fn default() -> Self {
        Hex::new()
    }
}

impl fmt::Debug for Hex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_notation())
    }
}

impl Game for Hex {
    fn to_move(&self) -> Player {
        self.mover
    }

    fn legal_actions(&self) -> Vec<Action> {
        if self.outcome.is_some() {
            return Vec::new();
        }
        let mut out: Vec<Action> = (0..self.cells.len())
            .filter(|&i| self.cells[i].is_none())
            .map(|i| Action(i as u16))
            .collect();
        if self.swap_legal() {
            out.push(self.swap_action());
        }
        out
    }

    fn apply(&mut self, action: Action) -> Result<(), GameError> {
        if self.outcome.is_some() {
            return Err(illegal(self, action));
        }
        let cell = action.0 as usize;
        let me = self.mover;
        if action == self.swap_action() && self.swap_legal() {
            let Some(&Frame::Place { cell: opening, .. }) = self.history.first() else {
                unreachable!("swap_legal checked the history");
            };
            let opening = opening as usize;
            let target = self.mirror(opening);
            self.cells[opening] = None;
            self.cells[target] = Some(me);
            self.key ^= zobrist(GameId::Hex, opening, me.opponent()) ^ zobrist(GameId::Hex, target, me);
            self.history.push(Frame::Swap {
                opening: opening as u16,
            });
        } else if cell < self.cells.len() && self.cells[cell].is_none() {
            self.cells[cell] = Some(me);
            self.key ^= zobrist(GameId::Hex, cell, me);
            self.history.push(Frame::Place {
                cell: cell as u16,
                outcome: self.outcome,
            });
        } else {
            return Err(illegal(self, action));
        }
        self.key ^= side_key(GameId::Hex);
        self.mover = me.opponent();
        self.ply += 1;
        if let Some(&Frame::Place { cell, .. }) = self.history.last() {
            self.outcome = self.outcome_after_place(cell as usize, me);
        }
        Ok(())
    }

    fn undo(&mut self) -> Result<(), GameError> {
        let frame = self.history.pop().ok_or(GameError::EmptyHistory)?;
        self.mover = self.mover.opponent();
        self.key ^= side_key(GameId::Hex);
        let me = self.mover;
        match frame {
            Frame::Place { cell, outcome } => {
                self.cells[cell as usize] = None;
                self.key ^= zobrist(GameId::Hex, cell as usize, me);
                self.outcome = outcome;
            }
            Frame::Swap { opening } => {
                let opening = opening as usize;
                let target = self.mirror(opening);
                self.cells[target] = None;
                self.cells[opening] = Some(me.opponent());
                self.key ^=
                    zobrist(GameId::Hex, opening, me.opponent()) ^ zobrist(GameId::Hex, target, me);
            }
        }
        self.ply -= 1;
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
        let n = self.size();
        let i = action.0 as usize;
        if i == n * n {
            "swap".into()
        } else {
            format!("{}{}", (b'a' + (i % n) as u8) as char, i / n + 1)
        }
    }
}

impl BoardGame for Hex {
    fn from_spec(spec: &GameSpec) -> Result<Self, GameError> {
        spec.validate()?;
        if spec.id != GameId::Hex {
            return Err(GameError::InvalidSpec(format!("expected hex, got {}", spec.id)));
        }
        let mut game = Hex {
            spec: spec.clone(),
            cells: vec![None; spec.cells()],
            mover: Player::First,
            history: Vec::new(),
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
            .chunks(self.size())
            .map(|r| r.iter().map(|c| cell_char(*c)).collect())
            .collect();
        format_notation(GameId::Hex, &rows, self.mover)
    }

    fn from_notation(spec: &GameSpec, line: &str) -> Result<Self, GameError> {
        let (rows, mover) = split_notation(GameId::Hex, line)?;
        check_rows(spec, &rows)?;
        let mut game = Hex::from_spec(spec)?;
        for (i, ch) in rows.iter().flat_map(|r| r.chars()).enumerate() {
            game.cells[i] = parse_cell(ch)?;
        }
        game.mover = mover;
        game.ply = game.cells.iter().filter(|c| c.is_some()).count() as u32;
        game.rehash();
        let n = game.size();
        game.outcome = [Player::First, Player::Second]
            .into_iter()
            .find(|&p| hex_connection(&game.cells, n, p))
            .map(Outcome::winner);
        Ok(game)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::testutil::check_round_trip;
    use rand::prelude::*;

    #[test]
    fn first_player_connects_top_to_bottom() {
        let spec = GameSpec::new(GameId::Hex).with_size(3, 3);
        let mut g = Hex::from_spec(&spec).unwrap();
        for a in [1, 0, 4, 2, 7] {
            g.apply(Action(a)).unwrap();
        }
        assert_eq!(g.terminal_value(), Ok(1));
    }

    #[test]
    fn filled_three_by_three_boards_have_exactly_one_winner() {
        for mask in 0u32..(1 << 9) {
            let cells: Vec<Option<Player>> = (0..9)
                .map(|i| Some(if mask >> i & 1 == 1 { Player::First } else { Player::Second }))
                .collect();
            let first = hex_connection(&cells, 3, Player::First);
            let second = hex_connection(&cells, 3, Player::Second);
            assert!(first ^ second, "mask {mask:09b}");
        }
    }

    #[test]
    fn sampled_seven_by_seven_boards_have_exactly_one_winner() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let cells: Vec<Option<Player>> = (0..49)
                .map(|_| Some(if rng.random::<bool>() { Player::First } else { Player::Second }))
                .collect();
            let first = hex_connection(&cells, 7, Player::First);
            let second = hex_connection(&cells, 7, Player::Second);
            assert!(first ^ second);
        }
    }

    #[test]
    fn swap_mirrors_opening_stone() {
        let spec = GameSpec::new(GameId::Hex).with_size(5, 5).with_swap(true);
        let mut g = Hex::from_spec(&spec).unwrap();
        assert!(!g.legal_actions().contains(&g.swap_action()));
        g.apply(Action(1)).unwrap();
        let before = g.key();
        let swap = g.swap_action();
        assert!(g.legal_actions().contains(&swap));
        g.apply(swap).unwrap();
        assert_eq!(g.cells()[1], None);
        assert_eq!(g.cells()[5], Some(Player::Second));
        assert_eq!(g.to_move(), Player::First);
        assert!(!g.legal_actions().contains(&swap));
        g.undo().unwrap();
        assert_eq!(g.key(), before);
        assert_eq!(g.cells()[1], Some(Player::First));
    }

    #[test]
    fn swap_off_by_default() {
        let mut g = Hex::new();
        g.apply(Action(0)).unwrap();
        assert!(!g.legal_actions().contains(&g.swap_action()));
    }

    #[test]
    fn distance_counts_missing_stones() {
        let spec = GameSpec::new(GameId::Hex).with_size(3, 3);
        let mut g = Hex::from_spec(&spec).unwrap();
        assert_eq!(g.connection_distance(Player::First), 3);
        g.apply(Action(4)).unwrap();
        assert_eq!(g.connection_distance(Player::First), 2);
        assert_eq!(g.connection_distance(Player::Second), 3);
    }

    #[test]
    fn random_round_trips() {
        for seed in 0..10 {
            check_round_trip(&Hex::new(), 49, seed);
        }
        let swap = Hex::from_spec(&GameSpec::new(GameId::Hex).with_swap(true)).unwrap();
        for seed in 0..10 {
            check_round_trip(&swap, 10, seed);
        }
    }
}
