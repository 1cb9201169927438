use super::*;

const NOT_COL_A: u64 = 0xfefe_fefe_fefe_fefe;
const NOT_COL_H: u64 = 0x7f7f_7f7f_7f7f_7f7f;
/// Action index of the pass move.
pub const PASS: u16 = 64;

fn shift(b: u64, dir: usize) -> u64 {
    match dir {
        0 => (b << 1) & NOT_COL_A,
        1 => (b >> 1) & NOT_COL_H,
        2 => b << 8,
        3 => b >> 8,
        4 => (b << 9) & NOT_COL_A,
        5 => (b << 7) & NOT_COL_H,
        6 => (b >> 7) & NOT_COL_A,
        _ => (b >> 9) & NOT_COL_H,
    }
}

/// Placement moves for `own` against `opp`, as a bitboard.
fn placements(own: u64, opp: u64) -> u64 {
    let empty = !(own | opp);
    let mut moves = 0;
    for dir in 0..8 {
        let mut x = shift(own, dir) & opp;
        for _ in 0..5 {
            x |= shift(x, dir) & opp;
        }
        moves |= shift(x, dir) & empty;
    }
    moves
}

fn flips(cell: usize, own: u64, opp: u64) -> u64 {
    let bit = 1u64 << cell;
    let mut all = 0;
    for dir in 0..8 {
        let mut run = 0;
        let mut m = shift(bit, dir);
        while m & opp != 0 {
            run |= m;
            m = shift(m, dir);
        }
        if m & own != 0 {
            all |= run;
        }
    }
    all
}

/// Othello on the 8x8 board. Actions are cells `0..64` (row-major, row 0 at
/// the top) plus [`PASS`], which is legal only when the mover has no
/// placement while the opponent has one. The game ends when neither player
/// can place a disc.
#[derive(Clone)]
pub struct Othello {
    spec: GameSpec,
    /// Indexed by `Player as usize`.
    discs: [u64; 2],
    mover: Player,
    history: Vec<Frame>,
    key: u64,
    outcome: Option<Outcome>,
    ply: u32,
}

#[derive(Clone, Debug)]
struct Frame {
    action: u16,
    flipped: u64,
    outcome: Option<Outcome>,
}

impl Othello {
    pub fn new() -> Othello {
        Othello::from_spec(&GameSpec::new(GameId::Othello8)).expect("default spec")
    }

    pub fn discs(&self, player: Player) -> u64 {
        self.discs[player as usize]
    }

    pub fn disc_count(&self, player: Player) -> u32 {
        self.discs(player).count_ones()
    }

    /// Number of placement moves available to `player`.
    pub fn mobility(&self, player: Player) -> u32 {
        placements(self.discs(player), self.discs(player.opponent())).count_ones()
    }

    fn compute_outcome(&self) -> Option<Outcome> {
        let [first, second] = self.discs;
        let finished = first | second == u64::MAX
            || (placements(first, second) == 0 && placements(second, first) == 0)
            || self.ply >= self.spec.draw_cap;
        finished.then(|| {
            Outcome::from_sign(i64::from(first.count_ones()) - i64::from(second.count_ones()))
        })
    }

    fn rehash(&mut self) {
        let mut key = 0;
        for p in [Player::First, Player::Second] {
            let mut b = self.discs(p);
            while b != 0 {
                key ^= zobrist(GameId::Othello8, b.trailing_zeros() as usize, p);
                b &= b - 1;
            }
        }
        if self.mover == Player::Second {
            key ^= side_key(GameId::Othello8);
        }
        self.key = key;
    }

    fn toggle_keys(&mut self, mut flipped: u64) {
        while flipped != 0 {
            let cell = flipped.trailing_zeros() as usize;
            self.key ^= zobrist(GameId::Othello8, cell, Player::First)
                ^ zobrist(GameId::Othello8, cell, Player::Second);
            flipped &= flipped - 1;
        }
    }
}

impl Default for Othello {
    fn default() -> Self {
        Othello::new()
    }
}

impl fmt::Debug for Othello {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_notation())
    }
}

impl Game for Othello {
    fn to_move(&self) -> Player {
        self.mover
    }

    fn legal_actions(&self) -> Vec<Action> {
        if self.outcome.is_some() {
            return Vec::new();
        }
        let mut moves = placements(self.discs(self.mover), self.discs(self.mover.opponent()));
        if moves == 0 {
            return vec![Action(PASS)];
        }
        let mut out = Vec::with_capacity(moves.count_ones() as usize);
        while moves != 0 {
            out.push(Action(moves.trailing_zeros() as u16));
            moves &= moves - 1;
        }
        out
    }

    fn apply(&mut self, action: Action) -> Result<(), GameError> {
        if self.outcome.is_some() {
            return Err(illegal(self, action));
        }
        let me = self.mover as usize;
        let them = 1 - me;
        let legal = placements(self.discs[me], self.discs[them]);
        let flipped = if action.0 == PASS && legal == 0 {
            0
        } else if action.0 < 64 && legal & (1u64 << action.0) != 0 {
            let cell = action.0 as usize;
            let flipped = flips(cell, self.discs[me], self.discs[them]);
            self.discs[me] |= flipped | (1u64 << cell);
            self.discs[them] &= !flipped;
            self.key ^= zobrist(GameId::Othello8, cell, self.mover);
            self.toggle_keys(flipped);
            flipped
        } else {
            return Err(illegal(self, action));
        };
        self.history.push(Frame {
            action: action.0,
            flipped,
            outcome: self.outcome,
        });
        self.key ^= side_key(GameId::Othello8);
        self.mover = self.mover.opponent();
        self.ply += 1;
        self.outcome = self.compute_outcome();
        Ok(())
    }

    fn undo(&mut self) -> Result<(), GameError> {
        let frame = self.history.pop().ok_or(GameError::EmptyHistory)?;
        self.mover = self.mover.opponent();
        self.key ^= side_key(GameId::Othello8);
        if frame.action != PASS {
            let me = self.mover as usize;
            let cell = frame.action as usize;
            self.discs[me] &= !(frame.flipped | (1u64 << cell));
            self.discs[1 - me] |= frame.flipped;
            self.key ^= zobrist(GameId::Othello8, cell, self.mover);
            self.toggle_keys(frame.flipped);
        }
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
        match action.0 {
            PASS => "pass".into(),
            c if c < 64 => format!("{}{}", (b'a' + (c % 8) as u8) as char, c / 8 + 1),
            c => format!("#{c}"),
        }
    }
}

impl BoardGame for Othello {
    fn from_spec(spec: &GameSpec) -> Result<Self, GameError> {
        spec.validate()?;
        if spec.id != GameId::Othello8 {
            return Err(GameError::InvalidSpec(format!("expected othello8, got {}", spec.id)));
        }
        let at = |r: usize, c: usize| 1u64 << (r * 8 + c);
        let mut game = Othello {
            spec: spec.clone(),
            discs: [at(3, 4) | at(4, 3), at(3, 3) | at(4, 4)],
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
        let rows: Vec<String> = (0..8)
            .map(|r| {
                (0..8)
                    .map(|c| {
                        let bit = 1u64 << (r * 8 + c);
                        cell_char(if self.discs[0] & bit != 0 {
                            Some(Player::First)
                        } else if self.discs[1] & bit != 0 {
                            Some(Player::Second)
                        } else {
                            None
                        })
                    })
                    .collect()
            })
            .collect();
        format_notation(GameId::Othello8, &rows, self.mover)
    }

    fn from_notation(spec: &GameSpec, line: &str) -> Result<Self, GameError> {
        let (rows, mover) = split_notation(GameId::Othello8, line)?;
        check_rows(spec, &rows)?;
        let mut game = Othello::from_spec(spec)?;
        game.discs = [0, 0];
        for (i, ch) in rows.iter().flat_map(|r| r.chars()).enumerate() {
            if let Some(p) = parse_cell(ch)? {
                game.discs[p as usize] |= 1u64 << i;
            }
        }
        game.mover = mover;
        game.rehash();
        game.outcome = game.compute_outcome();
        Ok(game)
    }
}
