use crate::game::{Breakthrough, Clobber, Game, Hex, Othello, Player, TicTacToe};

/// Games with a hand-written feature vector for linear heuristics.
///
/// Features are first-player-view differences, roughly scaled to `[-1, 1]`.
pub trait Featurized: Game {
    fn feature_names() -> &'static [&'static str];

    /// Unperturbed weights of the baseline family member.
    fn baseline_weights() -> &'static [f64];

    fn features(&self) -> Vec<f64>;

    /// Exact game-theoretic value when the game has a built-in oracle.
    fn oracle_value(&self) -> Option<i8> {
        None
    }
}

impl Featurized for TicTacToe {
    fn feature_names() -> &'static [&'static str] {
        &["open_lines", "two_in_line", "center", "corners"]
    }

    fn baseline_weights() -> &'static [f64] {
        &[0.6, 1.5, 0.3, 0.2]
    }

    fn features(&self) -> Vec<f64> {
        let mut open = 0.0;
        let mut twos = 0.0;
        for line in TicTacToe::lines() {
            let count = |p| line.iter().filter(|&&c| self.cell(c) == Some(p)).count();
            let (x, o) = (count(Player::First), count(Player::Second));
            if o == 0 && x > 0 {
                open += 1.0;
                if x == 2 {
                    twos += 1.0;
                }
            }
            if x == 0 && o > 0 {
                open -= 1.0;
                if o == 2 {
                    twos -= 1.0;
                }
            }
        }
        let owner = |c: usize| match self.cell(c) {
            Some(p) => p.sign(),
            None => 0.0,
        };
        let corners: f64 = [0, 2, 6, 8].into_iter().map(owner).sum();
        vec![open / 8.0, twos / 3.0, owner(4), corners / 4.0]
    }

    fn oracle_value(&self) -> Option<i8> {
        super::oracle::tictactoe_value(self)
    }
}

impl Featurized for Breakthrough {
    fn feature_names() -> &'static [&'static str] {
        &["material", "advancement", "frontier", "mobility"]
    }

    fn baseline_weights() -> &'static [f64] {
        &[3.0, 1.5, 1.0, 0.3]
    }

    fn features(&self) -> Vec<f64> {
        let (rows, cols) = (self.rows(), self.cols());
        let depth = (rows - 1) as f64;
        let mut advance = [0.0f64; 2];
        let mut front = [0.0f64; 2];
        for r in 0..rows {
            for c in 0..cols {
                if let Some(p) = self.cell(r, c) {
                    let progress = match p {
                        Player::First => r as f64,
                        Player::Second => (rows - 1 - r) as f64,
                    } / depth;
                    advance[p as usize] += progress;
                    front[p as usize] = front[p as usize].max(progress);
                }
            }
        }
        let start = (2 * cols) as f64;
        let material =
            (f64::from(self.pieces(Player::First)) - f64::from(self.pieces(Player::Second))) / start;
        let mobility = {
            let mine = self.legal_actions().len() as f64;
            let sign = self.to_move().sign();
            // Mover mobility only; normalized by the maximum of three moves per piece.
            sign * mine / (3.0 * start)
        };
        vec![
            material,
            (advance[0] - advance[1]) / start,
            front[0] - front[1],
            mobility,
        ]
    }
}

impl Featurized for Othello {
    fn feature_names() -> &'static [&'static str] {
        &["discs", "mobility", "corners", "edges"]
    }

    fn baseline_weights() -> &'static [f64] {
        &[0.5, 1.2, 2.0, 0.4]
    }

    fn features(&self) -> Vec<f64> {
        const CORNERS: u64 = 0x8100_0000_0000_0081;
        const EDGES: u64 = 0xff81_8181_8181_81ff & !CORNERS;
        let (f, s) = (self.discs(Player::First), self.discs(Player::Second));
        let diff = |mask: u64| f64::from((f & mask).count_ones()) - f64::from((s & mask).count_ones());
        let (mf, ms) = (
            f64::from(self.mobility(Player::First)),
            f64::from(self.mobility(Player::Second)),
        );
        let mobility = if mf + ms > 0.0 { (mf - ms) / (mf + ms) } else { 0.0 };
        vec![diff(u64::MAX) / 64.0, mobility, diff(CORNERS) / 4.0, diff(EDGES) / 24.0]
    }
}

impl Featurized for Hex {
    fn feature_names() -> &'static [&'static str] {
        &["distance", "center"]
    }

    fn baseline_weights() -> &'static [f64] {
        &[2.5, 0.5]
    }

    fn features(&self) -> Vec<f64> {
        let n = self.size();
        let d = |p| f64::from(self.connection_distance(p).min(n as u32 * n as u32));
        let distance = (d(Player::Second) - d(Player::First)) / n as f64;
        let mid = (n as f64 - 1.0) / 2.0;
        let mut center = 0.0;
        for (i, cell) in self.cells().iter().enumerate() {
            if let Some(p) = cell {
                let (r, c) = ((i / n) as f64, (i % n) as f64);
                let closeness = 1.0 - ((r - mid).abs() + (c - mid).abs()) / (2.0 * mid.max(1.0));
                center += p.sign() * closeness;
            }
        }
        vec![distance, center / n as f64]
    }
}

impl Featurized for Clobber {
    fn feature_names() -> &'static [&'static str] {
        &["mobility", "active", "stones"]
    }

    fn baseline_weights() -> &'static [f64] {
        &[2.0, 1.0, 0.3]
    }

    fn features(&self) -> Vec<f64> {
        let diff = |f: &dyn Fn(Player) -> usize| {
            let (a, b) = (f(Player::First) as f64, f(Player::Second) as f64);
            if a + b > 0.0 {
                (a - b) / (a + b)
            } else {
                0.0
            }
        };
        vec![
            diff(&|p| self.mobility(p)),
            diff(&|p| self.active_stones(p)),
            diff(&|p| self.stones(p)),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Action;

    fn check_shape<G: Featurized>(g: &G) {
        assert_eq!(G::feature_names().len(), G::baseline_weights().len());
        let f = g.features();
        assert_eq!(f.len(), G::feature_names().len());
        assert!(f.iter().all(|x| x.is_finite() && x.abs() <= 1.0 + 1e-9), "{f:?}");
    }

    #[test]
    fn feature_vectors_are_bounded() {
        check_shape(&TicTacToe::new());
        check_shape(&Breakthrough::new());
        check_shape(&Othello::new());
        check_shape(&Hex::new());
        check_shape(&Clobber::new());
    }

    #[test]
    fn tictactoe_center_feature_has_sign() {
        let mut g = TicTacToe::new();
        g.apply(Action(4)).unwrap();
        assert_eq!(g.features()[2], 1.0);
        assert!(g.features()[0] > 0.0);
    }

    #[test]
    fn symmetric_openings_are_balanced() {
        assert_eq!(Othello::new().features(), vec![0.0; 4]);
        assert_eq!(Hex::new().features()[0], 0.0);
        assert_eq!(Clobber::new().features()[2], 0.0);
    }
}
