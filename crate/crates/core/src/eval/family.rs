use std::fmt::Write as _;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Evaluator, Featurized};
use crate::game::{mix64, GameId};

/// Largest magnitude a heuristic may return.
pub const HEURISTIC_BOUND: f64 = 0.999_999;
/// Relative amplitude of the seeded weight perturbations.
const WEIGHT_SPREAD: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum FamilyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("family needs at least one member")]
    Empty,
}

/// Linear feature heuristic squashed into `(-1, 1)` with deterministic
/// per-position noise.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEval {
    pub game: GameId,
    pub seed: u64,
    pub index: usize,
    pub weights: Vec<f64>,
    /// Amplitude of the hash noise.
    pub noise: f64,
    /// Uses the exact game value instead of features when available.
    pub oracle: bool,
}

impl FeatureEval {
    fn noise_at(&self, key: u64) -> f64 {
        if self.noise == 0.0 {
            return 0.0;
        }
        let h = mix64(key ^ mix64(self.seed ^ (self.index as u64).rotate_left(40)));
        self.noise * ((h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0)
    }
}

impl<G: Featurized> Evaluator<G> for FeatureEval {
    fn evaluate(&self, state: &G) -> f64 {
        let noise = self.noise_at(state.key());
        let raw = match state.oracle_value().filter(|_| self.oracle) {
            Some(v) => 0.9 * f64::from(v) + noise,
            None => {
                let sum: f64 = state
                    .features()
                    .iter()
                    .zip(&self.weights)
                    .map(|(x, w)| x * w)
                    .sum();
                (sum + noise).tanh()
            }
        };
        raw.clamp(-HEURISTIC_BOUND, HEURISTIC_BOUND)
    }
}

/// A seeded set of evaluation functions for one game.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicFamily {
    pub game: GameId,
    pub seed: u64,
    pub epsilon: f64,
    pub members: Vec<FeatureEval>,
}

impl HeuristicFamily {
    /// Member 0 carries the baseline weights and no noise. The others get
    /// multiplicative weight perturbations and noise of amplitude `epsilon`.
    /// For TicTacToe, member 1 is the noisy exact oracle.
    pub fn generate<G: Featurized>(game: GameId, count: usize, seed: u64, epsilon: f64) -> Self {
        let base = G::baseline_weights();
        let members = (0..count)
            .map(|index| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ index as u64));
                let weights = if index == 0 {
                    base.to_vec()
                } else {
                    base.iter()
                        .map(|w| w * (1.0 + WEIGHT_SPREAD * rng.random_range(-1.0..=1.0)))
                        .collect()
                };
                FeatureEval {
                    game,
                    seed,
                    index,
                    weights,
                    noise: if index == 0 { 0.0 } else { epsilon },
                    oracle: game == GameId::TicTacToe && index == 1,
                }
            })
            .collect();
        HeuristicFamily {
            game,
            seed,
            epsilon,
            members,
        }
    }

    pub fn to_descriptor(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "family game={} seed={} count={} epsilon={}",
            self.game,
            self.seed,
            self.members.len(),
            self.epsilon
        );
        for m in &self.members {
            let weights: Vec<String> = m.weights.iter().map(f64::to_string).collect();
            let _ = writeln!(
                out,
                "member {} oracle={} noise={} weights={}",
                m.index,
                m.oracle,
                m.noise,
                weights.join(",")
            );
        }
        out
    }

    pub fn from_descriptor(text: &str) -> Result<Self, FamilyError> {
        let mut header: Option<(GameId, u64, usize, f64)> = None;
        let mut members = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| FamilyError::Parse { line: i + 1, message };
            let mut words = line.split_whitespace();
            let kind = words.next().unwrap_or_default();
            match kind {
                "family" => {
                    let f = fields(words).map_err(&err)?;
                    header = Some((
                        get(&f, "game").map_err(&err)?,
                        get(&f, "seed").map_err(&err)?,
                        get(&f, "count").map_err(&err)?,
                        get(&f, "epsilon").map_err(&err)?,
                    ));
                }
                "member" => {
                    let (game, seed, ..) = header.ok_or_else(|| err("member before family".into()))?;
                    let index: usize = words
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| err("missing member index".into()))?;
                    let f = fields(words).map_err(&err)?;
                    let weights = f
                        .iter()
                        .find(|(k, _)| *k == "weights")
                        .ok_or_else(|| err("missing `weights`".into()))?
                        .1
                        .split(',')
                        .map(|w| w.parse::<f64>().map_err(|e| err(format!("weight `{w}`: {e}"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    members.push(FeatureEval {
                        game,
                        seed,
                        index,
                        weights,
                        noise: get(&f, "noise").map_err(&err)?,
                        oracle: get(&f, "oracle").map_err(&err)?,
                    });
                }
                other => return Err(err(format!("unknown record `{other}`"))),
            }
        }
        let (game, seed, count, epsilon) = header.ok_or(FamilyError::Empty)?;
        if members.is_empty() {
            return Err(FamilyError::Empty);
        }
        if members.len() != count {
            return Err(FamilyError::Parse {
                line: text.lines().count(),
                message: format!("expected {count} members, found {}", members.len()),
            });
        }
        Ok(HeuristicFamily {
            game,
            seed,
            epsilon,
            members,
        })
    }
}

fn fields<'a>(words: impl Iterator<Item = &'a str>) -> Result<Vec<(&'a str, &'a str)>, String> {
    words
        .map(|w| w.split_once('=').ok_or_else(|| format!("expected key=value, got `{w}`")))
        .collect()
}

fn get<T: std::str::FromStr>(fields: &[(&str, &str)], key: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    let (_, v) = fields
        .iter()
        .find(|(k, _)| *k == key)
        .ok_or_else(|| format!("missing `{key}`"))?;
    v.parse().map_err(|e| format!("`{key}`: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::oracle::tictactoe_table;
    use crate::eval::{discretize, EvalRange};
    use crate::game::{Action, Breakthrough, Game, TicTacToe};

    fn random_states<G: Game>(initial: &G, n: usize, seed: u64) -> Vec<G> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        while out.len() < n {
            let mut s = initial.clone();
            let plies = rng.random_range(0..12);
            for _ in 0..plies {
                if s.is_terminal() {
                    break;
                }
                let a = *s.legal_actions().choose(&mut rng).unwrap();
                s.apply(a).unwrap();
            }
            if !s.is_terminal() {
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn family_is_deterministic_and_distinct() {
        let a = HeuristicFamily::generate::<Breakthrough>(GameId::Breakthrough, 15, 9, 0.05);
        let b = HeuristicFamily::generate::<Breakthrough>(GameId::Breakthrough, 15, 9, 0.05);
        assert_eq!(a.members.len(), 15);
        assert_eq!(a.members[0].weights, Breakthrough::baseline_weights());
        let states = random_states(&Breakthrough::new(), 100, 4);
        for s in &states {
            for (x, y) in a.members.iter().zip(&b.members) {
                let v = x.evaluate(s);
                assert_eq!(v, y.evaluate(s));
                assert!(v.abs() < 1.0);
            }
        }
        for i in 1..15 {
            assert_ne!(a.members[i].weights, a.members[0].weights);
        }
    }

    #[test]
    fn tictactoe_oracle_member_tracks_exact_values() {
        let fam = HeuristicFamily::generate::<TicTacToe>(GameId::TicTacToe, 3, 1, 0.05);
        let oracle = &fam.members[1];
        assert!(oracle.oracle);
        let mut g = TicTacToe::new();
        g.apply(Action(0)).unwrap();
        g.apply(Action(1)).unwrap();
        // X to move with a forced win.
        assert!(oracle.evaluate(&g) > 0.8);
    }

    #[test]
    fn discretized_oracle_preserves_ranking() {
        // Rankings under f and its discretization agree except where rounding
        // collapses values closer than one quantum.
        let fam = HeuristicFamily::generate::<TicTacToe>(GameId::TicTacToe, 2, 5, 0.05);
        let f = &fam.members[1];
        let delta = 10_000;
        let scale = EvalRange::UNIT.scale();
        let mut values: Vec<f64> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        collect(&mut TicTacToe::new(), f, &mut seen, &mut values);
        assert!(values.len() < tictactoe_table().len());
        for (i, &x) in values.iter().enumerate() {
            for &y in &values[i + 1..] {
                let (dx, dy) = (discretize(x, delta, scale), discretize(y, delta, scale));
                let (lo, hi, dlo, dhi) = if x <= y { (x, y, dx, dy) } else { (y, x, dy, dx) };
                assert!(dlo <= dhi);
                if dlo == dhi && lo < hi {
                    assert!(hi - lo < scale / delta as f64);
                }
            }
        }
    }

    fn collect(
        g: &mut TicTacToe,
        f: &FeatureEval,
        seen: &mut std::collections::HashSet<u64>,
        out: &mut Vec<f64>,
    ) {
        if g.is_terminal() || !seen.insert(g.key()) {
            return;
        }
        out.push(f.evaluate(g));
        for a in g.legal_actions() {
            g.apply(a).unwrap();
            collect(g, f, seen, out);
            g.undo().unwrap();
        }
    }

    #[test]
    fn descriptor_round_trips() {
        let fam = HeuristicFamily::generate::<TicTacToe>(GameId::TicTacToe, 4, 77, 0.03);
        let text = fam.to_descriptor();
        assert_eq!(HeuristicFamily::from_descriptor(&text), Ok(fam));
    }

    #[test]
    fn descriptor_errors_carry_line_numbers() {
        let text = "family game=hex seed=1 count=1 epsilon=0\nmember 0 oracle=false noise=x weights=1,2\n";
        match HeuristicFamily::from_descriptor(text) {
            Err(FamilyError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert_eq!(HeuristicFamily::from_descriptor(""), Err(FamilyError::Empty));
    }
}
