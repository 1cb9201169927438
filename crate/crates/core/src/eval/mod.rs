//! Evaluation functions and the adapters the searches rely on.
//!
//! All values are from the first player's point of view. Heuristics return
//! values in the open interval `(-1, 1)`; [`SemiCompleted`] substitutes the
//! exact terminal score on ended states.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::game::{Game, Player, RandomTree};

mod family;
mod features;
pub mod oracle;

pub use family::{FamilyError, FeatureEval, HeuristicFamily};
pub use features::Featurized;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("degenerate evaluation range (M = {max}, m = {min})")]
    DegenerateRange { max: f64, min: f64 },
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("discretization constant must be positive, got {0}")]
    BadDelta(i64),
}

/// A pure, thread-safe state evaluation.
pub trait Evaluator<G>: Send + Sync {
    fn evaluate(&self, state: &G) -> f64;

    /// Whether every output is an integer. Zero-window searches require it.
    fn integer_valued(&self) -> bool {
        false
    }
}

impl<G, E: Evaluator<G> + ?Sized> Evaluator<G> for &E {
    fn evaluate(&self, state: &G) -> f64 {
        (**self).evaluate(state)
    }

    fn integer_valued(&self) -> bool {
        (**self).integer_valued()
    }
}

impl<G, E: Evaluator<G> + ?Sized> Evaluator<G> for std::sync::Arc<E> {
    fn evaluate(&self, state: &G) -> f64 {
        (**self).evaluate(state)
    }

    fn integer_valued(&self) -> bool {
        (**self).integer_valued()
    }
}

/// Evaluates a batch of states, in parallel when requested. The output order
/// always matches the input order.
pub fn evaluate_batch<G: Sync, E: Evaluator<G> + ?Sized>(
    eval: &E,
    states: &[G],
    parallel: bool,
) -> Vec<f64> {
    if parallel && states.len() > 1 {
        states.par_iter().map(|s| eval.evaluate(s)).collect()
    } else {
        states.iter().map(|s| eval.evaluate(s)).collect()
    }
}

/// Converts a first-player-view value to the view of `player`.
pub fn relative_value(value: f64, player: Player) -> f64 {
    value * player.sign()
}

/// Exact terminal score on ended states, the wrapped heuristic elsewhere.
#[derive(Debug, Clone)]
pub struct SemiCompleted<E>(pub E);

impl<G: Game, E: Evaluator<G>> Evaluator<G> for SemiCompleted<E> {
    fn evaluate(&self, state: &G) -> f64 {
        match state.outcome() {
            Some(o) => o.value(),
            None => self.0.evaluate(state),
        }
    }

    fn integer_valued(&self) -> bool {
        self.0.integer_valued()
    }
}

/// Practical value range of an evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRange {
    pub max: f64,
    pub min: f64,
    pub samples: usize,
}

impl EvalRange {
    /// The range of a terminal scorer with both outcomes observed.
    pub const UNIT: EvalRange = EvalRange {
        max: 1.0,
        min: -1.0,
        samples: 1,
    };

    /// Max and min terminal score over `samples` uniformly random playouts.
    pub fn estimate<G: Game>(initial: &G, samples: usize, seed: u64) -> Result<EvalRange, EvalError> {
        if samples == 0 {
            return Err(EvalError::NoSamples);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut max, mut min) = (f64::NEG_INFINITY, f64::INFINITY);
        for _ in 0..samples {
            let v = random_playout(initial, &mut rng).value();
            max = max.max(v);
            min = min.min(v);
        }
        Ok(EvalRange { max, min, samples })
    }

    pub fn scale(&self) -> f64 {
        self.max.abs().max(self.min.abs())
    }
}

/// Plays uniformly random moves to the end and returns the outcome.
pub fn random_playout<G: Game, R: Rng>(initial: &G, rng: &mut R) -> crate::game::Outcome {
    let mut state = initial.clone();
    loop {
        if let Some(o) = state.outcome() {
            return o;
        }
        let actions = state.legal_actions();
        let a = actions[rng.random_range(0..actions.len())];
        state.apply(a).expect("legal action");
    }
}

/// `round(δ·f / max(|M|, |m|))` with rounding half away from zero.
#[derive(Debug, Clone)]
pub struct DiscretizedEval<E> {
    pub base: E,
    pub delta: i64,
    pub range: EvalRange,
}

impl<E> DiscretizedEval<E> {
    pub fn new(base: E, delta: i64, range: EvalRange) -> Result<Self, EvalError> {
        if delta <= 0 {
            return Err(EvalError::BadDelta(delta));
        }
        if range.scale() == 0.0 {
            return Err(EvalError::DegenerateRange {
                max: range.max,
                min: range.min,
            });
        }
        Ok(DiscretizedEval { base, delta, range })
    }

    pub fn discretize(&self, value: f64) -> f64 {
        discretize(value, self.delta, self.range.scale())
    }
}

pub fn discretize(value: f64, delta: i64, scale: f64) -> f64 {
    (delta as f64 * value / scale).round()
}

impl<G, E: Evaluator<G>> Evaluator<G> for DiscretizedEval<E> {
    fn evaluate(&self, state: &G) -> f64 {
        self.discretize(self.base.evaluate(state))
    }

    fn integer_valued(&self) -> bool {
        true
    }
}

/// Affine map of `clamp(value, m, M)` onto `[0, 1]`.
pub fn normalize_unit(value: f64, range: &EvalRange) -> Result<f64, EvalError> {
    let (max, min) = (range.max, range.min);
    if max <= min {
        return Err(EvalError::DegenerateRange { max, min });
    }
    Ok((value.clamp(min, max) - min) / (max - min))
}

pub fn denormalize(unit: f64, range: &EvalRange) -> Result<f64, EvalError> {
    let (max, min) = (range.max, range.min);
    if max <= min {
        return Err(EvalError::DegenerateRange { max, min });
    }
    Ok(min + unit * (max - min))
}

/// Leaf score at leaves, interior hint elsewhere. Integer valued.
#[derive(Debug, Clone, Copy, Default)]
pub struct TreeEval;

impl Evaluator<RandomTree> for TreeEval {
    fn evaluate(&self, state: &RandomTree) -> f64 {
        f64::from(state.node_value())
    }

    fn integer_valued(&self) -> bool {
        true
    }
}

/// Wraps a closure as an evaluator.
#[derive(Clone)]
pub struct FnEval<F>(pub F);

impl<G, F: Fn(&G) -> f64 + Send + Sync> Evaluator<G> for FnEval<F> {
    fn evaluate(&self, state: &G) -> f64 {
        (self.0)(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Action, TicTacToe};

    struct Const(f64);
    impl<G> Evaluator<G> for Const {
        fn evaluate(&self, _: &G) -> f64 {
            self.0
        }
    }

    fn won_board() -> TicTacToe {
        let mut g = TicTacToe::new();
        for a in [0, 3, 1, 4, 2] {
            g.apply(Action(a)).unwrap();
        }
        g
    }

    #[test]
    fn semicompleted_uses_terminal_score() {
        let e = SemiCompleted(Const(0.37));
        assert_eq!(e.evaluate(&won_board()), 1.0);
        assert_eq!(e.evaluate(&TicTacToe::new()), 0.37);
        let mut draw = TicTacToe::new();
        for a in [0, 1, 2, 4, 3, 5, 7, 6, 8] {
            draw.apply(Action(a)).unwrap();
        }
        assert_eq!(draw.terminal_value(), Ok(0));
        assert_eq!(e.evaluate(&draw), 0.0);
    }

    #[test]
    fn discretization_rounds_half_away_from_zero() {
        let d = |v: f64| discretize(v, 100, 1.0);
        assert_eq!(d(0.5), 50.0);
        assert_eq!(d(-0.005), -1.0);
        assert_eq!(d(0.005), 1.0);
        assert_eq!(d(0.0049), 0.0);
        let e = DiscretizedEval::new(Const(0.5), 3000, EvalRange::UNIT).unwrap();
        assert_eq!(Evaluator::<()>::evaluate(&e, &()), 1500.0);
        assert!(Evaluator::<()>::integer_valued(&e));
    }

    #[test]
    fn discretization_rejects_degenerate_range() {
        let zero = EvalRange {
            max: 0.0,
            min: 0.0,
            samples: 5,
        };
        assert!(matches!(
            DiscretizedEval::new(Const(0.1), 100, zero),
            Err(EvalError::DegenerateRange { .. })
        ));
        assert_eq!(
            DiscretizedEval::new(Const(0.1), 0, EvalRange::UNIT).err(),
            Some(EvalError::BadDelta(0))
        );
    }

    #[test]
    fn discretization_is_monotone() {
        let mut prev = f64::NEG_INFINITY;
        for i in -1000..=1000 {
            let v = discretize(f64::from(i) / 1000.0, 37, 0.8);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn normalization_endpoints_and_inverse() {
        let r = EvalRange {
            max: 0.8,
            min: -0.4,
            samples: 1,
        };
        assert_eq!(normalize_unit(0.8, &r), Ok(1.0));
        assert_eq!(normalize_unit(-0.4, &r), Ok(0.0));
        assert!((normalize_unit(0.2, &r).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(normalize_unit(5.0, &r), Ok(1.0));
        for i in 0..=100 {
            let u = f64::from(i) / 100.0;
            let back = normalize_unit(denormalize(u, &r).unwrap(), &r).unwrap();
            assert!((back - u).abs() < 1e-12);
        }
        let flat = EvalRange {
            max: 0.3,
            min: 0.3,
            samples: 1,
        };
        assert!(normalize_unit(0.3, &flat).is_err());
    }

    #[test]
    fn relative_value_negates_for_second() {
        assert_eq!(relative_value(0.4, Player::First), 0.4);
        assert_eq!(relative_value(0.4, Player::Second), -0.4);
    }

    #[test]
    fn range_estimate_sees_both_outcomes() {
        let r = EvalRange::estimate(&TicTacToe::new(), 10_000, 7).unwrap();
        assert_eq!((r.max, r.min, r.samples), (1.0, -1.0, 10_000));
        assert_eq!(
            EvalRange::estimate(&TicTacToe::new(), 0, 7),
            Err(EvalError::NoSamples)
        );
    }

    #[test]
    fn range_of_drawn_stub_is_zero() {
        // Capping Clobber at one ply makes every playout a draw.
        use crate::game::{BoardGame, Clobber, GameId, GameSpec};
        let g = Clobber::from_spec(&GameSpec::new(GameId::Clobber).with_draw_cap(1)).unwrap();
        let r = EvalRange::estimate(&g, 50, 1).unwrap();
        assert_eq!((r.max, r.min), (0.0, 0.0));
    }

    #[test]
    fn batch_preserves_order() {
        let states: Vec<f64> = (0..50).map(f64::from).collect();
        let e = FnEval(|x: &f64| x * 2.0);
        assert_eq!(evaluate_batch(&e, &states, true), evaluate_batch(&e, &states, false));
        assert_eq!(evaluate_batch(&e, &states, true)[7], 14.0);
    }
}
