//! Search algorithms: the depth-bounded alpha-beta family, unbounded
//! best-first minimax and Monte Carlo tree search.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::game::Action;
use crate::solver::Resolution;

pub mod alphabeta;
pub mod best_first;
pub mod deepening;
pub mod mcts;

pub use alphabeta::{order_moves, AbConfig, AbStats, AlphaBeta, Frontier, KbestScope};
pub use best_first::{decide_best_value, decide_safest, Ubfm, UbfmConfig};
pub use deepening::{iterative_deepening, mtdf, DepthMethod, MtdfOutcome};
pub use mcts::{mcts_decide, uct_score, Mcts, MctsConfig, Rollout};

/// Default number of nodes between clock reads.
pub const CLOCK_INTERVAL: u64 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("root state is terminal")]
    TerminalRoot,
    #[error("zero-window search needs an integer-valued evaluation")]
    NonIntegerEval,
    #[error("budget must bound time, depth or nodes")]
    UnboundedBudget,
    #[error("no valued action at the root")]
    NoValuedAction,
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
}

/// Signals that a search ran out of budget mid-iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Aborted;

/// Per-move resource limits. For best-first and Monte Carlo searches
/// `max_nodes` bounds iterations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SearchBudget {
    pub time: Option<Duration>,
    pub max_depth: Option<u32>,
    pub max_nodes: Option<u64>,
}

impl SearchBudget {
    pub fn time(seconds: f64) -> SearchBudget {
        SearchBudget {
            time: Some(Duration::from_secs_f64(seconds)),
            ..Default::default()
        }
    }

    pub fn nodes(n: u64) -> SearchBudget {
        SearchBudget {
            max_nodes: Some(n),
            ..Default::default()
        }
    }

    pub fn depth(d: u32) -> SearchBudget {
        SearchBudget {
            max_depth: Some(d),
            ..Default::default()
        }
    }

    pub fn with_depth(mut self, d: u32) -> SearchBudget {
        self.max_depth = Some(d);
        self
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.time.is_none() && self.max_depth.is_none() && self.max_nodes.is_none() {
            return Err(SearchError::UnboundedBudget);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub action: Action,
    /// Root value, first-player view.
    pub value: f64,
    /// Deepest completed iteration (depth-bounded searches).
    pub depth: u32,
    pub nodes: u64,
    pub iterations: u64,
    pub elapsed: Duration,
    pub resolution: Resolution,
}

/// Node counter with an optional deadline and node cap.
#[derive(Debug, Clone)]
pub struct Clock {
    start: Instant,
    deadline: Option<Instant>,
    max_nodes: Option<u64>,
    pub interval: u64,
    pub nodes: u64,
    enforce: bool,
}

impl Clock {
    pub fn new(budget: &SearchBudget) -> Clock {
        let start = Instant::now();
        Clock {
            start,
            deadline: budget.time.map(|t| start + t),
            max_nodes: budget.max_nodes,
            interval: CLOCK_INTERVAL,
            nodes: 0,
            enforce: true,
        }
    }

    pub fn unlimited() -> Clock {
        Clock::new(&SearchBudget::default())
    }

    /// Counts nodes without ever aborting.
    pub fn set_enforced(&mut self, enforce: bool) {
        self.enforce = enforce;
    }

    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }

    pub fn tick(&mut self) -> Result<(), Aborted> {
        self.nodes += 1;
        if !self.enforce {
            return Ok(());
        }
        if self.max_nodes.is_some_and(|m| self.nodes > m) {
            return Err(Aborted);
        }
        if self.nodes % self.interval == 0 && self.expired() {
            return Err(Aborted);
        }
        Ok(())
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    pub fn out_of_nodes(&self) -> bool {
        self.max_nodes.is_some_and(|m| self.nodes >= m)
    }
}
