//! Algorithm specification strings and the move-choosing engines built from
//! them.

use std::fmt;
use std::str::FromStr;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::eval::oracle::tictactoe_optimal_actions;
use crate::eval::{DiscretizedEval, EvalRange, Evaluator, SemiCompleted};
use crate::game::{mix64, Game, TicTacToe};
use crate::search::{
    iterative_deepening, AbConfig, DepthMethod, Frontier, Mcts, MctsConfig, Rollout, SearchBudget, SearchError,
    SearchResult, Ubfm, UbfmConfig,
};
use crate::solver::Resolution;
use crate::tt::{TranspositionTable, DEFAULT_CEILING};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("unknown algorithm `{0}`")]
    Unknown(String),
    #[error("`{name}` needs a parameter, as in `{name}:{example}`")]
    MissingParam { name: &'static str, example: &'static str },
    #[error("`{0}` takes no parameter")]
    UnexpectedParam(String),
    #[error("bad parameter `{value}` for `{name}`")]
    BadParam { name: String, value: String },
}

/// One of the compared search algorithms with its tuning parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlgorithmSpec {
    /// Iterative deepening alpha-beta.
    AlphaBeta,
    /// Alpha-beta with Child Batching at the frontier.
    AlphaBetaBatch,
    Pvs { delta: i64 },
    Mtdf { delta: i64 },
    Kbest { k: usize },
    /// Unbounded best-first minimax, best-value decision.
    Ubfm,
    /// Unbounded best-first minimax, safe decision.
    UbfmSafe,
    Mcts { c: f64 },
    MctsH { c: f64 },
}

impl AlgorithmSpec {
    pub fn id(&self) -> &'static str {
        match self {
            AlgorithmSpec::AlphaBeta => "ab",
            AlgorithmSpec::AlphaBetaBatch => "ab_batch",
            AlgorithmSpec::Pvs { .. } => "pvs",
            AlgorithmSpec::Mtdf { .. } => "mtdf",
            AlgorithmSpec::Kbest { .. } => "kbest",
            AlgorithmSpec::Ubfm => "ubfm",
            AlgorithmSpec::UbfmSafe => "ubfm_s",
            AlgorithmSpec::Mcts { .. } => "mcts",
            AlgorithmSpec::MctsH { .. } => "mcts_h",
        }
    }

    /// Parameter as `name=value`, empty for parameterless algorithms.
    pub fn params(&self) -> String {
        match self {
            AlgorithmSpec::Pvs { delta } | AlgorithmSpec::Mtdf { delta } => format!("delta={delta}"),
            AlgorithmSpec::Kbest { k } => format!("k={k}"),
            AlgorithmSpec::Mcts { c } | AlgorithmSpec::MctsH { c } => format!("C={c}"),
            _ => String::new(),
        }
    }

    pub fn is_ubfm(&self) -> bool {
        matches!(self, AlgorithmSpec::Ubfm | AlgorithmSpec::UbfmSafe)
    }

    /// Same algorithm with its parameter replaced by `value`.
    pub fn with_param(&self, value: &str) -> Result<AlgorithmSpec, SpecError> {
        format!("{}:{value}", self.id()).parse()
    }
}

impl fmt::Display for AlgorithmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.params();
        match p.split_once('=') {
            Some((_, v)) => write!(f, "{}:{v}", self.id()),
            None => f.write_str(self.id()),
        }
    }
}

fn param<T: FromStr>(name: &str, keys: &[&str], raw: &str) -> Result<T, SpecError> {
    let value = match raw.split_once('=') {
        Some((k, v)) if keys.contains(&k.trim()) => v.trim(),
        Some(_) => raw,
        None => raw.trim(),
    };
    let bad = || SpecError::BadParam {
        name: name.into(),
        value: raw.into(),
    };
    value.parse().map_err(|_| bad())
}

impl FromStr for AlgorithmSpec {
    type Err = SpecError;

    /// Parses `name` or `name:value` (also `name:key=value`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, raw) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p)),
            None => (s, None),
        };
        let need = |name: &'static str, example: &'static str| {
            raw.ok_or(SpecError::MissingParam { name, example })
        };
        let none = |spec: AlgorithmSpec| match raw {
            Some(_) => Err(SpecError::UnexpectedParam(name.into())),
            None => Ok(spec),
        };
        let positive_c = |c: f64| {
            if c.is_finite() && c >= 0.0 {
                Ok(c)
            } else {
                Err(SpecError::BadParam {
                    name: name.into(),
                    value: c.to_string(),
                })
            }
        };
        let positive_delta = |d: i64| {
            if d > 0 {
                Ok(d)
            } else {
                Err(SpecError::BadParam {
                    name: name.into(),
                    value: d.to_string(),
                })
            }
        };
        match name {
            "ab" => none(AlgorithmSpec::AlphaBeta),
            "ab_batch" => none(AlgorithmSpec::AlphaBetaBatch),
            "ubfm" => none(AlgorithmSpec::Ubfm),
            "ubfm_s" => none(AlgorithmSpec::UbfmSafe),
            "pvs" => Ok(AlgorithmSpec::Pvs {
                delta: positive_delta(param(name, &["delta", "d"], need("pvs", "100")?)?)?,
            }),
            "mtdf" => Ok(AlgorithmSpec::Mtdf {
                delta: positive_delta(param(name, &["delta", "d"], need("mtdf", "100")?)?)?,
            }),
            "kbest" => {
                let k: usize = param(name, &["k"], need("kbest", "3")?)?;
                if k == 0 {
                    return Err(SpecError::BadParam {
                        name: name.into(),
                        value: "0".into(),
                    });
                }
                Ok(AlgorithmSpec::Kbest { k })
            }
            "mcts" => Ok(AlgorithmSpec::Mcts {
                c: positive_c(param(name, &["C", "c"], need("mcts", "1.41")?)?)?,
            }),
            "mcts_h" => Ok(AlgorithmSpec::MctsH {
                c: positive_c(param(name, &["C", "c"], need("mcts_h", "1.41")?)?)?,
            }),
            _ => Err(SpecError::Unknown(s.into())),
        }
    }
}

/// Parses a comma-separated list of algorithm specs.
pub fn parse_spec_list(list: &str) -> Result<Vec<AlgorithmSpec>, SpecError> {
    list.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

/// A player that produces one action per call within a budget.
pub trait Engine<G>: Send {
    fn label(&self) -> String;

    fn choose(&mut self, state: &G, budget: &SearchBudget) -> Result<SearchResult, SearchError>;
}

/// Engine running one of the compared algorithms with the integrated solver
/// and a transposition table kept across moves.
pub struct SearchEngine<E> {
    pub spec: AlgorithmSpec,
    eval: SemiCompleted<E>,
    discrete: Option<DiscretizedEval<SemiCompleted<E>>>,
    pub tt: TranspositionTable,
    seed: u64,
    moves: u64,
}

impl<E: Clone> SearchEngine<E> {
    /// `eval` is the heuristic, with values in `[-1, 1]`.
    pub fn new(spec: AlgorithmSpec, eval: E, seed: u64) -> Result<Self, SearchError> {
        let eval = SemiCompleted(eval);
        let discrete = match spec {
            AlgorithmSpec::Pvs { delta } | AlgorithmSpec::Mtdf { delta } => {
                Some(DiscretizedEval::new(eval.clone(), delta, EvalRange::UNIT)?)
            }
            _ => None,
        };
        Ok(SearchEngine {
            spec,
            eval,
            discrete,
            tt: TranspositionTable::new(DEFAULT_CEILING),
            seed,
            moves: 0,
        })
    }
}

impl<G: Game, E: Evaluator<G> + Clone> Engine<G> for SearchEngine<E> {
    fn label(&self) -> String {
        self.spec.to_string()
    }

    fn choose(&mut self, state: &G, budget: &SearchBudget) -> Result<SearchResult, SearchError> {
        self.moves += 1;
        let depth_cfg = AbConfig {
            solver: true,
            ..Default::default()
        };
        let tt = &mut self.tt;
        match self.spec {
            AlgorithmSpec::AlphaBeta => {
                iterative_deepening(state, &self.eval, tt, depth_cfg, DepthMethod::AlphaBeta, budget)
            }
            AlgorithmSpec::AlphaBetaBatch => {
                let cfg = AbConfig {
                    frontier: Frontier::Batched,
                    ..depth_cfg
                };
                iterative_deepening(state, &self.eval, tt, cfg, DepthMethod::AlphaBeta, budget)
            }
            AlgorithmSpec::Kbest { k } => {
                let cfg = AbConfig {
                    kbest: Some(k),
                    ..depth_cfg
                };
                iterative_deepening(state, &self.eval, tt, cfg, DepthMethod::AlphaBeta, budget)
            }
            AlgorithmSpec::Pvs { .. } => {
                let cfg = AbConfig { pvs: true, ..depth_cfg };
                let eval = self.discrete.as_ref().expect("discretized eval");
                iterative_deepening(state, eval, tt, cfg, DepthMethod::AlphaBeta, budget)
            }
            AlgorithmSpec::Mtdf { .. } => {
                let eval = self.discrete.as_ref().expect("discretized eval");
                iterative_deepening(state, eval, tt, depth_cfg, DepthMethod::Mtdf, budget)
            }
            AlgorithmSpec::Ubfm | AlgorithmSpec::UbfmSafe => {
                let mut u = Ubfm::new(&self.eval, tt, UbfmConfig::default());
                u.choose(state, budget, self.spec == AlgorithmSpec::UbfmSafe)
            }
            AlgorithmSpec::Mcts { c } | AlgorithmSpec::MctsH { c } => {
                let rollout = match self.spec {
                    AlgorithmSpec::MctsH { .. } => Rollout::Heuristic(EvalRange::UNIT),
                    _ => Rollout::Random,
                };
                let cfg = MctsConfig {
                    c,
                    rollout,
                    solver: true,
                    seed: mix64(self.seed ^ self.moves),
                };
                Mcts::new(&self.eval, tt, cfg)?.choose(state, budget)
            }
        }
    }
}

fn instant_result(action: crate::game::Action) -> SearchResult {
    SearchResult {
        action,
        value: 0.0,
        depth: 0,
        nodes: 0,
        iterations: 0,
        elapsed: std::time::Duration::ZERO,
        resolution: Resolution::Unsolved,
    }
}

/// Uniformly random legal moves.
pub struct RandomEngine {
    rng: ChaCha8Rng,
}

impl RandomEngine {
    pub fn new(seed: u64) -> RandomEngine {
        RandomEngine {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl<G: Game> Engine<G> for RandomEngine {
    fn label(&self) -> String {
        "random".into()
    }

    fn choose(&mut self, state: &G, _: &SearchBudget) -> Result<SearchResult, SearchError> {
        let actions = state.legal_actions();
        let a = *actions.choose(&mut self.rng).ok_or(SearchError::TerminalRoot)?;
        Ok(instant_result(a))
    }
}

/// Exhaustive TicTacToe player choosing uniformly among optimal moves.
pub struct OracleEngine {
    rng: ChaCha8Rng,
}

impl OracleEngine {
    pub fn new(seed: u64) -> OracleEngine {
        OracleEngine {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Engine<TicTacToe> for OracleEngine {
    fn label(&self) -> String {
        "oracle".into()
    }

    fn choose(&mut self, state: &TicTacToe, _: &SearchBudget) -> Result<SearchResult, SearchError> {
        let best = tictactoe_optimal_actions(state);
        let a = *best.choose(&mut self.rng).ok_or(SearchError::TerminalRoot)?;
        Ok(instant_result(a))
    }
}
