//! Monte Carlo tree search with UCT selection and per-state statistics in
//! the transposition table. Rollouts are random playouts or, for MCTS_h, the
//! normalized heuristic value of the reached state.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::{SearchBudget, SearchError, SearchResult};
use crate::eval::{normalize_unit, random_playout, EvalError, EvalRange, Evaluator};
use crate::game::{Action, Game, Outcome, Player};
use crate::solver::{by_count_then_mean, filter_decision, update_resolution, Candidate, Resolution};
use crate::tt::{ChildStat, TranspositionTable, TtEntry};

/// Reward credited for a drawn simulation.
pub const DRAW_REWARD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rollout {
    Random,
    /// Normalized semi-completed evaluation.
    Heuristic(EvalRange),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MctsConfig {
    pub c: f64,
    pub rollout: Rollout,
    pub solver: bool,
    pub seed: u64,
}

impl Default for MctsConfig {
    fn default() -> Self {
        MctsConfig {
            c: std::f64::consts::SQRT_2,
            rollout: Rollout::Random,
            solver: true,
            seed: 0,
        }
    }
}

/// `w/n + C·sqrt(ln(total)/n)`.
pub fn uct_score(wins: f64, visits: u64, total: u64, c: f64) -> f64 {
    let n = visits as f64;
    wins / n + c * ((total as f64).ln() / n).sqrt()
}

/// Reward of `outcome` for `player`: 1, [`DRAW_REWARD`] or 0.
pub fn reward_for(outcome: Outcome, player: Player) -> f64 {
    match outcome.score() as f64 * player.sign() {
        x if x > 0.0 => 1.0,
        x if x < 0.0 => 0.0,
        _ => DRAW_REWARD,
    }
}

/// Uniformly random playout from `s`, rewarded for the side to move at `s`.
pub fn random_rollout<G: Game, R: Rng>(s: &G, rng: &mut R) -> f64 {
    reward_for(random_playout(s, rng), s.to_move())
}

/// Normalized semi-completed value of `s` for the side to move.
pub fn heuristic_rollout<G: Game, E: Evaluator<G> + ?Sized>(
    s: &G,
    eval: &E,
    range: &EvalRange,
) -> Result<f64, EvalError> {
    let v = match s.outcome() {
        Some(o) => o.value(),
        None => eval.evaluate(s),
    };
    let u = normalize_unit(v, range)?;
    Ok(if s.to_move().is_first() { u } else { 1.0 - u })
}

pub struct Mcts<'a, G, E: ?Sized> {
    eval: &'a E,
    pub tt: &'a mut TranspositionTable,
    pub cfg: MctsConfig,
    rng: ChaCha8Rng,
    pub iterations: u64,
    _game: std::marker::PhantomData<fn(&G)>,
}

fn new_entry<G: Game>(s: &mut G) -> TtEntry {
    let mut e = TtEntry::exact(0.0, 0);
    e.children = s
        .legal_actions()
        .into_iter()
        .map(|a| {
            s.apply(a).expect("legal action");
            let c = ChildStat::new(a, s.key());
            s.undo().expect("applied action");
            c
        })
        .collect();
    e
}

impl<'a, G: Game, E: Evaluator<G> + ?Sized> Mcts<'a, G, E> {
    pub fn new(eval: &'a E, tt: &'a mut TranspositionTable, cfg: MctsConfig) -> Result<Self, SearchError> {
        if let Rollout::Heuristic(r) = cfg.rollout {
            normalize_unit(0.0, &r)?;
        }
        Ok(Mcts {
            eval,
            tt,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            iterations: 0,
            _game: std::marker::PhantomData,
        })
    }

    fn note_terminal(&mut self, s: &G) {
        if let Some(o) = s.outcome().filter(|_| self.cfg.solver) {
            if !self.tt.contains(s.key()) {
                let _ = self.tt.store(s.key(), TtEntry::solved(o.value(), o.score()));
            }
        }
    }

    /// Selection, expansion of one unvisited child, simulation and
    /// backpropagation. Returns the path as (state key, child index).
    pub fn iterate(&mut self, root: &G) -> Vec<(u64, usize)> {
        let mut s = root.clone();
        let mut path: Vec<(u64, usize, Player)> = Vec::new();
        loop {
            if s.is_terminal() {
                self.note_terminal(&s);
                break;
            }
            let key = s.key();
            if !self.tt.contains(key) {
                let e = new_entry(&mut s);
                self.tt.store(key, e).expect("fresh entry");
            }
            let e = self.tt.get(key).expect("present");
            let unvisited: Vec<usize> = (0..e.children.len()).filter(|&i| e.children[i].visits == 0).collect();
            let mover = s.to_move();
            if !unvisited.is_empty() {
                let i = *unvisited.choose(&mut self.rng).expect("non-empty");
                path.push((key, i, mover));
                s.apply(e.children[i].action).expect("legal action");
                if s.is_terminal() {
                    self.note_terminal(&s);
                }
                break;
            }
            let total: u64 = e.children.iter().map(|c| c.visits).sum();
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (i, c) in e.children.iter().enumerate() {
                let score = uct_score(c.wins, c.visits, total, self.cfg.c);
                if score > best_score {
                    best_score = score;
                    best = i;
                }
            }
            path.push((key, best, mover));
            s.apply(e.children[best].action).expect("legal action");
        }
        let reward = match self.cfg.rollout {
            Rollout::Random => random_rollout(&s, &mut self.rng),
            Rollout::Heuristic(range) => {
                heuristic_rollout(&s, self.eval, &range).expect("range validated at construction")
            }
        };
        let first_reward = if s.to_move().is_first() { reward } else { 1.0 - reward };
        for &(key, i, mover) in path.iter().rev() {
            let credit = if mover.is_first() { first_reward } else { 1.0 - first_reward };
            let solver = self.cfg.solver;
            let Some(e) = self.tt.get_mut(key) else {
                continue;
            };
            e.children[i].visits += 1;
            e.children[i].wins += credit;
            if solver && !e.is_solved() {
                let keys: Vec<u64> = e.children.iter().map(|c| c.child_key).collect();
                let res = keys
                    .iter()
                    .map(|k| self.tt.get(*k).map_or(Resolution::Unsolved, |c| c.resolution));
                if let Resolution::Solved(x) = update_resolution(None, mover, res) {
                    if let Some(e) = self.tt.get_mut(key) {
                        e.set_solved(f64::from(x), x);
                    }
                }
            }
        }
        self.iterations += 1;
        path.into_iter().map(|(k, i, _)| (k, i)).collect()
    }

    pub fn search(&mut self, root: &G, budget: &SearchBudget) -> Result<(), SearchError> {
        budget.validate()?;
        if root.is_terminal() {
            return Err(SearchError::TerminalRoot);
        }
        if budget.max_nodes.is_none() && budget.time.is_none() {
            self.iterate(root);
            return Ok(());
        }
        let start = Instant::now();
        let mut done = 0u64;
        loop {
            if budget.max_nodes.is_some_and(|m| done >= m) {
                break;
            }
            if done > 0 && budget.time.is_some_and(|t| start.elapsed() >= t) {
                break;
            }
            self.iterate(root);
            done += 1;
        }
        if !self.tt.contains(root.key()) {
            self.iterate(root);
        }
        Ok(())
    }

    pub fn choose(&mut self, root: &G, budget: &SearchBudget) -> Result<SearchResult, SearchError> {
        let start = Instant::now();
        let before = self.iterations;
        self.search(root, budget)?;
        let action = mcts_decide(self.tt, root)?;
        let e = self.tt.get(root.key()).expect("root entry");
        let c = e.child(action).expect("chosen child");
        let mean = c.wins / c.visits.max(1) as f64;
        Ok(SearchResult {
            action,
            value: (2.0 * mean - 1.0) * root.to_move().sign(),
            depth: 0,
            nodes: self.iterations - before,
            iterations: self.iterations - before,
            elapsed: start.elapsed(),
            resolution: e.resolution,
        })
    }
}

/// Most visited root action; ties by mean reward, then canonical order.
pub fn mcts_decide<G: Game>(tt: &TranspositionTable, root: &G) -> Result<Action, SearchError> {
    let e = tt.get(root.key()).ok_or(SearchError::NoValuedAction)?;
    let candidates: Vec<Candidate> = e
        .children
        .iter()
        .filter(|c| c.visits > 0)
        .map(|c| Candidate {
            resolution: tt.get(c.child_key).map_or(Resolution::Unsolved, |e| e.resolution),
            count: c.visits,
            mean: c.wins / c.visits as f64,
            ..Candidate::new(c.action, 0.0)
        })
        .collect();
    filter_decision(&candidates, root.to_move(), by_count_then_mean).ok_or(SearchError::NoValuedAction)
}
