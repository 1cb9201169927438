//! Fail-soft negamax alpha-beta with transposition table, move ordering,
//! principal variation search, k-best pruning and Child Batching at the
//! evaluation frontier.
//!
//! Values are relative to the side to move inside the search and converted
//! to the first player's view whenever they enter or leave the table.

use std::marker::PhantomData;

use super::{Aborted, Clock};
use crate::eval::{evaluate_batch, Evaluator};
use crate::game::{Action, Game, Player};
use crate::solver::{by_value, filter_decision, update_resolution, Candidate, Resolution};
use crate::tt::{ChildStat, TranspositionTable, TtEntry};

/// Depth recorded for entries whose subtree contained no horizon node; their
/// bounds hold at any depth.
pub const FULL_DEPTH: u32 = u32::MAX - 1;

/// Treatment of nodes one ply above the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frontier {
    /// Ordinary alpha-beta with sibling cutoffs.
    Standard,
    /// Every child is evaluated sequentially before taking the maximum.
    Reference,
    /// As `Reference`, with the evaluations submitted as one parallel batch.
    Batched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KbestScope {
    All,
    Root,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbConfig {
    pub frontier: Frontier,
    pub pvs: bool,
    pub kbest: Option<usize>,
    pub kbest_scope: KbestScope,
    pub solver: bool,
    pub use_tt: bool,
}

impl Default for AbConfig {
    fn default() -> Self {
        AbConfig {
            frontier: Frontier::Standard,
            pvs: false,
            kbest: None,
            kbest_scope: KbestScope::All,
            solver: false,
            use_tt: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AbStats {
    pub nodes: u64,
    pub evals: u64,
    pub batches: u64,
    /// Horizon nodes and inexact truncations met so far.
    pub horizon: u64,
}

/// Result of a root search.
#[derive(Debug, Clone, PartialEq)]
pub struct RootOutcome {
    pub action: Action,
    /// First-player view.
    pub value: f64,
    pub resolution: Resolution,
    /// Mover-view value per legal action (canonical order); `None` when the
    /// action was pruned.
    pub values: Vec<Option<f64>>,
}

pub struct AlphaBeta<'a, G, E: ?Sized> {
    eval: &'a E,
    pub tt: &'a mut TranspositionTable,
    pub cfg: AbConfig,
    pub clock: Clock,
    pub stats: AbStats,
    _game: PhantomData<fn(&G)>,
}

/// Indices into `actions`: actions with a stored value first, best for
/// `mover` first, then the rest; ties in canonical order.
fn order_indices(actions: &[Action], prior: Option<&TtEntry>, mover: Player) -> Vec<usize> {
    let value = |i: usize| {
        prior
            .and_then(|e| e.child(actions[i]))
            .and_then(|c| c.value)
            .map(|v| v * mover.sign())
    };
    let mut idx: Vec<usize> = (0..actions.len()).collect();
    idx.sort_by(|&a, &b| match (value(a), value(b)) {
        (Some(x), Some(y)) => y.total_cmp(&x).then(a.cmp(&b)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.cmp(&b),
    });
    idx
}

/// Orders actions by their stored values, best first for `mover`.
pub fn order_moves(actions: &[Action], prior: Option<&TtEntry>, mover: Player) -> Vec<Action> {
    order_indices(actions, prior, mover)
        .into_iter()
        .map(|i| actions[i])
        .collect()
}

/// Keeps the first `k` actions when ordering information exists.
pub fn kbest_restrict<T>(mut ordered: Vec<T>, k: usize, has_prior: bool) -> Vec<T> {
    if has_prior {
        ordered.truncate(k.max(1));
    }
    ordered
}

fn has_prior(entry: Option<&TtEntry>) -> bool {
    entry.is_some_and(|e| e.children.iter().any(|c| c.value.is_some()))
}

impl<'a, G: Game, E: Evaluator<G> + ?Sized> AlphaBeta<'a, G, E> {
    pub fn new(eval: &'a E, tt: &'a mut TranspositionTable, cfg: AbConfig) -> Self {
        AlphaBeta {
            eval,
            tt,
            cfg,
            clock: Clock::unlimited(),
            stats: AbStats::default(),
            _game: PhantomData,
        }
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    fn evaluate(&mut self, s: &G) -> f64 {
        self.stats.evals += 1;
        self.eval.evaluate(s)
    }

    fn visit(&mut self) -> Result<(), Aborted> {
        self.stats.nodes += 1;
        self.clock.tick()
    }

    fn terminal_resolution(&self, score: i8) -> Resolution {
        if self.cfg.solver {
            Resolution::Solved(score)
        } else {
            Resolution::Unsolved
        }
    }

    /// Fail-soft negamax value of `s` for the side to move, searched to
    /// `depth` plies within the window `(alpha, beta)`.
    pub fn search(&mut self, s: &mut G, depth: u32, alpha: f64, beta: f64) -> Result<f64, Aborted> {
        self.node(s, depth, alpha, beta, 0).map(|(v, _)| v)
    }

    pub(crate) fn node(
        &mut self,
        s: &mut G,
        d: u32,
        alpha: f64,
        beta: f64,
        ply: u32,
    ) -> Result<(f64, Resolution), Aborted> {
        self.visit()?;
        let mover = s.to_move();
        let sign = mover.sign();
        if let Some(o) = s.outcome() {
            return Ok((self.evaluate(s) * sign, self.terminal_resolution(o.score())));
        }
        if d == 0 {
            self.stats.horizon += 1;
            return Ok((self.evaluate(s) * sign, Resolution::Unsolved));
        }
        let key = s.key();
        let entry = if self.cfg.use_tt {
            self.tt.get(key).cloned()
        } else {
            None
        };
        if let Some(e) = &entry {
            if self.cfg.solver && e.is_solved() {
                return Ok((e.value * sign, e.resolution));
            }
            if e.depth >= d {
                let (lo, hi) = if sign > 0.0 {
                    (e.lower, e.upper)
                } else {
                    (-e.upper, -e.lower)
                };
                let cut = if lo == hi || lo >= beta {
                    Some(lo)
                } else if hi <= alpha {
                    Some(hi)
                } else {
                    None
                };
                if let Some(v) = cut {
                    if e.depth != FULL_DEPTH {
                        self.stats.horizon += 1;
                    }
                    return Ok((v, Resolution::Unsolved));
                }
            }
        }
        let actions = s.legal_actions();
        let h0 = self.stats.horizon;
        let order = self.ordered(&actions, entry.as_ref(), mover, ply);
        let (vals, res, keys, best) = if d == 1 && self.cfg.frontier != Frontier::Standard {
            let (vals, res, keys) = self.frontier(s, &actions, &order)?;
            let best = vals
                .iter()
                .flatten()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            (vals, res, keys, best)
        } else {
            self.interior(s, d, alpha, beta, ply, &actions, &order)?
        };
        let (best, resolution) = self.resolve(mover, best, &vals, &res);
        self.store(key, sign, d, h0, alpha, beta, best, resolution, &actions, &vals, &keys);
        Ok((best, resolution))
    }

    fn ordered(&mut self, actions: &[Action], entry: Option<&TtEntry>, mover: Player, ply: u32) -> Vec<usize> {
        let order = order_indices(actions, entry, mover);
        match self.cfg.kbest {
            Some(k)
                if k < order.len()
                    && (self.cfg.kbest_scope == KbestScope::All || ply == 0)
                    && has_prior(entry) =>
            {
                self.stats.horizon += 1;
                kbest_restrict(order, k, true)
            }
            _ => order,
        }
    }

    #[allow(clippy::type_complexity, clippy::too_many_arguments)]
    fn interior(
        &mut self,
        s: &mut G,
        d: u32,
        alpha: f64,
        beta: f64,
        ply: u32,
        actions: &[Action],
        order: &[usize],
    ) -> Result<(Vec<Option<f64>>, Vec<Resolution>, Vec<u64>, f64), Aborted> {
        let n = actions.len();
        let mover = s.to_move();
        let mut vals = vec![None; n];
        let mut res = vec![Resolution::Unsolved; n];
        let mut keys = vec![0; n];
        let mut best = f64::NEG_INFINITY;
        let mut alpha = alpha;
        for (j, &i) in order.iter().enumerate() {
            s.apply(actions[i]).expect("legal action");
            keys[i] = s.key();
            let r = if self.cfg.pvs && j > 0 {
                match self.node(s, d - 1, -alpha - 1.0, -alpha, ply + 1) {
                    Ok((v, _)) if -v > alpha && -v < beta => self.node(s, d - 1, -beta, -alpha, ply + 1),
                    other => other,
                }
            } else {
                self.node(s, d - 1, -beta, -alpha, ply + 1)
            };
            s.undo().expect("applied action");
            let (v, r) = r?;
            let v = -v;
            vals[i] = Some(v);
            res[i] = r;
            best = best.max(v);
            alpha = alpha.max(v);
            if alpha >= beta || (self.cfg.solver && r.is_win_for(mover)) {
                break;
            }
        }
        Ok((vals, res, keys, best))
    }

    /// Evaluates every child in `order` (all of them before any comparison),
    /// reusing solved values from the table.
    #[allow(clippy::type_complexity)]
    fn frontier(
        &mut self,
        s: &mut G,
        actions: &[Action],
        order: &[usize],
    ) -> Result<(Vec<Option<f64>>, Vec<Resolution>, Vec<u64>), Aborted> {
        let n = actions.len();
        let sign = s.to_move().sign();
        let mut vals = vec![None; n];
        let mut res = vec![Resolution::Unsolved; n];
        let mut keys = vec![0; n];
        let mut pending: Vec<usize> = Vec::new();
        let mut states: Vec<G> = Vec::new();
        for &i in order {
            self.visit()?;
            s.apply(actions[i]).expect("legal action");
            keys[i] = s.key();
            let solved = self
                .tt
                .get(keys[i])
                .filter(|e| self.cfg.solver && self.cfg.use_tt && e.is_solved())
                .map(|e| (e.value, e.resolution));
            match (solved, s.outcome()) {
                (Some((v, r)), _) => {
                    vals[i] = Some(v * sign);
                    res[i] = r;
                }
                (None, outcome) => {
                    match outcome {
                        Some(o) => res[i] = self.terminal_resolution(o.score()),
                        None => self.stats.horizon += 1,
                    }
                    pending.push(i);
                    states.push(s.clone());
                }
            }
            s.undo().expect("applied action");
        }
        let parallel = self.cfg.frontier == Frontier::Batched;
        let values = evaluate_batch(self.eval, &states, parallel);
        self.stats.evals += states.len() as u64;
        self.stats.batches += 1;
        for (i, v) in pending.into_iter().zip(values) {
            vals[i] = Some(v * sign);
        }
        Ok((vals, res, keys))
    }

    /// Applies the solver to a node's children; a solved node takes the exact
    /// value of its deciding children.
    fn resolve(&self, mover: Player, best: f64, vals: &[Option<f64>], res: &[Resolution]) -> (f64, Resolution) {
        if !self.cfg.solver {
            return (best, Resolution::Unsolved);
        }
        let r = update_resolution(None, mover, res.iter().copied());
        let Resolution::Solved(_) = r else {
            return (best, r);
        };
        let winning = vals
            .iter()
            .zip(res)
            .filter(|(_, r)| r.is_win_for(mover))
            .filter_map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        (if winning.is_finite() { winning } else { best }, r)
    }

    #[allow(clippy::too_many_arguments)]
    fn store(
        &mut self,
        key: u64,
        sign: f64,
        d: u32,
        h0: u64,
        alpha: f64,
        beta: f64,
        best: f64,
        resolution: Resolution,
        actions: &[Action],
        vals: &[Option<f64>],
        keys: &[u64],
    ) {
        if !self.cfg.use_tt {
            return;
        }
        let (lo, hi) = if best <= alpha {
            (f64::NEG_INFINITY, best)
        } else if best >= beta {
            (best, f64::INFINITY)
        } else {
            (best, best)
        };
        let (lower, upper) = if sign > 0.0 { (lo, hi) } else { (-hi, -lo) };
        let mut children = match self.tt.get(key) {
            Some(e) if e.children.len() == actions.len() => e.children.clone(),
            _ => actions.iter().map(|&a| ChildStat::new(a, 0)).collect(),
        };
        for ((c, v), &k) in children.iter_mut().zip(vals).zip(keys) {
            if let Some(v) = v {
                c.value = Some(v * sign);
                c.child_key = k;
            }
        }
        let mut entry = TtEntry {
            value: best * sign,
            lower,
            upper,
            depth: if self.stats.horizon == h0 { FULL_DEPTH } else { d },
            children,
            resolution: Resolution::Unsolved,
        };
        if let Resolution::Solved(x) = resolution {
            entry.set_solved(best * sign, x);
        }
        self.tt.store(key, entry).expect("consistent entry");
    }

    /// Searches every root action to `depth` and picks the value-maximal one
    /// with the lowest canonical index, after the solver filter.
    pub fn root(&mut self, s: &mut G, depth: u32) -> Result<RootOutcome, Aborted> {
        let depth = depth.max(1);
        self.visit()?;
        let mover = s.to_move();
        let sign = mover.sign();
        let key = s.key();
        let actions = s.legal_actions();
        assert!(!actions.is_empty(), "root search on a terminal state");
        let entry = if self.cfg.use_tt { self.tt.get(key).cloned() } else { None };
        let h0 = self.stats.horizon;
        let order = self.ordered(&actions, entry.as_ref(), mover, 0);
        let (vals, res, keys) = if depth == 1 && self.cfg.frontier != Frontier::Standard {
            self.frontier(s, &actions, &order)?
        } else {
            let n = actions.len();
            let (mut vals, mut res, mut keys) = (vec![None; n], vec![Resolution::Unsolved; n], vec![0; n]);
            let mut best = f64::NEG_INFINITY;
            for &i in &order {
                let alpha = if best.is_finite() { best.next_down() } else { best };
                s.apply(actions[i]).expect("legal action");
                keys[i] = s.key();
                let r = self.node(s, depth - 1, f64::NEG_INFINITY, -alpha, 1);
                s.undo().expect("applied action");
                let (v, r) = r?;
                vals[i] = Some(-v);
                res[i] = r;
                best = best.max(-v);
            }
            (vals, res, keys)
        };
        let candidates: Vec<Candidate> = actions
            .iter()
            .zip(&vals)
            .zip(&res)
            .filter_map(|((&a, v), &r)| {
                v.map(|v| Candidate {
                    resolution: r,
                    ..Candidate::new(a, v)
                })
            })
            .collect();
        let action = filter_decision(&candidates, mover, by_value).expect("at least one action");
        let chosen = candidates.iter().find(|c| c.action == action).expect("chosen").value;
        let best = vals.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        let (best, resolution) = self.resolve(mover, best, &vals, &res);
        self.store(
            key,
            sign,
            depth,
            h0,
            f64::NEG_INFINITY,
            f64::INFINITY,
            best,
            resolution,
            &actions,
            &vals,
            &keys,
        );
        Ok(RootOutcome {
            action,
            value: chosen * sign,
            resolution,
            values: vals,
        })
    }
}
