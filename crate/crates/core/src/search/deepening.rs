//! Iterative deepening driver and MTD(f).

use super::alphabeta::{AbConfig, AlphaBeta, RootOutcome};
use super::{Aborted, Clock, SearchBudget, SearchError, SearchResult};
use crate::eval::Evaluator;
use crate::game::{Action, Game};
use crate::solver::{by_value, filter_decision, update_resolution, Candidate, Resolution};
use crate::tt::TranspositionTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthMethod {
    /// Alpha-beta, or PVS when the configuration enables it.
    AlphaBeta,
    Mtdf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtdfOutcome {
    /// Mover-view value.
    pub value: f64,
    pub calls: u32,
}

/// Converges on the depth-`d` value of `s` (mover view) through zero-window
/// searches starting from the guess `f0`.
pub fn mtdf<G: Game, E: Evaluator<G> + ?Sized>(
    ab: &mut AlphaBeta<'_, G, E>,
    s: &mut G,
    d: u32,
    f0: f64,
) -> Result<MtdfOutcome, Aborted> {
    let (mut g, mut lower, mut upper, mut calls) = (f0, f64::NEG_INFINITY, f64::INFINITY, 0);
    while lower < upper {
        let beta = if g == lower { g + 1.0 } else { g };
        g = ab.search(s, d, beta - 1.0, beta)?;
        calls += 1;
        if g < beta {
            upper = g;
        } else {
            lower = g;
        }
    }
    Ok(MtdfOutcome { value: g, calls })
}

/// Picks the lowest canonical action whose value reaches `g`, by one
/// zero-window test per action, then applies the solver filter.
fn mtdf_root<G: Game, E: Evaluator<G> + ?Sized>(
    ab: &mut AlphaBeta<'_, G, E>,
    s: &mut G,
    d: u32,
    g: f64,
) -> Result<RootOutcome, Aborted> {
    let mover = s.to_move();
    let actions = s.legal_actions();
    let mut values = Vec::with_capacity(actions.len());
    let mut res = Vec::with_capacity(actions.len());
    for &a in &actions {
        s.apply(a).expect("legal action");
        let r = ab.node(s, d.saturating_sub(1), -g, -g + 1.0, 1);
        s.undo().expect("applied action");
        let (v, r) = r?;
        values.push(Some((-v).min(g)));
        res.push(r);
    }
    let candidates: Vec<Candidate> = actions
        .iter()
        .zip(&values)
        .zip(&res)
        .map(|((&a, v), &r)| Candidate {
            resolution: r,
            ..Candidate::new(a, v.unwrap_or(f64::NEG_INFINITY))
        })
        .collect();
    let action = filter_decision(&candidates, mover, by_value).expect("at least one action");
    let resolution = if ab.cfg.solver {
        update_resolution(None, mover, res.iter().copied())
    } else {
        Resolution::Unsolved
    };
    Ok(RootOutcome {
        action,
        value: g * mover.sign(),
        resolution,
        values,
    })
}

/// Runs depth 1, 2, ... until the budget is spent, the root is solved, or an
/// iteration met no horizon. Depth 1 always completes; an interrupted
/// iteration is discarded.
pub fn iterative_deepening<G: Game, E: Evaluator<G> + ?Sized>(
    state: &G,
    eval: &E,
    tt: &mut TranspositionTable,
    cfg: AbConfig,
    method: DepthMethod,
    budget: &SearchBudget,
) -> Result<SearchResult, SearchError> {
    budget.validate()?;
    if state.is_terminal() {
        return Err(SearchError::TerminalRoot);
    }
    if (cfg.pvs || method == DepthMethod::Mtdf) && !eval.integer_valued() {
        return Err(SearchError::NonIntegerEval);
    }
    let sign = state.to_move().sign();
    let mut s = state.clone();
    let mut guess = tt.get(state.key()).map_or(0.0, |e| e.value * sign);
    let mut ab = AlphaBeta::new(eval, tt, cfg).with_clock(Clock::new(budget));
    let mut done: Option<(RootOutcome, u32)> = None;
    for depth in 1.. {
        if budget.max_depth.is_some_and(|m| depth > m) {
            break;
        }
        ab.clock.set_enforced(depth > 1);
        let h0 = ab.stats.horizon;
        let out = match method {
            DepthMethod::AlphaBeta => ab.root(&mut s, depth),
            DepthMethod::Mtdf => mtdf(&mut ab, &mut s, depth, guess)
                .and_then(|m| mtdf_root(&mut ab, &mut s, depth, m.value)),
        };
        let Ok(out) = out else {
            break;
        };
        guess = out.value * sign;
        let finished = (cfg.solver && out.resolution.is_solved()) || ab.stats.horizon == h0;
        done = Some((out, depth));
        if finished || ab.clock.expired() || ab.clock.out_of_nodes() {
            break;
        }
    }
    let (out, depth) = done.expect("depth 1 always completes");
    Ok(SearchResult {
        action: out.action,
        value: out.value,
        depth,
        nodes: ab.stats.nodes,
        iterations: u64::from(depth),
        elapsed: ab.clock.elapsed(),
        resolution: out.resolution,
    })
}

/// Greedy one-ply choice under `eval`, used when no search is possible.
pub fn greedy<G: Game, E: Evaluator<G> + ?Sized>(state: &G, eval: &E) -> Option<Action> {
    let mut tt = TranspositionTable::new(1 << 10);
    let mut ab = AlphaBeta::new(eval, &mut tt, AbConfig::default());
    let mut s = state.clone();
    if s.is_terminal() {
        return None;
    }
    ab.root(&mut s, 1).ok().map(|r| r.action)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{FnEval, SemiCompleted, TreeEval};
    use crate::game::random_tree::TreeParams;
    use crate::game::{TicTacToe, TreeCorpus};
    use crate::search::alphabeta::Frontier;

    fn zero_ttt() -> SemiCompleted<FnEval<impl Fn(&TicTacToe) -> f64 + Send + Sync>> {
        SemiCompleted(FnEval(|_: &TicTacToe| 0.0))
    }

    #[test]
    fn mtdf_matches_alphabeta_from_any_guess() {
        for t in &TreeCorpus::generate(3, 40, TreeParams::default()).trees {
            let mut tt = TranspositionTable::default();
            let mut ab = AlphaBeta::new(&TreeEval, &mut tt, AbConfig::default());
            let want = ab.search(&mut t.clone(), 6, f64::NEG_INFINITY, f64::INFINITY).unwrap();
            for f0 in [-100.0, 0.0, 100.0] {
                let mut tt = TranspositionTable::default();
                let mut ab = AlphaBeta::new(&TreeEval, &mut tt, AbConfig::default());
                let m = mtdf(&mut ab, &mut t.clone(), 6, f0).unwrap();
                assert_eq!(m.value, want);
                assert!(m.calls >= 1);
            }
        }
    }

    #[test]
    fn mtdf_with_exact_guess_needs_two_calls() {
        let t = TreeCorpus::generate(8, 50, TreeParams {
            max_depth: 1,
            ..Default::default()
        })
        .trees
        .into_iter()
        .find(|t| t.legal_actions().len() > 1)
        .unwrap();
        let mut tt = TranspositionTable::default();
        let mut ab = AlphaBeta::new(&TreeEval, &mut tt, AbConfig::default());
        let exact = ab.search(&mut t.clone(), 1, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        let mut tt = TranspositionTable::default();
        let mut ab = AlphaBeta::new(&TreeEval, &mut tt, AbConfig::default());
        assert!(mtdf(&mut ab, &mut t.clone(), 1, exact).unwrap().calls <= 2);
    }

    #[test]
    fn deepening_stops_on_exhausted_tictactoe() {
        let eval = zero_ttt();
        let mut tt = TranspositionTable::default();
        let r = iterative_deepening(
            &TicTacToe::new(),
            &eval,
            &mut tt,
            AbConfig::default(),
            DepthMethod::AlphaBeta,
            &SearchBudget::depth(50),
        )
        .unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.depth <= 10, "depth {}", r.depth);
    }

    #[test]
    fn node_cap_limits_completed_depth() {
        // Measure depth-1 and depth-2 costs, then grant exactly their sum.
        let eval = crate::eval::SemiCompleted(FnEval(|s: &TicTacToe| {
            f64::from(s.ply() as u8 % 3) * 0.1 - 0.1
        }));
        let cost = |d: u32| {
            let mut tt = TranspositionTable::default();
            iterative_deepening(
                &TicTacToe::new(),
                &eval,
                &mut tt,
                AbConfig::default(),
                DepthMethod::AlphaBeta,
                &SearchBudget::depth(d),
            )
            .unwrap()
            .nodes
        };
        let two = cost(2);
        let mut tt = TranspositionTable::default();
        let r = iterative_deepening(
            &TicTacToe::new(),
            &eval,
            &mut tt,
            AbConfig::default(),
            DepthMethod::AlphaBeta,
            &SearchBudget::nodes(two),
        )
        .unwrap();
        assert_eq!(r.depth, 2);
    }

    #[test]
    fn zero_time_still_returns_depth_one() {
        let eval = zero_ttt();
        let mut tt = TranspositionTable::default();
        let r = iterative_deepening(
            &TicTacToe::new(),
            &eval,
            &mut tt,
            AbConfig::default(),
            DepthMethod::AlphaBeta,
            &SearchBudget::time(0.0),
        )
        .unwrap();
        assert_eq!(r.depth, 1);
        assert_eq!(r.action, crate::game::Action(0));
    }

    #[test]
    fn zero_window_methods_reject_real_valued_evals() {
        let eval = zero_ttt();
        let mut tt = TranspositionTable::default();
        let pvs = AbConfig {
            pvs: true,
            ..Default::default()
        };
        let budget = SearchBudget::depth(2);
        assert_eq!(
            iterative_deepening(&TicTacToe::new(), &eval, &mut tt, pvs, DepthMethod::AlphaBeta, &budget),
            Err(SearchError::NonIntegerEval)
        );
        assert_eq!(
            iterative_deepening(
                &TicTacToe::new(),
                &eval,
                &mut tt,
                AbConfig::default(),
                DepthMethod::Mtdf,
                &budget
            ),
            Err(SearchError::NonIntegerEval)
        );
    }

    #[test]
    fn mtdf_deepening_agrees_with_alphabeta() {
        for t in &TreeCorpus::generate(21, 30, TreeParams::default()).trees {
            if t.is_terminal() {
                continue;
            }
            let run = |method, frontier| {
                let mut tt = TranspositionTable::default();
                let cfg = AbConfig {
                    frontier,
                    ..Default::default()
                };
                iterative_deepening(t, &TreeEval, &mut tt, cfg, method, &SearchBudget::depth(6)).unwrap()
            };
            let a = run(DepthMethod::AlphaBeta, Frontier::Standard);
            let b = run(DepthMethod::Mtdf, Frontier::Standard);
            let c = run(DepthMethod::AlphaBeta, Frontier::Batched);
            assert_eq!((a.action, a.value), (b.action, b.value));
            assert_eq!((a.action, a.value), (c.action, c.value));
        }
    }
}
