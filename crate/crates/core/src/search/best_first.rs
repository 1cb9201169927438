//! Unbounded best-first minimax over the transposition table, with the
//! best-value and safe (most selected) decision rules.

use std::fmt::Write as _;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::{SearchBudget, SearchError, SearchResult};
use crate::eval::{evaluate_batch, Evaluator};
use crate::game::{Action, Game, Player};
use crate::solver::{
    by_count_then_value, by_value, filter_decision, update_resolution, Candidate, Resolution,
};
use crate::tt::{ChildStat, TranspositionTable, TtEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UbfmConfig {
    /// Evaluate the children of an expanded leaf as one parallel batch.
    pub batch: bool,
    pub solver: bool,
    /// Break descent ties at random with this seed instead of canonically.
    pub tie_seed: Option<u64>,
}

impl Default for UbfmConfig {
    fn default() -> Self {
        UbfmConfig {
            batch: true,
            solver: true,
            tie_seed: None,
        }
    }
}

/// One step of a descent: the state key, the selected child index and the
/// side to move there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathStep {
    pub key: u64,
    pub child: usize,
    pub mover: Player,
}

pub struct Ubfm<'a, G, E: ?Sized> {
    eval: &'a E,
    pub tt: &'a mut TranspositionTable,
    pub cfg: UbfmConfig,
    rng: Option<ChaCha8Rng>,
    pub iterations: u64,
    pub evals: u64,
    _game: std::marker::PhantomData<fn(&G)>,
}

fn is_expanded(e: Option<&TtEntry>) -> bool {
    e.is_some_and(|e| !e.children.is_empty())
}

impl<'a, G: Game, E: Evaluator<G> + ?Sized> Ubfm<'a, G, E> {
    pub fn new(eval: &'a E, tt: &'a mut TranspositionTable, cfg: UbfmConfig) -> Self {
        Ubfm {
            eval,
            tt,
            rng: cfg.tie_seed.map(ChaCha8Rng::seed_from_u64),
            cfg,
            iterations: 0,
            evals: 0,
            _game: std::marker::PhantomData,
        }
    }

    fn child_resolution(&self, c: &ChildStat) -> Resolution {
        if !self.cfg.solver {
            return Resolution::Unsolved;
        }
        self.tt.get(c.child_key).map_or(Resolution::Unsolved, |e| e.resolution)
    }

    /// Index of the child to descend into: best relative value among the
    /// unsolved children (all children when every one is solved).
    fn select(&mut self, entry: &TtEntry, mover: Player) -> usize {
        let res: Vec<Resolution> = entry.children.iter().map(|c| self.child_resolution(c)).collect();
        let all_solved = res.iter().all(|r| r.is_solved());
        let eligible = |i: usize| all_solved || !res[i].is_solved();
        let rel = |i: usize| entry.children[i].value.unwrap_or(f64::NEG_INFINITY) * mover.sign();
        let mut best: Vec<usize> = Vec::new();
        for i in (0..entry.children.len()).filter(|&i| eligible(i)) {
            match best.first() {
                Some(&b) if rel(i) < rel(b) => {}
                Some(&b) if rel(i) == rel(b) => best.push(i),
                _ => best = vec![i],
            }
        }
        match &mut self.rng {
            Some(rng) => *best.choose(rng).expect("non-empty"),
            None => best[0],
        }
    }

    /// One best-first extension from `root`. Returns the descent path.
    pub fn iterate(&mut self, root: &G) -> Vec<PathStep> {
        let mut s = root.clone();
        let mut path = Vec::new();
        loop {
            let key = s.key();
            if s.is_terminal() {
                break;
            }
            match self.tt.get(key) {
                Some(e) if !e.children.is_empty() => {
                    if self.cfg.solver && e.is_solved() && !path.is_empty() {
                        break;
                    }
                    let e = e.clone();
                    let mover = s.to_move();
                    let child = self.select(&e, mover);
                    self.tt.get_mut(key).expect("present").children[child].selections += 1;
                    path.push(PathStep { key, child, mover });
                    s.apply(e.children[child].action).expect("legal action");
                }
                _ => {
                    self.expand(&mut s);
                    break;
                }
            }
        }
        self.backup(&path);
        self.iterations += 1;
        path
    }

    fn expand(&mut self, s: &mut G) {
        let mover = s.to_move();
        let actions = s.legal_actions();
        let mut children: Vec<ChildStat> = Vec::with_capacity(actions.len());
        let mut pending = Vec::new();
        let mut states = Vec::new();
        for (i, &a) in actions.iter().enumerate() {
            s.apply(a).expect("legal action");
            let mut c = ChildStat::new(a, s.key());
            match self.tt.get(c.child_key) {
                Some(e) if is_expanded(Some(e)) || e.is_solved() => c.value = Some(e.value),
                _ => {
                    if let Some(o) = s.outcome().filter(|_| self.cfg.solver) {
                        self.tt
                            .store(c.child_key, TtEntry::solved(self.eval.evaluate(s), o.score()))
                            .expect("solved entry");
                        self.evals += 1;
                        c.value = self.tt.get(c.child_key).map(|e| e.value);
                    } else {
                        pending.push(i);
                        states.push(s.clone());
                    }
                }
            }
            s.undo().expect("applied action");
            children.push(c);
        }
        let values = evaluate_batch(self.eval, &states, self.cfg.batch);
        self.evals += states.len() as u64;
        for (i, v) in pending.into_iter().zip(values) {
            children[i].value = Some(v);
        }
        let mut entry = TtEntry::exact(0.0, 0);
        entry.children = children;
        self.refresh(&mut entry, mover);
        self.tt.store(s.key(), entry).expect("consistent entry");
    }

    /// Recomputes an expanded entry's value and resolution from its children.
    fn refresh(&self, entry: &mut TtEntry, mover: Player) {
        for c in &mut entry.children {
            if let Some(e) = self.tt.get(c.child_key) {
                if is_expanded(Some(e)) || e.is_solved() {
                    c.value = Some(e.value);
                }
            }
        }
        let sign = mover.sign();
        let best = entry
            .children
            .iter()
            .filter_map(|c| c.value)
            .map(|v| v * sign)
            .fold(f64::NEG_INFINITY, f64::max);
        entry.value = best * sign;
        entry.lower = entry.value;
        entry.upper = entry.value;
        entry.resolution = Resolution::Unsolved;
        if self.cfg.solver {
            let res: Vec<Resolution> = entry.children.iter().map(|c| self.child_resolution(c)).collect();
            if let Resolution::Solved(x) = update_resolution(None, mover, res.iter().copied()) {
                let winning = entry
                    .children
                    .iter()
                    .zip(&res)
                    .filter(|(_, r)| r.is_win_for(mover))
                    .filter_map(|(c, _)| c.value)
                    .map(|v| v * sign)
                    .fold(f64::NEG_INFINITY, f64::max);
                let v = if winning.is_finite() { winning } else { best };
                entry.set_solved(v * sign, x);
            }
        }
    }

    fn backup(&mut self, path: &[PathStep]) {
        for step in path.iter().rev() {
            let Some(entry) = self.tt.get(step.key) else {
                continue;
            };
            let mut entry = entry.clone();
            self.refresh(&mut entry, step.mover);
            self.tt.store(step.key, entry).expect("consistent entry");
        }
    }

    /// Iterates until the budget is spent or the root is solved.
    pub fn search(&mut self, root: &G, budget: &SearchBudget) -> Result<(), SearchError> {
        budget.validate()?;
        if root.is_terminal() {
            return Err(SearchError::TerminalRoot);
        }
        let start = Instant::now();
        let first = self.iterations;
        loop {
            let e = self.tt.get(root.key());
            if self.cfg.solver && e.is_some_and(|e| e.is_solved() && !e.children.is_empty()) {
                break;
            }
            let done = self.iterations - first;
            if done > 0 {
                if budget.max_nodes.is_some_and(|m| done >= m)
                    || budget.time.is_some_and(|t| start.elapsed() >= t)
                {
                    break;
                }
                if budget.max_nodes.is_none() && budget.time.is_none() {
                    break;
                }
            }
            self.iterate(root);
        }
        if !is_expanded(self.tt.get(root.key())) {
            self.iterate(root);
        }
        Ok(())
    }

    /// Searches within `budget` and decides with the best-value rule, or
    /// with the safe rule when `safe` is set.
    pub fn choose(&mut self, root: &G, budget: &SearchBudget, safe: bool) -> Result<SearchResult, SearchError> {
        let start = Instant::now();
        let before = (self.iterations, self.evals);
        self.search(root, budget)?;
        let action = if safe {
            decide_safest(self.tt, root)?
        } else {
            decide_best_value(self.tt, root)?
        };
        let e = self.tt.get(root.key()).expect("expanded root");
        Ok(SearchResult {
            action,
            value: e.value,
            depth: 0,
            nodes: self.evals - before.1,
            iterations: self.iterations - before.0,
            elapsed: start.elapsed(),
            resolution: e.resolution,
        })
    }

    /// Checks that each state on `path` stores the max/min of its children.
    pub fn check_path(&self, path: &[PathStep]) -> Result<(), String> {
        for step in path {
            let e = self.tt.get(step.key).ok_or("missing path entry")?;
            let mut fresh = e.clone();
            self.refresh(&mut fresh, step.mover);
            if fresh.value != e.value {
                return Err(format!("state {:016x}: stored {} expected {}", step.key, e.value, fresh.value));
            }
        }
        Ok(())
    }
}

fn root_candidates<G: Game>(tt: &TranspositionTable, root: &G) -> Result<Vec<Candidate>, SearchError> {
    let sign = root.to_move().sign();
    let e = tt.get(root.key()).ok_or(SearchError::NoValuedAction)?;
    let out: Vec<Candidate> = e
        .children
        .iter()
        .filter_map(|c| {
            c.value.map(|v| Candidate {
                resolution: tt.get(c.child_key).map_or(Resolution::Unsolved, |e| e.resolution),
                count: c.selections,
                ..Candidate::new(c.action, v * sign)
            })
        })
        .collect();
    if out.is_empty() {
        return Err(SearchError::NoValuedAction);
    }
    Ok(out)
}

/// Action of best relative value at the root.
pub fn decide_best_value<G: Game>(tt: &TranspositionTable, root: &G) -> Result<Action, SearchError> {
    let c = root_candidates(tt, root)?;
    filter_decision(&c, root.to_move(), by_value).ok_or(SearchError::NoValuedAction)
}

/// Most selected root action; ties by relative value, then canonical order.
pub fn decide_safest<G: Game>(tt: &TranspositionTable, root: &G) -> Result<Action, SearchError> {
    let c = root_candidates(tt, root)?;
    filter_decision(&c, root.to_move(), by_count_then_value).ok_or(SearchError::NoValuedAction)
}

/// Line-oriented dump of every expanded state reachable from `root`:
/// `key value resolution` followed by `action:value:count` per child.
pub fn dump_tree<G: Game>(tt: &TranspositionTable, root: &G) -> String {
    let mut out = String::new();
    let mut seen = std::collections::HashSet::new();
    let mut queue = std::collections::VecDeque::from([root.key()]);
    while let Some(key) = queue.pop_front() {
        let Some(e) = tt.get(key) else { continue };
        if e.children.is_empty() || !seen.insert(key) {
            continue;
        }
        let r = match e.resolution {
            Resolution::Solved(x) => format!("solved({x})"),
            Resolution::Unsolved => "unsolved".into(),
        };
        let _ = write!(out, "{key:016x} {} {r}", e.value);
        for c in &e.children {
            let v = c.value.map_or("-".into(), |v| v.to_string());
            let _ = write!(out, " {}:{}:{}", c.action, v, c.selections);
            queue.push_back(c.child_key);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::oracle::tictactoe_table;
    use crate::eval::{FeatureEval, HeuristicFamily, SemiCompleted};
    use crate::game::{GameId, TicTacToe};

    fn ttt_eval() -> SemiCompleted<FeatureEval> {
        SemiCompleted(HeuristicFamily::generate::<TicTacToe>(GameId::TicTacToe, 1, 3, 0.0).members[0].clone())
    }

    #[test]
    fn first_iteration_expands_the_root() {
        let eval = ttt_eval();
        let mut tt = TranspositionTable::default();
        let mut u = Ubfm::new(&eval, &mut tt, UbfmConfig::default());
        let root = TicTacToe::new();
        let path = u.iterate(&root);
        assert!(path.is_empty());
        assert_eq!(u.evals, 9);
        let e = u.tt.get(root.key()).unwrap();
        assert_eq!(e.children.len(), 9);
        assert!(e.children.iter().all(|c| c.value.is_some() && c.selections == 0));
        let path = u.iterate(&root);
        assert_eq!(path.len(), 1);
        let e = u.tt.get(root.key()).unwrap();
        assert_eq!(e.children[path[0].child].selections, 1);
        u.check_path(&path).unwrap();
    }

    #[test]
    fn one_iteration_decides_greedily() {
        let eval = ttt_eval();
        let root = TicTacToe::new();
        let mut tt = TranspositionTable::default();
        let mut u = Ubfm::new(&eval, &mut tt, UbfmConfig::default());
        let r = u.choose(&root, &SearchBudget::nodes(1), false).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(Some(r.action), super::super::deepening::greedy(&root, &eval));
    }

    #[test]
    fn immediate_win_is_solved() {
        let eval = ttt_eval();
        let mut root = TicTacToe::new();
        for a in [0, 3, 1, 4] {
            root.apply(Action(a)).unwrap();
        }
        let mut tt = TranspositionTable::default();
        let mut u = Ubfm::new(&eval, &mut tt, UbfmConfig::default());
        u.iterate(&root);
        assert_eq!(u.tt.get(root.key()).unwrap().resolution, Resolution::Solved(1));
        assert_eq!(decide_best_value(u.tt, &root).unwrap(), Action(2));
    }

    #[test]
    fn solves_tictactoe_soundly() {
        let eval = ttt_eval();
        let root = TicTacToe::new();
        let mut tt = TranspositionTable::default();
        let mut u = Ubfm::new(&eval, &mut tt, UbfmConfig::default());
        for _ in 0..200_000 {
            let path = u.iterate(&root);
            u.check_path(&path).unwrap();
            if u.tt.get(root.key()).unwrap().is_solved() {
                break;
            }
        }
        assert_eq!(u.tt.get(root.key()).unwrap().resolution, Resolution::Solved(0));
        let table = tictactoe_table();
        let mut solved = 0;
        for (key, e) in u.tt.iter() {
            if let Resolution::Solved(x) = e.resolution {
                assert_eq!(table.get(&key), Some(&x));
                solved += 1;
            }
        }
        assert!(solved > 100);
    }

    #[test]
    fn safe_decision_prefers_counts() {
        let mut tt = TranspositionTable::default();
        let root = TicTacToe::new();
        let mut e = TtEntry::exact(0.0, 0);
        e.children = vec![ChildStat::new(Action(0), 1), ChildStat::new(Action(1), 2)];
        e.children[0].value = Some(0.1);
        e.children[0].selections = 40;
        e.children[1].value = Some(0.9);
        e.children[1].selections = 10;
        tt.store(root.key(), e.clone()).unwrap();
        assert_eq!(decide_safest(&tt, &root).unwrap(), Action(0));
        assert_eq!(decide_best_value(&tt, &root).unwrap(), Action(1));
        e.children[0].selections = 25;
        e.children[1].selections = 25;
        tt.store(root.key(), e.clone()).unwrap();
        assert_eq!(decide_safest(&tt, &root).unwrap(), Action(1));
        e.children[1].value = Some(0.1);
        tt.store(root.key(), e).unwrap();
        assert_eq!(decide_safest(&tt, &root).unwrap(), Action(0));
    }

    #[test]
    fn dump_lists_expanded_states() {
        let eval = ttt_eval();
        let root = TicTacToe::new();
        let mut tt = TranspositionTable::default();
        let mut u = Ubfm::new(&eval, &mut tt, UbfmConfig::default());
        for _ in 0..5 {
            u.iterate(&root);
        }
        let dump = dump_tree(u.tt, &root);
        assert_eq!(dump.lines().count(), 5);
        assert!(dump.starts_with(&format!("{:016x}", root.key())));
    }
}
