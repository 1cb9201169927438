//! Oracle and property suites. Each suite checks one family of search
//! guarantees against brute force or a closed form and reports a one-line
//! detail.

use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::arena::{schedule, MatchRecord, TournamentConfig};
use crate::engine::{AlgorithmSpec, OracleEngine, SearchEngine};
use crate::eval::oracle::tictactoe_table;
use crate::eval::{FeatureEval, HeuristicFamily, SemiCompleted, TreeEval};
use crate::game::random_tree::TreeShape;
use crate::game::{Action, BoardGame, Breakthrough, Game, GameId, GameSpec, Player, RandomTree, TicTacToe, TreeCorpus};
use crate::search::alphabeta::Frontier;
use crate::search::{
    decide_safest, mtdf, AbConfig, AlphaBeta, Mcts, MctsConfig, SearchBudget, Ubfm, UbfmConfig,
};
use crate::solver::Resolution;
use crate::stats::{
    emit_report, game_performance, stratified_bootstrap_ci, summarize, BootstrapSettings, ReportFormat, Statistic,
};
use crate::tt::{ChildStat, TranspositionTable, TtEntry};

/// Frozen reports of [`synthetic_records`].
pub const GOLDEN_REPORT_MD: &str = include_str!("../tests/golden/report.md");
pub const GOLDEN_REPORT_CSV: &str = include_str!("../tests/golden/report.csv");

pub type SuiteFn = fn() -> Result<String, String>;

pub struct Suite {
    pub id: u8,
    pub name: &'static str,
    /// Runtime allowance.
    pub limit: Duration,
    pub run: SuiteFn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Duration,
}

impl SuiteReport {
    pub fn within_limit(&self) -> bool {
        self.elapsed <= self.limit
    }

    pub fn line(&self) -> String {
        let status = if self.passed && self.within_limit() { "PASS" } else { "FAIL" };
        let time = format!("{:.1}s/{}s", self.elapsed.as_secs_f64(), self.limit.as_secs());
        format!("{status} [{}] {} ({time}): {}", self.id, self.name, self.detail)
    }
}

pub fn run_suite(s: &Suite) -> SuiteReport {
    let start = Instant::now();
    let out = (s.run)();
    let elapsed = start.elapsed();
    let (passed, detail) = match out {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    SuiteReport {
        id: s.id,
        name: s.name,
        passed,
        detail,
        elapsed,
        limit: s.limit,
    }
}

pub fn suites() -> Vec<Suite> {
    let secs = Duration::from_secs;
    vec![
        Suite { id: 1, name: "exactness", limit: secs(30), run: exactness },
        Suite { id: 2, name: "child batching", limit: secs(120), run: child_batching },
        Suite { id: 3, name: "tictactoe optimality", limit: secs(180), run: tictactoe_optimality },
        Suite { id: 4, name: "solver soundness", limit: secs(60), run: solver_soundness },
        Suite { id: 5, name: "ubfm identity", limit: secs(30), run: ubfm_identity },
        Suite { id: 6, name: "mcts sanity", limit: secs(120), run: mcts_sanity },
        Suite { id: 7, name: "mtdf convergence", limit: secs(30), run: mtdf_convergence },
        Suite { id: 8, name: "protocol arithmetic", limit: secs(1), run: protocol_arithmetic },
        Suite { id: 9, name: "statistics", limit: secs(60), run: statistics },
    ]
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Plain minimax over the stored shape, with the node value at the depth
/// limit. First player's view.
pub fn tree_minimax(shape: &TreeShape, node: usize, depth: u32) -> i32 {
    if shape.is_leaf(node) || depth == 0 {
        return shape.value(node);
    }
    let values = shape.children(node).iter().map(|&c| tree_minimax(shape, c as usize, depth - 1));
    if shape.depth(node) % 2 == 0 {
        values.max().expect("interior node")
    } else {
        values.min().expect("interior node")
    }
}

fn full_window(ab: &mut AlphaBeta<'_, RandomTree, TreeEval>, t: &RandomTree, d: u32) -> f64 {
    ab.search(&mut t.clone(), d, f64::NEG_INFINITY, f64::INFINITY)
        .expect("unbounded clock")
}

fn exactness() -> Result<String, String> {
    let corpus = TreeCorpus::standard();
    let configs = [
        ("alphabeta", AbConfig::default()),
        ("pvs", AbConfig { pvs: true, ..Default::default() }),
        ("childbatch", AbConfig { frontier: Frontier::Batched, ..Default::default() }),
        ("kbest(inf)", AbConfig { kbest: Some(usize::MAX), ..Default::default() }),
    ];
    let mut checks = 0;
    for (n, t) in corpus.trees.iter().enumerate() {
        for depth in [5, 3] {
            let want = f64::from(tree_minimax(t.shape(), 0, depth));
            for (name, cfg) in configs {
                let mut tt = TranspositionTable::default();
                let mut ab = AlphaBeta::new(&TreeEval, &mut tt, cfg);
                let got = full_window(&mut ab, t, depth);
                check(got == want, || format!("{name} tree {n} depth {depth}: {got} != {want}"))?;
                checks += 1;
            }
            let mut tt = TranspositionTable::default();
            let mut ab = AlphaBeta::new(&TreeEval, &mut tt, AbConfig::default());
            let got = mtdf(&mut ab, &mut t.clone(), depth, 0.0).expect("unbounded clock").value;
            check(got == want, || format!("mtdf tree {n} depth {depth}: {got} != {want}"))?;
            checks += 1;
        }
    }
    Ok(format!("{checks} root values equal brute-force minimax on {} trees", corpus.trees.len()))
}

/// Non-terminal positions reached by seeded random walks of 2 to 24 plies.
pub fn breakthrough_positions(count: usize, seed: u64) -> Vec<Breakthrough> {
    let initial = Breakthrough::from_spec(&GameSpec::new(GameId::Breakthrough)).expect("default spec");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut s = initial.clone();
        for _ in 0..rng.random_range(2..=24) {
            let actions = s.legal_actions();
            let Some(&a) = actions.choose(&mut rng) else { break };
            s.apply(a).expect("legal action");
            if s.is_terminal() {
                break;
            }
        }
        if !s.is_terminal() {
            out.push(s);
        }
    }
    out
}

fn root_pair<G: Game, E: crate::eval::Evaluator<G> + ?Sized>(
    eval: &E,
    s: &G,
    depth: u32,
    frontier: Frontier,
) -> (Action, f64) {
    let mut tt = TranspositionTable::default();
    let cfg = AbConfig { frontier, ..Default::default() };
    let r = AlphaBeta::new(eval, &mut tt, cfg).root(&mut s.clone(), depth).expect("unbounded clock");
    (r.action, r.value)
}

fn child_batching() -> Result<String, String> {
    let mut checked = 0;
    for (n, t) in TreeCorpus::standard().trees.iter().enumerate() {
        if t.is_terminal() {
            continue;
        }
        for depth in [1, 3, 5] {
            let seq = root_pair(&TreeEval, t, depth, Frontier::Reference);
            let bat = root_pair(&TreeEval, t, depth, Frontier::Batched);
            check(seq == bat, || format!("tree {n} depth {depth}: {seq:?} != {bat:?}"))?;
            checked += 1;
        }
    }
    let family = HeuristicFamily::generate::<Breakthrough>(GameId::Breakthrough, 2, 17, 0.1);
    let eval = SemiCompleted(family.members[1].clone());
    let positions = breakthrough_positions(100, 99);
    for (n, s) in positions.iter().enumerate() {
        let seq = root_pair(&eval, s, 3, Frontier::Reference);
        let bat = root_pair(&eval, s, 3, Frontier::Batched);
        check(seq == bat, || format!("breakthrough position {n}: {seq:?} != {bat:?}"))?;
        checked += 1;
    }
    Ok(format!("{checked} batched searches identical to sequential (trees + {} breakthrough)", positions.len()))
}

/// Plays `games` games of `engine` against the optimal player, alternating
/// colors, and returns the engine's scores.
fn versus_oracle(spec: AlgorithmSpec, games: u64, nodes: u64) -> Result<Vec<i8>, String> {
    let eval = HeuristicFamily::generate::<TicTacToe>(GameId::TicTacToe, 1, 3, 0.0).members[0].clone();
    let budget = SearchBudget::nodes(nodes);
    (0..games)
        .map(|g| {
            let mut engine = SearchEngine::new(spec, eval.clone(), g).map_err(|e| e.to_string())?;
            let mut oracle = OracleEngine::new(g);
            let color = if g % 2 == 0 { Player::First } else { Player::Second };
            crate::arena::play_match(&TicTacToe::new(), &mut engine, &mut oracle, color, &budget)
                .map(|o| o.score)
                .map_err(|v| format!("{spec} game {g}: {v}"))
        })
        .collect()
}

fn tictactoe_optimality() -> Result<String, String> {
    let mut parts = Vec::new();
    for spec in [AlgorithmSpec::Ubfm, AlgorithmSpec::UbfmSafe, AlgorithmSpec::AlphaBeta] {
        let scores = versus_oracle(spec, 200, 100_000)?;
        let losses = scores.iter().filter(|&&s| s < 0).count();
        check(losses == 0, || format!("{spec} lost {losses} of 200 games to the oracle"))?;
        let draws = scores.iter().filter(|&&s| s == 0).count();
        parts.push(format!("{spec} 0 losses ({draws} draws)"));
    }
    let mut draws = 0;
    for g in 0..50 {
        let mut a = OracleEngine::new(g);
        let mut b = OracleEngine::new(g + 1000);
        let o = crate::arena::play_match(&TicTacToe::new(), &mut a, &mut b, Player::First, &SearchBudget::nodes(1))
            .map_err(|v| v.to_string())?;
        draws += usize::from(o.score == 0);
    }
    check(draws == 50, || format!("oracle self-play drew only {draws} of 50"))?;
    parts.push("oracle self-play 50/50 draws".into());
    Ok(parts.join(", "))
}

/// Runs UBFM with the solver until the TicTacToe root is solved.
pub fn solve_tictactoe(tt: &mut TranspositionTable) -> Resolution {
    let eval = SemiCompleted(FeatureEval {
        game: GameId::TicTacToe,
        seed: 0,
        index: 0,
        weights: <TicTacToe as crate::eval::Featurized>::baseline_weights().to_vec(),
        noise: 0.0,
        oracle: false,
    });
    let root = TicTacToe::new();
    let mut u = Ubfm::new(&eval, tt, UbfmConfig::default());
    u.search(&root, &SearchBudget::nodes(1_000_000)).expect("non-terminal root");
    tt.get(root.key()).map_or(Resolution::Unsolved, |e| e.resolution)
}

fn solver_soundness() -> Result<String, String> {
    let mut tt = TranspositionTable::default();
    let root = solve_tictactoe(&mut tt);
    check(root == Resolution::Solved(0), || format!("root resolution {root:?}"))?;
    let table = tictactoe_table();
    let mut solved = 0;
    for (key, e) in tt.iter() {
        if let Resolution::Solved(x) = e.resolution {
            let want = table.get(&key).ok_or_else(|| format!("unknown state {key:016x}"))?;
            check(x == *want, || format!("state {key:016x} solved as {x}, oracle {want}"))?;
            solved += 1;
        }
    }
    Ok(format!("{solved} solved entries of {} match the oracle", tt.len()))
}

fn ubfm_identity() -> Result<String, String> {
    let ttt_eval = SemiCompleted(HeuristicFamily::generate::<TicTacToe>(GameId::TicTacToe, 1, 1, 0.0).members[0].clone());
    let bt_eval = SemiCompleted(HeuristicFamily::generate::<Breakthrough>(GameId::Breakthrough, 1, 1, 0.0).members[0].clone());
    let bt = breakthrough_positions(1, 5).remove(0);
    for tie_seed in [None, Some(9)] {
        let cfg = UbfmConfig { tie_seed, ..Default::default() };
        let run_ttt = || {
            let mut tt = TranspositionTable::default();
            let mut u = Ubfm::new(&ttt_eval, &mut tt, cfg);
            u.search(&TicTacToe::new(), &SearchBudget::nodes(800)).expect("search");
            crate::search::best_first::dump_tree(&tt, &TicTacToe::new())
        };
        let run_bt = || {
            let mut tt = TranspositionTable::default();
            let mut u = Ubfm::new(&bt_eval, &mut tt, cfg);
            u.search(&bt, &SearchBudget::nodes(1500)).expect("search");
            crate::search::best_first::dump_tree(&tt, &bt)
        };
        check(run_ttt() == run_ttt(), || format!("tictactoe trees differ (tie seed {tie_seed:?})"))?;
        check(run_bt() == run_bt(), || format!("breakthrough trees differ (tie seed {tie_seed:?})"))?;
    }
    let root = TicTacToe::new();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for trial in 0..1000 {
        let mut e = TtEntry::exact(0.0, 0);
        let k = rng.random_range(1..=9);
        let mut best: Option<(u64, f64, usize)> = None;
        for i in 0..k {
            let mut c = ChildStat::new(Action(i as u16), 1000 + i as u64);
            c.selections = rng.random_range(0..4);
            let v = f64::from(rng.random_range(-3..=3)) / 3.0;
            c.value = Some(v);
            let better = match best {
                None => true,
                Some((n, bv, _)) => (c.selections, v) > (n, bv),
            };
            if better {
                best = Some((c.selections, v, i));
            }
            e.children.push(c);
        }
        let mut tt = TranspositionTable::new(64);
        tt.store(root.key(), e).expect("consistent entry");
        let got = decide_safest(&tt, &root).map_err(|e| e.to_string())?;
        let want = Action(best.expect("k >= 1").2 as u16);
        check(got == want, || format!("trial {trial}: safe decision {got:?}, expected {want:?}"))?;
    }
    Ok("identical trees across runs; safe decision is the lexicographic (n, v) argmax on 1000 root sets".into())
}

/// X on 0 and 1, O on 3 and 4, X to move: cell 2 wins at once.
pub fn one_move_win() -> TicTacToe {
    TicTacToe::from_notation(&GameSpec::new(GameId::TicTacToe), "tictactoe xx./oo./... x").expect("fixture")
}

fn mcts_sanity() -> Result<String, String> {
    let s = one_move_win();
    let eval = ZeroEval;
    let mut hits = 0;
    for seed in 0..100 {
        let mut tt = TranspositionTable::default();
        let cfg = MctsConfig {
            c: std::f64::consts::SQRT_2,
            seed,
            ..Default::default()
        };
        let mut m = Mcts::new(&eval, &mut tt, cfg).map_err(|e| e.to_string())?;
        m.search(&s, &SearchBudget::nodes(10_000)).map_err(|e| e.to_string())?;
        let e = tt.get(s.key()).ok_or("root not expanded")?;
        let most = e
            .children
            .iter()
            .fold(None::<&ChildStat>, |b, c| match b {
                Some(b) if b.visits >= c.visits => Some(b),
                _ => Some(c),
            })
            .ok_or("no children")?;
        hits += usize::from(most.action == Action(2));
    }
    check(hits >= 99, || format!("winning move most selected in {hits}/100 runs"))?;
    Ok(format!("winning move most selected in {hits}/100 runs"))
}

/// Zero heuristic; random rollouts never consult it.
struct ZeroEval;

impl crate::eval::Evaluator<TicTacToe> for ZeroEval {
    fn evaluate(&self, _: &TicTacToe) -> f64 {
        0.0
    }
}

fn mtdf_convergence() -> Result<String, String> {
    let corpus = TreeCorpus::standard();
    let (mut total, mut max) = (0u64, 0u32);
    for (n, t) in corpus.trees.iter().enumerate() {
        let mut tt = TranspositionTable::default();
        let want = full_window(&mut AlphaBeta::new(&TreeEval, &mut tt, AbConfig::default()), t, 5);
        for f0 in [-100.0, 0.0, 100.0] {
            let mut tt = TranspositionTable::default();
            let mut ab = AlphaBeta::new(&TreeEval, &mut tt, AbConfig::default());
            let m = mtdf(&mut ab, &mut t.clone(), 5, f0).expect("unbounded clock");
            check(m.value == want, || format!("tree {n} f0 {f0}: {} != {want}", m.value))?;
            total += u64::from(m.calls);
            max = max.max(m.calls);
        }
    }
    let runs = 3 * corpus.trees.len();
    Ok(format!("{runs} runs equal alpha-beta; zero-window calls total {total}, max {max}"))
}

fn protocol_arithmetic() -> Result<String, String> {
    let cfg = TournamentConfig::new(GameSpec::new(GameId::Breakthrough), vec![AlgorithmSpec::UbfmSafe], 15, 1);
    let n = schedule(&cfg).len();
    check(n == 450, || format!("scheduled {n} matches, expected 450"))?;
    Ok("m = 15 schedules 450 matches per game and repetition".into())
}

/// Deterministic record set behind the golden reports: two algorithms, two
/// games, scores drawn from a fixed generator.
pub fn synthetic_records() -> Vec<MatchRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let mut out = Vec::new();
    for (alg, params, p) in [("ubfm_s", "", 0.6), ("mcts", "C=1.41", 0.45)] {
        for (game, bias) in [("breakthrough", 0.05), ("hex", -0.05)] {
            for n in 0..40u64 {
                let u: f64 = rng.random();
                let score = if u < p + bias {
                    1
                } else if u < p + bias + 0.1 {
                    0
                } else {
                    -1
                };
                out.push(MatchRecord {
                    game: game.into(),
                    cand_alg: alg.into(),
                    params: params.into(),
                    bench_alg: "ubfm".into(),
                    eval_i: (n / 2 % 4) as usize,
                    eval_j: (n / 8 % 4) as usize,
                    color: if n % 2 == 0 { "first" } else { "second" }.into(),
                    score,
                    plies: 20 + (n % 7) as u32,
                    millis: 0,
                    seed: n * 7919 % 101,
                });
            }
        }
    }
    out
}

pub fn golden_settings() -> BootstrapSettings {
    BootstrapSettings {
        replicates: 2000,
        level: 0.05,
        seed: 1,
        statistic: Statistic::MeanOfMeans,
    }
}

fn statistics() -> Result<String, String> {
    let wins = vec![1.0; 60];
    let p = game_performance(&wins).map_err(|e| e.to_string())?;
    check(p.mean == 1.0 && p.radius == 0.0, || format!("all wins gave {p:?}"))?;
    let ci = stratified_bootstrap_ci(&[wins.clone(), wins], 10_000, 0.05, 3, Statistic::MeanOfMeans)
        .map_err(|e| e.to_string())?;
    check((ci.lower, ci.upper) == (1.0, 1.0), || format!("all wins interval {ci:?}"))?;
    let balanced: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let ci = stratified_bootstrap_ci(&[balanced], 10_000, 0.05, 3, Statistic::MeanOfMeans)
        .map_err(|e| e.to_string())?;
    check(ci.contains(0.0), || format!("balanced interval {ci:?} misses 0"))?;
    let rows = summarize(&synthetic_records(), &golden_settings()).map_err(|e| e.to_string())?;
    check(emit_report(&rows, ReportFormat::Markdown) == GOLDEN_REPORT_MD, || "markdown report differs from golden file".into())?;
    check(emit_report(&rows, ReportFormat::Csv) == GOLDEN_REPORT_CSV, || "csv report differs from golden file".into())?;
    Ok("all-wins (100 ± 0, [100, 100]); balanced interval contains 0; golden reports byte-identical".into())
}
