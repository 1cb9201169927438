//! Match execution and tournament orchestration.
//!
//! Each candidate algorithm faces the benchmark twice, once per color, for
//! every ordered pair of evaluation functions `(f_i, f_j)`, `f_i` driving the
//! candidate. With `m` functions that is `2·m²` matches per game, candidate
//! and repetition.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Engine, SearchEngine};
use crate::eval::{Featurized, HeuristicFamily};
use crate::game::{dispatch, mix64, BoardGame, Game, GameError, GameSpec, GameVisitor, Player};
use crate::search::{SearchBudget, SearchError};

mod config;

pub use config::{load_config, parse_config, ConfigError, EvalFamilySpec, TournamentConfig};

#[derive(Debug, Error)]
pub enum ArenaError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("record log: {0}")]
    Csv(#[from] csv::Error),
    #[error("record log: {0}")]
    Io(#[from] std::io::Error),
}

/// One finished match, scored from the candidate's point of view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub game: String,
    pub cand_alg: String,
    pub params: String,
    pub bench_alg: String,
    pub eval_i: usize,
    pub eval_j: usize,
    pub color: String,
    pub score: i8,
    pub plies: u32,
    pub millis: u64,
    pub seed: u64,
}

impl MatchRecord {
    /// Identity of the scheduled match, independent of its result.
    pub fn task_key(&self) -> (String, String, String, usize, usize, String) {
        (
            self.game.clone(),
            self.cand_alg.clone(),
            self.params.clone(),
            self.eval_i,
            self.eval_j,
            self.color.clone(),
        )
    }

    /// Candidate label, `alg` or `alg:param`.
    pub fn candidate(&self) -> String {
        match self.params.split_once('=') {
            Some((_, v)) => format!("{}:{v}", self.cand_alg),
            None => self.cand_alg.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Candidate,
    Benchmark,
}

/// An engine failed to produce a legal move. The match is forfeited by the
/// offender and logged apart from the scored records.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{offender:?} violated the protocol at ply {ply}: {detail}")]
pub struct ProtocolViolation {
    pub offender: Side,
    pub ply: u32,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub game: String,
    pub cand_alg: String,
    pub params: String,
    pub bench_alg: String,
    pub eval_i: usize,
    pub eval_j: usize,
    pub color: String,
    pub offender: Side,
    pub ply: u32,
    pub detail: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchOutcome {
    /// Candidate's point of view.
    pub score: i8,
    pub plies: u32,
    pub millis: u64,
}

/// Plays `initial` to the end, the candidate moving as `cand_color`.
pub fn play_match<G: Game>(
    initial: &G,
    cand: &mut dyn Engine<G>,
    bench: &mut dyn Engine<G>,
    cand_color: Player,
    budget: &SearchBudget,
) -> Result<MatchOutcome, ProtocolViolation> {
    let start = Instant::now();
    let mut s = initial.clone();
    while !s.is_terminal() {
        let side = if s.to_move() == cand_color {
            Side::Candidate
        } else {
            Side::Benchmark
        };
        let engine: &mut dyn Engine<G> = match side {
            Side::Candidate => cand,
            Side::Benchmark => bench,
        };
        let ply = s.ply() - initial.ply();
        let violation = |detail: String| ProtocolViolation {
            offender: side,
            ply,
            detail,
        };
        let r = engine.choose(&s, budget).map_err(|e| violation(e.to_string()))?;
        if !s.legal_actions().contains(&r.action) {
            return Err(violation(format!("illegal move {}", s.format_action(r.action))));
        }
        s.apply(r.action).map_err(|e| violation(e.to_string()))?;
    }
    let outcome = s.outcome().expect("terminal");
    Ok(MatchOutcome {
        score: outcome.score() * cand_color.sign() as i8,
        plies: s.ply() - initial.ply(),
        millis: start.elapsed().as_millis() as u64,
    })
}

/// `id` for the default board, `id:RxC` otherwise.
pub fn game_label(spec: &GameSpec) -> String {
    let default = GameSpec::new(spec.id);
    if (spec.rows, spec.cols) == (default.rows, default.cols) {
        spec.id.to_string()
    } else {
        format!("{}:{}x{}", spec.id, spec.rows, spec.cols)
    }
}

/// One scheduled match. `i` drives the candidate and `j` the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchTask {
    pub game: usize,
    pub candidate: usize,
    pub rep: usize,
    pub i: usize,
    pub j: usize,
    pub color: Player,
    pub seed: u64,
}

impl MatchTask {
    /// Evaluation ids are unique across repetitions: `rep·m + index`.
    pub fn eval_ids(&self, m: usize) -> (usize, usize) {
        (self.rep * m + self.i, self.rep * m + self.j)
    }
}

fn task_seed(base: u64, parts: [usize; 6]) -> u64 {
    parts.iter().fold(mix64(base), |h, &p| mix64(h ^ p as u64))
}

/// Every match of the tournament in a fixed order, without playing any.
pub fn schedule(cfg: &TournamentConfig) -> Vec<MatchTask> {
    let m = cfg.evals.count;
    let mut out = Vec::with_capacity(cfg.games.len() * cfg.candidates.len() * cfg.evals.repetitions * 2 * m * m);
    for game in 0..cfg.games.len() {
        for candidate in 0..cfg.candidates.len() {
            for rep in 0..cfg.evals.repetitions {
                for i in 0..m {
                    for j in 0..m {
                        for color in [Player::First, Player::Second] {
                            let seed = task_seed(cfg.seed, [game, candidate, rep, i, j, color as usize]);
                            out.push(MatchTask {
                                game,
                                candidate,
                                rep,
                                i,
                                j,
                                color,
                                seed,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Seed of the evaluation family used in repetition `rep`.
pub fn family_seed(evals: &EvalFamilySpec, rep: usize) -> u64 {
    mix64(evals.seed ^ (rep as u64).wrapping_mul(0x9e37_79b9))
}

fn record_for(cfg: &TournamentConfig, t: &MatchTask) -> MatchRecord {
    let cand = &cfg.candidates[t.candidate];
    let (eval_i, eval_j) = t.eval_ids(cfg.evals.count);
    MatchRecord {
        game: game_label(&cfg.games[t.game]),
        cand_alg: cand.id().into(),
        params: cand.params(),
        bench_alg: cfg.benchmark.to_string(),
        eval_i,
        eval_j,
        color: t.color.to_string(),
        score: 0,
        plies: 0,
        millis: 0,
        seed: t.seed,
    }
}

/// Reads a record log.
pub fn read_records(path: &Path) -> Result<Vec<MatchRecord>, ArenaError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<MatchRecord>, _>>()?)
}

fn open_log(path: &Path, append: bool) -> Result<csv::Writer<File>, ArenaError> {
    let has_content = append && path.metadata().is_ok_and(|m| m.len() > 0);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = OpenOptions::new()
        .create(true)
        .append(append)
        .write(true)
        .truncate(!append)
        .open(path)?;
    Ok(csv::WriterBuilder::new().has_headers(!has_content).from_writer(file))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Keep the existing record log and play only the missing matches.
    pub resume: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TournamentOutcome {
    /// All records of the tournament, including those found on resume, in
    /// schedule order.
    pub records: Vec<MatchRecord>,
    pub violations: Vec<ViolationRecord>,
    pub played: usize,
    pub skipped: usize,
}

struct Logs {
    records: Mutex<csv::Writer<File>>,
    violations: Mutex<csv::Writer<File>>,
}

enum Played {
    Record(MatchRecord),
    Violation(ViolationRecord),
}

struct GameRunner<'a> {
    cfg: &'a TournamentConfig,
    tasks: Vec<MatchTask>,
    logs: &'a Logs,
}

impl GameVisitor for GameRunner<'_> {
    type Output = Result<Vec<(usize, Played)>, ArenaError>;

    fn visit<G: BoardGame + Featurized>(self, initial: G) -> Self::Output {
        let cfg = self.cfg;
        let families: Vec<HeuristicFamily> = (0..cfg.evals.repetitions)
            .map(|rep| {
                HeuristicFamily::generate::<G>(
                    initial.spec().id,
                    cfg.evals.count,
                    family_seed(&cfg.evals, rep),
                    cfg.evals.epsilon,
                )
            })
            .collect();
        let logs = self.logs;
        self.tasks
            .par_iter()
            .enumerate()
            .map(|(n, t)| -> Result<(usize, Played), ArenaError> {
                let family = &families[t.rep];
                let spec = cfg.candidates[t.candidate];
                let mut cand = SearchEngine::new(spec, family.members[t.i].clone(), mix64(t.seed ^ 1))?;
                let mut bench = SearchEngine::new(cfg.benchmark, family.members[t.j].clone(), mix64(t.seed ^ 2))?;
                let mut rec = record_for(cfg, t);
                let played = match play_match(&initial, &mut cand, &mut bench, t.color, &cfg.budget) {
                    Ok(o) => {
                        rec.score = o.score;
                        rec.plies = o.plies;
                        rec.millis = o.millis;
                        let mut w = logs.records.lock().expect("record log lock");
                        w.serialize(&rec)?;
                        w.flush()?;
                        Played::Record(rec)
                    }
                    Err(v) => {
                        let vr = ViolationRecord {
                            game: rec.game,
                            cand_alg: rec.cand_alg,
                            params: rec.params,
                            bench_alg: rec.bench_alg,
                            eval_i: rec.eval_i,
                            eval_j: rec.eval_j,
                            color: rec.color,
                            offender: v.offender,
                            ply: v.ply,
                            detail: v.detail,
                            seed: rec.seed,
                        };
                        let mut w = logs.violations.lock().expect("violation log lock");
                        w.serialize(&vr)?;
                        w.flush()?;
                        Played::Violation(vr)
                    }
                };
                Ok((n, played))
            })
            .collect()
    }
}

/// Plays every scheduled match on a pool of `cfg.workers` threads, appending
/// each record to the log as soon as it is known.
pub fn run_tournament(cfg: &TournamentConfig, opts: &RunOptions) -> Result<TournamentOutcome, ArenaError> {
    let existing = if opts.resume && cfg.records.exists() {
        read_records(&cfg.records)?
    } else {
        Vec::new()
    };
    let done: HashSet<_> = existing.iter().map(MatchRecord::task_key).collect();
    let all = schedule(cfg);
    let logs = Logs {
        records: Mutex::new(open_log(&cfg.records, opts.resume)?),
        violations: Mutex::new(open_log(&cfg.violations, opts.resume)?),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .expect("thread pool");
    let mut outcome = TournamentOutcome::default();
    let mut fresh: Vec<(usize, MatchRecord)> = Vec::new();
    for (g, spec) in cfg.games.iter().enumerate() {
        let (idx, tasks): (Vec<usize>, Vec<MatchTask>) = all
            .iter()
            .enumerate()
            .filter(|(_, t)| t.game == g && !done.contains(&record_for(cfg, t).task_key()))
            .map(|(n, t)| (n, *t))
            .unzip();
        outcome.skipped += all.iter().filter(|t| t.game == g).count() - tasks.len();
        let runner = GameRunner {
            cfg,
            tasks,
            logs: &logs,
        };
        for (n, played) in pool.install(|| dispatch(spec, runner))?? {
            outcome.played += 1;
            match played {
                Played::Record(r) => fresh.push((idx[n], r)),
                Played::Violation(v) => outcome.violations.push(v),
            }
        }
    }
    let mut by_key: std::collections::HashMap<_, MatchRecord> =
        existing.into_iter().map(|r| (r.task_key(), r)).collect();
    for (_, r) in fresh {
        by_key.insert(r.task_key(), r);
    }
    outcome.records = all
        .iter()
        .filter_map(|t| by_key.remove(&record_for(cfg, t).task_key()))
        .collect();
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{AlgorithmSpec, OracleEngine, RandomEngine};
    use crate::game::{GameId, Othello, TicTacToe};
    use crate::search::SearchResult;

    fn tictactoe_config(dir: &Path, evals: usize) -> TournamentConfig {
        let mut cfg = TournamentConfig::new(GameSpec::new(GameId::TicTacToe), vec![AlgorithmSpec::UbfmSafe], evals, 200);
        cfg.records = dir.join("records.csv");
        cfg.violations = dir.join("violations.csv");
        cfg
    }

    #[test]
    fn schedule_counts_ordered_pairs_with_colors() {
        let mut cfg = TournamentConfig::new(GameSpec::new(GameId::Hex), vec![AlgorithmSpec::UbfmSafe], 15, 1);
        assert_eq!(schedule(&cfg).len(), 450);
        cfg.evals.count = 2;
        assert_eq!(schedule(&cfg).len(), 8);
        cfg.evals.repetitions = 3;
        cfg.candidates.push(AlgorithmSpec::Kbest { k: 3 });
        assert_eq!(schedule(&cfg).len(), 2 * 3 * 8);
        let seeds: HashSet<u64> = schedule(&cfg).iter().map(|t| t.seed).collect();
        assert_eq!(seeds.len(), 48);
    }

    #[test]
    fn oracle_never_loses_to_random() {
        let budget = SearchBudget::nodes(1);
        for seed in 0..100 {
            let mut oracle = OracleEngine::new(seed);
            let mut random = RandomEngine::new(seed + 1000);
            let color = if seed % 2 == 0 { Player::First } else { Player::Second };
            let o = play_match(&TicTacToe::new(), &mut oracle, &mut random, color, &budget).unwrap();
            assert!(o.score >= 0, "seed {seed}");
        }
    }

    struct Rogue;

    impl Engine<TicTacToe> for Rogue {
        fn label(&self) -> String {
            "rogue".into()
        }

        fn choose(&mut self, _: &TicTacToe, _: &SearchBudget) -> Result<SearchResult, SearchError> {
            Ok(SearchResult {
                action: crate::game::Action(99),
                value: 0.0,
                depth: 0,
                nodes: 0,
                iterations: 0,
                elapsed: Default::default(),
                resolution: Default::default(),
            })
        }
    }

    #[test]
    fn illegal_moves_forfeit() {
        let mut random = RandomEngine::new(3);
        let v = play_match(&TicTacToe::new(), &mut random, &mut Rogue, Player::First, &SearchBudget::nodes(1)).unwrap_err();
        assert_eq!(v.offender, Side::Benchmark);
        assert_eq!(v.ply, 1);
    }

    #[test]
    fn mirrored_games_are_deterministic() {
        let eval = crate::eval::HeuristicFamily::generate::<TicTacToe>(GameId::TicTacToe, 1, 5, 0.1).members[0].clone();
        let play = |color| {
            let mut a = SearchEngine::new(AlgorithmSpec::UbfmSafe, eval.clone(), 1).unwrap();
            let mut b = SearchEngine::new(AlgorithmSpec::UbfmSafe, eval.clone(), 1).unwrap();
            let o = play_match(&TicTacToe::new(), &mut a, &mut b, color, &SearchBudget::nodes(50)).unwrap();
            (o.score, o.plies)
        };
        let first = play(Player::First);
        let second = play(Player::Second);
        assert_eq!(first, play(Player::First));
        assert_eq!(first.0, -second.0);
        assert_eq!(first.1, second.1);
    }

    #[test]
    fn othello_cap_adjudicates_by_discs() {
        let spec = GameSpec::new(GameId::Othello8).with_draw_cap(20);
        let initial = Othello::from_spec(&spec).unwrap();
        for seed in 0..5 {
            let mut a = RandomEngine::new(seed);
            let mut b = RandomEngine::new(seed + 50);
            let o = play_match(&initial, &mut a, &mut b, Player::First, &SearchBudget::nodes(1)).unwrap();
            assert_eq!(o.plies, 20);
            let mut s = initial.clone();
            let mut ra = RandomEngine::new(seed);
            let mut rb = RandomEngine::new(seed + 50);
            while !s.is_terminal() {
                let e: &mut dyn Engine<Othello> = if s.to_move() == Player::First { &mut ra } else { &mut rb };
                let a = e.choose(&s, &SearchBudget::nodes(1)).unwrap().action;
                s.apply(a).unwrap();
            }
            let diff = i64::from(s.disc_count(Player::First)) - i64::from(s.disc_count(Player::Second));
            assert_eq!(i64::from(o.score), diff.signum());
        }
    }

    #[test]
    fn tournament_writes_and_resumes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tictactoe_config(dir.path(), 2);
        let first = run_tournament(&cfg, &RunOptions::default()).unwrap();
        assert_eq!(first.records.len(), 8);
        assert_eq!(first.played, 8);
        assert_eq!(read_records(&cfg.records).unwrap().len(), 8);

        let again = run_tournament(&cfg, &RunOptions { resume: true }).unwrap();
        assert_eq!((again.played, again.skipped), (0, 8));
        assert_eq!(again.records, first.records);

        let mut partial = read_records(&cfg.records).unwrap();
        partial.truncate(5);
        let mut w = csv::Writer::from_path(&cfg.records).unwrap();
        for r in &partial {
            w.serialize(r).unwrap();
        }
        w.flush().unwrap();
        let resumed = run_tournament(&cfg, &RunOptions { resume: true }).unwrap();
        assert_eq!((resumed.played, resumed.skipped), (3, 5));
        assert_eq!(read_records(&cfg.records).unwrap().len(), 8);
        let strip = |rs: &[MatchRecord]| rs.iter().map(|r| (r.task_key(), r.score, r.plies, r.seed)).collect::<Vec<_>>();
        assert_eq!(strip(&resumed.records), strip(&first.records));
    }

    #[test]
    fn scores_are_candidate_relative() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tictactoe_config(dir.path(), 2);
        let out = run_tournament(&cfg, &RunOptions::default()).unwrap();
        for r in &out.records {
            assert!((-1..=1).contains(&r.score));
            assert_eq!(r.bench_alg, "ubfm");
            assert_eq!(r.cand_alg, "ubfm_s");
        }
    }
}
