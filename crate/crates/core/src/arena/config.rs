//! Tournament configuration, read from TOML.
//!
//! ```toml
//! seed = 2024
//! games = ["tictactoe", "breakthrough:6x6"]
//! candidates = ["ubfm_s", "kbest:k=3"]
//! benchmark = "ubfm"
//!
//! [evals]
//! count = 2
//! seed = 7
//! repetitions = 1
//! epsilon = 0.1
//!
//! [budget]
//! time_per_move = 0.05
//! nodes = 1000
//!
//! [run]
//! workers = 1
//! draw_cap = 400
//! hex_swap = false
//! records = "records.csv"
//! violations = "violations.csv"
//! bootstrap = 10000
//! ```

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

use crate::engine::AlgorithmSpec;
use crate::game::{GameId, GameSpec, DEFAULT_DRAW_CAP};
use crate::search::SearchBudget;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl ConfigError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Invalid { line, .. } => Some(*line),
            ConfigError::Io { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalFamilySpec {
    pub count: usize,
    pub seed: u64,
    pub repetitions: usize,
    /// Noise amplitude of the non-baseline members.
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TournamentConfig {
    pub seed: u64,
    pub games: Vec<GameSpec>,
    pub candidates: Vec<AlgorithmSpec>,
    pub benchmark: AlgorithmSpec,
    pub evals: EvalFamilySpec,
    pub budget: SearchBudget,
    pub workers: usize,
    pub records: PathBuf,
    pub violations: PathBuf,
    pub bootstrap: usize,
}

impl TournamentConfig {
    /// Minimal configuration: one game, the given candidates, a node budget.
    pub fn new(game: GameSpec, candidates: Vec<AlgorithmSpec>, evals: usize, nodes: u64) -> TournamentConfig {
        TournamentConfig {
            seed: 0,
            games: vec![game],
            candidates,
            benchmark: AlgorithmSpec::Ubfm,
            evals: EvalFamilySpec {
                count: evals,
                seed: 0,
                repetitions: 1,
                epsilon: 0.1,
            },
            budget: SearchBudget::nodes(nodes),
            workers: 1,
            records: PathBuf::from("records.csv"),
            violations: PathBuf::from("violations.csv"),
            bootstrap: 10_000,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: u64,
    games: Vec<Spanned<String>>,
    candidates: Vec<Spanned<String>>,
    benchmark: Option<Spanned<String>>,
    evals: Spanned<RawEvals>,
    budget: Spanned<RawBudget>,
    #[serde(default)]
    run: RawRun,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvals {
    count: Spanned<usize>,
    seed: u64,
    #[serde(default = "one")]
    repetitions: Spanned<usize>,
    #[serde(default = "default_epsilon")]
    epsilon: Spanned<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBudget {
    time_per_move: Option<Spanned<f64>>,
    nodes: Option<Spanned<u64>>,
    depth: Option<Spanned<u32>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    workers: Option<Spanned<usize>>,
    draw_cap: Option<Spanned<u32>>,
    #[serde(default)]
    hex_swap: bool,
    records: Option<String>,
    violations: Option<String>,
    bootstrap: Option<Spanned<usize>>,
}

fn one() -> Spanned<usize> {
    Spanned::new(0..0, 1)
}

fn default_epsilon() -> Spanned<f64> {
    Spanned::new(0..0, 0.1)
}

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

/// Parses `id` or `id:RxC`.
fn parse_game(text: &str, cap: u32, swap: bool) -> Result<GameSpec, String> {
    let (id, size) = match text.split_once(':') {
        Some((id, size)) => (id, Some(size)),
        None => (text, None),
    };
    let id: GameId = id.trim().parse().map_err(|e| format!("{e}"))?;
    let mut spec = GameSpec::new(id).with_draw_cap(cap).with_swap(swap && id == GameId::Hex);
    if let Some(size) = size {
        let (r, c) = size
            .split_once('x')
            .and_then(|(r, c)| Some((r.trim().parse().ok()?, c.trim().parse().ok()?)))
            .ok_or_else(|| format!("bad board size `{size}`, expected RxC"))?;
        spec = spec.with_size(r, c);
    }
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<TournamentConfig, ConfigError> {
    let invalid = |span: Range<usize>, message: String| ConfigError::Invalid {
        line: line_of(text, span),
        message,
    };
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Invalid {
        line: e.span().map_or(1, |s| line_of(text, s)),
        message: e.message().to_string(),
    })?;
    let cap = match &raw.run.draw_cap {
        Some(c) if *c.get_ref() == 0 => return Err(invalid(c.span(), "draw_cap must be at least 1".into())),
        Some(c) => *c.get_ref(),
        None => DEFAULT_DRAW_CAP,
    };
    if raw.games.is_empty() {
        return Err(invalid(0..0, "`games` must list at least one game".into()));
    }
    let games = raw
        .games
        .iter()
        .map(|g| parse_game(g.get_ref(), cap, raw.run.hex_swap).map_err(|m| invalid(g.span(), m)))
        .collect::<Result<Vec<_>, _>>()?;
    if raw.candidates.is_empty() {
        return Err(invalid(0..0, "`candidates` must list at least one algorithm".into()));
    }
    let candidates = raw
        .candidates
        .iter()
        .map(|c| c.get_ref().parse().map_err(|e| invalid(c.span(), format!("{e}"))))
        .collect::<Result<Vec<AlgorithmSpec>, _>>()?;
    let benchmark = match &raw.benchmark {
        Some(b) => {
            let spec: AlgorithmSpec = b.get_ref().parse().map_err(|e| invalid(b.span(), format!("{e}")))?;
            if !spec.is_ubfm() {
                return Err(invalid(b.span(), "the benchmark must be a UBFM variant".into()));
            }
            spec
        }
        None => AlgorithmSpec::Ubfm,
    };
    let ev = raw.evals.get_ref();
    if *ev.count.get_ref() == 0 {
        return Err(invalid(ev.count.span(), "evals.count must be at least 1".into()));
    }
    if *ev.repetitions.get_ref() == 0 {
        return Err(invalid(ev.repetitions.span(), "evals.repetitions must be at least 1".into()));
    }
    let epsilon = *ev.epsilon.get_ref();
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(invalid(ev.epsilon.span(), "evals.epsilon must be non-negative".into()));
    }
    let b = raw.budget.get_ref();
    let mut budget = SearchBudget::default();
    if let Some(t) = &b.time_per_move {
        let secs = *t.get_ref();
        if !(secs.is_finite() && secs > 0.0) {
            return Err(invalid(t.span(), "time_per_move must be positive".into()));
        }
        budget.time = Some(Duration::from_secs_f64(secs));
    }
    if let Some(n) = &b.nodes {
        if *n.get_ref() == 0 {
            return Err(invalid(n.span(), "nodes must be positive".into()));
        }
        budget.max_nodes = Some(*n.get_ref());
    }
    if let Some(d) = &b.depth {
        if *d.get_ref() == 0 {
            return Err(invalid(d.span(), "depth must be positive".into()));
        }
        budget.max_depth = Some(*d.get_ref());
    }
    if budget.time.is_none() && budget.max_nodes.is_none() {
        return Err(invalid(raw.budget.span(), "budget needs time_per_move or nodes".into()));
    }
    let workers = match &raw.run.workers {
        Some(w) if *w.get_ref() == 0 => return Err(invalid(w.span(), "workers must be at least 1".into())),
        Some(w) => *w.get_ref(),
        None => 1,
    };
    let bootstrap = match &raw.run.bootstrap {
        Some(b) if *b.get_ref() == 0 => return Err(invalid(b.span(), "bootstrap must be at least 1".into())),
        Some(b) => *b.get_ref(),
        None => 10_000,
    };
    Ok(TournamentConfig {
        seed: raw.seed,
        games,
        candidates,
        benchmark,
        evals: EvalFamilySpec {
            count: *ev.count.get_ref(),
            seed: ev.seed,
            repetitions: *ev.repetitions.get_ref(),
            epsilon,
        },
        budget,
        workers,
        records: PathBuf::from(raw.run.records.as_deref().unwrap_or("records.csv")),
        violations: PathBuf::from(raw.run.violations.as_deref().unwrap_or("violations.csv")),
        bootstrap,
    })
}

/// Reads a configuration file. Relative output paths are resolved against
/// the file's directory.
pub fn load_config(path: &Path) -> Result<TournamentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = parse_config(&text)?;
    let dir = path.parent().unwrap_or(Path::new(""));
    for p in [&mut cfg.records, &mut cfg.violations] {
        if p.is_relative() {
            *p = dir.join(&*p);
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 3
games = ["tictactoe"]
candidates = ["ubfm_s", "kbest:k=3"]

[evals]
count = 2
seed = 9

[budget]
nodes = 500
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.games, vec![GameSpec::new(GameId::TicTacToe)]);
        assert_eq!(cfg.candidates, vec![AlgorithmSpec::UbfmSafe, AlgorithmSpec::Kbest { k: 3 }]);
        assert_eq!(cfg.benchmark, AlgorithmSpec::Ubfm);
        assert_eq!(cfg.evals.repetitions, 1);
        assert_eq!(cfg.budget, SearchBudget::nodes(500));
        assert_eq!(cfg.workers, 1);
    }

    #[test]
    fn game_sizes_and_flags() {
        let text = MINIMAL.replace(r#"["tictactoe"]"#, r#"["breakthrough:7x6", "hex:5x5"]"#)
            + "\n[run]\ndraw_cap = 50\nhex_swap = true\n";
        let cfg = parse_config(&text).unwrap();
        assert_eq!((cfg.games[0].rows, cfg.games[0].cols), (7, 6));
        assert!(cfg.games[1].swap && !cfg.games[0].swap);
        assert!(cfg.games.iter().all(|g| g.draw_cap == 50));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            (MINIMAL.replace("kbest:k=3", "kbest:k=0"), 4),
            (MINIMAL.replace("\"tictactoe\"", "\"go\""), 3),
            (MINIMAL.replace("nodes = 500", "nodes = 0"), 11),
            (MINIMAL.replace("count = 2", "count = \"two\""), 7),
            (MINIMAL.replace("seed = 9", "seed = 9\nflavour = 1"), 9),
            (MINIMAL.replace("seed = 3", "seed = 3\nbenchmark = \"ab\""), 3),
        ];
        for (text, line) in cases {
            let err = parse_config(&text).unwrap_err();
            assert_eq!(err.line(), Some(line), "{err}");
        }
    }

    #[test]
    fn budget_must_bound_the_move() {
        let text = MINIMAL.replace("nodes = 500", "depth = 4");
        assert_eq!(parse_config(&text).unwrap_err().line(), Some(10));
        let text = MINIMAL.replace("nodes = 500", "time_per_move = 0.0");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn relative_outputs_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.toml");
        std::fs::write(&path, MINIMAL).unwrap();
        let cfg = load_config(&path).unwrap();
        assert_eq!(cfg.records, dir.path().join("records.csv"));
    }
}
