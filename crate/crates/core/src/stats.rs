//! Performance metrics over match records: per-game mean with a 95%
//! confidence radius, a stratified bootstrap interval across games, and
//! CSV/Markdown reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::arena::MatchRecord;
use crate::game::mix64;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;
pub const DEFAULT_REPLICATES: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("no scores")]
    Empty,
    #[error("stratum {0} is empty")]
    EmptyStratum(usize),
    #[error("bootstrap needs at least one replicate")]
    NoReplicates,
    #[error("level must lie strictly between 0 and 1, got {0}")]
    BadLevel(f64),
    #[error("unknown report format `{0}` (expected csv or md)")]
    UnknownFormat(String),
}

/// Mean score and its confidence radius, both as fractions of one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Performance {
    pub mean: f64,
    pub radius: f64,
    pub n: usize,
}

/// Rounds a fraction to the nearest whole percent.
pub fn percent(x: f64) -> i64 {
    (100.0 * x).round() as i64
}

impl Performance {
    /// `"25 ± 3"`, in whole percents.
    pub fn format_pm(&self) -> String {
        format!("{} ± {}", percent(self.mean), percent(self.radius))
    }
}

/// Mean and `1.96·s/√n` with the sample standard deviation `s`.
pub fn game_performance(scores: &[f64]) -> Result<Performance, StatsError> {
    if scores.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = scores.len();
    let mean = scores.iter().sum::<f64>() / n as f64;
    let radius = if n < 2 {
        0.0
    } else {
        let var = scores.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Z95 * var.sqrt() / (n as f64).sqrt()
    };
    Ok(Performance { mean, radius, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Statistic {
    /// Unweighted mean of the per-stratum means.
    #[default]
    MeanOfMeans,
    /// Mean over all scores.
    Pooled,
}

impl Statistic {
    pub fn apply(self, strata: &[Vec<f64>]) -> f64 {
        match self {
            Statistic::MeanOfMeans => {
                strata.iter().map(|s| s.iter().sum::<f64>() / s.len() as f64).sum::<f64>() / strata.len() as f64
            }
            Statistic::Pooled => {
                let n: usize = strata.iter().map(Vec::len).sum();
                strata.iter().flatten().sum::<f64>() / n as f64
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile interval at `(level/2, 1 - level/2)` over `replicates`
/// resamples drawn with replacement inside each stratum. Replicate `r` uses
/// its own generator seeded from `(seed, r)`, so the result does not depend
/// on scheduling; resampling indexes positions, so callers fix the order of
/// each stratum.
pub fn stratified_bootstrap_ci(
    strata: &[Vec<f64>],
    replicates: usize,
    level: f64,
    seed: u64,
    statistic: Statistic,
) -> Result<Interval, StatsError> {
    if strata.is_empty() {
        return Err(StatsError::Empty);
    }
    if let Some(i) = strata.iter().position(Vec::is_empty) {
        return Err(StatsError::EmptyStratum(i));
    }
    if replicates == 0 {
        return Err(StatsError::NoReplicates);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::BadLevel(level));
    }
    let mut stats: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(r as u64)));
            let sample: Vec<Vec<f64>> = strata
                .iter()
                .map(|s| (0..s.len()).map(|_| s[rng.random_range(0..s.len())]).collect())
                .collect();
            statistic.apply(&sample)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    Ok(Interval {
        lower: quantile(&stats, level / 2.0),
        upper: quantile(&stats, 1.0 - level / 2.0),
    })
}

/// Scores grouped by game label, each stratum ordered by record seed.
pub fn strata_by_game(records: &[&MatchRecord]) -> Vec<(String, Vec<f64>)> {
    let mut groups: BTreeMap<&str, Vec<&MatchRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(&r.game).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(g, mut rs)| {
            rs.sort_by_key(|r| (r.seed, r.eval_i, r.eval_j, r.color.clone()));
            (g.to_string(), rs.iter().map(|r| f64::from(r.score)).collect())
        })
        .collect()
}

/// One report line: an algorithm's overall mean, its interval and its
/// per-game performances.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub algorithm: String,
    pub mean: f64,
    pub interval: Option<Interval>,
    pub games: Vec<(String, Performance)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapSettings {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    pub statistic: Statistic,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        BootstrapSettings {
            replicates: DEFAULT_REPLICATES,
            level: 0.05,
            seed: 0,
            statistic: Statistic::MeanOfMeans,
        }
    }
}

/// One row per candidate label, in label order.
pub fn summarize(records: &[MatchRecord], boot: &BootstrapSettings) -> Result<Vec<ReportRow>, StatsError> {
    let mut by_alg: BTreeMap<String, Vec<&MatchRecord>> = BTreeMap::new();
    for r in records {
        by_alg.entry(r.candidate()).or_default().push(r);
    }
    by_alg
        .into_iter()
        .map(|(algorithm, rs)| {
            let strata = strata_by_game(&rs);
            let scores: Vec<Vec<f64>> = strata.iter().map(|(_, s)| s.clone()).collect();
            let games = strata
                .iter()
                .map(|(g, s)| Ok((g.clone(), game_performance(s)?)))
                .collect::<Result<Vec<_>, StatsError>>()?;
            let interval = stratified_bootstrap_ci(&scores, boot.replicates, boot.level, boot.seed, boot.statistic)?;
            Ok(ReportRow {
                algorithm,
                mean: boot.statistic.apply(&scores),
                interval: Some(interval),
                games,
            })
        })
        .collect()
}

/// Per-game best over `rows`: an upper bound on the performance of any one
/// parameter value.
pub fn star_row(name: &str, rows: &[ReportRow]) -> ReportRow {
    let mut best: BTreeMap<String, Performance> = BTreeMap::new();
    for row in rows {
        for (g, p) in &row.games {
            let e = best.entry(g.clone()).or_insert(*p);
            if p.mean > e.mean {
                *e = *p;
            }
        }
    }
    let mean = if best.is_empty() {
        0.0
    } else {
        best.values().map(|p| p.mean).sum::<f64>() / best.len() as f64
    };
    ReportRow {
        algorithm: name.to_string(),
        mean,
        interval: None,
        games: best.into_iter().collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(StatsError::UnknownFormat(other.to_string())),
        }
    }
}

fn two_decimals(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn table(rows: &[ReportRow]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut games: Vec<String> = Vec::new();
    for row in rows {
        for (g, _) in &row.games {
            if !games.contains(g) {
                games.push(g.clone());
            }
        }
    }
    games.sort();
    let mut header: Vec<String> = ["algorithm", "mean", "lower", "upper"].map(String::from).to_vec();
    header.extend(games.iter().cloned());
    let body = rows
        .iter()
        .map(|row| {
            let mut cells = vec![row.algorithm.clone(), two_decimals(row.mean)];
            match row.interval {
                Some(i) => cells.extend([two_decimals(i.lower), two_decimals(i.upper)]),
                None => cells.extend(["-".to_string(), "-".to_string()]),
            }
            for g in &games {
                let cell = row
                    .games
                    .iter()
                    .find(|(name, _)| name == g)
                    .map_or_else(|| "-".to_string(), |(_, p)| p.format_pm());
                cells.push(cell);
            }
            cells
        })
        .collect();
    (header, body)
}

/// Renders `rows` with percentages: the overall mean and interval bounds to
/// two decimals, the per-game columns as `mean ± radius`.
pub fn emit_report(rows: &[ReportRow], format: ReportFormat) -> String {
    let (header, body) = table(rows);
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header).expect("in-memory write");
            for r in &body {
                w.write_record(r).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
        }
        ReportFormat::Markdown => {
            let width = |c: usize| {
                std::iter::once(&header)
                    .chain(&body)
                    .map(|r| r[c].chars().count())
                    .max()
                    .unwrap_or(0)
                    .max(3)
            };
            let widths: Vec<usize> = (0..header.len()).map(width).collect();
            let line = |cells: &[String]| {
                let mut s = String::from("|");
                for (c, w) in cells.iter().zip(&widths) {
                    let pad = w - c.chars().count();
                    let _ = write!(s, " {c}{} |", " ".repeat(pad));
                }
                s.push('\n');
                s
            };
            let mut out = line(&header);
            out.push('|');
            for w in &widths {
                let _ = write!(out, "{}|", "-".repeat(w + 2));
            }
            out.push('\n');
            for r in &body {
                out += &line(r);
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(n: usize) -> Vec<f64> {
        (0..2 * n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect()
    }

    #[test]
    fn all_wins() {
        let p = game_performance(&[1.0; 40]).unwrap();
        assert_eq!((p.mean, p.radius), (1.0, 0.0));
        assert_eq!(p.format_pm(), "100 ± 0");
        let ci = stratified_bootstrap_ci(&[vec![1.0; 40], vec![1.0; 7]], 1000, 0.05, 1, Statistic::MeanOfMeans).unwrap();
        assert_eq!((ci.lower, ci.upper), (1.0, 1.0));
    }

    #[test]
    fn balanced_radius_closed_form() {
        let p = game_performance(&balanced(500)).unwrap();
        let want = 1.96 * (1000.0f64 / 999.0).sqrt() / 1000f64.sqrt();
        assert!(p.mean.abs() < 1e-12);
        assert!((p.radius - want).abs() < 1e-12);
        assert_eq!(percent(p.radius), 6);
        assert!((100.0 * p.radius - 6.2).abs() < 0.05);
    }

    #[test]
    fn plus_minus_format() {
        let p = Performance {
            mean: 0.251,
            radius: 0.029,
            n: 10,
        };
        assert_eq!(p.format_pm(), "25 ± 3");
    }

    #[test]
    fn balanced_interval_is_symmetric() {
        let ci = stratified_bootstrap_ci(&[balanced(500)], 10_000, 0.05, 7, Statistic::MeanOfMeans).unwrap();
        assert!(ci.contains(0.0));
        assert!((ci.lower + ci.upper).abs() <= 0.005, "{ci:?}");
    }

    #[test]
    fn bootstrap_errors() {
        assert_eq!(
            stratified_bootstrap_ci(&[vec![1.0], vec![]], 10, 0.05, 0, Statistic::Pooled),
            Err(StatsError::EmptyStratum(1))
        );
        assert_eq!(
            stratified_bootstrap_ci(&[vec![1.0]], 0, 0.05, 0, Statistic::Pooled),
            Err(StatsError::NoReplicates)
        );
        assert_eq!(game_performance(&[]), Err(StatsError::Empty));
    }

    #[test]
    fn bootstrap_is_seed_deterministic() {
        let data = vec![vec![1.0, -1.0, 0.0, 1.0], vec![-1.0, -1.0, 1.0]];
        let a = stratified_bootstrap_ci(&data, 500, 0.05, 3, Statistic::MeanOfMeans).unwrap();
        let b = stratified_bootstrap_ci(&data, 500, 0.05, 3, Statistic::MeanOfMeans).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn interval_contains_point_estimate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..50 {
            let strata: Vec<Vec<f64>> = (0..rng.random_range(1..4))
                .map(|_| {
                    let p = rng.random_range(0.2..0.8);
                    (0..rng.random_range(20..60))
                        .map(|_| if rng.random_bool(p) { 1.0 } else { -1.0 })
                        .collect()
                })
                .collect();
            let ci = stratified_bootstrap_ci(&strata, 1000, 0.05, trial, Statistic::MeanOfMeans).unwrap();
            assert!(ci.contains(Statistic::MeanOfMeans.apply(&strata)), "trial {trial}");
        }
    }

    #[test]
    fn coverage_of_fair_coin() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let covered = (0..100)
            .filter(|&t| {
                let data: Vec<f64> = (0..100).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
                stratified_bootstrap_ci(&[data], 1000, 0.05, t, Statistic::MeanOfMeans)
                    .unwrap()
                    .contains(0.0)
            })
            .count();
        assert!(covered >= 90, "{covered}");
    }

    #[test]
    fn statistics_differ_on_unbalanced_strata() {
        let data = vec![vec![1.0; 3], vec![-1.0]];
        assert_eq!(Statistic::MeanOfMeans.apply(&data), 0.0);
        assert_eq!(Statistic::Pooled.apply(&data), 0.5);
    }

    fn row(alg: &str, games: &[(&str, f64)]) -> ReportRow {
        ReportRow {
            algorithm: alg.into(),
            mean: games.iter().map(|g| g.1).sum::<f64>() / games.len() as f64,
            interval: Some(Interval {
                lower: -0.1,
                upper: 0.2,
            }),
            games: games
                .iter()
                .map(|(g, m)| {
                    (
                        g.to_string(),
                        Performance {
                            mean: *m,
                            radius: 0.03,
                            n: 8,
                        },
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn report_shapes() {
        assert_eq!(emit_report(&[], ReportFormat::Csv), "algorithm,mean,lower,upper\n");
        let md = emit_report(&[], ReportFormat::Markdown);
        assert_eq!(md.lines().count(), 2);
        let rows = [row("ubfm_s", &[("hex", 0.25), ("clobber", -0.1)])];
        let csv = emit_report(&rows, ReportFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "algorithm,mean,lower,upper,clobber,hex");
        assert_eq!(lines[1], "ubfm_s,7.50,-10.00,20.00,-10 ± 3,25 ± 3");
        assert_eq!(lines.len(), 2);
        assert!("pdf".parse::<ReportFormat>().is_err());
    }

    #[test]
    fn markdown_columns_align() {
        let rows = [row("ubfm_s", &[("hex", 0.25)]), row("mcts:1.41", &[("hex", -0.5)])];
        let md = emit_report(&rows, ReportFormat::Markdown);
        let widths: Vec<usize> = md.lines().map(|l| l.chars().count()).collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]), "{md}");
    }

    #[test]
    fn star_row_takes_per_game_best() {
        let rows = [
            row("mcts:1.41", &[("hex", 0.1), ("clobber", 0.4)]),
            row("mcts:1", &[("hex", 0.3), ("clobber", -0.2)]),
            row("mcts:0.3", &[("hex", -0.1), ("clobber", 0.0)]),
        ];
        let star = star_row("mcts:*", &rows);
        let get = |g: &str| star.games.iter().find(|(n, _)| n == g).unwrap().1.mean;
        assert_eq!(get("hex"), 0.3);
        assert_eq!(get("clobber"), 0.4);
        assert!((star.mean - 0.35).abs() < 1e-12);
        assert!(star.interval.is_none());
    }
}
