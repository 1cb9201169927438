//! Acceptance criteria, one PASS/FAIL line each. Criteria 1 to 9 gate the
//! build; criterion 10 is a long informative tournament that runs only when
//! `GAMESEARCH_DIRECTIONAL=1` is set.

use std::process::ExitCode;

use gamesearch::arena::{run_tournament, RunOptions, TournamentConfig};
use gamesearch::engine::AlgorithmSpec;
use gamesearch::game::{GameId, GameSpec};
use gamesearch::search::SearchBudget;
use gamesearch::stats::{summarize, BootstrapSettings};
use gamesearch::verify::{run_suite, suites};

fn main() -> ExitCode {
    let mut failed = 0;
    for suite in suites() {
        let report = run_suite(&suite);
        println!("{}", report.line());
        if !(report.passed && report.within_limit()) {
            failed += 1;
        }
    }
    if std::env::var("GAMESEARCH_DIRECTIONAL").as_deref() == Ok("1") {
        println!("{}", directional());
    } else {
        println!("SKIP [10] directional reproduction: informative only, set GAMESEARCH_DIRECTIONAL=1 to run");
    }
    if failed == 0 {
        println!("acceptance: all gating criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} gating criteria failed");
        ExitCode::FAILURE
    }
}

/// UBFM_s against UBFM under the full protocol on Breakthrough 6x6 and Hex
/// 7x7: 8 evaluation functions, 0.05 s per move, two repetitions.
fn directional() -> String {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut cfg = TournamentConfig::new(GameSpec::new(GameId::Breakthrough), vec![AlgorithmSpec::UbfmSafe], 8, 1);
    cfg.games.push(GameSpec::new(GameId::Hex));
    cfg.seed = 10;
    cfg.evals.repetitions = 2;
    cfg.budget = SearchBudget::time(0.05);
    cfg.workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    cfg.records = dir.path().join("records.csv");
    cfg.violations = dir.path().join("violations.csv");
    let out = match run_tournament(&cfg, &RunOptions::default()) {
        Ok(o) => o,
        Err(e) => return format!("FAIL [10] directional reproduction (informative): {e}"),
    };
    let rows = match summarize(&out.records, &BootstrapSettings::default()) {
        Ok(r) => r,
        Err(e) => return format!("FAIL [10] directional reproduction (informative): {e}"),
    };
    let row = &rows[0];
    let ci = row.interval.expect("bootstrap interval");
    let status = if ci.lower >= -0.02 { "PASS" } else { "FAIL" };
    format!(
        "{status} [10] directional reproduction (informative): ubfm_s vs ubfm over {} games, mean {:.2}%, CI [{:.2}%, {:.2}%]",
        out.records.len(),
        100.0 * row.mean,
        100.0 * ci.lower,
        100.0 * ci.upper
    )
}
