use gamesearch::eval::{HeuristicFamily, SemiCompleted};
use gamesearch::game::{Breakthrough, Game, GameId};
use gamesearch::search::{AbConfig, AlphaBeta, Mcts, MctsConfig, SearchBudget, Ubfm, UbfmConfig};
use gamesearch::tt::TranspositionTable;

fn eval() -> SemiCompleted<gamesearch::eval::FeatureEval> {
    SemiCompleted(HeuristicFamily::generate::<Breakthrough>(GameId::Breakthrough, 1, 0, 0.0).members.remove(0))
}

fn play_out(mut pick: impl FnMut(&Breakthrough) -> gamesearch::game::Action) {
    let mut s = Breakthrough::new();
    for _ in 0..30 {
        if s.is_terminal() {
            break;
        }
        let a = pick(&s);
        assert!(s.legal_actions().contains(&a));
        s.apply(a).unwrap();
    }
}

#[test]
fn ubfm_survives_a_full_table() {
    let eval = eval();
    let mut tt = TranspositionTable::new(64);
    play_out(|s| {
        let mut u = Ubfm::new(&eval, &mut tt, UbfmConfig::default());
        u.choose(s, &SearchBudget::nodes(400), true).unwrap().action
    });
    assert!(tt.replacements() > 0);
}

#[test]
fn mcts_survives_a_full_table() {
    let eval = eval();
    let mut tt = TranspositionTable::new(64);
    play_out(|s| {
        let mut m = Mcts::new(&eval, &mut tt, MctsConfig::default()).unwrap();
        m.choose(s, &SearchBudget::nodes(400)).unwrap().action
    });
    assert!(tt.replacements() > 0);
}

#[test]
fn alphabeta_survives_a_full_table() {
    let eval = eval();
    let mut tt = TranspositionTable::new(64);
    play_out(|s| {
        let mut ab = AlphaBeta::new(&eval, &mut tt, AbConfig { solver: true, ..AbConfig::default() });
        ab.root(&mut s.clone(), 3).unwrap().action
    });
    assert!(tt.replacements() > 0);
}
