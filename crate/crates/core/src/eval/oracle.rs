//! Exhaustive TicTacToe solution used as a ground-truth oracle.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::game::{Action, Game, TicTacToe};

/// Minimax value (first-player view) of every position reachable from the
/// empty board, keyed by position key.
pub fn tictactoe_table() -> &'static HashMap<u64, i8> {
    static TABLE: OnceLock<HashMap<u64, i8>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = HashMap::new();
        solve(&mut TicTacToe::new(), &mut table);
        table
    })
}

fn solve(state: &mut TicTacToe, table: &mut HashMap<u64, i8>) -> i8 {
    if let Some(&v) = table.get(&state.key()) {
        return v;
    }
    let value = match state.outcome() {
        Some(o) => o.score(),
        None => {
            let sign = if state.first_player() { 1 } else { -1 };
            let mut best = i8::MIN;
            for a in state.legal_actions() {
                state.apply(a).expect("legal");
                best = best.max(sign * solve(state, table));
                state.undo().expect("applied");
            }
            sign * best
        }
    };
    table.insert(state.key(), value);
    value
}

pub fn tictactoe_value(state: &TicTacToe) -> Option<i8> {
    tictactoe_table().get(&state.key()).copied()
}

/// Actions that preserve the oracle value of `state`.
pub fn tictactoe_optimal_actions(state: &TicTacToe) -> Vec<Action> {
    let Some(target) = tictactoe_value(state) else {
        return Vec::new();
    };
    let mut s = state.clone();
    state
        .legal_actions()
        .into_iter()
        .filter(|&a| {
            s.apply(a).expect("legal");
            let v = tictactoe_value(&s);
            s.undo().expect("applied");
            v == Some(target)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_covers_all_reachable_positions() {
        assert_eq!(tictactoe_table().len(), 5478);
        assert_eq!(tictactoe_value(&TicTacToe::new()), Some(0));
    }

    #[test]
    fn optimal_replies_to_corner_opening() {
        let mut g = TicTacToe::new();
        g.apply(Action(0)).unwrap();
        // Only the center holds the draw against a corner opening.
        assert_eq!(tictactoe_optimal_actions(&g), vec![Action(4)]);
        assert_eq!(tictactoe_optimal_actions(&TicTacToe::new()).len(), 9);
    }
}
