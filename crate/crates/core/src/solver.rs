//! Integrated basic solver: resolution propagation and decision filtering.

use std::cmp::Ordering;

use crate::game::{Action, Outcome, Player};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Resolution {
    #[default]
    Unsolved,
    /// Exact game value, first-player view.
    Solved(i8),
}

impl Resolution {
    pub fn is_solved(self) -> bool {
        matches!(self, Resolution::Solved(_))
    }

    pub fn value(self) -> Option<i8> {
        match self {
            Resolution::Solved(v) => Some(v),
            Resolution::Unsolved => None,
        }
    }

    /// Solved with the best possible value for `player`.
    pub fn is_win_for(self, player: Player) -> bool {
        self.value().is_some_and(|v| f64::from(v) * player.sign() > 0.0)
    }

    pub fn is_loss_for(self, player: Player) -> bool {
        self.value().is_some_and(|v| f64::from(v) * player.sign() < 0.0)
    }
}

/// Resolution of a state from its terminal status and its children's
/// resolutions.
pub fn update_resolution(
    terminal: Option<Outcome>,
    mover: Player,
    children: impl IntoIterator<Item = Resolution>,
) -> Resolution {
    if let Some(o) = terminal {
        return Resolution::Solved(o.score());
    }
    let mut best: Option<i8> = None;
    let mut all_solved = true;
    let mut any = false;
    for r in children {
        any = true;
        match r.value() {
            Some(v) => {
                if r.is_win_for(mover) {
                    return r;
                }
                let rel = v * mover.sign() as i8;
                if best.is_none_or(|b| rel > b * mover.sign() as i8) {
                    best = Some(v);
                }
            }
            None => all_solved = false,
        }
    }
    match best {
        Some(v) if all_solved && any => Resolution::Solved(v),
        _ => Resolution::Unsolved,
    }
}

/// One root action considered by a decision rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub action: Action,
    pub resolution: Resolution,
    /// Value relative to the mover.
    pub value: f64,
    pub count: u64,
    /// Secondary statistic, e.g. mean reward.
    pub mean: f64,
}

impl Candidate {
    pub fn new(action: Action, value: f64) -> Candidate {
        Candidate {
            action,
            resolution: Resolution::Unsolved,
            value,
            count: 0,
            mean: 0.0,
        }
    }
}

/// Applies `base` (a "greater is better" comparison) after the solver
/// overrides: a solved win is always played and a solved loss is avoided
/// whenever another candidate exists. Remaining ties go to the candidate
/// listed first.
pub fn filter_decision(
    candidates: &[Candidate],
    mover: Player,
    base: impl Fn(&Candidate, &Candidate) -> Ordering,
) -> Option<Action> {
    let pick = |pool: &mut dyn Iterator<Item = &Candidate>| -> Option<Action> {
        let mut best: Option<&Candidate> = None;
        for c in pool {
            if best.is_none_or(|b| base(c, b) == Ordering::Greater) {
                best = Some(c);
            }
        }
        best.map(|c| c.action)
    };
    let wins = || candidates.iter().filter(|c| c.resolution.is_win_for(mover));
    if wins().next().is_some() {
        return pick(&mut wins());
    }
    let safe = || candidates.iter().filter(|c| !c.resolution.is_loss_for(mover));
    if safe().next().is_some() {
        return pick(&mut safe());
    }
    pick(&mut candidates.iter())
}

/// Base rule: best relative value.
pub fn by_value(a: &Candidate, b: &Candidate) -> Ordering {
    a.value.total_cmp(&b.value)
}

/// Base rule: most selected, then best relative value.
pub fn by_count_then_value(a: &Candidate, b: &Candidate) -> Ordering {
    a.count.cmp(&b.count).then(a.value.total_cmp(&b.value))
}

/// Base rule: most visited, then best mean reward.
pub fn by_count_then_mean(a: &Candidate, b: &Candidate) -> Ordering {
    a.count.cmp(&b.count).then(a.mean.total_cmp(&b.mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Resolution::*;

    #[test]
    fn resolution_rules() {
        let first = Player::First;
        assert_eq!(update_resolution(None, first, [Unsolved, Solved(1)]), Solved(1));
        assert_eq!(update_resolution(None, first, [Solved(0), Solved(-1)]), Solved(0));
        assert_eq!(update_resolution(None, first, [Solved(-1), Unsolved]), Unsolved);
        assert_eq!(
            update_resolution(None, Player::Second, [Solved(0), Solved(1)]),
            Solved(0)
        );
        assert_eq!(update_resolution(None, Player::Second, [Unsolved, Solved(-1)]), Solved(-1));
        assert_eq!(update_resolution(None, first, [Solved(0), Unsolved]), Unsolved);
        assert_eq!(
            update_resolution(Some(Outcome::SecondWins), first, []),
            Solved(-1)
        );
        assert_eq!(update_resolution(None, first, []), Unsolved);
    }

    fn cand(a: u16, r: Resolution, v: f64) -> Candidate {
        Candidate {
            resolution: r,
            ..Candidate::new(Action(a), v)
        }
    }

    #[test]
    fn solved_win_overrides_value() {
        let c = [cand(1, Unsolved, 0.3), cand(2, Unsolved, 0.8), cand(3, Solved(1), 0.2)];
        assert_eq!(filter_decision(&c, Player::First, by_value), Some(Action(3)));
    }

    #[test]
    fn solved_loss_is_avoided() {
        let c = [cand(1, Solved(-1), 0.9), cand(2, Unsolved, -0.5)];
        assert_eq!(filter_decision(&c, Player::First, by_value), Some(Action(2)));
        // For the second player Solved(1) is the loss.
        let c = [cand(1, Solved(1), 0.9), cand(2, Unsolved, -0.5)];
        assert_eq!(filter_decision(&c, Player::Second, by_value), Some(Action(2)));
    }

    #[test]
    fn all_losing_falls_back_to_base_rule() {
        let c = [cand(1, Solved(-1), -1.0), cand(2, Solved(-1), -1.0)];
        assert_eq!(filter_decision(&c, Player::First, by_value), Some(Action(1)));
    }

    #[test]
    fn no_resolutions_is_identity() {
        let c = [cand(1, Unsolved, 0.1), cand(2, Unsolved, 0.4), cand(3, Unsolved, 0.4)];
        assert_eq!(filter_decision(&c, Player::First, by_value), Some(Action(2)));
        assert_eq!(filter_decision(&[], Player::First, by_value), None);
    }

    #[test]
    fn solved_draw_competes_under_base_rule() {
        // An unsolved action with a better value beats a solved draw.
        let c = [cand(1, Solved(0), 0.0), cand(2, Unsolved, 0.4)];
        assert_eq!(filter_decision(&c, Player::First, by_value), Some(Action(2)));
    }
}
