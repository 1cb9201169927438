//! Transposition table shared by every search algorithm.
//!
//! Entries live in two-slot buckets indexed by the low bits of the position
//! key, with the full key stored for verification. The table doubles instead
//! of evicting until it reaches its entry ceiling; past the ceiling slot 0 is
//! depth-preferred and slot 1 always-replace.

use thiserror::Error;

use crate::game::Action;
use crate::solver::Resolution;

/// Default maximum number of entries before replacement starts.
pub const DEFAULT_CEILING: usize = 1 << 21;
const INITIAL_BUCKETS: usize = 1 << 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TtError {
    #[error("lower bound {lower} exceeds upper bound {upper}")]
    CrossedBounds { lower: f64, upper: f64 },
    #[error("solved entry must have lower = upper = value (got {lower}, {upper}, {value})")]
    LooseSolved { lower: f64, upper: f64, value: f64 },
}

/// Per-action statistics of a stored state.
#[derive(Debug, Clone, PartialEq)]
pub struct ChildStat {
    pub action: Action,
    /// `v_{s,a}`, first-player view.
    pub value: Option<f64>,
    /// `n_{s,a}`, best-first selection count.
    pub selections: u64,
    /// MCTS accumulated reward for the mover at the parent.
    pub wins: f64,
    /// MCTS visit count.
    pub visits: u64,
    pub child_key: u64,
}

impl ChildStat {
    pub fn new(action: Action, child_key: u64) -> ChildStat {
        ChildStat {
            action,
            value: None,
            selections: 0,
            wins: 0.0,
            visits: 0,
            child_key,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtEntry {
    /// First-player view.
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Remaining depth of the search that produced the bounds.
    pub depth: u32,
    /// Per-action data in canonical action order; empty until expanded.
    pub children: Vec<ChildStat>,
    pub resolution: Resolution,
}

impl TtEntry {
    pub fn exact(value: f64, depth: u32) -> TtEntry {
        TtEntry {
            value,
            lower: value,
            upper: value,
            depth,
            children: Vec::new(),
            resolution: Resolution::Unsolved,
        }
    }

    pub fn unbounded() -> TtEntry {
        TtEntry {
            value: 0.0,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            depth: 0,
            children: Vec::new(),
            resolution: Resolution::Unsolved,
        }
    }

    pub fn solved(value: f64, outcome: i8) -> TtEntry {
        TtEntry {
            resolution: Resolution::Solved(outcome),
            ..TtEntry::exact(value, u32::MAX)
        }
    }

    pub fn child(&self, action: Action) -> Option<&ChildStat> {
        self.children
            .binary_search_by_key(&action, |c| c.action)
            .ok()
            .map(|i| &self.children[i])
    }

    pub fn child_mut(&mut self, action: Action) -> Option<&mut ChildStat> {
        self.children
            .binary_search_by_key(&action, |c| c.action)
            .ok()
            .map(|i| &mut self.children[i])
    }

    pub fn is_solved(&self) -> bool {
        self.resolution.is_solved()
    }

    pub fn check(&self) -> Result<(), TtError> {
        if self.lower > self.upper {
            return Err(TtError::CrossedBounds {
                lower: self.lower,
                upper: self.upper,
            });
        }
        if self.is_solved() && !(self.lower == self.value && self.upper == self.value) {
            return Err(TtError::LooseSolved {
                lower: self.lower,
                upper: self.upper,
                value: self.value,
            });
        }
        Ok(())
    }

    /// Marks the entry solved with an exact value.
    pub fn set_solved(&mut self, value: f64, outcome: i8) {
        self.value = value;
        self.lower = value;
        self.upper = value;
        self.resolution = Resolution::Solved(outcome);
    }
}

type Slot = Option<(u64, TtEntry)>;

pub struct TranspositionTable {
    buckets: Vec<[Slot; 2]>,
    len: usize,
    ceiling: usize,
    replacements: u64,
}

impl Default for TranspositionTable {
    fn default() -> Self {
        TranspositionTable::new(DEFAULT_CEILING)
    }
}

impl TranspositionTable {
    pub fn new(ceiling: usize) -> TranspositionTable {
        TranspositionTable {
            buckets: vec![[None, None]; INITIAL_BUCKETS],
            len: 0,
            ceiling: ceiling.max(2),
            replacements: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of entries overwritten by a different key.
    pub fn replacements(&self) -> u64 {
        self.replacements
    }

    pub fn clear(&mut self) {
        self.buckets = vec![[None, None]; INITIAL_BUCKETS];
        self.len = 0;
    }

    fn bucket(&self, key: u64) -> usize {
        (key as usize) & (self.buckets.len() - 1)
    }

    fn position(&self, key: u64) -> Option<(usize, usize)> {
        let b = self.bucket(key);
        (0..2).find_map(|s| match &self.buckets[b][s] {
            Some((k, _)) if *k == key => Some((b, s)),
            _ => None,
        })
    }

    pub fn get(&self, key: u64) -> Option<&TtEntry> {
        self.position(key)
            .and_then(|(b, s)| self.buckets[b][s].as_ref())
            .map(|(_, e)| e)
    }

    pub fn get_mut(&mut self, key: u64) -> Option<&mut TtEntry> {
        let (b, s) = self.position(key)?;
        self.buckets[b][s].as_mut().map(|(_, e)| e)
    }

    pub fn contains(&self, key: u64) -> bool {
        self.position(key).is_some()
    }

    /// Inserts or overwrites the entry for `key`.
    pub fn store(&mut self, key: u64, entry: TtEntry) -> Result<(), TtError> {
        entry.check()?;
        if let Some((b, s)) = self.position(key) {
            self.buckets[b][s] = Some((key, entry));
            return Ok(());
        }
        loop {
            let b = self.bucket(key);
            if let Some(s) = (0..2).find(|&s| self.buckets[b][s].is_none()) {
                self.buckets[b][s] = Some((key, entry));
                self.len += 1;
                return Ok(());
            }
            if self.buckets.len() * 4 <= self.ceiling {
                self.grow();
                continue;
            }
            break;
        }
        let b = self.bucket(key);
        let slot0_depth = self.buckets[b][0].as_ref().map_or(0, |(_, e)| e.depth);
        self.replacements += 1;
        if entry.depth >= slot0_depth {
            self.buckets[b][1] = self.buckets[b][0].take();
            self.buckets[b][0] = Some((key, entry));
        } else {
            self.buckets[b][1] = Some((key, entry));
        }
        Ok(())
    }

    /// Returns the entry for `key`, inserting `make()` if absent.
    pub fn get_or_insert_with(&mut self, key: u64, make: impl FnOnce() -> TtEntry) -> &mut TtEntry {
        if !self.contains(key) {
            let entry = make();
            self.store(key, entry).expect("fresh entry is valid");
        }
        self.get_mut(key).expect("just stored")
    }

    fn grow(&mut self) {
        let n = self.buckets.len() * 2;
        let old = std::mem::replace(&mut self.buckets, vec![[None, None]; n]);
        for (key, entry) in old.into_iter().flat_map(|[a, b]| [a, b]).flatten() {
            let b = self.bucket(key);
            let s = if self.buckets[b][0].is_none() { 0 } else { 1 };
            if self.buckets[b][s].is_none() {
                self.buckets[b][s] = Some((key, entry));
            } else {
                // Three keys share a bucket even after doubling; keep the two
                // deepest entries.
                self.len -= 1;
                self.replacements += 1;
                let shallow = (0..2)
                    .min_by_key(|&s| self.buckets[b][s].as_ref().map_or(0, |(_, e)| e.depth))
                    .unwrap();
                let keep = self.buckets[b][shallow].as_ref().map_or(0, |(_, e)| e.depth);
                if entry.depth > keep {
                    self.buckets[b][shallow] = Some((key, entry));
                }
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &TtEntry)> {
        self.buckets
            .iter()
            .flat_map(|b| b.iter())
            .filter_map(|s| s.as_ref().map(|(k, e)| (*k, e)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_of_unknown_key_is_absent() {
        let tt = TranspositionTable::default();
        assert!(tt.get(42).is_none());
    }

    #[test]
    fn store_then_lookup() {
        let mut tt = TranspositionTable::default();
        let e = TtEntry::solved(1.0, 1);
        tt.store(7, e.clone()).unwrap();
        assert_eq!(tt.get(7), Some(&e));
        assert_eq!(tt.len(), 1);
    }

    #[test]
    fn crossed_bounds_are_rejected() {
        let mut tt = TranspositionTable::default();
        let e = TtEntry {
            lower: 2.0,
            upper: 1.0,
            ..TtEntry::exact(1.5, 1)
        };
        assert!(matches!(tt.store(1, e), Err(TtError::CrossedBounds { .. })));
        let loose = TtEntry {
            resolution: Resolution::Solved(1),
            ..TtEntry::unbounded()
        };
        assert!(tt.store(1, loose).is_err());
        assert!(tt.is_empty());
    }

    #[test]
    fn grows_instead_of_evicting_below_ceiling() {
        let mut tt = TranspositionTable::new(1 << 16);
        for k in 0..10_000u64 {
            tt.store(k.wrapping_mul(0x9e37_79b9_7f4a_7c15), TtEntry::exact(k as f64, 1))
                .unwrap();
        }
        assert_eq!(tt.len(), 10_000);
        assert_eq!(tt.replacements(), 0);
        for k in 0..10_000u64 {
            assert!(tt.contains(k.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        }
    }

    #[test]
    fn depth_preferred_replacement_at_ceiling() {
        // Ceiling 2 keeps a single bucket: every key collides.
        let mut tt = TranspositionTable::new(2);
        tt.buckets = vec![[None, None]];
        tt.store(1, TtEntry::exact(0.0, 5)).unwrap();
        tt.store(2, TtEntry::exact(0.0, 1)).unwrap();
        // Shallower newcomer takes the always-replace slot.
        tt.store(3, TtEntry::exact(0.0, 2)).unwrap();
        assert!(tt.contains(1) && tt.contains(3) && !tt.contains(2));
        // Deeper newcomer takes the depth-preferred slot, demoting the old one.
        tt.store(4, TtEntry::exact(0.0, 9)).unwrap();
        assert!(tt.contains(4) && tt.contains(1) && !tt.contains(3));
        // Same-key store with deeper search replaces the shallower entry.
        tt.store(1, TtEntry::exact(0.5, 12)).unwrap();
        assert_eq!(tt.get(1).unwrap().depth, 12);
        assert_eq!(tt.get(1).unwrap().value, 0.5);
    }

    #[test]
    fn children_are_found_by_action() {
        let mut e = TtEntry::unbounded();
        e.children = (0..5).map(|i| ChildStat::new(Action(i * 2), i as u64)).collect();
        assert_eq!(e.child(Action(4)).unwrap().child_key, 2);
        assert!(e.child(Action(3)).is_none());
        e.child_mut(Action(8)).unwrap().selections += 1;
        assert_eq!(e.children[4].selections, 1);
    }
}
