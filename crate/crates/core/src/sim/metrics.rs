//! Conflict episodes and the intrusion prevention rate.

use std::collections::BTreeMap;

/// One maximal sub-separation spell of an unordered aircraft pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Episode {
    pub pair: (u32, u32),
    pub start_tick: u64,
    /// First tick at which the pair was clear again (or the run end).
    pub end_tick: u64,
}

impl Episode {
    pub fn ticks(&self) -> u64 {
        self.end_tick - self.start_tick
    }

    pub fn duration(&self, dt: f64) -> f64 {
        self.ticks() as f64 * dt
    }
}

/// Tracks conflict spells per pair; a pair that clears for less than
/// `merge_ticks` continues its previous episode.
#[derive(Debug, Clone)]
pub struct EpisodeTracker {
    merge_ticks: u64,
    open: BTreeMap<(u32, u32), Episode>,
    closed: Vec<Episode>,
}

pub fn pair_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Outcome of updating the tracker for one tick.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct EpisodeChanges {
    /// Pairs entering conflict this tick, including resumed episodes.
    pub started: Vec<(u32, u32)>,
    pub ended: Vec<(u32, u32)>,
}

impl EpisodeTracker {
    pub fn new(merge_ticks: u64) -> Self {
        EpisodeTracker { merge_ticks, open: BTreeMap::new(), closed: Vec::new() }
    }

    /// Record the set of pairs in conflict at `tick` (sorted, deduplicated).
    pub fn observe(&mut self, tick: u64, in_conflict: &[(u32, u32)]) -> EpisodeChanges {
        let mut changes = EpisodeChanges::default();
        let ended: Vec<(u32, u32)> = self
            .open
            .iter()
            .filter(|(k, e)| e.end_tick == u64::MAX && in_conflict.binary_search(k).is_err())
            .map(|(k, _)| *k)
            .collect();
        for k in ended {
            if let Some(e) = self.open.get_mut(&k) {
                e.end_tick = tick;
                changes.ended.push(k);
            }
        }
        for &k in in_conflict {
            match self.open.get_mut(&k) {
                Some(e) if e.end_tick == u64::MAX => {}
                Some(e) if tick - e.end_tick < self.merge_ticks => {
                    e.end_tick = u64::MAX;
                    changes.started.push(k);
                }
                _ => {
                    if let Some(prev) = self.open.remove(&k) {
                        self.closed.push(prev);
                    }
                    self.open.insert(k, Episode { pair: k, start_tick: tick, end_tick: u64::MAX });
                    changes.started.push(k);
                }
            }
        }
        changes
    }

    /// Close everything at `end_tick` and return all episodes ordered by start.
    pub fn finish(mut self, end_tick: u64) -> Vec<Episode> {
        for (_, mut e) in std::mem::take(&mut self.open) {
            if e.end_tick == u64::MAX {
                e.end_tick = end_tick;
            }
            self.closed.push(e);
        }
        self.closed.sort_by_key(|e| (e.start_tick, e.pair));
        self.closed
    }
}

/// `(n_cfl − n_int(t_dur)) / n_cfl`, or 1 without conflicts.
pub fn ipr_from_durations(durations: &[f64], t_dur: f64) -> f64 {
    if durations.is_empty() {
        return 1.0;
    }
    let intrusions = durations.iter().filter(|&&d| d > t_dur + 1e-9).count();
    (durations.len() - intrusions) as f64 / durations.len() as f64
}

pub fn ipr(episodes: &[Episode], t_dur: f64, dt: f64) -> f64 {
    let d: Vec<f64> = episodes.iter().map(|e| e.duration(dt)).collect();
    ipr_from_durations(&d, t_dur)
}

/// Smallest `t_dur` with IPR = 1: the longest episode.
pub fn ipr_threshold(episodes: &[Episode], dt: f64) -> f64 {
    episodes.iter().map(|e| e.duration(dt)).fold(0.0, f64::max)
}
