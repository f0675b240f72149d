//! Per-snapshot statistics and run-level convergence/holding measurements.

use serde::{Deserialize, Serialize};

use crate::agent::Phase;
use crate::error::{Error, Result};
use crate::sim::{Population, TIME_EPS};

/// Largest group value with its own histogram bucket.
pub const HISTOGRAM_GROUPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupHistogram {
    /// `counts[g - 1]` agents hold group `g`, for `g ≤ HISTOGRAM_GROUPS`.
    pub counts: Vec<u64>,
    /// Agents with a group above `HISTOGRAM_GROUPS`.
    pub overflow: u64,
}

impl GroupHistogram {
    pub fn count(&self, group: u32) -> u64 {
        match group.checked_sub(1) {
            Some(i) => self.counts.get(i as usize).copied().unwrap_or(0),
            None => 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub size: usize,
    pub interactions: u64,
    /// Counts in Normal, Waiting, Updating order.
    pub phase_counts: [u64; 3],
    pub estimate_min: u32,
    pub estimate_max: u32,
    /// Most frequent estimate; the smallest one on ties.
    pub estimate_mode: u32,
    pub estimate_mode_count: u64,
    pub global_fmv: u32,
    pub group_histogram: GroupHistogram,
    /// Per-index minimum of `signals[i]` over all agents (missing reads 0).
    pub min_signal_profile: Vec<u32>,
    pub max_stored_integer: u32,
    pub max_signals_len: usize,
}

impl Snapshot {
    pub fn all_normal(&self) -> bool {
        self.phase_counts[Phase::Normal.index()] == self.size as u64
    }

    pub fn agreed(&self) -> bool {
        self.estimate_mode_count == self.size as u64
    }

    pub fn log2_size(&self) -> f64 {
        (self.size as f64).log2()
    }
}

/// Smallest positive group value that no agent holds.
pub fn global_fmv(pop: &Population) -> u32 {
    first_absent(pop.groups(), pop.len())
}

fn first_absent(groups: impl Iterator<Item = u32>, n: usize) -> u32 {
    // With n agents the answer is at most n + 1.
    let mut present = vec![false; n + 2];
    for g in groups {
        if let Some(slot) = present.get_mut(g as usize) {
            *slot = true;
        }
    }
    present.iter().skip(1).position(|&p| !p).map_or(n as u32 + 2, |i| i as u32 + 1)
}

fn estimate_mode(estimates: &mut dyn Iterator<Item = u32>, n: usize, max: u32) -> (u32, u64) {
    if (max as usize) <= 4 * n + 1024 {
        let mut counts = vec![0u64; max as usize + 1];
        for e in estimates {
            counts[e as usize] += 1;
        }
        let mut best = (0u32, 0u64);
        for (value, &count) in counts.iter().enumerate() {
            if count > best.1 {
                best = (value as u32, count);
            }
        }
        best
    } else {
        let mut sorted: Vec<u32> = estimates.collect();
        sorted.sort_unstable();
        let mut best = (0u32, 0u64);
        for run in sorted.chunk_by(|a, b| a == b) {
            if run.len() as u64 > best.1 {
                best = (run[0], run.len() as u64);
            }
        }
        best
    }
}

pub fn snapshot(pop: &Population) -> Snapshot {
    let agents = pop.agents();
    let mut phase_counts = [0u64; 3];
    let mut estimate_min = u32::MAX;
    let mut estimate_max = 0u32;
    let mut histogram = GroupHistogram { counts: vec![0; HISTOGRAM_GROUPS], overflow: 0 };
    let mut max_len = 0usize;
    let mut min_len = usize::MAX;
    let mut max_stored = 0u32;

    for a in agents {
        phase_counts[a.phase.index()] += 1;
        estimate_min = estimate_min.min(a.estimate);
        estimate_max = estimate_max.max(a.estimate);
        match histogram.counts.get_mut((a.group as usize).wrapping_sub(1)) {
            Some(c) => *c += 1,
            None => histogram.overflow += 1,
        }
        max_len = max_len.max(a.signals.len());
        min_len = min_len.min(a.signals.len());
        max_stored = max_stored.max(a.max_stored_integer());
    }

    let mut profile = vec![u32::MAX; max_len];
    for a in agents {
        for (p, &s) in profile.iter_mut().zip(&a.signals) {
            *p = (*p).min(s);
        }
    }
    // Past the shortest array some agent reads 0.
    for p in profile.iter_mut().skip(min_len) {
        *p = 0;
    }

    let (estimate_mode, estimate_mode_count) = if agents.is_empty() {
        (0, 0)
    } else {
        estimate_mode(&mut agents.iter().map(|a| a.estimate), agents.len(), estimate_max)
    };
    if agents.is_empty() {
        estimate_min = 0;
    }

    Snapshot {
        time: pop.time(),
        size: agents.len(),
        interactions: pop.interactions(),
        phase_counts,
        estimate_min,
        estimate_max,
        estimate_mode,
        estimate_mode_count,
        global_fmv: global_fmv(pop),
        group_histogram: histogram,
        min_signal_profile: profile,
        max_stored_integer: max_stored,
        max_signals_len: max_len,
    }
}

/// Window of estimates counted as correct, as a function of the population
/// size. Both bounds are strict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CorrectnessBand {
    /// `((1 − δ)·log₂ n, (1 + δ)·log₂ n)`.
    Delta(f64),
    /// `(low·log₂ n, high·log₂ n)`.
    Multipliers { low: f64, high: f64 },
    /// `(log₂ n − log₂ ln n, 2·log₂ n)`, the range the maximum of `n`
    /// geometric variables lands in with high probability.
    CountingWindow,
    /// Size-independent bounds.
    Fixed { low: f64, high: f64 },
}

impl CorrectnessBand {
    pub fn delta(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::parameter("delta", format!("{delta} not in (0, 1)")));
        }
        Ok(CorrectnessBand::Delta(delta))
    }

    pub fn multipliers(low: f64, high: f64) -> Result<Self> {
        if !(low > 0.0 && low < high && high.is_finite()) {
            return Err(Error::parameter("band", format!("need 0 < low < high, got ({low}, {high})")));
        }
        Ok(CorrectnessBand::Multipliers { low, high })
    }

    pub fn bounds(&self, size: usize) -> (f64, f64) {
        let log_n = (size as f64).log2();
        match *self {
            CorrectnessBand::Delta(d) => ((1.0 - d) * log_n, (1.0 + d) * log_n),
            CorrectnessBand::Multipliers { low, high } => (low * log_n, high * log_n),
            CorrectnessBand::CountingWindow => (log_n - (size as f64).ln().log2(), 2.0 * log_n),
            CorrectnessBand::Fixed { low, high } => (low, high),
        }
    }
}

pub fn in_band(snap: &Snapshot, band: &CorrectnessBand) -> bool {
    let (low, high) = band.bounds(snap.size);
    f64::from(snap.estimate_min) > low && f64::from(snap.estimate_max) < high
}

/// In band, all Normal and in full agreement.
pub fn is_converged(snap: &Snapshot, band: &CorrectnessBand) -> bool {
    in_band(snap, band) && snap.all_normal() && snap.agreed()
}

/// Time from `after` until the first converged snapshot at or after it.
pub fn convergence_time(snaps: &[Snapshot], band: &CorrectnessBand, after: f64) -> Option<f64> {
    snaps
        .iter()
        .filter(|s| s.time + TIME_EPS >= after)
        .find(|s| is_converged(s, band))
        .map(|s| (s.time - after).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Holding {
    pub duration: f64,
    /// The stream ended before any violation was seen.
    pub censored: bool,
}

/// Time from `from` until the first later snapshot that leaves the band.
pub fn holding_time(snaps: &[Snapshot], band: &CorrectnessBand, from: f64) -> Holding {
    let mut last = from;
    for s in snaps.iter().filter(|s| s.time > from + TIME_EPS) {
        if !in_band(s, band) {
            return Holding { duration: s.time - from, censored: false };
        }
        last = s.time;
    }
    Holding { duration: last - from, censored: true }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::AgentState;

    fn pop_of(agents: Vec<AgentState>) -> Population {
        Population::new(agents)
    }

    fn with_groups(groups: &[u32]) -> Population {
        pop_of(groups.iter().map(|&g| AgentState { group: g, ..Default::default() }).collect())
    }

    fn snap_with(size: usize, estimates: &[u32]) -> Snapshot {
        let mut agents: Vec<AgentState> = estimates
            .iter()
            .map(|&e| AgentState { estimate: e, ..Default::default() })
            .collect();
        agents.resize(size, AgentState { estimate: estimates[0], ..Default::default() });
        snapshot(&pop_of(agents))
    }

    #[test]
    fn global_fmv_examples() {
        assert_eq!(global_fmv(&with_groups(&[1, 1, 2, 4])), 3);
        assert_eq!(global_fmv(&with_groups(&[2, 3])), 1);
        assert_eq!(global_fmv(&with_groups(&[1, 2, 3])), 4);
        assert_eq!(global_fmv(&with_groups(&[1, 2])), 3);
    }

    #[test]
    fn min_signal_profile_examples() {
        let a = AgentState { signals: vec![3, 0], ..Default::default() };
        let b = AgentState { signals: vec![1, 5], ..Default::default() };
        assert_eq!(snapshot(&pop_of(vec![a.clone(), b])).min_signal_profile, vec![1, 0]);

        let c = AgentState { signals: vec![4, 4, 4], ..Default::default() };
        let snap = snapshot(&pop_of(vec![a, c]));
        assert_eq!(snap.min_signal_profile, vec![3, 0, 0]);
        assert_eq!(snap.max_signals_len, 3);
    }

    #[test]
    fn estimate_statistics() {
        let snap = snap_with(6, &[20]);
        assert_eq!((snap.estimate_mode, snap.estimate_mode_count), (20, 6));
        let snap = snapshot(&pop_of(
            [3, 5, 5, 3, 9].iter().map(|&e| AgentState { estimate: e, ..Default::default() }).collect(),
        ));
        assert_eq!((snap.estimate_min, snap.estimate_max), (3, 9));
        assert_eq!((snap.estimate_mode, snap.estimate_mode_count), (3, 2));
        // Sparse path.
        let snap = snapshot(&pop_of(
            [7, 1_000_000, 1_000_000].iter().map(|&e| AgentState { estimate: e, ..Default::default() }).collect(),
        ));
        assert_eq!((snap.estimate_mode, snap.estimate_mode_count), (1_000_000, 2));
    }

    #[test]
    fn fresh_population_counts() {
        let snap = snapshot(&pop_of(vec![AgentState::default(); 9]));
        assert_eq!(snap.phase_counts, [9, 0, 0]);
        assert_eq!(snap.group_histogram.count(1), 9);
        assert_eq!(snap.group_histogram.total(), 9);
        assert_eq!(snap.max_stored_integer, 1);
    }

    #[test]
    fn histogram_overflow() {
        let snap = snapshot(&with_groups(&[1, 64, 65, 400]));
        assert_eq!(snap.group_histogram.count(64), 1);
        assert_eq!(snap.group_histogram.overflow, 2);
        assert_eq!(snap.group_histogram.total(), 4);
        assert_eq!(snap.max_stored_integer, 400);
    }

    #[test]
    fn band_membership() {
        let band = CorrectnessBand::multipliers(0.75, 2.25).unwrap();
        assert!(in_band(&snap_with(1024, &[10]), &band));
        assert!(!in_band(&snap_with(1024, &[30, 10]), &band));
        assert!(in_band(&snap_with(400_000, &[20]), &band));
        assert!(CorrectnessBand::multipliers(2.0, 1.0).is_err());
        assert!(CorrectnessBand::delta(1.5).is_err());
        let (lo, hi) = CorrectnessBand::delta(0.5).unwrap().bounds(1024);
        assert_eq!((lo, hi), (5.0, 15.0));
        let (lo, hi) = CorrectnessBand::CountingWindow.bounds(10_000);
        assert!((lo - 10.08).abs() < 0.01 && (hi - 26.58).abs() < 0.01, "{lo} {hi}");
    }

    fn timed(stream: &[(f64, u32)]) -> Vec<Snapshot> {
        stream
            .iter()
            .map(|&(t, e)| Snapshot { time: t, ..snap_with(1024, &[e]) })
            .collect()
    }

    #[test]
    fn convergence_examples() {
        let band = CorrectnessBand::multipliers(0.75, 2.25).unwrap();
        let snaps = timed(&[(0.0, 10), (1.0, 10)]);
        assert_eq!(convergence_time(&snaps, &band, 0.0), Some(0.0));
        let snaps = timed(&[(0.0, 40), (1.0, 40)]);
        assert_eq!(convergence_time(&snaps, &band, 0.0), None);
        let snaps = timed(&[(0.0, 10), (1.0, 40), (2.0, 40), (3.0, 11)]);
        assert_eq!(convergence_time(&snaps, &band, 1.0), Some(2.0));

        // Disagreement blocks convergence even inside the band.
        let mut split = snap_with(1024, &[10, 11]);
        split.time = 0.0;
        assert!(in_band(&split, &band));
        assert_eq!(convergence_time(&[split], &band, 0.0), None);
    }

    #[test]
    fn holding_examples() {
        let band = CorrectnessBand::multipliers(0.75, 2.25).unwrap();
        let snaps = timed(&[(0.0, 10), (1.0, 10), (2.0, 10)]);
        assert_eq!(holding_time(&snaps, &band, 0.0), Holding { duration: 2.0, censored: true });
        let snaps = timed(&[(0.0, 10), (0.5, 40), (1.0, 10)]);
        assert_eq!(holding_time(&snaps, &band, 0.0), Holding { duration: 0.5, censored: false });
    }
}
