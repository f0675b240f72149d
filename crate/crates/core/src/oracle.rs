//! Reference implementations used to check the simulator.
//!
//! Nothing in here calls into the agent, protocol or scheduler code: the
//! geometric sampler, pair selection and signal decay are written again from
//! scratch so that agreement with the simulator means something.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};

/// `n` i.i.d. draws with `Pr[G = j] = 2^-j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeomSampleSet {
    pub values: Vec<u32>,
}

impl GeomSampleSet {
    pub fn draw<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        // rand_distr counts failures before the first success.
        let dist = Geometric::new(0.5).expect("p = 0.5 is valid");
        let values = (0..n)
            .map(|_| u32::try_from(dist.sample(rng)).unwrap_or(u32::MAX - 1) + 1)
            .collect();
        GeomSampleSet { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    pub fn first_missing_value(&self) -> u32 {
        first_missing_value(&self.values)
    }
}

/// Smallest positive integer absent from `values`, by sorting and scanning.
pub fn first_missing_value(values: &[u32]) -> u32 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut expected = 1u32;
    for v in sorted {
        if v == expected {
            expected += 1;
        } else if v > expected {
            break;
        }
    }
    expected
}

/// Same answer as [`first_missing_value`], via a hash set.
pub fn first_missing_value_hashed(values: &[u32]) -> u32 {
    let seen: HashSet<u32> = values.iter().copied().collect();
    (1..).find(|k| !seen.contains(k)).expect("some value is missing")
}

/// Nearest-rank quantile of ascending `sorted` data.
pub fn quantile(sorted: &[f64], level: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&level) {
        return None;
    }
    let rank = (level * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

fn require(name: &'static str, ok: bool, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::parameter(name, reason))
    }
}

/// `[log₂ n − log₂ ln n, 2·log₂ n]`.
pub fn max_geometric_range(n: usize) -> (f64, f64) {
    let nf = n as f64;
    (nf.log2() - nf.ln().log2(), 2.0 * nf.log2())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxGeometricStats {
    pub n: usize,
    pub low: f64,
    pub high: f64,
    pub maxima: Vec<u32>,
    pub in_range_fraction: f64,
}

/// Fraction of trials whose maximum of `n` geometric variables lands in
/// [`max_geometric_range`].
pub fn max_geometric_stats<R: Rng + ?Sized>(n: usize, trials: usize, rng: &mut R) -> Result<MaxGeometricStats> {
    require("n", n >= 16, "must be at least 16")?;
    require("trials", trials >= 1, "must be at least 1")?;
    let (low, high) = max_geometric_range(n);
    let maxima: Vec<u32> = (0..trials).map(|_| GeomSampleSet::draw(n, rng).max()).collect();
    let hits = maxima
        .iter()
        .filter(|&&m| f64::from(m) >= low && f64::from(m) <= high)
        .count();
    Ok(MaxGeometricStats { n, low, high, in_range_fraction: hits as f64 / trials as f64, maxima })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FmvDistribution {
    pub n: usize,
    /// Ascending.
    pub observations: Vec<u32>,
}

impl FmvDistribution {
    pub fn quantile(&self, level: f64) -> Option<u32> {
        let as_f64: Vec<f64> = self.observations.iter().map(|&v| f64::from(v)).collect();
        quantile(&as_f64, level).map(|v| v as u32)
    }

    /// Fraction of observations strictly inside `(low, high)`.
    pub fn fraction_within(&self, low: f64, high: f64) -> f64 {
        let hits = self
            .observations
            .iter()
            .filter(|&&v| f64::from(v) > low && f64::from(v) < high)
            .count();
        hits as f64 / self.observations.len() as f64
    }
}

/// First missing value of `n` i.i.d. geometric draws, over `trials` draws.
pub fn fmv_distribution<R: Rng + ?Sized>(n: usize, trials: usize, rng: &mut R) -> Result<FmvDistribution> {
    require("n", n >= 1, "must be at least 1")?;
    require("trials", trials >= 1, "must be at least 1")?;
    let mut observations: Vec<u32> = (0..trials)
        .map(|_| GeomSampleSet::draw(n, rng).first_missing_value())
        .collect();
    observations.sort_unstable();
    Ok(FmvDistribution { n, observations })
}

/// Uniform pair of distinct indices by rejection.
fn distinct_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    loop {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            return (a, b);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicStats {
    pub n: usize,
    /// Parallel completion times, ascending.
    pub times: Vec<f64>,
    /// `3·ln n`.
    pub bound: f64,
}

impl EpidemicStats {
    pub fn fraction_within_bound(&self) -> f64 {
        self.times.iter().filter(|&&t| t <= self.bound).count() as f64 / self.times.len() as f64
    }

    pub fn quantile(&self, level: f64) -> Option<f64> {
        quantile(&self.times, level)
    }
}

/// Parallel time for a one-to-all max epidemic: a single agent holds the
/// maximum and every interaction sets both agents to the larger value.
pub fn epidemic_time<R: Rng + ?Sized>(n: usize, rng: &mut R) -> f64 {
    let mut informed = vec![false; n];
    informed[0] = true;
    let mut count = 1usize;
    let mut interactions = 0u64;
    while count < n {
        let (a, b) = distinct_pair(n, rng);
        interactions += 1;
        if informed[a] != informed[b] {
            informed[a] = true;
            informed[b] = true;
            count += 1;
        }
    }
    interactions as f64 / n as f64
}

pub fn epidemic_time_reference<R: Rng + ?Sized>(n: usize, trials: usize, rng: &mut R) -> Result<EpidemicStats> {
    require("n", n >= 2, "must be at least 2")?;
    require("trials", trials >= 1, "must be at least 1")?;
    let mut times: Vec<f64> = (0..trials).map(|_| epidemic_time(n, rng)).collect();
    times.sort_by(f64::total_cmp);
    Ok(EpidemicStats { n, times, bound: 3.0 * (n as f64).ln() })
}

/// `3·ln(n^α · 3^(3q+1))`.
pub fn fade_bound(n: usize, q: u32, alpha: f64) -> f64 {
    3.0 * (alpha * (n as f64).ln() + f64::from(3 * q + 1) * 3f64.ln())
}

/// Parallel time until every value is 0 under decay-only propagation
/// (`a, b → max(a, b) − 1` floored at 0) with no boosting.
pub fn fade_time_from<R: Rng + ?Sized>(mut values: Vec<u32>, rng: &mut R) -> f64 {
    let n = values.len();
    let mut live = values.iter().filter(|&&v| v > 0).count();
    let mut interactions = 0u64;
    while live > 0 {
        let (a, b) = distinct_pair(n, rng);
        interactions += 1;
        let before = usize::from(values[a] > 0) + usize::from(values[b] > 0);
        let m = values[a].max(values[b]).saturating_sub(1);
        values[a] = m;
        values[b] = m;
        let after = 2 * usize::from(m > 0);
        live = live + after - before;
    }
    interactions as f64 / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct FadeRun {
    pub n: usize,
    pub q: u32,
    pub time: f64,
    pub bound: f64,
}

/// Every agent starts with the absent index `q` at its ceiling `3q + 1`.
pub fn detection_fade_reference<R: Rng + ?Sized>(n: usize, q: u32, alpha: f64, rng: &mut R) -> Result<FadeRun> {
    require("n", n >= 2, "must be at least 2")?;
    require("q", q >= 1, "must be at least 1")?;
    require("alpha", alpha > 0.0 && alpha.is_finite(), "must be positive")?;
    let time = fade_time_from(vec![3 * q + 1; n], rng);
    Ok(FadeRun { n, q, time, bound: fade_bound(n, q, alpha) })
}
