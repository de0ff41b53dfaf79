//! Stochastic estimate of the triplet yield.
//!
//! Each molecule survives a step with probability `exp(−Δ)`, where `Δ` is
//! that step's integrated hazard, and on reacting picks the triplet channel
//! with probability `Δ_T/Δ`. Walking the steps is equivalent to drawing one
//! exponential variate `E` and locating the first step whose cumulative
//! hazard exceeds it, which is what is done here.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{PropagationConfig, TrajectoryRecord, propagate};
use crate::error::{Error, Result};
use crate::params::{FieldMode, SystemParams};

pub const MIN_MOLECULES: usize = 1000;
pub const RNG_DESCRIPTION: &str = "ChaCha8, seeded once, stream = molecule index";

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    /// Percent.
    pub y_t_hat: f64,
    /// Percent.
    pub y_s_hat: f64,
    /// Percent of molecules still unreacted at the end of the record.
    pub unreacted: f64,
    /// Binomial standard error of `y_t_hat`, percent.
    pub stderr: f64,
    pub n_molecules: usize,
    pub n_triplet: usize,
    pub n_singlet: usize,
    pub seed: u64,
    pub rng: &'static str,
}

enum Fate {
    Singlet,
    Triplet,
    Unreacted,
}

fn molecule(seed: u64, index: u64, hs: &[f64], ht: &[f64]) -> Fate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    // 1 − U lies in (0, 1], so E is finite
    let u: f64 = rng.random();
    let e = -(1.0 - u).ln();
    let total = |i: usize| hs[i] + ht[i];
    let n = hs.len();
    if n < 2 || total(n - 1) < e {
        return Fate::Unreacted;
    }
    // first sample index whose cumulative hazard reaches E
    let (mut lo, mut hi) = (1, n - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if total(mid) < e { lo = mid + 1 } else { hi = mid }
    }
    let step = lo;
    let d_s = hs[step] - hs[step - 1];
    let d_t = ht[step] - ht[step - 1];
    let v: f64 = rng.random();
    if v * (d_s + d_t) < d_t { Fate::Triplet } else { Fate::Singlet }
}

/// Monte Carlo triplet yield from the step hazards of an undecimated record.
pub fn sample_yield_from_record(record: &TrajectoryRecord, n_molecules: usize, seed: u64) -> Result<McEstimate> {
    if n_molecules < MIN_MOLECULES {
        return Err(Error::param("n_molecules", "must be at least 1000"));
    }
    if record.stride != 1 {
        return Err(Error::param("record", "must store every integration step"));
    }
    let (hs, ht) = (&record.hazard_s, &record.hazard_t);
    let (n_s, n_t, n_u) = (0..n_molecules as u64)
        .into_par_iter()
        .map(|i| match molecule(seed, i, hs, ht) {
            Fate::Singlet => (1usize, 0usize, 0usize),
            Fate::Triplet => (0, 1, 0),
            Fate::Unreacted => (0, 0, 1),
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let n = n_molecules as f64;
    let p = n_t as f64 / n;
    Ok(McEstimate {
        y_t_hat: 100.0 * p,
        y_s_hat: 100.0 * n_s as f64 / n,
        unreacted: 100.0 * n_u as f64 / n,
        stderr: 100.0 * (p * (1.0 - p) / n).sqrt(),
        n_molecules,
        n_triplet: n_t,
        n_singlet: n_s,
        seed,
        rng: RNG_DESCRIPTION,
    })
}

/// Propagates without decimation and samples `n_molecules` fates.
pub fn sample_yield(
    params: &SystemParams,
    mode: FieldMode,
    n_molecules: usize,
    seed: u64,
    config: &PropagationConfig,
) -> Result<McEstimate> {
    if n_molecules < MIN_MOLECULES {
        return Err(Error::param("n_molecules", "must be at least 1000"));
    }
    let record = propagate(params, mode, &config.clone().undecimated())?;
    sample_yield_from_record(&record, n_molecules, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Regime;
    use crate::yields::triplet_yield;

    fn record(p: &SystemParams) -> TrajectoryRecord {
        propagate(p, FieldMode::Magnetic, &PropagationConfig::default().undecimated()).unwrap()
    }

    #[test]
    fn same_seed_same_estimate() {
        let rec = record(&SystemParams::default().with_regime(Regime::Traditional));
        let a = sample_yield_from_record(&rec, 5000, 7).unwrap();
        let b = sample_yield_from_record(&rec, 5000, 7).unwrap();
        let c = sample_yield_from_record(&rec, 5000, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.n_triplet, c.n_triplet);
    }

    #[test]
    fn estimate_is_a_prefix_sum() {
        // the first n molecules have the same fates regardless of the total
        let rec = record(&SystemParams::default().with_regime(Regime::Traditional));
        let small = sample_yield_from_record(&rec, 2000, 3).unwrap();
        let fates: usize = (0..2000u64)
            .filter(|&i| matches!(molecule(3, i, &rec.hazard_s, &rec.hazard_t), Fate::Triplet))
            .count();
        assert_eq!(small.n_triplet, fates);
    }

    #[test]
    fn no_singlet_channel() {
        let rec = record(&SystemParams::new(0.5, 5.0, 0.0, 0.0, 1.4));
        let est = sample_yield_from_record(&rec, 4000, 1).unwrap();
        assert_eq!(est.n_singlet, 0);
        assert!(est.y_t_hat >= 99.0);
    }

    #[test]
    fn agrees_with_deterministic_yield() {
        let rec = record(&SystemParams::default().with_j(5.0));
        let det = triplet_yield(&rec).y_t;
        let est = sample_yield_from_record(&rec, 20_000, 11).unwrap();
        assert!((est.y_t_hat - det).abs() < 4.0 * est.stderr, "{} vs {det} ± {}", est.y_t_hat, est.stderr);
        assert!((est.y_t_hat + est.y_s_hat + est.unreacted - 100.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_small_samples_and_decimated_records() {
        let p = SystemParams::default();
        assert!(sample_yield(&p, FieldMode::Magnetic, 999, 0, &PropagationConfig::default()).is_err());
        let cfg = PropagationConfig { max_samples: 100, ..Default::default() };
        let rec = propagate(&p, FieldMode::Magnetic, &cfg).unwrap();
        assert!(rec.stride > 1);
        assert!(sample_yield_from_record(&rec, 1000, 0).is_err());
    }
}
