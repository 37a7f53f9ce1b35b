//! Optimization loops: DAS (anisotropic window), DIS (isotropic window),
//! fixed-window Gaussian smoothing, and SPSA.
//!
//! Every loop draws step `k`'s randomness from `rng.child(k)` and sample `i`
//! within that step from `rng.child(k).child(i)`, so a run is a pure function
//! of its config and seed.

mod das;
mod dis;
mod fixed_window;
mod spsa;

pub use das::{das_direction, das_run, das_run_observed, das_step, DasConfig, DasDirection};
pub use dis::{dis_run, dis_step, DisConfig, IsoWindowState};
pub use fixed_window::{fixed_window_run, FixedWindowConfig};
pub use spsa::{spsa_run, SpsaConfig};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::Matrix;
use crate::objectives::Oracle;

/// Position and window shape of a running DAS instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowState {
    pub x: Vec<f64>,
    pub l: Matrix,
    pub step_index: u64,
    pub samples_used: u64,
}

impl WindowState {
    pub fn new(x: Vec<f64>, l: Matrix) -> Self {
        Self {
            x,
            l,
            step_index: 0,
            samples_used: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Advanced { batch: usize },
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u64,
    /// Cumulative oracle calls.
    pub n_s: u64,
    pub x: Vec<f64>,
    pub window_norm: f64,
    /// Noiseless fitness at `x`, NaN when the oracle has no ground truth.
    pub fitness: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTrace {
    pub records: Vec<TraceRecord>,
}

impl BenchmarkTrace {
    pub fn push(&mut self, record: TraceRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.n_s < record.n_s));
        self.records.push(record);
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Final `n_s`, zero for an empty trace.
    pub fn samples_used(&self) -> u64 {
        self.last().map_or(0, |r| r.n_s)
    }

    /// Last record with `n_s <= n`.
    pub fn at(&self, n: u64) -> Option<&TraceRecord> {
        let idx = self.records.partition_point(|r| r.n_s <= n);
        idx.checked_sub(1).map(|i| &self.records[i])
    }

    /// Highest fitness seen along the trace.
    pub fn best_seen(&self) -> Option<&TraceRecord> {
        self.records
            .iter()
            .filter(|r| !r.fitness.is_nan())
            .max_by(|a, b| a.fitness.total_cmp(&b.fitness))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub x_final: Vec<f64>,
    pub trace: BenchmarkTrace,
    /// Final window shape (`w I` for isotropic methods).
    pub window: Matrix,
}

/// `max(1, round(b0 / tr(LLᵀ)^{κ/2}))`, rounded half up and capped at
/// `remaining`.
pub fn scheduled_batch(b0: usize, trace_llt: f64, kappa: f64, remaining: u64) -> usize {
    let cap = remaining.min(usize::MAX as u64) as usize;
    let raw = b0 as f64 / trace_llt.powf(kappa / 2.0);
    let rounded = if raw.is_finite() {
        (raw + 0.5).floor().max(1.0)
    } else {
        f64::INFINITY
    };
    if rounded >= cap as f64 {
        cap
    } else {
        rounded as usize
    }
}

pub(crate) fn record<O: Oracle + ?Sized>(
    obj: &O,
    step: u64,
    n_s: u64,
    x: &[f64],
    window_norm: f64,
) -> TraceRecord {
    TraceRecord {
        step,
        n_s,
        x: x.to_vec(),
        window_norm,
        fitness: obj.true_value(x).unwrap_or(f64::NAN),
    }
}

pub(crate) fn check_start<O: Oracle + ?Sized>(obj: &O, x0: &[f64], budget: u64) -> Result<()> {
    if x0.len() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "x0" });
    }
    if budget == 0 {
        return Err(invalid("budget", "budget must be >= 1"));
    }
    Ok(())
}

pub(crate) fn check_finite(v: &[f64], context: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { context })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_schedule() {
        assert_eq!(scheduled_batch(100, 4.0, 1.0, 1_000), 50);
        assert_eq!(scheduled_batch(100, 4.0, 0.0, 1_000), 100);
        assert_eq!(scheduled_batch(100, 4.0, 1.0, 30), 30);
        assert_eq!(scheduled_batch(1, 1e6, 1.0, 30), 1);
        // 10 / 4 = 2.5 rounds half up.
        assert_eq!(scheduled_batch(10, 16.0, 0.5, 100), 5);
        assert_eq!(scheduled_batch(5, 4.0, 1.0, 100), 3);
        assert_eq!(scheduled_batch(10, 0.0, 1.0, 77), 77);
    }

    #[test]
    fn trace_lookup() {
        let mut t = BenchmarkTrace::default();
        for (i, n) in [10u64, 20, 35].into_iter().enumerate() {
            t.push(TraceRecord {
                step: i as u64,
                n_s: n,
                x: vec![],
                window_norm: 1.0,
                fitness: i as f64,
            });
        }
        assert!(t.at(5).is_none());
        assert_eq!(t.at(20).unwrap().n_s, 20);
        assert_eq!(t.at(34).unwrap().n_s, 20);
        assert_eq!(t.at(1000).unwrap().n_s, 35);
        assert_eq!(t.best_seen().unwrap().step, 2);
    }
}
