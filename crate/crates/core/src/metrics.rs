//! Empirical performance series: dynamic regret, average constraint violation
//! and tracking error.
//!
//! Series are indexed so that entry `k - 1` holds the value after `k` records;
//! record 0 is the initial iterate.

use nalgebra::DVector;

use crate::engine::Trajectory;
use crate::error::{Error, Result};
use crate::oracle::OracleTrajectory;
use crate::problem::{LinearPlant, TimeVaryingProblem};

fn running_mean(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut sum = 0.0;
    values
        .enumerate()
        .map(|(i, v)| {
            sum += v;
            sum / (i + 1) as f64
        })
        .collect()
}

/// `R(k) = (1/k) sum_{j<k} (h_j - h*_j)` for `k = 1..=len`.
pub fn dynamic_regret(h: &[f64], h_star: &[f64]) -> Result<Vec<f64>> {
    if h.len() != h_star.len() {
        return Err(Error::LengthMismatch {
            what: "iterate and oracle cost series",
            left: h.len(),
            right: h_star.len(),
        });
    }
    Ok(running_mean(h.iter().zip(h_star).map(|(a, b)| a - b)))
}

/// Componentwise running mean of constraint values, without clipping.
pub fn raw_avg_constraint_violation(g: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let Some(first) = g.first() else {
        return Vec::new();
    };
    let mut sum = DVector::zeros(first.len());
    g.iter()
        .enumerate()
        .map(|(i, v)| {
            sum += v;
            &sum / (i + 1) as f64
        })
        .collect()
}

/// `max(0, (1/k) sum_{j<k} g_j)` componentwise.
pub fn avg_constraint_violation(g: &[DVector<f64>]) -> Vec<DVector<f64>> {
    raw_avg_constraint_violation(g)
        .into_iter()
        .map(|v| v.map(|x| x.max(0.0)))
        .collect()
}

/// `S(k) = ||z(k) - z*(k)||` over the steps covered by both inputs.
pub fn tracking_error(traj: &Trajectory, oracle: &OracleTrajectory) -> Result<Vec<f64>> {
    covered(traj, oracle)?
        .map(|r| Ok((r.z() - oracle.z_star(r.k)).norm()))
        .collect()
}

/// `||x*(k) - x(k)|| / ||x*(k)||` over the covered steps.
pub fn normalized_tracking_error(traj: &Trajectory, oracle: &OracleTrajectory) -> Result<Vec<f64>> {
    covered(traj, oracle)?
        .map(|r| {
            let xs = &oracle.x_star[r.k - oracle.start];
            Ok((xs - &r.x).norm() / xs.norm().max(f64::MIN_POSITIVE))
        })
        .collect()
}

fn covered<'a>(
    traj: &'a Trajectory,
    oracle: &'a OracleTrajectory,
) -> Result<impl Iterator<Item = &'a crate::engine::StepRecord>> {
    if oracle.is_empty() || traj.is_empty() || oracle.start >= traj.len() {
        return Err(Error::LengthMismatch {
            what: "trajectory and oracle window",
            left: traj.len(),
            right: oracle.len(),
        });
    }
    Ok(traj.records.iter().filter(|r| oracle.covers(r.k)))
}

/// Running sums of a path-length series: entry `k - 1` is `sum_{j<k} s_j`.
pub fn path_sums(s: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    s.iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

/// Outcome of [`spike_then_decay`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeReport {
    /// Step of the largest error within the spike window.
    pub peak_step: usize,
    pub peak: f64,
    /// Mean error over the steps before the change.
    pub baseline: f64,
    /// Least-squares slope of the smoothed series after the peak.
    pub decay_slope: f64,
    /// Whether the peak is a local maximum of the raw series.
    pub local_max: bool,
    /// First and last value of the smoothed series after the peak.
    pub smoothed_start: f64,
    pub smoothed_end: f64,
}

impl ShapeReport {
    /// Spike at least `ratio` times the baseline, then a falling trend.
    pub fn holds(&self, ratio: f64) -> bool {
        self.local_max
            && self.peak >= ratio * self.baseline
            && self.decay_slope < 0.0
            && self.smoothed_end < self.smoothed_start
    }
}

/// Locate the error peak in `change ..= change + window` of `series` (whose
/// first entry belongs to step `start`) and fit the trend of a centered
/// moving average of width `smooth` over the following `decay` steps.
pub fn spike_then_decay(
    series: &[f64],
    start: usize,
    change: usize,
    window: usize,
    decay: usize,
    smooth: usize,
) -> Result<ShapeReport> {
    let end = start + series.len();
    if change <= start || change + window + decay + smooth >= end || smooth == 0 {
        return Err(Error::InvalidConfig(format!(
            "series over steps {start}..{end} is too short for a change at {change}"
        )));
    }
    let at = |k: usize| series[k - start];
    let peak_step = (change..=change + window)
        .max_by(|a, b| at(*a).total_cmp(&at(*b)))
        .expect("nonempty window");
    let peak = at(peak_step);
    let local_max = at(peak_step - 1) <= peak && at(peak_step + 1) <= peak;
    let baseline = (start..change).map(at).sum::<f64>() / (change - start) as f64;
    let half = smooth / 2;
    let smoothed: Vec<f64> = (peak_step..=peak_step + decay)
        .map(|k| {
            let lo = k.saturating_sub(half).max(start);
            let hi = (k + half).min(end - 1);
            (lo..=hi).map(at).sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    let n = smoothed.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = smoothed.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in smoothed.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    Ok(ShapeReport {
        peak_step,
        peak,
        baseline,
        decay_slope: sxy / sxx,
        local_max,
        smoothed_start: smoothed[0],
        smoothed_end: smoothed[smoothed.len() - 1],
    })
}

/// All empirical series of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsRecord {
    /// `R(k)`, `k = 1..`; empty without an oracle starting at step 0.
    pub regret: Vec<f64>,
    /// Clipped average violation, `k = 1..`.
    pub violation: Vec<DVector<f64>>,
    /// Unclipped average violation, `k = 1..`.
    pub violation_raw: Vec<DVector<f64>>,
    /// `S(k)` over the oracle window.
    pub tracking: Vec<f64>,
    /// `h^(k)(x*(k))` over the oracle window.
    pub h_star: Vec<f64>,
    /// Running sums of `sigma` and `sigma_bar`.
    pub sigma_cum: Vec<f64>,
    pub sigma_bar_cum: Vec<f64>,
}

impl MetricsRecord {
    /// Largest component of the clipped violation after `k` records.
    pub fn violation_max(&self, k: usize) -> f64 {
        self.violation
            .get(k - 1)
            .map_or(0.0, |v| v.iter().copied().fold(0.0, f64::max))
    }
}

/// Evaluate every metric available for `traj` and an optional reference.
pub fn compute_metrics(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    traj: &Trajectory,
    oracle: Option<&OracleTrajectory>,
) -> Result<MetricsRecord> {
    let g: Vec<_> = traj.records.iter().map(|r| r.g.clone()).collect();
    let mut out = MetricsRecord {
        violation: avg_constraint_violation(&g),
        violation_raw: raw_avg_constraint_violation(&g),
        ..Default::default()
    };
    if let Some(o) = oracle {
        let model = plant.model_only();
        out.h_star = o.h_star(problem, &model)?;
        out.tracking = tracking_error(traj, o)?;
        out.sigma_cum = path_sums(&o.sigma);
        out.sigma_bar_cum = path_sums(&o.sigma_bar);
        if o.start == 0 {
            let n = traj.len().min(o.len());
            out.regret = dynamic_regret(&traj.h_values()[..n], &out.h_star[..n])?;
        }
    }
    Ok(out)
}
