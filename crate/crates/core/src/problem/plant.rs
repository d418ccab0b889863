//! Linear output map with exogenous inputs, model mismatch and measurement noise.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::schedule::Schedule;
use crate::util::{clamp_norm, domain, spectral_norm, stream_rng};

/// Time-indexed exogenous input `w(k)`.
pub trait ExogenousSignal: Send + Sync {
    fn dim(&self) -> usize;
    fn at(&self, k: usize) -> DVector<f64>;
}

/// `w(k) = w` for all `k`.
#[derive(Debug, Clone)]
pub struct ConstantSignal(pub DVector<f64>);

impl ExogenousSignal for ConstantSignal {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn at(&self, _k: usize) -> DVector<f64> {
        self.0.clone()
    }
}

/// One schedule per coordinate.
#[derive(Debug, Clone)]
pub struct ScheduledSignal(pub Vec<Schedule>);

impl ExogenousSignal for ScheduledSignal {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn at(&self, k: usize) -> DVector<f64> {
        DVector::from_iterator(self.0.len(), self.0.iter().map(|s| s.eval(k)))
    }
}

/// I.i.d. Gaussian coordinates with per-coordinate mean and a common variance.
#[derive(Debug, Clone)]
pub struct GaussianSignal {
    pub mean: DVector<f64>,
    pub variance: f64,
    pub seed: u64,
}

impl ExogenousSignal for GaussianSignal {
    fn dim(&self) -> usize {
        self.mean.len()
    }
    fn at(&self, k: usize) -> DVector<f64> {
        let mut rng = stream_rng(self.seed, domain::EXOGENOUS, k as u64);
        let normal = Normal::new(0.0, self.variance.sqrt()).expect("variance is finite");
        self.mean.map(|m| m + normal.sample(&mut rng))
    }
}

/// Additive measurement noise: i.i.d. Gaussian coordinates, then the whole
/// vector is clipped to norm `cap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub std_dev: f64,
    pub cap: f64,
}

impl NoiseModel {
    pub const OFF: NoiseModel = NoiseModel {
        std_dev: 0.0,
        cap: 0.0,
    };

    pub fn new(std_dev: f64, cap: f64) -> Result<Self> {
        if !(std_dev >= 0.0 && std_dev.is_finite() && cap >= 0.0 && cap.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise needs finite std_dev >= 0 and cap >= 0 (got {std_dev}, {cap})"
            )));
        }
        Ok(Self { std_dev, cap })
    }

    pub fn is_off(&self) -> bool {
        self.std_dev == 0.0 || self.cap == 0.0
    }

    /// Unclipped draw for step `k`.
    pub fn raw_draw(&self, seed: u64, k: usize, m: usize) -> DVector<f64> {
        if self.std_dev == 0.0 {
            return DVector::zeros(m);
        }
        let mut rng = stream_rng(seed, domain::NOISE, k as u64);
        let normal = Normal::new(0.0, self.std_dev).expect("std_dev is finite");
        DVector::from_fn(m, |_, _| normal.sample(&mut rng))
    }

    pub fn draw(&self, seed: u64, k: usize, m: usize) -> DVector<f64> {
        if self.is_off() {
            return DVector::zeros(m);
        }
        let mut v = self.raw_draw(seed, k, m);
        clamp_norm(&mut v, self.cap);
        v
    }
}

/// Perturbation of the output map seen only by the measurement path.
#[derive(Debug, Clone)]
pub struct Mismatch {
    pub dc: DMatrix<f64>,
    pub dd: DMatrix<f64>,
    dc_norm: f64,
    dd_norm: f64,
}

impl Mismatch {
    pub fn new(dc: DMatrix<f64>, dd: DMatrix<f64>) -> Self {
        let dc_norm = spectral_norm(&dc, 1e-12);
        let dd_norm = spectral_norm(&dd, 1e-12);
        Self {
            dc,
            dd,
            dc_norm,
            dd_norm,
        }
    }

    pub fn norms(&self) -> (f64, f64) {
        (self.dc_norm, self.dd_norm)
    }
}

/// One measurement: the measured output and the model output it approximates.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub y_hat: DVector<f64>,
    pub y_model: DVector<f64>,
    pub w: DVector<f64>,
}

impl Measurement {
    pub fn error(&self) -> f64 {
        (&self.y_hat - &self.y_model).norm()
    }
}

/// `y = C x + D w(k)`, observed as `(C + dC) x + (D + dD) w(k) + noise(k)`.
///
/// All randomness is keyed on `(seed, k)`, so the plant is immutable and every
/// query is a pure function of its arguments.
#[derive(Clone)]
pub struct LinearPlant {
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    exogenous: Arc<dyn ExogenousSignal>,
    mismatch: Option<Mismatch>,
    noise: NoiseModel,
    seed: u64,
    c_norm: f64,
}

impl fmt::Debug for LinearPlant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearPlant")
            .field("m", &self.c.nrows())
            .field("n", &self.c.ncols())
            .field("w_dim", &self.d.ncols())
            .field("mismatch", &self.mismatch.is_some())
            .field("noise", &self.noise)
            .field("seed", &self.seed)
            .finish()
    }
}

impl LinearPlant {
    pub fn new(
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        exogenous: Arc<dyn ExogenousSignal>,
        seed: u64,
    ) -> Result<Self> {
        check_dim("D rows", c.nrows(), d.nrows())?;
        check_dim("w_traj", d.ncols(), exogenous.dim())?;
        let c_norm = spectral_norm(&c, 1e-10);
        Ok(Self {
            c,
            d,
            exogenous,
            mismatch: None,
            noise: NoiseModel::OFF,
            seed,
            c_norm,
        })
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_mismatch(mut self, mismatch: Mismatch) -> Result<Self> {
        check_dim("mismatch dC rows", self.c.nrows(), mismatch.dc.nrows())?;
        check_dim("mismatch dC cols", self.c.ncols(), mismatch.dc.ncols())?;
        check_dim("mismatch dD rows", self.d.nrows(), mismatch.dd.nrows())?;
        check_dim("mismatch dD cols", self.d.ncols(), mismatch.dd.ncols())?;
        self.mismatch = Some(mismatch);
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Same plant with noise and mismatch removed.
    pub fn model_only(&self) -> Self {
        let mut p = self.clone();
        p.noise = NoiseModel::OFF;
        p.mismatch = None;
        p
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }
    pub fn n(&self) -> usize {
        self.c.ncols()
    }
    pub fn m(&self) -> usize {
        self.c.nrows()
    }
    pub fn w_dim(&self) -> usize {
        self.d.ncols()
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn noise(&self) -> NoiseModel {
        self.noise
    }
    pub fn mismatch(&self) -> Option<&Mismatch> {
        self.mismatch.as_ref()
    }
    /// `||C||_2`.
    pub fn c_norm(&self) -> f64 {
        self.c_norm
    }

    pub fn exogenous(&self, k: usize) -> DVector<f64> {
        self.exogenous.at(k)
    }

    pub fn model_output(&self, x: &DVector<f64>, k: usize) -> Result<DVector<f64>> {
        check_dim("x", self.n(), x.len())?;
        Ok(self.output_with(x, &self.exogenous.at(k)))
    }

    pub(crate) fn output_with(&self, x: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        &self.c * x + &self.d * w
    }

    /// Draw the measurement for iterate `x` at step `k`.
    pub fn measure(&self, x: &DVector<f64>, k: usize) -> Result<Measurement> {
        check_dim("x", self.n(), x.len())?;
        let w = self.exogenous.at(k);
        let y_model = self.output_with(x, &w);
        let mut y_hat = match &self.mismatch {
            None => y_model.clone(),
            Some(mm) => &y_model + &mm.dc * x + &mm.dd * &w,
        };
        if !self.noise.is_off() {
            y_hat += self.noise.draw(self.seed, k, self.m());
        }
        let meas = Measurement { y_hat, y_model, w };
        let cap = self.error_cap(x, &meas.w);
        let err = meas.error();
        if err > cap * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::Invariant(format!(
                "measurement error {err:.6e} exceeds its bound {cap:.6e} at step {k}"
            )));
        }
        Ok(meas)
    }

    /// `e_y_cap + ||dC|| ||x|| + ||dD|| ||w||`.
    pub fn error_cap(&self, x: &DVector<f64>, w: &DVector<f64>) -> f64 {
        let noise = if self.noise.is_off() { 0.0 } else { self.noise.cap };
        match &self.mismatch {
            None => noise,
            Some(mm) => noise + mm.dc_norm * x.norm() + mm.dd_norm * w.norm(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_plant() -> LinearPlant {
        LinearPlant::new(
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::from_row_slice(1, 1, &[1.0]),
            Arc::new(ConstantSignal(DVector::from_vec(vec![0.5]))),
            7,
        )
        .unwrap()
    }

    #[test]
    fn noiseless_measurement_is_the_model() {
        let plant = simple_plant();
        let m = plant.measure(&DVector::from_vec(vec![2.0, 3.0]), 0).unwrap();
        assert_eq!(m.y_model[0], 2.5);
        assert_eq!(m.y_hat, m.y_model);
    }

    #[test]
    fn zero_cap_means_no_noise() {
        let plant = simple_plant().with_noise(NoiseModel::new(1.0, 0.0).unwrap());
        for k in 0..20 {
            let m = plant.measure(&DVector::from_vec(vec![0.3, -1.0]), k).unwrap();
            assert_eq!(m.y_hat, m.y_model);
        }
    }

    #[test]
    fn measure_is_pure_in_x_and_k() {
        let plant = simple_plant().with_noise(NoiseModel::new(0.1, 1.0).unwrap());
        let x = DVector::from_vec(vec![0.3, -1.0]);
        let a = plant.measure(&x, 11).unwrap();
        let b = plant.measure(&x, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.y_hat, plant.measure(&x, 12).unwrap().y_hat);
    }

    #[test]
    fn noise_variance_before_clipping() {
        let noise = NoiseModel::new(0.1, 10.0).unwrap();
        let m = 3;
        let draws = 100_000;
        let mut sum = DVector::<f64>::zeros(m);
        let mut sq = DVector::<f64>::zeros(m);
        for k in 0..draws {
            let v = noise.raw_draw(42, k, m);
            sum += &v;
            sq += v.component_mul(&v);
        }
        for i in 0..m {
            let mean = sum[i] / draws as f64;
            let var = sq[i] / draws as f64 - mean * mean;
            assert!((0.009..=0.011).contains(&var), "coordinate {i}: {var}");
        }
    }

    #[test]
    fn mismatch_error_stays_within_bound() {
        let dc = DMatrix::from_row_slice(1, 2, &[0.05, -0.02]);
        let dd = DMatrix::from_row_slice(1, 1, &[0.1]);
        let plant = simple_plant()
            .with_noise(NoiseModel::new(0.2, 0.05).unwrap())
            .with_mismatch(Mismatch::new(dc, dd))
            .unwrap();
        for k in 0..200 {
            let x = DVector::from_vec(vec![k as f64 * 0.01, -1.0]);
            let m = plant.measure(&x, k).unwrap();
            assert!(m.error() <= plant.error_cap(&x, &m.w) + 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let plant = simple_plant();
        let err = plant.measure(&DVector::from_vec(vec![1.0]), 0).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { field: "x", .. }));
    }
}
