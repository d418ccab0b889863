//! Small numerical helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Domain tags keep the per-purpose random streams of one seed independent.
pub mod domain {
    pub const NOISE: u64 = 1;
    pub const EXOGENOUS: u64 = 2;
    pub const CHANNEL: u64 = 3;
    pub const SCHEDULE: u64 = 4;
    pub const SAMPLING: u64 = 5;
    pub const FIXTURE: u64 = 6;
}

/// Random stream that depends only on `(seed, domain, k)`.
///
/// Every time-indexed random quantity in the crate is drawn from one of these,
/// which makes plants and schedules pure functions of the step index.
pub fn stream_rng(seed: u64, domain: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain.wrapping_mul(GOLDEN));
    rng.set_stream(k);
    rng
}

/// Largest singular value by power iteration on `AᵀA`, to relative accuracy `tol`.
pub fn spectral_norm(a: &DMatrix<f64>, tol: f64) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    let frob = a.norm();
    if frob == 0.0 {
        return 0.0;
    }
    let ata = a.transpose() * a;
    // deterministic start with no exact zero components
    let mut v = DVector::from_fn(a.ncols(), |i, _| 1.0 + 0.1 * ((i * 7919) % 13) as f64);
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..100_000 {
        let w = &ata * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let next = nw.sqrt();
        v = w / nw;
        if (next - est).abs() <= tol * next {
            return next;
        }
        est = next;
    }
    // power iteration can stall on clustered spectra; fall back to an SVD
    a.clone().svd(false, false).singular_values.max()
}

pub fn clamp_norm(v: &mut DVector<f64>, cap: f64) {
    let n = v.norm();
    if n > cap {
        if cap <= 0.0 {
            v.fill(0.0);
        } else {
            *v *= cap / n;
        }
    }
}
