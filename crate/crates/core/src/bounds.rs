//! Problem constants and the theoretical regret, violation and tracking bounds.

use nalgebra::DVector;
use rand::Rng;

use crate::engine::{saddle_map_model, Trajectory};
use crate::error::{Error, Result};
use crate::problem::{sample_set, set_bounds, AlgorithmConfig, FeasibleSet, LinearPlant, TimeVaryingProblem};
use crate::util::{domain, spectral_norm, stream_rng};

/// Multiplicative safety margin applied to sampled suprema.
pub const SAMPLE_INFLATION: f64 = 1.1;
/// Accuracy of the power iteration for `||C||`.
pub const NORM_TOL: f64 = 1e-10;

/// Every scalar the bounds depend on.
///
/// `l_x`, `f_x`, `m_lambda`, `xi_lambda` and `l_phi` are evaluated for the
/// configuration passed to [`estimate_constants`]; the bound functions
/// recompute the step-size dependent ones for the step size they are given.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConstants {
    pub b: f64,
    pub d_diam: f64,
    pub f: f64,
    pub g_bound: f64,
    /// `||C|| M_g`.
    pub g_big: f64,
    pub m_g: f64,
    pub l: f64,
    pub l0: f64,
    pub l_gg: f64,
    /// `sqrt(sum_j L_gj^2)` over the nonlinear constraints.
    pub l_g: f64,
    pub l_gj_max: f64,
    pub m_lambda: f64,
    pub xi_lambda: f64,
    pub l_x: f64,
    pub f_x: f64,
    pub eta_phi: f64,
    pub l_phi: f64,
    pub c_norm: f64,
    /// Number of constraints and of nonlinear constraints.
    pub m_total: usize,
    pub m_nonlinear: usize,
    pub p: f64,
    pub d: f64,
    /// Fixed dual radius, if the configuration overrides `alpha^-kappa`.
    pub radius_override: Option<f64>,
}

impl ProblemConstants {
    /// Dual radius in force for step size `alpha` and exponent `kappa`.
    pub fn radius(&self, alpha: f64, kappa: f64) -> f64 {
        self.radius_override.unwrap_or_else(|| alpha.powf(-kappa))
    }

    pub fn l_x_at(&self, alpha: f64, kappa: f64) -> f64 {
        self.c_norm * (self.l0 + self.l_gg * self.radius(alpha, kappa))
    }

    pub fn f_x_at(&self, alpha: f64, kappa: f64) -> f64 {
        self.f + self.g_big * self.radius(alpha, kappa)
    }

    /// Lipschitz constant of the saddle map for dual radius `xi`.
    pub fn l_phi_at(&self, xi: f64) -> f64 {
        let c2 = self.c_norm * self.c_norm;
        let a = self.l + self.l0 * c2 + self.p + self.g_big + xi * self.l_g * c2;
        let b = self.g_big + self.d;
        (a * a + b * b).sqrt()
    }

    /// Overwrite the sampled `F`, `g` and `M_g` and refresh what depends on them.
    pub fn with_sampled(mut self, f: f64, g_bound: f64, m_g: f64, alpha: f64, kappa: f64) -> Self {
        self.f = f;
        self.g_bound = g_bound;
        self.m_g = m_g;
        self.refresh(alpha, kappa);
        self
    }

    fn refresh(&mut self, alpha: f64, kappa: f64) {
        let r = self.radius(alpha, kappa);
        self.g_big = self.c_norm * self.m_g;
        self.xi_lambda = r;
        self.m_lambda = r * (self.m_total as f64).sqrt();
        self.l_x = self.l_x_at(alpha, kappa);
        self.f_x = self.f_x_at(alpha, kappa);
        self.eta_phi = self.p.min(self.d);
        self.l_phi = self.l_phi_at(r);
    }
}

fn cap(estimate: f64, declared: Option<f64>) -> f64 {
    let inflated = estimate * SAMPLE_INFLATION;
    declared.map_or(inflated, |v| inflated.min(v))
}

fn sample_point(problem: &TimeVaryingProblem, k: usize, rng: &mut impl Rng) -> DVector<f64> {
    let parts: Vec<DVector<f64>> = problem.sets_at(k).iter().map(|s| sample_set(s, rng)).collect();
    let mut x = DVector::zeros(problem.n());
    let mut off = 0;
    for p in parts {
        x.rows_mut(off, p.len()).copy_from(&p);
        off += p.len();
    }
    x
}

fn corner_points(problem: &TimeVaryingProblem, k: usize) -> Result<Vec<DVector<f64>>> {
    let sets = problem.sets_at(k);
    let mut lo = Vec::with_capacity(problem.n());
    let mut hi = Vec::with_capacity(problem.n());
    for s in &sets {
        let (l, u) = s.bounding_box();
        lo.extend(l);
        hi.extend(u);
    }
    let lo = DVector::from_vec(lo);
    let hi = DVector::from_vec(hi);
    let mid = (&lo + &hi) / 2.0;
    [lo, hi, mid].iter().map(|v| problem.project(v, k)).collect()
}

/// Constants for `problem` under `config` over steps `0..=horizon`.
///
/// `B` and `D` come from the set geometry. `F`, `g` and `M_g` are maxima over
/// `samples` uniform draws spread evenly over the horizon plus projected box
/// corners, inflated by [`SAMPLE_INFLATION`] and capped by declared values.
/// `L`, `L0` and the `L_gj` must be declared; `L_G` defaults to their
/// root-sum-square.
pub fn estimate_constants(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    config: &AlgorithmConfig,
    horizon: usize,
    samples: usize,
) -> Result<ProblemConstants> {
    if samples == 0 {
        return Err(Error::InvalidConfig("samples must be at least 1".into()));
    }
    let decl = problem.declared();
    let l = decl
        .grad_lipschitz
        .ok_or(Error::MissingConstant("grad_lipschitz"))?;
    let l0 = match decl.output_grad_lipschitz {
        Some(v) => v,
        None if !problem.has_output_cost() => 0.0,
        None => return Err(Error::MissingConstant("output_grad_lipschitz")),
    };
    let nl = problem.num_nonlinear();
    let (l_gg, l_gj) = if nl == 0 {
        (decl.jacobian_lipschitz.unwrap_or(0.0), Vec::new())
    } else {
        if decl.constraint_grad_lipschitz.len() != nl {
            return Err(Error::MissingConstant("constraint_grad_lipschitz"));
        }
        let rss = decl
            .constraint_grad_lipschitz
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        (
            decl.jacobian_lipschitz.unwrap_or(rss),
            decl.constraint_grad_lipschitz.clone(),
        )
    };

    let model = plant.model_only();
    let (b, d_diam) = set_bounds(problem, horizon);
    let c_norm = spectral_norm(plant.c(), NORM_TOL);

    let mut f: f64 = 0.0;
    let mut g_bound: f64 = 0.0;
    let mut m_g: f64 = 0.0;
    let mut visit = |x: &DVector<f64>, k: usize| -> Result<()> {
        f = f.max(problem.grad_h(&model, x, k)?.norm());
        if problem.num_constraints() > 0 {
            let y = model.model_output(x, k)?;
            g_bound = g_bound.max(problem.g_values(&y, k).norm());
            m_g = m_g.max(spectral_norm(&problem.g_jacobian(&y, k), NORM_TOL));
        }
        Ok(())
    };
    let step_of = |i: usize, count: usize| {
        if count <= 1 {
            0
        } else {
            i * horizon / (count - 1)
        }
    };
    for i in 0..samples {
        let k = step_of(i, samples);
        let mut rng = stream_rng(model.seed(), domain::SAMPLING, i as u64);
        visit(&sample_point(problem, k, &mut rng), k)?;
    }
    let corner_steps = 16.min(horizon + 1);
    for i in 0..corner_steps {
        let k = step_of(i, corner_steps);
        for x in corner_points(problem, k)? {
            visit(&x, k)?;
        }
    }

    let mut out = ProblemConstants {
        b,
        d_diam,
        f: cap(f, decl.grad_bound),
        g_bound: cap(g_bound, decl.constraint_bound),
        g_big: 0.0,
        m_g: cap(m_g, decl.jacobian_bound),
        l,
        l0,
        l_gg,
        l_g: l_gj.iter().map(|v| v * v).sum::<f64>().sqrt(),
        l_gj_max: l_gj.iter().copied().fold(0.0, f64::max),
        m_lambda: 0.0,
        xi_lambda: 0.0,
        l_x: 0.0,
        f_x: 0.0,
        eta_phi: 0.0,
        l_phi: 0.0,
        c_norm,
        m_total: problem.num_constraints(),
        m_nonlinear: nl,
        p: config.p,
        d: config.d,
        radius_override: config.dual_radius_override,
    };
    out.refresh(config.alpha, config.kappa);
    Ok(out)
}

/// The step-size dependent coefficients of the regret bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretTerms {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub k6: f64,
}

pub fn regret_terms(c: &ProblemConstants, alpha: f64, kappa: f64) -> RegretTerms {
    let lx = c.l_x_at(alpha, kappa);
    let r = c.radius(alpha, kappa);
    RegretTerms {
        k1: (c.f * c.f + c.g_bound * c.g_bound) / 2.0,
        k2: c.f * c.g_big,
        k3: c.g_big * c.g_big / 2.0,
        k4: (2.0 * c.b + alpha * c.f + alpha * r * c.g_big) * lx + (2.0 * r + alpha * c.g_bound) * c.m_g,
        k5: alpha * (lx * lx + c.m_g * c.m_g) / 2.0,
        k6: (c.d_diam + c.b) / alpha,
    }
}

impl RegretTerms {
    /// Every term except `B / (alpha k)`.
    fn steady(&self, alpha: f64, kappa: f64, path_avg: f64, e_y: f64) -> f64 {
        self.k1 * alpha
            + self.k2 * alpha.powf(1.0 - kappa)
            + self.k3 * alpha.powf(1.0 - 2.0 * kappa)
            + self.k4 * e_y
            + self.k5 * e_y * e_y
            + self.k6 * path_avg
    }
}

/// Bound on the average dynamic regret after `k` steps, given the cumulative
/// path length `path_sum` of the comparator over those steps.
pub fn regret_bound(
    c: &ProblemConstants,
    alpha: f64,
    kappa: f64,
    k: usize,
    path_sum: f64,
    e_y: f64,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidConfig("regret bound needs k >= 1".into()));
    }
    let kf = k as f64;
    let t = regret_terms(c, alpha, kappa);
    Ok(c.b / (alpha * kf) + t.steady(alpha, kappa, path_sum / kf, e_y))
}

/// Bound on each component of the clipped average constraint violation.
pub fn violation_bound(c: &ProblemConstants, alpha: f64, kappa: f64, regret_bound_value: f64) -> f64 {
    alpha.powf(kappa) * (regret_bound_value + 2.0 * c.f * c.b)
}

/// `c(alpha)` with a flag telling whether it is a contraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contraction {
    pub value: f64,
    pub contracting: bool,
}

pub fn contraction_coeff(c: &ProblemConstants, alpha: f64) -> Contraction {
    contraction_from(c.eta_phi, c.l_phi, alpha)
}

/// `sqrt(1 - 2 alpha eta + alpha^2 L^2)`.
pub fn contraction_from(eta: f64, l_phi: f64, alpha: f64) -> Contraction {
    let value = (1.0 - alpha * (2.0 * eta - alpha * l_phi * l_phi))
        .max(0.0)
        .sqrt();
    Contraction {
        value,
        contracting: value < 1.0,
    }
}

/// Largest step size with `c(alpha) < 1` is strictly below this value.
pub fn critical_step(c: &ProblemConstants) -> f64 {
    2.0 * c.eta_phi / (c.l_phi * c.l_phi)
}

/// Step size minimising `c(alpha)`.
pub fn best_step(c: &ProblemConstants) -> f64 {
    c.eta_phi / (c.l_phi * c.l_phi)
}

/// `(e_p, e_d)`: worst-case primal and dual map perturbations for output error `e_y`.
pub fn perturbation_bounds(c: &ProblemConstants, e_y: f64) -> (f64, f64) {
    let e_p = (c.l0 + c.m_lambda * c.m_nonlinear as f64 * c.l_gj_max) * c.c_norm * e_y;
    (e_p, c.m_g * e_y)
}

/// `sqrt(e_p^2 + e_d^2)`.
pub fn map_perturbation_bound(c: &ProblemConstants, e_y: f64) -> f64 {
    let (e_p, e_d) = perturbation_bounds(c, e_y);
    e_p.hypot(e_d)
}

/// Asymptotic tracking error bound; requires `c(alpha) < 1`.
pub fn asymptotic_bound(c: &ProblemConstants, alpha: f64, e_y: f64, sigma_bar: f64) -> Result<f64> {
    let ca = contraction_coeff(c, alpha);
    let (e_p, e_d) = perturbation_bounds(c, e_y);
    asymptotic_bound_with(ca.value, alpha, e_p, e_d, sigma_bar)
}

/// Asymptotic tracking error bound for a given contraction coefficient.
pub fn asymptotic_bound_with(c_alpha: f64, alpha: f64, e_p: f64, e_d: f64, sigma_bar: f64) -> Result<f64> {
    if c_alpha >= 1.0 {
        return Err(Error::InvalidConfig(format!(
            "step size {alpha} is not contracting (c = {c_alpha})"
        )));
    }
    Ok((alpha * e_p.hypot(e_d) + sigma_bar) / (1.0 - c_alpha))
}

/// Regret and violation rates with `kappa = 1/3`, `alpha = k^-3/4`, exact
/// measurements and comparator path length bounded by `b_sigma`.
pub fn tuned_step_rates(c: &ProblemConstants, b_sigma: f64, k: usize) -> (f64, f64) {
    let kf = k as f64;
    let alpha = kf.powf(-0.75);
    let kappa = 1.0 / 3.0;
    let t = regret_terms(c, alpha, kappa);
    let head = c.b + b_sigma * (c.d_diam + c.b);
    let regret =
        head / (alpha * kf) + t.k1 * alpha + t.k2 * alpha.powf(2.0 / 3.0) + t.k3 * alpha.powf(1.0 / 3.0);
    let violation = head / (alpha.powf(2.0 / 3.0) * kf)
        + t.k1 * alpha.powf(4.0 / 3.0)
        + t.k2 * alpha
        + t.k3 * alpha.powf(2.0 / 3.0)
        + 2.0 * c.f * c.b * alpha.powf(1.0 / 3.0);
    (regret, violation)
}

/// Per-step tracking bound from the one-step contraction:
/// `b(0) = S(0)`, `b(k+1) = c b(k) + sigma_bar(k) + alpha pert(k)`.
pub fn tracking_recursion(c_alpha: f64, alpha: f64, s0: f64, sigma_bar: &[f64], pert: &[f64]) -> Vec<f64> {
    let n = sigma_bar.len().min(pert.len());
    let mut out = Vec::with_capacity(n + 1);
    let mut b = s0;
    out.push(b);
    for j in 0..n {
        b = c_alpha * b + sigma_bar[j] + alpha * pert[j];
        out.push(b);
    }
    out
}

/// Whether regret bounds can be certified for `traj`; they assume a zero
/// initial multiplier.
pub fn certifiable(traj: &Trajectory) -> bool {
    if !traj.zero_initial_dual {
        log::warn!("initial multiplier is nonzero; regret and violation bounds are not certified");
    }
    traj.zero_initial_dual
}

/// All bound series for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRecord {
    pub alpha: f64,
    pub kappa: f64,
    pub terms: RegretTerms,
    /// `B(k)` for `k = 1..=path_sums.len()`.
    pub regret: Vec<f64>,
    /// Matching violation bounds.
    pub violation: Vec<f64>,
    /// Limit of `B(k)` using the final average path length.
    pub regret_limit: f64,
    pub contraction: Contraction,
    pub e_p: f64,
    pub e_d: f64,
    /// `None` when `c(alpha) >= 1`.
    pub asymptotic: Option<f64>,
}

/// Evaluate every bound; `path_sums[k - 1]` is the comparator path length
/// over the first `k` steps.
pub fn bound_record(
    c: &ProblemConstants,
    alpha: f64,
    kappa: f64,
    path_sums: &[f64],
    e_y: f64,
    sigma_bar: f64,
) -> BoundRecord {
    let terms = regret_terms(c, alpha, kappa);
    let regret: Vec<f64> = path_sums
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let kf = (i + 1) as f64;
            c.b / (alpha * kf) + terms.steady(alpha, kappa, s / kf, e_y)
        })
        .collect();
    let violation = regret
        .iter()
        .map(|r| violation_bound(c, alpha, kappa, *r))
        .collect();
    let last_avg = path_sums.last().map_or(0.0, |s| s / path_sums.len() as f64);
    let contraction = contraction_coeff(c, alpha);
    let (e_p, e_d) = perturbation_bounds(c, e_y);
    BoundRecord {
        alpha,
        kappa,
        terms,
        regret,
        violation,
        regret_limit: terms.steady(alpha, kappa, last_avg, e_y),
        contraction,
        e_p,
        e_d,
        asymptotic: asymptotic_bound_with(contraction.value, alpha, e_p, e_d, sigma_bar).ok(),
    }
}

/// Worst observed ratios from random pairs in `X(k) x D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport {
    pub pairs: usize,
    /// Minimum of `<dphi, dz> / (eta ||dz||^2)`; at least 1 when strongly monotone.
    pub min_monotone_ratio: f64,
    /// Maximum of `||dphi|| / (L_phi ||dz||)`; at most 1 when Lipschitz.
    pub max_lipschitz_ratio: f64,
}

impl MonotonicityReport {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.min_monotone_ratio >= 1.0 - rel_tol && self.max_lipschitz_ratio <= 1.0 + rel_tol
    }
}

/// Sample `pairs` random pairs and measure strong monotonicity and Lipschitz
/// continuity of the regularized saddle map against `consts`.
pub fn check_saddle_map(
    problem: &TimeVaryingProblem,
    plant: &LinearPlant,
    config: &AlgorithmConfig,
    consts: &ProblemConstants,
    pairs: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    if consts.eta_phi <= 0.0 {
        return Err(Error::InvalidConfig("strong monotonicity needs p, d > 0".into()));
    }
    let radius = config.dual_radius();
    if !radius.is_finite() {
        return Err(Error::Unsupported("sampling from an unbounded dual set".into()));
    }
    let model = plant.model_only();
    let m = problem.num_constraints();
    let dual = FeasibleSet::nonneg_ball(radius, m)?;
    let mut report = MonotonicityReport {
        pairs,
        min_monotone_ratio: f64::INFINITY,
        max_lipschitz_ratio: 0.0,
    };
    for i in 0..pairs {
        let mut rng = stream_rng(seed, domain::SAMPLING, (1 << 32) + i as u64);
        let k = rng.random_range(0..=config.horizon);
        let mut phi_z = || -> Result<(DVector<f64>, DVector<f64>)> {
            let x = sample_point(problem, k, &mut rng);
            let lambda = if m > 0 {
                sample_set(&dual, &mut rng)
            } else {
                DVector::zeros(0)
            };
            let phi = saddle_map_model(problem, &model, &x, &lambda, config.p, config.d, k)?;
            Ok((crate::engine::stack(&x, &lambda), phi))
        };
        let (z1, p1) = phi_z()?;
        let (z2, p2) = phi_z()?;
        let dz = z1 - z2;
        let dp = p1 - p2;
        let nz2 = dz.norm_squared();
        if nz2 == 0.0 {
            continue;
        }
        report.min_monotone_ratio = report
            .min_monotone_ratio
            .min(dp.dot(&dz) / (consts.eta_phi * nz2));
        report.max_lipschitz_ratio = report
            .max_lipschitz_ratio
            .max(dp.norm() / (consts.l_phi * nz2.sqrt()));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{DeclaredConstants, FnConstraints, FnCost};
    use approx::assert_relative_eq;

    fn unit() -> ProblemConstants {
        ProblemConstants {
            b: 1.0,
            d_diam: 1.0,
            f: 1.0,
            g_bound: 1.0,
            g_big: 1.0,
            m_g: 0.0,
            l: 0.0,
            l0: 0.0,
            l_gg: 0.0,
            l_g: 0.0,
            l_gj_max: 0.0,
            m_lambda: 0.0,
            xi_lambda: 0.0,
            l_x: 0.0,
            f_x: 0.0,
            eta_phi: 0.0,
            l_phi: 0.0,
            c_norm: 0.0,
            m_total: 1,
            m_nonlinear: 0,
            p: 0.0,
            d: 0.0,
            radius_override: None,
        }
    }

    #[test]
    fn regret_bound_examples() {
        let c = unit();
        assert_relative_eq!(
            regret_bound(&c, 1.0, 1.0, 1, 0.0, 0.0).unwrap(),
            3.5,
            epsilon = 1e-15
        );
        let c0 = ProblemConstants { g_big: 0.0, ..unit() };
        let far = regret_bound(&c0, 0.1, 0.5, 1_000_000_000_000_000, 0.0, 0.0).unwrap();
        assert_relative_eq!(far, 0.1, epsilon = 1e-12);
        assert!(regret_bound(&c, 1.0, 1.0, 0, 0.0, 0.0).is_err());
    }

    #[test]
    fn violation_bound_examples() {
        let c = unit();
        assert_relative_eq!(violation_bound(&c, 1.0, 1.0, 3.5), 5.5);
        let small = violation_bound(&c, 1e-6, 0.5, 3.5);
        assert_relative_eq!(small, 1e-3 * 5.5, max_relative = 1e-12);
    }

    #[test]
    fn contraction_examples() {
        assert_eq!(contraction_from(0.1, 2.0, 0.0).value, 1.0);
        assert_relative_eq!(
            contraction_from(0.1, 2.0, 0.04).value,
            0.9984_f64.sqrt(),
            epsilon = 1e-15
        );
        let edge = contraction_from(0.1, 2.0, 2.0 * 0.1 / 4.0);
        assert_eq!(edge.value, 1.0);
        assert!(!edge.contracting);
        assert!(contraction_from(0.1, 2.0, 0.04).contracting);
    }

    #[test]
    fn asymptotic_examples() {
        assert_relative_eq!(
            asymptotic_bound_with(0.95, 0.1, 0.0, 0.0, 0.05).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_eq!(asymptotic_bound_with(0.95, 0.1, 0.0, 0.0, 0.0).unwrap(), 0.0);
        assert!(asymptotic_bound_with(1.0, 0.1, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn tuned_step_rate_decay() {
        let c = unit();
        let (r1, v1) = tuned_step_rates(&c, 0.0, 1_000_000);
        let (r4, v4) = tuned_step_rates(&c, 0.0, 4_000_000);
        let target = 4.0_f64.powf(-0.25);
        assert!((r4 / r1 / target - 1.0).abs() < 0.05);
        assert!((v4 / v1 / target - 1.0).abs() < 0.05);
        let seq: Vec<f64> = [100, 1000, 10_000]
            .iter()
            .map(|&k| tuned_step_rates(&c, 0.0, k).0)
            .collect();
        assert!(seq[0] > seq[1] && seq[1] > seq[2]);
    }

    #[test]
    fn tuned_step_closed_form_with_unit_constants() {
        let c = unit();
        let k = 10_000usize;
        let a = (k as f64).powf(-0.75);
        let (r, v) = tuned_step_rates(&c, 0.0, k);
        let head = 1.0;
        let expect_r = head / (a * k as f64) + a + a.powf(2.0 / 3.0) + 0.5 * a.powf(1.0 / 3.0);
        let expect_v = head / (a.powf(2.0 / 3.0) * k as f64)
            + a.powf(4.0 / 3.0)
            + a
            + 0.5 * a.powf(2.0 / 3.0)
            + 2.0 * a.powf(1.0 / 3.0);
        assert_relative_eq!(r, expect_r, max_relative = 1e-14);
        assert_relative_eq!(v, expect_v, max_relative = 1e-14);
    }

    fn plant(n: usize) -> LinearPlant {
        LinearPlant::new(
            nalgebra::DMatrix::identity(n, n),
            nalgebra::DMatrix::zeros(n, 1),
            std::sync::Arc::new(crate::problem::ConstantSignal(DVector::zeros(1))),
            0,
        )
        .unwrap()
    }

    fn half_square_problem(decl: DeclaredConstants) -> TimeVaryingProblem {
        TimeVaryingProblem::builder(1)
            .block(
                FeasibleSet::interval(-1.0, 1.0).unwrap(),
                Some(std::sync::Arc::new(FnCost::new(
                    |x, _| 0.5 * x[0] * x[0],
                    |x, _, g| g[0] = x[0],
                ))),
            )
            .constraints(std::sync::Arc::new(FnConstraints::new(
                1,
                0,
                |y, _, o| o[0] = y[0],
                |_, _, j| j[(0, 0)] = 1.0,
            )))
            .declare(decl)
            .build()
            .unwrap()
    }

    #[test]
    fn sampled_constants_respect_analytic_suprema() {
        let decl = DeclaredConstants {
            grad_lipschitz: Some(1.0),
            ..Default::default()
        };
        let problem = half_square_problem(decl.clone());
        let cfg = AlgorithmConfig::case2(0.1, 0.1, 0.1, 50).unwrap();
        let c = estimate_constants(&problem, &plant(1), &cfg, 50, 200).unwrap();
        assert!(c.f <= 1.1 + 1e-12 && c.f >= 1.0, "{}", c.f);
        assert!(c.m_g <= 1.1 + 1e-12 && c.m_g >= 1.0);
        let capped = half_square_problem(DeclaredConstants {
            jacobian_bound: Some(1.0),
            ..decl
        });
        let c = estimate_constants(&capped, &plant(1), &cfg, 50, 200).unwrap();
        assert_eq!(c.m_g, 1.0);
        assert_eq!(c.g_big, 1.0);
        assert_relative_eq!(
            c.l_phi,
            ((1.0_f64 + 0.1 + 1.0).powi(2) + 1.1_f64.powi(2)).sqrt(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn norm_bound_of_square_box() {
        let problem = TimeVaryingProblem::builder(2)
            .block(FeasibleSet::cube(2, -2.0, 2.0).unwrap(), None)
            .declare(DeclaredConstants {
                grad_lipschitz: Some(0.0),
                ..Default::default()
            })
            .build()
            .unwrap();
        let cfg = AlgorithmConfig::case1(0.1, 1.0 / 3.0, 10).unwrap();
        let c = estimate_constants(&problem, &plant(2), &cfg, 10, 5).unwrap();
        assert_eq!(c.b, 8.0_f64.sqrt());
    }

    #[test]
    fn missing_lipschitz_is_a_configuration_error() {
        let problem = half_square_problem(DeclaredConstants::default());
        let cfg = AlgorithmConfig::case1(0.1, 1.0 / 3.0, 10).unwrap();
        assert!(matches!(
            estimate_constants(&problem, &plant(1), &cfg, 10, 5),
            Err(Error::MissingConstant("grad_lipschitz"))
        ));
    }

    #[test]
    fn recursion_accumulates() {
        let b = tracking_recursion(0.5, 0.1, 2.0, &[1.0, 0.0], &[0.0, 10.0]);
        assert_eq!(b, vec![2.0, 2.0, 2.0]);
    }
}
