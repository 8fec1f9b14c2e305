//! Covariance kernels of the bridge processes, the Gaussian Markov test, and
//! the canonical decompositions of `β̄` and `β̃`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::grid::{fmt17, Path, TimeGrid};
use crate::laws::LevyLaw;
use crate::rng::Seed;

fn check_times(s: f64, t: f64, horizon: f64) -> Result<()> {
    if !(horizon > 0.0) {
        return Err(domain(format!("horizon must be positive, got {horizon}")));
    }
    let slack = 1e-12 * horizon;
    for v in [s, t] {
        if !(v >= -slack && v <= horizon + slack) {
            return Err(domain(format!("time {v} outside [0, {horizon}]")));
        }
    }
    Ok(())
}

/// `E[β̄_s β̄_t] = s∧t - (st/T)(1 - (s∧t)/T)`.
pub fn cov_bar(s: f64, t: f64, horizon: f64) -> Result<f64> {
    check_times(s, t, horizon)?;
    let m = s.min(t);
    Ok(m - (s * t / horizon) * (1.0 - m / horizon))
}

/// `E[β̃_s β̃_t] = (s∧t)(T² - (s∨t)²)/T²`.
pub fn cov_tilde(s: f64, t: f64, horizon: f64) -> Result<f64> {
    check_times(s, t, horizon)?;
    let (lo, hi) = (s.min(t), s.max(t));
    Ok(lo * (horizon * horizon - hi * hi) / (horizon * horizon))
}

/// Covariance of `β_t + σ t B_{ψ(t)}`: `(s∧t - st/T) + σ² s t min(ψ(s), ψ(t))`.
///
/// For non-increasing `ψ` the last factor is `ψ(s∨t)`.
pub fn cov_hat(s: f64, t: f64, horizon: f64, sigma: f64, psi: &TimeChange) -> Result<f64> {
    check_times(s, t, horizon)?;
    Ok(s.min(t) - s * t / horizon + sigma * sigma * s * t * psi.eval(s).min(psi.eval(t)))
}

/// `Cov(ζ_s, ζ_t) = s∧t - st/T + (st/T²) Var(X_1) (T - s∨t)`.
pub fn cov_zeta(s: f64, t: f64, horizon: f64, law: &LevyLaw) -> Result<f64> {
    check_times(s, t, horizon)?;
    let hi = s.max(t);
    Ok(s.min(t) - s * t / horizon + s * t / (horizon * horizon) * law.variance_rate() * (horizon - hi))
}

/// `E[ζ_t] = (t/T) E[X_1] (T - t)`.
pub fn mean_zeta(t: f64, horizon: f64, law: &LevyLaw) -> f64 {
    t / horizon * law.mean_rate() * (horizon - t)
}

/// Monotonicity of a sampled [`TimeChange`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    /// Includes constant functions.
    NonIncreasing,
    NonDecreasing,
    Other,
}

/// A non-negative function `ψ` on `[0, T]`, tagged with its monotonicity.
#[derive(Clone)]
pub struct TimeChange {
    psi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    monotonicity: Monotonicity,
}

impl std::fmt::Debug for TimeChange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TimeChange").field("monotonicity", &self.monotonicity).finish_non_exhaustive()
    }
}

impl TimeChange {
    /// Samples `ψ` on 2001 points of `[0, T]` to determine the tag.
    pub fn new<F>(horizon: f64, psi: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        const SAMPLES: usize = 2000;
        let values: Vec<f64> = (0..=SAMPLES).map(|k| psi(horizon * k as f64 / SAMPLES as f64)).collect();
        if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(domain("ψ must be finite and non-negative on [0, T]"));
        }
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-14 * scale.max(1.0);
        let monotonicity = if values.windows(2).all(|w| w[1] <= w[0] + tol) {
            Monotonicity::NonIncreasing
        } else if values.windows(2).all(|w| w[1] + tol >= w[0]) {
            Monotonicity::NonDecreasing
        } else {
            Monotonicity::Other
        };
        Ok(TimeChange { psi: Arc::new(psi), monotonicity })
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.psi)(t)
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotonicity
    }
}

/// A covariance function on `[0, T]²`.
#[derive(Clone)]
pub struct CovKernel {
    horizon: f64,
    eval: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for CovKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CovKernel").field("horizon", &self.horizon).finish_non_exhaustive()
    }
}

impl CovKernel {
    pub fn new<F>(horizon: f64, eval: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        CovKernel { horizon, eval: Arc::new(eval) }
    }

    pub fn brownian(horizon: f64) -> Self {
        CovKernel::new(horizon, |s, t| s.min(t))
    }

    pub fn bridge(horizon: f64) -> Self {
        CovKernel::new(horizon, move |s, t| s.min(t) - s * t / horizon)
    }

    pub fn bar(horizon: f64) -> Self {
        CovKernel::new(horizon, move |s, t| cov_bar(s, t, horizon).unwrap_or(f64::NAN))
    }

    pub fn tilde(horizon: f64) -> Self {
        CovKernel::new(horizon, move |s, t| cov_tilde(s, t, horizon).unwrap_or(f64::NAN))
    }

    pub fn hat(horizon: f64, sigma: f64, psi: TimeChange) -> Self {
        CovKernel::new(horizon, move |s, t| cov_hat(s, t, horizon, sigma, &psi).unwrap_or(f64::NAN))
    }

    pub fn zeta(horizon: f64, law: LevyLaw) -> Self {
        CovKernel::new(horizon, move |s, t| cov_zeta(s, t, horizon, &law).unwrap_or(f64::NAN))
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn eval(&self, s: f64, t: f64) -> f64 {
        (self.eval)(s, t)
    }

    /// `s,t,value` table over all pairs of grid points.
    pub fn to_csv(&self, grid: &TimeGrid) -> String {
        let mut out = String::from("s,t,value\n");
        for &s in grid.points() {
            for &t in grid.points() {
                let _ = writeln!(out, "{},{},{}", fmt17(s), fmt17(t), fmt17(self.eval(s, t)));
            }
        }
        out
    }
}

/// `|k(s,t) k(t,u) - k(t,t) k(s,u)|`; zero for every ordered triple exactly
/// when the centred Gaussian process with covariance `k` is Markov.
pub fn markov_triple_residual(k: &CovKernel, s: f64, t: f64, u: f64) -> Result<f64> {
    if !(0.0 <= s && s < t && t < u && u <= k.horizon()) {
        return Err(domain(format!("need 0 <= s < t < u <= T, got ({s}, {t}, {u})")));
    }
    Ok((k.eval(s, t) * k.eval(t, u) - k.eval(t, t) * k.eval(s, u)).abs())
}

fn a_denominator(s: f64, horizon: f64) -> f64 {
    horizon - s + s * (s / horizon).atan()
}

/// `a(s,u)` for `0 <= u <= s < T`, the kernel of the stochastic integral in
/// the conditional mean of `β̄`.
pub fn kernel_a(s: f64, u: f64, horizon: f64) -> Result<f64> {
    if !(horizon > 0.0 && s >= 0.0 && s < horizon && u >= 0.0 && u <= s) {
        return Err(domain(format!("kernel a needs 0 <= u <= s < T, got s={s}, u={u}, T={horizon}")));
    }
    Ok(kernel_a_raw(s, u, horizon))
}

fn kernel_a_raw(s: f64, u: f64, horizon: f64) -> f64 {
    let den = a_denominator(s, horizon);
    let g = horizon * u / (horizon * horizon + u * u) + (u / horizon).atan();
    (horizon - s) / den * g + s * (s / horizon).atan() / den
}

/// `E[β̄_t | β̄_u, u <= s]` from a sampled prefix ending at `s`:
/// `((T-t)/(T-s)) β̄_s + ((t-s)/(T-s)) ∫_0^s a(s,u) dβ̄_u`, the integral taken
/// as a left-point sum over the prefix grid.
pub fn predict_bar(prefix: &Path, t: f64, horizon: f64) -> Result<f64> {
    let s = prefix.grid().horizon();
    if !(s < horizon) {
        return Err(domain(format!("prefix end {s} must be before T = {horizon}")));
    }
    if t < s || t >= horizon {
        return Err(domain(format!("need s <= t < T, got s={s}, t={t}")));
    }
    let values = prefix.values();
    let beta_s = *values.last().expect("non-empty");
    if t == s {
        return Ok(beta_s);
    }
    let integral: f64 = prefix
        .times()
        .windows(2)
        .zip(values.windows(2))
        .map(|(tw, vw)| kernel_a_raw(s, tw[0], horizon) * (vw[1] - vw[0]))
        .sum();
    Ok((horizon - t) / (horizon - s) * beta_s + (t - s) / (horizon - s) * integral)
}

fn check_drift_time(s: f64, horizon: f64) -> Result<()> {
    if !(s >= 0.0 && s <= horizon * (1.0 - 1e-6)) {
        return Err(domain(format!("drift needs 0 <= s <= T(1 - 1e-6), got s={s}, T={horizon}")));
    }
    Ok(())
}

/// Drift of `β̃` in its own filtration: `-2 s x / (T² - s²)`.
pub fn drift_tilde(s: f64, x: f64, horizon: f64) -> Result<f64> {
    check_drift_time(s, horizon)?;
    Ok(-2.0 * s * x / (horizon * horizon - s * s))
}

/// Diffusion coefficient of `β̃`: `√(T² + s²)/T`.
pub fn diffusion_tilde(s: f64, horizon: f64) -> f64 {
    (horizon * horizon + s * s).sqrt() / horizon
}

/// Two reconstructions of `β̃` driven by the same Brownian increments.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeReconstruction {
    /// Euler scheme for `dβ̃ = drift dt + diffusion dB`.
    pub euler: Path,
    /// `((T²-t²)/T) ∫_0^t √(T²+s²)/(T²-s²) dB_s`, left-point sums.
    pub explicit: Path,
}

pub const MIN_RECONSTRUCTION_STEPS: usize = 64;

pub fn euler_reconstruct_tilde(grid: &TimeGrid, seed: Seed) -> Result<TildeReconstruction> {
    let mut rng = seed.rng();
    let increments: Vec<f64> = grid
        .points()
        .windows(2)
        .map(|w| {
            let z: f64 = rng.sample(StandardNormal);
            z * (w[1] - w[0]).sqrt()
        })
        .collect();
    reconstruct_tilde_from_increments(grid, &increments)
}

/// As [`euler_reconstruct_tilde`] with given increments `B_{t_{k+1}} - B_{t_k}`.
pub fn reconstruct_tilde_from_increments(grid: &TimeGrid, increments: &[f64]) -> Result<TildeReconstruction> {
    if grid.steps() < MIN_RECONSTRUCTION_STEPS {
        return Err(Error::InvalidGrid(format!(
            "reconstruction needs at least {MIN_RECONSTRUCTION_STEPS} steps, got {}",
            grid.steps()
        )));
    }
    if increments.len() != grid.steps() {
        return Err(Error::GridMismatch);
    }
    let horizon = grid.horizon();
    let h2 = horizon * horizon;
    let pts = grid.points();
    let mut euler = Vec::with_capacity(pts.len());
    let mut explicit = Vec::with_capacity(pts.len());
    euler.push(0.0);
    explicit.push(0.0);
    let (mut x, mut integral) = (0.0, 0.0);
    for (k, db) in increments.iter().enumerate() {
        let (s, t) = (pts[k], pts[k + 1]);
        x += drift_tilde(s, x, horizon)? * (t - s) + diffusion_tilde(s, horizon) * db;
        euler.push(x);
        integral += (h2 + s * s).sqrt() / (h2 - s * s) * db;
        explicit.push(if k + 1 == increments.len() { 0.0 } else { (h2 - t * t) / horizon * integral });
    }
    Ok(TildeReconstruction {
        euler: Path::from_parts(grid.clone(), euler),
        explicit: Path::from_parts(grid.clone(), explicit),
    })
}

/// `Σ (Δx)²` over the path.
pub fn quadratic_variation(path: &Path) -> f64 {
    path.values().windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum()
}

/// `t + t³/(3T²)`, the quadratic variation of `β̃` on `[0, t]`.
pub fn tilde_quadratic_variation(t: f64, horizon: f64) -> f64 {
    t + t * t * t / (3.0 * horizon * horizon)
}

/// `|σ²(t) - σ²(T-t)|` with `σ²(t) = t(T² - t²)/T²` the variance of `β̃_t`.
pub fn not_a_bridge_residual(t: f64, horizon: f64) -> Result<f64> {
    check_times(t, t, horizon)?;
    let var = |t: f64| t * (horizon * horizon - t * t) / (horizon * horizon);
    Ok((var(t) - var(horizon - t)).abs())
}

/// `Σ √(2/π) (t_{i+1}-t_i) √(t_i (2T - t_i) / (T² (T - t_i)))` over a
/// partition `0 = t_0 < ... < t_n = T`; bounded by `4√(T/π)`.
pub fn quasimartingale_variation(partition: &[f64]) -> Result<f64> {
    if partition.len() < 2 || partition[0] != 0.0 || partition.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("partition must start at 0 and increase strictly".into()));
    }
    let horizon = *partition.last().expect("len >= 2");
    let c = (2.0 / PI).sqrt();
    Ok(partition
        .windows(2)
        .map(|w| {
            let ti = w[0];
            c * (w[1] - ti) * (ti * (2.0 * horizon - ti) / (horizon * horizon * (horizon - ti))).sqrt()
        })
        .sum())
}

pub fn quasimartingale_bound(horizon: f64) -> f64 {
    4.0 * (horizon / PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_values() {
        assert_eq!(cov_bar(0.5, 0.5, 1.0).unwrap(), 0.375);
        assert_eq!(cov_bar(0.0, 0.7, 1.0).unwrap(), 0.0);
        assert_eq!(cov_bar(0.25, 0.75, 1.0).unwrap(), 0.109375);
        assert_eq!(cov_tilde(0.5, 0.5, 1.0).unwrap(), 0.375);
        assert_eq!(cov_tilde(0.3, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(cov_tilde(0.25, 0.75, 1.0).unwrap(), 0.109375);
        assert!(cov_bar(-0.1, 0.5, 1.0).is_err());
        assert!(cov_tilde(0.5, 1.2, 1.0).is_err());
    }

    #[test]
    fn hat_kernel_cases() {
        let psi = TimeChange::new(1.0, |u| 1.0 - u).unwrap();
        assert_eq!(psi.monotonicity(), Monotonicity::NonIncreasing);
        assert!((cov_hat(0.25, 0.75, 1.0, 1.0, &psi).unwrap() - 0.109375).abs() < 1e-16);
        let zero = cov_hat(0.3, 0.6, 1.0, 0.0, &psi).unwrap();
        assert!((zero - (0.3 - 0.18)).abs() < 1e-16);
        let up = TimeChange::new(1.0, |u| u * u).unwrap();
        assert_eq!(up.monotonicity(), Monotonicity::NonDecreasing);
        let wiggle = TimeChange::new(1.0, |u| 1.0 + (6.0 * u).sin()).unwrap();
        assert_eq!(wiggle.monotonicity(), Monotonicity::Other);
        assert!(TimeChange::new(1.0, |u| u - 0.5).is_err());
    }

    #[test]
    fn triple_residuals() {
        let tilde = CovKernel::tilde(1.0);
        assert!(markov_triple_residual(&tilde, 0.25, 0.5, 0.75).unwrap() < 1e-16);
        assert!((tilde.eval(0.25, 0.5) * tilde.eval(0.5, 0.75) - 0.041015625).abs() < 1e-16);
        let bar = CovKernel::bar(1.0);
        assert!((markov_triple_residual(&bar, 0.25, 0.5, 0.75).unwrap() - 0.0078125).abs() < 1e-15);
        assert_eq!(markov_triple_residual(&bar, 0.0, 0.5, 0.75).unwrap(), 0.0);
        assert!(markov_triple_residual(&bar, 0.5, 0.25, 0.75).is_err());
    }

    #[test]
    fn hat_kernel_markov_iff_psi_nonincreasing() {
        let grid: Vec<f64> = (0..20).map(|k| k as f64 / 19.0).collect();
        let constant = CovKernel::hat(1.0, 0.7, TimeChange::new(1.0, |_| 2.0).unwrap());
        let decreasing = CovKernel::hat(1.0, 0.7, TimeChange::new(1.0, |u| (-u).exp()).unwrap());
        let increasing = CovKernel::hat(1.0, 0.7, TimeChange::new(1.0, |u| 1.0 + u).unwrap());
        let mut worst_increasing: f64 = 0.0;
        for i in 0..20 {
            for j in i + 1..20 {
                for k in j + 1..20 {
                    let (s, t, u) = (grid[i], grid[j], grid[k]);
                    assert!(markov_triple_residual(&constant, s, t, u).unwrap() < 1e-12);
                    assert!(markov_triple_residual(&decreasing, s, t, u).unwrap() < 1e-12);
                    worst_increasing = worst_increasing.max(markov_triple_residual(&increasing, s, t, u).unwrap());
                }
            }
        }
        assert!(worst_increasing > 1e-6);
    }

    #[test]
    fn kernel_a_anchors() {
        let horizon = 1.3;
        assert_eq!(kernel_a(0.0, 0.0, horizon).unwrap(), 0.0);
        let c = |t: f64| horizon.powi(3) * (horizon - t) / a_denominator(t, horizon);
        let d = |t: f64| t * (t / horizon).atan() / a_denominator(t, horizon);
        let g = |u: f64| horizon * u / (horizon * horizon + u * u) + (u / horizon).atan();
        for &s in &[0.1, 0.5, 0.9, 1.2] {
            assert!((kernel_a(s, 0.0, horizon).unwrap() - d(s)).abs() < 1e-14);
            let diag = c(s) / horizon.powi(3) * g(s) + d(s);
            assert!((kernel_a(s, s, horizon).unwrap() - diag).abs() < 1e-14);
        }
        let near = kernel_a(horizon * (1.0 - 1e-9), 0.4, horizon).unwrap();
        assert!((near - 1.0).abs() < 1e-8);
        assert!(kernel_a(horizon, 0.1, horizon).is_err());
        assert!(kernel_a(0.5, 0.6, horizon).is_err());
    }

    #[test]
    fn predict_bar_trivial_cases() {
        let g = TimeGrid::uniform(0.4, 40).unwrap();
        let zero = Path::new(g.clone(), vec![0.0; g.len()]).unwrap();
        assert_eq!(predict_bar(&zero, 0.7, 1.0).unwrap(), 0.0);
        let p = Path::new(g.clone(), (0..g.len()).map(|k| (k as f64 * 0.3).sin()).collect()).unwrap();
        assert_eq!(predict_bar(&p, 0.4, 1.0).unwrap(), *p.values().last().unwrap());
        assert!(predict_bar(&p, 0.3, 1.0).is_err());
        assert!(predict_bar(&p, 1.0, 1.0).is_err());
    }

    #[test]
    fn drift_values_and_guard() {
        assert_eq!(drift_tilde(0.0, 3.0, 1.0).unwrap(), 0.0);
        assert_eq!(drift_tilde(0.4, 0.0, 1.0).unwrap(), 0.0);
        assert!((drift_tilde(0.5, 1.0, 1.0).unwrap() + 4.0 / 3.0).abs() < 1e-15);
        assert!(drift_tilde(1.0 - 1e-7, 1.0, 1.0).is_err());
        assert!(drift_tilde(1.0 - 1e-5, 1.0, 1.0).is_ok());
    }

    #[test]
    fn reconstruction_cases() {
        let g = TimeGrid::uniform(1.0, 128).unwrap();
        let zero = reconstruct_tilde_from_increments(&g, &vec![0.0; 128]).unwrap();
        assert!(zero.euler.values().iter().all(|v| *v == 0.0));
        assert!(zero.explicit.values().iter().all(|v| *v == 0.0));
        let r = euler_reconstruct_tilde(&g, Seed(4)).unwrap();
        assert_eq!(*r.explicit.values().last().unwrap(), 0.0);
        assert_eq!(r, euler_reconstruct_tilde(&g, Seed(4)).unwrap());
        assert!(euler_reconstruct_tilde(&TimeGrid::uniform(1.0, 32).unwrap(), Seed(4)).is_err());
    }

    #[test]
    fn not_a_bridge_values() {
        assert!(not_a_bridge_residual(0.5, 1.0).unwrap() < 1e-16);
        assert_eq!(not_a_bridge_residual(0.0, 1.0).unwrap(), 0.0);
        assert!((not_a_bridge_residual(0.25, 1.0).unwrap() - 0.09375).abs() < 1e-15);
    }

    #[test]
    fn quasimartingale_sums() {
        assert_eq!(quasimartingale_variation(&[0.0, 1.0]).unwrap(), 0.0);
        let p1000: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
        let p2000: Vec<f64> = (0..=2000).map(|k| k as f64 / 2000.0).collect();
        let v1 = quasimartingale_variation(&p1000).unwrap();
        let v2 = quasimartingale_variation(&p2000).unwrap();
        assert!(v1 <= v2 && v2 <= quasimartingale_bound(1.0));
        assert!(quasimartingale_variation(&[0.1, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn kernels_are_symmetric(s in 0.0f64..2.0, t in 0.0f64..2.0) {
            prop_assert_eq!(cov_bar(s, t, 2.0).unwrap(), cov_bar(t, s, 2.0).unwrap());
            prop_assert_eq!(cov_tilde(s, t, 2.0).unwrap(), cov_tilde(t, s, 2.0).unwrap());
            prop_assert!(cov_tilde(t, t, 2.0).unwrap() >= 0.0);
            prop_assert!(cov_bar(t, t, 2.0).unwrap() >= 0.0);
        }

        #[test]
        fn not_a_bridge_is_symmetric(t in 0.0f64..1.0) {
            let a = not_a_bridge_residual(t, 1.0).unwrap();
            let b = not_a_bridge_residual(1.0 - t, 1.0).unwrap();
            prop_assert!((a - b).abs() < 1e-15);
        }
    }
}
