//! Pricing when the market observes
//! `κ_t = σ t H_T + μ (t∧τ) X_{τ-t∧τ} + W_{t∧τ} - ((t∧τ)/τ) W_τ`.
//!
//! Before default the observation has a density in `x` mixing bridges of
//! random length `τ`; from `τ` on it sits exactly on the ray `σ t h`, which
//! reveals both the default and the payoff.

use crate::error::{domain, Error, Result};
use crate::grid::fmt17;
use crate::laws::DefaultTimeLaw;
use crate::model::MarketModel;
use crate::numerics::{integrate_levy_ln, ln_gauss_pdf, Quadrature};
use crate::posterior::posterior_weights;
use crate::pricing::{likelihood_quadrature, matching_atom, observation_bracket};

/// Number of cells a continuous default-time law is split into when
/// reporting the joint posterior.
pub const DENSITY_CELLS: usize = 16;

/// `1{τ <= t}` read off the path: true iff `x = σ t h_i` for some atom
/// (within `1e-9 max(1, |σ t|)`).
pub fn default_indicator(model: &MarketModel, t: f64, x: f64) -> bool {
    t > 0.0 && model.sigma != 0.0 && matching_atom(model, t, x).is_some()
}

/// Payoff atom revealed by a default-ray observation. Pricing treats a ray
/// point that no default can have produced (`F_τ(t) = 0`) as an ordinary
/// survival value.
fn defaulted_atom(model: &MarketModel, law: &DefaultTimeLaw, t: f64, x: f64) -> Option<usize> {
    if !(t > 0.0) || model.sigma == 0.0 || !(law.cdf(t) > 0.0) {
        return None;
    }
    matching_atom(model, t, x)
}

/// Density of `κ_t` at `x` given `τ = r > t` and `H_T = h`:
/// `∫ p(t(r-t)/r, x - σth - μty) p^X_{r-t}(dy)`, as a logarithm.
pub fn ln_survival_likelihood(model: &MarketModel, t: f64, x: f64, r: f64, h: f64) -> Result<f64> {
    if !(t > 0.0 && r > t) {
        return Err(domain(format!("survival likelihood needs 0 < t < r, got t={t}, r={r}")));
    }
    let var = t * (r - t) / r;
    let z = x - model.sigma * t * h;
    let slope = model.levy_drift_scale * t;
    if slope == 0.0 {
        return Ok(ln_gauss_pdf(var, z));
    }
    let hints = [z / slope, (z + 3.0 * var.sqrt()) / slope, (z - 3.0 * var.sqrt()) / slope];
    let est = integrate_levy_ln(|y| ln_gauss_pdf(var, z - slope * y), &model.levy, r - t, &likelihood_quadrature(), &hints)?;
    Ok(est.ln_value())
}

/// `q_t(x, r, h)` with respect to the dominating measure
/// `dx + Σ_i δ_{σ t h_i}(dx)`: for `r <= t` the indicator that `x` is the ray
/// point of `h`; for `r > t` the survival density.
pub fn likelihood_q_kappa(model: &MarketModel, t: f64, x: f64, r: f64, h: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(domain(format!("default time must be positive, got {r}")));
    }
    if r <= t {
        let tol = 1e-9 * (model.sigma * t).abs().max(1.0);
        return Ok(if (x - model.sigma * t * h).abs() <= tol { 1.0 } else { 0.0 });
    }
    Ok(ln_survival_likelihood(model, t, x, r, h)?.exp())
}

/// `∫_{(t,T]} g(r) L(x; r, h) P_τ(dr)` as `value * exp(ln_scale)`.
struct ScaledMass {
    ln_scale: f64,
    value: f64,
}

impl ScaledMass {
    fn ln(&self) -> f64 {
        self.value.ln() + self.ln_scale
    }
}

fn survival_quadrature() -> Quadrature {
    Quadrature { abs_tol: 1e-13, rel_tol: 1e-10, max_subdivisions: 4000, ..Default::default() }
}

/// Likelihood contribution of `τ ∈ (t, T] ∩ cell` for one payoff atom,
/// weighted by `g(r)`. Atoms count when they lie in `(cell.0, cell.1]`.
fn survival_mass(
    model: &MarketModel,
    law: &DefaultTimeLaw,
    t: f64,
    x: f64,
    h: f64,
    cell: (f64, f64),
    g: &dyn Fn(f64) -> f64,
) -> Result<ScaledMass> {
    match law {
        DefaultTimeLaw::Atoms { times, weights } => {
            let mut terms = Vec::new();
            for (&r, &w) in times.iter().zip(weights) {
                if r > t && r > cell.0 && r <= cell.1 && w > 0.0 {
                    terms.push((r, w.ln() + ln_survival_likelihood(model, t, x, r, h)?));
                }
            }
            let m = terms.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                return Ok(ScaledMass { ln_scale: 0.0, value: 0.0 });
            }
            let value = terms.iter().map(|(r, l)| g(*r) * (l - m).exp()).sum();
            Ok(ScaledMass { ln_scale: m, value })
        }
        _ => {
            let (lo, hi) = law.support_bounds();
            let a = lo.max(t).max(cell.0);
            let hi = hi.min(cell.1);
            if hi <= a {
                return Ok(ScaledMass { ln_scale: 0.0, value: 0.0 });
            }
            // r = a + (hi - a) w² tames the behaviour of L near r = t.
            let width = hi - a;
            let ln_integrand = |w: f64| -> Result<f64> {
                let r = a + width * w * w;
                if r <= t {
                    return Ok(f64::NEG_INFINITY);
                }
                let dens = law.density(r).unwrap_or(0.0);
                if dens <= 0.0 || w <= 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                Ok(ln_survival_likelihood(model, t, x, r, h)? + dens.ln() + (2.0 * width * w).ln())
            };
            let mut m = f64::NEG_INFINITY;
            for k in 1..=32 {
                m = m.max(ln_integrand(k as f64 / 32.0)?);
            }
            if m == f64::NEG_INFINITY {
                return Ok(ScaledMass { ln_scale: 0.0, value: 0.0 });
            }
            let mut failure = None;
            let est = survival_quadrature().integrate(
                |w| match ln_integrand(w) {
                    Ok(l) if l == f64::NEG_INFINITY => 0.0,
                    Ok(l) => g(a + width * w * w) * (l - m).exp(),
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                },
                0.0,
                1.0,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(ScaledMass { ln_scale: m, value: est.value })
        }
    }
}

/// `∫_{(0,t] ∩ cell} g(r) P_τ(dr)`.
fn default_mass(law: &DefaultTimeLaw, t: f64, cell: (f64, f64), g: &dyn Fn(f64) -> f64) -> Result<f64> {
    match law {
        DefaultTimeLaw::Atoms { times, weights } => Ok(times
            .iter()
            .zip(weights)
            .filter(|(r, _)| **r <= t && **r > cell.0 && **r <= cell.1)
            .map(|(r, w)| g(*r) * w)
            .sum()),
        _ => {
            let (lo, _) = law.support_bounds();
            let (a, b) = (lo.max(cell.0), t.min(cell.1));
            if b <= a {
                return Ok(0.0);
            }
            let est = survival_quadrature().integrate(|r| g(r) * law.density(r).unwrap_or(0.0), a, b)?;
            Ok(est.value)
        }
    }
}

/// `E[g(τ, H_T) | κ_t = x]`.
///
/// On default (`x = σ t h_i`) this is `∫_{(0,t]} g(r, h_i) P_τ(dr) / F_τ(t)`;
/// otherwise the Bayes ratio over `τ ∈ (t, T]` and the payoff atoms.
pub fn posterior_tau_payoff<G: Fn(f64, f64) -> f64>(model: &MarketModel, t: f64, x: f64, g: G) -> Result<f64> {
    let law = model.require_default_law()?;
    if !(t > 0.0 && t <= model.horizon) {
        return Err(domain(format!("time {t} outside (0, {}]", model.horizon)));
    }
    if let Some(i) = defaulted_atom(model, law, t, x) {
        let f = law.cdf(t);
        let h = model.payoff.support()[i];
        return Ok(default_mass(law, t, ALL, &|r| g(r, h))? / f);
    }
    let support = model.payoff.support();
    let probs = model.payoff.probs();
    let mut num = Vec::with_capacity(support.len());
    let mut den = Vec::with_capacity(support.len());
    for &h in support {
        num.push(survival_mass(model, law, t, x, h, ALL, &|r| g(r, h))?);
        den.push(survival_mass(model, law, t, x, h, ALL, &|_| 1.0)?);
    }
    let m = den.iter().map(|d| d.ln_scale).fold(f64::NEG_INFINITY, f64::max);
    let total_den: f64 = den.iter().zip(probs).map(|(d, p)| p * d.value * (d.ln_scale - m).exp()).sum();
    if !(total_den > 0.0) {
        return Err(Error::InconsistentObservation(format!("κ_t = {x} off the default ray has zero survival likelihood")));
    }
    let total_num: f64 = num.iter().zip(probs).map(|(n, p)| p * n.value * (n.ln_scale - m).exp()).sum();
    Ok(total_num / total_den)
}

/// Posterior weight of one `(τ-cell, h)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct JointWeight {
    /// Default-time cell `(r_lo, r_hi]`; `r_lo == r_hi` for an atom.
    pub r_lo: f64,
    pub r_hi: f64,
    pub h: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefaultQuote {
    pub t: f64,
    pub x: f64,
    pub defaulted: bool,
    pub price: f64,
    pub posterior_joint: Vec<JointWeight>,
}

impl DefaultQuote {
    pub const CSV_HEADER: &'static str = "t,x,defaulted,price";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", fmt17(self.t), fmt17(self.x), self.defaulted, fmt17(self.price))
    }

    /// Marginal posterior of `H_T`.
    pub fn payoff_marginal(&self, support: &[f64]) -> Vec<f64> {
        support
            .iter()
            .map(|h| self.posterior_joint.iter().filter(|j| j.h == *h).map(|j| j.weight).sum())
            .collect()
    }
}

/// Default-time cells on `(a, b]`: each atom, or [`DENSITY_CELLS`] equal cells.
fn tau_cells(law: &DefaultTimeLaw, a: f64, b: f64) -> Vec<(f64, f64)> {
    match law {
        DefaultTimeLaw::Atoms { times, weights } => times
            .iter()
            .zip(weights)
            .filter(|(r, w)| **r > a && **r <= b && **w > 0.0)
            .map(|(r, _)| (*r, *r))
            .collect(),
        _ => {
            let (lo, hi) = law.support_bounds();
            let (a, b) = (a.max(lo), b.min(hi));
            if b <= a {
                return Vec::new();
            }
            let n = DENSITY_CELLS;
            (0..n).map(|k| (a + (b - a) * k as f64 / n as f64, a + (b - a) * (k + 1) as f64 / n as f64)).collect()
        }
    }
}

/// Half-open range selecting one cell from [`tau_cells`].
fn cell_range((lo, hi): (f64, f64)) -> (f64, f64) {
    if lo == hi { (f64::from_bits(lo.to_bits() - 1), hi) } else { (lo, hi) }
}

const ALL: (f64, f64) = (f64::NEG_INFINITY, f64::INFINITY);

/// `B_t^T` in the default model, with the joint posterior of `(τ, H_T)`.
pub fn bond_price_default(model: &MarketModel, t: f64, x: f64) -> Result<DefaultQuote> {
    let law = model.require_default_law()?.clone();
    model.check_time(t)?;
    let discount = model.discount(t)?;
    let support = model.payoff.support();

    if t == 0.0 {
        // Nothing observed yet: the prior.
        let mut joint = Vec::new();
        for (&h, &p) in support.iter().zip(model.payoff.probs()) {
            for cell in tau_cells(&law, 0.0, model.horizon) {
                let w = default_mass(&law, model.horizon, cell_range(cell), &|_| 1.0)?;
                joint.push(JointWeight { r_lo: cell.0, r_hi: cell.1, h, weight: p * w });
            }
        }
        return Ok(DefaultQuote { t, x, defaulted: false, price: discount * model.payoff.mean(), posterior_joint: joint });
    }
    if let Some(i) = defaulted_atom(model, &law, t, x) {
        let f = law.cdf(t);
        let h = support[i];
        let mut joint = Vec::new();
        for (lo, hi) in tau_cells(&law, 0.0, t) {
            let w = default_mass(&law, t, cell_range((lo, hi)), &|_| 1.0)? / f;
            joint.push(JointWeight { r_lo: lo, r_hi: hi, h, weight: w });
        }
        return Ok(DefaultQuote { t, x, defaulted: true, price: discount * h, posterior_joint: joint });
    }
    if t >= model.horizon {
        return Err(Error::InconsistentObservation(format!("κ_T = {x} must lie on the default ray")));
    }

    // Survival branch: one Bayes update over (cell, atom) pairs.
    let cells = tau_cells(&law, t, model.horizon);
    let mut ln_like = Vec::new();
    let mut prior = Vec::new();
    let mut labels = Vec::new();
    for (&h, &p) in support.iter().zip(model.payoff.probs()) {
        for &(lo, hi) in &cells {
            let m = survival_mass(model, &law, t, x, h, cell_range((lo, hi)), &|_| 1.0)?;
            ln_like.push(m.ln());
            prior.push(p);
            labels.push((lo, hi, h));
        }
    }
    let w = posterior_weights(&ln_like, &prior).map_err(|e| match e {
        Error::ZeroLikelihood => Error::InconsistentObservation(format!("κ_t = {x} has zero survival likelihood")),
        other => other,
    })?;
    let mean: f64 = labels.iter().zip(&w).map(|((_, _, h), w)| h * w).sum();
    let joint = labels
        .into_iter()
        .zip(w)
        .map(|((r_lo, r_hi, h), weight)| JointWeight { r_lo, r_hi, h, weight })
        .collect();
    Ok(DefaultQuote { t, x, defaulted: false, price: discount * mean, posterior_joint: joint })
}

/// Two-point payoff in the default model, written as the likelihood-ratio
/// formula on the survival branch.
pub fn binary_bond_price_default(model: &MarketModel, t: f64, x: f64) -> Result<f64> {
    let law = model.require_default_law()?;
    let (h0, h1, p) = match (model.payoff.support(), model.payoff.probs()) {
        ([h0, h1], [_, p]) => (*h0, *h1, *p),
        _ => return Err(Error::Model("binary formula needs a two-point payoff".into())),
    };
    if !(t > 0.0 && t <= model.horizon) {
        return Err(domain(format!("time {t} outside (0, {}]", model.horizon)));
    }
    let discount = model.discount(t)?;
    if let Some(i) = defaulted_atom(model, law, t, x) {
        return Ok(discount * model.payoff.support()[i]);
    }
    let s0 = survival_mass(model, law, t, x, h0, ALL, &|_| 1.0)?.ln();
    let s1 = survival_mass(model, law, t, x, h1, ALL, &|_| 1.0)?.ln();
    if s0 == f64::NEG_INFINITY && s1 == f64::NEG_INFINITY {
        return Err(Error::InconsistentObservation(format!("κ_t = {x} has zero survival likelihood")));
    }
    let ln_ratio = s1 - s0;
    let w0 = 1.0 / (1.0 + (ln_ratio + p.ln() - (1.0 - p).ln()).exp());
    let w1 = 1.0 / (1.0 + (-ln_ratio + (1.0 - p).ln() - p.ln()).exp());
    Ok(discount * (w0 * h0 + w1 * h1))
}

/// `C_0^t = P_0^t F_τ(t) Σ_j (P_t^T h_j - K)^+ p_j
///        + P_0^t ∫ [Σ_j (P_t^T h_j - K) S_j(x) p_j]^+ dx`
/// with `S_j(x) = ∫_{(t,T]} L(x; r, h_j) P_τ(dr)`.
pub fn option_value_default(model: &MarketModel, t: f64, strike: f64) -> Result<f64> {
    let law = model.require_default_law()?;
    model.check_interior(t)?;
    if !(strike >= 0.0) {
        return Err(domain(format!("strike must be non-negative, got {strike}")));
    }
    let p_tt = model.discount(t)?;
    let p_0t = model.discount_from_zero(t)?;
    let support = model.payoff.support();
    let probs = model.payoff.probs();
    let f = law.cdf(t);
    let defaulted: f64 = support.iter().zip(probs).map(|(h, p)| (p_tt * h - strike).max(0.0) * p).sum::<f64>() * f;
    if f >= 1.0 || support.iter().all(|h| p_tt * h <= strike) {
        return Ok(p_0t * defaulted);
    }
    let coef: Vec<f64> = support.iter().zip(probs).map(|(h, p)| (p_tt * h - strike) * p).collect();
    let mut failure = None;
    let integrand = |x: f64| -> f64 {
        let mut s = 0.0;
        for (h, c) in support.iter().zip(&coef) {
            if *c == 0.0 {
                continue;
            }
            match survival_mass(model, law, t, x, *h, ALL, &|_| 1.0) {
                Ok(m) => s += c * m.value * m.ln_scale.exp(),
                Err(e) => {
                    failure = Some(e);
                    return 0.0;
                }
            }
        }
        s.max(0.0)
    };
    let pts = survival_bracket(model, law, t);
    let q = Quadrature { abs_tol: 1e-12, rel_tol: 1e-9, max_subdivisions: 4000, ..Default::default() };
    let est = q.integrate_with_breaks(integrand, &pts)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(p_0t * (defaulted + est.value))
}

/// Integration points in `x` for the survival density of `κ_t`.
fn survival_bracket(model: &MarketModel, law: &DefaultTimeLaw, t: f64) -> Vec<f64> {
    let (_, r_hi) = law.support_bounds();
    let r_hi = r_hi.max(t);
    // Largest bridge variance over r in (t, T].
    let var = (t * (r_hi - t) / r_hi).max(1e-6 * t);
    let slope = model.levy_drift_scale * t;
    observation_bracket(model, t, &model.levy, r_hi - t, slope, var).0
}
