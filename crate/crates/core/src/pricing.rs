//! Bond and option prices when the market observes `η_t = σ t H_T + ζ_t`.

use std::fmt::Write as _;

use crate::error::{domain, Error, Result};
use crate::grid::fmt17;
use crate::laws::LevyLaw;
use crate::model::MarketModel;
use crate::numerics::{integrate_levy_ln, ln_gauss_pdf, ln_parabolic_cylinder_d_neg, ln_poisson_pmf, Quadrature};
use crate::posterior::posterior_weights;

pub(crate) fn likelihood_quadrature() -> Quadrature {
    Quadrature { abs_tol: 1e-13, rel_tol: 1e-11, max_subdivisions: 4000, ..Default::default() }
}

/// Bond price with the posterior it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceQuote {
    pub t: f64,
    pub x: f64,
    pub price: f64,
    /// `(h_i, weight_i)` for every payoff atom.
    pub posterior: Vec<(f64, f64)>,
}

impl PriceQuote {
    pub fn csv_header(atoms: usize) -> String {
        let mut s = String::from("t,x,price");
        for i in 0..atoms {
            let _ = write!(s, ",weight_{i}");
        }
        s
    }

    pub fn csv_row(&self) -> String {
        let mut s = format!("{},{},{}", fmt17(self.t), fmt17(self.x), fmt17(self.price));
        for (_, w) in &self.posterior {
            let _ = write!(s, ",{}", fmt17(*w));
        }
        s
    }

    pub fn weights(&self) -> Vec<f64> {
        self.posterior.iter().map(|(_, w)| *w).collect()
    }
}

/// `ln q_t(h, x)` with `q_t(h,x) = ∫ p(t(T-t)/T, x - σth - (t/T)y) p^X_{T-t}(dy)`.
pub fn ln_likelihood_q(model: &MarketModel, t: f64, h: f64, x: f64) -> Result<f64> {
    model.check_interior(t)?;
    let horizon = model.horizon;
    let var = t * (horizon - t) / horizon;
    let a = t / horizon;
    let z = x - model.sigma * t * h;
    let hints = [z / a, (z + 3.0 * var.sqrt()) / a];
    let est = integrate_levy_ln(|y| ln_gauss_pdf(var, z - a * y), &model.levy, horizon - t, &likelihood_quadrature(), &hints)?;
    Ok(est.ln_value())
}

pub fn likelihood_q(model: &MarketModel, t: f64, h: f64, x: f64) -> Result<f64> {
    Ok(ln_likelihood_q(model, t, h, x)?.exp())
}

fn prior(model: &MarketModel) -> Vec<(f64, f64)> {
    model.payoff.atoms().collect()
}

/// Atom `i` with `|x - σ t h_i| <= 1e-9 max(1, |σ t|)`, if any.
pub(crate) fn matching_atom(model: &MarketModel, t: f64, x: f64) -> Option<usize> {
    let scale = model.sigma * t;
    let tol = 1e-9 * scale.abs().max(1.0);
    model
        .payoff
        .support()
        .iter()
        .enumerate()
        .map(|(i, h)| (i, (x - scale * h).abs()))
        .filter(|(_, d)| *d <= tol)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// Posterior law of `H_T` given `η_t = x`: weights `∝ q_t(h_i, x) p_i`.
///
/// At `t = 0` this is the prior; at `t = T` the observation reveals the atom
/// `x = σ T h_i`.
pub fn posterior_payoff(model: &MarketModel, t: f64, x: f64) -> Result<Vec<(f64, f64)>> {
    model.check_time(t)?;
    let support = model.payoff.support();
    if t == 0.0 || model.sigma == 0.0 {
        return Ok(prior(model));
    }
    if t == model.horizon {
        let i = matching_atom(model, t, x)
            .ok_or_else(|| Error::InconsistentObservation(format!("η_T = {x} is not σ T h for any atom")))?;
        return Ok(support.iter().enumerate().map(|(j, h)| (*h, if j == i { 1.0 } else { 0.0 })).collect());
    }
    let ln_q = support.iter().map(|&h| ln_likelihood_q(model, t, h, x)).collect::<Result<Vec<_>>>()?;
    let w = posterior_weights(&ln_q, model.payoff.probs())?;
    Ok(support.iter().copied().zip(w).collect())
}

/// `B_t^T = P_t^T E[H_T | η_t = x]`.
pub fn bond_price(model: &MarketModel, t: f64, x: f64) -> Result<PriceQuote> {
    let posterior = posterior_payoff(model, t, x)?;
    let mean: f64 = posterior.iter().map(|(h, w)| h * w).sum();
    Ok(PriceQuote { t, x, price: model.discount(t)? * mean, posterior })
}

fn binary_atoms(model: &MarketModel) -> Result<(f64, f64, f64)> {
    match (model.payoff.support(), model.payoff.probs()) {
        ([h0, h1], [_, p]) => Ok((*h0, *h1, *p)),
        _ => Err(Error::Model("binary formula needs a two-point payoff".into())),
    }
}

/// `P [ (1 + R p/(1-p))^{-1} h0 + (1 + R^{-1} (1-p)/p)^{-1} h1 ]` with
/// `R = q_1/q_0` given as `ln R`.
fn binary_formula(discount: f64, h0: f64, h1: f64, p: f64, ln_ratio: f64) -> f64 {
    let w0 = 1.0 / (1.0 + (ln_ratio + p.ln() - (1.0 - p).ln()).exp());
    let w1 = 1.0 / (1.0 + (-ln_ratio + (1.0 - p).ln() - p.ln()).exp());
    discount * (w0 * h0 + w1 * h1)
}

/// Two-point payoff, written as the explicit likelihood-ratio formula.
pub fn binary_bond_price(model: &MarketModel, t: f64, x: f64) -> Result<f64> {
    let (h0, h1, p) = binary_atoms(model)?;
    let discount = model.discount(t)?;
    if t == 0.0 || t == model.horizon || model.sigma == 0.0 {
        return Ok(bond_price(model, t, x)?.price);
    }
    let ln_ratio = ln_likelihood_q(model, t, h1, x)? - ln_likelihood_q(model, t, h0, x)?;
    Ok(binary_formula(discount, h0, h1, p, ln_ratio))
}

fn closed_form_guard(model: &MarketModel, t: f64, law_ok: bool, name: &str) -> Result<()> {
    if !law_ok {
        return Err(Error::Model(format!("{name} closed form needs the matching Lévy law")));
    }
    model.check_time(t)
}

/// Binary price for gamma noise via the parabolic cylinder function:
/// `ln(A_j B_j) = -T z_j²/(2t(T-t)) + T(T-t-z_j)²/(4t(T-t)) + ln D_{t-T}((T-t-z_j) √(T/(t(T-t))))`
/// with `z_j = x - σ t h_j`.
pub fn gamma_closed_form_price(model: &MarketModel, t: f64, x: f64) -> Result<f64> {
    closed_form_guard(model, t, model.levy == LevyLaw::Gamma, "gamma")?;
    let (h0, h1, p) = binary_atoms(model)?;
    if t == 0.0 || t == model.horizon || model.sigma == 0.0 {
        return Ok(bond_price(model, t, x)?.price);
    }
    let horizon = model.horizon;
    let tau = horizon - t;
    let ln_ab = |h: f64| -> Result<f64> {
        let z = x - model.sigma * t * h;
        let c = t * tau;
        let arg = (tau - z) * (horizon / c).sqrt();
        let ln_a = -horizon * z * z / (2.0 * c) + horizon * (tau - z) * (tau - z) / (4.0 * c);
        Ok(ln_a + ln_parabolic_cylinder_d_neg(tau, arg)?)
    };
    let ln_ratio = ln_ab(h1)? - ln_ab(h0)?;
    Ok(binary_formula(model.discount(t)?, h0, h1, p, ln_ratio))
}

/// Binary price for Poisson noise via the series
/// `A_j = Σ_i exp(z_j i/(T-t) - t i²/(2T(T-t))) (λ(T-t))^i/i!`,
/// `B_j = exp(-T z_j²/(2t(T-t)))`.
pub fn poisson_closed_form_price(model: &MarketModel, t: f64, x: f64) -> Result<f64> {
    let lambda = match model.levy {
        LevyLaw::Poisson { lambda } => lambda,
        _ => return closed_form_guard(model, t, false, "Poisson").map(|_| f64::NAN),
    };
    model.check_time(t)?;
    let (h0, h1, p) = binary_atoms(model)?;
    if t == 0.0 || t == model.horizon || model.sigma == 0.0 {
        return Ok(bond_price(model, t, x)?.price);
    }
    let horizon = model.horizon;
    let tau = horizon - t;
    let ln_ab = |h: f64| -> f64 {
        let z = x - model.sigma * t * h;
        let ln_b = -horizon * z * z / (2.0 * t * tau);
        ln_b + ln_poisson_series(z / tau, t / (2.0 * horizon * tau), lambda * tau)
    };
    let ln_ratio = ln_ab(h1) - ln_ab(h0);
    Ok(binary_formula(model.discount(t)?, h0, h1, p, ln_ratio))
}

/// `ln Σ_i exp(b i - c i²) m^i / i!` (the constant `e^{-m}` omitted).
fn ln_poisson_series(b: f64, c: f64, m: f64) -> f64 {
    let ln_term = |i: u64| b * i as f64 - c * (i as f64).powi(2) + ln_poisson_pmf(m, i) + m;
    let mut scale = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut prev = f64::NEG_INFINITY;
    let mut i = 0u64;
    loop {
        let l = ln_term(i);
        if l > scale {
            sum *= (scale - l).exp();
            scale = l;
        }
        sum += (l - scale).exp();
        // Terms are log-concave in i: once decreasing with ratio rho they
        // stay below a geometric series.
        if l < prev {
            let rho = (l - prev).exp();
            if (l - scale).exp() * rho / (1.0 - rho) < 1e-17 * sum {
                break;
            }
        }
        prev = l;
        i += 1;
    }
    scale + sum.ln()
}

/// `C_0^t = P_0^t ∫ [Σ_i (P_t^T h_i - K) q_t(h_i, x) p_i]^+ dx`.
pub fn option_value(model: &MarketModel, t: f64, strike: f64) -> Result<f64> {
    model.check_interior(t)?;
    if !(strike >= 0.0) {
        return Err(domain(format!("strike must be non-negative, got {strike}")));
    }
    let p_tt = model.discount(t)?;
    let p_0t = model.discount_from_zero(t)?;
    let support = model.payoff.support();
    let probs = model.payoff.probs();
    if support.iter().all(|h| p_tt * h <= strike) {
        return Ok(0.0);
    }
    let coef: Vec<f64> = support.iter().zip(probs).map(|(h, p)| (p_tt * h - strike) * p).collect();
    let integrand = |x: f64| -> f64 {
        let mut s = 0.0;
        for (h, c) in support.iter().zip(&coef) {
            if *c != 0.0 {
                match ln_likelihood_q(model, t, *h, x) {
                    Ok(l) => s += c * l.exp(),
                    Err(_) => return f64::NAN,
                }
            }
        }
        s.max(0.0)
    };
    let (pts, _) = observation_bracket(model, t, &model.levy, model.horizon - t, t / model.horizon, t * (model.horizon - t) / model.horizon);
    let q = Quadrature { abs_tol: 1e-12, rel_tol: 1e-9, max_subdivisions: 4000, ..Default::default() };
    let est = q.integrate_with_breaks(integrand, &pts)?;
    if est.value.is_nan() {
        return Err(Error::Quadrature { estimate: est.value, error: est.error, subdivisions: 0 });
    }
    Ok(p_0t * est.value)
}

/// Integration points for an observation `σ t h + G + a Y`, with `G` centred
/// Gaussian of variance `var` and `Y ~ p^X_{s}`: a bracket holding all but a
/// negligible part of the mass, plus breakpoints at the Gaussian centres.
pub(crate) fn observation_bracket(
    model: &MarketModel,
    t: f64,
    law: &LevyLaw,
    s: f64,
    a: f64,
    var: f64,
) -> (Vec<f64>, (f64, f64)) {
    let sd = var.sqrt();
    let centres: Vec<f64> = model.payoff.support().iter().map(|h| model.sigma * t * h).collect();
    let lo_c = centres.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_c = centres.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shift = a * law.upper_bound(s);
    let (lo, hi) = (lo_c - 12.0 * sd + shift.min(0.0), hi_c + 12.0 * sd + shift.max(0.0));
    let mut pts = vec![lo, hi];
    let mean_shift = a * law.mean_rate() * s;
    for c in &centres {
        for k in [-3.0, -1.0, 0.0, 1.0, 3.0] {
            pts.push(c + k * sd);
            pts.push(c + mean_shift + k * sd);
        }
        if let LevyLaw::Poisson { .. } = law {
            let n_max = law.upper_bound(s) as usize;
            for n in 1..=n_max.min(64) {
                pts.push(c + a * n as f64);
            }
        }
    }
    pts.retain(|p| *p >= lo && *p <= hi);
    (pts, (lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::PayoffDistribution;
    use crate::model::RateCurve;
    use crate::numerics::gauss_pdf;

    fn model(levy: LevyLaw) -> MarketModel {
        MarketModel::new(1.0, 1.0, PayoffDistribution::binary(0.0, 1.0, 0.5).unwrap(), levy).unwrap()
    }

    #[test]
    fn likelihood_without_noise_is_bridge_density() {
        let m = model(LevyLaw::None);
        for &(t, h, x) in &[(0.3, 1.0, 0.2), (0.7, 0.0, -0.4)] {
            let q = likelihood_q(&m, t, h, x).unwrap();
            let exact = gauss_pdf(t * (1.0 - t), x - t * h);
            assert!((q - exact).abs() < 1e-14 * exact);
        }
    }

    #[test]
    fn likelihood_is_normalized() {
        let m = model(LevyLaw::Gamma);
        let q = Quadrature::with_tolerances(1e-12, 1e-10);
        let (pts, _) = observation_bracket(&m, 0.5, &m.levy, 0.5, 0.5, 0.25);
        let mass = q.integrate_with_breaks(|x| likelihood_q(&m, 0.5, 1.0, x).unwrap(), &pts).unwrap();
        assert!((mass.value - 1.0).abs() < 1e-8, "{}", mass.value);
    }

    #[test]
    fn zero_sigma_carries_no_information() {
        let mut m = model(LevyLaw::Gamma);
        m.sigma = 0.0;
        let a = likelihood_q(&m, 0.4, 0.0, 0.3).unwrap();
        let b = likelihood_q(&m, 0.4, 1.0, 0.3).unwrap();
        assert_eq!(a, b);
        assert_eq!(bond_price(&m, 0.4, 0.3).unwrap().price, 0.5);
    }

    #[test]
    fn early_posterior_is_prior_and_late_posterior_is_sharp() {
        let m = model(LevyLaw::Gamma);
        let w = posterior_payoff(&m, 1e-6, 0.0).unwrap();
        assert!((w[1].1 - 0.5).abs() < 1e-6);
        let w = posterior_payoff(&m, 0.999, 0.999).unwrap();
        // Gamma noise has a heavy enough small-time tail that h0 keeps some weight.
        assert!(w[1].1 > 0.999, "{w:?}");
        let closer = posterior_payoff(&m, 0.99999, 0.99999).unwrap();
        assert!(closer[1].1 > w[1].1);
        let end = bond_price(&m, 1.0, 1.0).unwrap();
        assert_eq!(end.price, 1.0);
        assert!(bond_price(&m, 1.0, 0.5).is_err());
        assert_eq!(bond_price(&m, 0.0, 0.0).unwrap().price, 0.5);
    }

    #[test]
    fn binary_formula_matches_generic_posterior() {
        for levy in [LevyLaw::Gamma, LevyLaw::Poisson { lambda: 1.0 }] {
            let m = model(levy).with_rate(RateCurve::Flat { value: 0.03 }).unwrap();
            for &(t, x) in &[(0.2, 0.1), (0.5, 0.7), (0.8, 1.5)] {
                let a = bond_price(&m, t, x).unwrap().price;
                let b = binary_bond_price(&m, t, x).unwrap();
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn gamma_closed_form_agrees_with_quadrature() {
        let m = model(LevyLaw::Gamma);
        let generic = binary_bond_price(&m, 0.5, 0.7).unwrap();
        let closed = gamma_closed_form_price(&m, 0.5, 0.7).unwrap();
        assert!(((closed - generic) / generic).abs() < 1e-5, "{closed} vs {generic}");
    }

    #[test]
    fn alternative_gamma_scaling_disagrees() {
        // The D argument scaled by √(t/(T(T-t))) instead of √(T/(t(T-t))) does
        // not reproduce the quadrature price once T != 1.
        let mut m = model(LevyLaw::Gamma);
        m.horizon = 2.0;
        let (t, x) = (0.6, 0.9);
        let generic = binary_bond_price(&m, t, x).unwrap();
        let closed = gamma_closed_form_price(&m, t, x).unwrap();
        assert!(((closed - generic) / generic).abs() < 1e-5);
        let tau = m.horizon - t;
        let ln_ab = |h: f64| {
            let z = x - t * h;
            let c = t * tau;
            let arg = (tau - z) * (t / (m.horizon * tau)).sqrt();
            -m.horizon * z * z / (2.0 * c) + m.horizon * (tau - z) * (tau - z) / (4.0 * c) + ln_parabolic_cylinder_d_neg(tau, arg).unwrap()
        };
        let alt = binary_formula(1.0, 0.0, 1.0, 0.5, ln_ab(1.0) - ln_ab(0.0));
        assert!(((alt - generic) / generic).abs() > 1e-3, "{alt} vs {generic}");
    }

    #[test]
    fn poisson_closed_form_agrees_with_series() {
        let m = model(LevyLaw::Poisson { lambda: 1.0 });
        for &(t, x) in &[(0.5, 0.7), (0.1, 0.0), (0.9, 2.3)] {
            let generic = binary_bond_price(&m, t, x).unwrap();
            let closed = poisson_closed_form_price(&m, t, x).unwrap();
            assert!(((closed - generic) / generic).abs() < 1e-8, "{closed} vs {generic}");
        }
        assert!(poisson_closed_form_price(&model(LevyLaw::Gamma), 0.5, 0.1).is_err());
    }

    #[test]
    fn option_limits() {
        let m = model(LevyLaw::Gamma);
        let atm = option_value(&m, 0.5, 0.0).unwrap();
        assert!((atm - 0.5).abs() < 1e-6, "{atm}");
        assert_eq!(option_value(&m, 0.5, 1.0).unwrap(), 0.0);
        let mid = option_value(&m, 0.5, 0.5).unwrap();
        assert!(mid > 0.0 && mid < 0.5);
    }
}
