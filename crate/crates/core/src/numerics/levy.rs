//! `∫ f(y) p^X_t(dy)` for the supported Lévy laws.
//!
//! Integrands are handled in log form internally: the caller's function is
//! split into `ln|f|` and a sign, and the sum or integral is carried relative
//! to a scale `exp(M)` close to the integrand's maximum. Likelihood ratios
//! far in the tails then keep their relative accuracy instead of underflowing.

use super::density::{ln_gamma_density, ln_poisson_pmf};
use super::quadrature::{Estimate, Quadrature};
use crate::error::{domain, Error, Result};
use crate::laws::LevyLaw;

/// An integral reported as `value * exp(ln_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledEstimate {
    pub ln_scale: f64,
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl ScaledEstimate {
    /// `ln` of the integral; `-inf` when it vanishes.
    pub fn ln_value(&self) -> f64 {
        self.value.ln() + self.ln_scale
    }

    pub fn unscaled(&self) -> f64 {
        self.value * self.ln_scale.exp()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum AbsTol {
    /// `abs_tol` refers to the unscaled integral.
    Unscaled,
    /// `abs_tol` refers to the scaled integral (relative to the peak).
    Scaled,
}

/// `∫ f(y) p^X_t(dy)`.
pub fn integrate_levy<F: FnMut(f64) -> f64>(f: F, law: &LevyLaw, t: f64, q: &Quadrature) -> Result<Estimate> {
    integrate_levy_hinted(f, law, t, q, &[])
}

/// As [`integrate_levy`], with points where `f` has features (peaks, kinks).
pub fn integrate_levy_hinted<F: FnMut(f64) -> f64>(
    mut f: F,
    law: &LevyLaw,
    t: f64,
    q: &Quadrature,
    hints: &[f64],
) -> Result<Estimate> {
    let s = levy_core(
        &mut |y| {
            let v = f(y);
            (v.abs().ln(), if v < 0.0 { -1.0 } else { 1.0 })
        },
        law,
        t,
        q,
        hints,
        AbsTol::Unscaled,
    )?;
    let k = s.ln_scale.exp();
    Ok(Estimate { value: s.value * k, error: s.error * k, evaluations: s.evaluations })
}

/// `∫ exp(ln_f(y)) p^X_t(dy)` returned in scaled form. `q.abs_tol` applies to
/// the scaled value, so it acts as a tolerance relative to the peak of the
/// integrand.
pub fn integrate_levy_ln<F: FnMut(f64) -> f64>(
    mut ln_f: F,
    law: &LevyLaw,
    t: f64,
    q: &Quadrature,
    hints: &[f64],
) -> Result<ScaledEstimate> {
    levy_core(&mut |y| (ln_f(y), 1.0), law, t, q, hints, AbsTol::Scaled)
}

type LnSigned<'a> = dyn FnMut(f64) -> (f64, f64) + 'a;

fn levy_core(
    g: &mut LnSigned<'_>,
    law: &LevyLaw,
    t: f64,
    q: &Quadrature,
    hints: &[f64],
    abs_mode: AbsTol,
) -> Result<ScaledEstimate> {
    if !(t > 0.0) {
        return Err(domain(format!("Lévy marginal needs t > 0, got {t}")));
    }
    law.validate()?;
    match *law {
        LevyLaw::None => {
            let (ln_v, sign) = g(0.0);
            if ln_v == f64::NEG_INFINITY {
                Ok(ScaledEstimate { ln_scale: 0.0, value: 0.0, error: 0.0, evaluations: 1 })
            } else {
                Ok(ScaledEstimate { ln_scale: ln_v, value: sign, error: 0.0, evaluations: 1 })
            }
        }
        LevyLaw::Poisson { lambda } => poisson_series(g, lambda * t, q, hints, abs_mode),
        LevyLaw::Gamma => gamma_integral(g, t, q, hints, abs_mode),
    }
}

fn poisson_series(
    g: &mut LnSigned<'_>,
    mean: f64,
    q: &Quadrature,
    hints: &[f64],
    abs_mode: AbsTol,
) -> Result<ScaledEstimate> {
    const MAX_TERMS: u64 = 10_000_000;
    let n_min = hints.iter().copied().filter(|h| h.is_finite()).fold(mean, f64::max);
    let mut scale = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    let mut prev_ln = f64::NEG_INFINITY;
    let mut n = 0u64;
    loop {
        let (ln_f, sign) = g(n as f64);
        let ln_term = ln_f + ln_poisson_pmf(mean, n);
        if ln_term.is_nan() {
            return Err(domain(format!("integrand is NaN at n = {n}")));
        }
        if ln_term > scale {
            let r = (scale - ln_term).exp();
            sum *= r;
            abs_sum *= r;
            scale = ln_term;
        }
        if ln_term > f64::NEG_INFINITY {
            let term = (ln_term - scale).exp();
            sum += sign * term;
            abs_sum += term;
        }

        if n as f64 > n_min && ln_term < prev_ln && scale > f64::NEG_INFINITY {
            // Terms past this point shrink at least geometrically with ratio
            // rho, provided they stay log-concave.
            let ln_rho = ln_term - prev_ln;
            let rho = ln_rho.exp();
            let term_tail = (ln_term - scale).exp() * rho / (1.0 - rho);
            // Pmf tail P(N > n) <= pmf(n+1) / (1 - mean/(n+2)).
            let ln_pmf_next = ln_poisson_pmf(mean, n + 1);
            let pmf_tail = ln_pmf_next.exp() / (1.0 - mean / (n as f64 + 2.0));
            let abs_tol = match abs_mode {
                AbsTol::Unscaled => q.abs_tol * (-scale).exp(),
                AbsTol::Scaled => q.abs_tol,
            };
            let tol = 0.1 * abs_tol.max(q.rel_tol * abs_sum);
            if term_tail <= tol && pmf_tail < q.rel_tol {
                return Ok(ScaledEstimate { ln_scale: scale, value: sum, error: term_tail, evaluations: n as usize + 1 });
            }
        }
        if ln_term == f64::NEG_INFINITY && n as f64 > n_min && scale > f64::NEG_INFINITY {
            // f vanished beyond the bulk of the law.
            let pmf_next = ln_poisson_pmf(mean, n + 1).exp();
            if pmf_next / (1.0 - mean / (n as f64 + 2.0)) < q.rel_tol {
                return Ok(ScaledEstimate { ln_scale: scale, value: sum, error: 0.0, evaluations: n as usize + 1 });
            }
        }
        prev_ln = ln_term;
        n += 1;
        if n > MAX_TERMS {
            return Err(Error::Quadrature { estimate: sum, error: f64::INFINITY, subdivisions: n as usize });
        }
        if scale == f64::NEG_INFINITY && n as f64 > n_min + 50.0 * (mean.sqrt() + 1.0) {
            // f vanished on the whole bulk of the law.
            return Ok(ScaledEstimate { ln_scale: 0.0, value: 0.0, error: 0.0, evaluations: n as usize });
        }
    }
}

fn gamma_integral(
    g: &mut LnSigned<'_>,
    s: f64,
    q: &Quadrature,
    hints: &[f64],
    abs_mode: AbsTol,
) -> Result<ScaledEstimate> {
    let ln_gamma_s1 = libm::lgamma(s + 1.0);
    let power_head = s < 1.0;
    // Log-weight of the head integrand at y in its own coordinate. For s < 1
    // the head is taken in w = y^s, which removes the y^{s-1} singularity:
    // ∫_0^1 f(y) p(y) dy = (1/Γ(s+1)) ∫_0^1 f(w^{1/s}) e^{-w^{1/s}} dw.
    let head_ln_w = |y: f64| -> f64 {
        if power_head {
            -y - ln_gamma_s1
        } else {
            ln_gamma_density(s, y)
        }
    };

    // Locate the scale near the integrand's peak.
    let upper = LevyLaw::Gamma.upper_bound(s);
    let mut scale = f64::NEG_INFINITY;
    let mut peak_y = f64::NAN;
    let mut probe = |y: f64, ln_w: f64, scale: &mut f64, peak_y: &mut f64| {
        let v = g(y).0 + ln_w;
        if v > *scale {
            *scale = v;
            *peak_y = y;
        }
    };
    for k in 1..64 {
        let w = k as f64 / 64.0;
        let y = if power_head { w.powf(1.0 / s) } else { w };
        probe(y, head_ln_w(y), &mut scale, &mut peak_y);
    }
    for k in 0..=96 {
        let y = 1.0 + (upper - 1.0) * k as f64 / 96.0;
        probe(y, ln_gamma_density(s, y), &mut scale, &mut peak_y);
    }
    for &h in hints.iter().filter(|h| h.is_finite() && **h > 0.0) {
        let ln_w = if h < 1.0 { head_ln_w(h) } else { ln_gamma_density(s, h) };
        probe(h, ln_w, &mut scale, &mut peak_y);
    }
    if scale == f64::NEG_INFINITY {
        scale = 0.0;
    }
    if scale.is_nan() {
        return Err(domain("integrand is NaN"));
    }

    let mut breaks: Vec<f64> = hints.iter().copied().filter(|h| h.is_finite() && *h > 0.0).collect();
    if peak_y.is_finite() {
        breaks.push(peak_y);
    }
    let abs_tol = match abs_mode {
        AbsTol::Unscaled => q.abs_tol * (-scale).exp(),
        AbsTol::Scaled => q.abs_tol,
    };
    let piece_q = Quadrature { abs_tol: 0.5 * abs_tol, ..*q };

    let mut eval = |y: f64, ln_w: f64| -> f64 {
        let (ln_f, sign) = g(y);
        let e = ln_f + ln_w - scale;
        if e == f64::NEG_INFINITY {
            0.0
        } else {
            sign * e.exp()
        }
    };

    let head = if power_head {
        let mut pts = vec![0.0, 1.0];
        pts.extend(breaks.iter().filter(|b| **b < 1.0).map(|b| b.powf(s)));
        piece_q.integrate_with_breaks(
            |w| {
                let y = w.powf(1.0 / s);
                eval(y, -y - ln_gamma_s1)
            },
            &pts,
        )?
    } else {
        let mut pts = vec![0.0, 1.0];
        pts.extend(breaks.iter().copied().filter(|b| *b < 1.0));
        piece_q.integrate_with_breaks(|y| eval(y, ln_gamma_density(s, y)), &pts)?
    };
    let tail = piece_q.integrate_to_infinity(|y| eval(y, ln_gamma_density(s, y)), 1.0, &breaks)?;

    Ok(ScaledEstimate {
        ln_scale: scale,
        value: head.value + tail.value,
        error: head.error + tail.error,
        evaluations: head.evaluations + tail.evaluations,
    })
}
