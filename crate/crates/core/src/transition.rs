//! Transition density of `ζ_t = W_t - (t/T) W_T + (t/T) X_{T-t}`.
//!
//! Given `ζ_t = x`, write `X_{T-t} = y1 + y2` with `y1 = X_{T-t} - X_{T-u}`
//! (law `p^X_{u-t}`) and `y2 = X_{T-u}` (law `p^X_{T-u}`). Then
//!
//! ```text
//! Ψ(x, y) = ∫∫ p(v_u, y - (u/T) y2 - ((T-u)/(T-t)) (x - (t/T)(y1 + y2)))
//!              p(v_t, x - (t/T)(y1 + y2)) p^X_{u-t}(dy1) p^X_{T-u}(dy2)
//!           / ∫ p(v_t, x - (t/T) y) p^X_{T-t}(dy)
//! ```
//!
//! with `v_t = t(T-t)/T` and `v_u = (T-u)(u-t)/(T-t)`.

use crate::error::{domain, Result};
use crate::laws::LevyLaw;
use crate::model::MarketModel;
use crate::numerics::{integrate_levy_ln, ln_gauss_pdf, Quadrature};

/// `y ↦ Ψ_{t,u}(x, y)` for fixed `(t, u, x)`; the normalizer is computed once.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    law: LevyLaw,
    horizon: f64,
    t: f64,
    u: f64,
    x: f64,
    ln_normalizer: f64,
    outer: Quadrature,
    inner: Quadrature,
}

impl TransitionKernel {
    pub fn new(law: LevyLaw, horizon: f64, t: f64, u: f64, x: f64) -> Result<Self> {
        if !(0.0 < t && t < u && u < horizon) {
            return Err(domain(format!("need 0 < t < u < T, got t={t}, u={u}, T={horizon}")));
        }
        law.validate()?;
        // The inner integral gets the tighter tolerance, so that its error
        // does not dominate the outer one.
        let outer = Quadrature { abs_tol: 1e-12, rel_tol: 1e-9, max_subdivisions: 4000, ..Default::default() };
        let inner = Quadrature { rel_tol: 1e-10, ..outer };
        let a = t / horizon;
        let var_t = t * (horizon - t) / horizon;
        let norm = integrate_levy_ln(|y| ln_gauss_pdf(var_t, x - a * y), &law, horizon - t, &outer, &[x / a])?;
        Ok(TransitionKernel { law, horizon, t, u, x, ln_normalizer: norm.ln_value(), outer, inner })
    }

    /// `ln Ψ(x, y)`.
    pub fn ln_density(&self, y: f64) -> Result<f64> {
        let (horizon, t, u, x) = (self.horizon, self.t, self.u, self.x);
        let a_t = t / horizon;
        let a_u = u / horizon;
        let shrink = (horizon - u) / (horizon - t);
        let var_t = t * (horizon - t) / horizon;
        let var_u = shrink * (u - t);

        let mut failure = None;
        let ln_var_u_peak = ln_gauss_pdf(var_u, 0.0);
        let ln_inner = |y2: f64| -> f64 {
            // X is non-negative, so x - (t/T)(y1 + y2) <= x - (t/T) y2. When
            // that bounds the integrand below e^{-700} relative to the
            // normalizer the node cannot matter, and the inner integral would
            // only be fighting rounding in exponents of size ~y2².
            let bt_max = x - a_t * y2;
            if bt_max < 0.0 && ln_gauss_pdf(var_t, bt_max) + ln_var_u_peak < self.ln_normalizer - 700.0 {
                return f64::NEG_INFINITY;
            }
            let target = y - a_u * y2;
            // Peaks in y1 of the two Gaussian factors.
            let p1 = x / a_t - y2;
            let p2 = (x - target / shrink) / a_t - y2;
            let est = integrate_levy_ln(
                |y1| {
                    let bt = x - a_t * (y1 + y2);
                    ln_gauss_pdf(var_u, target - shrink * bt) + ln_gauss_pdf(var_t, bt)
                },
                &self.law,
                u - t,
                &self.inner,
                &[p1, p2],
            );
            match est {
                Ok(e) => e.ln_value(),
                Err(e) => {
                    failure = Some(e);
                    f64::NAN
                }
            }
        };
        let hints = [y / a_u, x / a_t];
        let outer = integrate_levy_ln(ln_inner, &self.law, horizon - u, &self.outer, &hints);
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(outer?.ln_value() - self.ln_normalizer)
    }

    pub fn density(&self, y: f64) -> Result<f64> {
        Ok(self.ln_density(y)?.exp())
    }

    /// Interval carrying all but a negligible part of `Ψ(x, ·)`, with interior
    /// breakpoints.
    pub fn support_points(&self) -> Vec<f64> {
        let (horizon, t, u, x) = (self.horizon, self.t, self.u, self.x);
        let a_t = t / horizon;
        let shrink = (horizon - u) / (horizon - t);
        let var_t = t * (horizon - t) / horizon;
        let sd_u = (shrink * (u - t)).sqrt();
        // Posterior of X_{T-t} given ζ_t = x cannot put mass far beyond where
        // the bridge density vanishes.
        let y_max = ((x + 12.0 * var_t.sqrt()) / a_t).max(0.0).min(self.law.upper_bound(horizon - t));
        let centre = shrink * x;
        let lo = centre - shrink * a_t * y_max - 12.0 * sd_u;
        let hi = centre + (u / horizon) * y_max + 12.0 * sd_u;
        let mut pts = vec![lo, hi];
        for k in -4..=4 {
            pts.push(centre + k as f64 * sd_u);
        }
        pts.retain(|p| *p >= lo && *p <= hi);
        pts
    }

    /// Range for plotting: the part of [`Self::support_points`] where the
    /// density is within `e^{-20}` of its largest value on a 200-cell probe.
    pub fn plot_range(&self) -> Result<(f64, f64)> {
        const CELLS: usize = 200;
        let pts = self.support_points();
        let lo = pts.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = pts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ys: Vec<f64> = (0..=CELLS).map(|k| lo + (hi - lo) * k as f64 / CELLS as f64).collect();
        let ln: Vec<f64> = crate::par::map_indexed(ys.len(), |k| self.ln_density(ys[k])).into_iter().collect::<Result<_>>()?;
        let top = ln.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let first = ln.iter().position(|v| *v >= top - 20.0).unwrap_or(0);
        let last = ln.iter().rposition(|v| *v >= top - 20.0).unwrap_or(CELLS);
        Ok((ys[first.saturating_sub(1)], ys[(last + 1).min(CELLS)]))
    }
}

/// `Ψ_{t,u}(x, y)` for the noise law of `model`.
pub fn transition_density_psi(model: &MarketModel, t: f64, u: f64, x: f64, y: f64) -> Result<f64> {
    TransitionKernel::new(model.levy, model.horizon, t, u, x)?.density(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gauss_pdf;

    #[test]
    fn reduces_to_bridge_transition_without_noise() {
        let k = TransitionKernel::new(LevyLaw::None, 1.0, 0.3, 0.6, 0.4).unwrap();
        for &y in &[-0.5, 0.1, 0.3, 0.9] {
            let exact = gauss_pdf(0.4 * 0.3 / 0.7, y - 0.4 / 0.7 * 0.4);
            assert!((k.density(y).unwrap() - exact).abs() < 1e-13 * exact.max(1e-3));
        }
    }

    #[test]
    fn gamma_transition_is_normalized() {
        let k = TransitionKernel::new(LevyLaw::Gamma, 1.0, 0.3, 0.6, 0.4).unwrap();
        let q = Quadrature { abs_tol: 1e-10, rel_tol: 1e-8, ..Default::default() };
        let mass = q.integrate_with_breaks(|y| k.density(y).unwrap(), &k.support_points()).unwrap();
        assert!((mass.value - 1.0).abs() < 1e-6, "{}", mass.value);
    }

    #[test]
    fn rejects_unordered_times() {
        assert!(TransitionKernel::new(LevyLaw::Gamma, 1.0, 0.6, 0.3, 0.0).is_err());
        assert!(TransitionKernel::new(LevyLaw::Gamma, 1.0, 0.3, 1.0, 0.0).is_err());
    }

    #[test]
    fn plot_range_keeps_the_bulk() {
        let k = TransitionKernel::new(LevyLaw::Gamma, 1.0, 0.3, 0.6, 0.3).unwrap();
        let (lo, hi) = k.plot_range().unwrap();
        let q = Quadrature { abs_tol: 1e-12, rel_tol: 1e-9, ..Default::default() };
        let mass = q.integrate(|y| k.density(y).unwrap(), lo, hi).unwrap();
        assert!(mass.value > 1.0 - 1e-6, "{}", mass.value);
        let (full_lo, full_hi) = (k.support_points()[0], k.support_points()[1]);
        assert!(hi - lo < 0.5 * (full_hi - full_lo));
    }
}
