//! Parabolic cylinder function `D_p(z)`.
//!
//! For negative order `p = -ν` the function is defined through
//!
//! ```text
//! ∫_0^∞ y^{ν-1} exp(-β y² - α y) dy = (2β)^{-ν/2} Γ(ν) exp(α²/(8β)) D_{-ν}(α/√(2β))
//! ```
//!
//! with `β = 1/2`, i.e. `D_{-ν}(z) = exp(-z²/4)/Γ(ν) ∫_0^∞ y^{ν-1} exp(-y²/2 - z y) dy`,
//! and the integral is evaluated by adaptive quadrature. Non-negative orders
//! are reached from two negative ones by `D_{p+1}(z) = z D_p(z) - p D_{p-1}(z)`.

use super::quadrature::Quadrature;
use crate::error::{domain, Result};

fn pcf_quadrature() -> Quadrature {
    Quadrature { abs_tol: 0.0, rel_tol: 1e-13, max_subdivisions: 4000, ..Default::default() }
}

/// `ln ∫_0^∞ y^{ν-1} exp(-y²/2 - z y) dy` for `ν > 0`.
fn ln_power_gauss_integral(nu: f64, z: f64) -> Result<f64> {
    // Exponent -y²/2 - zy peaks at y* = max(0, -z); factor out its value.
    let y_star = (-z).max(0.0);
    let phi_star = if z < 0.0 { 0.5 * z * z } else { 0.0 };
    let phi = |y: f64| -0.5 * y * y - z * y - phi_star;
    let q = pcf_quadrature();

    let mut breaks = vec![y_star, y_star + 1.0, y_star + 4.0];
    if y_star > 1.0 {
        breaks.push(y_star - 1.0);
        breaks.push((y_star - 4.0).max(0.5));
    }
    if z > 1.0 {
        breaks.push(1.0 / z);
        breaks.push(5.0 / z);
    }

    // [0, 1]: in w = y^ν when ν < 1 to remove the endpoint singularity.
    let mut head_pts = vec![0.0, 1.0];
    let head = if nu < 1.0 {
        head_pts.extend(breaks.iter().filter(|b| **b > 0.0 && **b < 1.0).map(|b| b.powf(nu)));
        q.integrate_with_breaks(|w| phi(w.powf(1.0 / nu)).exp() / nu, &head_pts)?
    } else {
        head_pts.extend(breaks.iter().copied().filter(|b| *b > 0.0 && *b < 1.0));
        q.integrate_with_breaks(|y| ((nu - 1.0) * y.ln() + phi(y)).exp(), &head_pts)?
    };
    let tail = q.integrate_to_infinity(|y| ((nu - 1.0) * y.ln() + phi(y)).exp(), 1.0, &breaks)?;
    Ok((head.value + tail.value).ln() + phi_star)
}

/// `ln D_{-ν}(z)` for `ν > 0` (the function is positive there).
pub fn ln_parabolic_cylinder_d_neg(nu: f64, z: f64) -> Result<f64> {
    if !(nu > 0.0) || !z.is_finite() {
        return Err(domain(format!("D_{{-ν}}(z) needs ν > 0 and finite z, got ν={nu}, z={z}")));
    }
    Ok(-0.25 * z * z - libm::lgamma(nu) + ln_power_gauss_integral(nu, z)?)
}

/// `D_p(z)` for any real order `p`.
pub fn parabolic_cylinder_d(order: f64, z: f64) -> Result<f64> {
    if !order.is_finite() {
        return Err(domain(format!("order must be finite, got {order}")));
    }
    if order < 0.0 {
        return Ok(ln_parabolic_cylinder_d_neg(-order, z)?.exp());
    }
    // Start from p0 in [-1, 0) and p0 - 1, then step the order up.
    let p0 = order - order.floor() - 1.0;
    let mut lower = ln_parabolic_cylinder_d_neg(1.0 - p0, z)?.exp(); // D_{p0-1}
    let mut current = ln_parabolic_cylinder_d_neg(-p0, z)?.exp(); // D_{p0}
    let mut p = p0;
    while p < order - 0.5 {
        let next = z * current - p * lower;
        lower = current;
        current = next;
        p += 1.0;
    }
    Ok(current)
}

/// `ln ∫_0^∞ y^{ν-1} exp(-β y² - α y) dy` through the right-hand side of the
/// identity, i.e. via [`ln_parabolic_cylinder_d_neg`].
pub fn ln_gaussian_power_integral(nu: f64, beta: f64, alpha: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(domain(format!("β must be positive, got {beta}")));
    }
    let z = alpha / (2.0 * beta).sqrt();
    Ok(-0.5 * nu * (2.0 * beta).ln() + libm::lgamma(nu) + alpha * alpha / (8.0 * beta) + ln_parabolic_cylinder_d_neg(nu, z)?)
}

pub fn gaussian_power_integral(nu: f64, beta: f64, alpha: f64) -> Result<f64> {
    Ok(ln_gaussian_power_integral(nu, beta, alpha)?.exp())
}
