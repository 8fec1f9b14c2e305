use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Gaussian density with variance `var`, evaluated at deviation `d = x - mean`.
#[inline]
pub fn gauss_pdf(var: f64, d: f64) -> f64 {
    (-0.5 * d * d / var).exp() / (2.0 * PI * var).sqrt()
}

#[inline]
pub fn ln_gauss_pdf(var: f64, d: f64) -> f64 {
    -0.5 * d * d / var - 0.5 * (2.0 * PI * var).ln()
}

/// `p(t, x, y)`: Gaussian density in `x` with variance `t` and mean `y`.
pub fn gauss_density(t: f64, x: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain(format!("Gaussian variance must be positive, got {t}")));
    }
    Ok(gauss_pdf(t, x - y))
}

/// Density of `Gamma(shape t, scale 1)` at `x`; zero off `(0, ∞)`.
pub fn gamma_density(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain(format!("gamma shape must be positive, got {t}")));
    }
    Ok(if x > 0.0 { ln_gamma_density(t, x).exp() } else { 0.0 })
}

#[inline]
pub fn ln_gamma_density(t: f64, x: f64) -> f64 {
    (t - 1.0) * x.ln() - x - libm::lgamma(t)
}

/// `P(N_t = n)` for a Poisson process of intensity `lambda`.
pub fn poisson_pmf(t: f64, lambda: f64, n: u64) -> Result<f64> {
    if !(t >= 0.0 && lambda > 0.0) {
        return Err(domain(format!("need t >= 0 and lambda > 0, got t={t}, lambda={lambda}")));
    }
    Ok(ln_poisson_pmf(lambda * t, n).exp())
}

/// `ln P(N = n)` for `N ~ Poisson(mean)`.
#[inline]
pub fn ln_poisson_pmf(mean: f64, n: u64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let n = n as f64;
    n * mean.ln() - mean - libm::lgamma(n + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Quadrature;

    #[test]
    fn standard_normal_peak() {
        assert!((gauss_density(1.0, 0.0, 0.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-16);
        assert!(gauss_density(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn gauss_symmetry_and_normalisation() {
        for &(x, y) in &[(0.3, -1.2), (2.0, 0.5)] {
            assert_eq!(gauss_density(0.7, x, y).unwrap(), gauss_density(0.7, y, x).unwrap());
        }
        let q = Quadrature::default();
        let mass = q.integrate(|x| gauss_density(0.3, x, 0.0).unwrap(), -10.0, 10.0).unwrap();
        assert!((mass.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gamma_density_cases() {
        for &x in &[0.1, 1.0, 3.5] {
            assert!((gamma_density(1.0, x).unwrap() - (-x).exp()).abs() < 1e-15);
        }
        assert_eq!(gamma_density(0.4, 0.0).unwrap(), 0.0);
        assert_eq!(gamma_density(0.4, -1.0).unwrap(), 0.0);
        assert!(gamma_density(0.0, 1.0).is_err());
    }

    #[test]
    fn gamma_mean_by_quadrature() {
        let q = Quadrature::default();
        for &t in &[0.5, 1.0, 2.5] {
            let m = q.integrate_to_infinity(|x| x * gamma_density(t, x).unwrap(), 0.0, &[t]).unwrap();
            assert!((m.value - t).abs() < 1e-8, "t={t}: {}", m.value);
        }
    }

    #[test]
    fn poisson_pmf_sums() {
        let (t, lambda) = (0.8, 2.5);
        assert!((poisson_pmf(t, lambda, 0).unwrap() - (-lambda * t).exp()).abs() < 1e-16);
        let pmf: Vec<f64> = (0..80).map(|n| poisson_pmf(t, lambda, n).unwrap()).collect();
        let total: f64 = pmf.iter().sum();
        let mean: f64 = pmf.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((mean - lambda * t).abs() < 1e-10);
    }
}
