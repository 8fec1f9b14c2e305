//! Numerical kernel: quadrature, densities, integration against Lévy
//! marginals and the parabolic cylinder function.

mod density;
mod levy;
mod pcf;
mod quadrature;

pub use density::{gamma_density, gauss_density, ln_gamma_density, ln_gauss_pdf, ln_poisson_pmf, poisson_pmf, gauss_pdf};
pub use levy::{integrate_levy, integrate_levy_hinted, integrate_levy_ln, ScaledEstimate};
pub use pcf::{gaussian_power_integral, ln_gaussian_power_integral, ln_parabolic_cylinder_d_neg, parabolic_cylinder_d};
pub use quadrature::{Estimate, Quadrature, Scheme};

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}
