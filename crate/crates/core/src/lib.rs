//! Information-based pricing with Lévy-perturbed Brownian bridges.
//!
//! The crate is organised bottom-up:
//!
//! - [`stochastic`]: seeded simulation of Brownian motion, bridges, gamma and
//!   Poisson paths and the composite noise/information processes.
//! - [`gaussian`]: covariance kernels, the Gaussian Markov triple test and the
//!   canonical decompositions of the two Brownian-to-Brownian bridges.
//! - [`numerics`]: Gauss–Kronrod quadrature, densities, integration against
//!   Lévy marginals and the parabolic cylinder function.
//! - [`pricing`] and [`transition`]: the bond/option pricing model driven by
//!   the information process `η` and the transition density of `ζ`.
//! - [`default`]: the model driven by `κ`, where default time and payoff are
//!   inferred jointly.
//! - [`mc`]: Monte Carlo oracles that check the closed forms.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod default;
pub mod error;
pub mod gaussian;
pub mod grid;
pub mod laws;
pub mod mc;
pub mod model;
pub mod numerics;
pub mod par;
pub mod posterior;
pub mod pricing;
pub mod rng;
pub mod stochastic;
pub mod transition;

pub use error::{Error, Result};
pub use grid::{Path, TimeGrid};
pub use laws::{DefaultTimeLaw, LevyLaw, PayoffDistribution};
pub use model::{MarketModel, RateCurve};
pub use rng::Seed;
