//! Laws of the model's random inputs: the Lévy noise `X`, the payoff `H_T`
//! and the default time `τ`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Law of the Lévy process perturbing the bridge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LevyLaw {
    /// Drift-free gamma subordinator, `X_t ~ Gamma(shape t, scale 1)`.
    Gamma,
    /// Poisson process with intensity `lambda`.
    Poisson { lambda: f64 },
    /// `X ≡ 0`. Reduces every model to its pure-bridge counterpart.
    None,
}

impl LevyLaw {
    pub fn poisson(lambda: f64) -> Result<Self> {
        let law = LevyLaw::Poisson { lambda };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LevyLaw::Poisson { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                Err(domain(format!("Poisson rate must be positive, got {lambda}")))
            }
            _ => Ok(()),
        }
    }

    /// `E[X_1]`.
    pub fn mean_rate(&self) -> f64 {
        match *self {
            LevyLaw::Gamma => 1.0,
            LevyLaw::Poisson { lambda } => lambda,
            LevyLaw::None => 0.0,
        }
    }

    /// `Var[X_1]`; `Cov(X_s, X_t) = min(s,t) * variance_rate`.
    pub fn variance_rate(&self) -> f64 {
        self.mean_rate()
    }

    /// Draw `X_{t+dt} - X_t`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        if dt <= 0.0 {
            return 0.0;
        }
        match *self {
            LevyLaw::Gamma => Gamma::new(dt, 1.0).expect("positive shape").sample(rng),
            LevyLaw::Poisson { lambda } => Poisson::new(lambda * dt).expect("positive mean").sample(rng),
            LevyLaw::None => 0.0,
        }
    }

    /// Upper point `y` with `P(X_t > y)` negligible (below ~1e-15).
    pub fn upper_bound(&self, t: f64) -> f64 {
        match *self {
            LevyLaw::Gamma => t + 36.0 + 10.0 * t.sqrt(),
            LevyLaw::Poisson { lambda } => {
                let m = lambda * t;
                (m + 12.0 * m.sqrt() + 40.0).ceil()
            }
            LevyLaw::None => 0.0,
        }
    }
}

/// Discrete law of the payoff `H_T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPayoff")]
pub struct PayoffDistribution {
    support: Vec<f64>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPayoff {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl TryFrom<RawPayoff> for PayoffDistribution {
    type Error = Error;
    fn try_from(raw: RawPayoff) -> Result<Self> {
        PayoffDistribution::new(raw.support, raw.probs)
    }
}

impl PayoffDistribution {
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(Error::Model("payoff support and probabilities must be non-empty and equal length".into()));
        }
        if support.iter().any(|h| !h.is_finite()) {
            return Err(Error::Model("payoff values must be finite".into()));
        }
        if probs.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::Model("payoff probabilities must lie in (0, 1]".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Model(format!("payoff probabilities sum to {total}, not 1")));
        }
        let mut sorted = support.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Model("payoff support values must be distinct".into()));
        }
        Ok(PayoffDistribution { support, probs })
    }

    /// Two-point law with `P(H = h1) = p`.
    pub fn binary(h0: f64, h1: f64, p: f64) -> Result<Self> {
        Self::new(vec![h0, h1], vec![1.0 - p, p])
    }

    /// Truncate a countable law to the first atoms carrying `1 - 1e-12` of the
    /// mass, then renormalise.
    pub fn truncated<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut support = Vec::new();
        let mut probs = Vec::new();
        let mut mass = 0.0;
        for (h, p) in atoms {
            if p <= 0.0 {
                continue;
            }
            support.push(h);
            probs.push(p);
            mass += p;
            if mass >= 1.0 - 1e-12 {
                break;
            }
        }
        if mass < 1.0 - 1e-12 {
            return Err(Error::Model(format!("atoms only carry mass {mass}")));
        }
        for p in &mut probs {
            *p /= mass;
        }
        Self::new(support, probs)
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.atoms().map(|(h, p)| h * p).sum()
    }

    pub fn min(&self) -> f64 {
        self.support.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.support.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of a sampled atom.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

/// Law of the default time `τ` on `(0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DefaultTimeLaw {
    /// Finitely many atoms `r_j` with weights `w_j`.
    Atoms { times: Vec<f64>, weights: Vec<f64> },
    /// Exponential law with the given rate, conditioned on `(0, horizon]`.
    Exponential { rate: f64, horizon: f64 },
    /// Uniform density on `(lo, hi]`.
    Uniform { lo: f64, hi: f64 },
}

impl DefaultTimeLaw {
    pub fn atoms(times: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let law = DefaultTimeLaw::Atoms { times, weights };
        Ok(law)
    }

    pub fn point_mass(r: f64) -> Self {
        DefaultTimeLaw::Atoms { times: vec![r], weights: vec![1.0] }
    }

    /// Checks total mass and that the support lies in `(0, horizon]`.
    pub fn validate(&self, horizon: f64) -> Result<()> {
        let slack = 1e-12 * horizon;
        match self {
            DefaultTimeLaw::Atoms { times, weights } => {
                if times.is_empty() || times.len() != weights.len() {
                    return Err(Error::Model("default atoms and weights must be non-empty and equal length".into()));
                }
                if times.iter().any(|&r| !(r > 0.0 && r <= horizon + slack)) {
                    return Err(Error::Model("default atoms must lie in (0, T]".into()));
                }
                if weights.iter().any(|&w| !(w >= 0.0)) {
                    return Err(Error::Model("default weights must be non-negative".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-10 {
                    return Err(Error::Model(format!("default weights sum to {total}, not 1")));
                }
            }
            DefaultTimeLaw::Exponential { rate, horizon: h } => {
                if !(*rate > 0.0) {
                    return Err(Error::Model("exponential rate must be positive".into()));
                }
                if (h - horizon).abs() > slack {
                    return Err(Error::Model("exponential law must be conditioned on the model horizon".into()));
                }
            }
            DefaultTimeLaw::Uniform { lo, hi } => {
                if !(*lo >= 0.0 && hi > lo && *hi <= horizon + slack) {
                    return Err(Error::Model("uniform default law needs 0 <= lo < hi <= T".into()));
                }
            }
        }
        Ok(())
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, DefaultTimeLaw::Atoms { .. })
    }

    /// `F_τ(t) = P(τ <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            DefaultTimeLaw::Atoms { times, weights } => times
                .iter()
                .zip(weights)
                .filter(|(r, _)| **r <= t)
                .map(|(_, w)| *w)
                .sum(),
            DefaultTimeLaw::Exponential { rate, horizon } => {
                let t = t.clamp(0.0, *horizon);
                (-rate * t).exp_m1() / (-rate * horizon).exp_m1()
            }
            DefaultTimeLaw::Uniform { lo, hi } => ((t - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// Lebesgue density for the continuous laws; `None` for atoms.
    pub fn density(&self, r: f64) -> Option<f64> {
        match self {
            DefaultTimeLaw::Atoms { .. } => None,
            DefaultTimeLaw::Exponential { rate, horizon } => Some(if r > 0.0 && r <= *horizon {
                rate * (-rate * r).exp() / -(-rate * horizon).exp_m1()
            } else {
                0.0
            }),
            DefaultTimeLaw::Uniform { lo, hi } => {
                Some(if r > *lo && r <= *hi { 1.0 / (hi - lo) } else { 0.0 })
            }
        }
    }

    /// Support interval `[lo, hi]` (closure of it for densities).
    pub fn support_bounds(&self) -> (f64, f64) {
        match self {
            DefaultTimeLaw::Atoms { times, .. } => (
                times.iter().copied().fold(f64::INFINITY, f64::min),
                times.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
            DefaultTimeLaw::Exponential { horizon, .. } => (0.0, *horizon),
            DefaultTimeLaw::Uniform { lo, hi } => (*lo, *hi),
        }
    }

    /// Inverse-CDF draw on `(0, T]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DefaultTimeLaw::Atoms { times, weights } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (r, w) in times.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return *r;
                    }
                }
                *times.last().expect("validated non-empty")
            }
            DefaultTimeLaw::Exponential { rate, horizon } => {
                // 1 - u in (0, 1] keeps the draw strictly positive.
                let u = 1.0 - rng.random::<f64>();
                let r = -(u * (-rate * horizon).exp_m1()).ln_1p() / rate;
                r.min(*horizon)
            }
            DefaultTimeLaw::Uniform { lo, hi } => {
                let u = 1.0 - rng.random::<f64>();
                lo + u * (hi - lo)
            }
        }
    }
}
