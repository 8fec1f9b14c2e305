//! Monte Carlo oracles for the closed forms.
//!
//! Paths are generated in fixed batches, batch `b` drawing from stream `b` of
//! the seed, and all sums are pairwise over index order. Estimates therefore
//! depend only on the seed, never on the worker count.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::default::{bond_price_default, option_value_default};
use crate::error::{domain, Error, Result};
use crate::gaussian::{cov_bar, cov_tilde, cov_zeta};
use crate::grid::{fmt17, TimeGrid};
use crate::laws::LevyLaw;
use crate::model::MarketModel;
use crate::numerics::Quadrature;
use crate::par::{map_indexed, pairwise_sum};
use crate::pricing::{bond_price, option_value, posterior_payoff};
use crate::rng::{Seed, StreamRng};
use crate::stochastic::{
    bridge_from_brownian, brownian_with, build_bar_beta, build_tilde_beta, build_zeta, levy_with,
};
use crate::transition::TransitionKernel;

/// Paths per batch (one RNG stream each).
pub const BATCH: usize = 1024;

/// Conditioned samples needed before a binned estimate is reported.
pub const MIN_HITS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McReport {
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub target: f64,
    pub z_score: f64,
}

impl McReport {
    pub const CSV_HEADER: &'static str = "check,estimate,std_error,target,z,pass";

    pub fn new(estimate: f64, std_error: f64, n_paths: usize, target: f64) -> Self {
        let diff = estimate - target;
        // A degenerate sample (zero spread) passes only on exact agreement.
        let z_score = if std_error > 0.0 {
            diff / std_error
        } else if diff.abs() <= 1e-15 * target.abs().max(1.0) {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        };
        McReport { estimate, std_error, n_paths, target, z_score }
    }

    /// Sample mean of `xs` with standard error `sd/√n`.
    pub fn from_samples(xs: &[f64], target: f64) -> Self {
        let n = xs.len();
        let mean = pairwise_sum(xs) / n as f64;
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = if n > 1 { pairwise_sum(&dev) / (n - 1) as f64 } else { 0.0 };
        McReport::new(mean, (var / n as f64).sqrt(), n, target)
    }

    /// Binomial proportion `hits/n`; the error uses the target proportion so
    /// that empty bins still get a usable scale.
    pub fn proportion(hits: usize, n: usize, target: f64) -> Self {
        let p = hits as f64 / n as f64;
        let se = (target * (1.0 - target) / n as f64).sqrt();
        McReport::new(p, se, n, target)
    }

    pub fn pass(&self) -> bool {
        self.passes_at(4.0)
    }

    pub fn passes_at(&self, z: f64) -> bool {
        self.z_score.abs() <= z
    }

    pub fn csv_row(&self, check: &str) -> String {
        format!(
            "{},{},{},{},{},{}",
            check,
            fmt17(self.estimate),
            fmt17(self.std_error),
            fmt17(self.target),
            fmt17(self.z_score),
            if self.pass() { "PASS" } else { "FAIL" }
        )
    }
}

/// `n` independent draws of `f`, batched over the seed's streams.
pub fn simulate<T, F>(n: usize, seed: Seed, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng) -> T + Sync + Send,
{
    let batches = n.div_ceil(BATCH);
    map_indexed(batches, |b| {
        let mut rng = seed.stream(b as u64);
        let len = BATCH.min(n - b * BATCH);
        (0..len).map(|_| f(&mut rng)).collect::<Vec<T>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Processes the covariance oracle can sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessBuilder {
    Brownian { horizon: f64 },
    Bridge { horizon: f64 },
    BarBeta { horizon: f64 },
    TildeBeta { horizon: f64 },
    Zeta { horizon: f64, law: LevyLaw },
}

impl ProcessBuilder {
    pub fn horizon(&self) -> f64 {
        match *self {
            ProcessBuilder::Brownian { horizon }
            | ProcessBuilder::Bridge { horizon }
            | ProcessBuilder::BarBeta { horizon }
            | ProcessBuilder::TildeBeta { horizon }
            | ProcessBuilder::Zeta { horizon, .. } => horizon,
        }
    }

    /// Closed-form covariance, read as the oracle's target.
    pub fn covariance(&self, s: f64, t: f64) -> Result<f64> {
        let horizon = self.horizon();
        match self {
            ProcessBuilder::Brownian { .. } => Ok(s.min(t)),
            ProcessBuilder::Bridge { .. } => Ok(s.min(t) - s * t / horizon),
            ProcessBuilder::BarBeta { .. } => cov_bar(s, t, horizon),
            ProcessBuilder::TildeBeta { .. } => cov_tilde(s, t, horizon),
            ProcessBuilder::Zeta { law, .. } => cov_zeta(s, t, horizon, law),
        }
    }

    /// Values at the given times of one path, sampled on the smallest grid
    /// closed under `t -> T - t` that contains them.
    pub fn sample_at<R: Rng + ?Sized>(&self, times: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let grid = symmetric_grid(self.horizon(), times)?;
        let w = brownian_with(&grid, rng);
        let path = match self {
            ProcessBuilder::Brownian { .. } => w,
            ProcessBuilder::Bridge { .. } => bridge_from_brownian(&w),
            ProcessBuilder::BarBeta { .. } => build_bar_beta(&w, &brownian_with(&grid, rng))?,
            ProcessBuilder::TildeBeta { .. } => build_tilde_beta(&w, &brownian_with(&grid, rng))?,
            ProcessBuilder::Zeta { law, .. } => build_zeta(&w, &levy_with(law, &grid, rng))?,
        };
        times
            .iter()
            .map(|&t| {
                grid.index_of(t)
                    .map(|k| path.values()[k])
                    .ok_or_else(|| Error::InvalidGrid(format!("{t} missing from sampling grid")))
            })
            .collect()
    }
}

/// `{0, T} ∪ {t, T - t}` over the requested times.
fn symmetric_grid(horizon: f64, times: &[f64]) -> Result<TimeGrid> {
    let tol = 1e-12 * horizon;
    let mut half: Vec<f64> = Vec::new();
    for &t in times {
        if !(0.0..=horizon).contains(&t) {
            return Err(domain(format!("time {t} outside [0, {horizon}]")));
        }
        let q = t.min(horizon - t);
        if q > tol {
            half.push(q);
        }
    }
    half.sort_by(f64::total_cmp);
    half.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let mut pts = vec![0.0];
    pts.extend(&half);
    for &q in half.iter().rev() {
        let r = horizon - q;
        if r - pts.last().copied().unwrap_or(0.0) > tol {
            pts.push(r);
        }
    }
    if horizon - pts.last().copied().unwrap_or(0.0) > tol {
        pts.push(horizon);
    }
    TimeGrid::from_points(pts)
}

/// Sample covariance of `(Y_s, Y_t)` against the closed-form kernel.
pub fn empirical_cov(builder: &ProcessBuilder, s: f64, t: f64, n_paths: usize, seed: Seed) -> Result<McReport> {
    if n_paths < 2 {
        return Err(domain("need at least two paths"));
    }
    let target = builder.covariance(s, t)?;
    let draws = simulate(n_paths, seed, |rng| builder.sample_at(&[s, t], rng));
    let draws = draws.into_iter().collect::<Result<Vec<_>>>()?;
    let n = n_paths as f64;
    let ys: Vec<f64> = draws.iter().map(|d| d[0]).collect();
    let yt: Vec<f64> = draws.iter().map(|d| d[1]).collect();
    let (ms, mt) = (pairwise_sum(&ys) / n, pairwise_sum(&yt) / n);
    let prods: Vec<f64> = draws.iter().map(|d| (d[0] - ms) * (d[1] - mt)).collect();
    let mut rep = McReport::from_samples(&prods, target);
    // Unbiased covariance.
    rep = McReport::new(rep.estimate * n / (n - 1.0), rep.std_error, n_paths, target);
    Ok(rep)
}

/// Histogram of `ζ_u` over paths with `|ζ_t - x| <= δ`, one report per bin
/// `[edges[k], edges[k+1])`, against `∫_bin Ψ_{t,u}(x, y) dy`.
#[allow(clippy::too_many_arguments)]
pub fn conditional_histogram(
    builder: &ProcessBuilder,
    t: f64,
    u: f64,
    x: f64,
    delta: f64,
    edges: &[f64],
    n_paths: usize,
    seed: Seed,
) -> Result<Vec<McReport>> {
    let ProcessBuilder::Zeta { horizon, law } = *builder else {
        return Err(domain("conditional histogram is defined for ζ only"));
    };
    if edges.len() < 2 || edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("bin edges must be increasing"));
    }
    if !(delta > 0.0) {
        return Err(domain(format!("window half-width must be positive, got {delta}")));
    }
    let kernel = TransitionKernel::new(law, horizon, t, u, x)?;
    let draws = simulate(n_paths, seed, |rng| builder.sample_at(&[t, u], rng));
    let mut hits = Vec::new();
    for d in draws {
        let d = d?;
        if (d[0] - x).abs() <= delta {
            hits.push(d[1]);
        }
    }
    if hits.len() < MIN_HITS {
        return Err(Error::InsufficientSample { hits: hits.len(), required: MIN_HITS });
    }
    let q = Quadrature { abs_tol: 1e-10, rel_tol: 1e-8, ..Default::default() };
    let mut failure = None;
    let mut reports = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let mass = q.integrate(
            |y| match kernel.density(y) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            },
            w[0],
            w[1],
        )?;
        let count = hits.iter().filter(|y| **y >= w[0] && **y < w[1]).count();
        reports.push(McReport::proportion(count, hits.len(), mass.value.clamp(0.0, 1.0)));
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(reports)
}

/// One exact draw of `(H_T, τ, ξ_t)` where `ξ` is `κ` if the model has a
/// default law and `η` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub payoff_index: usize,
    pub default_time: Option<f64>,
    pub value: f64,
}

impl Observation {
    pub fn defaulted(&self, t: f64) -> bool {
        self.default_time.is_some_and(|r| r <= t)
    }
}

/// Exact marginal of the information process at time `t`.
pub fn sample_observation<R: Rng + ?Sized>(model: &MarketModel, t: f64, rng: &mut R) -> Observation {
    let horizon = model.horizon;
    let i = model.payoff.sample_index(rng);
    let signal = model.sigma * t * model.payoff.support()[i];
    let z: f64 = rng.sample(StandardNormal);
    match &model.default_law {
        None => {
            let y = model.levy.sample_increment(horizon - t, rng);
            let value = signal + z * (t * (horizon - t) / horizon).sqrt() + (t / horizon) * y;
            Observation { payoff_index: i, default_time: None, value }
        }
        Some(law) => {
            let r = law.sample(rng);
            let value = if r <= t {
                signal
            } else {
                let y = model.levy.sample_increment(r - t, rng);
                signal + model.levy_drift_scale * t * y + z * (t * (r - t) / r).sqrt()
            };
            Observation { payoff_index: i, default_time: Some(r), value }
        }
    }
}

/// Default half-width of the conditioning window: `0.02 √(t(T-t)/T)`.
pub fn default_window(t: f64, horizon: f64) -> f64 {
    0.02 * (t * (horizon - t) / horizon).sqrt()
}

fn check_time(model: &MarketModel, t: f64) -> Result<()> {
    if !(t > 0.0 && t < model.horizon) {
        return Err(domain(format!("time {t} outside (0, {})", model.horizon)));
    }
    Ok(())
}

/// Fraction of each payoff atom among paths whose observation lands within
/// `δ` of `x`, against the posterior weights. For the default model the
/// window is restricted to surviving paths, unless `x` is a default-ray
/// point, where it is the exact set of defaulted paths on that ray.
pub fn posterior_binning(
    model: &MarketModel,
    t: f64,
    x: f64,
    delta: Option<f64>,
    n_paths: usize,
    seed: Seed,
) -> Result<Vec<McReport>> {
    check_time(model, t)?;
    let delta = delta.unwrap_or_else(|| default_window(t, model.horizon));
    if !(delta > 0.0) {
        return Err(domain(format!("window half-width must be positive, got {delta}")));
    }
    let targets: Vec<f64> = match &model.default_law {
        None => posterior_payoff(model, t, x)?.into_iter().map(|(_, w)| w).collect(),
        Some(_) => {
            let q = bond_price_default(model, t, x)?;
            q.payoff_marginal(model.payoff.support())
        }
    };
    let on_ray = model.default_law.as_ref().is_some_and(|law| law.cdf(t) > 0.0)
        && crate::default::default_indicator(model, t, x);
    let draws = simulate(n_paths, seed, |rng| sample_observation(model, t, rng));
    let hits: Vec<usize> = draws
        .iter()
        .filter(|o| {
            if on_ray {
                o.defaulted(t) && o.value == x
            } else {
                !o.defaulted(t) && (o.value - x).abs() <= delta
            }
        })
        .map(|o| o.payoff_index)
        .collect();
    if hits.len() < MIN_HITS {
        return Err(Error::InsufficientSample { hits: hits.len(), required: MIN_HITS });
    }
    Ok(targets
        .iter()
        .enumerate()
        .map(|(i, &p)| McReport::proportion(hits.iter().filter(|j| **j == i).count(), hits.len(), p))
        .collect())
}

/// `E[B_t^T] / P_t^T` over simulated observations, against `E[H_T]`.
pub fn tower_check(model: &MarketModel, t: f64, n_paths: usize, seed: Seed) -> Result<McReport> {
    check_time(model, t)?;
    let discount = model.discount(t)?;
    let prices = simulate(n_paths, seed, |rng| {
        let o = sample_observation(model, t, rng);
        match model.default_law {
            None => bond_price(model, t, o.value).map(|q| q.price),
            Some(_) => bond_price_default(model, t, o.value).map(|q| q.price),
        }
    });
    let ratios = prices.into_iter().map(|p| p.map(|p| p / discount)).collect::<Result<Vec<_>>>()?;
    Ok(McReport::from_samples(&ratios, model.payoff.mean()))
}

/// `P_0^t E[(B_t^T - K)^+]` by simulation, against the option formula.
pub fn option_check(model: &MarketModel, t: f64, strike: f64, n_paths: usize, seed: Seed) -> Result<McReport> {
    check_time(model, t)?;
    let target = match model.default_law {
        None => option_value(model, t, strike)?,
        Some(_) => option_value_default(model, t, strike)?,
    };
    let p_0t = model.discount_from_zero(t)?;
    let discount = model.discount(t)?;
    let payoffs = simulate(n_paths, seed, |rng| {
        let o = sample_observation(model, t, rng);
        let price = if o.defaulted(t) {
            // The ray reveals the payoff; no filtering needed.
            Ok(discount * model.payoff.support()[o.payoff_index])
        } else if model.default_law.is_some() {
            bond_price_default(model, t, o.value).map(|q| q.price)
        } else {
            bond_price(model, t, o.value).map(|q| q.price)
        };
        price.map(|b| p_0t * (b - strike).max(0.0))
    });
    let payoffs = payoffs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(McReport::from_samples(&payoffs, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{DefaultTimeLaw, PayoffDistribution};

    #[test]
    fn z_score_and_pass() {
        let r = McReport::new(1.1, 0.05, 10, 1.0);
        assert!((r.z_score - 2.0).abs() < 1e-12);
        assert!(r.pass());
        assert!(!McReport::new(1.3, 0.05, 10, 1.0).pass());
        assert!(McReport::new(0.0, 0.0, 10, 0.0).pass());
        assert!(!McReport::new(0.1, 0.0, 10, 0.0).pass());
        assert_eq!(r.csv_row("x").split(',').count(), McReport::CSV_HEADER.split(',').count());
    }

    #[test]
    fn symmetric_grid_contains_requested_times() {
        let g = symmetric_grid(1.0, &[0.3, 0.5, 0.0, 1.0]).unwrap();
        assert!(g.is_symmetric());
        assert_eq!(g.points().len(), 5);
        for t in [0.3, 0.5, 0.7] {
            assert!(g.index_of(t).is_some());
        }
        assert_eq!(symmetric_grid(2.0, &[]).unwrap().points(), &[0.0, 2.0]);
    }

    #[test]
    fn covariance_oracles() {
        let tilde = ProcessBuilder::TildeBeta { horizon: 1.0 };
        let r = empirical_cov(&tilde, 0.5, 0.5, 100_000, Seed(3)).unwrap();
        assert_eq!(r.target, 0.375);
        assert!(r.pass(), "{r:?}");
        let bar = ProcessBuilder::BarBeta { horizon: 1.0 };
        let r = empirical_cov(&bar, 0.25, 0.75, 50_000, Seed(4)).unwrap();
        assert!((r.target - 0.109375).abs() < 1e-15);
        assert!(r.pass(), "{r:?}");
        let zeta = ProcessBuilder::Zeta { horizon: 1.0, law: LevyLaw::Gamma };
        let r = empirical_cov(&zeta, 0.0, 0.6, 1000, Seed(5)).unwrap();
        assert_eq!(r.target, 0.0);
        assert!(r.pass());
    }

    #[test]
    fn oracles_are_seed_deterministic() {
        let zeta = ProcessBuilder::Zeta { horizon: 1.0, law: LevyLaw::Poisson { lambda: 2.0 } };
        let a = empirical_cov(&zeta, 0.3, 0.8, 5000, Seed(9)).unwrap();
        let b = empirical_cov(&zeta, 0.3, 0.8, 5000, Seed(9)).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        let c = empirical_cov(&zeta, 0.3, 0.8, 5000, Seed(10)).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn histogram_needs_hits() {
        let zeta = ProcessBuilder::Zeta { horizon: 1.0, law: LevyLaw::Gamma };
        let err = conditional_histogram(&zeta, 0.3, 0.6, 25.0, 0.01, &[0.0, 1.0], 2000, Seed(1)).unwrap_err();
        assert!(matches!(err, Error::InsufficientSample { .. }));
        let bar = ProcessBuilder::BarBeta { horizon: 1.0 };
        assert!(conditional_histogram(&bar, 0.3, 0.6, 0.0, 0.01, &[0.0, 1.0], 10, Seed(1)).is_err());
    }

    #[test]
    fn wide_window_recovers_marginal_of_zeta_u() {
        // With δ covering everything the histogram is the law of ζ_u; for the
        // noiseless case that is N(0, u(T-u)/T).
        let zeta = ProcessBuilder::Zeta { horizon: 1.0, law: LevyLaw::None };
        let edges = [-3.0, -0.5, 0.0, 0.5, 3.0];
        let reps = conditional_histogram(&zeta, 0.3, 0.6, 0.0, 100.0, &edges, 20_000, Seed(2)).unwrap();
        let sd = (0.6f64 * 0.4).sqrt();
        let cdf = |y: f64| 0.5 * libm::erfc(-y / (sd * std::f64::consts::SQRT_2));
        for (r, w) in reps.iter().zip(edges.windows(2)) {
            let marginal = cdf(w[1]) - cdf(w[0]);
            let se = (marginal * (1.0 - marginal) / r.n_paths as f64).sqrt();
            assert!((r.estimate - marginal).abs() < 5.0 * se, "{r:?} vs {marginal}");
        }
    }

    #[test]
    fn posterior_binning_without_signal_is_prior() {
        let m = MarketModel::new(1.0, 0.0, PayoffDistribution::binary(0.0, 1.0, 0.3).unwrap(), LevyLaw::Gamma).unwrap();
        let reps = posterior_binning(&m, 0.5, 0.3, Some(0.05), 20_000, Seed(4)).unwrap();
        assert_eq!(reps[1].target, 0.3);
        assert!(reps.iter().all(McReport::pass), "{reps:?}");
        let err = posterior_binning(&m, 0.5, 40.0, None, 2000, Seed(4)).unwrap_err();
        assert!(matches!(err, Error::InsufficientSample { .. }));
    }

    #[test]
    fn posterior_binning_on_default_ray() {
        let m = MarketModel::new(1.0, 1.0, PayoffDistribution::binary(0.0, 1.0, 0.5).unwrap(), LevyLaw::Gamma)
            .unwrap()
            .with_default_law(DefaultTimeLaw::atoms(vec![0.2, 0.8], vec![0.5, 0.5]).unwrap())
            .unwrap();
        let reps = posterior_binning(&m, 0.5, 0.5, None, 2000, Seed(6)).unwrap();
        assert_eq!(reps[1].estimate, 1.0);
        assert!(reps.iter().all(McReport::pass));
    }

    #[test]
    fn observation_marginal_mean() {
        let m = MarketModel::new(1.0, 1.0, PayoffDistribution::binary(0.0, 1.0, 0.5).unwrap(), LevyLaw::Gamma).unwrap();
        let xs: Vec<f64> = simulate(50_000, Seed(8), |rng| sample_observation(&m, 0.4, rng).value);
        // E[η_t] = σ t E[H] + (t/T) E[X_{T-t}].
        let r = McReport::from_samples(&xs, 0.4 * 0.5 + 0.4 * 0.6);
        assert!(r.pass(), "{r:?}");
    }
}
