//! Seeded simulation of the driving processes and the bridges built from them.
//!
//! Every sampler is a pure function of `(grid, law, seed)`. Composite
//! processes are assembled pointwise from independently sampled inputs, and a
//! time-reversed Lévy path is always the forward realization read backwards.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::grid::{Path, TimeGrid};
use crate::laws::LevyLaw;
use crate::model::MarketModel;
use crate::rng::Seed;

/// Brownian motion from an explicit generator.
pub fn brownian_with<R: Rng + ?Sized>(grid: &TimeGrid, rng: &mut R) -> Path {
    let pts = grid.points();
    let mut values = Vec::with_capacity(pts.len());
    let mut w = 0.0;
    values.push(0.0);
    for win in pts.windows(2) {
        let z: f64 = rng.sample(StandardNormal);
        w += z * (win[1] - win[0]).sqrt();
        values.push(w);
    }
    Path::from_parts(grid.clone(), values)
}

pub fn sample_brownian(grid: &TimeGrid, seed: Seed) -> Path {
    brownian_with(grid, &mut seed.rng())
}

/// `W_t - (t/T) W_T` from one Brownian realization.
pub fn bridge_from_brownian(w: &Path) -> Path {
    let horizon = w.grid().horizon();
    let w_end = *w.values().last().expect("non-empty");
    let mut values: Vec<f64> = w.iter().map(|(t, v)| v - (t / horizon) * w_end).collect();
    let n = values.len() - 1;
    values[0] = 0.0;
    values[n] = 0.0;
    Path::from_parts(w.grid().clone(), values)
}

pub fn sample_brownian_bridge(grid: &TimeGrid, seed: Seed) -> Path {
    bridge_from_brownian(&sample_brownian(grid, seed))
}

pub fn levy_with<R: Rng + ?Sized>(law: &LevyLaw, grid: &TimeGrid, rng: &mut R) -> Path {
    let pts = grid.points();
    let mut values = Vec::with_capacity(pts.len());
    let mut x = 0.0;
    values.push(0.0);
    for win in pts.windows(2) {
        x += law.sample_increment(win[1] - win[0], rng);
        values.push(x);
    }
    Path::from_parts(grid.clone(), values)
}

pub fn sample_levy(law: &LevyLaw, grid: &TimeGrid, seed: Seed) -> Result<Path> {
    law.validate()?;
    Ok(levy_with(law, grid, &mut seed.rng()))
}

/// Reads a path backwards: output at `t_k` is input at `T - t_k`.
pub fn reverse_index(x: &Path) -> Result<Path> {
    if !x.grid().is_symmetric() {
        return Err(Error::NonSymmetricGrid);
    }
    let values: Vec<f64> = x.values().iter().rev().copied().collect();
    Ok(Path::from_parts(x.grid().clone(), values))
}

fn same_grid(a: &Path, b: &Path) -> Result<()> {
    if a.grid().points() != b.grid().points() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `W_t - (t/T) W_T + (t/T) pin_t` with an arbitrary pinning path.
fn bridge_to(w: &Path, pin: &[f64]) -> Path {
    let horizon = w.grid().horizon();
    let w_end = *w.values().last().expect("non-empty");
    let n = pin.len() - 1;
    let mut values: Vec<f64> = w
        .iter()
        .zip(pin)
        .map(|((t, v), p)| {
            let s = t / horizon;
            v - s * w_end + s * p
        })
        .collect();
    values[0] = 0.0;
    values[n] = pin[n];
    Path::from_parts(w.grid().clone(), values)
}

/// `β̄_t = W_t - (t/T) W_T + (t/T) B_t`.
pub fn build_bar_beta(w: &Path, b: &Path) -> Result<Path> {
    same_grid(w, b)?;
    Ok(bridge_to(w, b.values()))
}

/// `β̃_t = W_t - (t/T) W_T + (t/T) B_{T-t}`.
pub fn build_tilde_beta(w: &Path, b: &Path) -> Result<Path> {
    same_grid(w, b)?;
    Ok(bridge_to(w, reverse_index(b)?.values()))
}

/// `ζ_t = W_t - (t/T) W_T + (t/T) X_{T-t}`.
pub fn build_zeta(w: &Path, x: &Path) -> Result<Path> {
    same_grid(w, x)?;
    Ok(bridge_to(w, reverse_index(x)?.values()))
}

/// `η_t = σ t h + ζ_t`.
pub fn build_eta(model: &MarketModel, h: f64, zeta: &Path) -> Path {
    let sigma = model.sigma;
    let n = zeta.values().len() - 1;
    let mut values: Vec<f64> = zeta.iter().map(|(t, z)| sigma * t * h + z).collect();
    values[n] = sigma * zeta.grid().horizon() * h;
    Path::from_parts(zeta.grid().clone(), values)
}

/// Index of the grid point `τ` is snapped to: the largest `t_k <= τ`, but at
/// least `t_1`.
pub fn snap_default_index(grid: &TimeGrid, tau: f64) -> usize {
    grid.floor_index(tau).max(1)
}

/// `κ_t = σ t h + μ (t∧τ) X_{τ - t∧τ} + W_{t∧τ} - ((t∧τ)/τ) W_τ`, with `τ`
/// snapped down to the grid (see [`snap_default_index`]).
pub fn build_kappa(model: &MarketModel, tau: f64, h: f64, w: &Path, x: &Path) -> Result<Path> {
    same_grid(w, x)?;
    let grid = w.grid();
    if !(tau > 0.0 && tau <= grid.horizon() * (1.0 + 1e-12)) {
        return Err(domain(format!("default time {tau} outside (0, {}]", grid.horizon())));
    }
    let pts = grid.points();
    let k_tau = snap_default_index(grid, tau);
    let tau_s = pts[k_tau];
    let (sigma, mu) = (model.sigma, model.levy_drift_scale);
    let (wv, xv) = (w.values(), x.values());
    let w_tau = wv[k_tau];
    let mut values = Vec::with_capacity(pts.len());
    for (k, &t) in pts.iter().enumerate() {
        if k >= k_tau {
            values.push(sigma * t * h);
            continue;
        }
        let j = grid
            .index_of(tau_s - t)
            .ok_or_else(|| Error::InvalidGrid(format!("τ - t = {} is not a grid point", tau_s - t)))?;
        values.push(sigma * t * h + mu * t * xv[j] + wv[k] - (t / tau_s) * w_tau);
    }
    Ok(Path::from_parts(grid.clone(), values))
}
