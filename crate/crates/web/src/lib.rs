//! Browser bindings for the demo page in `www/`.
//!
//! Each export takes plain numbers/strings and returns a JSON string. The
//! `*_json` functions hold the logic so they can be tested natively.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use levy_bridge::default::bond_price_default;
use levy_bridge::pricing::bond_price;
use levy_bridge::stochastic::{
    bridge_from_brownian, brownian_with, build_bar_beta, build_tilde_beta, build_zeta, levy_with,
};
use levy_bridge::transition::TransitionKernel;
use levy_bridge::{LevyLaw, MarketModel, Seed, TimeGrid};
use serde::Serialize;
use wasm_bindgen::prelude::*;

type Res<T> = std::result::Result<T, String>;

const MAX_POINTS: usize = 20_000;

#[derive(Serialize)]
struct Paths {
    t: Vec<f64>,
    paths: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct Curve {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Default-ray flags, empty for models without a default law.
    defaulted: Vec<bool>,
}

fn law(levy: &str, lambda: f64) -> Res<LevyLaw> {
    match levy {
        "gamma" => Ok(LevyLaw::Gamma),
        "poisson" => LevyLaw::poisson(lambda).map_err(|e| e.to_string()),
        "none" => Ok(LevyLaw::None),
        other => Err(format!("unknown noise law {other:?}")),
    }
}

fn linspace(lo: f64, hi: f64, points: usize) -> Res<Vec<f64>> {
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must be in 2..={MAX_POINTS}"));
    }
    if !(hi > lo) {
        return Err(format!("empty range [{lo}, {hi}]"));
    }
    Ok((0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect())
}

fn to_json<T: Serialize>(v: &T) -> Res<String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Sample paths of `brownian`, `bridge`, `bar`, `tilde` or `zeta` on `[0, 1]`.
pub fn sample_paths_json(process: &str, levy: &str, lambda: f64, steps: usize, paths: usize, seed: u64) -> Res<String> {
    if paths == 0 || paths * (steps + 1) > 50 * MAX_POINTS {
        return Err("too many points requested".into());
    }
    let law = law(levy, lambda)?;
    let grid = TimeGrid::uniform(1.0, steps).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(paths);
    for k in 0..paths {
        let mut rng = Seed(seed).stream(k as u64);
        let w = brownian_with(&grid, &mut rng);
        let p = match process {
            "brownian" => Ok(w),
            "bridge" => Ok(bridge_from_brownian(&w)),
            "bar" => build_bar_beta(&w, &brownian_with(&grid, &mut rng)),
            "tilde" => build_tilde_beta(&w, &brownian_with(&grid, &mut rng)),
            "zeta" => build_zeta(&w, &levy_with(&law, &grid, &mut rng)),
            other => return Err(format!("unknown process {other:?}")),
        }
        .map_err(|e| e.to_string())?;
        out.push(p.values().to_vec());
    }
    to_json(&Paths { t: grid.points().to_vec(), paths: out })
}

/// Bond price at time `t` across `x`, for a model given as JSON.
pub fn price_curve_json(model: &str, t: f64, x_from: f64, x_to: f64, points: usize) -> Res<String> {
    let model = MarketModel::from_json(model).map_err(|e| e.to_string())?;
    let xs = linspace(x_from, x_to, points)?;
    let mut curve = Curve { x: Vec::new(), y: Vec::new(), defaulted: Vec::new() };
    for x in xs {
        match model.default_law {
            None => curve.y.push(bond_price(&model, t, x).map_err(|e| e.to_string())?.price),
            Some(_) => {
                let q = bond_price_default(&model, t, x).map_err(|e| e.to_string())?;
                curve.y.push(q.price);
                curve.defaulted.push(q.defaulted);
            }
        }
        curve.x.push(x);
    }
    to_json(&curve)
}

/// `Ψ_{t,u}(x, ·)` of ζ on `[0, 1]` over the kernel's default plotting range.
pub fn transition_density_json(levy: &str, lambda: f64, t: f64, u: f64, x: f64, points: usize) -> Res<String> {
    let kernel = TransitionKernel::new(law(levy, lambda)?, 1.0, t, u, x).map_err(|e| e.to_string())?;
    let (lo, hi) = kernel.plot_range().map_err(|e| e.to_string())?;
    let ys = linspace(lo, hi, points)?;
    let mut psi = Vec::with_capacity(ys.len());
    for &y in &ys {
        psi.push(kernel.density(y).map_err(|e| e.to_string())?);
    }
    to_json(&Curve { x: ys, y: psi, defaulted: Vec::new() })
}

#[wasm_bindgen]
pub fn sample_paths(process: &str, levy: &str, lambda: f64, steps: usize, paths: usize, seed: u64) -> Result<String, JsError> {
    sample_paths_json(process, levy, lambda, steps, paths, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn price_curve(model: &str, t: f64, x_from: f64, x_to: f64, points: usize) -> Result<String, JsError> {
    price_curve_json(model, t, x_from, x_to, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn transition_density(levy: &str, lambda: f64, t: f64, u: f64, x: f64, points: usize) -> Result<String, JsError> {
    transition_density_json(levy, lambda, t, u, x, points).map_err(|e| JsError::new(&e))
}
