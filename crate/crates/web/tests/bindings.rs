use levy_bridge_web::{price_curve_json, sample_paths_json, transition_density_json};
use serde_json::Value;

#[test]
fn paths_have_one_value_per_grid_point() {
    let v: Value = serde_json::from_str(&sample_paths_json("zeta", "gamma", 1.0, 32, 3, 7).unwrap()).unwrap();
    assert_eq!(v["t"].as_array().unwrap().len(), 33);
    let paths = v["paths"].as_array().unwrap();
    assert_eq!(paths.len(), 3);
    assert_eq!(paths[0][32].as_f64().unwrap(), 0.0);
    assert!(sample_paths_json("nope", "gamma", 1.0, 32, 3, 7).is_err());
}

#[test]
fn price_curve_matches_model() {
    let model = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../models/binary_gamma.json")).unwrap();
    let v: Value = serde_json::from_str(&price_curve_json(&model, 0.5, -1.0, 2.0, 31).unwrap()).unwrap();
    let y = v["y"].as_array().unwrap();
    assert_eq!(y.len(), 31);
    let y: Vec<f64> = y.iter().map(|p| p.as_f64().unwrap()).collect();
    assert!(y.iter().all(|p| (0.0..=1.0).contains(p)));
    assert!(y[0] < 0.1 && y[30] > 0.7);
    assert!(price_curve_json("{}", 0.5, -1.0, 2.0, 31).is_err());
}

#[test]
fn default_curve_flags_ray_points() {
    let model =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../models/default_poisson_atoms.json")).unwrap();
    // x = 0 is on the h = 0 ray; at t = 0.8 default may or may not have happened.
    let v: Value = serde_json::from_str(&price_curve_json(&model, 0.8, -1.0, 1.0, 3).unwrap()).unwrap();
    let flags: Vec<bool> = v["defaulted"].as_array().unwrap().iter().map(|b| b.as_bool().unwrap()).collect();
    assert_eq!(flags, [false, true, false]);
    assert_eq!(v["y"][1].as_f64().unwrap(), 0.0);
    assert!(price_curve_json(&model, 0.95, -1.0, 1.0, 3).is_err(), "survival is impossible after the last atom");
}

#[test]
fn density_is_non_negative_with_interior_peak() {
    let v: Value = serde_json::from_str(&transition_density_json("poisson", 2.0, 0.2, 0.5, 0.1, 41).unwrap()).unwrap();
    let psi: Vec<f64> = v["y"].as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).collect();
    assert!(psi.iter().all(|p| *p >= 0.0));
    let top = psi.iter().copied().fold(0.0, f64::max);
    assert!(psi[0] < 1e-6 * top && psi[40] < 1e-6 * top);
}
