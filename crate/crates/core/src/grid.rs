//! Time grids and sampled paths.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Strictly increasing grid `0 = t_0 < ... < t_n = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
    uniform: bool,
}

impl TimeGrid {
    /// Uniform grid with `steps` intervals on `[0, horizon]`.
    ///
    /// Points are computed as `horizon * k / steps` so that the grid is exactly
    /// closed under `t -> horizon - t` up to the rounding of that product.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if steps < 1 {
            return Err(Error::InvalidGrid("need at least one step".into()));
        }
        let n = steps as f64;
        let mut points: Vec<f64> = (0..=steps).map(|k| horizon * (k as f64) / n).collect();
        points[steps] = horizon;
        Ok(TimeGrid { points, uniform: true })
    }

    /// Arbitrary grid; must start at exactly 0 and be strictly increasing.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid("need at least two points".into()));
        }
        if points[0] != 0.0 {
            return Err(Error::InvalidGrid("first point must be 0".into()));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite point".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        Ok(TimeGrid { points, uniform: false })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().expect("grid has points")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Index of the grid point equal to `t` (within `1e-9 * T`), if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * self.horizon();
        let k = self.points.partition_point(|&p| p < t - tol);
        (k < self.points.len() && (self.points[k] - t).abs() <= tol).then_some(k)
    }

    /// Largest index `k` with `t_k <= t` (up to `1e-9` relative slack).
    pub fn floor_index(&self, t: f64) -> usize {
        let tol = 1e-9 * self.horizon();
        self.points.partition_point(|&p| p <= t + tol).saturating_sub(1)
    }

    /// Whether `t -> T - t` maps grid points onto grid points.
    pub fn is_symmetric(&self) -> bool {
        if self.uniform {
            return true;
        }
        let horizon = self.horizon();
        let tol = 1e-12 * horizon;
        let n = self.points.len();
        (0..n).all(|k| (self.points[k] + self.points[n - 1 - k] - horizon).abs() <= tol)
    }

    /// Grid `0 = t_0 < ... < t_k`.
    pub fn prefix(&self, k: usize) -> Result<TimeGrid> {
        if k == 0 || k >= self.points.len() {
            return Err(Error::InvalidGrid(format!("prefix end {k} out of range")));
        }
        Ok(TimeGrid { points: self.points[..=k].to_vec(), uniform: self.uniform })
    }
}

/// Values of a process sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl Path {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("path values must be finite".into()));
        }
        Ok(Path { grid, values })
    }

    pub(crate) fn from_parts(grid: TimeGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Path { grid, values }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn times(&self) -> &[f64] {
        self.grid.points()
    }

    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.grid.index_of(t).map(|k| self.values[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.points().iter().copied().zip(self.values.iter().copied())
    }

    pub fn prefix(&self, k: usize) -> Result<Path> {
        Ok(Path { grid: self.grid.prefix(k)?, values: self.values[..=k].to_vec() })
    }

    /// `t,value` CSV, one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.iter() {
            let _ = writeln!(out, "{},{}", fmt17(t), fmt17(v));
        }
        out
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_endpoints_are_exact() {
        let g = TimeGrid::uniform(1.7, 13).unwrap();
        assert_eq!(g.points()[0], 0.0);
        assert_eq!(g.horizon(), 1.7);
        assert_eq!(g.len(), 14);
        assert!(g.is_symmetric());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::uniform(0.0, 10).is_err());
        assert!(TimeGrid::uniform(1.0, 0).is_err());
        assert!(TimeGrid::from_points(vec![0.0]).is_err());
        assert!(TimeGrid::from_points(vec![0.1, 1.0]).is_err());
        assert!(TimeGrid::from_points(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    }

    #[test]
    fn symmetry_of_irregular_grids() {
        assert!(TimeGrid::from_points(vec![0.0, 0.2, 0.8, 1.0]).unwrap().is_symmetric());
        assert!(!TimeGrid::from_points(vec![0.0, 0.2, 0.7, 1.0]).unwrap().is_symmetric());
    }

    #[test]
    fn index_lookups() {
        let g = TimeGrid::uniform(1.0, 10).unwrap();
        assert_eq!(g.index_of(0.7), Some(7));
        assert_eq!(g.index_of(0.75), None);
        assert_eq!(g.floor_index(0.75), 7);
        assert_eq!(g.floor_index(0.7), 7);
        assert_eq!(g.floor_index(1.0), 10);
    }

    #[test]
    fn path_csv_has_header_and_rows() {
        let g = TimeGrid::uniform(1.0, 2).unwrap();
        let p = Path::new(g, vec![0.0, 0.25, 0.0]).unwrap();
        let csv = p.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,value");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "5.0000000000000000e-1,2.5000000000000000e-1");
        let back: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 0.25);
    }

    #[test]
    fn path_rejects_length_mismatch() {
        let g = TimeGrid::uniform(1.0, 2).unwrap();
        assert!(Path::new(g.clone(), vec![0.0; 2]).is_err());
        assert!(Path::new(g, vec![0.0, f64::NAN, 0.0]).is_err());
    }
}
