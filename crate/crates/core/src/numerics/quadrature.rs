//! Adaptive Gauss–Kronrod (7/15) quadrature on finite and half-infinite
//! intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod abscissae (positive half, descending) and weights.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// How the integration range is refined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Global adaptive bisection of the worst interval.
    Adaptive,
    /// A fixed number of equal panels, one 15-point rule each.
    Composite { panels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub scheme: Scheme,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { scheme: Scheme::Adaptive, abs_tol: 1e-12, rel_tol: 1e-9, max_subdivisions: 2000 }
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod panel with the QUADPACK error heuristic.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { a, b, value, error }
}

impl Quadrature {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Quadrature { abs_tol, rel_tol, ..Default::default() }
    }

    pub fn composite(panels: usize) -> Self {
        Quadrature { scheme: Scheme::Composite { panels: panels.max(1) }, ..Default::default() }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }

    /// `∫_a^b f`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Estimate> {
        self.integrate_with_breaks(f, &[a, b])
    }

    /// `∫ f` over `[points[0], points[last]]`, starting from the partition
    /// given by `points` (sorted, duplicates ignored).
    pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(&self, mut f: F, points: &[f64]) -> Result<Estimate> {
        let mut pts: Vec<f64> = points.iter().copied().filter(|p| p.is_finite()).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        if pts.len() < 2 {
            return Ok(Estimate { value: 0.0, error: 0.0, evaluations: 0 });
        }
        match self.scheme {
            Scheme::Composite { panels } => {
                let mut value = 0.0;
                let mut error = 0.0;
                let mut evaluations = 0;
                for w in pts.windows(2) {
                    let h = (w[1] - w[0]) / panels as f64;
                    for k in 0..panels {
                        let a = w[0] + h * k as f64;
                        let b = if k + 1 == panels { w[1] } else { a + h };
                        let s = gk15(&mut f, a, b);
                        value += s.value;
                        error += s.error;
                        evaluations += 15;
                    }
                }
                Ok(Estimate { value, error, evaluations })
            }
            Scheme::Adaptive => self.adaptive(&mut f, &pts),
        }
    }

    fn adaptive<F: FnMut(f64) -> f64>(&self, f: &mut F, pts: &[f64]) -> Result<Estimate> {
        let mut heap = BinaryHeap::with_capacity(pts.len() + 2 * self.max_subdivisions);
        let mut value = 0.0;
        let mut error = 0.0;
        let mut evaluations = 0;
        for w in pts.windows(2) {
            let s = gk15(f, w[0], w[1]);
            value += s.value;
            error += s.error;
            evaluations += 15;
            heap.push(s);
        }
        let mut subdivisions = 0;
        while error > self.target(value) {
            if subdivisions >= self.max_subdivisions {
                return Err(Error::Quadrature { estimate: value, error, subdivisions });
            }
            let worst = heap.pop().expect("heap never empties");
            let mid = 0.5 * (worst.a + worst.b);
            if !(mid > worst.a && mid < worst.b) {
                // Interval cannot be split further in floating point.
                heap.push(worst);
                return Err(Error::Quadrature { estimate: value, error, subdivisions });
            }
            let left = gk15(f, worst.a, mid);
            let right = gk15(f, mid, worst.b);
            evaluations += 30;
            subdivisions += 1;
            value += left.value + right.value - worst.value;
            error += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);
            if heap.len() % 64 == 0 {
                // Re-sum to shed accumulated cancellation error.
                value = heap.iter().map(|s| s.value).sum();
                error = heap.iter().map(|s| s.error).sum();
            }
        }
        let value_sum: f64 = heap.iter().map(|s| s.value).sum();
        let error_sum: f64 = heap.iter().map(|s| s.error).sum();
        Ok(Estimate { value: value_sum, error: error_sum, evaluations })
    }

    /// `∫_a^∞ f`, via `x = a + u/(1-u)` on `u ∈ [0,1)`.
    ///
    /// `breaks` are points in `(a, ∞)` where the integrand has features.
    pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, breaks: &[f64]) -> Result<Estimate> {
        let mut pts = vec![0.0, 1.0];
        for &x in breaks {
            if x > a && x.is_finite() {
                let d = x - a;
                pts.push(d / (1.0 + d));
            }
        }
        self.integrate_with_breaks(
            |u| {
                let one_minus = 1.0 - u;
                let x = a + u / one_minus;
                let fx = f(x);
                if fx == 0.0 { 0.0 } else { fx / (one_minus * one_minus) }
            },
            &pts,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_sum_to_two() {
        let k: f64 = WGK[7] + 2.0 * WGK[..7].iter().sum::<f64>();
        let g: f64 = WG[3] + 2.0 * WG[..3].iter().sum::<f64>();
        assert!((k - 2.0).abs() < 1e-15);
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_panel_is_exact_for_polynomials() {
        // Kronrod 15 is exact to degree 22, Gauss 7 to degree 13.
        for deg in 0..=22 {
            let mut f = |x: f64| x.powi(deg);
            let s = gk15(&mut f, 0.0, 1.0);
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((s.value - exact).abs() < 1e-14, "degree {deg}: {}", s.value);
        }
    }

    #[test]
    fn adaptive_handles_sharp_peak_and_sqrt_singularity() {
        let q = Quadrature::default();
        let narrow = q.integrate(|x| (-(x - 0.3f64).powi(2) / (2.0 * 1e-6)).exp(), 0.0, 1.0).unwrap();
        let exact = (2.0 * std::f64::consts::PI * 1e-6).sqrt();
        assert!((narrow.value - exact).abs() < 1e-9 * exact);

        let sing = q.integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0).unwrap();
        assert!((sing.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn half_line_integrals() {
        let q = Quadrature::default();
        let e = q.integrate_to_infinity(|x| (-x).exp(), 0.0, &[]).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        let g = q.integrate_to_infinity(|x| (-x * x / 2.0).exp(), 0.0, &[1.0]).unwrap();
        assert!((g.value - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-11);
    }

    #[test]
    fn composite_scheme_converges_on_smooth_integrand() {
        let q = Quadrature::composite(8);
        let e = q.integrate(f64::sin, 0.0, std::f64::consts::PI).unwrap();
        assert!((e.value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn reports_non_convergence() {
        let q = Quadrature { max_subdivisions: 3, ..Default::default() };
        let err = q.integrate(|x| (1.0 / x).sin() / x, 1e-6, 1.0).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn error_estimate_respects_tolerance() {
        let q = Quadrature::default();
        let e = q.integrate(|x| (x * 3.0).cos() * (-x).exp(), 0.0, 5.0).unwrap();
        assert!(e.error <= q.abs_tol.max(q.rel_tol * e.value.abs()));
    }
}
