//! Market model: maturity, signal rate, noise law, interest rates, payoff and
//! (optionally) default-time law.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::laws::{DefaultTimeLaw, LevyLaw, PayoffDistribution};

/// Deterministic short rate `r(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RateCurve {
    Flat { value: f64 },
    /// Piecewise-linear in time through `(times[i], rates[i])`, constant
    /// beyond the first and last knots.
    Table { times: Vec<f64>, rates: Vec<f64> },
}

impl Default for RateCurve {
    fn default() -> Self {
        RateCurve::Flat { value: 0.0 }
    }
}

impl RateCurve {
    pub fn validate(&self) -> Result<()> {
        match self {
            RateCurve::Flat { value } if !value.is_finite() => Err(Error::Model("rate must be finite".into())),
            RateCurve::Table { times, rates } => {
                if times.is_empty() || times.len() != rates.len() {
                    return Err(Error::Model("rate table needs equal, non-empty times and rates".into()));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Model("rate table times must be increasing".into()));
                }
                if times.iter().chain(rates).any(|v| !v.is_finite()) {
                    return Err(Error::Model("rate table must be finite".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        match self {
            RateCurve::Flat { value } => *value,
            RateCurve::Table { times, rates } => {
                let k = times.partition_point(|&s| s <= t);
                if k == 0 {
                    rates[0]
                } else if k == times.len() {
                    rates[k - 1]
                } else {
                    let w = (t - times[k - 1]) / (times[k] - times[k - 1]);
                    rates[k - 1] + w * (rates[k] - rates[k - 1])
                }
            }
        }
    }

    /// `∫_a^b r(u) du`, exact for the piecewise-linear table.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self {
            RateCurve::Flat { value } => value * (b - a),
            RateCurve::Table { times, .. } => {
                let mut knots = vec![a];
                knots.extend(times.iter().copied().filter(|&s| s > a && s < b));
                knots.push(b);
                knots.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (self.rate(w[0]) + self.rate(w[1]))).sum()
            }
        }
    }
}

/// One pricing problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct MarketModel {
    pub horizon: f64,
    pub sigma: f64,
    /// Multiplier `μ` of the Lévy term in the default model.
    pub levy_drift_scale: f64,
    pub rate: RateCurve,
    pub payoff: PayoffDistribution,
    pub levy: LevyLaw,
    pub default_law: Option<DefaultTimeLaw>,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    #[serde(rename = "T")]
    horizon: f64,
    sigma: f64,
    #[serde(default = "unit_drift_scale")]
    mu: f64,
    #[serde(default)]
    rate: RateCurve,
    payoff: PayoffDistribution,
    levy: LevyLaw,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default_law: Option<DefaultTimeLaw>,
}

fn unit_drift_scale() -> f64 {
    1.0
}

impl TryFrom<RawModel> for MarketModel {
    type Error = Error;
    fn try_from(raw: RawModel) -> Result<Self> {
        let model = MarketModel {
            horizon: raw.horizon,
            sigma: raw.sigma,
            levy_drift_scale: raw.mu,
            rate: raw.rate,
            payoff: raw.payoff,
            levy: raw.levy,
            default_law: raw.default_law,
        };
        model.validate()?;
        Ok(model)
    }
}

impl From<MarketModel> for RawModel {
    fn from(m: MarketModel) -> Self {
        RawModel {
            horizon: m.horizon,
            sigma: m.sigma,
            mu: m.levy_drift_scale,
            rate: m.rate,
            payoff: m.payoff,
            levy: m.levy,
            default_law: m.default_law,
        }
    }
}

impl MarketModel {
    /// Model with zero rates, `μ = 1` and no default law.
    pub fn new(horizon: f64, sigma: f64, payoff: PayoffDistribution, levy: LevyLaw) -> Result<Self> {
        let model = MarketModel {
            horizon,
            sigma,
            levy_drift_scale: 1.0,
            rate: RateCurve::default(),
            payoff,
            levy,
            default_law: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_rate(mut self, rate: RateCurve) -> Result<Self> {
        rate.validate()?;
        self.rate = rate;
        Ok(self)
    }

    pub fn with_levy_drift_scale(mut self, mu: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::Model("mu must be finite".into()));
        }
        self.levy_drift_scale = mu;
        Ok(self)
    }

    pub fn with_default_law(mut self, law: DefaultTimeLaw) -> Result<Self> {
        law.validate(self.horizon)?;
        self.default_law = Some(law);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Model(format!("T must be positive, got {}", self.horizon)));
        }
        if !self.sigma.is_finite() || !self.levy_drift_scale.is_finite() {
            return Err(Error::Model("sigma and mu must be finite".into()));
        }
        self.rate.validate()?;
        self.levy.validate()?;
        if let Some(law) = &self.default_law {
            law.validate(self.horizon)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    /// Single-line JSON.
    pub fn to_json_compact(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    /// `P_t^T = exp(-∫_t^T r)`.
    pub fn discount(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok((-self.rate.integral(t, self.horizon)).exp())
    }

    /// `P_0^t = exp(-∫_0^t r)`.
    pub fn discount_from_zero(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok((-self.rate.integral(0.0, t)).exp())
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(domain(format!("time {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }

    pub(crate) fn check_interior(&self, t: f64) -> Result<()> {
        if !(t > 0.0 && t < self.horizon) {
            return Err(domain(format!("time {t} outside (0, {})", self.horizon)));
        }
        Ok(())
    }

    pub(crate) fn require_default_law(&self) -> Result<&DefaultTimeLaw> {
        if self.sigma == 0.0 {
            return Err(Error::Model("the default model needs sigma != 0".into()));
        }
        self.default_law.as_ref().ok_or_else(|| Error::Model("model has no default_law".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary() -> PayoffDistribution {
        PayoffDistribution::binary(0.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn discount_factors() {
        let m = MarketModel::new(1.0, 1.0, binary(), LevyLaw::Gamma).unwrap();
        assert_eq!(m.discount(0.3).unwrap(), 1.0);
        let m = m.with_rate(RateCurve::Flat { value: 0.05 }).unwrap();
        assert!((m.discount(0.0).unwrap() - 0.951_229_424_500_714).abs() < 1e-15);
        assert_eq!(m.discount(1.0).unwrap(), 1.0);
        assert!(m.discount(1.5).is_err());
    }

    #[test]
    fn table_curve_integrates_exactly() {
        let curve = RateCurve::Table { times: vec![0.0, 1.0], rates: vec![0.0, 0.1] };
        assert!((curve.integral(0.0, 1.0) - 0.05).abs() < 1e-15);
        assert!((curve.integral(0.5, 2.0) - (0.5 * 0.5 * 0.15 + 0.1)).abs() < 1e-15);
        assert_eq!(curve.rate(-1.0), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{
            "T": 1.0, "sigma": 1.0, "mu": 0.5,
            "rate": {"kind": "flat", "value": 0.02},
            "payoff": {"support": [0.0, 1.0], "probs": [0.5, 0.5]},
            "levy": {"kind": "poisson", "lambda": 2.0},
            "default_law": {"kind": "atoms", "times": [0.7, 0.8], "weights": [0.5, 0.5]}
        }"#;
        let m = MarketModel::from_json(text).unwrap();
        assert_eq!(m.levy_drift_scale, 0.5);
        assert_eq!(m.levy, LevyLaw::Poisson { lambda: 2.0 });
        let back = MarketModel::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
        let plain = r#"{"T": 1, "sigma": 1, "payoff": {"support": [1], "probs": [1]}, "levy": {"kind": "gamma"}}"#;
        assert_eq!(MarketModel::from_json(plain).unwrap().levy_drift_scale, 1.0);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(MarketModel::from_json(r#"{"T": -1, "sigma": 1, "payoff": {"support": [1], "probs": [1]}, "levy": {"kind": "gamma"}}"#).is_err());
        assert!(MarketModel::from_json(r#"{"T": 1, "sigma": 1, "payoff": {"support": [0, 1], "probs": [0.5, 0.6]}, "levy": {"kind": "gamma"}}"#).is_err());
        assert!(MarketModel::from_json(r#"{"T": 1, "sigma": 1, "payoff": {"support": [1], "probs": [1]}, "levy": {"kind": "gamma"}, "default_law": {"kind": "atoms", "times": [1.5], "weights": [1]}}"#).is_err());
    }
}
