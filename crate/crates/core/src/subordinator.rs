//! Built-in subordinating functions `G` and their marginal laws.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{param, LabError, Result};
use crate::hermite::{hermite_coefficients, normal_expectation, HermiteExpansion};
use crate::normal;

/// The shipped choices of `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum SubordinatorKind {
    /// `G(x) = x`.
    Identity,
    /// `G(x) = x² - 1`.
    SquareMinusOne,
    /// `G(x) = e^x`.
    Exp,
    /// `G = F^{-1}∘Φ` for the exponential law with rate `lambda`.
    QuantileExponential { lambda: f64 },
    /// `G = F^{-1}∘Φ` for the lognormal law, i.e. `G(x) = e^{mu + sigma x}`.
    QuantileLognormal { mu: f64, sigma: f64 },
    /// `G(x) = value`; degenerate, used to exercise precondition checks.
    Constant { value: f64 },
}

impl SubordinatorKind {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Identity => x,
            Self::SquareMinusOne => x * x - 1.0,
            Self::Exp => x.exp(),
            Self::QuantileExponential { lambda } => -normal::log_sf(x) / lambda,
            Self::QuantileLognormal { mu, sigma } => (mu + sigma * x).exp(),
            Self::Constant { value } => value,
        }
    }

    /// Condition (iii): `G ≥ 0` almost surely.
    pub fn is_nonnegative(&self) -> bool {
        match *self {
            Self::Identity | Self::SquareMinusOne => false,
            Self::Exp | Self::QuantileExponential { .. } | Self::QuantileLognormal { .. } => true,
            Self::Constant { value } => value >= 0.0,
        }
    }

    pub fn is_strictly_increasing(&self) -> bool {
        matches!(
            self,
            Self::Identity | Self::Exp | Self::QuantileExponential { .. } | Self::QuantileLognormal { .. }
        )
    }

    /// `(E G, E G²)` where known in closed form.
    fn closed_moments(&self) -> Option<(f64, f64)> {
        Some(match *self {
            Self::Identity => (0.0, 1.0),
            Self::SquareMinusOne => (0.0, 2.0),
            Self::Exp => (0.5f64.exp(), 2f64.exp()),
            Self::QuantileExponential { lambda } => (1.0 / lambda, 2.0 / (lambda * lambda)),
            Self::QuantileLognormal { mu, sigma } => {
                ((mu + 0.5 * sigma * sigma).exp(), (2.0 * mu + 2.0 * sigma * sigma).exp())
            }
            Self::Constant { value } => (value, value * value),
        })
    }

    /// `J_q` where known in closed form.
    pub fn closed_form_coefficient(&self, q: usize) -> Option<f64> {
        if q == 0 {
            return None;
        }
        match *self {
            Self::Identity => Some(if q == 1 { 1.0 } else { 0.0 }),
            Self::SquareMinusOne => Some(if q == 2 { 2.0 } else { 0.0 }),
            Self::Exp => Some(0.5f64.exp()),
            Self::QuantileLognormal { mu, sigma } => {
                Some(sigma.powi(q as i32) * (mu + 0.5 * sigma * sigma).exp())
            }
            Self::Constant { .. } => Some(0.0),
            Self::QuantileExponential { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::QuantileExponential { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                param(format!("exponential rate must be positive, got {lambda}"))
            }
            Self::QuantileLognormal { mu, sigma } if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) => {
                param(format!("lognormal parameters invalid: mu={mu}, sigma={sigma}"))
            }
            Self::Constant { value } if !value.is_finite() => param("constant must be finite"),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SubordinatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "identity"),
            Self::SquareMinusOne => write!(f, "square-minus-one"),
            Self::Exp => write!(f, "exp"),
            Self::QuantileExponential { lambda } => write!(f, "quantile-exponential:lambda={lambda}"),
            Self::QuantileLognormal { mu, sigma } => write!(f, "quantile-lognormal:mu={mu},sigma={sigma}"),
            Self::Constant { value } => write!(f, "constant:value={value}"),
        }
    }
}

impl FromStr for SubordinatorKind {
    type Err = LabError;

    /// Parses names such as `exp` or `quantile-exponential:lambda=1.0`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n.trim(), r.trim()),
            None => (s.trim(), ""),
        };
        let mut args: Vec<(String, f64)> = Vec::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| LabError::Parameter(format!("expected key=value in '{part}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| LabError::Parameter(format!("not a number in '{part}'")))?;
            args.push((k.trim().to_string(), v));
        }
        let mut take = |key: &str, default: Option<f64>| -> Result<f64> {
            match args.iter().position(|(k, _)| k == key) {
                Some(i) => Ok(args.remove(i).1),
                None => default.ok_or_else(|| LabError::Parameter(format!("'{name}' needs {key}="))),
            }
        };
        let kind = match name {
            "identity" => Self::Identity,
            "square-minus-one" => Self::SquareMinusOne,
            "exp" => Self::Exp,
            "quantile-exponential" => Self::QuantileExponential { lambda: take("lambda", Some(1.0))? },
            "quantile-lognormal" => Self::QuantileLognormal {
                mu: take("mu", Some(0.0))?,
                sigma: take("sigma", Some(1.0))?,
            },
            "constant" => Self::Constant { value: take("value", None)? },
            other => return param(format!("unknown subordinator '{other}'")),
        };
        if let Some((k, _)) = args.first() {
            return param(format!("unknown argument '{k}' for '{name}'"));
        }
        kind.validate()?;
        Ok(kind)
    }
}

/// A subordinating function with its first two moments under `N(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subordinator {
    pub kind: SubordinatorKind,
    /// `μ = E G(η)`.
    pub mu: f64,
    /// `E G(η)²`.
    pub second_moment: f64,
    pub description: String,
}

impl Subordinator {
    /// Builds the subordinator, computing `μ` and `E G²` by quadrature.
    pub fn new(kind: SubordinatorKind) -> Result<Self> {
        kind.validate()?;
        let mu = normal_expectation(|x| kind.eval(x), 1e-13)?;
        let second_moment = normal_expectation(|x| kind.eval(x).powi(2), 1e-13)?;
        if !second_moment.is_finite() {
            return Err(LabError::Numerical(format!("E G² is not finite for {kind}")));
        }
        Ok(Self { kind, mu, second_moment, description: kind.to_string() })
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::new(name.parse()?)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.kind.eval(x)
    }

    pub fn variance(&self) -> f64 {
        self.second_moment - self.mu * self.mu
    }

    /// `μ`, preferring the closed form when one exists.
    pub fn exact_mean(&self) -> f64 {
        self.kind.closed_moments().map(|m| m.0).unwrap_or(self.mu)
    }

    pub fn closed_moments(&self) -> Option<(f64, f64)> {
        self.kind.closed_moments()
    }

    /// Hermite expansion to order `q_max`: closed-form coefficients where the
    /// kind has them, quadrature otherwise.
    pub fn expansion(&self, q_max: usize) -> Result<HermiteExpansion> {
        let closed: Option<Vec<f64>> = (1..=q_max).map(|q| self.kind.closed_form_coefficient(q)).collect();
        match closed {
            Some(c) => Ok(HermiteExpansion::from_coefficients(c, self.second_moment)),
            None => hermite_coefficients(self, q_max, 64),
        }
    }

    /// Marginal distribution function `F(y) = P(G(η) ≤ y)`.
    pub fn cdf(&self, y: f64) -> Option<f64> {
        Some(match self.kind {
            SubordinatorKind::Identity => normal::cdf(y),
            SubordinatorKind::SquareMinusOne => {
                if y < -1.0 {
                    0.0
                } else {
                    2.0 * normal::cdf((y + 1.0).sqrt()) - 1.0
                }
            }
            SubordinatorKind::Exp => {
                if y <= 0.0 {
                    0.0
                } else {
                    normal::cdf(y.ln())
                }
            }
            SubordinatorKind::QuantileExponential { lambda } => {
                if y <= 0.0 {
                    0.0
                } else {
                    -(-lambda * y).exp_m1()
                }
            }
            SubordinatorKind::QuantileLognormal { mu, sigma } => {
                if y <= 0.0 {
                    0.0
                } else {
                    normal::cdf((y.ln() - mu) / sigma)
                }
            }
            SubordinatorKind::Constant { .. } => return None,
        })
    }

    /// `G^{-1}(y)` for strictly increasing kinds.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        match self.kind {
            SubordinatorKind::Identity => Some(y),
            SubordinatorKind::Exp => Some(if y > 0.0 { y.ln() } else { f64::NEG_INFINITY }),
            SubordinatorKind::QuantileExponential { lambda } => Some(if y > 0.0 {
                // Φ^{-1}(1 - e^{-λy}) = -Φ^{-1}(e^{-λy})
                -normal::quantile((-lambda * y).exp())
            } else {
                f64::NEG_INFINITY
            }),
            SubordinatorKind::QuantileLognormal { mu, sigma } => Some(if y > 0.0 {
                (y.ln() - mu) / sigma
            } else {
                f64::NEG_INFINITY
            }),
            _ => None,
        }
    }

    /// Marginal quantile `F^{-1}(p) = G(Φ^{-1}(p))` for increasing kinds.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        self.kind.is_strictly_increasing().then(|| self.eval(normal::quantile(p)))
    }

    /// Marginal density `f = F'` for increasing kinds.
    pub fn density(&self, y: f64) -> Option<f64> {
        match self.kind {
            SubordinatorKind::Identity => Some(normal::pdf(y)),
            SubordinatorKind::Exp => Some(if y > 0.0 { normal::pdf(y.ln()) / y } else { 0.0 }),
            SubordinatorKind::QuantileExponential { lambda } => {
                Some(if y >= 0.0 { lambda * (-lambda * y).exp() } else { 0.0 })
            }
            SubordinatorKind::QuantileLognormal { mu, sigma } => Some(if y > 0.0 {
                normal::pdf((y.ln() - mu) / sigma) / (sigma * y)
            } else {
                0.0
            }),
            _ => None,
        }
    }
}
