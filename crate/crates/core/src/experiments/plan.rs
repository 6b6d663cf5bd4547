use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{param, LabError, Result};
use crate::fbm::CouplingNormalization;
use crate::gauss_lrd::DEFAULT_TRUNCATION;
use crate::hermite::gamma_exponent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    VarianceAsymptote,
    CltMarginal,
    CountingClt,
    VervaatChi2,
    CouplingRateS,
    CouplingRateN,
    CouplingRateZ,
    ReductionResidual,
    BkMarginal,
    IdentitySweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        Self::VarianceAsymptote,
        Self::CltMarginal,
        Self::CountingClt,
        Self::VervaatChi2,
        Self::CouplingRateS,
        Self::CouplingRateN,
        Self::CouplingRateZ,
        Self::ReductionResidual,
        Self::BkMarginal,
        Self::IdentitySweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::VarianceAsymptote => "variance_asymptote",
            Self::CltMarginal => "clt_marginal",
            Self::CountingClt => "counting_clt",
            Self::VervaatChi2 => "vervaat_chi2",
            Self::CouplingRateS => "coupling_rate_S",
            Self::CouplingRateN => "coupling_rate_N",
            Self::CouplingRateZ => "coupling_rate_Z",
            Self::ReductionResidual => "reduction_residual",
            Self::BkMarginal => "bk_marginal",
            Self::IdentitySweep => "identity_sweep",
        }
    }

    pub fn is_coupling(self) -> bool {
        matches!(self, Self::CouplingRateS | Self::CouplingRateN | Self::CouplingRateZ)
    }

    pub fn is_distribution(self) -> bool {
        matches!(self, Self::CltMarginal | Self::CountingClt | Self::VervaatChi2 | Self::BkMarginal)
    }

    /// Kinds that evaluate the counting process and so need `G ≥ 0`.
    pub fn needs_nonnegative(self) -> bool {
        matches!(
            self,
            Self::CountingClt | Self::VervaatChi2 | Self::CouplingRateN | Self::CouplingRateZ | Self::IdentitySweep
        )
    }

    /// Kinds whose normalization divides by `J_1`.
    pub fn needs_rank_one(self) -> bool {
        self.is_coupling()
            || matches!(self, Self::CltMarginal | Self::CountingClt | Self::VervaatChi2 | Self::ReductionResidual)
    }

    /// Kinds that fit a rate slope over a horizon ladder.
    pub fn uses_horizons(self) -> bool {
        self.is_coupling() || matches!(self, Self::ReductionResidual | Self::VarianceAsymptote)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| LabError::Parameter(format!("unknown experiment kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Upper bound on the KS distance of distribution experiments.
    pub ks: f64,
    /// `δ` added to reference exponents.
    pub slope_margin: f64,
    /// Minimum excess of the raw-statistic slope over the residual slope.
    pub raw_gap: f64,
    /// Relative residual bound for the `Z` decomposition identity.
    pub identity: f64,
    /// Minimum correlation between the centred partial sum and the coupled fBm.
    pub correlation: f64,
    /// Half-width of the acceptance band around one for variance ratios.
    pub variance_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { ks: 0.05, slope_margin: 0.1, raw_gap: 0.05, identity: 1e-9, correlation: 0.9, variance_band: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    pub alpha: f64,
    pub subordinator: String,
    /// Sample size for fixed-`n` experiments.
    pub n: usize,
    /// Horizon ladder for rate experiments.
    pub horizons: Vec<usize>,
    pub replicates: usize,
    pub base_seed: u64,
    /// Number of retained weights `M`; zero selects i.i.d. innovations.
    pub truncation: usize,
    /// Evaluation point of the empirical Bahadur–Kiefer experiment.
    pub t_eval: f64,
    /// Random evaluation times per series in the identity sweep.
    pub identity_points: usize,
    pub coupling_normalization: CouplingNormalization,
    pub tolerances: Tolerances,
}

/// Truncation of the coupling experiments: sixteen times the largest default
/// horizon, so that the weights dropped beyond `M` stay below the lattice
/// error of the coupling at every horizon.
pub const COUPLING_TRUNCATION: usize = 1 << 20;

fn dyadic(lo: u32, hi: u32, step: u32) -> Vec<usize> {
    (lo..=hi).step_by(step as usize).map(|e| 1usize << e).collect()
}

impl ExperimentPlan {
    /// Default parameters for each experiment.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let mut plan = Self {
            kind,
            alpha: 0.4,
            subordinator: "identity".into(),
            n: 1 << 12,
            horizons: Vec::new(),
            replicates: 2000,
            base_seed: 20_240_601,
            truncation: DEFAULT_TRUNCATION,
            t_eval: 0.5,
            identity_points: 100,
            coupling_normalization: CouplingNormalization::MandelbrotVanNess,
            tolerances: Tolerances::default(),
        };
        match kind {
            ExperimentKind::VarianceAsymptote => {
                plan.truncation = 1 << 20;
                plan.horizons = dyadic(12, 16, 2);
                plan.replicates = 1;
            }
            ExperimentKind::CltMarginal => {
                plan.subordinator = "exp".into();
            }
            ExperimentKind::CountingClt => {
                plan.subordinator = "quantile-exponential:lambda=1".into();
                plan.tolerances.ks = 0.06;
            }
            ExperimentKind::VervaatChi2 => {
                plan.subordinator = "exp".into();
                plan.tolerances.ks = 0.07;
            }
            ExperimentKind::CouplingRateS => {
                plan.horizons = dyadic(10, 16, 1);
                plan.replicates = 50;
                plan.truncation = COUPLING_TRUNCATION;
            }
            ExperimentKind::CouplingRateN | ExperimentKind::CouplingRateZ => {
                plan.subordinator = "quantile-exponential:lambda=1".into();
                plan.horizons = dyadic(10, 16, 1);
                plan.replicates = 50;
                plan.truncation = COUPLING_TRUNCATION;
            }
            ExperimentKind::ReductionResidual => {
                plan.subordinator = "exp".into();
                plan.horizons = dyadic(10, 16, 1);
                plan.replicates = 50;
            }
            ExperimentKind::BkMarginal => {
                plan.alpha = 0.5;
                plan.replicates = 1000;
                plan.tolerances.ks = 0.08;
            }
            ExperimentKind::IdentitySweep => {
                plan.subordinator = "quantile-exponential:lambda=1".into();
                plan.n = 1000;
                plan.replicates = 50;
            }
        }
        plan
    }

    /// `γ = 2 - 2α` for `α < 1/2`, else `1`.
    pub fn gamma(&self) -> f64 {
        gamma_exponent(self.alpha)
    }

    pub fn hurst(&self) -> f64 {
        1.0 - self.alpha / 2.0
    }

    /// Checks that do not need the subordinator's expansion.
    pub fn validate_shape(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return param(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.replicates == 0 {
            return param("replicates must be at least 1");
        }
        if self.kind.uses_horizons() {
            let need = if self.kind == ExperimentKind::VarianceAsymptote { 1 } else { 3 };
            if self.horizons.len() < need {
                return param(format!("{} needs at least {need} horizons", self.kind));
            }
            if self.horizons[0] == 0 || self.horizons.windows(2).any(|w| w[0] >= w[1]) {
                return param("horizons must be positive and strictly increasing");
            }
        } else if self.n == 0 {
            return param("n must be positive");
        }
        if self.kind == ExperimentKind::BkMarginal && !(self.t_eval > 0.0 && self.t_eval < 1.0) {
            return param(format!("t_eval must lie in (0, 1), got {}", self.t_eval));
        }
        if self.kind == ExperimentKind::BkMarginal && self.alpha >= 1.0 {
            return param("the rank-one Bahadur–Kiefer limit needs α < 1");
        }
        if self.kind == ExperimentKind::IdentitySweep && self.identity_points == 0 {
            return param("identity_points must be positive");
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("ks", t.ks),
            ("slope_margin", t.slope_margin),
            ("raw_gap", t.raw_gap),
            ("identity", t.identity),
            ("correlation", t.correlation),
            ("variance_band", t.variance_band),
        ] {
            if !v.is_finite() || v < 0.0 {
                return param(format!("tolerance {name} must be a nonnegative number, got {v}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(serde_json::from_str::<ExperimentKind>(&json).unwrap(), k);
        }
        assert!("nope".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn defaults_are_valid() {
        for k in ExperimentKind::ALL {
            ExperimentPlan::default_for(k).validate_shape().unwrap();
        }
    }

    #[test]
    fn shape_errors() {
        let mut p = ExperimentPlan::default_for(ExperimentKind::CouplingRateS);
        p.alpha = 1.2;
        assert!(p.validate_shape().is_err());
        let mut p = ExperimentPlan::default_for(ExperimentKind::CouplingRateS);
        p.horizons = vec![16, 8, 32];
        assert!(p.validate_shape().is_err());
        p.horizons = vec![8, 16];
        assert!(p.validate_shape().is_err());
        let mut p = ExperimentPlan::default_for(ExperimentKind::CltMarginal);
        p.replicates = 0;
        assert!(p.validate_shape().is_err());
    }

    #[test]
    fn gamma_rule() {
        let mut p = ExperimentPlan::default_for(ExperimentKind::CouplingRateS);
        assert!((p.gamma() - 1.2).abs() < 1e-15);
        p.alpha = 0.75;
        assert_eq!(p.gamma(), 1.0);
    }
}
