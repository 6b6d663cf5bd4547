//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use lrdlab_core::experiments::{ExperimentKind, ExperimentPlan};
use lrdlab_core::fbm::CouplingNormalization;

use crate::CliError;

/// Every key the config file and `--set` accept.
pub const KEYS: &[&str] = &[
    "kind",
    "alpha",
    "subordinator",
    "n",
    "horizons",
    "replicates",
    "seed",
    "truncation",
    "t_eval",
    "identity_points",
    "coupling_normalization",
    "ks_tolerance",
    "slope_margin",
    "raw_gap",
    "identity_tolerance",
    "correlation_min",
    "variance_band",
    "output_dir",
    "workers",
];

/// Raw settings in application order: file first, then command-line overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Parses the file format: one `key = value` per line, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut settings = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            let k = k.trim();
            if settings.values.contains_key(k) {
                return Err(CliError::Config(format!("line {}: duplicate key '{k}'", i + 1)));
            }
            settings.set(k, v.trim()).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("line {}: {m}", i + 1)),
                other => other,
            })?;
        }
        Ok(settings)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!("unknown key '{key}'")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// `KEY=VALUE` from the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), CliError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected KEY=VALUE, got '{pair}'")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Config(format!("cannot parse {key} = '{v}'"))),
        }
    }

    pub fn kind(&self) -> Result<ExperimentKind, CliError> {
        let name = self.get("kind").ok_or_else(|| CliError::Config("no experiment kind given".into()))?;
        Ok(name.parse()?)
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.get("output_dir").unwrap_or("."))
    }

    pub fn workers(&self) -> Result<Option<usize>, CliError> {
        match self.parsed::<usize>("workers")? {
            Some(0) => Err(CliError::Config("workers must be positive".into())),
            w => Ok(w),
        }
    }

    fn size(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.get(key)
            .map(|v| parse_size(v).map_err(|_| CliError::Config(format!("cannot parse {key} = '{v}'"))))
            .transpose()
    }

    /// The default plan for `kind` with every setting applied.
    pub fn plan(&self, kind: ExperimentKind) -> Result<ExperimentPlan, CliError> {
        let mut p = ExperimentPlan::default_for(kind);
        self.apply(&mut p)?;
        Ok(p)
    }

    pub fn apply(&self, p: &mut ExperimentPlan) -> Result<(), CliError> {
        if let Some(v) = self.parsed("alpha")? {
            p.alpha = v;
        }
        if let Some(v) = self.get("subordinator") {
            p.subordinator = v.to_string();
        }
        if let Some(v) = self.size("n")? {
            p.n = v;
        }
        if let Some(v) = self.get("horizons") {
            p.horizons = parse_list(v)?;
        }
        if let Some(v) = self.parsed("replicates")? {
            p.replicates = v;
        }
        if let Some(v) = self.parsed("seed")? {
            p.base_seed = v;
        }
        if let Some(v) = self.size("truncation")? {
            p.truncation = v;
        }
        if let Some(v) = self.parsed("t_eval")? {
            p.t_eval = v;
        }
        if let Some(v) = self.parsed("identity_points")? {
            p.identity_points = v;
        }
        if let Some(v) = self.get("coupling_normalization") {
            p.coupling_normalization = parse_normalization(v)?;
        }
        let t = &mut p.tolerances;
        for (key, slot) in [
            ("ks_tolerance", &mut t.ks),
            ("slope_margin", &mut t.slope_margin),
            ("raw_gap", &mut t.raw_gap),
            ("identity_tolerance", &mut t.identity),
            ("correlation_min", &mut t.correlation),
            ("variance_band", &mut t.variance_band),
        ] {
            if let Some(v) = self.parsed(key)? {
                *slot = v;
            }
        }
        Ok(())
    }
}

/// Comma-separated sizes; each entry may be written `2^k`.
pub fn parse_list(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(parse_size).collect()
}

pub fn parse_size(s: &str) -> Result<usize, CliError> {
    let bad = || CliError::Config(format!("cannot parse size '{s}'"));
    match s.split_once('^') {
        Some((b, e)) => {
            let b: usize = b.trim().parse().map_err(|_| bad())?;
            let e: u32 = e.trim().parse().map_err(|_| bad())?;
            b.checked_pow(e).ok_or_else(bad)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

fn parse_normalization(s: &str) -> Result<CouplingNormalization, CliError> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
        CliError::Config(format!("coupling_normalization must be exact_variance or mandelbrot_van_ness, got '{s}'"))
    })
}
