use std::fmt;
use std::path::Path;
use std::str::FromStr;

use loci_core::Side;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Interval or test experiment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    Ci,
    Test,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Hybrid bootstrap interval or ordinary bootstrap p-value.
    Bootstrap,
    MOutOfN,
    LociNb,
    LotNb,
    LotIsDesign,
    LotIsRefined,
    LociIs,
    /// Exact-tail LOT, binomial model only.
    LotExact,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Bootstrap,
        Method::MOutOfN,
        Method::LociNb,
        Method::LotNb,
        Method::LotIsDesign,
        Method::LotIsRefined,
        Method::LociIs,
        Method::LotExact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bootstrap => "bootstrap",
            Method::MOutOfN => "m-out-of-n",
            Method::LociNb => "loci-nb",
            Method::LotNb => "lot-nb",
            Method::LotIsDesign => "lot-is-design",
            Method::LotIsRefined => "lot-is-refined",
            Method::LociIs => "loci-is",
            Method::LotExact => "lot-exact",
        }
    }

    pub fn supports(self, kind: ExperimentKind) -> bool {
        match self {
            Method::Bootstrap => true,
            Method::MOutOfN | Method::LociNb | Method::LociIs => kind == ExperimentKind::Ci,
            Method::LotNb | Method::LotIsDesign | Method::LotIsRefined | Method::LotExact => {
                kind == ExperimentKind::Test
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown method '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SideConfig {
    Upper,
    Lower,
    #[default]
    TwoSided,
}

impl From<SideConfig> for Side {
    fn from(s: SideConfig) -> Side {
        match s {
            SideConfig::Upper => Side::Upper,
            SideConfig::Lower => Side::Lower,
            SideConfig::TwoSided => Side::TwoSided,
        }
    }
}

/// Unit-cube design used for the try points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DesignSpec {
    /// Full factorial grid with `levels` values per free coordinate.
    Grid { levels: usize },
    /// Latin hypercube with `runs` points, reseeded per replication.
    Lhd { runs: usize },
    /// Only the estimate itself.
    CenterOnly,
}

impl Default for DesignSpec {
    fn default() -> Self {
        DesignSpec::Grid { levels: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Multinomial {
        pi: Vec<f64>,
        n: usize,
    },
    Weibull {
        a: f64,
        b: f64,
        tau: f64,
        n: usize,
    },
    Hdreg {
        n: usize,
        p: usize,
        /// Named null configuration `i`..`iv`.
        #[serde(default = "default_beta")]
        beta: String,
        #[serde(default = "default_rho")]
        rho: f64,
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default = "yes")]
        vary_sigma: bool,
        /// Values of `beta_2 = c` (with `beta_1 = 2`) for the power curve;
        /// an empty list skips it.
        #[serde(default = "default_power_grid")]
        power_grid: Vec<f64>,
    },
    Npreg {
        function: String,
        n: usize,
        #[serde(default = "half")]
        sigma: f64,
    },
    NormalMean {
        mu: f64,
        n: usize,
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default = "yes")]
        known_sigma: bool,
        #[serde(default)]
        null_upper: Option<f64>,
    },
    Binomial {
        pi: f64,
        n: usize,
        #[serde(default)]
        null_upper: Option<f64>,
    },
    Degenerate {
        value: f64,
    },
}

fn default_beta() -> String {
    "i".into()
}
fn default_rho() -> f64 {
    0.1
}
fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn yes() -> bool {
    true
}
fn default_power_grid() -> Vec<f64> {
    (1..=8).map(|k| -0.25 * k as f64).collect()
}
fn default_alpha() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: ExperimentKind,
    pub model: ModelConfig,
    pub methods: Vec<Method>,
    pub reps: usize,
    /// Resamples per try point.
    #[serde(alias = "M")]
    pub resamples: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Neighborhood size parameter, passed to the model.
    #[serde(default = "one")]
    pub delta: f64,
    #[serde(default)]
    pub side: SideConfig,
    #[serde(default)]
    pub design: DesignSpec,
    /// Subsample size for m-out-of-n; defaults to `floor(2 sqrt(n))`.
    #[serde(default)]
    pub subsample: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.resamples == 0 {
            return bad("resamples (M) must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0,1), got {}", self.alpha));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if self.methods.is_empty() {
            return bad("no methods given".into());
        }
        if let Some(m) = self.methods.iter().find(|m| !m.supports(self.experiment)) {
            return bad(format!("method {m} does not apply to {:?} experiments", self.experiment));
        }
        if self.methods.contains(&Method::LociIs) && self.side != SideConfig::Upper {
            return bad("loci-is gives upper limits only; set side = \"upper\"".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        match self.design {
            DesignSpec::Grid { levels: 0 } | DesignSpec::Lhd { runs: 0 } => {
                bad("design needs at least one point".into())
            }
            _ => Ok(()),
        }
    }

    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOML: &str = r#"
experiment = "ci"
methods = ["bootstrap", "loci-nb", "m-out-of-n"]
reps = 10
M = 200
delta = 0.1
seed = 3

[design]
kind = "grid"
levels = 3

[model]
kind = "multinomial"
pi = [0.2, 0.2, 0.2, 0.2, 0.2]
n = 30
"#;

    #[test]
    fn toml_and_json_agree() {
        let a = ExperimentConfig::parse(TOML).unwrap();
        assert_eq!(a.resamples, 200);
        assert_eq!(a.alpha, 0.05);
        assert_eq!(a.design, DesignSpec::Grid { levels: 3 });
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(ExperimentConfig::parse(&json).unwrap(), a);
    }

    #[test]
    fn invalid_settings_are_rejected() {
        assert!(ExperimentConfig::parse(&TOML.replace("reps = 10", "reps = 0")).is_err());
        assert!(ExperimentConfig::parse(&TOML.replace("delta = 0.1", "alpha = 1.5")).is_err());
        assert!(ExperimentConfig::parse(&TOML.replace("\"loci-nb\"", "\"lot-nb\"")).is_err());
        assert!(ExperimentConfig::parse(&TOML.replace("\"loci-nb\"", "\"loci-foo\"")).is_err());
        assert!(ExperimentConfig::parse(&TOML.replace("n = 30", "n = 30\nextra = 1")).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
    }
}
