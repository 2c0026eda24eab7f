//! Run configuration: a TOML file with strict (unknown-key-rejecting)
//! parsing plus command-line overrides.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {err}")]
    Io { path: String, err: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Builtin,
    Expr,
    Subprocess,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub kind: OracleKind,
    /// Builtin benchmark name.
    #[serde(default)]
    pub name: Option<String>,
    /// Expression source for kind = "expr".
    #[serde(default)]
    pub expr: Option<String>,
    /// Child command line for kind = "subprocess".
    #[serde(default)]
    pub command: Option<Vec<String>>,
    /// Ambient dimension (required for expr/subprocess; inferred for
    /// builtins).
    #[serde(default)]
    pub dim: Option<usize>,
    /// Box domain per axis; defaults to the builtin's study domain or
    /// [-1,1]^n.
    #[serde(default)]
    pub domain: Option<Vec<[f64; 2]>>,
    /// When set, wraps the oracle in a seeded uniform-bounded noise model.
    #[serde(default)]
    pub noise_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Regular,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    Grid,
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Orthogonal,
    NormalEq,
}

fn default_eps() -> f64 {
    1e-2
}
fn default_alpha() -> f64 {
    0.05
}
fn default_delta() -> f64 {
    0.5
}
fn default_split() -> usize {
    1
}
fn default_seed() -> u64 {
    42
}
fn default_max_rounds() -> usize {
    20
}
fn default_budget() -> u64 {
    10_000_000
}
fn default_sample_cap() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "RunSection::default_mode")]
    pub mode: Mode,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Regularity route A: explicit constants.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub a1: Option<f64>,
    #[serde(default)]
    pub a2: Option<f64>,
    #[serde(default)]
    pub m: Option<u32>,
    /// Regularity route B: derive the constants from kappa and the
    /// Jackson constant.
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub c_nm: Option<f64>,
    /// Forced degree, bypassing the planner.
    #[serde(default)]
    pub degree: Option<u32>,
    /// Forced total sample budget.
    #[serde(default)]
    pub samples: Option<u64>,
    /// Oracle noise bound used with a forced degree.
    #[serde(default)]
    pub eta: f64,
    #[serde(default = "RunSection::default_sampling")]
    pub sampling: Sampling,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_split")]
    pub split: usize,
    #[serde(default)]
    pub polish: bool,
    /// Adaptive stop tolerance (defaults to eps).
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "default_sample_cap")]
    pub sample_cap: u64,
    #[serde(default = "RunSection::default_method")]
    pub method: Method,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl RunSection {
    fn default_mode() -> Mode {
        Mode::Regular
    }
    fn default_sampling() -> Sampling {
        Sampling::Grid
    }
    fn default_method() -> Method {
        Method::Orthogonal
    }
}

impl Default for RunSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "OutputSection::default_dir")]
    pub dir: String,
}

impl OutputSection {
    fn default_dir() -> String {
        "out".to_string()
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: Self::default_dir(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub oracle: OracleSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub eps: Option<f64>,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub degree: Option<u32>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub split: Option<usize>,
    pub polish: Option<bool>,
    pub out: Option<String>,
    pub threads: Option<usize>,
    pub sampling: Option<Sampling>,
    pub method: Option<Method>,
    pub eta: Option<f64>,
    pub tol: Option<f64>,
    pub budget: Option<u64>,
    pub noise_seed: Option<u64>,
}

impl RunConfig {
    pub fn from_path(path: &str) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_string(),
            err: e.to_string(),
        })?;
        RunConfig::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, ov: &Overrides) {
        let r = &mut self.run;
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = ov.$field {
                    r.$field = v;
                }
            };
        }
        set!(mode);
        set!(eps);
        set!(alpha);
        set!(delta);
        set!(seed);
        set!(split);
        set!(polish);
        set!(sampling);
        set!(method);
        set!(eta);
        set!(budget);
        if let Some(v) = ov.degree {
            r.degree = Some(v);
        }
        if let Some(v) = ov.samples {
            r.samples = Some(v);
        }
        if let Some(v) = ov.tol {
            r.tol = Some(v);
        }
        if let Some(v) = ov.threads {
            r.threads = Some(v);
        }
        if let Some(v) = ov.out.clone() {
            self.output.dir = v;
        }
        if let Some(v) = ov.noise_seed {
            self.oracle.noise_seed = Some(v);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        match self.oracle.kind {
            OracleKind::Builtin => {
                if self.oracle.name.is_none() {
                    return bad("builtin oracle needs `name`".into());
                }
            }
            OracleKind::Expr => {
                if self.oracle.expr.is_none() || self.oracle.dim.is_none() {
                    return bad("expr oracle needs `expr` and `dim`".into());
                }
            }
            OracleKind::Subprocess => {
                if self.oracle.command.as_ref().map_or(true, |c| c.is_empty())
                    || self.oracle.dim.is_none()
                {
                    return bad("subprocess oracle needs `command` and `dim`".into());
                }
            }
        }
        if let Some(domain) = &self.oracle.domain {
            for (i, [lo, hi]) in domain.iter().enumerate() {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return bad(format!("domain axis {i} is degenerate: [{lo}, {hi}]"));
                }
            }
        }
        let r = &self.run;
        if !(r.eps > 0.0 && r.eps.is_finite()) {
            return bad(format!("eps must be positive, got {}", r.eps));
        }
        if !(r.alpha > 0.0 && r.alpha < 1.0) {
            return bad(format!("alpha must be in (0,1), got {}", r.alpha));
        }
        if !(r.delta > 0.0 && r.delta < 1.0) {
            return bad(format!("delta must be in (0,1), got {}", r.delta));
        }
        if r.eta < 0.0 {
            return bad(format!("eta must be nonnegative, got {}", r.eta));
        }
        if r.split == 0 {
            return bad("split must be at least 1".into());
        }
        if let Some(t) = r.tol {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("tol must be in (0,1), got {t}"));
            }
        }
        for (name, v) in [
            ("lambda", r.lambda),
            ("a1", r.a1),
            ("a2", r.a2),
            ("kappa", r.kappa),
            ("c_nm", r.c_nm),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_builtin_config() {
        let cfg = RunConfig::from_toml(
            r#"
            [oracle]
            kind = "builtin"
            name = "deuflhard2d"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.run.eps, 1e-2);
        assert_eq!(cfg.run.split, 1);
        assert_eq!(cfg.output.dir, "out");
    }

    #[test]
    fn unknown_keys_rejected() {
        let r = RunConfig::from_toml(
            r#"
            [oracle]
            kind = "builtin"
            name = "dejong5"
            wat = 3
            "#,
        );
        assert!(matches!(r, Err(ConfigError::Parse(_))));
    }

    #[test]
    fn out_of_range_rejected() {
        let r = RunConfig::from_toml(
            r#"
            [oracle]
            kind = "builtin"
            name = "dejong5"
            [run]
            alpha = 1.5
            "#,
        );
        assert!(matches!(r, Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = RunConfig::from_toml(
            r#"
            [oracle]
            kind = "builtin"
            name = "dejong5"
            "#,
        )
        .unwrap();
        cfg.apply(&Overrides {
            degree: Some(20),
            eps: Some(0.05),
            out: Some("elsewhere".into()),
            ..Overrides::default()
        });
        assert_eq!(cfg.run.degree, Some(20));
        assert_eq!(cfg.run.eps, 0.05);
        assert_eq!(cfg.output.dir, "elsewhere");
    }
}
