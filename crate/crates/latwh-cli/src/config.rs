//! Run configuration: one TOML file, schema-validated, unknown keys
//! rejected. Angles enter in degrees and are converted at this boundary.

use latwh::{C64, DefectKind, Numerics, ScatteringScenario};
use serde::Deserialize;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub omega_re: f64,
    pub omega_im: f64,
    pub theta_deg: f64,
    pub amplitude_re: f64,
    pub amplitude_im: f64,
    pub kind: KindConfig,
    pub n_sep: i64,
    pub m_offset: i64,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum KindConfig {
    Crack,
    Constraint,
}

impl From<KindConfig> for DefectKind {
    fn from(k: KindConfig) -> Self {
        match k {
            KindConfig::Crack => DefectKind::CrackPair,
            KindConfig::Constraint => DefectKind::ConstraintPair,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(default)]
    pub contour_radius: RadiusConfig,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Oracle half-width; omit for the default `91 + |M|`.
    #[serde(default)]
    pub oracle_ng: Option<i64>,
    #[serde(default = "default_wh_tol")]
    pub wh_residual_tol: f64,
}

fn default_samples() -> usize {
    4096
}

fn default_wh_tol() -> f64 {
    1e-8
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            contour_radius: RadiusConfig::default(),
            samples: default_samples(),
            oracle_ng: None,
            wh_residual_tol: default_wh_tol(),
        }
    }
}

/// `contour_radius = "auto"` or an explicit positive number.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RadiusConfig {
    Value(f64),
    Keyword(String),
}

impl Default for RadiusConfig {
    fn default() -> Self {
        RadiusConfig::Keyword("auto".into())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    #[serde(default = "default_window_min")]
    pub x_min: i64,
    #[serde(default = "default_window_max")]
    pub x_max: i64,
    #[serde(default = "default_window_min")]
    pub y_min: i64,
    #[serde(default = "default_window_max")]
    pub y_max: i64,
    #[serde(default)]
    pub emit_factors: bool,
}

fn default_out_dir() -> String {
    "out".into()
}

fn default_window_min() -> i64 {
    -10
}

fn default_window_max() -> i64 {
    10
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            out_dir: default_out_dir(),
            x_min: default_window_min(),
            x_max: default_window_max(),
            y_min: default_window_min(),
            y_max: default_window_max(),
            emit_factors: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.numerics.wh_residual_tol > 0.0) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        if let RadiusConfig::Keyword(k) = &self.numerics.contour_radius {
            if k != "auto" {
                return Err(CliError::Config(format!(
                    "contour_radius must be a number or \"auto\", got \"{k}\""
                )));
            }
        }
        if self.outputs.x_min > self.outputs.x_max || self.outputs.y_min > self.outputs.y_max {
            return Err(CliError::Config("output window is empty".into()));
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<ScatteringScenario, CliError> {
        let s = &self.scenario;
        ScatteringScenario::new(
            C64::new(s.omega_re, s.omega_im),
            s.theta_deg.to_radians(),
            C64::new(s.amplitude_re, s.amplitude_im),
            s.kind.into(),
            s.n_sep,
            s.m_offset,
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn numerics(&self) -> Result<Numerics, CliError> {
        let radius = match &self.numerics.contour_radius {
            RadiusConfig::Keyword(_) => None,
            RadiusConfig::Value(v) => {
                if !(*v > 0.0) {
                    return Err(CliError::Config(format!(
                        "contour_radius must be positive, got {v}"
                    )));
                }
                Some(*v)
            }
        };
        Ok(Numerics {
            samples: self.numerics.samples,
            contour_radius: radius,
            oracle_ng: self.numerics.oracle_ng,
            wh_residual_tol: self.numerics.wh_residual_tol,
        })
    }

    pub fn window(&self) -> latwh::field::Window {
        latwh::field::Window {
            x_lo: self.outputs.x_min,
            x_hi: self.outputs.x_max,
            y_lo: self.outputs.y_min,
            y_hi: self.outputs.y_max,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
        [scenario]
        omega_re = 0.9
        omega_im = 0.1
        theta_deg = 25.0
        amplitude_re = 1.0
        amplitude_im = 0.0
        kind = "crack"
        n_sep = 5
        m_offset = 3
    "#;

    #[test]
    fn parses_minimal_config() {
        let cfg: RunConfig = toml::from_str(GOOD).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.numerics.samples, 4096);
        let s = cfg.scenario().unwrap();
        assert_eq!(s.n_sep, 5);
        assert!((s.theta - 25.0f64.to_radians()).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = format!("{GOOD}\n[numerics]\nbogus_knob = 3\n");
        assert!(toml::from_str::<RunConfig>(&bad).is_err());
    }

    #[test]
    fn radius_keyword_is_validated() {
        let bad = format!("{GOOD}\n[numerics]\ncontour_radius = \"huge\"\n");
        let cfg: RunConfig = toml::from_str(&bad).unwrap();
        assert!(cfg.validate().is_err());
        let good = format!("{GOOD}\n[numerics]\ncontour_radius = 1.01\n");
        let cfg: RunConfig = toml::from_str(&good).unwrap();
        cfg.validate().unwrap();
        let radius = cfg.numerics().unwrap().contour_radius;
        assert!(matches!(radius, Some(r) if (r - 1.01).abs() < 1e-15));
    }
}
