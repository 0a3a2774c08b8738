//! Run configuration: a JSON file, overridden by command-line flags.
//!
//! Angles are degrees in the file and radians once resolved.

use std::path::{Path, PathBuf};

use gaitlab::geomech::ConnectionKind;
use gaitlab::{GaitParams, RobotSpec, Undulation};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Reference robot name, path to a robot JSON file, or an inline robot
    /// document.
    #[serde(default)]
    pub robot: Option<Value>,
    #[serde(default)]
    pub gait: GaitConfig,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitConfig {
    pub duty: Option<f64>,
    pub phase_lag: Option<f64>,
    pub phi0_deg: Option<f64>,
    pub undulation: Option<Undulation>,
    /// Overrides the robot's shoulder amplitude.
    pub amp_theta_deg: Option<f64>,
    /// Overrides the robot's body amplitude.
    pub amp_alpha_deg: Option<f64>,
    pub body_phase_lag: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub steps_per_cycle: usize,
    pub cycles: usize,
    pub resolution: usize,
    pub connection: ConnectionKind,
    pub stability_samples: usize,
    pub diagram_samples: usize,
    pub scan_points: usize,
    /// `start:step:end`, a comma list, or a single value.
    pub duty_grid: String,
    pub phase_lag_grid: String,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            steps_per_cycle: 128,
            cycles: 1,
            resolution: 128,
            connection: ConnectionKind::default(),
            stability_samples: gaitlab::stability::DEFAULT_SAMPLES,
            diagram_samples: 360,
            scan_points: 64,
            duty_grid: "0.3:0.05:0.9".into(),
            phase_lag_grid: "0:0.05:0.95".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("gaitlab-out"),
            formats: vec![Format::Csv, Format::Json, Format::Svg],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let p = e.path().to_string();
            CliError::Config {
                path: if p == "." { "$".into() } else { format!("$.{p}") },
                message: e.inner().to_string(),
            }
        })?;
        // Relative robot and output paths are relative to the config file.
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(Value::String(s)) = &cfg.robot {
            if looks_like_path(s) {
                cfg.robot = Some(Value::String(base.join(s).to_string_lossy().into_owned()));
            }
        }
        if cfg.output.dir.is_relative() {
            cfg.output.dir = base.join(&cfg.output.dir);
        }
        Ok(cfg)
    }

    pub fn resolve_robot(&self) -> Result<RobotSpec, CliError> {
        match &self.robot {
            None => Err(CliError::config("$.robot", "no robot given (use --robot or the config file)")),
            Some(Value::String(s)) if looks_like_path(s) => {
                let text = std::fs::read_to_string(s).map_err(|e| CliError::io(Path::new(s), e))?;
                RobotSpec::from_json(&text).map_err(|e| CliError::from_core_at(e, &format!("{s}: $")))
            }
            Some(Value::String(s)) => gaitlab::make_reference_robot(s).map_err(|e| CliError::config("$.robot", e.to_string())),
            Some(v @ Value::Object(_)) => RobotSpec::from_json(&v.to_string()).map_err(|e| CliError::from_core_at(e, "$.robot")),
            Some(_) => Err(CliError::config(
                "$.robot",
                "expected a robot name, a file path or an inline robot object",
            )),
        }
    }

    /// Gait for `spec`, with defaults of a trot-like `D = 0.5`, `Φ = 0.5`.
    pub fn resolve_gait(&self, spec: &RobotSpec) -> Result<GaitParams, CliError> {
        let c = &self.gait;
        let phase_lag = c.phase_lag.unwrap_or(0.5);
        let mut g = GaitParams::for_robot(
            spec,
            c.duty.unwrap_or(0.5),
            phase_lag,
            c.phi0_deg.unwrap_or(0.0).to_radians(),
            c.undulation.unwrap_or(Undulation::FixedStraight),
        );
        if let Some(a) = c.amp_theta_deg {
            g.amp_theta = a.to_radians();
        }
        if let Some(a) = c.amp_alpha_deg {
            g.amp_alpha = a.to_radians();
        }
        g.body_phase_lag = c.body_phase_lag;
        check(
            "$.gait.duty",
            g.duty.is_finite() && (gaitlab::gait::D_MIN..=1.0).contains(&g.duty),
            || format!("duty factor {} outside [{}, 1]", g.duty, gaitlab::gait::D_MIN),
        )?;
        check("$.gait.phase_lag", (0.0..1.0).contains(&phase_lag), || {
            format!("phase lag {phase_lag} outside [0, 1)")
        })?;
        check("$.gait.phi0_deg", g.phi0.is_finite(), || "must be finite".into())?;
        if let Some(b) = g.body_phase_lag {
            check("$.gait.body_phase_lag", (0.0..1.0).contains(&b), || format!("{b} outside [0, 1)"))?;
        }
        g.validate().map_err(|e| CliError::config("$.gait", e.to_string()))?;
        Ok(g)
    }

    pub fn validate_numerics(&self) -> Result<(), CliError> {
        let n = &self.numerics;
        check("$.numerics.steps_per_cycle", n.steps_per_cycle >= 64, || {
            format!("{} below the minimum of 64", n.steps_per_cycle)
        })?;
        check("$.numerics.cycles", n.cycles >= 1, || "at least one cycle is required".into())?;
        check("$.numerics.resolution", n.resolution >= 8, || {
            format!("{} below the minimum of 8", n.resolution)
        })?;
        check("$.numerics.stability_samples", n.stability_samples >= 360, || {
            format!("{} below the minimum of 360", n.stability_samples)
        })?;
        check("$.numerics.diagram_samples", n.diagram_samples >= 2, || "at least 2 samples".into())?;
        check("$.numerics.scan_points", n.scan_points >= 3, || "at least 3 scan points".into())?;
        check("$.output.formats", !self.output.formats.is_empty(), || "no output format selected".into())?;
        Ok(())
    }

    pub fn duty_grid(&self) -> Result<Vec<f64>, CliError> {
        parse_range(&self.numerics.duty_grid).map_err(|m| CliError::config("$.numerics.duty_grid", m))
    }

    pub fn phase_lag_grid(&self) -> Result<Vec<f64>, CliError> {
        parse_range(&self.numerics.phase_lag_grid).map_err(|m| CliError::config("$.numerics.phase_lag_grid", m))
    }
}

fn check(path: &str, ok: bool, message: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(path, message()))
    }
}

fn looks_like_path(s: &str) -> bool {
    s.ends_with(".json") || s.contains('/')
}

/// Parse `start:step:end`, `a,b,c` or a single number.
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range `{text}` must be start:step:end"));
        }
        gaitlab::sweep::grid(num(parts[0])?, num(parts[1])?, num(parts[2])?).map_err(|e| e.to_string())?
    } else if text.trim().is_empty() {
        vec![]
    } else {
        text.split(',').map(num).collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err("empty grid".into());
    }
    Ok(values)
}
