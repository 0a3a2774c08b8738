//! Parameter sweeps over the Hildebrand plane.
//!
//! Every `(D, Φ_lat)` cell is independent. Cells run on a rayon pool and
//! results come back in grid order (duty-major), so the output does not
//! depend on the number of workers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::{GaitParams, Undulation};
use crate::geomech::{optimize_phase_offset, OptimizerOptions};
use crate::morphology::RobotSpec;
use crate::simulate::cycle_displacement;
use crate::stability::{stability_metric, DEFAULT_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Stability and straight-backbone speed only.
    FixedStraight,
    /// Also optimize the body-leg phase offset with coordinated undulation.
    Coordinated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub mode: SweepMode,
    pub steps_per_cycle: usize,
    pub stability_samples: usize,
    pub optimizer: OptimizerOptions,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            mode: SweepMode::Coordinated,
            steps_per_cycle: 128,
            stability_samples: DEFAULT_SAMPLES,
            optimizer: OptimizerOptions::default(),
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinatedResult {
    pub phi0: f64,
    pub blc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub duty: f64,
    pub phase_lag: f64,
    pub stability: Option<f64>,
    pub fixed_blc: Option<f64>,
    pub coordinated: Option<CoordinatedResult>,
    /// Messages for whatever failed in this cell.
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub duties: Vec<f64>,
    pub phase_lags: Vec<f64>,
    /// Row-major by duty: `cells[i * phase_lags.len() + j]`.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, duty_index: usize, lag_index: usize) -> &SweepCell {
        &self.cells[duty_index * self.phase_lags.len() + lag_index]
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepCell> {
        self.cells.iter().filter(|c| !c.errors.is_empty())
    }
}

/// Inclusive range `start:step:end`, tolerant of rounding at the end.
pub fn grid(start: f64, step: f64, end: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && step.is_finite() && end.is_finite()) || step <= 0.0 || end < start {
        return Err(Error::InvalidInput(format!("bad grid {start}:{step}:{end}")));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    // Round to 12 digits so 0.1 + 2*0.05 prints as 0.2.
    Ok((0..=n)
        .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn run_cell(spec: &RobotSpec, duty: f64, phase_lag: f64, opts: &SweepOptions) -> SweepCell {
    let mut cell = SweepCell {
        duty,
        phase_lag,
        stability: None,
        fixed_blc: None,
        coordinated: None,
        errors: vec![],
    };
    let fixed = GaitParams::for_robot(spec, duty, phase_lag, 0.0, Undulation::FixedStraight);
    match stability_metric(spec, &fixed, opts.stability_samples) {
        Ok(s) => cell.stability = Some(s),
        Err(e) => cell.errors.push(format!("stability: {e}")),
    }
    match cycle_displacement(spec, &fixed, opts.steps_per_cycle) {
        Ok(d) => cell.fixed_blc = Some(d.x.hypot(d.y)),
        Err(e) => cell.errors.push(format!("fixed straight: {e}")),
    }
    if opts.mode == SweepMode::Coordinated {
        let coord = GaitParams {
            undulation: Undulation::Coordinated,
            ..fixed
        };
        let optimizer = OptimizerOptions {
            steps_per_cycle: opts.steps_per_cycle,
            ..opts.optimizer
        };
        match optimize_phase_offset(spec, &coord, &optimizer) {
            Ok(o) => {
                cell.coordinated = Some(CoordinatedResult {
                    phi0: o.phi0,
                    blc: o.displacement.x.hypot(o.displacement.y),
                })
            }
            Err(e) => cell.errors.push(format!("coordinated: {e}")),
        }
    }
    cell
}

/// Evaluate every cell of the grid. Individual cell failures are recorded
/// and the sweep carries on.
pub fn sweep(spec: &RobotSpec, duties: &[f64], phase_lags: &[f64], opts: &SweepOptions) -> Result<SweepResult> {
    spec.validate()?;
    if duties.is_empty() || phase_lags.is_empty() {
        return Err(Error::InvalidInput("sweep grid is empty".into()));
    }
    for &d in duties {
        GaitParams::for_robot(spec, d, 0.0, 0.0, Undulation::FixedStraight).validate()?;
    }
    for &l in phase_lags {
        GaitParams::for_robot(spec, 0.5, l, 0.0, Undulation::FixedStraight).validate()?;
    }
    let pairs: Vec<(f64, f64)> = duties
        .iter()
        .flat_map(|&d| phase_lags.iter().map(move |&l| (d, l)))
        .collect();
    let run = || -> Vec<SweepCell> { pairs.par_iter().map(|&(d, l)| run_cell(spec, d, l, opts)).collect() };
    let cells = match opts.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))?
            .install(run),
        None => run(),
    };
    Ok(SweepResult {
        duties: duties.to_vec(),
        phase_lags: phase_lags.to_vec(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(grid(0.3, 0.05, 0.9).unwrap().len(), 13);
        assert_eq!(grid(0.0, 0.05, 0.9).unwrap().len(), 19);
        assert_eq!(grid(0.0, 0.05, 0.95).unwrap()[19], 0.95);
        assert_eq!(grid(0.5, 0.1, 0.5).unwrap(), vec![0.5]);
        assert!(grid(0.5, 0.0, 0.9).is_err());
        assert!(grid(0.9, 0.1, 0.5).is_err());
    }
}
