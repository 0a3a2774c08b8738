//! Integration of the reduced equations of motion.
//!
//! The body frame pose `g ∈ SE(2)` evolves as `ġ = T_e L_g ξ`, where `ξ` is
//! the quasi-static body velocity along the gait path `φ_b = φ_c + φ_0`.
//! Contact switches make `ξ` piecewise smooth, so each cycle is cut at every
//! switch phase as well as on a uniform grid, and one RK4 step is taken per
//! piece with the contact set of that piece held fixed.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::contact::{solve_body_velocity_in_pattern, BodyVelocity};
use crate::error::{Error, Result};
use crate::gait::{contact_pattern, switch_phases, ContactPattern, GaitParams, ShapeVelocity};
use crate::morphology::RobotSpec;
use crate::se2::Pose2;

/// Distance in phase kept from a shoulder reset at `D = 1`.
const DEGENERATE_INSET: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub cycles: usize,
    pub steps_per_cycle: usize,
    /// Contact phase at which integration starts.
    pub start_phase: f64,
    /// Duration of one cycle. Samples are reported in this time unit; the
    /// shape rate is `2π / cycle_duration`.
    pub cycle_duration: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            cycles: 1,
            steps_per_cycle: 128,
            start_phase: 0.0,
            cycle_duration: TAU,
        }
    }
}

impl SimOptions {
    pub fn with_steps(steps_per_cycle: usize) -> Self {
        SimOptions {
            steps_per_cycle,
            ..SimOptions::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cycles < 1 {
            return Err(Error::InvalidInput("at least one cycle is required".into()));
        }
        if self.steps_per_cycle < 64 {
            return Err(Error::InvalidInput(format!(
                "steps per cycle {} below the minimum of 64",
                self.steps_per_cycle
            )));
        }
        if !(self.cycle_duration.is_finite() && self.cycle_duration > 0.0) {
            return Err(Error::InvalidInput("cycle duration must be positive".into()));
        }
        if !self.start_phase.is_finite() {
            return Err(Error::InvalidInput("start phase must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    /// Time since the start, in units of `cycle_duration`.
    pub t: f64,
    pub pose: Pose2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    /// Pose after exactly one cycle, relative to the starting pose.
    pub per_cycle: Option<Pose2>,
    pub cycle_duration: f64,
    /// Contact-phase intervals with no ground support; the body was held
    /// still through them.
    pub unsupported: Vec<(f64, f64)>,
    /// Set when the balance solve failed; samples stop just before it.
    pub failure: Option<Error>,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn final_pose(&self) -> Pose2 {
        self.samples.last().map(|s| s.pose).unwrap_or(Pose2::IDENTITY)
    }

    /// Per-cycle displacement, or the failure that cut the first cycle
    /// short.
    pub fn cycle_displacement(&self) -> Result<Pose2> {
        match (self.per_cycle, &self.failure) {
            (Some(p), _) => Ok(p),
            (None, Some(e)) => Err(e.clone()),
            (None, None) => Err(Error::InvalidInput("trajectory holds no complete cycle".into())),
        }
    }
}

/// Body lengths travelled per cycle.
pub fn speed_blc(traj: &Trajectory) -> Result<f64> {
    let d = traj.cycle_displacement()?;
    Ok(d.x.hypot(d.y))
}

/// Interval endpoints of one cycle starting at `start`, offsets in
/// `[0, 2π]`.
fn cycle_breakpoints(spec: &RobotSpec, g: &GaitParams, start: f64, steps: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=steps).map(|k| TAU * k as f64 / steps as f64).collect();
    for s in switch_phases(spec, g) {
        pts.push((s - start).rem_euclid(TAU));
    }
    pts.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last() {
            Some(&last) if p - last < 1e-9 => {}
            _ => out.push(p),
        }
    }
    // Keep the closing point exactly at 2π.
    if let Some(last) = out.last_mut() {
        if TAU - *last < 1e-9 {
            *last = TAU;
        }
    }
    out
}

fn rk4_step(g: &Pose2, xi0: &BodyVelocity, xim: &BodyVelocity, xi1: &BodyVelocity, h: f64) -> Pose2 {
    let f = |p: &Pose2, xi: &BodyVelocity| p.lift_velocity(xi.x, xi.y, xi.theta);
    let add = |p: &Pose2, k: &[f64; 3], s: f64| Pose2::new(p.x + s * k[0], p.y + s * k[1], p.yaw + s * k[2]);
    let k1 = f(g, xi0);
    let k2 = f(&add(g, &k1, h / 2.0), xim);
    let k3 = f(&add(g, &k2, h / 2.0), xim);
    let k4 = f(&add(g, &k3, h), xi1);
    let mut out = *g;
    for (i, v) in [&mut out.x, &mut out.y, &mut out.yaw].into_iter().enumerate() {
        *v += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrate `cycles` gait cycles from pose `start_pose`.
pub fn integrate_from(spec: &RobotSpec, g: &GaitParams, opts: &SimOptions, start_pose: Pose2) -> Result<Trajectory> {
    g.validate()?;
    opts.validate()?;
    let rate = TAU / opts.cycle_duration;
    let v = ShapeVelocity::ALONG_PATH.scaled(rate);
    let breaks = cycle_breakpoints(spec, g, opts.start_phase, opts.steps_per_cycle);

    let mut traj = Trajectory {
        samples: vec![TrajectorySample { t: 0.0, pose: start_pose }],
        per_cycle: None,
        cycle_duration: opts.cycle_duration,
        unsupported: vec![],
        failure: None,
    };
    let mut pose = start_pose;

    // Body velocity per time unit at offset `s` within the pattern.
    let xi_at = |s: f64, pattern: &ContactPattern| -> Result<BodyVelocity> {
        if pattern.count() == 0 {
            return Ok(BodyVelocity::ZERO);
        }
        let p = g.shape_at(opts.start_phase + s);
        solve_body_velocity_in_pattern(spec, g, p, v, pattern)
    };

    for cycle in 0..opts.cycles {
        let mut cached: Option<(ContactPattern, BodyVelocity)> = None;
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let pattern = contact_pattern(spec, g, opts.start_phase + mid);
            if pattern.count() == 0 && cycle == 0 {
                traj.unsupported.push((opts.start_phase + a, opts.start_phase + b));
            }
            // At D = 1 the shoulders jump back while in contact; the jump
            // is treated as an instantaneous reset, so the end slopes are
            // taken just inside the interval.
            let inset = if g.is_degenerate_duty() { DEGENERATE_INSET.min(0.25 * (b - a)) } else { 0.0 };
            let step = (|| -> Result<(BodyVelocity, BodyVelocity, BodyVelocity)> {
                let xi0 = match &cached {
                    Some((pat, xi)) if *pat == pattern && inset == 0.0 => *xi,
                    _ => xi_at(a + inset, &pattern)?,
                };
                Ok((xi0, xi_at(mid, &pattern)?, xi_at(b - inset, &pattern)?))
            })();
            let (xi0, xim, xi1) = match step {
                Ok(x) => x,
                Err(e) => {
                    traj.failure = Some(e);
                    return Ok(traj);
                }
            };
            let h = (b - a) / rate;
            pose = rk4_step(&pose, &xi0, &xim, &xi1, h);
            traj.samples.push(TrajectorySample {
                t: cycle as f64 * opts.cycle_duration + b / rate,
                pose,
            });
            cached = Some((pattern, xi1));
        }
        if cycle == 0 {
            traj.per_cycle = Some(start_pose.inverse().compose(&pose));
        }
    }
    Ok(traj)
}

/// Integrate from the identity pose.
pub fn integrate_gait(spec: &RobotSpec, g: &GaitParams, cycles: usize, steps_per_cycle: usize) -> Result<Trajectory> {
    let opts = SimOptions {
        cycles,
        steps_per_cycle,
        ..SimOptions::default()
    };
    integrate_from(spec, g, &opts, Pose2::IDENTITY)
}

/// Displacement over one cycle, failing if any balance solve fails.
pub fn cycle_displacement(spec: &RobotSpec, g: &GaitParams, steps_per_cycle: usize) -> Result<Pose2> {
    integrate_gait(spec, g, 1, steps_per_cycle)?.cycle_displacement()
}
