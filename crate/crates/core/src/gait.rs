//! Gait prescription from the extended Hildebrand parameters.
//!
//! Every quantity is driven by two phases on the circle: the contact phase
//! `φ_c`, which schedules stance/swing and shoulder excursions, and the body
//! phase `φ_b`, which drives a traveling wave along the backbone. Left leg 1
//! (the head pair) is the reference: it touches down at `φ_c = 0` and lifts
//! off at `φ_c = 2πD`. Leg pair `i` trails pair 1 by `2π(i−1)Φ_lat` and right
//! legs run half a cycle ahead of their left partners. The body wave trails
//! by `2π(i−1)Φ_lat^b` per joint, so contact and body waves travel the same
//! way along the body.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::{Configuration, Mode, RobotSpec, Side};
use crate::numeric::wrap_tau;

/// Smallest accepted duty factor.
pub const D_MIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Undulation {
    FixedStraight,
    Coordinated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitParams {
    /// Duty factor `D ∈ [D_MIN, 1]`.
    pub duty: f64,
    /// Lateral phase lag `Φ_lat ∈ [0, 1)`, in cycles.
    pub phase_lag: f64,
    /// Shoulder amplitude in radians.
    pub amp_theta: f64,
    /// Body bend amplitude in radians.
    pub amp_alpha: f64,
    /// Body-leg phase offset `φ_0`: `φ_b = φ_c + φ_0`.
    pub phi0: f64,
    pub undulation: Undulation,
    /// Spatial lag of the body wave in cycles per joint; `None` uses
    /// `phase_lag`.
    pub body_phase_lag: Option<f64>,
}

impl GaitParams {
    /// Gait with the robot's own amplitudes.
    pub fn for_robot(spec: &RobotSpec, duty: f64, phase_lag: f64, phi0: f64, undulation: Undulation) -> GaitParams {
        GaitParams {
            duty,
            phase_lag,
            amp_theta: spec.amplitudes.theta,
            amp_alpha: spec.amplitudes.alpha.at(phase_lag),
            phi0,
            undulation,
            body_phase_lag: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duty.is_finite() && self.duty >= D_MIN && self.duty <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "duty factor {} outside [{D_MIN}, 1]",
                self.duty
            )));
        }
        for (name, lag) in [("lateral phase lag", Some(self.phase_lag)), ("body phase lag", self.body_phase_lag)] {
            if let Some(lag) = lag {
                if !(lag.is_finite() && (0.0..1.0).contains(&lag)) {
                    return Err(Error::InvalidInput(format!("{name} {lag} outside [0, 1)")));
                }
            }
        }
        if !(self.amp_theta.is_finite() && self.amp_alpha.is_finite() && self.phi0.is_finite()) {
            return Err(Error::InvalidInput("gait amplitudes and offset must be finite".into()));
        }
        Ok(())
    }

    /// Body amplitude actually applied.
    pub fn effective_amp_alpha(&self) -> f64 {
        match self.undulation {
            Undulation::FixedStraight => 0.0,
            Undulation::Coordinated => self.amp_alpha,
        }
    }

    pub fn effective_body_phase_lag(&self) -> f64 {
        self.body_phase_lag.unwrap_or(self.phase_lag)
    }

    /// At `D = 1` the swing branch of the shoulder trajectory is undefined
    /// and the stance branch is used over the whole cycle.
    pub fn is_degenerate_duty(&self) -> bool {
        self.duty >= 1.0
    }

    /// Shape point reached at contact phase `phi_c` on this gait's path.
    pub fn shape_at(&self, phi_c: f64) -> ShapePoint {
        ShapePoint::new(phi_c, phi_c + self.phi0)
    }
}

/// A point `(φ_c, φ_b)` on the shape torus, both reduced to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapePoint {
    pub phi_c: f64,
    pub phi_b: f64,
}

impl ShapePoint {
    pub fn new(phi_c: f64, phi_b: f64) -> Self {
        ShapePoint {
            phi_c: wrap_tau(phi_c),
            phi_b: wrap_tau(phi_b),
        }
    }
}

/// Shape rates `(φ̇_c, φ̇_b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeVelocity {
    pub phi_c: f64,
    pub phi_b: f64,
}

impl ShapeVelocity {
    pub const CONTACT: ShapeVelocity = ShapeVelocity { phi_c: 1.0, phi_b: 0.0 };
    pub const BODY: ShapeVelocity = ShapeVelocity { phi_c: 0.0, phi_b: 1.0 };
    /// Motion along a gait path, `φ̇_c = φ̇_b = 1`.
    pub const ALONG_PATH: ShapeVelocity = ShapeVelocity { phi_c: 1.0, phi_b: 1.0 };

    pub fn new(phi_c: f64, phi_b: f64) -> Self {
        ShapeVelocity { phi_c, phi_b }
    }

    pub fn scaled(&self, k: f64) -> Self {
        ShapeVelocity::new(k * self.phi_c, k * self.phi_b)
    }

    pub fn max_abs(&self) -> f64 {
        self.phi_c.abs().max(self.phi_b.abs())
    }
}

fn check_index(what: &'static str, index: usize, max: usize) -> Result<()> {
    if index == 0 || index > max {
        return Err(Error::IndexOutOfRange { what, index, max });
    }
    Ok(())
}

/// Phase of a leg's own cycle: zero at touchdown.
pub fn leg_phase(g: &GaitParams, phi_c: f64, pair: usize, side: Side) -> f64 {
    let shift = -TAU * (pair as f64 - 1.0) * g.phase_lag + if side == Side::Right { PI } else { 0.0 };
    phi_c + shift
}

fn stance_at(duty: f64, psi: f64) -> bool {
    wrap_tau(psi) < TAU * duty
}

/// Stance (`true`) or swing of leg `pair` (1-based) on `side`.
pub fn contact_state(g: &GaitParams, n_pairs: usize, phi_c: f64, pair: usize, side: Side) -> Result<bool> {
    check_index("leg pair", pair, n_pairs)?;
    Ok(stance_at(g.duty, leg_phase(g, phi_c, pair, side)))
}

/// Contact of link `link` (1-based) of a limbless robot: the left-leg rule
/// applied to the link index.
pub fn sidewinder_contact(spec: &RobotSpec, g: &GaitParams, phi_c: f64, link: usize) -> Result<bool> {
    if spec.mode != Mode::Sidewinder {
        return Err(Error::InvalidInput("link contacts are only defined for sidewinder mode".into()));
    }
    check_index("link", link, spec.n_links())?;
    Ok(stance_at(g.duty, leg_phase(g, phi_c, link, Side::Left)))
}

/// Shoulder angle on a chosen branch of the piecewise-cosine trajectory.
/// Each branch is evaluated as the analytic continuation around its own
/// window so that it stays smooth slightly past the switch phases.
pub fn shoulder_angle_on_branch(g: &GaitParams, psi: f64, stance: bool) -> f64 {
    let d = g.duty;
    let a = g.amp_theta;
    if stance || g.is_degenerate_duty() {
        // Stance window [0, 2πD) centred on πD.
        let m = psi - TAU * ((psi - PI * d) / TAU).round();
        a * (m / (2.0 * d)).cos()
    } else {
        // Swing window [2πD, 2π) centred on π(1 + D).
        let s = psi - TAU * d;
        let m = s - TAU * ((s - PI * (1.0 - d)) / TAU).round();
        -a * (m / (2.0 * (1.0 - d))).cos()
    }
}

/// Shoulder excursion `θ` of a leg: `+A_θ` at touchdown, `−A_θ` at lift-off.
pub fn shoulder_angle(g: &GaitParams, n_pairs: usize, phi_c: f64, pair: usize, side: Side) -> Result<f64> {
    check_index("leg pair", pair, n_pairs)?;
    let psi = leg_phase(g, phi_c, pair, side);
    Ok(shoulder_angle_on_branch(g, psi, stance_at(g.duty, psi)))
}

/// Bend of body joint `joint` (1-based).
pub fn body_bend(g: &GaitParams, n_joints: usize, phi_b: f64, joint: usize) -> Result<f64> {
    check_index("body joint", joint, n_joints)?;
    let lag = TAU * (joint as f64 - 1.0) * g.effective_body_phase_lag();
    Ok(g.effective_amp_alpha() * (phi_b - lag).cos())
}

/// Which contacts are down. Used to hold one contact set fixed while the
/// shape moves inside a contact interval.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct ContactPattern {
    pub left: Vec<bool>,
    pub right: Vec<bool>,
    /// Limbless robots only.
    pub links: Vec<bool>,
}

impl ContactPattern {
    pub fn count(&self) -> usize {
        self.left.iter().chain(&self.right).chain(&self.links).filter(|&&c| c).count()
    }
}

pub fn contact_pattern(spec: &RobotSpec, g: &GaitParams, phi_c: f64) -> ContactPattern {
    match spec.mode {
        Mode::Legged => {
            let side = |s| (1..=spec.n_leg_pairs).map(|i| stance_at(g.duty, leg_phase(g, phi_c, i, s))).collect();
            ContactPattern {
                left: side(Side::Left),
                right: side(Side::Right),
                links: vec![],
            }
        }
        Mode::Sidewinder => ContactPattern {
            left: vec![],
            right: vec![],
            links: (1..=spec.n_links())
                .map(|i| stance_at(g.duty, leg_phase(g, phi_c, i, Side::Left)))
                .collect(),
        },
    }
}

/// Full configuration at a shape point.
pub fn configuration_at(spec: &RobotSpec, g: &GaitParams, p: ShapePoint) -> Result<Configuration> {
    configuration_in_pattern(spec, g, p, &contact_pattern(spec, g, p.phi_c))
}

/// Configuration at `p` with the contact set and shoulder branches taken
/// from `pattern` rather than from `p` itself.
pub fn configuration_in_pattern(
    spec: &RobotSpec,
    g: &GaitParams,
    p: ShapePoint,
    pattern: &ContactPattern,
) -> Result<Configuration> {
    g.validate()?;
    let n = spec.n_leg_pairs;
    if spec.mode == Mode::Legged && (pattern.left.len() != n || pattern.right.len() != n) {
        return Err(Error::DimensionMismatch("contact pattern does not match the leg count".into()));
    }
    let shoulders = |side: Side, stance: &[bool]| -> Vec<f64> {
        (1..=n)
            .map(|i| shoulder_angle_on_branch(g, leg_phase(g, p.phi_c, i, side), stance[i - 1]))
            .collect()
    };
    let body_joint_angles = (1..=spec.n_body_joints)
        .map(|j| body_bend(g, spec.n_body_joints, p.phi_b, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(match spec.mode {
        Mode::Legged => Configuration {
            body_joint_angles,
            shoulder_left: shoulders(Side::Left, &pattern.left),
            shoulder_right: shoulders(Side::Right, &pattern.right),
            contact_left: pattern.left.clone(),
            contact_right: pattern.right.clone(),
            link_contacts: vec![],
        },
        Mode::Sidewinder => Configuration {
            body_joint_angles,
            link_contacts: pattern.links.clone(),
            ..Configuration::default()
        },
    })
}

/// Contact phases `φ_c ∈ [0, 2π)` at which any contact switches, sorted.
/// At `D = 1` no contact switches, but each shoulder jumps back from `−A_θ`
/// to `+A_θ` at its touchdown phase; those phases are returned instead.
pub fn switch_phases(spec: &RobotSpec, g: &GaitParams) -> Vec<f64> {
    let mut legs: Vec<(usize, Side)> = Vec::new();
    match spec.mode {
        Mode::Legged => {
            for i in 1..=spec.n_leg_pairs {
                legs.push((i, Side::Left));
                legs.push((i, Side::Right));
            }
        }
        Mode::Sidewinder => legs.extend((1..=spec.n_links()).map(|i| (i, Side::Left))),
    }
    let mut out: Vec<f64> = Vec::with_capacity(2 * legs.len());
    for (i, side) in legs {
        let shift = leg_phase(g, 0.0, i, side);
        out.push(wrap_tau(-shift));
        if !g.is_degenerate_duty() {
            out.push(wrap_tau(TAU * g.duty - shift));
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if out.len() > 1 && out[0] + TAU - out[out.len() - 1] < 1e-12 {
        out.pop();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pace {
    Walk,
    Run,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sequence {
    Lateral,
    Diagonal,
    Boundary,
}

/// Region of the Hildebrand plane: walk iff `D > 0.5`, lateral sequence
/// iff `Φ_lat < 0.5`.
pub fn hildebrand_region(duty: f64, phase_lag: f64) -> (Pace, Sequence) {
    let pace = if duty > 0.5 {
        Pace::Walk
    } else if duty < 0.5 {
        Pace::Run
    } else {
        Pace::Boundary
    };
    let seq = if phase_lag < 0.5 {
        Sequence::Lateral
    } else if phase_lag > 0.5 {
        Sequence::Diagonal
    } else {
        Sequence::Boundary
    };
    (pace, seq)
}
