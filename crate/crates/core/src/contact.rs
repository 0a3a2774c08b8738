//! Ground reaction forces and the quasi-static force/torque balance.
//!
//! Friction dominates inertia, so at every instant the ground reaction
//! forces on the stance contacts sum to zero force and zero torque. Given a
//! shape velocity, the body velocity `ξ = (ξ_x, ξ_y, ξ_θ)` is the root of
//! that net wrench. Coulomb friction is rate independent, so `ξ` is
//! homogeneous of degree one in the shape velocity. The velocity
//! regularization is applied to the normalized problem (shape velocity of
//! unit max-norm) to keep that homogeneity exact.

use nalgebra::{Matrix3, Matrix3x2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::{configuration_in_pattern, contact_pattern, ContactPattern, GaitParams, ShapePoint, ShapeVelocity};
use crate::morphology::{forward_kinematics, Mode, RobotSpec};
use crate::numeric::nelder_mead;
use crate::se2::{cross, rotate, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrictionKind {
    IsotropicCoulomb,
    AnisotropicCoulomb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrictionModel {
    pub kind: FrictionKind,
    pub mu: f64,
    /// Transverse over longitudinal drag; ignored when isotropic.
    #[serde(default = "default_ratio")]
    pub anisotropy_ratio: f64,
    /// Velocity regularization in body lengths per radian of phase.
    #[serde(default = "default_epsilon")]
    pub epsilon_v: f64,
}

fn default_ratio() -> f64 {
    2.0
}

fn default_epsilon() -> f64 {
    1e-3
}

impl Default for FrictionModel {
    fn default() -> Self {
        FrictionModel {
            kind: FrictionKind::AnisotropicCoulomb,
            mu: 1.0,
            anisotropy_ratio: default_ratio(),
            epsilon_v: default_epsilon(),
        }
    }
}

impl FrictionModel {
    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::spec(format!("{path}.mu"), "friction coefficient must be positive"));
        }
        if !(self.anisotropy_ratio.is_finite() && self.anisotropy_ratio > 0.0) {
            return Err(Error::spec(format!("{path}.anisotropy_ratio"), "anisotropy ratio must be positive"));
        }
        if !(self.epsilon_v.is_finite() && self.epsilon_v > 0.0) {
            return Err(Error::spec(format!("{path}.epsilon_v"), "regularization must be positive"));
        }
        Ok(())
    }
}

/// Body-frame velocity per unit phase.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyVelocity {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl BodyVelocity {
    pub const ZERO: BodyVelocity = BodyVelocity { x: 0.0, y: 0.0, theta: 0.0 };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        BodyVelocity { x, y, theta }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.theta)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        BodyVelocity::new(v[0], v[1], v[2])
    }

    pub fn scaled(self, k: f64) -> Self {
        BodyVelocity::new(k * self.x, k * self.y, k * self.theta)
    }

    /// Velocity of a point rigidly attached to the body at `p`.
    pub fn point_velocity(&self, p: &Point2) -> Point2 {
        Point2::new(self.x - self.theta * p.y, self.y + self.theta * p.x)
    }
}

/// Net ground reaction on the body, taken about the body frame origin.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub fx: f64,
    pub fy: f64,
    pub torque: f64,
}

impl Wrench {
    pub fn force_norm(&self) -> f64 {
        self.fx.hypot(self.fy)
    }
}

/// Local connection at a shape point. Column 0 is the response to unit
/// contact-phase rate, column 1 to unit body-phase rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalConnection {
    pub a: Matrix3x2<f64>,
    /// Directionally exact response for the requested shape velocity.
    pub directional: Option<BodyVelocity>,
}

impl LocalConnection {
    /// Linearized prediction `A · v`.
    pub fn apply(&self, v: ShapeVelocity) -> BodyVelocity {
        let r = self.a * nalgebra::Vector2::new(v.phi_c, v.phi_b);
        BodyVelocity::new(r[0], r[1], r[2])
    }
}

/// Everything the balance needs to know about one support point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactKinematics {
    pub position: Point2,
    /// Heading of the link the contact belongs to; sets the anisotropy axes.
    pub heading: f64,
    /// Velocity of the contact caused by shape change alone (body frame).
    pub shape_velocity: Point2,
}

/// Regularized Coulomb force on a contact sliding at `v`, for unit normal
/// load. `eps` is the regularization actually applied.
pub fn coulomb_force(model: &FrictionModel, v: &Point2, heading: f64, eps: f64) -> Point2 {
    let speed = v.norm();
    let denom = speed + eps;
    match model.kind {
        FrictionKind::IsotropicCoulomb => -model.mu * v / denom,
        FrictionKind::AnisotropicCoulomb => {
            let local = rotate(v, -heading);
            let f = Point2::new(local.x, model.anisotropy_ratio * local.y) * (-model.mu / denom);
            rotate(&f, heading)
        }
    }
}

/// Ground reaction force for a contact carrying `load` of the weight.
pub fn ground_reaction_force(model: &FrictionModel, v: &Point2, link_heading: f64, load: f64) -> Point2 {
    coulomb_force(model, v, link_heading, model.epsilon_v) * load
}

fn wrench_of(model: &FrictionModel, contacts: &[ContactKinematics], xi: &BodyVelocity, eps: f64) -> Wrench {
    let load = 1.0 / contacts.len() as f64;
    let mut w = Wrench::default();
    for c in contacts {
        let v = xi.point_velocity(&c.position) + c.shape_velocity;
        let f = coulomb_force(model, &v, c.heading, eps) * load;
        w.fx += f.x;
        w.fy += f.y;
        w.torque += cross(&c.position, &f);
    }
    w
}

/// Net wrench on the body for an explicit contact set.
pub fn contact_wrench(model: &FrictionModel, contacts: &[ContactKinematics], xi: &BodyVelocity) -> Wrench {
    if contacts.is_empty() {
        return Wrench::default();
    }
    wrench_of(model, contacts, xi, model.epsilon_v)
}

/// Tolerances for accepting a balance.
pub const FORCE_TOLERANCE: f64 = 1e-8;
pub const TORQUE_TOLERANCE: f64 = 1e-8;
const TARGET: f64 = 1e-11;

/// Rigid no-slip least-squares fit: the body velocity that best cancels
/// the shape-induced contact velocities. Ridge-regularized so one contact
/// still yields an answer.
fn no_slip_guess(contacts: &[ContactKinematics]) -> Vector3<f64> {
    let mut m = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for c in contacts {
        let (x, y) = (c.position.x, c.position.y);
        let rows = [Vector3::new(1.0, 0.0, -y), Vector3::new(0.0, 1.0, x)];
        let target = [-c.shape_velocity.x, -c.shape_velocity.y];
        for (row, t) in rows.iter().zip(target) {
            m += row * row.transpose();
            rhs += row * t;
        }
    }
    let trace = m.trace().max(1e-12);
    for k in 0..3 {
        m[(k, k)] += 1e-9 * trace;
    }
    m.lu().solve(&rhs).unwrap_or_else(Vector3::zeros)
}

fn residual(model: &FrictionModel, contacts: &[ContactKinematics], x: &Vector3<f64>, eps: f64) -> Vector3<f64> {
    let w = wrench_of(model, contacts, &BodyVelocity::from_vector(x), eps);
    Vector3::new(w.fx, w.fy, w.torque)
}

fn converged(r: &Vector3<f64>, tol: f64) -> bool {
    r[0].hypot(r[1]) < tol && r[2].abs() < tol
}

/// Damped Newton with a central-difference Jacobian. Returns the best point
/// found and its residual.
fn damped_newton(
    model: &FrictionModel,
    contacts: &[ContactKinematics],
    x0: Vector3<f64>,
    eps: f64,
    max_iterations: usize,
) -> (Vector3<f64>, Vector3<f64>) {
    let mut x = x0;
    let mut r = residual(model, contacts, &x, eps);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-6;
    for _ in 0..max_iterations {
        if converged(&r, TARGET) {
            break;
        }
        let mut jac = Matrix3::<f64>::zeros();
        for k in 0..3 {
            let h = 1e-7 * (1.0 + x[k].abs());
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let col = (residual(model, contacts, &xp, eps) - residual(model, contacts, &xm, eps)) / (2.0 * h);
            jac.set_column(k, &col);
        }
        let jtj = jac.transpose() * jac;
        let grad = jac.transpose() * r;
        let scale = (0..3).map(|k| jtj[(k, k)]).fold(0.0, f64::max).max(1e-300);
        let mut improved = false;
        for _ in 0..30 {
            let damped = jtj + Matrix3::identity() * (lambda * scale);
            if let Some(step) = damped.lu().solve(&(-grad)) {
                let trial = x + step;
                let rt = residual(model, contacts, &trial, eps);
                let ct = rt.norm_squared();
                if ct.is_finite() && ct < cost {
                    x = trial;
                    r = rt;
                    cost = ct;
                    lambda = (lambda / 10.0).max(1e-12);
                    improved = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (x, r)
}

fn solve_normalized(
    model: &FrictionModel,
    contacts: &[ContactKinematics],
    eps: f64,
) -> std::result::Result<Vector3<f64>, Vector3<f64>> {
    let guess = no_slip_guess(contacts);
    let (x, r) = damped_newton(model, contacts, guess, eps, 100);
    if converged(&r, TARGET) {
        return Ok(x);
    }
    // Newton stalled: restart from a derivative-free minimum of |wrench|².
    let scale = x.norm().max(1e-3);
    let (best, _) = nelder_mead(
        |v| residual(model, contacts, &Vector3::new(v[0], v[1], v[2]), eps).norm_squared(),
        x.as_slice(),
        &[0.1 * scale; 3],
        4000,
        0.0,
    );
    let (x2, r2) = damped_newton(model, contacts, Vector3::from_column_slice(&best), eps, 100);
    let (x, r) = if r2.norm() < r.norm() { (x2, r2) } else { (x, r) };
    if converged(&r, FORCE_TOLERANCE.min(TORQUE_TOLERANCE)) {
        Ok(x)
    } else {
        Err(r)
    }
}

/// Solve the force/torque balance for an explicit contact set. The contact
/// shape velocities are those of a shape velocity with max-norm `rate`; the
/// regularization is scaled by `rate` so the result is rate independent.
pub fn solve_contacts(
    model: &FrictionModel,
    contacts: &[ContactKinematics],
    rate: f64,
) -> std::result::Result<BodyVelocity, Wrench> {
    if contacts.is_empty() {
        return Err(Wrench::default());
    }
    if rate == 0.0 {
        return Ok(BodyVelocity::ZERO);
    }
    let normalized: Vec<ContactKinematics> = contacts
        .iter()
        .map(|c| ContactKinematics {
            shape_velocity: c.shape_velocity / rate,
            ..*c
        })
        .collect();
    match solve_normalized(model, &normalized, model.epsilon_v) {
        Ok(x) => Ok(BodyVelocity::from_vector(&(x * rate))),
        Err(r) => Err(Wrench {
            fx: r[0],
            fy: r[1],
            torque: r[2],
        }),
    }
}

/// Phase step for the shape-derivative finite differences.
const SHAPE_FD_STEP: f64 = 1e-6;

/// Support points at `p`, with the contact set held at `pattern`, and their
/// velocities under shape velocity `v` computed by central differences.
pub fn contact_kinematics(
    spec: &RobotSpec,
    g: &GaitParams,
    p: ShapePoint,
    v: ShapeVelocity,
    pattern: &ContactPattern,
) -> Result<Vec<ContactKinematics>> {
    let support = |q: ShapePoint| -> Result<Vec<(Point2, f64)>> {
        let cfg = configuration_in_pattern(spec, g, q, pattern)?;
        let poses = forward_kinematics(spec, &cfg)?;
        Ok(match spec.mode {
            Mode::Legged => poses
                .foot_points
                .iter()
                .filter(|f| f.in_contact)
                .map(|f| (f.position, poses.link_poses[f.pair - 1].heading))
                .collect(),
            Mode::Sidewinder => poses
                .link_poses
                .iter()
                .zip(&poses.link_contacts)
                .filter(|(_, &c)| c)
                .map(|(l, _)| (l.midpoint(), l.heading))
                .collect(),
        })
    };
    let at = support(p)?;
    let scale = v.max_abs();
    if scale == 0.0 {
        return Ok(at
            .into_iter()
            .map(|(position, heading)| ContactKinematics {
                position,
                heading,
                shape_velocity: Point2::zeros(),
            })
            .collect());
    }
    let h = SHAPE_FD_STEP;
    let (dc, db) = (v.phi_c / scale, v.phi_b / scale);
    let plus = support(ShapePoint::new(p.phi_c + h * dc, p.phi_b + h * db))?;
    let minus = support(ShapePoint::new(p.phi_c - h * dc, p.phi_b - h * db))?;
    Ok(at
        .iter()
        .zip(plus.iter().zip(&minus))
        .map(|(&(position, heading), ((pp, _), (pm, _)))| ContactKinematics {
            position,
            heading,
            shape_velocity: (pp - pm) * (scale / (2.0 * h)),
        })
        .collect())
}

/// Velocity (body frame, relative to the ground) of support point `index`:
/// the foot index `2(i−1)` / `2(i−1)+1` for left/right leg `i` of a legged
/// robot, or the 0-based link index of a limbless one.
pub fn contact_point_velocity(
    spec: &RobotSpec,
    g: &GaitParams,
    p: ShapePoint,
    v: ShapeVelocity,
    xi: &BodyVelocity,
    index: usize,
) -> Result<Point2> {
    let pattern = contact_pattern(spec, g, p.phi_c);
    let flags: Vec<bool> = match spec.mode {
        Mode::Legged => pattern.left.iter().zip(&pattern.right).flat_map(|(&l, &r)| [l, r]).collect(),
        Mode::Sidewinder => pattern.links.clone(),
    };
    if index >= flags.len() {
        return Err(Error::IndexOutOfRange {
            what: "support point",
            index,
            max: flags.len().saturating_sub(1),
        });
    }
    if !flags[index] {
        return Err(Error::InvalidInput(format!("support point {index} is not in contact")));
    }
    let slot = flags[..index].iter().filter(|&&c| c).count();
    let contacts = contact_kinematics(spec, g, p, v, &pattern)?;
    let c = contacts[slot];
    Ok(xi.point_velocity(&c.position) + c.shape_velocity)
}

/// Net ground reaction wrench at `p` for shape velocity `v` and body
/// velocity `xi`.
pub fn net_wrench(spec: &RobotSpec, g: &GaitParams, p: ShapePoint, v: ShapeVelocity, xi: &BodyVelocity) -> Result<Wrench> {
    let pattern = contact_pattern(spec, g, p.phi_c);
    let contacts = contact_kinematics(spec, g, p, v, &pattern)?;
    if contacts.is_empty() {
        return Err(Error::NoSupport {
            phi_c: p.phi_c,
            phi_b: p.phi_b,
        });
    }
    Ok(wrench_of(&spec.friction, &contacts, xi, spec.friction.epsilon_v * v.max_abs()))
}

/// Body velocity balancing the ground reaction forces, with the contact set
/// of `pattern`.
pub fn solve_body_velocity_in_pattern(
    spec: &RobotSpec,
    g: &GaitParams,
    p: ShapePoint,
    v: ShapeVelocity,
    pattern: &ContactPattern,
) -> Result<BodyVelocity> {
    if pattern.count() == 0 {
        return Err(Error::NoSupport {
            phi_c: p.phi_c,
            phi_b: p.phi_b,
        });
    }
    let contacts = contact_kinematics(spec, g, p, v, pattern)?;
    solve_contacts(&spec.friction, &contacts, v.max_abs()).map_err(|w| Error::NonConvergence {
        phi_c: p.phi_c,
        phi_b: p.phi_b,
        force: w.force_norm(),
        torque: w.torque.abs(),
    })
}

pub fn solve_body_velocity(spec: &RobotSpec, g: &GaitParams, p: ShapePoint, v: ShapeVelocity) -> Result<BodyVelocity> {
    solve_body_velocity_in_pattern(spec, g, p, v, &contact_pattern(spec, g, p.phi_c))
}

/// Columnwise local connection at `p`, plus the directionally exact body
/// velocity for `direction` if given.
pub fn local_connection_at(
    spec: &RobotSpec,
    g: &GaitParams,
    p: ShapePoint,
    direction: Option<ShapeVelocity>,
) -> Result<LocalConnection> {
    let pattern = contact_pattern(spec, g, p.phi_c);
    let c = solve_body_velocity_in_pattern(spec, g, p, ShapeVelocity::CONTACT, &pattern)?;
    let b = solve_body_velocity_in_pattern(spec, g, p, ShapeVelocity::BODY, &pattern)?;
    let directional = direction
        .map(|d| solve_body_velocity_in_pattern(spec, g, p, d, &pattern))
        .transpose()?;
    Ok(LocalConnection {
        a: Matrix3x2::new(c.x, b.x, c.y, b.y, c.theta, b.theta),
        directional,
    })
}
