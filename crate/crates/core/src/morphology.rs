//! Robot morphologies and planar forward kinematics.
//!
//! A robot is a serial chain of rigid links ordered head to tail. Body joint
//! `k` (1-based) sits between link `k` and link `k + 1`; a positive joint
//! angle turns the posterior link clockwise relative to the anterior one. In legged mode every link carries one pair of legs, modeled as rigid
//! massless struts ending in point feet. A shoulder angle `θ > 0` swings a
//! foot toward the head.
//!
//! All lengths are in body lengths (BL): the link lengths sum to one.

use std::f64::consts::FRAC_PI_2;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contact::{FrictionKind, FrictionModel};
use crate::error::{Error, Result};
use crate::se2::{heading_vector, Point2, Pose2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Legged,
    Sidewinder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn mirrored(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Lateral body-wave amplitude. Limbless robots keep the relative curvature
/// of the backbone fixed, so their amplitude grows with the wave's spatial
/// frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BodyAmplitude {
    /// Constant amplitude in radians.
    Fixed(f64),
    /// Amplitude `k · Φ` radians where `Φ = min(Φ_lat, 1 − Φ_lat)` is the
    /// spatial frequency of the wave in waves per segment.
    PerPhaseLag(f64),
}

impl BodyAmplitude {
    pub fn at(&self, phase_lag: f64) -> f64 {
        match *self {
            BodyAmplitude::Fixed(a) => a,
            BodyAmplitude::PerPhaseLag(k) => k * phase_lag.min(1.0 - phase_lag),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitudes {
    /// Shoulder excursion amplitude `A_θ` in radians.
    pub theta: f64,
    pub alpha: BodyAmplitude,
}

/// Morphology of a serial chain robot. Angles are stored in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotSpec {
    pub name: String,
    pub n_leg_pairs: usize,
    pub n_body_joints: usize,
    pub link_lengths: Vec<f64>,
    pub leg_lengths: Vec<f64>,
    /// Longitudinal position of each leg pair's shoulder, measured from its
    /// link midpoint toward the head.
    pub leg_attach_offsets: Vec<f64>,
    pub link_masses: Vec<f64>,
    pub leg_masses: Vec<f64>,
    pub friction: FrictionModel,
    pub amplitudes: Amplitudes,
    pub mode: Mode,
}

/// The four robots studied with this model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReferenceRobot {
    Quadruped,
    Hexapod,
    Myriapod,
    Sidewinder,
}

impl ReferenceRobot {
    pub const ALL: [ReferenceRobot; 4] = [
        ReferenceRobot::Quadruped,
        ReferenceRobot::Hexapod,
        ReferenceRobot::Myriapod,
        ReferenceRobot::Sidewinder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReferenceRobot::Quadruped => "quadruped",
            ReferenceRobot::Hexapod => "hexapod",
            ReferenceRobot::Myriapod => "myriapod",
            ReferenceRobot::Sidewinder => "sidewinder",
        }
    }
}

impl FromStr for ReferenceRobot {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadruped" => Ok(ReferenceRobot::Quadruped),
            "hexapod" => Ok(ReferenceRobot::Hexapod),
            "myriapod" => Ok(ReferenceRobot::Myriapod),
            "sidewinder" => Ok(ReferenceRobot::Sidewinder),
            other => Err(Error::InvalidInput(format!(
                "unknown reference robot `{other}` (expected quadruped, hexapod, myriapod or sidewinder)"
            ))),
        }
    }
}

/// Build one of the reference robots by name.
pub fn make_reference_robot(name: &str) -> Result<RobotSpec> {
    Ok(ReferenceRobot::from_str(name)?.spec())
}

impl ReferenceRobot {
    pub fn spec(self) -> RobotSpec {
        let deg = f64::to_radians;
        let anisotropic = FrictionModel::default();
        match self {
            // Two trunk links with the shoulders and hips at the trunk ends.
            ReferenceRobot::Quadruped => RobotSpec::uniform_legged(
                "quadruped",
                2,
                0.2,
                vec![0.25, -0.25],
                anisotropic,
                Amplitudes {
                    theta: deg(30.0),
                    alpha: BodyAmplitude::Fixed(deg(30.0)),
                },
            ),
            ReferenceRobot::Hexapod => RobotSpec::uniform_legged(
                "hexapod",
                3,
                0.3,
                vec![0.0; 3],
                anisotropic,
                Amplitudes {
                    theta: deg(10.0),
                    alpha: BodyAmplitude::Fixed(deg(10.0)),
                },
            ),
            // 12 cm legs on a 72 cm body.
            ReferenceRobot::Myriapod => RobotSpec::uniform_legged(
                "myriapod",
                8,
                12.0 / 72.0,
                vec![0.0; 8],
                anisotropic,
                Amplitudes {
                    theta: deg(12.0),
                    alpha: BodyAmplitude::Fixed(deg(17.0)),
                },
            ),
            ReferenceRobot::Sidewinder => RobotSpec {
                name: "sidewinder".into(),
                n_leg_pairs: 0,
                n_body_joints: 6,
                link_lengths: vec![1.0 / 7.0; 7],
                leg_lengths: vec![],
                leg_attach_offsets: vec![],
                link_masses: vec![1.0; 7],
                leg_masses: vec![],
                friction: FrictionModel {
                    kind: FrictionKind::IsotropicCoulomb,
                    ..FrictionModel::default()
                },
                amplitudes: Amplitudes {
                    theta: 0.0,
                    alpha: BodyAmplitude::PerPhaseLag(5.6),
                },
                mode: Mode::Sidewinder,
            },
        }
    }
}

impl RobotSpec {
    /// A legged chain of `pairs` equal links, one leg pair per link.
    pub fn uniform_legged(
        name: &str,
        pairs: usize,
        leg_length: f64,
        leg_attach_offsets: Vec<f64>,
        friction: FrictionModel,
        amplitudes: Amplitudes,
    ) -> RobotSpec {
        RobotSpec {
            name: name.to_string(),
            n_leg_pairs: pairs,
            n_body_joints: pairs.saturating_sub(1),
            link_lengths: vec![1.0 / pairs as f64; pairs],
            leg_lengths: vec![leg_length; pairs],
            leg_attach_offsets,
            link_masses: vec![1.0; pairs],
            leg_masses: vec![0.0; pairs],
            friction,
            amplitudes,
            mode: Mode::Legged,
        }
    }

    pub fn n_links(&self) -> usize {
        self.link_lengths.len()
    }

    /// Number of feet (two per leg pair).
    pub fn n_feet(&self) -> usize {
        2 * self.n_leg_pairs
    }

    /// Check every invariant; the first violation is reported with a JSON
    /// path into the robot document.
    pub fn validate(&self) -> Result<()> {
        let n_links = self.link_lengths.len();
        if n_links == 0 {
            return Err(Error::spec("$.link_lengths", "at least one link is required"));
        }
        if self.n_body_joints + 1 != n_links {
            return Err(Error::spec(
                "$.n_body_joints",
                format!("{} joints do not connect {} links", self.n_body_joints, n_links),
            ));
        }
        for (i, l) in self.link_lengths.iter().enumerate() {
            if !(l.is_finite() && *l > 0.0) {
                return Err(Error::spec(format!("$.link_lengths[{i}]"), "link length must be positive"));
            }
        }
        let total: f64 = self.link_lengths.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::spec(
                "$.link_lengths",
                format!("link lengths sum to {total}, expected 1 after normalization"),
            ));
        }
        if self.link_masses.len() != n_links {
            return Err(Error::spec(
                "$.link_masses",
                format!("expected {n_links} entries, found {}", self.link_masses.len()),
            ));
        }
        for (i, m) in self.link_masses.iter().enumerate() {
            if !(m.is_finite() && *m >= 0.0) {
                return Err(Error::spec(format!("$.link_masses[{i}]"), "mass must be non-negative"));
            }
        }

        match self.mode {
            Mode::Sidewinder => {
                if self.n_leg_pairs != 0 {
                    return Err(Error::spec("$.n_leg_pairs", "sidewinder mode requires 0 leg pairs"));
                }
            }
            Mode::Legged => {
                if self.n_leg_pairs == 0 {
                    return Err(Error::spec("$.mode", "a chain without legs must use sidewinder mode"));
                }
                if self.n_leg_pairs != n_links {
                    return Err(Error::spec(
                        "$.n_leg_pairs",
                        format!("legged chains carry one leg pair per link ({n_links} links)"),
                    ));
                }
            }
        }
        let n = self.n_leg_pairs;
        for (key, list) in [
            ("leg_lengths", &self.leg_lengths),
            ("leg_attach_offsets", &self.leg_attach_offsets),
            ("leg_masses", &self.leg_masses),
        ] {
            if list.len() != n {
                return Err(Error::spec(format!("$.{key}"), format!("expected {n} entries, found {}", list.len())));
            }
        }
        for (i, l) in self.leg_lengths.iter().enumerate() {
            if !(l.is_finite() && *l > 0.0) {
                return Err(Error::spec(format!("$.leg_lengths[{i}]"), "leg length must be positive"));
            }
        }
        for (i, o) in self.leg_attach_offsets.iter().enumerate() {
            if !(o.is_finite() && o.abs() <= 0.5 * self.link_lengths[i] + 1e-12) {
                return Err(Error::spec(
                    format!("$.leg_attach_offsets[{i}]"),
                    "shoulder must lie on its link",
                ));
            }
        }
        for (i, m) in self.leg_masses.iter().enumerate() {
            if !(m.is_finite() && *m >= 0.0) {
                return Err(Error::spec(format!("$.leg_masses[{i}]"), "mass must be non-negative"));
            }
        }
        let total_mass: f64 = self.link_masses.iter().sum::<f64>() + 2.0 * self.leg_masses.iter().sum::<f64>();
        if total_mass <= 0.0 {
            return Err(Error::spec("$.link_masses", "total mass must be positive"));
        }
        self.friction.validate("$.friction")?;
        if !self.amplitudes.theta.is_finite() {
            return Err(Error::spec("$.amplitudes.theta", "amplitude must be finite"));
        }
        match self.amplitudes.alpha {
            BodyAmplitude::Fixed(a) | BodyAmplitude::PerPhaseLag(a) if !a.is_finite() => {
                Err(Error::spec("$.amplitudes.alpha", "amplitude must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// Mirror image across the backbone axis: friction, masses and
    /// geometry are unchanged, so only the configuration needs mirroring.
    pub fn total_mass(&self) -> f64 {
        self.link_masses.iter().sum::<f64>() + 2.0 * self.leg_masses.iter().sum::<f64>()
    }
}

/// Joint angles and contact states of one instant of a gait.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Configuration {
    pub body_joint_angles: Vec<f64>,
    pub shoulder_left: Vec<f64>,
    pub shoulder_right: Vec<f64>,
    pub contact_left: Vec<bool>,
    pub contact_right: Vec<bool>,
    /// Per-link ground contact of a limbless robot; empty in legged mode.
    pub link_contacts: Vec<bool>,
}

impl Configuration {
    /// Reflect across the backbone: negate body bends and swap sides.
    pub fn mirrored(&self) -> Configuration {
        Configuration {
            body_joint_angles: self.body_joint_angles.iter().map(|a| -a).collect(),
            shoulder_left: self.shoulder_right.clone(),
            shoulder_right: self.shoulder_left.clone(),
            contact_left: self.contact_right.clone(),
            contact_right: self.contact_left.clone(),
            link_contacts: self.link_contacts.clone(),
        }
    }

    fn check(&self, spec: &RobotSpec) -> Result<()> {
        let n = spec.n_leg_pairs;
        let checks = [
            ("body_joint_angles", self.body_joint_angles.len(), spec.n_body_joints),
            ("shoulder_left", self.shoulder_left.len(), n),
            ("shoulder_right", self.shoulder_right.len(), n),
            ("contact_left", self.contact_left.len(), n),
            ("contact_right", self.contact_right.len(), n),
            (
                "link_contacts",
                self.link_contacts.len(),
                if spec.mode == Mode::Sidewinder { spec.n_links() } else { 0 },
            ),
        ];
        for (what, got, want) in checks {
            if got != want {
                return Err(Error::DimensionMismatch(format!("{what} has {got} entries, robot needs {want}")));
            }
        }
        Ok(())
    }
}

/// Midpoint pose of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub length: f64,
}

impl LinkPose {
    pub fn midpoint(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn front(&self) -> Point2 {
        self.midpoint() + 0.5 * self.length * heading_vector(self.heading)
    }

    pub fn rear(&self) -> Point2 {
        self.midpoint() - 0.5 * self.length * heading_vector(self.heading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootPoint {
    pub position: Point2,
    pub side: Side,
    /// 1-based leg pair index, head to tail.
    pub pair: usize,
    pub in_contact: bool,
}

/// Positions of every link and foot in the body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPoseSet {
    pub link_poses: Vec<LinkPose>,
    pub foot_points: Vec<FootPoint>,
    pub link_contacts: Vec<bool>,
    pub com: Point2,
}

impl PlanarPoseSet {
    /// Express every point in the parent frame of `frame`.
    pub fn transformed(&self, frame: &Pose2) -> PlanarPoseSet {
        PlanarPoseSet {
            link_poses: self
                .link_poses
                .iter()
                .map(|l| {
                    let m = frame.transform_point(&l.midpoint());
                    LinkPose {
                        x: m.x,
                        y: m.y,
                        heading: l.heading + frame.yaw,
                        length: l.length,
                    }
                })
                .collect(),
            foot_points: self
                .foot_points
                .iter()
                .map(|f| FootPoint {
                    position: frame.transform_point(&f.position),
                    ..*f
                })
                .collect(),
            link_contacts: self.link_contacts.clone(),
            com: frame.transform_point(&self.com),
        }
    }

    /// Largest gap between the rear of a link and the front of the next.
    pub fn chain_closure_residual(&self) -> f64 {
        self.link_poses
            .windows(2)
            .map(|w| (w[0].rear() - w[1].front()).norm())
            .fold(0.0, f64::max)
    }

    /// Points currently touching the ground: stance feet for legged robots,
    /// contacting link midpoints for limbless ones.
    pub fn support_points(&self) -> Vec<Point2> {
        let feet = self.foot_points.iter().filter(|f| f.in_contact).map(|f| f.position);
        let links = self
            .link_poses
            .iter()
            .zip(&self.link_contacts)
            .filter(|(_, &c)| c)
            .map(|(l, _)| l.midpoint());
        feet.chain(links).collect()
    }
}

/// Planar forward kinematics in the body frame. The body frame sits at the
/// mass-weighted center of the link midpoints, aligned with the
/// mass-weighted mean link heading.
pub fn forward_kinematics(spec: &RobotSpec, cfg: &Configuration) -> Result<PlanarPoseSet> {
    cfg.check(spec)?;
    let n_links = spec.n_links();

    // Chain in a provisional frame: head link front at the origin, heading 0.
    let mut headings = Vec::with_capacity(n_links);
    let mut mids = Vec::with_capacity(n_links);
    let mut heading = 0.0;
    let mut front = Point2::zeros();
    for k in 0..n_links {
        if k > 0 {
            heading -= cfg.body_joint_angles[k - 1];
        }
        let u = heading_vector(heading);
        mids.push(front - 0.5 * spec.link_lengths[k] * u);
        front -= spec.link_lengths[k] * u;
        headings.push(heading);
    }

    let link_mass: f64 = spec.link_masses.iter().sum();
    let weights: Vec<f64> = if link_mass > 0.0 {
        spec.link_masses.iter().map(|m| m / link_mass).collect()
    } else {
        vec![1.0 / n_links as f64; n_links]
    };
    let center: Point2 = mids.iter().zip(&weights).map(|(m, w)| m * *w).sum();
    let mean_heading: f64 = headings.iter().zip(&weights).map(|(h, w)| h * w).sum();
    let to_body = Pose2::new(0.0, 0.0, -mean_heading).compose(&Pose2::new(-center.x, -center.y, 0.0));

    let link_poses: Vec<LinkPose> = (0..n_links)
        .map(|k| {
            let m = to_body.transform_point(&mids[k]);
            LinkPose {
                x: m.x,
                y: m.y,
                heading: headings[k] - mean_heading,
                length: spec.link_lengths[k],
            }
        })
        .collect();

    let mut foot_points = Vec::with_capacity(spec.n_feet());
    if spec.mode == Mode::Legged {
        for (i, link) in link_poses.iter().enumerate() {
            let shoulder = link.midpoint() + spec.leg_attach_offsets[i] * heading_vector(link.heading);
            let l = spec.leg_lengths[i];
            foot_points.push(FootPoint {
                position: shoulder + l * heading_vector(link.heading + FRAC_PI_2 - cfg.shoulder_left[i]),
                side: Side::Left,
                pair: i + 1,
                in_contact: cfg.contact_left[i],
            });
            foot_points.push(FootPoint {
                position: shoulder + l * heading_vector(link.heading - FRAC_PI_2 + cfg.shoulder_right[i]),
                side: Side::Right,
                pair: i + 1,
                in_contact: cfg.contact_right[i],
            });
        }
    }

    let mut poses = PlanarPoseSet {
        link_poses,
        foot_points,
        link_contacts: cfg.link_contacts.clone(),
        com: Point2::zeros(),
    };
    poses.com = center_of_mass(&poses, spec)?;
    Ok(poses)
}

/// Mass-weighted mean of link midpoints and (massive) feet.
pub fn center_of_mass(poses: &PlanarPoseSet, spec: &RobotSpec) -> Result<Point2> {
    let total = spec.total_mass();
    if !(total > 0.0) {
        return Err(Error::InvalidInput(format!("total mass {total} must be positive")));
    }
    let mut acc: Point2 = poses
        .link_poses
        .iter()
        .zip(&spec.link_masses)
        .map(|(l, m)| l.midpoint() * *m)
        .sum();
    for foot in &poses.foot_points {
        acc += foot.position * spec.leg_masses[foot.pair - 1];
    }
    Ok(acc / total)
}

// ---------------------------------------------------------------------------
// JSON document format. Angles are in degrees in files.

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpecDocument {
    #[serde(default)]
    pub name: Option<String>,
    pub n_leg_pairs: usize,
    pub n_body_joints: usize,
    pub link_lengths: Vec<f64>,
    #[serde(default)]
    pub leg_lengths: Vec<f64>,
    #[serde(default)]
    pub leg_attach_offsets: Vec<f64>,
    #[serde(default)]
    pub link_masses: Option<Vec<f64>>,
    #[serde(default)]
    pub leg_masses: Option<Vec<f64>>,
    pub friction: FrictionModel,
    pub amplitudes: AmplitudesDocument,
    pub mode: Mode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudesDocument {
    /// Degrees.
    pub theta: f64,
    /// Degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Degrees per unit spatial frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_per_phase_lag: Option<f64>,
}

impl RobotSpec {
    /// Parse and validate a JSON robot document. Link, leg and offset
    /// lengths are rescaled together so the body length is one.
    pub fn from_json(text: &str) -> Result<RobotSpec> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: RobotSpecDocument = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { "$".to_string() } else { format!("$.{path}") };
            Error::spec(path, e.inner().to_string())
        })?;
        RobotSpec::from_document(doc)
    }

    pub fn from_document(doc: RobotSpecDocument) -> Result<RobotSpec> {
        // Checked before normalization so a bad entry is reported by index.
        for (i, l) in doc.link_lengths.iter().enumerate() {
            if !(l.is_finite() && *l > 0.0) {
                return Err(Error::spec(format!("$.link_lengths[{i}]"), "link length must be positive"));
            }
        }
        let total: f64 = doc.link_lengths.iter().sum();
        if doc.link_lengths.is_empty() || !(total.is_finite() && total > 0.0) {
            return Err(Error::spec("$.link_lengths", "link lengths must have a positive sum"));
        }
        let alpha = match (doc.amplitudes.alpha, doc.amplitudes.alpha_per_phase_lag) {
            (Some(a), None) => BodyAmplitude::Fixed(a.to_radians()),
            (None, Some(k)) => BodyAmplitude::PerPhaseLag(k.to_radians()),
            (None, None) => BodyAmplitude::Fixed(0.0),
            (Some(_), Some(_)) => {
                return Err(Error::spec(
                    "$.amplitudes",
                    "give either `alpha` or `alpha_per_phase_lag`, not both",
                ))
            }
        };
        let n_links = doc.link_lengths.len();
        let spec = RobotSpec {
            name: doc.name.unwrap_or_else(|| "custom".into()),
            n_leg_pairs: doc.n_leg_pairs,
            n_body_joints: doc.n_body_joints,
            link_lengths: doc.link_lengths.iter().map(|l| l / total).collect(),
            leg_lengths: doc.leg_lengths.iter().map(|l| l / total).collect(),
            leg_attach_offsets: doc.leg_attach_offsets.iter().map(|l| l / total).collect(),
            link_masses: doc.link_masses.unwrap_or_else(|| vec![1.0; n_links]),
            leg_masses: doc.leg_masses.unwrap_or_else(|| vec![0.0; doc.n_leg_pairs]),
            friction: doc.friction,
            amplitudes: Amplitudes {
                theta: doc.amplitudes.theta.to_radians(),
                alpha,
            },
            mode: doc.mode,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_document(&self) -> RobotSpecDocument {
        let (alpha, alpha_per_phase_lag) = match self.amplitudes.alpha {
            BodyAmplitude::Fixed(a) => (Some(a.to_degrees()), None),
            BodyAmplitude::PerPhaseLag(k) => (None, Some(k.to_degrees())),
        };
        RobotSpecDocument {
            name: Some(self.name.clone()),
            n_leg_pairs: self.n_leg_pairs,
            n_body_joints: self.n_body_joints,
            link_lengths: self.link_lengths.clone(),
            leg_lengths: self.leg_lengths.clone(),
            leg_attach_offsets: self.leg_attach_offsets.clone(),
            link_masses: Some(self.link_masses.clone()),
            leg_masses: Some(self.leg_masses.clone()),
            friction: self.friction,
            amplitudes: AmplitudesDocument {
                theta: self.amplitudes.theta.to_degrees(),
                alpha,
                alpha_per_phase_lag,
            },
            mode: self.mode,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("robot document serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(spec: &RobotSpec) -> Configuration {
        let n = spec.n_leg_pairs;
        Configuration {
            body_joint_angles: vec![0.0; spec.n_body_joints],
            shoulder_left: vec![0.0; n],
            shoulder_right: vec![0.0; n],
            contact_left: vec![true; n],
            contact_right: vec![true; n],
            link_contacts: if spec.mode == Mode::Sidewinder { vec![true; spec.n_links()] } else { vec![] },
        }
    }

    #[test]
    fn reference_amplitudes() {
        let q = make_reference_robot("quadruped").unwrap();
        assert!((q.amplitudes.theta - 30f64.to_radians()).abs() < 1e-15);
        assert_eq!(q.amplitudes.alpha, BodyAmplitude::Fixed(30f64.to_radians()));
        let m = make_reference_robot("myriapod").unwrap();
        assert_eq!(m.n_leg_pairs, 8);
        assert!((m.amplitudes.theta - 12f64.to_radians()).abs() < 1e-15);
        assert_eq!(m.amplitudes.alpha, BodyAmplitude::Fixed(17f64.to_radians()));
        let s = make_reference_robot("sidewinder").unwrap();
        assert_eq!((s.n_leg_pairs, s.mode, s.n_links()), (0, Mode::Sidewinder, 7));
        assert!(make_reference_robot("octopus").is_err());
        for r in ReferenceRobot::ALL {
            r.spec().validate().unwrap();
        }
    }

    #[test]
    fn zero_angles_give_straight_chain() {
        let spec = ReferenceRobot::Hexapod.spec();
        let poses = forward_kinematics(&spec, &straight(&spec)).unwrap();
        for l in &poses.link_poses {
            assert!(l.y.abs() < 1e-15 && l.heading.abs() < 1e-15);
        }
        let head = poses.link_poses[0].front();
        let tail = poses.link_poses[2].rear();
        assert!(((head - tail).norm() - 1.0).abs() < 1e-12);
        for f in &poses.foot_points {
            let link = &poses.link_poses[f.pair - 1];
            assert!((f.position.x - link.x).abs() < 1e-15);
            let sign = if f.side == Side::Left { 1.0 } else { -1.0 };
            assert!((f.position.y - sign * 0.3).abs() < 1e-15);
        }
        assert!(poses.com.norm() < 1e-15);
    }

    #[test]
    fn hand_composed_head_to_tail_heading() {
        let spec = ReferenceRobot::Hexapod.spec();
        let a = 10f64.to_radians();
        for (alpha, expected) in [([a, -a], 0.0), ([a, a], -2.0 * a), ([-a, -a], 2.0 * a)] {
            let mut cfg = straight(&spec);
            cfg.body_joint_angles = alpha.to_vec();
            let poses = forward_kinematics(&spec, &cfg).unwrap();
            let diff = poses.link_poses[2].heading - poses.link_poses[0].heading;
            assert!((diff - expected).abs() < 1e-15);
            // Rebuild link 3's direction by composing planar rotations by hand.
            let (c1, s1) = (-alpha[0]).cos_sin();
            let (c2, s2) = (-alpha[1]).cos_sin();
            let h0 = poses.link_poses[0].heading;
            let r = [[c1 * c2 - s1 * s2, -(s1 * c2 + c1 * s2)], [s1 * c2 + c1 * s2, c1 * c2 - s1 * s2]];
            let u0 = heading_vector(h0);
            let u2 = Point2::new(r[0][0] * u0.x + r[0][1] * u0.y, r[1][0] * u0.x + r[1][1] * u0.y);
            assert!((u2 - heading_vector(poses.link_poses[2].heading)).norm() < 1e-14);
        }
    }

    trait CosSin {
        fn cos_sin(self) -> (f64, f64);
    }
    impl CosSin for f64 {
        fn cos_sin(self) -> (f64, f64) {
            (self.cos(), self.sin())
        }
    }

    #[test]
    fn weighted_center_of_mass() {
        let mut spec = RobotSpec::uniform_legged(
            "three",
            3,
            0.2,
            vec![0.0; 3],
            FrictionModel::default(),
            Amplitudes {
                theta: 0.0,
                alpha: BodyAmplitude::Fixed(0.0),
            },
        );
        spec.link_masses = vec![1.0, 2.0, 1.0];
        let poses = forward_kinematics(&spec, &straight(&spec)).unwrap();
        let mids: Vec<Point2> = poses.link_poses.iter().map(|l| l.midpoint()).collect();
        let oracle = (mids[0] * 1.0 + mids[1] * 2.0 + mids[2] * 1.0) / 4.0;
        assert!((poses.com - oracle).norm() < 1e-15);
        assert!((poses.com - mids[1]).norm() < 1e-15);

        let mut two = spec.clone();
        two.link_lengths = vec![0.5, 0.5];
        two.link_masses = vec![1.0, 1.0];
        two.n_body_joints = 1;
        two.n_leg_pairs = 2;
        two.leg_lengths.truncate(2);
        two.leg_attach_offsets.truncate(2);
        two.leg_masses.truncate(2);
        let poses = forward_kinematics(&two, &straight(&two)).unwrap();
        let mid = (poses.link_poses[0].front() + poses.link_poses[1].rear()) / 2.0;
        assert!((poses.com - mid).norm() < 1e-15);
    }

    #[test]
    fn leg_masses_pull_com_to_feet() {
        let mut spec = ReferenceRobot::Quadruped.spec();
        spec.leg_masses = vec![1.0, 0.0];
        let mut cfg = straight(&spec);
        cfg.shoulder_left[0] = 0.3;
        let poses = forward_kinematics(&spec, &cfg).unwrap();
        let total = 2.0 + 2.0;
        let oracle = (poses.link_poses[0].midpoint()
            + poses.link_poses[1].midpoint()
            + poses.foot_points[0].position
            + poses.foot_points[1].position)
            / total;
        assert!((poses.com - oracle).norm() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let spec = ReferenceRobot::Hexapod.spec();
        let mut cfg = straight(&spec);
        cfg.shoulder_left.pop();
        assert!(matches!(forward_kinematics(&spec, &cfg), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn json_round_trip_and_paths() {
        let spec = ReferenceRobot::Myriapod.spec();
        let back = RobotSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back.n_leg_pairs, 8);
        assert!((back.amplitudes.theta - spec.amplitudes.theta).abs() < 1e-12);

        let mut doc = serde_json::to_value(spec.to_document()).unwrap();
        doc["leg_lengths"][3] = serde_json::json!(-1.0);
        let err = RobotSpec::from_json(&doc.to_string()).unwrap_err();
        assert!(matches!(err, Error::Spec { ref path, .. } if path == "$.leg_lengths[3]"), "{err}");

        let mut doc = serde_json::to_value(spec.to_document()).unwrap();
        doc["friction"]["mu"] = serde_json::json!("high");
        let err = RobotSpec::from_json(&doc.to_string()).unwrap_err();
        assert!(matches!(err, Error::Spec { ref path, .. } if path == "$.friction.mu"), "{err}");
    }

    #[test]
    fn lengths_are_normalized() {
        let text = r#"{
            "n_leg_pairs": 2, "n_body_joints": 1,
            "link_lengths": [20, 20], "leg_lengths": [8, 8], "leg_attach_offsets": [10, -10],
            "friction": {"kind": "anisotropic_coulomb", "mu": 1, "anisotropy_ratio": 2, "epsilon_v": 0.001},
            "amplitudes": {"theta": 30, "alpha": 30}, "mode": "legged"
        }"#;
        let spec = RobotSpec::from_json(text).unwrap();
        assert!((spec.link_lengths.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((spec.leg_lengths[0] - 0.2).abs() < 1e-12);
        assert!((spec.amplitudes.theta - 30f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn legless_chain_must_be_sidewinder() {
        let mut spec = ReferenceRobot::Sidewinder.spec();
        spec.mode = Mode::Legged;
        assert!(matches!(spec.validate(), Err(Error::Spec { ref path, .. }) if path == "$.mode"));
    }
}
