//! Static stability of planar configurations.
//!
//! A configuration is statically stable when the center of mass lies in the
//! convex hull of the support points (boundary included), which needs at
//! least three non-collinear supports. A legged configuration with every
//! leg on one side in swing is unstable; a limbless one is unstable with no
//! contact at all. Everything else is statically unstable.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::{configuration_at, GaitParams, Undulation};
use crate::morphology::{forward_kinematics, Mode, PlanarPoseSet, RobotSpec, Side};
use crate::se2::{cross, Point2};

/// Default number of phase samples for the stability metric.
pub const DEFAULT_SAMPLES: usize = 720;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    StaticallyStable,
    StaticallyUnstable,
    Unstable,
}

impl StabilityClass {
    pub fn label(self) -> &'static str {
        match self {
            StabilityClass::StaticallyStable => "statically_stable",
            StabilityClass::StaticallyUnstable => "statically_unstable",
            StabilityClass::Unstable => "unstable",
        }
    }
}

/// Convex hull by the monotone chain, counter-clockwise, without collinear
/// points.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| (*a - *b).norm() < 1e-14);
    if pts.len() < 3 {
        return pts;
    }
    let scale = pts.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let tol = 1e-12 * scale * scale;
    let turn = |o: &Point2, a: &Point2, b: &Point2| cross(&(a - o), &(b - o));
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2 && turn(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= tol {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// Whether `p` lies inside or on a counter-clockwise convex polygon.
pub fn point_in_convex_polygon(p: &Point2, hull: &[Point2]) -> bool {
    if hull.len() < 3 {
        return false;
    }
    let scale = hull.iter().map(|q| q.norm()).fold(p.norm().max(1.0), f64::max);
    let tol = 1e-12 * scale * scale;
    (0..hull.len()).all(|k| {
        let a = hull[k];
        let b = hull[(k + 1) % hull.len()];
        cross(&(b - a), &(p - a)) >= -tol
    })
}

pub fn classify(spec: &RobotSpec, poses: &PlanarPoseSet) -> StabilityClass {
    match spec.mode {
        Mode::Legged => {
            let side_down = |s: Side| poses.foot_points.iter().any(|f| f.side == s && f.in_contact);
            if !side_down(Side::Left) || !side_down(Side::Right) {
                return StabilityClass::Unstable;
            }
        }
        Mode::Sidewinder => {
            if !poses.link_contacts.iter().any(|&c| c) {
                return StabilityClass::Unstable;
            }
        }
    }
    let hull = convex_hull(&poses.support_points());
    if point_in_convex_polygon(&poses.com, &hull) {
        StabilityClass::StaticallyStable
    } else {
        StabilityClass::StaticallyUnstable
    }
}

/// Sampled contact phases `2π(k + ½)/n`.
pub fn sample_phases(samples: usize) -> impl Iterator<Item = f64> {
    (0..samples).map(move |k| TAU * (k as f64 + 0.5) / samples as f64)
}

/// Gait used to judge stability: legged robots keep a straight backbone,
/// limbless ones undulate.
pub fn stability_gait(spec: &RobotSpec, g: &GaitParams) -> GaitParams {
    GaitParams {
        undulation: match spec.mode {
            Mode::Legged => Undulation::FixedStraight,
            Mode::Sidewinder => Undulation::Coordinated,
        },
        ..*g
    }
}

/// Classification at each sampled phase, as `(φ_c, class)`.
pub fn classify_cycle(spec: &RobotSpec, g: &GaitParams, samples: usize) -> Result<Vec<(f64, StabilityClass)>> {
    if samples < 360 {
        return Err(Error::InvalidInput(format!("{samples} stability samples, at least 360 required")));
    }
    let g = stability_gait(spec, g);
    sample_phases(samples)
        .map(|phi| {
            let cfg = configuration_at(spec, &g, g.shape_at(phi))?;
            let poses = forward_kinematics(spec, &cfg)?;
            Ok((phi, classify(spec, &poses)))
        })
        .collect()
}

/// Fraction of the cycle spent statically stable, or 0 if any sampled
/// configuration is unstable.
pub fn stability_metric(spec: &RobotSpec, g: &GaitParams, samples: usize) -> Result<f64> {
    let classes = classify_cycle(spec, g, samples)?;
    if classes.iter().any(|(_, c)| *c == StabilityClass::Unstable) {
        return Ok(0.0);
    }
    let stable = classes.iter().filter(|(_, c)| *c == StabilityClass::StaticallyStable).count();
    Ok(stable as f64 / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior_points() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.5, 0.5),
            Point2::new(0.5, 0.0),
        ];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!(point_in_convex_polygon(&Point2::new(0.5, 0.5), &hull));
        assert!(point_in_convex_polygon(&Point2::new(1.0, 0.5), &hull));
        assert!(!point_in_convex_polygon(&Point2::new(1.01, 0.5), &hull));
    }

    #[test]
    fn collinear_support_never_stable() {
        let pts = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)];
        let hull = convex_hull(&pts);
        assert!(hull.len() < 3);
        assert!(!point_in_convex_polygon(&Point2::new(1.0, 0.0), &hull));
    }
}
