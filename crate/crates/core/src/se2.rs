//! Planar rigid motions.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

pub type Point2 = Vector2<f64>;

/// An element of SE(2): translation `(x, y)` followed by rotation `yaw`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose2 {
    pub const IDENTITY: Pose2 = Pose2 {
        x: 0.0,
        y: 0.0,
        yaw: 0.0,
    };

    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Pose2 { x, y, yaw }
    }

    pub fn translation(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// `self ∘ other`: express `other` (given in this pose's frame) in the
    /// parent frame.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let p = self.transform_point(&other.translation());
        Pose2::new(p.x, p.y, self.yaw + other.yaw)
    }

    pub fn inverse(&self) -> Pose2 {
        let t = rotate(&self.translation(), -self.yaw);
        Pose2::new(-t.x, -t.y, -self.yaw)
    }

    pub fn transform_point(&self, p: &Point2) -> Point2 {
        rotate(p, self.yaw) + self.translation()
    }

    /// Left-lifted action: maps a body-frame velocity `(vx, vy, ω)` to pose
    /// rates in the parent frame.
    pub fn lift_velocity(&self, vx: f64, vy: f64, omega: f64) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        [c * vx - s * vy, s * vx + c * vy, omega]
    }

    /// `self` composed with itself `k` times.
    pub fn powi(&self, k: usize) -> Pose2 {
        (0..k).fold(Pose2::IDENTITY, |acc, _| acc.compose(self))
    }
}

pub fn rotate(p: &Point2, angle: f64) -> Point2 {
    let (s, c) = angle.sin_cos();
    Point2::new(c * p.x - s * p.y, s * p.x + c * p.y)
}

/// Unit vector at `angle`.
pub fn heading_vector(angle: f64) -> Point2 {
    let (s, c) = angle.sin_cos();
    Point2::new(c, s)
}

/// z-component of the planar cross product.
pub fn cross(a: &Point2, b: &Point2) -> f64 {
    a.x * b.y - a.y * b.x
}
