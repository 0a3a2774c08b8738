//! Height functions on the shape torus, Stokes estimates of per-cycle
//! displacement, and optimization of the body-leg phase offset.
//!
//! A gait path `φ_b = φ_c + φ_0` winds once around each direction of the
//! torus, so it bounds no region by itself. Unwrapped onto the square
//! `[0, 2π)²` it becomes two parallel segments. Each segment is closed with
//! pieces of the square's edges (the assistive lines): the upper-left
//! triangle above the first segment is traversed counter-clockwise, the
//! lower-right triangle below the second one clockwise, and the edge pieces
//! add up to full line integrals along `φ_b = 0` and `φ_c = 0`. Hence
//!
//! ```text
//! ∮ A·dΦ = ∬_UL curl A − ∬_LR curl A + ∫ A_c(φ_c, 0) dφ_c + ∫ A_b(0, φ_b) dφ_b
//! ```

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix3x2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contact::{solve_body_velocity_in_pattern, BodyVelocity};
use crate::error::{Error, Result};
use crate::gait::{contact_pattern, GaitParams, ShapePoint, ShapeVelocity, Undulation};
use crate::morphology::RobotSpec;
use crate::numeric::{golden_section_max, wrap_tau};
use crate::se2::Pose2;
use crate::simulate::cycle_displacement;

/// How the 3×2 connection matrix is assembled from balance solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKind {
    /// Columns are the responses to unit `φ̇_c` and unit `φ̇_b` separately.
    Columnwise,
    /// The body column is the response to unit `φ̇_b`; the contact column is
    /// the remainder of the response to `φ̇_c = φ̇_b = 1`. Applied to a gait
    /// path direction it reproduces the directionally exact body velocity.
    #[default]
    PathAligned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightFieldOptions {
    pub resolution: usize,
    pub connection: ConnectionKind,
}

impl Default for HeightFieldOptions {
    fn default() -> Self {
        HeightFieldOptions {
            resolution: 128,
            connection: ConnectionKind::PathAligned,
        }
    }
}

/// Connection and its curl sampled at `φ = 2π(k + ½)/R` on both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    pub resolution: usize,
    pub connection_kind: ConnectionKind,
    /// Indexed by `ib * R + ic`.
    pub connection: Vec<Matrix3x2<f64>>,
    /// Curl per body-velocity component (x, y, θ), indexed like
    /// `connection`.
    pub curl: [Vec<f64>; 3],
    /// Shape points where the balance failed; their connection was filled
    /// from neighbours.
    pub failed: Vec<(f64, f64)>,
    /// Number of grid points without ground support (connection zero).
    pub unsupported: usize,
}

impl HeightField {
    pub fn phase(&self, k: usize) -> f64 {
        grid_phase(k, self.resolution)
    }

    pub fn index(&self, ic: usize, ib: usize) -> usize {
        ib * self.resolution + ic
    }

    pub fn cell_area(&self) -> f64 {
        let h = TAU / self.resolution as f64;
        h * h
    }
}

fn grid_phase(k: usize, r: usize) -> f64 {
    TAU * (k as f64 + 0.5) / r as f64
}

fn connection_at(
    spec: &RobotSpec,
    g: &GaitParams,
    p: ShapePoint,
    kind: ConnectionKind,
) -> Result<Option<Matrix3x2<f64>>> {
    let pattern = contact_pattern(spec, g, p.phi_c);
    if pattern.count() == 0 {
        return Ok(None);
    }
    let solve = |v| solve_body_velocity_in_pattern(spec, g, p, v, &pattern);
    let b = solve(ShapeVelocity::BODY)?;
    let c = match kind {
        ConnectionKind::Columnwise => solve(ShapeVelocity::CONTACT)?,
        ConnectionKind::PathAligned => {
            let both = solve(ShapeVelocity::ALONG_PATH)?;
            BodyVelocity::new(both.x - b.x, both.y - b.y, both.theta - b.theta)
        }
    };
    Ok(Some(Matrix3x2::new(c.x, b.x, c.y, b.y, c.theta, b.theta)))
}

/// Sample the connection on the grid and take its curl
/// `∂A_b/∂φ_c − ∂A_c/∂φ_b` by periodic central differences.
pub fn compute_height_field(spec: &RobotSpec, g: &GaitParams, opts: &HeightFieldOptions) -> Result<HeightField> {
    g.validate()?;
    let r = opts.resolution;
    if r < 32 {
        return Err(Error::InvalidInput(format!("height field resolution {r} below 32")));
    }
    let results: Vec<Result<Option<Matrix3x2<f64>>>> = (0..r * r)
        .into_par_iter()
        .map(|idx| {
            let (ic, ib) = (idx % r, idx / r);
            connection_at(spec, g, ShapePoint::new(grid_phase(ic, r), grid_phase(ib, r)), opts.connection)
        })
        .collect();

    let mut connection = vec![Matrix3x2::zeros(); r * r];
    let mut ok = vec![true; r * r];
    let mut failed = Vec::new();
    let mut unsupported = 0;
    for (idx, res) in results.into_iter().enumerate() {
        match res {
            Ok(Some(a)) => connection[idx] = a,
            Ok(None) => unsupported += 1,
            Err(Error::NonConvergence { .. }) => {
                ok[idx] = false;
                failed.push((grid_phase(idx % r, r), grid_phase(idx / r, r)));
            }
            Err(e) => return Err(e),
        }
    }
    if failed.len() * 100 > r * r {
        return Err(Error::HeightField { failed, total: r * r });
    }
    // Fill isolated failures from the neighbours along φ_c.
    for idx in 0..r * r {
        if !ok[idx] {
            let (ic, ib) = (idx % r, idx / r);
            let nb: Vec<Matrix3x2<f64>> = [(ic + r - 1) % r, (ic + 1) % r]
                .iter()
                .map(|&j| ib * r + j)
                .filter(|&j| ok[j])
                .map(|j| connection[j])
                .collect();
            if !nb.is_empty() {
                connection[idx] = nb.iter().sum::<Matrix3x2<f64>>() / nb.len() as f64;
            }
        }
    }

    let h = TAU / r as f64;
    let curl = [0, 1, 2].map(|row| {
        (0..r * r)
            .map(|idx| {
                let (ic, ib) = (idx % r, idx / r);
                let db = (connection[ib * r + (ic + 1) % r][(row, 1)] - connection[ib * r + (ic + r - 1) % r][(row, 1)])
                    / (2.0 * h);
                let dc = (connection[((ib + 1) % r) * r + ic][(row, 0)] - connection[((ib + r - 1) % r) * r + ic][(row, 0)])
                    / (2.0 * h);
                db - dc
            })
            .collect()
    });
    Ok(HeightField {
        resolution: r,
        connection_kind: opts.connection,
        connection,
        curl,
        failed,
        unsupported,
    })
}

/// A straight gait path `φ_b = φ_c + φ_0` on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitPath {
    pub phi0: f64,
    /// Windings around the `φ_c` and `φ_b` directions.
    pub winding: (i32, i32),
}

impl GaitPath {
    pub fn new(phi0: f64) -> Self {
        GaitPath {
            phi0: wrap_tau(phi0),
            winding: (1, 1),
        }
    }

    pub fn phi_b(&self, phi_c: f64) -> f64 {
        wrap_tau(phi_c + self.phi0)
    }
}

/// Area of a convex polygon clipped to the half-plane `y − x ≥ c`.
fn clipped_area(poly: &[(f64, f64)], c: f64) -> f64 {
    let inside = |p: &(f64, f64)| p.1 - p.0 - c;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let (sa, sb) = (inside(&a), inside(&b));
        if sa >= 0.0 {
            out.push(a);
        }
        if (sa >= 0.0) != (sb >= 0.0) {
            let t = sa / (sa - sb);
            out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    let n = out.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n)
        .map(|k| {
            let (p, q) = (out[k], out[(k + 1) % n]);
            p.0 * q.1 - q.0 * p.1
        })
        .sum::<f64>()
        .abs()
}

/// Per-cell areas of the upper-left triangle `φ_b ≥ φ_c + φ_0` and of the
/// lower-right triangle `φ_b ≤ φ_c + φ_0 − 2π`.
pub fn region_weights(resolution: usize, phi0: f64) -> (Vec<f64>, Vec<f64>) {
    let r = resolution;
    let h = TAU / r as f64;
    let mut upper = vec![0.0; r * r];
    let mut lower = vec![0.0; r * r];
    for ib in 0..r {
        for ic in 0..r {
            let (x0, y0) = (ic as f64 * h, ib as f64 * h);
            let cell = [(x0, y0), (x0 + h, y0), (x0 + h, y0 + h), (x0, y0 + h)];
            upper[ib * r + ic] = clipped_area(&cell, phi0);
            // y ≤ x + φ0 − 2π  ⇔  x − y ≥ 2π − φ0: mirror the cell.
            let mirrored = cell.map(|(x, y)| (y, x));
            lower[ib * r + ic] = clipped_area(&mirrored, TAU - phi0);
        }
    }
    (upper, lower)
}

/// Stokes estimate of the per-cycle displacement `(Δx, Δy, Δθ)` along a
/// `(1, 1)` gait path.
pub fn stokes_displacement(h: &HeightField, path: &GaitPath) -> Result<[f64; 3]> {
    if path.winding != (1, 1) {
        return Err(Error::InvalidInput(format!(
            "gait path winding {:?} is not (1, 1)",
            path.winding
        )));
    }
    let r = h.resolution;
    let step = TAU / r as f64;
    let (upper, lower) = region_weights(r, path.phi0);
    Ok([0, 1, 2].map(|row| {
        let surface: f64 = (0..r * r).map(|idx| h.curl[row][idx] * (upper[idx] - lower[idx])).sum();
        // Edge integrals along φ_b = 0 and φ_c = 0, between the first and
        // last grid rows/columns.
        let edge_c: f64 = (0..r)
            .map(|ic| 0.5 * (h.connection[h.index(ic, 0)][(row, 0)] + h.connection[h.index(ic, r - 1)][(row, 0)]))
            .sum::<f64>()
            * step;
        let edge_b: f64 = (0..r)
            .map(|ib| 0.5 * (h.connection[h.index(0, ib)][(row, 1)] + h.connection[h.index(r - 1, ib)][(row, 1)]))
            .sum::<f64>()
            * step;
        surface + edge_c + edge_b
    }))
}

/// Predicted optimal body-leg phase lag `(Φ_lat + ½)π`, reduced to
/// `[0, 2π)`.
pub fn phase_relation_prediction(phase_lag: f64) -> f64 {
    wrap_tau((phase_lag + 0.5) * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub scan_points: usize,
    pub tolerance: f64,
    pub steps_per_cycle: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            scan_points: 64,
            tolerance: 1e-3,
            steps_per_cycle: 128,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseOptimum {
    pub phi0: f64,
    /// Forward displacement per cycle at `phi0`.
    pub forward: f64,
    pub displacement: Pose2,
}

impl PhaseOptimum {
    /// Optimal body-leg phase lag `φ_bc = −φ_0`.
    pub fn phi_bc(&self) -> f64 {
        wrap_tau(-self.phi0)
    }
}

/// Maximize the per-cycle forward displacement over `φ_0` by a grid scan
/// and golden-section refinement around the best scan point.
pub fn optimize_phase_offset(spec: &RobotSpec, g: &GaitParams, opts: &OptimizerOptions) -> Result<PhaseOptimum> {
    if g.undulation != Undulation::Coordinated {
        return Err(Error::InvalidInput("phase offset optimization needs coordinated undulation".into()));
    }
    if opts.scan_points < 3 {
        return Err(Error::InvalidInput("the phase scan needs at least 3 points".into()));
    }
    let n = opts.scan_points;
    let eval = |phi0: f64| -> Result<Pose2> {
        let gi = GaitParams { phi0, ..*g };
        cycle_displacement(spec, &gi, opts.steps_per_cycle)
    };
    let scan: Vec<Result<Pose2>> = (0..n).into_par_iter().map(|k| eval(TAU * k as f64 / n as f64)).collect();
    let scan: Vec<Pose2> = scan.into_iter().collect::<Result<_>>()?;
    let mut best = 0;
    for k in 1..n {
        if scan[k].x > scan[best].x {
            best = k;
        }
    }
    let mut result = PhaseOptimum {
        phi0: TAU * best as f64 / n as f64,
        forward: scan[best].x,
        displacement: scan[best],
    };
    if g.effective_amp_alpha() == 0.0 {
        return Ok(result);
    }
    let width = TAU / n as f64;
    let centre = result.phi0;
    let (x, fx) = golden_section_max(|p| eval(p).map(|d| d.x), centre - width, centre + width, opts.tolerance)?;
    if fx > result.forward {
        let phi0 = wrap_tau(x);
        let displacement = eval(phi0)?;
        result = PhaseOptimum {
            phi0,
            forward: displacement.x,
            displacement,
        };
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipped_areas_of_triangles() {
        let r = 32;
        for phi0 in [0.0, 1.0, PI, 5.0] {
            let (u, l) = region_weights(r, phi0);
            let su: f64 = u.iter().sum();
            let sl: f64 = l.iter().sum();
            assert!((su - 0.5 * (TAU - phi0).powi(2)).abs() < 1e-9, "{phi0}");
            assert!((sl - 0.5 * phi0 * phi0).abs() < 1e-9);
        }
    }

    #[test]
    fn prediction_values() {
        assert!((phase_relation_prediction(0.5) - PI).abs() < 1e-15);
        assert!((phase_relation_prediction(0.0) - PI / 2.0).abs() < 1e-15);
        assert!((phase_relation_prediction(0.25) - 0.75 * PI).abs() < 1e-15);
    }
}
