//! Estimation of Hildebrand parameters and body-leg phasing from
//! joint-angle time series.
//!
//! Phases are offsets: a leg fitted with phase `p` follows the shoulder
//! waveform `θ(ωt + p)`, and a body joint with offset `p_b` follows
//! `A cos(ωt + p_b)`. The body-leg phase lag is `p_c − p_b`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::{configuration_at, shoulder_angle_on_branch, GaitParams, Undulation};
use crate::morphology::{Mode, RobotSpec, Side};
use crate::numeric::{circular_mean, levenberg_marquardt, wrap_tau, LmOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegSeries {
    pub side: Side,
    /// 1-based leg pair, head to tail.
    pub pair: usize,
    /// Shoulder angles in radians.
    pub angles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryDataset {
    pub time: Vec<f64>,
    pub legs: Vec<LegSeries>,
    /// Body joint angles in radians, one series per joint, head to tail.
    pub body: Vec<Vec<f64>>,
}

impl TrajectoryDataset {
    pub fn validate(&self) -> Result<()> {
        let n = self.time.len();
        if n < 8 {
            return Err(Error::InvalidInput(format!("{n} time samples are too few to fit")));
        }
        if self.time.iter().any(|t| !t.is_finite()) || self.time.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("time must be finite and strictly increasing".into()));
        }
        for leg in &self.legs {
            if leg.angles.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "leg {:?} {} has {} samples, time has {n}",
                    leg.side,
                    leg.pair,
                    leg.angles.len()
                )));
            }
        }
        for (j, s) in self.body.iter().enumerate() {
            if s.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "body joint {} has {} samples, time has {n}",
                    j + 1,
                    s.len()
                )));
            }
        }
        Ok(())
    }
}

/// Shoulder waveform with unit cycle: `+A` at phase 0 (touchdown), `−A` at
/// `2πD` (lift-off).
pub fn leg_waveform(psi: f64, duty: f64, amplitude: f64) -> f64 {
    let g = GaitParams {
        duty,
        phase_lag: 0.0,
        amp_theta: amplitude,
        amp_alpha: 0.0,
        phi0: 0.0,
        undulation: Undulation::FixedStraight,
        body_phase_lag: None,
    };
    shoulder_angle_on_branch(&g, psi, wrap_tau(psi) < TAU * duty)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegFit {
    pub duty: f64,
    pub amplitude: f64,
    /// Offset `p` in `θ(2πt/T + p)`, in `[0, 2π)`.
    pub phase: f64,
    pub period: f64,
    /// Root-mean-square fit residual.
    pub residual: f64,
}

/// Period guess from the first autocorrelation peak after the first zero
/// crossing.
fn autocorrelation_period(series: &[f64], time: &[f64]) -> Option<f64> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let dt = (time[n - 1] - time[0]) / (n - 1) as f64;
    let max_lag = (2 * n) / 3;
    let ac: Vec<f64> = (0..max_lag)
        .map(|lag| (0..n - lag).map(|i| x[i] * x[i + lag]).sum::<f64>() / (n - lag) as f64)
        .collect();
    let first_negative = ac.iter().position(|&v| v < 0.0)?;
    let lag = (first_negative.max(1)..max_lag.saturating_sub(1))
        .find(|&lag| ac[lag] > 0.0 && ac[lag] > ac[lag - 1] && ac[lag] >= ac[lag + 1]);
    let lag = lag?;
    let (a, b, c) = (ac[lag - 1], ac[lag], ac[lag + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 1e-300 { 0.5 * (a - c) / denom } else { 0.0 };
    Some((lag as f64 + shift) * dt)
}

/// Fit the piecewise-cosine shoulder waveform over duty factor,
/// amplitude, phase and period.
pub fn fit_leg_model(series: &[f64], time: &[f64]) -> Result<LegFit> {
    let n = series.len();
    if n != time.len() || n < 8 {
        return Err(Error::InvalidInput("series and time must have equal length ≥ 8".into()));
    }
    let max = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = series.iter().cloned().fold(f64::INFINITY, f64::min);
    let half_range = 0.5 * (max - min);
    if !(half_range > 1e-9 * (1.0 + max.abs().max(min.abs()))) {
        return Err(Error::Degenerate("shoulder amplitude is zero; no gait to fit".into()));
    }
    let period0 = autocorrelation_period(series, time)
        .ok_or_else(|| Error::FitFailed("no periodicity found in the shoulder series".into()))?;
    let t0 = time[0];

    let residual = |p: &DVector<f64>| -> DVector<f64> {
        let (d, a, ph, period) = (p[0], p[1], p[2], p[3]);
        let dc = d.clamp(0.02, 0.98);
        let omega = TAU / period;
        let mut r = DVector::zeros(n + 1);
        for i in 0..n {
            r[i] = leg_waveform(omega * (time[i] - t0) + ph, dc, a) - series[i];
        }
        r[n] = 10.0 * half_range * (d - dc);
        r
    };

    let opts = LmOptions {
        max_iterations: 300,
        ..LmOptions::default()
    };
    let mut best: Option<(f64, DVector<f64>)> = None;
    for d0 in [0.3, 0.5, 0.7] {
        for k in 0..8 {
            let x0 = DVector::from_vec(vec![d0, half_range, TAU * k as f64 / 8.0, period0]);
            let rep = levenberg_marquardt(residual, x0, opts);
            if rep.cost.is_finite() && best.as_ref().is_none_or(|(c, _)| rep.cost < *c * (1.0 - 1e-12)) {
                best = Some((rep.cost, rep.x));
            }
        }
    }
    let (cost, x) = best.ok_or_else(|| Error::FitFailed("every start diverged".into()))?;
    let (mut d, mut a, mut ph, period) = (x[0].clamp(0.02, 0.98), x[1], x[2], x[3]);
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::FitFailed(format!("fitted period {period} is not positive")));
    }
    if a < 0.0 {
        // −θ(ψ; D) = θ(ψ − 2πD; 1 − D)
        ph -= TAU * d;
        d = 1.0 - d;
        a = -a;
    }
    ph -= TAU * (t0 / period);
    let span = time[n - 1] - time[0];
    if span < 1.5 * period {
        return Err(Error::InvalidInput(format!(
            "series spans {:.3} cycles; at least 1.5 are needed",
            span / period
        )));
    }
    Ok(LegFit {
        duty: d,
        amplitude: a,
        phase: wrap_tau(ph),
        period,
        residual: (cost / n as f64).sqrt(),
    })
}

/// Lateral phase lag from fitted leg phases `(side, pair, phase)`: circular
/// mean of the lag of each leg behind its anterior ipsilateral neighbour,
/// in cycles.
pub fn estimate_lateral_phase_lag(phases: &[(Side, usize, f64)]) -> Result<f64> {
    let mut diffs = Vec::new();
    for side in [Side::Left, Side::Right] {
        let mut legs: Vec<(usize, f64)> = phases.iter().filter(|p| p.0 == side).map(|p| (p.1, p.2)).collect();
        legs.sort_by_key(|p| p.0);
        for w in legs.windows(2) {
            let gap = (w[1].0 - w[0].0) as f64;
            if gap == 1.0 {
                diffs.push(w[0].1 - w[1].1);
            }
        }
    }
    if diffs.is_empty() {
        return Err(Error::InvalidInput("at least two adjacent ipsilateral legs are required".into()));
    }
    let mean = circular_mean(diffs).ok_or_else(|| Error::Degenerate("leg phase differences cancel out".into()))?;
    let lag = mean / TAU;
    Ok(if lag >= 1.0 { 0.0 } else { lag })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyFourier {
    pub a0: f64,
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    /// `atan2(b1, a1)`: the fundamental peaks at `ωt = phase`.
    pub phase: f64,
    /// True when both harmonics vanish.
    pub non_oscillatory: bool,
    pub residual: f64,
}

impl BodyFourier {
    /// Offset `p_b` in `A cos(ωt + p_b)`.
    pub fn offset(&self) -> f64 {
        wrap_tau(-self.phase)
    }

    pub fn amplitude(&self) -> f64 {
        self.a1.hypot(self.b1)
    }
}

/// Two-term Fourier fit `a0 + a1 cos ωt + b1 sin ωt + a2 cos 2ωt + b2 sin 2ωt`.
pub fn fit_body_fourier(series: &[f64], time: &[f64], period: f64) -> Result<BodyFourier> {
    let n = series.len();
    if n != time.len() {
        return Err(Error::DimensionMismatch("series and time lengths differ".into()));
    }
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::InvalidInput(format!("period {period} must be positive")));
    }
    let omega = TAU / period;
    let design = DMatrix::from_fn(n, 5, |i, k| {
        let t = omega * time[i];
        match k {
            0 => 1.0,
            1 => t.cos(),
            2 => t.sin(),
            3 => (2.0 * t).cos(),
            _ => (2.0 * t).sin(),
        }
    });
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if n < 5 || !(smin > 1e-9 * smax) {
        return Err(Error::Degenerate(
            "time samples do not resolve two harmonics (singular design matrix)".into(),
        ));
    }
    let y = DVector::from_column_slice(series);
    let c = svd
        .solve(&y, 1e-12 * smax)
        .map_err(|e| Error::FitFailed(e.to_string()))?;
    let resid = (&design * &c - &y).norm() / (n as f64).sqrt();
    let scale = c[0].abs().max(1.0);
    let non_oscillatory = c[1].hypot(c[2]) < 1e-9 * scale && c[3].hypot(c[4]) < 1e-9 * scale;
    Ok(BodyFourier {
        a0: c[0],
        a1: c[1],
        b1: c[2],
        a2: c[3],
        b2: c[4],
        phase: c[2].atan2(c[1]),
        non_oscillatory,
        residual: resid,
    })
}

/// Body-leg phase lag `φ_bc = p_c − p_b` in `[0, 2π)`.
pub fn estimate_phi_bc(leg_phase: f64, body_phase: f64) -> f64 {
    wrap_tau(leg_phase - body_phase)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegEstimate {
    pub side: Side,
    pub pair: usize,
    pub fit: LegFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitEstimate {
    pub duty: f64,
    pub phase_lag: f64,
    /// Radians.
    pub amp_theta: f64,
    pub period: f64,
    pub legs: Vec<LegEstimate>,
    /// Contact-phase offset of left leg 1 implied by all legs.
    pub contact_phase: f64,
    pub body: Vec<BodyFourier>,
    /// Body-wave offset of joint 1 implied by all joints.
    pub body_phase: Option<f64>,
    pub phi_bc: Option<f64>,
}

/// Fit every leg and body joint and combine them into gait parameters.
pub fn estimate_gait(data: &TrajectoryDataset) -> Result<GaitEstimate> {
    data.validate()?;
    let legs: Vec<LegEstimate> = data
        .legs
        .iter()
        .map(|l| {
            Ok(LegEstimate {
                side: l.side,
                pair: l.pair,
                fit: fit_leg_model(&l.angles, &data.time)?,
            })
        })
        .collect::<Result<_>>()?;
    let phases: Vec<(Side, usize, f64)> = legs.iter().map(|l| (l.side, l.pair, l.fit.phase)).collect();
    let phase_lag = estimate_lateral_phase_lag(&phases)?;
    let k = legs.len() as f64;
    let duty = legs.iter().map(|l| l.fit.duty).sum::<f64>() / k;
    let amp_theta = legs.iter().map(|l| l.fit.amplitude).sum::<f64>() / k;
    let period = legs.iter().map(|l| l.fit.period).sum::<f64>() / k;
    let contact_phase = circular_mean(legs.iter().map(|l| {
        let side = if l.side == Side::Right { std::f64::consts::PI } else { 0.0 };
        l.fit.phase + TAU * (l.pair as f64 - 1.0) * phase_lag - side
    }))
    .ok_or_else(|| Error::Degenerate("leg phases are inconsistent".into()))?;

    let body: Vec<BodyFourier> = data
        .body
        .iter()
        .map(|s| fit_body_fourier(s, &data.time, period))
        .collect::<Result<_>>()?;
    let body_phase = circular_mean(
        body.iter()
            .enumerate()
            .filter(|(_, b)| !b.non_oscillatory)
            .map(|(j, b)| b.offset() + TAU * j as f64 * phase_lag),
    );
    Ok(GaitEstimate {
        duty,
        phase_lag,
        amp_theta,
        period,
        legs,
        contact_phase,
        body,
        body_phase,
        phi_bc: body_phase.map(|pb| estimate_phi_bc(contact_phase, pb)),
    })
}

/// Joint-angle series of a prescribed gait sampled at
/// `samples_per_cycle` points per cycle of length `period`.
pub fn synthesize_dataset(
    spec: &RobotSpec,
    g: &GaitParams,
    period: f64,
    cycles: f64,
    samples_per_cycle: usize,
) -> Result<TrajectoryDataset> {
    if spec.mode != Mode::Legged {
        return Err(Error::InvalidInput("synthetic datasets need a legged robot".into()));
    }
    let n = (cycles * samples_per_cycle as f64).round() as usize;
    let time: Vec<f64> = (0..n).map(|k| period * k as f64 / samples_per_cycle as f64).collect();
    let cfgs = time
        .iter()
        .map(|t| configuration_at(spec, g, g.shape_at(TAU * t / period)))
        .collect::<Result<Vec<_>>>()?;
    let mut legs = Vec::new();
    for i in 0..spec.n_leg_pairs {
        legs.push(LegSeries {
            side: Side::Left,
            pair: i + 1,
            angles: cfgs.iter().map(|c| c.shoulder_left[i]).collect(),
        });
        legs.push(LegSeries {
            side: Side::Right,
            pair: i + 1,
            angles: cfgs.iter().map(|c| c.shoulder_right[i]).collect(),
        });
    }
    let body = (0..spec.n_body_joints)
        .map(|j| cfgs.iter().map(|c| c.body_joint_angles[j]).collect())
        .collect();
    Ok(TrajectoryDataset { time, legs, body })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waveform_mirror_identity() {
        for &psi in &[0.1, 1.0, 2.5, 4.0, 6.0] {
            let a = -leg_waveform(psi, 0.3, 1.0);
            let b = leg_waveform(psi - TAU * 0.3, 0.7, 1.0);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fourier_pure_cosine() {
        let time: Vec<f64> = (0..200).map(|k| k as f64 * 0.01).collect();
        let y: Vec<f64> = time.iter().map(|t| 0.4 * (TAU * t).cos()).collect();
        let f = fit_body_fourier(&y, &time, 1.0).unwrap();
        assert!((f.a1 - 0.4).abs() < 1e-12 && f.b1.abs() < 1e-12 && f.a0.abs() < 1e-12);
        assert!(f.phase.abs() < 1e-12);
    }

    #[test]
    fn fourier_dc_only_is_flagged() {
        let time: Vec<f64> = (0..100).map(|k| k as f64 * 0.02).collect();
        let f = fit_body_fourier(&vec![0.7; 100], &time, 1.0).unwrap();
        assert!(f.non_oscillatory && (f.a0 - 0.7).abs() < 1e-12);
        assert!(fit_body_fourier(&[1.0; 4], &[0.0, 1.0, 2.0, 3.0], 1.0).is_err());
    }

    #[test]
    fn zero_series_rejected() {
        let time: Vec<f64> = (0..100).map(|k| k as f64 * 0.03).collect();
        assert!(matches!(fit_leg_model(&vec![0.0; 100], &time), Err(Error::Degenerate(_))));
    }

    #[test]
    fn lag_needs_two_ipsilateral_legs() {
        assert!(estimate_lateral_phase_lag(&[(Side::Left, 1, 0.0), (Side::Right, 1, 3.0)]).is_err());
        let lag = estimate_lateral_phase_lag(&[(Side::Left, 1, 0.5), (Side::Left, 2, 0.5)]).unwrap();
        assert_eq!(lag, 0.0);
        let lag = estimate_lateral_phase_lag(&[(Side::Left, 1, 1.0), (Side::Left, 2, 1.0 - 0.2 * TAU)]).unwrap();
        assert!((lag - 0.2).abs() < 1e-12);
    }
}
