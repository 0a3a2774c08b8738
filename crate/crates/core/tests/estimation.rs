use std::f64::consts::TAU;

use gaitlab::analysis::{
    estimate_gait, fit_body_fourier, fit_leg_model, leg_waveform, synthesize_dataset, TrajectoryDataset,
};
use gaitlab::numeric::wrap_pi;
use gaitlab::{Error, GaitParams, ReferenceRobot, Undulation};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn waveform_hits_its_extremes_at_the_switches(d in 0.1f64..0.95, a in 0.01f64..1.0, psi in 0.0..TAU) {
        let v = leg_waveform(psi, d, a);
        prop_assert!(v.abs() <= a + 1e-12);
        prop_assert!((leg_waveform(0.0, d, a) - a).abs() < 1e-12);
        prop_assert!((leg_waveform(TAU * d, d, a) + a).abs() < 1e-12);
        // Continuous across both switches.
        prop_assert!((leg_waveform(TAU * d - 1e-9, d, a) - leg_waveform(TAU * d + 1e-9, d, a)).abs() < 1e-6);
        prop_assert!((leg_waveform(TAU - 1e-9, d, a) - leg_waveform(1e-9, d, a)).abs() < 1e-6);
    }

    #[test]
    fn leg_fit_recovers_synthetic_parameters(d in 0.3f64..0.9, phase in 0.0..TAU, period in 0.5f64..3.0) {
        let a = 0.35;
        let time: Vec<f64> = (0..400).map(|k| k as f64 * period / 100.0).collect();
        let series: Vec<f64> = time.iter().map(|t| leg_waveform(TAU * t / period + phase, d, a)).collect();
        let fit = fit_leg_model(&series, &time).unwrap();
        prop_assert!((fit.duty - d).abs() < 0.01);
        prop_assert!((fit.amplitude - a).abs() < 0.01);
        prop_assert!((fit.period - period).abs() < 0.01 * period);
        prop_assert!(wrap_pi(fit.phase - phase).abs() < 0.02);
    }
}

#[test]
fn body_fourier_fit_reads_offset_and_amplitude() {
    let time: Vec<f64> = (0..200).map(|k| k as f64 * 0.01).collect();
    let series: Vec<f64> = time.iter().map(|t| 0.1 + 0.4 * (TAU * t + 0.7).cos()).collect();
    let f = fit_body_fourier(&series, &time, 1.0).unwrap();
    assert!((f.amplitude() - 0.4).abs() < 1e-9);
    assert!((wrap_pi(f.offset() - 0.7)).abs() < 1e-9);
    assert!(!f.non_oscillatory);
}

#[test]
fn constant_body_series_is_flagged() {
    let time: Vec<f64> = (0..50).map(|k| k as f64 * 0.02).collect();
    let f = fit_body_fourier(&vec![0.2; 50], &time, 1.0).unwrap();
    assert!(f.non_oscillatory);
}

#[test]
fn round_trip_through_a_synthetic_dataset() {
    let spec = ReferenceRobot::Myriapod.spec();
    let g = GaitParams::for_robot(&spec, 0.7, 0.15, 2.5, Undulation::Coordinated);
    let data = synthesize_dataset(&spec, &g, 0.8, 3.0, 120).unwrap();
    let e = estimate_gait(&data).unwrap();
    assert!((e.duty - 0.7).abs() < 0.02);
    assert!((e.phase_lag - 0.15).abs() < 0.02);
    assert!((e.period - 0.8).abs() < 0.01);
    assert!(wrap_pi(e.phi_bc.unwrap() - (TAU - 2.5)).abs() < 0.02);
    assert_eq!(e.legs.len(), 16);
}

#[test]
fn straight_backed_gait_has_no_body_phase() {
    let spec = ReferenceRobot::Hexapod.spec();
    let g = GaitParams::for_robot(&spec, 0.5, 0.5, 0.0, Undulation::FixedStraight);
    let e = estimate_gait(&synthesize_dataset(&spec, &g, 1.0, 2.0, 100).unwrap()).unwrap();
    assert!(e.phi_bc.is_none());
    assert!((e.phase_lag - 0.5).abs() < 0.02);
}

#[test]
fn malformed_datasets_are_rejected() {
    let spec = ReferenceRobot::Quadruped.spec();
    let g = GaitParams::for_robot(&spec, 0.6, 0.3, 0.0, Undulation::Coordinated);
    let mut data = synthesize_dataset(&spec, &g, 1.0, 2.0, 50).unwrap();
    data.legs[1].angles.pop();
    assert!(matches!(estimate_gait(&data), Err(Error::DimensionMismatch(_))));

    let mut data = synthesize_dataset(&spec, &g, 1.0, 2.0, 50).unwrap();
    data.time[3] = data.time[2];
    assert!(matches!(estimate_gait(&data), Err(Error::InvalidInput(_))));

    assert!(estimate_gait(&TrajectoryDataset::default()).is_err());
    assert!(synthesize_dataset(&ReferenceRobot::Sidewinder.spec(), &g, 1.0, 1.0, 50).is_err());
}
