//! One function per subcommand. Each writes its files through `OutputDir`
//! and returns the per-item failures to list in the manifest.

use std::f64::consts::TAU;
use std::path::Path;

use gaitlab::analysis::{estimate_gait, LegSeries, TrajectoryDataset};
use gaitlab::contact::local_connection_at;
use gaitlab::gait::{contact_pattern, hildebrand_region};
use gaitlab::geomech::{
    compute_height_field, optimize_phase_offset, phase_relation_prediction, stokes_displacement, ConnectionKind,
    GaitPath, HeightFieldOptions, OptimizerOptions,
};
use gaitlab::numeric::wrap_tau;
use gaitlab::simulate::{integrate_from, SimOptions};
use gaitlab::stability::{classify_cycle, stability_metric};
use gaitlab::sweep::{sweep, SweepMode, SweepOptions};
use gaitlab::{GaitParams, Mode, Pose2, RobotSpec, ShapePoint, ShapeVelocity, Side, Undulation};
use serde_json::json;

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::output::{num, OutputDir};
use crate::svg::{gait_diagram, Heatmap};

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub spec: RobotSpec,
    pub gait: GaitParams,
    pub out: OutputDir,
    pub failures: Vec<String>,
}

impl Context<'_> {
    fn wants(&self, f: Format) -> bool {
        self.cfg.output.wants(f)
    }

    fn optimizer(&self) -> OptimizerOptions {
        OptimizerOptions {
            scan_points: self.cfg.numerics.scan_points,
            steps_per_cycle: self.cfg.numerics.steps_per_cycle,
            ..OptimizerOptions::default()
        }
    }
}

fn deg(x: f64) -> f64 {
    x.to_degrees()
}

fn pose_json(p: &Pose2) -> serde_json::Value {
    json!({ "x_bl": p.x, "y_bl": p.y, "yaw_deg": deg(p.yaw) })
}

/// Leg labels and contact flags over one cycle, head to tail, left first.
fn contact_rows(spec: &RobotSpec, g: &GaitParams, samples: usize) -> Vec<(String, Vec<bool>)> {
    let phases: Vec<f64> = (0..samples).map(|k| TAU * (k as f64 + 0.5) / samples as f64).collect();
    let patterns: Vec<_> = phases.iter().map(|&p| contact_pattern(spec, g, p)).collect();
    let mut rows = Vec::new();
    match spec.mode {
        Mode::Legged => {
            for (side, tag) in [(Side::Left, "L"), (Side::Right, "R")] {
                for i in 0..spec.n_leg_pairs {
                    let flags = patterns
                        .iter()
                        .map(|p| if side == Side::Left { p.left[i] } else { p.right[i] })
                        .collect();
                    rows.push((format!("{tag}{}", i + 1), flags));
                }
            }
        }
        Mode::Sidewinder => {
            for i in 0..spec.n_links() {
                rows.push((format!("link{}", i + 1), patterns.iter().map(|p| p.links[i]).collect()));
            }
        }
    }
    rows
}

pub fn prescribe(ctx: &mut Context) -> Result<(), CliError> {
    let n = ctx.cfg.numerics.diagram_samples;
    let rows = contact_rows(&ctx.spec, &ctx.gait, n);
    if ctx.wants(Format::Csv) {
        let mut header = vec!["leg".to_string()];
        header.extend((0..n).map(|k| format!("phase_{:.3}_deg", 360.0 * (k as f64 + 0.5) / n as f64)));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let body: Vec<Vec<String>> = rows
            .iter()
            .map(|(label, flags)| {
                std::iter::once(label.clone())
                    .chain(flags.iter().map(|&c| if c { "1" } else { "0" }.to_string()))
                    .collect()
            })
            .collect();
        ctx.out.write_csv("contacts.csv", &header, &body)?;
    }
    if ctx.wants(Format::Svg) {
        let title = format!(
            "{}: D = {:.3}, lateral phase lag = {:.3}",
            ctx.spec.name, ctx.gait.duty, ctx.gait.phase_lag
        );
        ctx.out.write("gait_diagram.svg", gait_diagram(&title, &rows).as_bytes())?;
    }
    if ctx.wants(Format::Json) {
        let (pace, sequence) = hildebrand_region(ctx.gait.duty, ctx.gait.phase_lag);
        let duty_measured: Vec<f64> = rows
            .iter()
            .map(|(_, f)| f.iter().filter(|&&c| c).count() as f64 / n as f64)
            .collect();
        ctx.out.write_json(
            "prescription.json",
            &json!({
                "robot": ctx.spec.name,
                "duty": ctx.gait.duty,
                "phase_lag": ctx.gait.phase_lag,
                "pace": pace,
                "sequence": sequence,
                "legs": rows.iter().map(|r| r.0.clone()).collect::<Vec<_>>(),
                "stance_fraction": duty_measured,
            }),
        )?;
    }
    Ok(())
}

pub fn connection(ctx: &mut Context, phi_c_deg: f64, phi_b_deg: f64) -> Result<(), CliError> {
    let p = ShapePoint::new(phi_c_deg.to_radians(), phi_b_deg.to_radians());
    let g = GaitParams {
        undulation: Undulation::Coordinated,
        ..ctx.gait
    };
    let lc = local_connection_at(&ctx.spec, &g, p, Some(ShapeVelocity::ALONG_PATH))?;
    let dir = lc.directional.expect("direction requested");
    let sum = lc.apply(ShapeVelocity::ALONG_PATH);
    let rows = |m: &gaitlab::contact::LocalConnection| -> Vec<[f64; 2]> {
        (0..3).map(|r| [m.a[(r, 0)], m.a[(r, 1)]]).collect()
    };
    let discrepancy = (dir.x - sum.x).hypot(dir.y - sum.y).max((dir.theta - sum.theta).abs());
    if ctx.wants(Format::Json) {
        ctx.out.write_json(
            "connection.json",
            &json!({
                "phi_c_deg": phi_c_deg,
                "phi_b_deg": phi_b_deg,
                "rows": ["xi_x (BL/rad)", "xi_y (BL/rad)", "xi_theta (rad/rad)"],
                "columns": ["contact phase rate", "body phase rate"],
                "columnwise": rows(&lc),
                "directional_along_path": { "xi_x": dir.x, "xi_y": dir.y, "xi_theta": dir.theta },
                "columnwise_sum_along_path": { "xi_x": sum.x, "xi_y": sum.y, "xi_theta": sum.theta },
                "linearization_discrepancy": discrepancy,
            }),
        )?;
    }
    if ctx.wants(Format::Csv) {
        let body: Vec<Vec<String>> = ["xi_x_bl_per_rad", "xi_y_bl_per_rad", "xi_theta_rad_per_rad"]
            .iter()
            .enumerate()
            .map(|(r, name)| vec![name.to_string(), num(Some(lc.a[(r, 0)]), 12), num(Some(lc.a[(r, 1)]), 12)])
            .collect();
        ctx.out.write_csv("connection.csv", &["row", "contact_column", "body_column"], &body)?;
    }
    Ok(())
}

pub fn heightfield(ctx: &mut Context, connection: ConnectionKind) -> Result<(), CliError> {
    let g = GaitParams {
        undulation: Undulation::Coordinated,
        ..ctx.gait
    };
    let opts = HeightFieldOptions {
        resolution: ctx.cfg.numerics.resolution,
        connection,
    };
    let h = compute_height_field(&ctx.spec, &g, &opts)?;
    for (pc, pb) in &h.failed {
        ctx.failures.push(format!(
            "balance solve failed at phi_c = {:.3} deg, phi_b = {:.3} deg; value filled from neighbours",
            deg(*pc),
            deg(*pb)
        ));
    }
    let r = h.resolution;
    let phases: Vec<f64> = (0..r).map(|k| deg(h.phase(k))).collect();
    let names = [
        ("x", "curl_x_bl_per_rad2"),
        ("y", "curl_y_bl_per_rad2"),
        ("theta", "curl_theta_rad_per_rad2"),
    ];
    for (row, (tag, unit)) in names.iter().enumerate() {
        if ctx.wants(Format::Csv) {
            let mut body = Vec::with_capacity(r * r);
            for ib in 0..r {
                for ic in 0..r {
                    body.push(vec![
                        num(Some(phases[ic]), 6),
                        num(Some(phases[ib]), 6),
                        num(Some(h.curl[row][h.index(ic, ib)]), 12),
                    ]);
                }
            }
            ctx.out
                .write_csv(&format!("heightfield_{tag}.csv"), &["phi_c_deg", "phi_b_deg", unit], &body)?;
        }
        if ctx.wants(Format::Svg) {
            let values: Vec<Option<f64>> = (0..r * r).map(|k| Some(h.curl[row][k])).collect();
            let svg = Heatmap {
                title: &format!("{} height function, {tag} row", ctx.spec.name),
                x_label: "contact phase (deg)",
                y_label: "body phase (deg)",
                value_label: unit,
                xs: &phases,
                ys: &phases,
                values: &values,
                range: None,
            }
            .render();
            ctx.out.write(&format!("heightfield_{tag}.svg"), svg.as_bytes())?;
        }
    }
    if ctx.wants(Format::Json) {
        let est = stokes_displacement(&h, &GaitPath::new(ctx.gait.phi0))?;
        ctx.out.write_json(
            "heightfield.json",
            &json!({
                "resolution": r,
                "connection": connection,
                "phi0_deg": deg(ctx.gait.phi0),
                "stokes_estimate": { "x_bl": est[0], "y_bl": est[1], "yaw_deg": deg(est[2]) },
                "failed_points": h.failed.len(),
                "unsupported_points": h.unsupported,
            }),
        )?;
    }
    Ok(())
}

pub fn optimize(ctx: &mut Context) -> Result<f64, CliError> {
    let g = GaitParams {
        undulation: Undulation::Coordinated,
        ..ctx.gait
    };
    let opt = optimize_phase_offset(&ctx.spec, &g, &ctx.optimizer())?;
    if ctx.wants(Format::Json) {
        ctx.out.write_json(
            "optimum.json",
            &json!({
                "duty": g.duty,
                "phase_lag": g.phase_lag,
                "phi0_deg": deg(opt.phi0),
                "phi_bc_deg": deg(opt.phi_bc()),
                "predicted_phi_bc_deg": deg(phase_relation_prediction(g.phase_lag)),
                "forward_bl_per_cycle": opt.forward,
                "displacement": pose_json(&opt.displacement),
            }),
        )?;
    }
    Ok(opt.phi0)
}

pub fn simulate(ctx: &mut Context, optimize_first: bool) -> Result<(), CliError> {
    let mut g = ctx.gait;
    if optimize_first {
        g.undulation = Undulation::Coordinated;
        g.phi0 = optimize(ctx)?;
    }
    let opts = SimOptions {
        cycles: ctx.cfg.numerics.cycles,
        steps_per_cycle: ctx.cfg.numerics.steps_per_cycle,
        ..SimOptions::default()
    };
    let traj = integrate_from(&ctx.spec, &g, &opts, Pose2::IDENTITY)?;
    if let Some(e) = &traj.failure {
        ctx.failures.push(e.to_string());
    }
    if ctx.wants(Format::Csv) {
        let body: Vec<Vec<String>> = traj
            .samples
            .iter()
            .map(|s| {
                vec![
                    num(Some(s.t / opts.cycle_duration), 9),
                    num(Some(s.pose.x), 12),
                    num(Some(s.pose.y), 12),
                    num(Some(deg(s.pose.yaw)), 9),
                ]
            })
            .collect();
        ctx.out
            .write_csv("trajectory.csv", &["t_cycles", "x_bl", "y_bl", "yaw_deg"], &body)?;
    }
    if ctx.wants(Format::Json) {
        let per_cycle = traj.per_cycle;
        ctx.out.write_json(
            "summary.json",
            &json!({
                "robot": ctx.spec.name,
                "duty": g.duty,
                "phase_lag": g.phase_lag,
                "phi0_deg": deg(g.phi0),
                "undulation": g.undulation,
                "cycles": opts.cycles,
                "steps_per_cycle": opts.steps_per_cycle,
                "per_cycle": per_cycle.as_ref().map(pose_json),
                "speed_blc": per_cycle.map(|d| d.x.hypot(d.y)),
                "final_pose": pose_json(&traj.final_pose()),
                "unsupported_intervals_deg": traj.unsupported.iter().map(|(a, b)| [deg(*a), deg(*b)]).collect::<Vec<_>>(),
                "failure": traj.failure.as_ref().map(|e| e.to_string()),
            }),
        )?;
    }
    Ok(())
}

pub fn stability(ctx: &mut Context) -> Result<(), CliError> {
    let n = ctx.cfg.numerics.stability_samples;
    let classes = classify_cycle(&ctx.spec, &ctx.gait, n)?;
    let metric = stability_metric(&ctx.spec, &ctx.gait, n)?;
    if ctx.wants(Format::Csv) {
        let body: Vec<Vec<String>> = classes
            .iter()
            .map(|(p, c)| vec![num(Some(deg(*p)), 6), c.label().to_string()])
            .collect();
        ctx.out.write_csv("stability.csv", &["phi_c_deg", "class"], &body)?;
    }
    if ctx.wants(Format::Json) {
        let count = |label: &str| classes.iter().filter(|(_, c)| c.label() == label).count();
        ctx.out.write_json(
            "stability.json",
            &json!({
                "robot": ctx.spec.name,
                "duty": ctx.gait.duty,
                "phase_lag": ctx.gait.phase_lag,
                "samples": n,
                "metric": metric,
                "statically_stable": count("statically_stable"),
                "statically_unstable": count("statically_unstable"),
                "unstable": count("unstable"),
            }),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepKind {
    Fixed,
    Coordinated,
    Both,
}

pub fn run_sweep(ctx: &mut Context, kind: SweepKind) -> Result<(), CliError> {
    let duties = ctx.cfg.duty_grid()?;
    let lags = ctx.cfg.phase_lag_grid()?;
    let opts = SweepOptions {
        mode: if kind == SweepKind::Fixed {
            SweepMode::FixedStraight
        } else {
            SweepMode::Coordinated
        },
        steps_per_cycle: ctx.cfg.numerics.steps_per_cycle,
        stability_samples: ctx.cfg.numerics.stability_samples,
        optimizer: ctx.optimizer(),
        workers: None,
    };
    let res = sweep(&ctx.spec, &duties, &lags, &opts)?;
    for c in res.failures() {
        for e in &c.errors {
            ctx.failures.push(format!("D = {}, phase lag = {}: {e}", c.duty, c.phase_lag));
        }
    }

    struct Surface {
        name: &'static str,
        unit: &'static str,
        title: &'static str,
        range: Option<(f64, f64)>,
        values: Vec<Option<f64>>,
    }
    let mut surfaces = vec![];
    if kind != SweepKind::Coordinated {
        surfaces.push(Surface {
            name: "stability",
            unit: "stable_fraction",
            title: "static stability",
            range: Some((0.0, 1.0)),
            values: res.cells.iter().map(|c| c.stability).collect(),
        });
        surfaces.push(Surface {
            name: "fixed_blc",
            unit: "blc_bl_per_cycle",
            title: "speed, fixed straight back",
            range: None,
            values: res.cells.iter().map(|c| c.fixed_blc).collect(),
        });
    }
    if kind != SweepKind::Fixed {
        surfaces.push(Surface {
            name: "coordinated_blc",
            unit: "blc_bl_per_cycle",
            title: "speed, coordinated undulation",
            range: None,
            values: res.cells.iter().map(|c| c.coordinated.as_ref().map(|o| o.blc)).collect(),
        });
    }
    // Shared speed scale so fixed and coordinated panels compare directly.
    let speeds = surfaces
        .iter()
        .filter(|s| s.unit == "blc_bl_per_cycle")
        .flat_map(|s| s.values.iter().flatten().copied());
    let speed_max = speeds.fold(0.0_f64, f64::max);

    for s in &surfaces {
        if ctx.wants(Format::Csv) {
            let body: Vec<Vec<String>> = res
                .cells
                .iter()
                .zip(&s.values)
                .map(|(c, v)| {
                    let mut row = vec![num(Some(c.duty), 6), num(Some(c.phase_lag), 6), num(*v, 9)];
                    if s.name == "coordinated_blc" {
                        let phi0 = c.coordinated.as_ref().map(|o| o.phi0);
                        row.push(num(phi0.map(deg), 6));
                        row.push(num(phi0.map(|p| deg(wrap_tau(-p))), 6));
                    }
                    row
                })
                .collect();
            let mut header = vec!["duty", "phase_lag", s.unit];
            if s.name == "coordinated_blc" {
                header.extend(["phi0_deg", "phi_bc_deg"]);
            }
            ctx.out.write_csv(&format!("{}.csv", s.name), &header, &body)?;
        }
        if ctx.wants(Format::Svg) {
            let svg = Heatmap {
                title: &format!("{}: {}", ctx.spec.name, s.title),
                x_label: "lateral phase lag",
                y_label: "duty factor",
                value_label: s.unit,
                xs: &lags,
                ys: &duties,
                values: &s.values,
                range: s.range.or(Some((0.0, speed_max.max(1e-12)))),
            }
            .render();
            ctx.out.write(&format!("{}.svg", s.name), svg.as_bytes())?;
        }
    }
    if ctx.wants(Format::Json) {
        ctx.out.write_json("sweep.json", &res)?;
    }
    Ok(())
}

/// Read an angle CSV with a `time` column and `leg_L<i>_deg`,
/// `leg_R<i>_deg`, `body_<j>_deg` columns.
pub fn read_dataset(path: &Path) -> Result<TrajectoryDataset, CliError> {
    let csv_err = |message: String| CliError::Csv {
        path: path.display().to_string(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(e.to_string()))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    enum Col {
        Time,
        Leg(Side, usize),
        Body(usize),
    }
    let parse_index = |s: &str, col: &str| -> Result<usize, CliError> {
        s.parse::<usize>()
            .ok()
            .filter(|&i| i >= 1)
            .ok_or_else(|| csv_err(format!("column `{col}`: index must be a positive integer")))
    };
    let mut cols = Vec::with_capacity(header.len());
    for h in &header {
        let col = if h == "time" {
            Col::Time
        } else if let Some(rest) = h.strip_prefix("leg_").and_then(|r| r.strip_suffix("_deg")) {
            let (side, idx) = match rest.split_at_checked(1) {
                Some(("L", i)) => (Side::Left, i),
                Some(("R", i)) => (Side::Right, i),
                _ => return Err(csv_err(format!("column `{h}`: expected leg_L<i>_deg or leg_R<i>_deg"))),
            };
            Col::Leg(side, parse_index(idx, h)?)
        } else if let Some(idx) = h.strip_prefix("body_").and_then(|r| r.strip_suffix("_deg")) {
            Col::Body(parse_index(idx, h)?)
        } else {
            return Err(csv_err(format!(
                "unknown column `{h}`; expected time, leg_L<i>_deg, leg_R<i>_deg or body_<j>_deg"
            )));
        };
        cols.push(col);
    }
    if !cols.iter().any(|c| matches!(c, Col::Time)) {
        return Err(csv_err("missing `time` column".into()));
    }
    let mut time = vec![];
    let mut legs: Vec<LegSeries> = vec![];
    let mut body: Vec<(usize, Vec<f64>)> = vec![];
    for (k, c) in cols.iter().enumerate() {
        match c {
            Col::Leg(side, i) => {
                if legs.iter().any(|l| l.side == *side && l.pair == *i) {
                    return Err(csv_err(format!("duplicate column `{}`", header[k])));
                }
                legs.push(LegSeries {
                    side: *side,
                    pair: *i,
                    angles: vec![],
                })
            }
            Col::Body(j) => {
                if body.iter().any(|b| b.0 == *j) {
                    return Err(csv_err(format!("duplicate column `{}`", header[k])));
                }
                body.push((*j, vec![]))
            }
            Col::Time => {}
        }
    }
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(e.to_string()))?;
        let (mut li, mut bi) = (0, 0);
        for (k, c) in cols.iter().enumerate() {
            let field = rec.get(k).unwrap_or("").trim();
            let v: f64 = field
                .parse()
                .map_err(|_| csv_err(format!("row {}, column `{}`: `{field}` is not a number", line + 2, header[k])))?;
            match c {
                Col::Time => time.push(v),
                Col::Leg(..) => {
                    legs[li].angles.push(v.to_radians());
                    li += 1;
                }
                Col::Body(_) => {
                    body[bi].1.push(v.to_radians());
                    bi += 1;
                }
            }
        }
    }
    legs.sort_by_key(|l| (l.side, l.pair));
    body.sort_by_key(|b| b.0);
    for (k, (j, _)) in body.iter().enumerate() {
        if *j != k + 1 {
            return Err(csv_err(format!("body joints must be numbered 1..n without gaps, found body_{j}_deg")));
        }
    }
    Ok(TrajectoryDataset {
        time,
        legs,
        body: body.into_iter().map(|b| b.1).collect(),
    })
}

pub fn estimate(out: &mut OutputDir, input: &Path) -> Result<(), CliError> {
    let data = read_dataset(input)?;
    let est = estimate_gait(&data)?;
    let legs: Vec<_> = est
        .legs
        .iter()
        .map(|l| {
            json!({
                "leg": format!("{}{}", if l.side == Side::Left { "L" } else { "R" }, l.pair),
                "duty": l.fit.duty,
                "amplitude_deg": deg(l.fit.amplitude),
                "phase_deg": deg(l.fit.phase),
                "period": l.fit.period,
                "residual_rms_deg": deg(l.fit.residual),
            })
        })
        .collect();
    let body: Vec<_> = est
        .body
        .iter()
        .enumerate()
        .map(|(j, b)| {
            json!({
                "joint": j + 1,
                "amplitude_deg": deg(b.amplitude()),
                "phase_deg": deg(b.phase),
                "non_oscillatory": b.non_oscillatory,
            })
        })
        .collect();
    out.write_json(
        "estimate.json",
        &json!({
            "duty": est.duty,
            "phase_lag": est.phase_lag,
            "amp_theta_deg": deg(est.amp_theta),
            "period": est.period,
            "contact_phase_deg": deg(est.contact_phase),
            "body_phase_deg": est.body_phase.map(deg),
            "phi_bc_deg": est.phi_bc.map(deg),
            "predicted_phi_bc_deg": deg(phase_relation_prediction(est.phase_lag)),
            "legs": legs,
            "body": body,
        }),
    )
}
