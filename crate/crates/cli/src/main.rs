//! `gaitlab` command-line front end.
//!
//! Every subcommand reads an optional JSON run configuration, applies flag
//! overrides, writes its outputs atomically into the output directory and
//! finishes with `manifest.json` listing each file with its SHA-256.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gaitlab::geomech::ConnectionKind;
use gaitlab::Undulation;

use crate::commands::{Context, SweepKind};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Parser)]
#[command(name = "gaitlab", version, about = "Gait design for serially connected legged and limbless robots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reference robot (quadruped, hexapod, myriapod, sidewinder) or robot JSON file.
    #[arg(long)]
    robot: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    duty: Option<f64>,
    /// Lateral phase lag, in cycles.
    #[arg(long)]
    phaselag: Option<f64>,
    /// Body-leg phase offset in degrees.
    #[arg(long, allow_hyphen_values = true)]
    phi0: Option<f64>,
    #[arg(long, value_enum)]
    undulation: Option<UndulationArg>,
    #[arg(long)]
    steps: Option<usize>,
    /// Worker threads (default: GAITLAB_WORKERS or all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum UndulationArg {
    Fixed,
    Coordinated,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ConnectionArg {
    Columnwise,
    PathAligned,
}

#[derive(Subcommand)]
enum Command {
    /// Contact diagram (CSV) and gait diagram (SVG).
    Prescribe {
        #[command(flatten)]
        common: Common,
        /// Phase samples per cycle.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Local connection at one shape point.
    Connection {
        #[command(flatten)]
        common: Common,
        /// Contact phase in degrees.
        #[arg(long, allow_hyphen_values = true)]
        phic: f64,
        /// Body phase in degrees.
        #[arg(long, allow_hyphen_values = true)]
        phib: f64,
    },
    /// Height functions over the shape torus and the Stokes estimate at phi0.
    Heightfield {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long, value_enum)]
        connection: Option<ConnectionArg>,
    },
    /// Integrate the gait and write the trajectory.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cycles: Option<usize>,
        /// Optimize phi0 first (implies coordinated undulation).
        #[arg(long, conflicts_with = "phi0")]
        optimize: bool,
    },
    /// Optimal body-leg phase offset.
    Optimize {
        #[command(flatten)]
        common: Common,
    },
    /// Per-phase stability classes and the stability metric.
    Stability {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Stability and speed surfaces over a (D, lateral phase lag) grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Duty grid, `start:step:end` or a comma list.
        #[arg(long = "D")]
        duty_grid: Option<String>,
        /// Lateral phase lag grid, `start:step:end` or a comma list.
        #[arg(long)]
        philat: Option<String>,
        #[arg(long, value_enum, default_value = "both")]
        mode: SweepKind,
    },
    /// Fit gait parameters to measured joint angles.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// CSV with `time`, `leg_L<i>_deg`, `leg_R<i>_deg`, `body_<j>_deg` columns.
        #[arg(long)]
        input: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Prescribe { .. } => "prescribe",
            Command::Connection { .. } => "connection",
            Command::Heightfield { .. } => "heightfield",
            Command::Simulate { .. } => "simulate",
            Command::Optimize { .. } => "optimize",
            Command::Stability { .. } => "stability",
            Command::Sweep { .. } => "sweep",
            Command::Estimate { .. } => "estimate",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Prescribe { common, .. }
            | Command::Connection { common, .. }
            | Command::Heightfield { common, .. }
            | Command::Simulate { common, .. }
            | Command::Optimize { common }
            | Command::Stability { common, .. }
            | Command::Sweep { common, .. }
            | Command::Estimate { common, .. } => common,
        }
    }
}

fn build_config(cmd: &Command) -> Result<RunConfig, CliError> {
    let c = cmd.common();
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(r) = &c.robot {
        cfg.robot = Some(serde_json::Value::String(r.clone()));
    }
    if let Some(o) = &c.out {
        cfg.output.dir = o.clone();
    }
    let g = &mut cfg.gait;
    g.duty = c.duty.or(g.duty);
    g.phase_lag = c.phaselag.or(g.phase_lag);
    g.phi0_deg = c.phi0.or(g.phi0_deg);
    if let Some(u) = c.undulation {
        g.undulation = Some(match u {
            UndulationArg::Fixed => Undulation::FixedStraight,
            UndulationArg::Coordinated => Undulation::Coordinated,
        });
    }
    let n = &mut cfg.numerics;
    if let Some(s) = c.steps {
        n.steps_per_cycle = s;
    }
    match cmd {
        Command::Prescribe { samples: Some(s), .. } => n.diagram_samples = *s,
        Command::Stability { samples: Some(s), .. } => n.stability_samples = *s,
        Command::Simulate { cycles: Some(k), .. } => n.cycles = *k,
        Command::Heightfield {
            resolution, connection, ..
        } => {
            if let Some(r) = resolution {
                n.resolution = *r;
            }
            if let Some(k) = connection {
                n.connection = match k {
                    ConnectionArg::Columnwise => ConnectionKind::Columnwise,
                    ConnectionArg::PathAligned => ConnectionKind::PathAligned,
                };
            }
        }
        Command::Sweep { duty_grid, philat, .. } => {
            if let Some(d) = duty_grid {
                n.duty_grid = d.clone();
            }
            if let Some(l) = philat {
                n.phase_lag_grid = l.clone();
            }
        }
        _ => {}
    }
    cfg.validate_numerics()?;
    Ok(cfg)
}

fn worker_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("GAITLAB_WORKERS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .map(Some)
            .ok_or_else(|| CliError::config("GAITLAB_WORKERS", format!("`{v}` is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cmd = &cli.command;
    if let Some(n) = worker_count(cmd.common().workers)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config("workers", e.to_string()))?;
    }
    let cfg = build_config(cmd)?;
    // The manifest records the configuration as resolved, minus worker
    // count, which never changes results.
    let resolved = serde_json::to_value(&cfg).expect("config serializes");

    if let Command::Estimate { input, .. } = cmd {
        let mut out = OutputDir::create(&cfg.output.dir)?;
        commands::estimate(&mut out, input)?;
        let manifest = out.finish(cmd.name(), &resolved, &[])?;
        eprintln!("wrote {}", manifest.display());
        return Ok(());
    }

    let spec = cfg.resolve_robot()?;
    let gait = cfg.resolve_gait(&spec)?;
    let mut ctx = Context {
        cfg: &cfg,
        spec,
        gait,
        out: OutputDir::create(&cfg.output.dir)?,
        failures: vec![],
    };
    match cmd {
        Command::Prescribe { .. } => commands::prescribe(&mut ctx)?,
        Command::Connection { phic, phib, .. } => commands::connection(&mut ctx, *phic, *phib)?,
        Command::Heightfield { .. } => commands::heightfield(&mut ctx, cfg.numerics.connection)?,
        Command::Simulate { optimize, .. } => commands::simulate(&mut ctx, *optimize)?,
        Command::Optimize { .. } => {
            commands::optimize(&mut ctx)?;
        }
        Command::Stability { .. } => commands::stability(&mut ctx)?,
        Command::Sweep { mode, .. } => commands::run_sweep(&mut ctx, *mode)?,
        Command::Estimate { .. } => unreachable!("handled above"),
    }
    for f in &ctx.failures {
        eprintln!("warning: {f}");
    }
    let manifest = ctx.out.finish(cmd.name(), &resolved, &ctx.failures)?;
    eprintln!("wrote {}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
