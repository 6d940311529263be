use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hconvex::{ConeKind, HVec, Point3, Tolerances};
use hconvex_cli::{run, Command, ExportKind, ExportOptions, RunConfig, EXIT_ERROR};

#[derive(Parser)]
#[command(
    name = "hconvex",
    version,
    about = "Convexity checks in the Heisenberg group"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Gallery name, inline JSON descriptor, or descriptor file.
    #[arg(long, global = true)]
    set: Option<String>,
    /// JSON object of set parameters, e.g. '{"r": 2.0}'.
    #[arg(long, global = true)]
    params: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Pair budget for falsifiers.
    #[arg(long, global = true, default_value_t = 10_000)]
    budget: usize,
    /// Sample count for axiom, radial, and closed-form checks.
    #[arg(long, global = true, default_value_t = 4096)]
    samples: usize,
    #[arg(long, global = true, default_value_t = Tolerances::default().eps_geom)]
    eps_geom: f64,
    #[arg(long, global = true, default_value_t = Tolerances::default().eps_eq)]
    eps_eq: f64,
    #[arg(long, global = true, default_value_t = Tolerances::default().max_iter)]
    max_iter: usize,
    /// Output directory for reports and artifacts.
    #[arg(long, global = true, default_value = "hconvex-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check assumptions a/b/c on a set.
    Axioms,
    /// Build and validate the cone function of a set.
    Cone {
        #[arg(long)]
        compare_closed_form: bool,
        #[arg(long, value_enum, default_value_t = KindArg::Heisenberg)]
        cone_kind: KindArg,
    },
    /// Search for a violation of condition (C_H).
    Ch,
    /// Necessary conditions for radial sets.
    Radial,
    /// Run the gallery reproduction suite.
    Gallery,
    /// Export a level-set mesh or a curve.
    Export {
        #[arg(long, value_enum, default_value_t = ExportArg::Mesh)]
        kind: ExportArg,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[arg(long, default_value_t = 201)]
        curve_samples: usize,
        /// Curve start `x,y,t`.
        #[arg(long, value_parser = parse_point)]
        xi0: Option<Point3>,
        /// Horizontal step `a,b`.
        #[arg(long, value_parser = parse_hvec)]
        v: Option<HVec>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Heisenberg,
    Euclidean,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportArg {
    Mesh,
    Curve,
}

fn parse_reals<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    v.try_into()
        .map_err(|_| format!("expected {N} comma-separated numbers"))
}

fn parse_point(s: &str) -> Result<Point3, String> {
    parse_reals::<3>(s).map(Point3::from)
}

fn parse_hvec(s: &str) -> Result<HVec, String> {
    parse_reals::<2>(s).map(|[a, b]| HVec::new(a, b))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(EXIT_ERROR as u8),
            };
        }
    };
    let c = cli.common;
    let command = match &cli.command {
        Cmd::Axioms => Command::Axioms,
        Cmd::Cone { .. } => Command::Cone,
        Cmd::Ch => Command::Ch,
        Cmd::Radial => Command::Radial,
        Cmd::Gallery => Command::Gallery,
        Cmd::Export { .. } => Command::Export,
    };
    let mut cfg = RunConfig::new(command, c.out);
    cfg.set = c.set;
    cfg.params = c.params;
    cfg.seed = c.seed;
    cfg.budget = c.budget;
    cfg.samples = c.samples;
    cfg.tolerances = Tolerances {
        eps_geom: c.eps_geom,
        eps_eq: c.eps_eq,
        max_iter: c.max_iter,
    };
    match cli.command {
        Cmd::Cone {
            compare_closed_form,
            cone_kind,
        } => {
            cfg.compare_closed_form = compare_closed_form;
            cfg.cone_kind = match cone_kind {
                KindArg::Heisenberg => ConeKind::Heisenberg,
                KindArg::Euclidean => ConeKind::Euclidean,
            };
        }
        Cmd::Export {
            kind,
            tau,
            resolution,
            curve_samples,
            xi0,
            v,
        } => {
            cfg.export = ExportOptions {
                kind: match kind {
                    ExportArg::Mesh => ExportKind::Mesh,
                    ExportArg::Curve => ExportKind::Curve,
                },
                tau,
                resolution,
                curve_samples,
                xi0,
                v,
            };
        }
        _ => {}
    }
    ExitCode::from(run(&cfg) as u8)
}
