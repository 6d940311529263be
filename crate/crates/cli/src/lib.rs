//! Command-line front end for `hconvex`.
//!
//! Sets are given as a gallery name plus a JSON parameter object, as an
//! inline JSON descriptor, or as a path to one:
//!
//! ```json
//! {"set": "cylinder", "params": {"radius": 1.0, "height": 1.0}}
//! {"set": "radial_custom", "params": {"vertices": [[0, -1], [1, -1], [1, 1], [0, 1]]}}
//! ```
//!
//! `radial_custom` vertices are `(r, t)` pairs of a closed polygon in the
//! half-plane `r ≥ 0`, with even-odd membership.
//!
//! Every command writes a JSON report into the output directory. Exit codes:
//! [`EXIT_PASS`] when every check passed or no witness was found,
//! [`EXIT_WITNESS`] when a witness was found, [`EXIT_ERROR`] on usage or
//! precondition errors.

pub mod export;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use hconvex::ch::DEFAULT_CURVE_SAMPLES;
use hconvex::cone::VERDICT_CANDIDATE;
use hconvex::{
    check_axioms, compare_closed_form, cone_validate, falsify_ch, radial_necessary, BBox,
    ConeFunction, ConeKind, HVec, ParamMap, Point3, SetDescriptor, SetOracle, Tolerances,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_WITNESS: i32 = 2;

/// Largest accepted deviation from a closed-form cone.
pub const CLOSED_FORM_TOL: f64 = 1e-6;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] hconvex::Error),
    #[error("malformed JSON in {what}: {source}")]
    Json {
        what: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Axioms,
    Cone,
    Ch,
    Radial,
    Gallery,
    Export,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Axioms => "axioms",
            Self::Cone => "cone",
            Self::Ch => "ch",
            Self::Radial => "radial",
            Self::Gallery => "gallery",
            Self::Export => "export",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportKind {
    Mesh,
    Curve,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportOptions {
    pub kind: ExportKind,
    pub tau: f64,
    pub resolution: usize,
    pub curve_samples: usize,
    /// Explicit curve start; without it the curve of a (C_H) witness is
    /// exported.
    pub xi0: Option<Point3>,
    pub v: Option<HVec>,
}

impl Default for ExportOptions {
    fn default() -> Self {
        Self {
            kind: ExportKind::Mesh,
            tau: 1.0,
            resolution: 64,
            curve_samples: 201,
            xi0: None,
            v: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Gallery name, inline JSON descriptor, or path to a descriptor file.
    pub set: Option<String>,
    /// JSON parameter object used with a gallery name.
    pub params: Option<String>,
    pub seed: u64,
    pub budget: usize,
    pub samples: usize,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
    pub compare_closed_form: bool,
    pub cone_kind: ConeKind,
    pub export: ExportOptions,
}

impl RunConfig {
    pub fn new(command: Command, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            command,
            set: None,
            params: None,
            seed: 0,
            budget: 10_000,
            samples: 4096,
            tolerances: Tolerances::default(),
            output_dir: output_dir.into(),
            compare_closed_form: false,
            cone_kind: ConeKind::Heisenberg,
            export: ExportOptions::default(),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.budget == 0 || self.samples == 0 {
            return Err(CliError::Usage(
                "budget and samples must be at least 1".into(),
            ));
        }
        self.tolerances.validate()?;
        Ok(())
    }
}

/// Result of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub report_path: PathBuf,
    pub summary: String,
    /// Extra files (CSV curves, OBJ meshes).
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDescriptor {
    set: String,
    #[serde(default)]
    params: ParamMap,
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|source| CliError::Json {
        what: what.to_string(),
        source,
    })
}

/// Resolves `--set` and `--params` into a descriptor.
pub fn load_descriptor(set: &str, params: Option<&str>) -> Result<SetDescriptor, CliError> {
    let trimmed = set.trim();
    let raw = if trimmed.starts_with('{') {
        Some(parse_json::<RawDescriptor>(trimmed, "--set")?)
    } else if Path::new(trimmed).is_file() {
        let text = fs::read_to_string(trimmed).map_err(|source| CliError::Io {
            path: trimmed.into(),
            source,
        })?;
        Some(parse_json::<RawDescriptor>(&text, trimmed)?)
    } else {
        None
    };
    match (raw, params) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "--params cannot be combined with a JSON descriptor".into(),
        )),
        (Some(raw), None) => Ok(SetDescriptor::from_name(&raw.set, &raw.params)?),
        (None, p) => {
            let params: ParamMap = match p {
                Some(text) => parse_json(text, "--params")?,
                None => ParamMap::new(),
            };
            Ok(SetDescriptor::from_name(trimmed, &params)?)
        }
    }
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'static str,
    version: &'static str,
    set: Option<&'a SetDescriptor>,
    seed: u64,
    budget: usize,
    samples: usize,
    tolerances: Tolerances,
    outcome: &'static str,
    result: Value,
    timestamp_unix: u64,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize to JSON")
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

struct Finding {
    witness: bool,
    summary: String,
    result: Value,
    artifacts: Vec<PathBuf>,
}

/// Runs a command and returns its exit code, printing a one-line summary to
/// stdout and errors to stderr.
pub fn run(cfg: &RunConfig) -> i32 {
    match execute(cfg) {
        Ok(out) => {
            println!("{} (report: {})", out.summary, out.report_path.display());
            out.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Runs a command and writes its report.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let desc = match (cfg.command, &cfg.set) {
        (Command::Gallery, _) => None,
        (_, Some(s)) => Some(load_descriptor(s, cfg.params.as_deref())?),
        (_, None) => {
            return Err(CliError::Usage(format!(
                "`{}` needs --set",
                cfg.command.name()
            )))
        }
    };
    fs::create_dir_all(&cfg.output_dir).map_err(io_at(&cfg.output_dir))?;
    let stem = match &desc {
        Some(d) => format!("{}-{}", cfg.command.name(), d.name()),
        None => cfg.command.name().to_string(),
    };
    let finding = match (cfg.command, &desc) {
        (Command::Gallery, _) => run_gallery(cfg)?,
        (Command::Axioms, Some(d)) => run_axioms(cfg, d)?,
        (Command::Cone, Some(d)) => run_cone(cfg, d)?,
        (Command::Ch, Some(d)) => run_ch(cfg, d, &stem)?,
        (Command::Radial, Some(d)) => run_radial(cfg, d)?,
        (Command::Export, Some(d)) => run_export(cfg, d, &stem)?,
        (_, None) => unreachable!("descriptor resolved above"),
    };
    let report = Report {
        command: cfg.command.name(),
        version: VERSION,
        set: desc.as_ref(),
        seed: cfg.seed,
        budget: cfg.budget,
        samples: cfg.samples,
        tolerances: cfg.tolerances,
        outcome: if finding.witness { "witness" } else { "pass" },
        result: finding.result,
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let report_path = cfg.output_dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(&report).expect("reports serialize to JSON");
    fs::write(&report_path, text + "\n").map_err(io_at(&report_path))?;
    Ok(RunOutcome {
        exit_code: if finding.witness {
            EXIT_WITNESS
        } else {
            EXIT_PASS
        },
        report_path,
        summary: finding.summary,
        artifacts: finding.artifacts,
    })
}

fn run_axioms(cfg: &RunConfig, d: &SetDescriptor) -> Result<Finding, CliError> {
    let k = d.build()?;
    let rep = check_axioms(&k, cfg.samples, cfg.seed, &cfg.tolerances)?;
    let pass = rep.a_holds && rep.b_holds && rep.c_holds;
    Ok(Finding {
        witness: !pass,
        summary: format!(
            "axioms {}: a={} b={} c={}",
            d.name(),
            rep.a_holds,
            rep.b_holds,
            rep.c_holds
        ),
        result: to_value(&rep),
        artifacts: vec![],
    })
}

type ClosedForm = Arc<dyn Fn(Point3) -> f64 + Send + Sync>;

fn closed_form(d: &SetDescriptor, kind: ConeKind) -> Option<ClosedForm> {
    match (kind, d) {
        (ConeKind::Heisenberg, _) => d.closed_form_cone(),
        (ConeKind::Euclidean, SetDescriptor::EuclideanBall { r }) => {
            let r = *r;
            Some(Arc::new(move |p: Point3| {
                p.to_array().iter().map(|c| c * c).sum::<f64>().sqrt() / r
            }))
        }
        (ConeKind::Euclidean, SetDescriptor::Cylinder { radius, height }) => {
            let (a, h) = (*radius, *height);
            Some(Arc::new(move |p: Point3| {
                (p.radius() / a).max(p.t.abs() / h)
            }))
        }
        _ => None,
    }
}

/// Comparison box: the bounding box of `K` scaled by 3 along every axis.
fn comparison_region(k: &SetOracle) -> BBox {
    let b = k.bbox();
    BBox::new(b.lo.map(|v| 3.0 * v), b.hi.map(|v| 3.0 * v))
}

fn run_cone(cfg: &RunConfig, d: &SetDescriptor) -> Result<Finding, CliError> {
    let k = d.build()?;
    let c = ConeFunction::build(k.clone(), cfg.cone_kind, cfg.tolerances)?;
    let validation = cone_validate(&c, cfg.budget, cfg.seed)?;
    let mut ok = validation.not_falsified;
    let mut summary = format!("cone {}: {}", d.name(), validation.verdict);
    let comparison = if cfg.compare_closed_form {
        match closed_form(d, cfg.cone_kind) {
            Some(f) => {
                let cmp = compare_closed_form(
                    &c,
                    |p| f(p),
                    &comparison_region(&k),
                    cfg.samples,
                    cfg.seed,
                )?;
                ok &= cmp.max_abs_dev <= CLOSED_FORM_TOL;
                summary.push_str(&format!("; closed form max |Δ| = {:.3e}", cmp.max_abs_dev));
                json!({ "available": true, "tolerance": CLOSED_FORM_TOL, "comparison": cmp })
            }
            None => {
                summary.push_str("; no closed form available");
                json!({ "available": false })
            }
        }
    } else {
        Value::Null
    };
    Ok(Finding {
        witness: !ok,
        summary,
        result: json!({
            "kind": cfg.cone_kind,
            "validation": validation,
            "closed_form": comparison,
        }),
        artifacts: vec![],
    })
}

fn run_ch(cfg: &RunConfig, d: &SetDescriptor, stem: &str) -> Result<Finding, CliError> {
    let k = d.build()?;
    let out = falsify_ch(
        &k,
        cfg.budget,
        DEFAULT_CURVE_SAMPLES,
        cfg.seed,
        &cfg.tolerances,
    )?;
    let mut artifacts = vec![];
    let summary = match &out.witness {
        Some(w) => {
            let path = cfg.output_dir.join(format!("{stem}-curve.csv"));
            export::export_curve(&w.curve(cfg.export.curve_samples)?, &path)?;
            artifacts.push(path);
            format!(
                "ch {}: witness after {} pairs, escape point ({}, {}, {})",
                d.name(),
                out.samples,
                w.escape_point.x,
                w.escape_point.y,
                w.escape_point.t
            )
        }
        None => format!("ch {}: no witness in {} pairs", d.name(), out.samples),
    };
    Ok(Finding {
        witness: out.witness.is_some(),
        summary,
        result: to_value(&out),
        artifacts,
    })
}

fn run_radial(cfg: &RunConfig, d: &SetDescriptor) -> Result<Finding, CliError> {
    let p = d
        .profile()?
        .ok_or_else(|| CliError::Usage(format!("`{}` is not a radial set", d.name())))?;
    let rep = radial_necessary(&p, cfg.samples, cfg.seed, &cfg.tolerances)?;
    let mut summary = format!(
        "radial {}: ball={} projection={} envelopes={}",
        d.name(),
        rep.thm_i.holds,
        rep.thm_ii.holds,
        rep.envelopes_hold
    );
    if let Some(w) = rep.thm_ii.witness {
        summary.push_str(&format!("; projection witness ({}, {}, {})", w.x, w.y, w.t));
    }
    Ok(Finding {
        witness: !rep.holds(),
        summary,
        result: to_value(&rep),
        artifacts: vec![],
    })
}

fn run_export(cfg: &RunConfig, d: &SetDescriptor, stem: &str) -> Result<Finding, CliError> {
    let k = d.build()?;
    let opts = &cfg.export;
    match opts.kind {
        ExportKind::Mesh => {
            let path = cfg.output_dir.join(format!("{stem}.obj"));
            let mesh = export::export_levelset(&k, opts.tau, opts.resolution, &path)?;
            Ok(Finding {
                witness: false,
                summary: format!(
                    "export {}: {} vertices, {} faces",
                    d.name(),
                    mesh.vertices.len(),
                    mesh.faces.len()
                ),
                result: json!({
                    "kind": opts.kind,
                    "tau": opts.tau,
                    "resolution": opts.resolution,
                    "vertices": mesh.vertices.len(),
                    "faces": mesh.faces.len(),
                    "path": path.file_name().map(|f| f.to_string_lossy().into_owned()),
                }),
                artifacts: vec![path],
            })
        }
        ExportKind::Curve => {
            let path = cfg.output_dir.join(format!("{stem}.csv"));
            let (curve, witness) = match (opts.xi0, opts.v) {
                (Some(xi0), Some(v)) => (
                    hconvex::ch_curve(xi0, v, opts.tau, opts.curve_samples)?,
                    None,
                ),
                (None, None) => {
                    let out = falsify_ch(
                        &k,
                        cfg.budget,
                        DEFAULT_CURVE_SAMPLES,
                        cfg.seed,
                        &cfg.tolerances,
                    )?;
                    match out.witness {
                        Some(w) => (w.curve(opts.curve_samples)?, Some(w)),
                        None => {
                            return Ok(Finding {
                                witness: false,
                                summary: format!(
                                    "export {}: no witness, no curve written",
                                    d.name()
                                ),
                                result: json!({ "kind": opts.kind, "witness": null, "path": null }),
                                artifacts: vec![],
                            })
                        }
                    }
                }
                _ => {
                    return Err(CliError::Usage(
                        "--xi0 and --v must be given together".into(),
                    ))
                }
            };
            export::export_curve(&curve, &path)?;
            Ok(Finding {
                witness: witness.is_some(),
                summary: format!("export {}: {} curve samples", d.name(), curve.len()),
                result: json!({
                    "kind": opts.kind,
                    "samples": curve.len(),
                    "witness": witness,
                    "path": path.file_name().map(|f| f.to_string_lossy().into_owned()),
                }),
                artifacts: vec![path],
            })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct GalleryEntry {
    set: String,
    check: &'static str,
    expected: &'static str,
    observed: String,
    agrees: bool,
}

fn descriptor(name: &str) -> SetDescriptor {
    SetDescriptor::from_name(name, &ParamMap::new()).expect("gallery defaults are valid")
}

fn run_gallery(cfg: &RunConfig) -> Result<Finding, CliError> {
    let tol = cfg.tolerances;
    let mut entries = Vec::new();
    let mut push = |set: &str,
                    check: &'static str,
                    expected: &'static str,
                    observed: Result<String, CliError>| {
        let observed = observed.unwrap_or_else(|e| format!("error: {e}"));
        entries.push(GalleryEntry {
            set: set.to_string(),
            check,
            expected,
            agrees: observed == expected,
            observed,
        });
    };

    for name in ["koranyi_ball", "euclidean_ball", "cylinder", "cylinder_hat"] {
        let obs = descriptor(name)
            .build()
            .map_err(CliError::from)
            .and_then(|k| {
                let r = check_axioms(&k, cfg.samples, cfg.seed, &tol)?;
                Ok(if r.a_holds && r.b_holds && r.c_holds {
                    "pass"
                } else {
                    "fail"
                }
                .to_string())
            });
        push(name, "axioms", "pass", obs);
    }

    for name in ["koranyi_ball", "euclidean_ball", "cylinder_hat"] {
        let d = descriptor(name);
        let obs = d.build().map_err(CliError::from).and_then(|k| {
            let c = ConeFunction::build(k.clone(), ConeKind::Heisenberg, tol)?;
            Ok(cone_validate(&c, cfg.budget, cfg.seed)?.verdict)
        });
        push(name, "cone validation", VERDICT_CANDIDATE, obs);
    }

    for (name, kind) in [
        ("koranyi_ball", ConeKind::Heisenberg),
        ("euclidean_ball", ConeKind::Heisenberg),
        ("cylinder_hat", ConeKind::Heisenberg),
        ("euclidean_ball", ConeKind::Euclidean),
    ] {
        let d = descriptor(name);
        let obs = d.build().map_err(CliError::from).and_then(|k| {
            let c = ConeFunction::build(k.clone(), kind, tol)?;
            let f = closed_form(&d, kind).expect("closed form exists");
            let cmp =
                compare_closed_form(&c, |p| f(p), &comparison_region(&k), cfg.samples, cfg.seed)?;
            Ok(if cmp.max_abs_dev <= CLOSED_FORM_TOL {
                "match"
            } else {
                "mismatch"
            }
            .to_string())
        });
        let check = match kind {
            ConeKind::Heisenberg => "closed form",
            ConeKind::Euclidean => "euclidean closed form",
        };
        push(name, check, "match", obs);
    }

    let refusal = ConeFunction::build(descriptor("slab_x").build()?, ConeKind::Heisenberg, tol)
        .map(|_| "built".to_string())
        .or_else(|e| match e {
            hconvex::Error::NonCompact(_) => Ok("refused: non-compact".to_string()),
            e => Err(CliError::from(e)),
        });
    push(
        "slab_x",
        "cone construction",
        "refused: non-compact",
        refusal,
    );

    for (name, expected) in [
        ("cylinder", "witness"),
        ("koranyi_ball", "no witness"),
        ("euclidean_ball", "no witness"),
        ("cylinder_hat", "no witness"),
    ] {
        let obs = descriptor(name)
            .build()
            .map_err(CliError::from)
            .and_then(|k| {
                let out = falsify_ch(&k, cfg.budget, DEFAULT_CURVE_SAMPLES, cfg.seed, &tol)?;
                if let Some(w) = &out.witness {
                    w.replay(&k, &tol)?;
                }
                Ok(if out.witness.is_some() {
                    "witness"
                } else {
                    "no witness"
                }
                .to_string())
            });
        push(name, "condition (C_H)", expected, obs);
    }

    for (name, expected) in [
        ("koranyi_ball", "ball=true projection=true envelopes=true"),
        ("cylinder_hat", "ball=true projection=true envelopes=true"),
        ("cylinder", "ball=true projection=true envelopes=false"),
        ("importante", "ball=true projection=false envelopes=true"),
    ] {
        let obs = descriptor(name)
            .profile()
            .map_err(CliError::from)
            .and_then(|p| {
                let p = p.expect("gallery radial sets have profiles");
                let r = radial_necessary(&p, cfg.samples, cfg.seed, &tol)?;
                Ok(format!(
                    "ball={} projection={} envelopes={}",
                    r.thm_i.holds, r.thm_ii.holds, r.envelopes_hold
                ))
            });
        push(name, "radial conditions", expected, obs);
    }

    let agreed = entries.iter().filter(|e| e.agrees).count();
    Ok(Finding {
        witness: agreed != entries.len(),
        summary: format!(
            "gallery: {agreed}/{} checks agree with the expected outcomes",
            entries.len()
        ),
        result: json!({ "entries": entries }),
        artifacts: vec![],
    })
}
