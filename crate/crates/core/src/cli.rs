//! Command-line front end.
//!
//! Exit codes: 0 on success (a collision is a normal end of a run), 2 when
//! the command line or config is invalid, 3 when a computation or a write
//! fails. Nothing is written to disk before validation has passed.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::classify::{classify_point, scan_diagram, CausticCurve, GridSpec, OrbitLabel};
use crate::coords::QPoint;
use crate::dynamics::{cross_check, integrate_window, Trajectory};
use crate::error::Error;
use crate::initcond::{build_full_state, velocity_branches, FullState, VelocityBranch};
use crate::model::{derive_config, scale_constants, MotionConstants, PhysConfig, DEFAULT_COLLISION_RADIUS};
use crate::svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Contents of a `key = value` run file.
///
/// `alpha`, `x0`, `y0`, `h` and `lambda` are required. The initial relative
/// position `q1`, `q2` and the center of mass `X`, `Y` (default 0) are
/// needed only by commands that start a trajectory. `#` starts a comment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunConfig {
    pub alpha: f64,
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub lambda: f64,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    pub cm_x: f64,
    pub cm_y: f64,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut seen: BTreeMap<String, f64> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let key = k.trim();
            let canon = match key {
                "alpha" | "x0" | "y0" | "h" | "lambda" | "q1" | "q2" => key,
                "X" | "X0" => "X",
                "Y" | "Y0" => "Y",
                _ => return Err(Error::Config(format!("line {}: unknown key `{key}`", n + 1))),
            };
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("line {}: `{}` is not a number", n + 1, v.trim())))?;
            if !value.is_finite() {
                return Err(Error::Config(format!("line {}: `{key}` is not finite", n + 1)));
            }
            if seen.insert(canon.to_string(), value).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", n + 1)));
            }
        }
        let need = |k: &str| seen.get(k).copied().ok_or_else(|| Error::Config(format!("missing key `{k}`")));
        let cfg = RunConfig {
            alpha: need("alpha")?,
            x0: need("x0")?,
            y0: need("y0")?,
            h: need("h")?,
            lambda: need("lambda")?,
            q1: seen.get("q1").copied(),
            q2: seen.get("q2").copied(),
            cm_x: seen.get("X").copied().unwrap_or(0.0),
            cm_y: seen.get("Y").copied().unwrap_or(0.0),
        };
        cfg.phys()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn phys(&self) -> Result<PhysConfig, Error> {
        derive_config(self.alpha, self.x0, self.y0)
    }

    pub fn constants(&self) -> Result<MotionConstants, Error> {
        Ok(scale_constants(self.h, self.lambda, &self.phys()?))
    }

    pub fn position(&self) -> Result<QPoint, Error> {
        match (self.q1, self.q2) {
            (Some(a), Some(b)) => Ok(QPoint::new(a, b)),
            _ => Err(Error::Config("keys `q1` and `q2` are required for this command".into())),
        }
    }
}

fn finite(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = finite(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("`{s}` must be positive"))
    }
}

/// `start:stop:count` with inclusive endpoints.
pub fn parse_range(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("`{s}` is not start:stop:count"));
    }
    let start = finite(parts[0])?;
    let stop = finite(parts[1])?;
    let count: usize = parts[2].trim().parse().map_err(|_| format!("`{}` is not a count", parts[2]))?;
    if count == 0 || (count == 1 && start != stop) {
        return Err(format!("`{s}`: count must be at least 2 unless start equals stop"));
    }
    Ok(GridSpec::new(start, stop, count))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchSel {
    One(usize),
    All,
}

fn parse_branch(s: &str) -> Result<BranchSel, String> {
    if s == "all" {
        return Ok(BranchSel::All);
    }
    s.parse().map(BranchSel::One).map_err(|_| format!("`{s}` is not a branch index or `all`"))
}

#[derive(Debug, Parser)]
#[command(name = "pairorbit", version, about = "Orbits of an electron-positron pair in a constant magnetic field")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    /// Run file; replaces the three scaled flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true, value_parser = positive)]
    pub alpha_a: Option<f64>,
    #[arg(long, allow_hyphen_values = true, value_parser = finite)]
    pub h_a: Option<f64>,
    #[arg(long, allow_hyphen_values = true, value_parser = finite)]
    pub lambda_a: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, allow_hyphen_values = true, value_parser = finite)]
    pub q1: Option<f64>,
    #[arg(long, allow_hyphen_values = true, value_parser = finite)]
    pub q2: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Orbit type, caustics and roots at one diagram point.
    Classify(PointArgs),
    /// Label a grid of the bifurcation diagram.
    Diagram {
        #[arg(long, value_parser = positive)]
        alpha_a: f64,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
        h_a: GridSpec,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
        lambda_a: GridSpec,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Caustic curves in the q plane.
    Caustics {
        #[command(flatten)]
        point: PointArgs,
        /// Region plot with the allowed zone shaded.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Velocity branches consistent with the run file.
    Initcond {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Integrate the pair.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "0", value_parser = parse_branch)]
        branch: BranchSel,
        #[arg(long, allow_hyphen_values = true, value_parser = finite)]
        t_max: f64,
        /// Start of the window; negative values add a backward leg.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true, value_parser = finite)]
        t_min: f64,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        #[arg(long, default_value_t = 1e-10, value_parser = positive)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_COLLISION_RADIUS, value_parser = positive)]
        collision_radius: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Compare the full and the separated integrations.
    Xcheck {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "0", value_parser = parse_branch)]
        branch: BranchSel,
        #[arg(long, default_value_t = 10.0, value_parser = finite)]
        t_max: f64,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        #[arg(long, default_value_t = 1e-10, value_parser = positive)]
        tol: f64,
    },
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::StepFailure { .. } | Error::TooManySteps(_) | Error::EmptyPlot => Failure::Runtime(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

type Out = Result<(), Failure>;

/// Files produced by a command, written only after every check passed.
#[derive(Default)]
struct Outputs(Vec<(PathBuf, String)>);

impl Outputs {
    fn push(&mut self, path: Option<&PathBuf>, body: impl FnOnce() -> Result<String, Error>) -> Out {
        if let Some(p) = path {
            self.0.push((p.clone(), body()?));
        }
        Ok(())
    }

    fn write(self) -> Out {
        for (p, body) in self.0 {
            std::fs::write(&p, body).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
        }
        Ok(())
    }
}

fn point_config(p: &PointArgs) -> Result<(PhysConfig, MotionConstants), Failure> {
    if let Some(path) = &p.config {
        if p.alpha_a.is_some() || p.h_a.is_some() || p.lambda_a.is_some() {
            return Err(Failure::Invalid("--config excludes --alpha-a/--h-a/--lambda-a".into()));
        }
        let rc = RunConfig::load(path)?;
        return Ok((rc.phys()?, rc.constants()?));
    }
    let missing: Vec<&str> = [("--alpha-a", p.alpha_a), ("--h-a", p.h_a), ("--lambda-a", p.lambda_a)]
        .iter()
        .filter(|(_, v)| v.is_none())
        .map(|(n, _)| *n)
        .collect();
    if !missing.is_empty() {
        return Err(Failure::Invalid(format!("missing {} (or --config)", missing.join(", "))));
    }
    let cfg = PhysConfig::from_scaled(p.alpha_a.unwrap(), 0.0, 1.0)?;
    Ok((cfg, MotionConstants::from_scaled(p.h_a.unwrap(), p.lambda_a.unwrap(), &cfg)))
}

struct Prepared {
    cfg: PhysConfig,
    mc: MotionConstants,
    cm: (f64, f64),
    q: QPoint,
    branches: Vec<VelocityBranch>,
}

fn prepare(run: &RunArgs) -> Result<Prepared, Failure> {
    let mut rc = RunConfig::load(&run.config)?;
    if run.q1.is_some() {
        rc.q1 = run.q1;
    }
    if run.q2.is_some() {
        rc.q2 = run.q2;
    }
    let cfg = rc.phys()?;
    let mc = rc.constants()?;
    let q = rc.position()?;
    let branches = velocity_branches(q, &mc, &cfg)?;
    Ok(Prepared {
        cfg,
        mc,
        cm: (rc.cm_x, rc.cm_y),
        q,
        branches,
    })
}

fn select(p: &Prepared, sel: BranchSel) -> Result<Vec<VelocityBranch>, Failure> {
    if p.branches.is_empty() {
        return Err(Failure::Invalid(Error::OutsideAllowedRegion.to_string()));
    }
    match sel {
        BranchSel::All => Ok(p.branches.clone()),
        BranchSel::One(k) => p.branches.get(k).copied().map(|b| vec![b]).ok_or_else(|| {
            Failure::Invalid(format!("branch {k} does not exist; {} branches at this point", p.branches.len()))
        }),
    }
}

/// `out.csv` becomes `out_b2.csv` when several branches share one flag.
fn branch_path(p: &Path, k: usize, many: bool) -> PathBuf {
    if !many {
        return p.to_path_buf();
    }
    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match p.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_b{k}.{ext}"),
        None => format!("{stem}_b{k}"),
    };
    p.with_file_name(name)
}

fn labels_json(labels: &[OrbitLabel]) -> Value {
    Value::from(labels.iter().map(|l| l.as_str()).collect::<Vec<_>>())
}

fn curves_json(curves: &[CausticCurve]) -> Value {
    serde_json::to_value(curves).unwrap_or(Value::Null)
}

fn state_json(s: &FullState) -> Value {
    serde_json::to_value(s).unwrap_or(Value::Null)
}

fn emit(stdout: &mut dyn Write, v: &Value) -> Out {
    let text = serde_json::to_string_pretty(v).map_err(|e| Failure::Runtime(e.to_string()))?;
    writeln!(stdout, "{text}").map_err(|e| Failure::Runtime(e.to_string()))
}

fn summary(k: usize, b: &VelocityBranch, t: &Trajectory) -> Value {
    let d = t.max_drift();
    let min_sep = t.samples.iter().map(|s| s.state.separation()).fold(f64::INFINITY, f64::min);
    json!({
        "branch": k,
        "qdot1": b.qdot1,
        "qdot2": b.qdot2,
        "termination": t.termination.as_str(),
        "event_time": t.event_time,
        "steps": t.steps,
        "samples": t.samples.len(),
        "t_first": t.samples.first().map(|s| s.t),
        "t_last": t.samples.last().map(|s| s.t),
        "min_separation": min_sep,
        "max_drift": {
            "h": d.drift_h,
            "lambda": d.drift_lambda,
            "kx": d.drift_kx,
            "ky": d.drift_ky,
            "lz": d.drift_lz,
        },
    })
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Out {
    match cli.command {
        Command::Classify(p) => {
            let (cfg, mc) = point_config(&p)?;
            let r = classify_point(&mc, &cfg);
            let iv = |v: &[crate::classify::Interval]| v.iter().map(|i| vec![i.lo, i.hi]).collect::<Vec<_>>();
            emit(
                stdout,
                &json!({
                    "alpha_a": cfg.alpha_a,
                    "h_a": mc.h_a,
                    "lambda_a": mc.lambda_a,
                    "labels": labels_json(&r.labels),
                    "caustics": r.caustics.iter().map(|c| c.parameter).collect::<Vec<_>>(),
                    "caustic_curves": curves_json(&r.caustics),
                    "collision_possible": r.collision_possible,
                    "u_intervals": iv(&r.intervals.u_intervals),
                    "v_intervals": iv(&r.intervals.v_intervals),
                    "roots": r.roots.real_roots,
                    "complex_pairs": r.roots.n_complex_pairs,
                    "discriminant": r.discriminant,
                    "l1": r.l1,
                    "l2": r.l2,
                }),
            )
        }
        Command::Diagram { alpha_a, h_a, lambda_a, csv, svg: svg_path } => {
            let scan = scan_diagram(alpha_a, h_a, lambda_a);
            let mut files = Outputs::default();
            files.push(csv.as_ref(), || Ok(scan.to_csv()))?;
            files.push(svg_path.as_ref(), || svg::diagram_svg(&scan))?;
            files.write()?;
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for c in &scan.cells {
                *counts.entry(crate::classify::join_labels(&c.labels)).or_default() += 1;
            }
            emit(
                stdout,
                &json!({
                    "alpha_a": alpha_a,
                    "cells": scan.cells.len(),
                    "labels": labels_json(&scan.distinct_labels()),
                    "counts": counts,
                    "discriminant_points": scan.discriminant_locus.len(),
                }),
            )
        }
        Command::Caustics { point, svg: svg_path } => {
            let (cfg, mc) = point_config(&point)?;
            let r = classify_point(&mc, &cfg);
            if r.intervals.is_forbidden() {
                return Err(Error::ForbiddenRegion.into());
            }
            let mut files = Outputs::default();
            files.push(svg_path.as_ref(), || svg::region_svg(&r.intervals, &r.caustics, &cfg))?;
            files.write()?;
            emit(
                stdout,
                &json!({
                    "labels": labels_json(&r.labels),
                    "a": cfg.a,
                    "coulomb_center": [-cfg.a, 0.0],
                    "caustics": curves_json(&r.caustics),
                }),
            )
        }
        Command::Initcond { run } => {
            let p = prepare(&run)?;
            let records: Vec<Value> = p
                .branches
                .iter()
                .enumerate()
                .map(|(k, b)| {
                    json!({
                        "branch": k,
                        "qdot1": b.qdot1,
                        "qdot2": b.qdot2,
                        "residual_h": b.residual_h,
                        "residual_lambda": b.residual_lambda,
                        "state": state_json(&build_full_state(p.cm.0, p.cm.1, p.q, b, &p.cfg)),
                    })
                })
                .collect();
            emit(
                stdout,
                &json!({
                    "q1": p.q.q1,
                    "q2": p.q.q2,
                    "h_a": p.mc.h_a,
                    "lambda_a": p.mc.lambda_a,
                    "branches": records,
                }),
            )
        }
        Command::Simulate {
            run,
            branch,
            t_max,
            t_min,
            samples,
            tol,
            collision_radius,
            csv,
            svg: svg_path,
        } => {
            if t_max <= t_min || t_max < 0.0 || t_min > 0.0 {
                return Err(Failure::Invalid(format!("need t_min <= 0 <= t_max and t_min < t_max, got [{t_min}, {t_max}]")));
            }
            if samples < 2 {
                return Err(Failure::Invalid("--samples must be at least 2".into()));
            }
            let p = prepare(&run)?;
            let chosen: Vec<(usize, VelocityBranch)> = match branch {
                BranchSel::All => select(&p, branch)?.into_iter().enumerate().collect(),
                BranchSel::One(k) => select(&p, branch)?.into_iter().map(|b| (k, b)).collect(),
            };
            let caustics = classify_point(&p.mc, &p.cfg).caustics;
            let runs: Vec<Result<Trajectory, Error>> = chosen
                .par_iter()
                .map(|(_, b)| {
                    let ic = build_full_state(p.cm.0, p.cm.1, p.q, b, &p.cfg);
                    integrate_window(&ic, &p.cfg, t_min, t_max, tol, samples, collision_radius)
                })
                .collect();
            let many = chosen.len() > 1;
            let mut files = Outputs::default();
            let mut reports = Vec::new();
            for ((k, b), r) in chosen.iter().zip(runs) {
                let traj = r?;
                files.push(csv.as_ref().map(|c| branch_path(c, *k, many)).as_ref(), || Ok(traj.to_csv()))?;
                files.push(svg_path.as_ref().map(|c| branch_path(c, *k, many)).as_ref(), || {
                    svg::trajectory_svg(&traj, &p.cfg, &caustics)
                })?;
                reports.push(summary(*k, b, &traj));
            }
            files.write()?;
            emit(stdout, &json!({ "tol": tol, "runs": reports }))
        }
        Command::Xcheck { run, branch, t_max, samples, tol } => {
            if t_max < 0.0 {
                return Err(Failure::Invalid("--t-max must be non-negative".into()));
            }
            if samples < 2 {
                return Err(Failure::Invalid("--samples must be at least 2".into()));
            }
            let p = prepare(&run)?;
            let chosen = select(&p, branch)?;
            let reports: Vec<Result<Value, Error>> = chosen
                .par_iter()
                .enumerate()
                .map(|(i, b)| {
                    let k = match branch {
                        BranchSel::One(k) => k,
                        BranchSel::All => i,
                    };
                    let ic = build_full_state(p.cm.0, p.cm.1, p.q, b, &p.cfg);
                    let r = cross_check(&ic, &p.cfg, &p.mc, t_max, tol, samples)?;
                    Ok(json!({
                        "branch": k,
                        "max_du": r.max_du,
                        "max_dv": r.max_dv,
                        "compared": r.compared,
                        "t_reached": r.t_reached,
                        "full_termination": r.full_termination.as_str(),
                    }))
                })
                .collect();
            let reports: Result<Vec<Value>, Error> = reports.into_iter().collect();
            emit(stdout, &json!({ "t_max": t_max, "tol": tol, "runs": reports? }))
        }
    }
}

/// Runs one command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_INVALID
                }
            };
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(Failure::Invalid(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_INVALID
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_RUNTIME
        }
    }
}
