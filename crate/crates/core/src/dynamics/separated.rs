//! The reduced problem in elliptic coordinates and local time.
//!
//! With `dt = (u^2 - v^2) dzeta` the coordinates decouple into
//! `u'^2 = P6(u)` and `v'^2 = P6(v)`. The differentiated form
//! `u'' = P6'(u) / 2`, `v'' = P6'(v) / 2` is integrated instead, so turning
//! points need no sign bookkeeping; the first-order relations are
//! monitored as residuals.

use serde::{Deserialize, Serialize};

use super::ode::{self, Control, DenseStep, Options};
use super::pair::{integrate_full, RunSpec, Termination};
use crate::coords::{elliptic_rates, q_to_elliptic, EllipticPoint};
use crate::error::{Error, Result};
use crate::initcond::{reduce_state, FullState};
use crate::model::{MotionConstants, PhysConfig};
use crate::quartic::{p6_deriv, p6_eval, QuarticParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparatedSample {
    pub zeta: f64,
    pub u: f64,
    pub v: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatedRun {
    pub samples: Vec<SeparatedSample>,
    /// Largest `|u'^2 - P6(u)|` or `|v'^2 - P6(v)|` seen at step ends.
    pub max_residual: f64,
    /// Largest `|P6|` or `u'^2` seen, the natural size of the residual.
    pub residual_scale: f64,
}

/// Slack on `P6(z0) >= 0` for starting points on a caustic.
const START_SLACK: f64 = 1e-12;

fn seed(e0: &EllipticPoint, signs: (i8, i8), qp: &QuarticParams) -> Result<[f64; 5]> {
    let fu = p6_eval(e0.u, qp);
    let fv = p6_eval(e0.v, qp);
    if fu < -START_SLACK || fv < -START_SLACK {
        return Err(Error::OutsideAllowedRegion);
    }
    Ok([
        e0.u,
        e0.v,
        f64::from(signs.0.signum()) * fu.max(0.0).sqrt(),
        f64::from(signs.1.signum()) * fv.max(0.0).sqrt(),
        0.0,
    ])
}

fn rhs(w: &[f64; 5], qp: &QuarticParams) -> [f64; 5] {
    [
        w[2],
        w[3],
        0.5 * p6_deriv(w[0], qp),
        0.5 * p6_deriv(w[1], qp),
        w[0] * w[0] - w[1] * w[1],
    ]
}

fn run<O>(e0: &EllipticPoint, signs: (i8, i8), qp: &QuarticParams, zeta_end: f64, tol: f64, mut observe: O) -> Result<SeparatedRun>
where
    O: FnMut(&DenseStep<5>, &[f64; 5]) -> Control,
{
    let w0 = seed(e0, signs, qp)?;
    let mut out = SeparatedRun {
        samples: vec![SeparatedSample {
            zeta: 0.0,
            u: w0[0],
            v: w0[1],
            t: 0.0,
        }],
        max_residual: 0.0,
        residual_scale: 1.0,
    };
    let qp_c = *qp;
    ode::integrate(|_, w: &[f64; 5]| rhs(w, &qp_c), 0.0, w0, zeta_end, &Options::with_tol(tol), |step, w| {
        let fu = p6_eval(w[0], qp);
        let fv = p6_eval(w[1], qp);
        out.max_residual = out.max_residual.max((w[2] * w[2] - fu).abs()).max((w[3] * w[3] - fv).abs());
        out.residual_scale = out.residual_scale.max(fu.abs()).max(fv.abs()).max(w[2] * w[2]).max(w[3] * w[3]);
        out.samples.push(SeparatedSample {
            zeta: step.t_new(),
            u: w[0],
            v: w[1],
            t: w[4],
        });
        observe(step, w)
    })?;
    Ok(out)
}

/// Integrates the separated system over local time `[0, zeta_end]`.
///
/// `signs` picks the initial directions of `u` and `v`. One sample is
/// recorded per accepted step.
pub fn integrate_separated(
    e0: &EllipticPoint,
    signs: (i8, i8),
    mc: &MotionConstants,
    cfg: &PhysConfig,
    zeta_end: f64,
    tol: f64,
) -> Result<SeparatedRun> {
    let qp = QuarticParams::from_constants(mc, cfg);
    run(e0, signs, &qp, zeta_end, tol, |_, _| Control::Continue)
}

/// Agreement between the full and the separated integrations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckReport {
    pub max_du: f64,
    pub max_dv: f64,
    pub compared: usize,
    pub full_termination: Termination,
    /// Last time covered by both integrations.
    pub t_reached: f64,
}

/// Physical time inside one separated step, solved on the interpolant.
fn zeta_at_time(step: &DenseStep<5>, t: f64) -> f64 {
    let (mut lo, mut hi) = (step.t_old, step.t_new());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if step.eval(mid)[4] < t {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Integrates `ic` both as the full pair and as the separated system, and
/// compares `(u, v)` at `samples` evenly spaced times in `[0, t_max]`.
pub fn cross_check(ic: &FullState, cfg: &PhysConfig, mc: &MotionConstants, t_max: f64, tol: f64, samples: usize) -> Result<CrossCheckReport> {
    let spec = RunSpec::new(t_max, tol, samples);
    let full = integrate_full(ic, cfg, &spec)?;
    let red = reduce_state(ic, cfg);
    let e0 = q_to_elliptic(red.q, cfg);
    let (du, dv) = elliptic_rates(red.q, red.qdot, cfg).ok_or(Error::FocalPoint)?;
    let signs = (if du < 0.0 { -1 } else { 1 }, if dv < 0.0 { -1 } else { 1 });

    let targets: Vec<(f64, EllipticPoint)> = full.samples.iter().map(|s| (s.t, s.elliptic)).collect();
    let mut report = CrossCheckReport {
        max_du: 0.0,
        max_dv: 0.0,
        compared: 0,
        full_termination: full.termination,
        t_reached: 0.0,
    };
    let t_last = targets.last().map(|p| p.0).unwrap_or(0.0);
    let mut next = 0;
    // Compare the starting point directly.
    while next < targets.len() && targets[next].0 <= 0.0 {
        report.max_du = report.max_du.max((targets[next].1.u - e0.u).abs());
        report.max_dv = report.max_dv.max((targets[next].1.v - e0.v).abs());
        report.compared += 1;
        next += 1;
    }
    if next == targets.len() {
        return Ok(report);
    }
    let qp = QuarticParams::from_constants(mc, cfg);
    // Local time runs slower than t only near the foci; bound it generously.
    let zeta_end = 1e3 * (t_max + 1.0);
    run(&e0, signs, &qp, zeta_end, tol, |step, w| {
        while next < targets.len() && targets[next].0 <= w[4] {
            let (t, e) = targets[next];
            let z = step.eval(zeta_at_time(step, t));
            report.max_du = report.max_du.max((z[0] - e.u).abs());
            report.max_dv = report.max_dv.max((z[1] - e.v).abs());
            report.compared += 1;
            report.t_reached = t;
            next += 1;
        }
        if next >= targets.len() || w[4] > t_last {
            Control::Stop
        } else {
            Control::Continue
        }
    })?;
    Ok(report)
}
