//! The electron-positron pair: equations of motion, conserved quantities,
//! collision events and trajectory sampling.

use serde::{Deserialize, Serialize};

use super::ode::{self, Control, DenseStep, Options};
use crate::coords::{q_to_elliptic, EllipticPoint, QPoint};
use crate::error::{Error, Result};
use crate::initcond::{cartesian_invariants, reduce_state, FullState};
use crate::model::{PhysConfig, DEFAULT_COLLISION_RADIUS};

/// Lab-frame Newton equations, first-order form `(positions, velocities)'`.
pub fn rhs_full(s: &FullState, cfg: &PhysConfig) -> Result<[f64; 8]> {
    let dx = s.x1 - s.x2;
    let dy = s.y1 - s.y2;
    let r = dx.hypot(dy);
    if r == 0.0 {
        return Err(Error::CoulombSingularity(0.0));
    }
    let k = cfg.alpha / (2.0 * r * r * r);
    Ok([
        s.vx1,
        s.vy1,
        s.vx2,
        s.vy2,
        -s.vy1 - k * dx,
        s.vx1 - k * dy,
        s.vy2 + k * dx,
        -s.vx2 + k * dy,
    ])
}

/// The same system in center of mass / relative variables
/// `[X, Y, x, y, X', Y', x', y']` with `x = x2 - x1`.
///
/// The relative separation is carried directly, so close Coulomb passes do
/// not lose digits to the cancellation `x2 - x1`.
pub fn rhs_split(z: &[f64; 8], alpha: f64) -> [f64; 8] {
    let (x, y) = (z[2], z[3]);
    let r2 = x * x + y * y;
    let k = alpha / (r2 * r2.sqrt());
    [
        z[4],
        z[5],
        z[6],
        z[7],
        0.5 * z[7],
        -0.5 * z[6],
        2.0 * z[5] - k * x,
        -2.0 * z[4] - k * y,
    ]
}

pub fn to_split(s: &FullState) -> [f64; 8] {
    [
        0.5 * (s.x1 + s.x2),
        0.5 * (s.y1 + s.y2),
        s.x2 - s.x1,
        s.y2 - s.y1,
        0.5 * (s.vx1 + s.vx2),
        0.5 * (s.vy1 + s.vy2),
        s.vx2 - s.vx1,
        s.vy2 - s.vy1,
    ]
}

pub fn from_split(z: &[f64; 8]) -> FullState {
    FullState {
        x1: z[0] - 0.5 * z[2],
        y1: z[1] - 0.5 * z[3],
        x2: z[0] + 0.5 * z[2],
        y2: z[1] + 0.5 * z[3],
        vx1: z[4] - 0.5 * z[6],
        vy1: z[5] - 0.5 * z[7],
        vx2: z[4] + 0.5 * z[6],
        vy2: z[5] + 0.5 * z[7],
    }
}

/// Conserved quantities of one state, with drifts against a reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub h_rel: f64,
    pub lambda_rel: f64,
    pub kx: f64,
    pub ky: f64,
    pub lz: f64,
    pub drift_h: f64,
    pub drift_lambda: f64,
    pub drift_kx: f64,
    pub drift_ky: f64,
    pub drift_lz: f64,
}

/// `|value - reference| / max(|reference|, 1)`.
pub fn relative_drift(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(1.0)
}

impl MonitorRecord {
    pub fn max_drift(&self) -> f64 {
        self.drift_h
            .max(self.drift_lambda)
            .max(self.drift_kx)
            .max(self.drift_ky)
            .max(self.drift_lz)
    }

    pub fn against(mut self, reference: &MonitorRecord) -> Self {
        self.drift_h = relative_drift(self.h_rel, reference.h_rel);
        self.drift_lambda = relative_drift(self.lambda_rel, reference.lambda_rel);
        self.drift_kx = relative_drift(self.kx, reference.kx);
        self.drift_ky = relative_drift(self.ky, reference.ky);
        self.drift_lz = relative_drift(self.lz, reference.lz);
        self
    }
}

/// Magnetic translation momenta and angular momentum of the pair.
///
/// The positron (1) and electron (2) enter the angular momentum with
/// opposite magnetic terms: `L_Z = (x1 v_y1 - y1 v_x1 - r1^2/2) + (x2 v_y2 - y2 v_x2 + r2^2/2)`.
pub fn pair_constants(s: &FullState) -> (f64, f64, f64) {
    let kx = s.vx1 + s.vx2 + s.y1 - s.y2;
    let ky = s.vy1 + s.vy2 + s.x2 - s.x1;
    let lz = (s.x1 * s.vy1 - s.y1 * s.vx1 - 0.5 * (s.x1 * s.x1 + s.y1 * s.y1))
        + (s.x2 * s.vy2 - s.y2 * s.vx2 + 0.5 * (s.x2 * s.x2 + s.y2 * s.y2));
    (kx, ky, lz)
}

/// Monitor values of a state; drift fields are zero.
pub fn monitors(s: &FullState, cfg: &PhysConfig) -> Result<MonitorRecord> {
    let r = s.separation();
    if r == 0.0 {
        return Err(Error::CoulombSingularity(0.0));
    }
    let red = reduce_state(s, cfg);
    let (h_rel, lambda_rel) = cartesian_invariants(red.q, red.qdot.0, red.qdot.1, cfg)?;
    let (kx, ky, lz) = pair_constants(s);
    Ok(MonitorRecord {
        h_rel,
        lambda_rel,
        kx,
        ky,
        lz,
        drift_h: 0.0,
        drift_lambda: 0.0,
        drift_kx: 0.0,
        drift_ky: 0.0,
        drift_lz: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TimeLimit,
    Collision,
    StepFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::TimeLimit => "time_limit",
            Termination::Collision => "collision",
            Termination::StepFailure => "step_failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: FullState,
    pub q: QPoint,
    pub elliptic: EllipticPoint,
    pub monitors: MonitorRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub termination: Termination,
    /// Time of the collision event, if one occurred.
    pub event_time: Option<f64>,
    pub steps: usize,
}

pub const TRAJECTORY_HEADER: &str = "t,x1,y1,x2,y2,X,Y,q1,q2,u,v,H,Lambda,KX,KY,LZ";

/// Formats a number with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

impl Trajectory {
    pub fn max_drift(&self) -> MonitorRecord {
        let mut m = self.samples[0].monitors;
        for s in &self.samples {
            let d = &s.monitors;
            m.drift_h = m.drift_h.max(d.drift_h);
            m.drift_lambda = m.drift_lambda.max(d.drift_lambda);
            m.drift_kx = m.drift_kx.max(d.drift_kx);
            m.drift_ky = m.drift_ky.max(d.drift_ky);
            m.drift_lz = m.drift_lz.max(d.drift_lz);
        }
        m
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 + self.samples.len() * 400);
        out.push_str(TRAJECTORY_HEADER);
        out.push('\n');
        for s in &self.samples {
            let st = &s.state;
            let m = &s.monitors;
            let row = [
                s.t,
                st.x1,
                st.y1,
                st.x2,
                st.y2,
                0.5 * (st.x1 + st.x2),
                0.5 * (st.y1 + st.y2),
                s.q.q1,
                s.q.q2,
                s.elliptic.u,
                s.elliptic.v,
                m.h_rel,
                m.lambda_rel,
                m.kx,
                m.ky,
                m.lz,
            ];
            let cells: Vec<String> = row.iter().map(|&v| fmt17(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// What to integrate and where to sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub t_start: f64,
    /// May lie before `t_start` for a backward run.
    pub t_end: f64,
    pub tol: f64,
    /// Evenly spaced samples including both ends (at least 2).
    pub samples: usize,
    pub collision_radius: f64,
}

impl RunSpec {
    pub fn new(t_end: f64, tol: f64, samples: usize) -> Self {
        RunSpec {
            t_start: 0.0,
            t_end,
            tol,
            samples,
            collision_radius: DEFAULT_COLLISION_RADIUS,
        }
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.samples.max(2);
        let span = self.t_end - self.t_start;
        (0..n)
            .map(|k| {
                if k == n - 1 {
                    self.t_end
                } else {
                    self.t_start + span * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

const EVENT_TOL: f64 = 1e-10;
const EVENT_PROBES: usize = 16;

fn rel_distance(z: &[f64; 8]) -> f64 {
    z[2].hypot(z[3])
}

fn make_sample(t: f64, z: &[f64; 8], cfg: &PhysConfig, reference: Option<&MonitorRecord>) -> Result<Sample> {
    let state = from_split(z);
    let q = crate::coords::rel_to_q(z[2], z[3], cfg);
    let mut m = monitors(&state, cfg)?;
    if let Some(r) = reference {
        m = m.against(r);
    }
    Ok(Sample {
        t,
        state,
        q,
        elliptic: q_to_elliptic(q, cfg),
        monitors: m,
    })
}

/// First time inside `step` where the separation drops below `radius`.
fn locate_event(step: &DenseStep<8>, radius: f64) -> Option<f64> {
    let mut prev = step.t_old;
    for j in 1..=EVENT_PROBES {
        let t = step.t_old + step.h * j as f64 / EVENT_PROBES as f64;
        if rel_distance(&step.eval(t)) < radius {
            let (mut lo, mut hi) = (prev, t);
            while (hi - lo).abs() > EVENT_TOL {
                let mid = 0.5 * (lo + hi);
                if rel_distance(&step.eval(mid)) < radius {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        prev = t;
    }
    None
}

/// Integrates the pair from `ic` at `spec.t_start`.
///
/// Samples are emitted at the evenly spaced times of `spec`, in run order,
/// from the step interpolants. The run stops early at a collision, the
/// first time the separation falls below `spec.collision_radius`; the
/// event time is localized to `1e-10` and appended as the final sample.
pub fn integrate_full(ic: &FullState, cfg: &PhysConfig, spec: &RunSpec) -> Result<Trajectory> {
    if !ic.is_finite() {
        return Err(Error::NonFinite("initial state"));
    }
    let r0 = ic.separation();
    if r0 <= spec.collision_radius {
        return Err(Error::CoulombSingularity(r0));
    }
    let z0 = to_split(ic);
    let times = spec.sample_times();
    let first = make_sample(spec.t_start, &z0, cfg, None)?;
    let reference = first.monitors;
    let mut samples = vec![first];
    let mut next = 1;
    let mut event = None;
    let mut failure: Option<Error> = None;
    let dir = if spec.t_end >= spec.t_start { 1.0 } else { -1.0 };
    let alpha = cfg.alpha;

    let opts = Options::with_tol(spec.tol);
    let result = ode::integrate(
        |_, z: &[f64; 8]| rhs_split(z, alpha),
        spec.t_start,
        z0,
        spec.t_end,
        &opts,
        |step, _| {
            let hit = locate_event(step, spec.collision_radius);
            let limit = hit.unwrap_or(step.t_new());
            while next < times.len() && (times[next] - limit) * dir <= 0.0 {
                match make_sample(times[next], &step.eval(times[next]), cfg, Some(&reference)) {
                    Ok(s) => samples.push(s),
                    Err(e) => {
                        failure = Some(e);
                        return Control::Stop;
                    }
                }
                next += 1;
            }
            if let Some(te) = hit {
                event = Some(te);
                if samples.last().map(|s| s.t) != Some(te) {
                    match make_sample(te, &step.eval(te), cfg, Some(&reference)) {
                        Ok(s) => samples.push(s),
                        Err(e) => failure = Some(e),
                    }
                }
                return Control::Stop;
            }
            Control::Continue
        },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let (termination, steps) = match result {
        Ok(stats) => (
            if event.is_some() {
                Termination::Collision
            } else {
                Termination::TimeLimit
            },
            stats.accepted,
        ),
        Err(Error::StepFailure { t, h }) => {
            // Underflow right at the Coulomb center is an unresolved
            // collision; anywhere else it is an error.
            let near = samples
                .last()
                .map(|s| s.state.separation() < 1e3 * spec.collision_radius)
                .unwrap_or(false);
            if !near {
                return Err(Error::StepFailure { t, h });
            }
            (Termination::StepFailure, 0)
        }
        Err(e) => return Err(e),
    };
    Ok(Trajectory {
        samples,
        termination,
        event_time: event,
        steps,
    })
}

/// Integrates over `[t_min, t_max]` with the initial state given at `t = 0`.
///
/// A negative `t_min` runs a backward leg; the legs are joined in time
/// order and share the `t = 0` reference for the monitors. `samples`
/// counts the points of the whole window.
pub fn integrate_window(
    ic: &FullState,
    cfg: &PhysConfig,
    t_min: f64,
    t_max: f64,
    tol: f64,
    samples: usize,
    collision_radius: f64,
) -> Result<Trajectory> {
    let leg = |t_end: f64, n: usize| {
        let spec = RunSpec {
            t_start: 0.0,
            t_end,
            tol,
            samples: n.max(2),
            collision_radius,
        };
        integrate_full(ic, cfg, &spec)
    };
    if t_min >= 0.0 {
        return leg(t_max, samples);
    }
    let span = t_max - t_min;
    let n = samples.max(3);
    let n_back = ((n - 1) as f64 * (-t_min) / span).round() as usize + 1;
    let n_fwd = n + 1 - n_back;
    let back = leg(t_min, n_back)?;
    let mut out = if t_max > 0.0 {
        leg(t_max, n_fwd)?
    } else {
        Trajectory {
            samples: vec![back.samples[0]],
            termination: Termination::TimeLimit,
            event_time: None,
            steps: 0,
        }
    };
    let mut joined: Vec<Sample> = back.samples.iter().rev().copied().collect();
    joined.extend(out.samples.iter().skip(1).copied());
    out.samples = joined;
    out.steps += back.steps;
    if back.termination != Termination::TimeLimit && out.termination == Termination::TimeLimit {
        out.termination = back.termination;
        out.event_time = back.event_time;
    }
    Ok(out)
}
