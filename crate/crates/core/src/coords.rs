//! Frame transformations.
//!
//! Four frames are in play:
//! * lab: the two particle positions `(x1, y1)`, `(x2, y2)`;
//! * center of mass / relative: `X = (x1 + x2)/2`, `x = x2 - x1` (same for `y`);
//! * the `q` frame: relative coordinates rotated and shifted so that the
//!   oscillator sits at the origin and the Coulomb center at `(-a, 0)`;
//! * Euler elliptic coordinates `(u, v)` with foci `(+-a, 0)` of the `q` frame.

use serde::{Deserialize, Serialize};

use crate::model::{PhysConfig, CHART_CLAMP};

/// Center of mass and relative coordinates of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelState {
    pub x: f64,
    pub y: f64,
    pub cm_x: f64,
    pub cm_y: f64,
}

/// Point of the reduced problem in the oscillator-centered frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QPoint {
    pub q1: f64,
    pub q2: f64,
}

impl QPoint {
    pub const fn new(q1: f64, q2: f64) -> Self {
        QPoint { q1, q2 }
    }

    /// Distance to the Coulomb center `(-a, 0)`.
    pub fn coulomb_distance(&self, cfg: &PhysConfig) -> f64 {
        (self.q1 + cfg.a).hypot(self.q2)
    }

    /// Distance to the second focus `(a, 0)`.
    pub fn focus_distance(&self, cfg: &PhysConfig) -> f64 {
        (self.q1 - cfg.a).hypot(self.q2)
    }
}

/// Euler elliptic coordinates plus the half-plane the point came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticPoint {
    pub u: f64,
    pub v: f64,
    /// Sign of `q2`: `-1`, `0` or `1`.
    pub sign_q2: i8,
}

pub fn split_frames(x1: f64, y1: f64, x2: f64, y2: f64) -> RelState {
    RelState {
        x: x2 - x1,
        y: y2 - y1,
        cm_x: 0.5 * (x1 + x2),
        cm_y: 0.5 * (y1 + y2),
    }
}

/// Rotation part of the affine map into the `q` frame, applied to a vector.
#[inline]
pub fn rotate_to_q(x: f64, y: f64, cfg: &PhysConfig) -> (f64, f64) {
    (
        (cfg.x0 * x - cfg.y0 * y) / cfg.a,
        (cfg.y0 * x + cfg.x0 * y) / cfg.a,
    )
}

/// Inverse rotation, `q` frame vector back to relative coordinates.
#[inline]
pub fn rotate_from_q(w1: f64, w2: f64, cfg: &PhysConfig) -> (f64, f64) {
    (
        (cfg.x0 * w1 + cfg.y0 * w2) / cfg.a,
        (-cfg.y0 * w1 + cfg.x0 * w2) / cfg.a,
    )
}

pub fn rel_to_q(x: f64, y: f64, cfg: &PhysConfig) -> QPoint {
    let (r1, r2) = rotate_to_q(x, y, cfg);
    QPoint {
        q1: r1 - cfg.a,
        q2: r2,
    }
}

pub fn q_to_rel(q: QPoint, cfg: &PhysConfig) -> (f64, f64) {
    rotate_from_q(q.q1 + cfg.a, q.q2, cfg)
}

pub fn q_to_elliptic(q: QPoint, cfg: &PhysConfig) -> EllipticPoint {
    let a = cfg.a;
    let r1 = q.focus_distance(cfg);
    let r2 = q.coulomb_distance(cfg);
    let sign_q2 = if q.q2 > 0.0 {
        1
    } else if q.q2 < 0.0 {
        -1
    } else {
        0
    };
    if r1 <= CHART_CLAMP * a {
        return EllipticPoint { u: 1.0, v: 1.0, sign_q2 };
    }
    if r2 <= CHART_CLAMP * a {
        return EllipticPoint { u: 1.0, v: -1.0, sign_q2 };
    }
    if q.q2 == 0.0 && q.q1.abs() <= a {
        // On the focal segment r1 + r2 = 2a; skip the rounding of the sum.
        return EllipticPoint {
            u: 1.0,
            v: q.q1 / a,
            sign_q2,
        };
    }
    let u = ((r1 + r2) / (2.0 * a)).max(1.0);
    let v = ((r2 - r1) / (2.0 * a)).clamp(-1.0, 1.0);
    EllipticPoint { u, v, sign_q2 }
}

pub fn elliptic_to_q(e: EllipticPoint, cfg: &PhysConfig) -> QPoint {
    let a = cfg.a;
    let prod = ((e.u * e.u - 1.0) * (1.0 - e.v * e.v)).max(0.0);
    QPoint {
        q1: a * e.u * e.v,
        q2: f64::from(e.sign_q2) * a * prod.sqrt(),
    }
}

/// Time derivatives `(du/dt, dv/dt)` of the elliptic coordinates.
///
/// Undefined at the foci, where `None` is returned.
pub fn elliptic_rates(q: QPoint, qdot: (f64, f64), cfg: &PhysConfig) -> Option<(f64, f64)> {
    let a = cfg.a;
    let r1 = q.focus_distance(cfg);
    let r2 = q.coulomb_distance(cfg);
    if r1 <= CHART_CLAMP * a || r2 <= CHART_CLAMP * a {
        return None;
    }
    let dr1 = ((q.q1 - a) * qdot.0 + q.q2 * qdot.1) / r1;
    let dr2 = ((q.q1 + a) * qdot.0 + q.q2 * qdot.1) / r2;
    Some(((dr1 + dr2) / (2.0 * a), (dr2 - dr1) / (2.0 * a)))
}

/// Maps elliptic rates back to `q`-frame velocities.
///
/// Requires a point strictly off the `q1` axis.
pub fn q_velocity_from_elliptic(e: EllipticPoint, rates: (f64, f64), cfg: &PhysConfig) -> Option<(f64, f64)> {
    let a = cfg.a;
    let (u, v) = (e.u, e.v);
    let (du, dv) = rates;
    let s = (u * u - 1.0) * (1.0 - v * v);
    if s <= 0.0 || e.sign_q2 == 0 {
        return None;
    }
    let q1dot = a * (du * v + u * dv);
    let q2dot = f64::from(e.sign_q2) * a * (u * du * (1.0 - v * v) - v * dv * (u * u - 1.0)) / s.sqrt();
    Some((q1dot, q2dot))
}

/// Particle positions `(x1, y1, x2, y2)` from the center of mass and a `q`-frame point.
pub fn reconstruct_particles(cm_x: f64, cm_y: f64, q: QPoint, cfg: &PhysConfig) -> (f64, f64, f64, f64) {
    let (x0, y0, a) = (cfg.x0, cfg.y0, cfg.a);
    let dx = (x0 * (a + q.q1) + y0 * q.q2) / (2.0 * a);
    let dy = (y0 * (a + q.q1) - x0 * q.q2) / (2.0 * a);
    (cm_x - dx, cm_y + dy, cm_x + dx, cm_y - dy)
}
