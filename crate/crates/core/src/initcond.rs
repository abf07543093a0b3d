//! Initial conditions for the two-particle system.
//!
//! A point `q(0)` of the reduced problem and the pair `(h, lambda)` fix the
//! relative velocity up to four choices. Each choice, together with the
//! center of mass position, gives one full state of the pair.

use serde::{Deserialize, Serialize};

use crate::coords::{rel_to_q, reconstruct_particles, rotate_to_q, split_frames, QPoint};
use crate::error::{Error, Result};
use crate::model::{MotionConstants, PhysConfig, CHART_CLAMP};
use crate::quartic::{p4_roots, QuarticParams};

/// Positions and velocities of positron (1) and electron (2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub vx1: f64,
    pub vy1: f64,
    pub vx2: f64,
    pub vy2: f64,
}

impl FullState {
    pub fn separation(&self) -> f64 {
        (self.x2 - self.x1).hypot(self.y2 - self.y1)
    }

    pub fn to_array(&self) -> [f64; 8] {
        [self.x1, self.y1, self.x2, self.y2, self.vx1, self.vy1, self.vx2, self.vy2]
    }

    pub fn from_array(s: &[f64; 8]) -> Self {
        FullState {
            x1: s[0],
            y1: s[1],
            x2: s[2],
            y2: s[3],
            vx1: s[4],
            vy1: s[5],
            vx2: s[6],
            vy2: s[7],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityBranch {
    pub qdot1: f64,
    pub qdot2: f64,
    pub branch_index: usize,
    pub residual_h: f64,
    pub residual_lambda: f64,
}

/// Reduced-problem data carried by a full state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub q: QPoint,
    pub qdot: (f64, f64),
    pub cm_x: f64,
    pub cm_y: f64,
}

/// `H` and `Lambda` of the reduced problem in `q`-frame Cartesian form.
///
/// `Lambda = (L^2 / a^2 + qdot1^2) / 2 + q1^2 / 2 + alpha q1 / (a r2)` with
/// `L = q2 qdot1 - q1 qdot2`; the `1 / a^2` makes it commute with `H` for any
/// offset, and drops out at `a = 1`.
pub fn cartesian_invariants(q: QPoint, qdot1: f64, qdot2: f64, cfg: &PhysConfig) -> Result<(f64, f64)> {
    let r2 = q.coulomb_distance(cfg);
    if r2 == 0.0 {
        return Err(Error::CoulombSingularity(r2));
    }
    let a = cfg.a;
    let h = 0.5 * (qdot1 * qdot1 + qdot2 * qdot2) + 0.5 * (q.q1 * q.q1 + q.q2 * q.q2) - cfg.alpha / r2;
    let l = q.q2 * qdot1 - q.q1 * qdot2;
    let lambda = 0.5 * (l * l / (a * a) + qdot1 * qdot1) + 0.5 * q.q1 * q.q1 + cfg.alpha * q.q1 / (a * r2);
    Ok((h, lambda))
}

fn residual_ok(res: f64, target: f64) -> bool {
    res.abs() <= 1e-9 * target.abs().max(1.0)
}

/// All velocity pairs compatible with `(h, lambda)` at `q`.
///
/// The invariants read `w1^2 + w2^2 = E` and `A w1^2 + B w1 w2 + C w2^2 = M`.
/// Eliminating `w2` leaves a quartic in `w1` without odd terms, solved with
/// the general quartic solver; `w2` is then recovered by sign selection and
/// the pair is Newton-polished on the original system. Points outside the
/// allowed region give an empty list.
pub fn velocity_branches(q: QPoint, mc: &MotionConstants, cfg: &PhysConfig) -> Result<Vec<VelocityBranch>> {
    let r2 = q.coulomb_distance(cfg);
    if r2 <= CHART_CLAMP * cfg.a {
        return Err(Error::CoulombSingularity(r2));
    }
    if q.focus_distance(cfg) <= CHART_CLAMP * cfg.a {
        return Err(Error::FocalPoint);
    }
    let a2 = cfg.a * cfg.a;
    let pot = 0.5 * (q.q1 * q.q1 + q.q2 * q.q2) - cfg.alpha / r2;
    let e = 2.0 * (mc.h - pot);
    if e < 0.0 {
        return Ok(Vec::new());
    }
    let m = 2.0 * mc.lambda - q.q1 * q.q1 - 2.0 * cfg.alpha * q.q1 / (cfg.a * r2);
    let ca = q.q2 * q.q2 / a2 + 1.0;
    let cb = -2.0 * q.q1 * q.q2 / a2;
    let cc = q.q1 * q.q1 / a2;

    let d = ca - cc;
    let k = cc * e - m;
    let c2 = d * d + cb * cb;
    let c1 = 2.0 * d * k - cb * cb * e;
    let c0 = k * k;
    let roots = p4_roots(&QuarticParams::new(c1 / c2, 0.0, c0 / c2));

    let f = |w1: f64, w2: f64| (w1 * w1 + w2 * w2 - e, ca * w1 * w1 + cb * w1 * w2 + cc * w2 * w2 - m);
    let scale = e.abs() + m.abs() + 1.0;
    let mut found: Vec<(f64, f64)> = Vec::new();
    for &w1 in &roots.real_roots {
        let w2abs = (e - w1 * w1).max(0.0).sqrt();
        for w2 in [w2abs, -w2abs] {
            let (mut p1, mut p2) = (w1, w2);
            if f(p1, p2).1.abs() > 1e-6 * scale {
                continue;
            }
            for _ in 0..8 {
                let (g1, g2) = f(p1, p2);
                let j11 = 2.0 * p1;
                let j12 = 2.0 * p2;
                let j21 = 2.0 * ca * p1 + cb * p2;
                let j22 = cb * p1 + 2.0 * cc * p2;
                let det = j11 * j22 - j12 * j21;
                if det.abs() <= 1e-14 * scale {
                    break;
                }
                let s1 = (g1 * j22 - g2 * j12) / det;
                let s2 = (j11 * g2 - j21 * g1) / det;
                p1 -= s1;
                p2 -= s2;
                if s1.abs().max(s2.abs()) <= 1e-15 * scale {
                    break;
                }
            }
            // On a caustic two branches coincide and the polished pair only
            // resolves to about sqrt(eps); merge when the midpoint still
            // solves the system.
            let same = |x: f64, y: f64| {
                let d = (x - p1).hypot(y - p2);
                if d < 1e-8 {
                    return true;
                }
                let (g1, g2) = f(0.5 * (x + p1), 0.5 * (y + p2));
                d < 1e-6 && g1.abs().max(g2.abs()) <= 1e-12 * scale
            };
            if let Some(k) = found.iter().position(|&(x, y)| same(x, y)) {
                let (x, y) = found[k];
                if (x - p1).hypot(y - p2) >= 1e-8 {
                    found[k] = (0.5 * (x + p1), 0.5 * (y + p2));
                }
            } else {
                found.push((p1, p2));
            }
        }
    }
    found.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));

    let mut out = Vec::with_capacity(found.len());
    for (w1, w2) in found {
        let (h, lambda) = cartesian_invariants(q, w1, w2, cfg)?;
        let (rh, rl) = (h - mc.h, lambda - mc.lambda);
        if residual_ok(rh, mc.h) && residual_ok(rl, mc.lambda) {
            out.push(VelocityBranch {
                qdot1: w1,
                qdot2: w2,
                branch_index: out.len(),
                residual_h: rh,
                residual_lambda: rl,
            });
        }
    }
    Ok(out)
}

/// Full state from the center of mass position, `q(0)` and a relative velocity.
pub fn build_full_state(cm_x: f64, cm_y: f64, q: QPoint, branch: &VelocityBranch, cfg: &PhysConfig) -> FullState {
    full_state_from_velocity(cm_x, cm_y, q, (branch.qdot1, branch.qdot2), cfg)
}

pub fn full_state_from_velocity(cm_x: f64, cm_y: f64, q: QPoint, qdot: (f64, f64), cfg: &PhysConfig) -> FullState {
    let (x1, y1, x2, y2) = reconstruct_particles(cm_x, cm_y, q, cfg);
    let (x0, y0) = (cfg.x0, cfg.y0);
    let k = 1.0 / (2.0 * cfg.a);
    let (q1, q2) = (q.q1, q.q2);
    let (w1, w2) = qdot;
    FullState {
        x1,
        y1,
        x2,
        y2,
        vx1: k * (x0 * (q2 - w1) - y0 * (q1 + w2)),
        vy1: -k * (x0 * (q1 + w2) + y0 * (q2 - w1)),
        vx2: k * (x0 * (q2 + w1) - y0 * (q1 - w2)),
        vy2: -k * (x0 * (q1 - w2) + y0 * (q2 + w1)),
    }
}

/// Inverse of [`full_state_from_velocity`]: `q`, `qdot` and the center of mass.
pub fn reduce_state(s: &FullState, cfg: &PhysConfig) -> ReducedState {
    let rel = split_frames(s.x1, s.y1, s.x2, s.y2);
    let q = rel_to_q(rel.x, rel.y, cfg);
    let qdot = rotate_to_q(s.vx2 - s.vx1, s.vy2 - s.vy1, cfg);
    ReducedState {
        q,
        qdot,
        cm_x: rel.cm_x,
        cm_y: rel.cm_y,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::allowed_intervals;
    use crate::coords::q_to_rel;
    use crate::coords::{q_to_elliptic, q_velocity_from_elliptic};
    use crate::model::derive_config;
    use crate::quartic::p6_eval;

    const THIRD: f64 = 1.0 / 3.0;

    fn cfg01() -> PhysConfig {
        derive_config(THIRD, 0.0, 1.0).unwrap()
    }

    #[test]
    fn invariants_at_reference_point() {
        let (h, l) = cartesian_invariants(QPoint::new(-1.04, 0.06), -2.28, -0.97, &cfg01()).unwrap();
        assert!((h + 1.0).abs() < 0.05, "h = {h}");
        assert!((l + 1.0).abs() < 0.05, "lambda = {l}");
    }

    #[test]
    fn invariants_at_rest() {
        let (h, l) = cartesian_invariants(QPoint::new(1.0, 0.0), 0.0, 0.0, &cfg01()).unwrap();
        assert!((h - (0.5 - 1.0 / 6.0)).abs() < 1e-15);
        assert!((l - 2.0 / 3.0).abs() < 1e-15);
        let (_, l) = cartesian_invariants(QPoint::new(0.0, 0.7), 0.0, 0.0, &cfg01()).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(
            cartesian_invariants(QPoint::new(-1.0, 0.0), 0.0, 0.0, &cfg01()),
            Err(Error::CoulombSingularity(0.0))
        );
    }

    #[test]
    fn reference_branches() {
        let cfg = cfg01();
        let mc = MotionConstants::from_scaled(-1.0, -1.0, &cfg);
        let bs = velocity_branches(QPoint::new(-1.04, 0.06), &mc, &cfg).unwrap();
        assert_eq!(bs.len(), 4);
        assert!(bs.iter().any(|b| (b.qdot1 + 2.28).hypot(b.qdot2 + 0.97) < 0.05), "{bs:?}");
        for (i, b) in bs.iter().enumerate() {
            assert_eq!(b.branch_index, i);
        }
    }

    #[test]
    fn planetary_point_has_four_branches() {
        let cfg = cfg01();
        let mc = MotionConstants::from_scaled(1.6, 2.2, &cfg);
        assert_eq!(velocity_branches(QPoint::new(0.5, 1.0), &mc, &cfg).unwrap().len(), 4);
    }

    #[test]
    fn outside_region_is_empty() {
        let cfg = cfg01();
        let mc = MotionConstants::from_scaled(1.6, 2.2, &cfg);
        // Far outside the outer ellipse: h below the potential.
        assert!(velocity_branches(QPoint::new(0.0, 3.0), &mc, &cfg).unwrap().is_empty());
        // Inside the inner ellipse: energy allows motion but lambda does not.
        assert!(velocity_branches(QPoint::new(0.0, 0.2), &mc, &cfg).unwrap().is_empty());
        assert_eq!(
            velocity_branches(QPoint::new(1.0, 0.0), &mc, &cfg),
            Err(Error::FocalPoint)
        );
    }

    #[test]
    fn caustic_point_has_two_branches() {
        let cfg = cfg01();
        let mc = MotionConstants::from_scaled(2.0, 0.5, &cfg);
        let iv = allowed_intervals(&mc, &cfg);
        let u_c = iv.u_intervals[0].hi;
        let v = 0.0;
        let q = crate::coords::elliptic_to_q(crate::coords::EllipticPoint { u: u_c, v, sign_q2: 1 }, &cfg);
        let bs = velocity_branches(q, &mc, &cfg).unwrap();
        assert_eq!(bs.len(), 2, "{bs:?}");
        // The velocity is tangent to the ellipse: no normal component.
        for b in bs {
            let (du, _) = crate::coords::elliptic_rates(q, (b.qdot1, b.qdot2), &cfg).unwrap();
            assert!(du.abs() < 1e-6, "du = {du}");
        }
    }

    #[test]
    fn coincident_particles_at_coulomb_center() {
        let cfg = cfg01();
        let s = full_state_from_velocity(0.3, -0.2, QPoint::new(-1.0, 0.0), (1.0, 2.0), &cfg);
        assert_eq!((s.x1, s.y1), (0.3, -0.2));
        assert_eq!((s.x2, s.y2), (0.3, -0.2));
        assert_eq!(s.separation(), 0.0);
    }

    #[test]
    fn velocity_formulas_match_differentiation() {
        // Particle velocities are CM velocity -+ half the relative velocity,
        // with the CM velocity from the magnetic translation constants.
        let cfg = derive_config(0.7, 0.6, -1.3).unwrap();
        let q = QPoint::new(0.3, -0.4);
        let (w1, w2) = (0.9, -1.7);
        let s = full_state_from_velocity(0.0, 0.0, q, (w1, w2), &cfg);
        let (x, y) = q_to_rel(q, &cfg);
        let (vx, vy) = crate::coords::rotate_from_q(w1, w2, &cfg);
        let (cx, cy) = (0.5 * (y + cfg.y0), 0.5 * (-x + cfg.x0));
        assert!((s.vx1 - (cx - 0.5 * vx)).abs() < 1e-15);
        assert!((s.vy1 - (cy - 0.5 * vy)).abs() < 1e-15);
        assert!((s.vx2 - (cx + 0.5 * vx)).abs() < 1e-15);
        assert!((s.vy2 - (cy + 0.5 * vy)).abs() < 1e-15);
    }

    #[test]
    fn opposite_branches_swap_particles_under_inversion() {
        let cfg = cfg01();
        let mc = MotionConstants::from_scaled(-1.0, -1.0, &cfg);
        let q = QPoint::new(-1.04, 0.06);
        let bs = velocity_branches(q, &mc, &cfg).unwrap();
        let states: Vec<FullState> = bs.iter().map(|b| build_full_state(0.0, 0.0, q, b, &cfg)).collect();
        for (i, b) in bs.iter().enumerate() {
            let j = bs
                .iter()
                .position(|c| (c.qdot1 + b.qdot1).hypot(c.qdot2 + b.qdot2) < 1e-9)
                .expect("branch set closed under negation");
            let (s, t) = (states[i], states[j]);
            // Interchange, invert positions about the CM, keep velocities
            // (inversion combined with time reversal).
            assert!((t.x1 + s.x2).abs() < 1e-14 && (t.y1 + s.y2).abs() < 1e-14);
            assert!((t.vx1 - s.vx2).abs() < 1e-14 && (t.vy1 - s.vy2).abs() < 1e-14);
        }
    }

    /// Elliptic-coordinate route: each coordinate moves with
    /// `du/dt = +-sqrt(P6(u)) / (u^2 - v^2)`, independently of the
    /// Cartesian elimination.
    fn branches_via_elliptic(q: QPoint, mc: &MotionConstants, cfg: &PhysConfig) -> Vec<(f64, f64)> {
        let e = q_to_elliptic(q, cfg);
        let qp = QuarticParams::from_constants(mc, cfg);
        let fu = p6_eval(e.u, &qp);
        let fv = p6_eval(e.v, &qp);
        if fu < 0.0 || fv < 0.0 {
            return Vec::new();
        }
        let den = e.u * e.u - e.v * e.v;
        let mut out = Vec::new();
        for su in [-1.0, 1.0] {
            for sv in [-1.0, 1.0] {
                let rates = (su * fu.sqrt() / den, sv * fv.sqrt() / den);
                if let Some(w) = q_velocity_from_elliptic(e, rates, cfg) {
                    out.push(w);
                }
            }
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        out
    }

    #[test]
    fn elliptic_route_agrees_at_reference_points() {
        for &(h, l, q1, q2, x0, y0) in &[
            (-1.0, -1.0, -1.04, 0.06, 0.0, 1.0),
            (1.6, 2.2, 0.5, 1.0, 0.0, 1.0),
            (2.0, 0.5, 0.1, 1.0, 0.0, 1.0),
            (2.0, 0.5, 0.2, 2.0, 0.6, 1.7),
        ] {
            let cfg = PhysConfig::from_scaled(THIRD, x0, y0).unwrap();
            let mc = MotionConstants::from_scaled(h, l, &cfg);
            let q = QPoint::new(q1 * cfg.a, q2 * cfg.a);
            let a: Vec<(f64, f64)> = velocity_branches(q, &mc, &cfg).unwrap().iter().map(|b| (b.qdot1, b.qdot2)).collect();
            let b = branches_via_elliptic(q, &mc, &cfg);
            assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
            for (x, y) in a.iter().zip(&b) {
                assert!((x.0 - y.0).abs() < 1e-8 && (x.1 - y.1).abs() < 1e-8, "{x:?} vs {y:?}");
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn branches_reproduce_invariants(h in -2.0..3.0f64, l in -2.0..4.0f64,
                                             x0 in -2.0..2.0f64, y0 in 0.2..2.0f64,
                                             s in 0.01..0.99f64, t in 0.01..0.99f64, up in proptest::bool::ANY) {
                let cfg = PhysConfig::from_scaled(THIRD, x0, y0).unwrap();
                let mc = MotionConstants::from_scaled(h, l, &cfg);
                let iv = allowed_intervals(&mc, &cfg);
                if iv.is_forbidden() {
                    return Ok(());
                }
                let ui = iv.u_intervals[0];
                let vi = iv.v_intervals[0];
                let e = crate::coords::EllipticPoint {
                    u: ui.lo + s * (ui.hi - ui.lo),
                    v: vi.lo + t * (vi.hi - vi.lo),
                    sign_q2: if up { 1 } else { -1 },
                };
                let q = crate::coords::elliptic_to_q(e, &cfg);
                if q.coulomb_distance(&cfg) < 1e-6 || q.focus_distance(&cfg) < 1e-6 {
                    return Ok(());
                }
                let bs = velocity_branches(q, &mc, &cfg).unwrap();
                for b in &bs {
                    prop_assert!(residual_ok(b.residual_h, mc.h));
                    prop_assert!(residual_ok(b.residual_lambda, mc.lambda));
                }
                // Negating time maps the branch set to itself.
                for b in &bs {
                    prop_assert!(bs.iter().any(|c| (c.qdot1 + b.qdot1).hypot(c.qdot2 + b.qdot2) < 1e-7));
                }
                let oracle = branches_via_elliptic(q, &mc, &cfg);
                let dist = |x: &(f64, f64), y: &(f64, f64)| (x.0 - y.0).hypot(x.1 - y.1);
                let sc = 1e-6 * (1.0 + mc.h.abs()).sqrt();
                for b in &bs {
                    prop_assert!(oracle.iter().any(|o| dist(o, &(b.qdot1, b.qdot2)) < sc), "{:?} not in {:?}", b, oracle);
                }
                for o in &oracle {
                    prop_assert!(bs.iter().any(|b| dist(o, &(b.qdot1, b.qdot2)) < sc), "{:?} missing from {:?}", o, bs);
                }
            }

            #[test]
            fn reduce_inverts_build(x0 in -2.0..2.0f64, y0 in 0.2..2.0f64, cx in -3.0..3.0f64, cy in -3.0..3.0f64,
                                    q1 in -3.0..3.0f64, q2 in -3.0..3.0f64, w1 in -3.0..3.0f64, w2 in -3.0..3.0f64) {
                let cfg = PhysConfig::from_scaled(THIRD, x0, y0).unwrap();
                let s = full_state_from_velocity(cx, cy, QPoint::new(q1, q2), (w1, w2), &cfg);
                let r = reduce_state(&s, &cfg);
                let tol = 1e-12 * (1.0 + cfg.a + q1.abs() + q2.abs() + w1.abs() + w2.abs() + cx.abs() + cy.abs());
                prop_assert!((r.q.q1 - q1).abs() < tol && (r.q.q2 - q2).abs() < tol);
                prop_assert!((r.qdot.0 - w1).abs() < tol && (r.qdot.1 - w2).abs() < tol);
                prop_assert!((r.cm_x - cx).abs() < tol && (r.cm_y - cy).abs() < tol);
            }
        }
    }
}
