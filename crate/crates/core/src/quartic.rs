//! The characteristic quartic `P4(z) = z^4 - (1 + 2 h_a) z^2 - 2 alpha_a z + 2 lambda_a`.
//!
//! Both separated equations share `P6(z) = (1 - z^2) P4(z)`: the `u` motion
//! lives where `P4 <= 0` on `[1, inf)` and the `v` motion where `P4 >= 0`
//! on `[-1, 1]`. Roots are found for the general depressed quartic
//! `z^4 + p z^2 + q z + r`, which the velocity-branch solver reuses.

use serde::{Deserialize, Serialize};

use crate::model::{MotionConstants, PhysConfig};

/// Coefficients of a depressed monic quartic `z^4 + p z^2 + q z + r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticParams {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl QuarticParams {
    pub fn new(p: f64, q: f64, r: f64) -> Self {
        QuarticParams { p, q, r }
    }

    /// The characteristic quartic at diagram point `(h_a, lambda_a)`.
    pub fn characteristic(h_a: f64, lambda_a: f64, alpha_a: f64) -> Self {
        QuarticParams {
            p: -(1.0 + 2.0 * h_a),
            q: -2.0 * alpha_a,
            r: 2.0 * lambda_a,
        }
    }

    pub fn from_constants(mc: &MotionConstants, cfg: &PhysConfig) -> Self {
        Self::characteristic(mc.h_a, mc.lambda_a, cfg.alpha_a)
    }

    fn scale(&self) -> f64 {
        1.0f64.max(self.p.abs() + self.q.abs() + self.r.abs())
    }
}

/// Real roots (with multiplicity) and complex pairs of a quartic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub real_roots: Vec<f64>,
    pub n_complex_pairs: usize,
    /// `(re, im)` with `im > 0`, one entry per conjugate pair.
    pub complex_pairs: Vec<(f64, f64)>,
    /// `|P4(root)|` for every real root.
    pub residuals: Vec<f64>,
}

impl RootSet {
    /// Smallest distance between any two roots, counting conjugates.
    pub fn min_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for w in self.real_roots.windows(2) {
            gap = gap.min(w[1] - w[0]);
        }
        for &(_, im) in &self.complex_pairs {
            gap = gap.min(2.0 * im);
        }
        for (i, &(re1, im1)) in self.complex_pairs.iter().enumerate() {
            for &(re2, im2) in &self.complex_pairs[i + 1..] {
                gap = gap.min((re1 - re2).hypot(im1 - im2));
            }
        }
        gap
    }

    pub fn has_multiple_root(&self, threshold: f64) -> bool {
        self.min_gap() < threshold
    }
}

pub fn p4_eval(z: f64, qp: &QuarticParams) -> f64 {
    let z2 = z * z;
    (z2 + qp.p) * z2 + qp.q * z + qp.r
}

fn p4_deriv(z: f64, qp: &QuarticParams) -> f64 {
    (4.0 * z * z + 2.0 * qp.p) * z + qp.q
}

/// `P6(z) = (1 - z^2) P4(z)`, the right-hand side of both separated equations.
pub fn p6_eval(z: f64, qp: &QuarticParams) -> f64 {
    (1.0 - z * z) * p4_eval(z, qp)
}

/// Derivative of [`p6_eval`].
pub fn p6_deriv(z: f64, qp: &QuarticParams) -> f64 {
    -2.0 * z * p4_eval(z, qp) + (1.0 - z * z) * p4_deriv(z, qp)
}

/// Bound on the rounding error of evaluating `P4` at `z`.
fn eval_noise(z: f64, qp: &QuarticParams) -> f64 {
    let az = z.abs();
    32.0 * f64::EPSILON * (az.powi(4) + qp.p.abs() * az * az + qp.q.abs() * az + qp.r.abs())
}

/// Real roots of the monic cubic `z^3 + a z^2 + b z + c`, ascending, with multiplicity.
pub fn cubic_real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    // Depress: z = t - a/3.
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let mut roots = if p == 0.0 && q == 0.0 {
        vec![0.0; 3]
    } else {
        let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
        if disc > 0.0 {
            let sd = disc.sqrt();
            let u = (-q / 2.0 + sd).cbrt();
            let v = (-q / 2.0 - sd).cbrt();
            vec![u + v]
        } else {
            // Three real roots (possibly repeated): trigonometric form.
            let m = 2.0 * (-p / 3.0).sqrt();
            let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
            let theta = arg.acos() / 3.0;
            (0..3)
                .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
                .collect()
        }
    };
    for t in roots.iter_mut() {
        // Newton polish in the depressed variable.
        for _ in 0..4 {
            let f = (*t * *t + p) * *t + q;
            let d = 3.0 * *t * *t + p;
            if d == 0.0 {
                break;
            }
            let step = f / d;
            if !step.is_finite() {
                break;
            }
            *t -= step;
            if step.abs() <= 1e-16 * t.abs().max(1e-300) {
                break;
            }
        }
        *t -= shift;
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots
}

/// Root of a strictly monotone piece `[lo, hi]` with `f(lo)`, `f(hi)` of opposite sign.
fn bracketed_root(qp: &QuarticParams, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = p4_eval(lo, qp);
    let mut z = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = p4_eval(z, qp);
        if f == 0.0 {
            return z;
        }
        if (f < 0.0) == (flo < 0.0) {
            lo = z;
            flo = f;
        } else {
            hi = z;
        }
        let d = p4_deriv(z, qp);
        let newton = z - f / d;
        let next = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - z).abs() <= 2.0 * f64::EPSILON * z.abs().max(f64::MIN_POSITIVE) || hi - lo <= f64::EPSILON * z.abs() {
            return next;
        }
        z = next;
    }
    z
}

/// All roots of the depressed quartic.
///
/// Real roots are isolated between the critical points of `P4` (the roots
/// of the cubic `P4'`), where `P4` is monotone, and refined by guarded
/// Newton iteration. A critical point where `P4` vanishes to rounding is a
/// multiple root. Complex pairs come from deflation or, when no real root
/// exists, from the Ferrari factorization.
pub fn p4_roots(qp: &QuarticParams) -> RootSet {
    let crit = cubic_real_roots(0.0, qp.p / 2.0, qp.q / 4.0);

    // Group coincident critical points.
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for &c in &crit {
        match groups.last_mut() {
            Some((g, m)) if (c - *g).abs() <= 1e-7 * c.abs().max(1.0) => {
                *g = (*g * *m as f64 + c) / (*m as f64 + 1.0);
                *m += 1;
            }
            _ => groups.push((c, 1)),
        }
    }

    let bound = 1.0 + qp.p.abs().max(qp.q.abs()).max(qp.r.abs());
    let mut knots: Vec<(f64, f64)> = Vec::with_capacity(groups.len() + 2);
    knots.push((-bound, p4_eval(-bound, qp)));
    let mut real = Vec::with_capacity(4);
    for &(c, mult) in &groups {
        let v = p4_eval(c, qp);
        if v.abs() <= eval_noise(c, qp) {
            for _ in 0..(mult + 1) {
                real.push(c);
            }
            knots.push((c, 0.0));
        } else {
            knots.push((c, v));
        }
    }
    knots.push((bound, p4_eval(bound, qp)));

    for w in knots.windows(2) {
        let ((lo, flo), (hi, fhi)) = (w[0], w[1]);
        if flo != 0.0 && fhi != 0.0 && (flo < 0.0) != (fhi < 0.0) {
            real.push(bracketed_root(qp, lo, hi));
        }
    }
    real.truncate(4);
    real.sort_by(|x, y| x.total_cmp(y));

    let complex_pairs = match real.len() {
        4 => Vec::new(),
        2 => {
            let (r1, r2) = (real[0], real[1]);
            let b = r1 + r2;
            let c = qp.p - r1 * r2 + b * b;
            quadratic_complex(b, c)
        }
        0 => ferrari_pairs(qp),
        // A lone real root can only come from rounding at a triple-root
        // configuration; report the rest as one pair near it.
        _ => {
            let s: f64 = real.iter().sum();
            let re = -s / (4 - real.len()) as f64;
            vec![(re, 0.0); (4 - real.len()) / 2]
        }
    };
    let residuals = real.iter().map(|&z| p4_eval(z, qp).abs()).collect();
    RootSet {
        n_complex_pairs: (4 - real.len()) / 2,
        real_roots: real,
        complex_pairs,
        residuals,
    }
}

/// Complex roots of `z^2 + b z + c` (assumed to have non-positive discriminant).
fn quadratic_complex(b: f64, c: f64) -> Vec<(f64, f64)> {
    let disc = 4.0 * c - b * b;
    vec![(-b / 2.0, 0.5 * disc.max(0.0).sqrt())]
}

fn ferrari_pairs(qp: &QuarticParams) -> Vec<(f64, f64)> {
    let QuarticParams { p, q, r } = *qp;
    // (z^2 + y)^2 = (2y - p) z^2 - q z + (y^2 - r) is a square when
    // 8y^3 - 4p y^2 - 8r y + 4pr - q^2 = 0.
    let ys = cubic_real_roots(-p / 2.0, -r, (4.0 * p * r - q * q) / 8.0);
    let y = *ys.last().expect("cubic has a real root");
    let s2 = 2.0 * y - p;
    if s2 <= 1e-14 * qp.scale() {
        // Biquadratic: z^2 = w with w complex.
        let disc = p * p - 4.0 * r;
        if disc >= 0.0 {
            // Both w negative: purely imaginary roots.
            let sd = disc.sqrt();
            let w1 = (-p + sd) / 2.0;
            let w2 = (-p - sd) / 2.0;
            return vec![(0.0, (-w1).max(0.0).sqrt()), (0.0, (-w2).max(0.0).sqrt())];
        }
        // w = wr +- i wi, sqrt gives +-(a + i b).
        let (wr, wi) = (-p / 2.0, (-disc).sqrt() / 2.0);
        let m = wr.hypot(wi);
        let ar = ((m + wr) / 2.0).sqrt();
        let ai = ((m - wr) / 2.0).sqrt();
        return vec![(ar, ai), (-ar, ai)];
    }
    let s = s2.sqrt();
    let t = q / (2.0 * s);
    let mut out = quadratic_complex(-s, y + t);
    out.extend(quadratic_complex(s, y - t));
    out
}

/// Discriminant of `z^4 + p z^2 + q z + r`.
pub fn discriminant(qp: &QuarticParams) -> f64 {
    let QuarticParams { p, q, r } = *qp;
    let p2 = p * p;
    let q2 = q * q;
    16.0 * p2 * p2 * r - 4.0 * p2 * p * q2 - 128.0 * p2 * r * r + 144.0 * p * q2 * r - 27.0 * q2 * q2
        + 256.0 * r * r * r
}

/// Signed distances to the two straight boundary lines of the diagram:
/// `l1 = h_a + alpha_a - lambda_a` (root at `+1`) and
/// `l2 = h_a - alpha_a - lambda_a` (root at `-1`).
pub fn boundary_lines(mc: &MotionConstants, cfg: &PhysConfig) -> (f64, f64) {
    lines_at(mc.h_a, mc.lambda_a, cfg.alpha_a)
}

pub fn lines_at(h_a: f64, lambda_a: f64, alpha_a: f64) -> (f64, f64) {
    (h_a + alpha_a - lambda_a, h_a - alpha_a - lambda_a)
}
