//! Orbit classification on the bifurcation diagram.
//!
//! A parameter point `(h_a, lambda_a)` is sorted by the shape of its allowed
//! intervals: `u` ranges where `P4 <= 0` on `[1, inf)`, `v` where `P4 >= 0`
//! on `[-1, 1]`. The root orderings of the seven orbit types translate into
//! interval structure as follows (`n` = number of real roots below `-1`):
//!
//! | roots of `P4`                        | u                | v                     | label        |
//! |--------------------------------------|------------------|-----------------------|--------------|
//! | `-1 < r3 < 1 < r4`, pair complex      | `[1, r4]`        | `[-1, r3]`            | `t_s1`       |
//! | `r1 < r2 < -1 < r3 < 1 < r4`          | `[1, r4]`        | `[-1, r3]`            | `t_s2`       |
//! | `-1 < r1 < r2 < r3 < 1 < r4`          | `[1, r4]`        | `[-1, r1]`, `[r2, r3]`| `t_s3`/`t_m2`|
//! | `1 < r3 < r4`, pair complex           | `[r3, r4]`       | `[-1, 1]`             | `t_p1`       |
//! | `r1 < r2 < -1 < 1 < r3 < r4`          | `[r3, r4]`       | `[-1, 1]`             | `t_p2`       |
//! | `r1 < -1 < r2 < r3 < 1 < r4`          | `[1, r4]`        | `[r2, r3]`            | `t_m1`       |
//!
//! So a `u` interval touching 1 with a `v` interval touching -1 is
//! satellitary, a `u` interval away from 1 is planetary, a `u` interval
//! touching 1 with an interior `v` interval is oscillatory, and two `v`
//! components are the shared `t_s3`/`t_m2` region. `n` picks the subtype.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MotionConstants, PhysConfig, LINE_BAND, ROOT_GAP};
use crate::quartic::{discriminant, lines_at, p4_eval, p4_roots, QuarticParams, RootSet};

/// Closed interval; `*_fixed` marks an endpoint at the chart boundary `+-1`
/// rather than at a root of `P4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_fixed: bool,
    pub hi_fixed: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AllowedIntervals {
    pub u_intervals: Vec<Interval>,
    pub v_intervals: Vec<Interval>,
}

impl AllowedIntervals {
    pub fn is_forbidden(&self) -> bool {
        self.u_intervals.is_empty() || self.v_intervals.is_empty()
    }

    pub fn contains(&self, u: f64, v: f64, slack: f64) -> bool {
        let inside = |ivs: &[Interval], z: f64| ivs.iter().any(|iv| z >= iv.lo - slack && z <= iv.hi + slack);
        inside(&self.u_intervals, u) && inside(&self.v_intervals, v)
    }

    fn u_touches_one(&self) -> bool {
        self.u_intervals.iter().any(|iv| iv.lo_fixed)
    }

    fn v_touches_minus_one(&self) -> bool {
        self.v_intervals.iter().any(|iv| iv.lo_fixed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OrbitLabel {
    #[serde(rename = "t_s1")]
    Ts1,
    #[serde(rename = "t_s2")]
    Ts2,
    #[serde(rename = "t_s3")]
    Ts3,
    #[serde(rename = "t_p1")]
    Tp1,
    #[serde(rename = "t_p2")]
    Tp2,
    #[serde(rename = "t_m1")]
    Tm1,
    #[serde(rename = "t_m2")]
    Tm2,
    #[serde(rename = "forbidden")]
    Forbidden,
    #[serde(rename = "boundary")]
    Boundary,
}

impl OrbitLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            OrbitLabel::Ts1 => "t_s1",
            OrbitLabel::Ts2 => "t_s2",
            OrbitLabel::Ts3 => "t_s3",
            OrbitLabel::Tp1 => "t_p1",
            OrbitLabel::Tp2 => "t_p2",
            OrbitLabel::Tm1 => "t_m1",
            OrbitLabel::Tm2 => "t_m2",
            OrbitLabel::Forbidden => "forbidden",
            OrbitLabel::Boundary => "boundary",
        }
    }

    pub fn is_satellitary(self) -> bool {
        matches!(self, OrbitLabel::Ts1 | OrbitLabel::Ts2 | OrbitLabel::Ts3)
    }
}

impl fmt::Display for OrbitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Joins a label set as it appears in CSV output, e.g. `t_s3+t_m2`.
pub fn join_labels(labels: &[OrbitLabel]) -> String {
    labels.iter().map(|l| l.as_str()).collect::<Vec<_>>().join("+")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CausticKind {
    Ellipse,
    Hyperbola,
}

/// Caustic `c1 q1^2 + c2 q2^2 = rhs`.
///
/// For an ellipse `u = u_c` this is `(u_c^2 - 1) q1^2 + u_c^2 q2^2 = a^2 u_c^2 (u_c^2 - 1)`,
/// for a hyperbola `v = v_c` it is `(1 - v_c^2) q1^2 - v_c^2 q2^2 = a^2 v_c^2 (1 - v_c^2)`.
/// The cleared form stays finite when `v_c = 0`, where the hyperbola
/// degenerates into the line `q1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausticCurve {
    pub kind: CausticKind,
    pub parameter: f64,
    pub c1: f64,
    pub c2: f64,
    pub rhs: f64,
}

impl CausticCurve {
    pub fn ellipse(u_c: f64, a: f64) -> Self {
        let u2 = u_c * u_c;
        CausticCurve {
            kind: CausticKind::Ellipse,
            parameter: u_c,
            c1: u2 - 1.0,
            c2: u2,
            rhs: a * a * u2 * (u2 - 1.0),
        }
    }

    pub fn hyperbola(v_c: f64, a: f64) -> Self {
        let v2 = v_c * v_c;
        CausticCurve {
            kind: CausticKind::Hyperbola,
            parameter: v_c,
            c1: 1.0 - v2,
            c2: -v2,
            rhs: a * a * v2 * (1.0 - v2),
        }
    }

    pub fn residual(&self, q1: f64, q2: f64) -> f64 {
        self.c1 * q1 * q1 + self.c2 * q2 * q2 - self.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub labels: Vec<OrbitLabel>,
    pub intervals: AllowedIntervals,
    pub caustics: Vec<CausticCurve>,
    pub collision_possible: bool,
    pub roots: RootSet,
    pub discriminant: f64,
    pub l1: f64,
    pub l2: f64,
}

fn intervals_from_roots(roots: &[f64], qp: &QuarticParams) -> AllowedIntervals {
    // Breakpoints carry a flag telling whether they are the fixed chart ends.
    let mut u_pts: Vec<(f64, bool)> = vec![(1.0, true)];
    u_pts.extend(roots.iter().filter(|&&r| r > 1.0).map(|&r| (r, false)));
    let mut v_pts: Vec<(f64, bool)> = vec![(-1.0, true)];
    v_pts.extend(roots.iter().filter(|&&r| r > -1.0 && r < 1.0).map(|&r| (r, false)));
    v_pts.push((1.0, true));

    // Past the largest root P4 > 0, so u never extends to infinity.
    AllowedIntervals {
        u_intervals: collect_pieces(&u_pts, |z| p4_eval(z, qp) <= 0.0),
        v_intervals: collect_pieces(&v_pts, |z| p4_eval(z, qp) >= 0.0),
    }
}

fn collect_pieces(pts: &[(f64, bool)], allowed: impl Fn(f64) -> bool) -> Vec<Interval> {
    let mut out: Vec<Interval> = Vec::new();
    for w in pts.windows(2) {
        let ((lo, lo_fixed), (hi, hi_fixed)) = (w[0], w[1]);
        if hi <= lo || !allowed(0.5 * (lo + hi)) {
            continue;
        }
        match out.last_mut() {
            // Adjacent allowed pieces meet at a double root: merge.
            Some(prev) if prev.hi == lo => {
                prev.hi = hi;
                prev.hi_fixed = hi_fixed;
            }
            _ => out.push(Interval { lo, hi, lo_fixed, hi_fixed }),
        }
    }
    out
}

pub fn allowed_intervals(mc: &MotionConstants, cfg: &PhysConfig) -> AllowedIntervals {
    let qp = QuarticParams::from_constants(mc, cfg);
    intervals_from_roots(&p4_roots(&qp).real_roots, &qp)
}

fn label_structure(iv: &AllowedIntervals, roots: &RootSet) -> Vec<OrbitLabel> {
    if iv.is_forbidden() {
        return vec![OrbitLabel::Forbidden];
    }
    let below = roots.real_roots.iter().filter(|&&r| r < -1.0).count();
    let u_touch = iv.u_touches_one();
    let v = &iv.v_intervals;
    let labels = match (iv.u_intervals.len(), v.len()) {
        (1, 1) => {
            let v0 = v[0];
            match (u_touch, v0.lo_fixed, v0.hi_fixed, below) {
                (true, true, false, 0) => Some(vec![OrbitLabel::Ts1]),
                (true, true, false, 2) => Some(vec![OrbitLabel::Ts2]),
                (false, true, true, 0) => Some(vec![OrbitLabel::Tp1]),
                (false, true, true, 2) => Some(vec![OrbitLabel::Tp2]),
                (true, false, false, 1) => Some(vec![OrbitLabel::Tm1]),
                _ => None,
            }
        }
        (1, 2) if u_touch && v[0].lo_fixed && !v[1].hi_fixed && below == 0 => {
            Some(vec![OrbitLabel::Ts3, OrbitLabel::Tm2])
        }
        _ => None,
    };
    // Any other structure only arises from rounding at a bifurcation.
    labels.unwrap_or_else(|| vec![OrbitLabel::Boundary])
}

fn caustics_of(iv: &AllowedIntervals, a: f64) -> Vec<CausticCurve> {
    let mut out = Vec::new();
    for i in &iv.u_intervals {
        if !i.lo_fixed {
            out.push(CausticCurve::ellipse(i.lo, a));
        }
        if !i.hi_fixed {
            out.push(CausticCurve::ellipse(i.hi, a));
        }
    }
    for i in &iv.v_intervals {
        if !i.lo_fixed {
            out.push(CausticCurve::hyperbola(i.lo, a));
        }
        if !i.hi_fixed {
            out.push(CausticCurve::hyperbola(i.hi, a));
        }
    }
    out
}

fn is_boundary(l1: f64, l2: f64, roots: &RootSet) -> bool {
    l1.abs() < LINE_BAND || l2.abs() < LINE_BAND || roots.min_gap() < ROOT_GAP
}

fn report_at(h_a: f64, lambda_a: f64, alpha_a: f64, a: f64) -> RegionReport {
    let qp = QuarticParams::characteristic(h_a, lambda_a, alpha_a);
    let roots = p4_roots(&qp);
    let intervals = intervals_from_roots(&roots.real_roots, &qp);
    let (l1, l2) = lines_at(h_a, lambda_a, alpha_a);
    let labels = if is_boundary(l1, l2, &roots) {
        vec![OrbitLabel::Boundary]
    } else {
        label_structure(&intervals, &roots)
    };
    RegionReport {
        labels,
        caustics: caustics_of(&intervals, a),
        collision_possible: intervals.u_touches_one() && intervals.v_touches_minus_one(),
        intervals,
        roots,
        discriminant: discriminant(&qp),
        l1,
        l2,
    }
}

pub fn classify_point(mc: &MotionConstants, cfg: &PhysConfig) -> RegionReport {
    report_at(mc.h_a, mc.lambda_a, cfg.alpha_a, cfg.a)
}

pub fn caustics(mc: &MotionConstants, cfg: &PhysConfig) -> Result<Vec<CausticCurve>> {
    let iv = allowed_intervals(mc, cfg);
    if iv.is_forbidden() {
        return Err(Error::ForbiddenRegion);
    }
    Ok(caustics_of(&iv, cfg.a))
}

/// Inclusive linear grid `start, ..., stop` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn new(start: f64, stop: f64, count: usize) -> Self {
        GridSpec { start, stop, count }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => {
                let step = (self.stop - self.start) / (n - 1) as f64;
                (0..n)
                    .map(|i| if i == n - 1 { self.stop } else { self.start + step * i as f64 })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramCell {
    pub h_a: f64,
    pub lambda_a: f64,
    pub labels: Vec<OrbitLabel>,
}

/// Rasterized bifurcation diagram; cells are ordered by `h_a`, then `lambda_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramScan {
    pub alpha_a: f64,
    pub h_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub cells: Vec<DiagramCell>,
    /// `(lambda_a, h_a)` samples of the line `h_a + alpha_a - lambda_a = 0`.
    pub line1: Vec<(f64, f64)>,
    /// `(lambda_a, h_a)` samples of the line `h_a - alpha_a - lambda_a = 0`.
    pub line2: Vec<(f64, f64)>,
    /// `(lambda_a, h_a)` points where the discriminant changes sign.
    pub discriminant_locus: Vec<(f64, f64)>,
}

impl DiagramScan {
    pub fn distinct_labels(&self) -> Vec<OrbitLabel> {
        let mut all: Vec<OrbitLabel> = self.cells.iter().flat_map(|c| c.labels.iter().copied()).collect();
        all.sort();
        all.dedup();
        all
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.cells.len() * 32 + 32);
        s.push_str("h_a,lambda_a,label\n");
        for c in &self.cells {
            s.push_str(&format!("{},{},{}\n", c.h_a, c.lambda_a, join_labels(&c.labels)));
        }
        s
    }
}

const LOCUS_TOL: f64 = 1e-8;

fn discriminant_column(h_a: f64, alpha_a: f64, lambdas: &[f64]) -> Vec<(f64, f64)> {
    let d = |l: f64| discriminant(&QuarticParams::characteristic(h_a, l, alpha_a));
    let mut out = Vec::new();
    for w in lambdas.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (dlo, dhi) = (d(lo), d(hi));
        if dlo == 0.0 {
            out.push((lo, h_a));
            continue;
        }
        if (dlo < 0.0) == (dhi < 0.0) || dhi == 0.0 {
            continue;
        }
        let neg_lo = dlo < 0.0;
        while (hi - lo).abs() > LOCUS_TOL {
            let mid = 0.5 * (lo + hi);
            if (d(mid) < 0.0) == neg_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push((0.5 * (lo + hi), h_a));
    }
    if let Some(&last) = lambdas.last() {
        if d(last) == 0.0 {
            out.push((last, h_a));
        }
    }
    out
}

/// Labels every cell of an `h_a x lambda_a` grid at fixed `alpha_a`.
pub fn scan_diagram(alpha_a: f64, h_range: GridSpec, lambda_range: GridSpec) -> DiagramScan {
    let hs = h_range.values();
    let ls = lambda_range.values();
    let rows: Vec<(Vec<DiagramCell>, Vec<(f64, f64)>)> = hs
        .par_iter()
        .map(|&h| {
            let cells = ls
                .iter()
                .map(|&l| DiagramCell {
                    h_a: h,
                    lambda_a: l,
                    labels: report_at(h, l, alpha_a, 1.0).labels,
                })
                .collect();
            (cells, discriminant_column(h, alpha_a, &ls))
        })
        .collect();
    let mut cells = Vec::with_capacity(hs.len() * ls.len());
    let mut locus = Vec::new();
    for (c, d) in rows {
        cells.extend(c);
        locus.extend(d);
    }
    DiagramScan {
        alpha_a,
        line1: hs.iter().map(|&h| (h + alpha_a, h)).collect(),
        line2: hs.iter().map(|&h| (h - alpha_a, h)).collect(),
        h_values: hs,
        lambda_values: ls,
        cells,
        discriminant_locus: locus,
    }
}
