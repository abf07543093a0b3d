//! Problem parameters in dimensionless units.
//!
//! Lengths are measured in the magnetic length `l = mc/eB` and times in
//! units of the inverse cyclotron frequency. A problem instance is fixed by
//! the coupling `alpha` (Coulomb strength over oscillator strength) and the
//! oscillator offset `(x0, y0)`, which encodes the conserved magnetic
//! translation momenta `(K_X, K_Y) = (y0, x0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for identities between stored parameters.
pub const REL_TOL: f64 = 1e-12;

/// Clamp width used when a point sits on a focus or a chart boundary.
pub const CHART_CLAMP: f64 = 1e-12;

/// Half-width of the band around the lines `h_a +- alpha_a - lambda_a = 0`
/// that is reported as a bifurcation boundary.
pub const LINE_BAND: f64 = 1e-10;

/// Two roots of the characteristic quartic closer than this are treated as
/// a multiple root.
pub const ROOT_GAP: f64 = 1e-8;

/// Default separation below which the pair is considered to have collided.
pub const DEFAULT_COLLISION_RADIUS: f64 = 1e-6;

/// Physical configuration of one reduced problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysConfig {
    pub alpha: f64,
    pub x0: f64,
    pub y0: f64,
    /// Half distance between the oscillator center and the Coulomb center.
    pub a: f64,
    /// `alpha / a^3`.
    pub alpha_a: f64,
}

/// Values of the two first integrals, raw and scaled by `a^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionConstants {
    pub h: f64,
    pub lambda: f64,
    pub h_a: f64,
    pub lambda_a: f64,
}

fn finite(v: f64, name: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(name))
    }
}

/// Builds a [`PhysConfig`] from the coupling and the oscillator offset.
pub fn derive_config(alpha: f64, x0: f64, y0: f64) -> Result<PhysConfig> {
    finite(alpha, "alpha")?;
    finite(x0, "x0")?;
    finite(y0, "y0")?;
    if alpha <= 0.0 {
        return Err(Error::NonPositiveCoupling(alpha));
    }
    if x0 == 0.0 && y0 == 0.0 {
        return Err(Error::DegenerateMomentum);
    }
    let a = x0.hypot(y0);
    Ok(PhysConfig {
        alpha,
        x0,
        y0,
        a,
        alpha_a: alpha / (a * a * a),
    })
}

impl PhysConfig {
    /// Configuration with prescribed `alpha_a` and offset; `alpha` is derived.
    pub fn from_scaled(alpha_a: f64, x0: f64, y0: f64) -> Result<Self> {
        finite(alpha_a, "alpha_a")?;
        let a = x0.hypot(y0);
        derive_config(alpha_a * a * a * a, x0, y0)
    }

    /// Checks the stored invariants.
    pub fn validate(&self) -> Result<()> {
        for (v, n) in [
            (self.alpha, "alpha"),
            (self.x0, "x0"),
            (self.y0, "y0"),
            (self.a, "a"),
            (self.alpha_a, "alpha_a"),
        ] {
            finite(v, n)?;
        }
        if self.alpha <= 0.0 {
            return Err(Error::NonPositiveCoupling(self.alpha));
        }
        if self.a <= 0.0 {
            return Err(Error::DegenerateMomentum);
        }
        let a2 = self.x0 * self.x0 + self.y0 * self.y0;
        if ((self.a * self.a - a2) / a2).abs() > REL_TOL {
            return Err(Error::Config(format!(
                "a = {} inconsistent with (x0, y0) = ({}, {})",
                self.a, self.x0, self.y0
            )));
        }
        if ((self.alpha_a * self.a.powi(3) - self.alpha) / self.alpha).abs() > REL_TOL {
            return Err(Error::Config(format!(
                "alpha_a = {} inconsistent with alpha = {}",
                self.alpha_a, self.alpha
            )));
        }
        Ok(())
    }

    /// Conserved magnetic translation momenta `(K_X, K_Y)` of this reduction.
    pub fn magnetic_momenta(&self) -> (f64, f64) {
        (self.y0, self.x0)
    }
}

/// Scales `(h, lambda)` into the `a`-independent parameters of the diagram.
pub fn scale_constants(h: f64, lambda: f64, cfg: &PhysConfig) -> MotionConstants {
    let a2 = cfg.a * cfg.a;
    MotionConstants {
        h,
        lambda,
        h_a: h / a2,
        lambda_a: lambda / a2,
    }
}

impl MotionConstants {
    /// Constants from the scaled diagram coordinates.
    pub fn from_scaled(h_a: f64, lambda_a: f64, cfg: &PhysConfig) -> Self {
        let a2 = cfg.a * cfg.a;
        MotionConstants {
            h: h_a * a2,
            lambda: lambda_a * a2,
            h_a,
            lambda_a,
        }
    }
}

/// Converts Gaussian-unit inputs to the dimensionless problem.
///
/// `mass` is the particle mass, `charge` the elementary charge `e > 0`,
/// `field` the magnitude `B`, `c` the speed of light and `(k1, k2)` the
/// magnetic momenta `(K_X, K_Y)`. Returns the configuration together with
/// the magnetic length and the cyclotron frequency.
pub fn from_gaussian(
    mass: f64,
    charge: f64,
    field: f64,
    c: f64,
    k1: f64,
    k2: f64,
) -> Result<(PhysConfig, f64, f64)> {
    let omega = charge * field / (mass * c);
    let length = mass * c / (charge * field);
    let mu = mass / 2.0;
    let alpha = charge * charge / (mu * omega * omega * length.powi(3));
    let x0 = k2 / (mass * omega * length);
    let y0 = k1 / (mass * omega * length);
    Ok((derive_config(alpha, x0, y0)?, length, omega))
}
