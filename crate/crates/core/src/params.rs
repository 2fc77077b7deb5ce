//! Problem parameters, half-plane tags and numerical tolerances.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RhpError};

/// Physical parameters of one problem instance.
///
/// `genus` is the genus of the hyperelliptic surface, `2N`, where `N` is the
/// number of main arcs besides the one through `mu / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub x: f64,
    pub t: f64,
    pub mu: f64,
    pub genus: u32,
}

impl ProblemParams {
    pub fn new(x: f64, t: f64, mu: f64, genus: u32) -> Result<Self> {
        let p = Self { x, t, mu, genus };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(RhpError::InvalidParams(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return Err(RhpError::InvalidParams(format!("t must be nonnegative, got {}", self.t)));
        }
        if !self.x.is_finite() {
            return Err(RhpError::InvalidParams("x must be finite".into()));
        }
        if self.genus % 2 != 0 {
            return Err(RhpError::InvalidParams(format!("genus must be even, got {}", self.genus)));
        }
        Ok(())
    }

    /// Number of (W, Omega) pairs, `genus / 2`.
    pub fn order(&self) -> usize {
        (self.genus / 2) as usize
    }

    /// The pinned contour point `mu / 2`.
    pub fn z0(&self) -> f64 {
        self.mu / 2.0
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..*self }
    }

    pub fn with_x(&self, x: f64) -> Self {
        Self { x, ..*self }
    }

    pub fn with_t(&self, t: f64) -> Self {
        Self { t, ..*self }
    }
}

/// Which side an evaluation point is approached from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Upper,
    Lower,
    RealFromAbove,
    RealFromBelow,
}

impl Side {
    /// Tag for a point strictly off the real axis; `None` on the axis.
    pub fn of(z: Complex64) -> Option<Side> {
        if z.im > 0.0 {
            Some(Side::Upper)
        } else if z.im < 0.0 {
            Some(Side::Lower)
        } else {
            None
        }
    }

    pub fn is_upper(self) -> bool {
        matches!(self, Side::Upper | Side::RealFromAbove)
    }

    /// Checks that the tag agrees with `sign(Im z)`.
    pub fn check(self, z: Complex64) -> Result<()> {
        let ok = match self {
            Side::Upper => z.im > 0.0,
            Side::Lower => z.im < 0.0,
            Side::RealFromAbove | Side::RealFromBelow => z.im == 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(RhpError::SideMismatch { z })
        }
    }
}

/// Numerical knobs shared by the solver layers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Tolerance per contour integral (relative to `∮|integrand|` once that exceeds one).
    pub quad: f64,
    /// Newton stopping tolerance on `max |K(alpha_j)|`.
    pub newton: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Relative floor on Jacobian diagonal entries.
    pub degeneracy: f64,
    /// Largest imaginary residue of W, Omega that is silently truncated.
    pub realness: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quad: 1e-10,
            newton: 1e-10,
            max_iterations: 50,
            max_halvings: 10,
            degeneracy: 1e-8,
            realness: 1e-8,
        }
    }
}
