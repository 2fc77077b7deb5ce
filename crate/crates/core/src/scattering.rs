//! The scattering function `f(z; x, t, mu)` and its derivatives.
//!
//! In the upper half-plane
//!
//! ```text
//! f(z) = (mu/2 - z)(i pi/2 + ln(mu/2 - z)) + (z+T)/2 ln(z+T) + (z-T)/2 ln(z-T)
//!        - T artanh(2T/mu) - x z - 2 t z^2 + (mu/2) ln 2,
//! ```
//!
//! with `T = sqrt(mu^2/4 - 1)`, `Im T >= 0`, and `f(z) = conj(f(conj z))` below
//! the axis. For `mu < 2` the logarithm `ln(z - T)` carries a cut running from
//! `T` straight down to `0` and then left along the real axis; this is realised
//! by adding `2 pi i` to the principal value left of that cut. Close to
//! `mu = 2` the `T`-paired terms are summed as power series in `T^2`, which
//! keeps every quantity analytic through the double point `T = 0`.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use num_complex::Complex64;

use crate::error::{Result, RhpError};
use crate::params::{ProblemParams, Side};

type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);

/// Below this `|T|` the paired terms use the series in `T^2`.
pub const SERIES_RADIUS: f64 = 1e-3;

/// Imaginary offset used to realise boundary values on the real axis.
const AXIS_OFFSET: f64 = 1e-300;

/// `T(mu) = sqrt(mu^2/4 - 1)` on the branch with `Im T >= 0`.
pub fn eval_t(mu: f64) -> C64 {
    let tau = mu * mu / 4.0 - 1.0;
    if tau >= 0.0 {
        C64::new(tau.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-tau).sqrt())
    }
}

/// `Im f(z + i0)` on the real axis.
///
/// For `mu <= 2` this is `pi/2 (mu/2 - |z|)` left of `mu/2` and
/// `pi/2 (z - mu/2)` right of it. For `mu > 2` both `ln(z +- T)` are real
/// on `|z| < T`, which flattens the profile there to `pi/2 (mu/2 - T)`.
pub fn im_f_real_axis(z: f64, mu: f64) -> f64 {
    let half = mu / 2.0;
    if z >= half {
        return FRAC_PI_2 * (z - half);
    }
    let flat = if mu > 2.0 { eval_t(mu).re } else { 0.0 };
    FRAC_PI_2 * (half - z.abs().max(flat))
}

/// A scattering function that can be pinned to a contour through `z0`.
///
/// Everything downstream (quadrature, RHP assembly, continuation) is written
/// against this trait so synthetic functions can be substituted in tests.
pub trait ScatteringFunction: Send + Sync {
    fn mu(&self) -> f64;

    fn z0(&self) -> f64 {
        self.mu() / 2.0
    }

    fn value(&self, z: C64, side: Side) -> Result<C64>;
    fn z_derivative(&self, z: C64, side: Side) -> Result<C64>;
    fn mu_derivative(&self, z: C64, side: Side) -> Result<C64>;

    fn x_derivative(&self, z: C64, _side: Side) -> Result<C64> {
        Ok(-z)
    }

    fn t_derivative(&self, z: C64, _side: Side) -> Result<C64> {
        Ok(-2.0 * z * z)
    }

    /// Segment `[0, top]` in the upper half-plane that carries a cut, if any.
    fn upper_cut(&self) -> Option<C64> {
        None
    }
}

/// The NLS scattering function for the `sech` initial data.
#[derive(Clone, Copy, Debug)]
pub struct NlsScattering {
    pub x: f64,
    pub t: f64,
    pub mu: f64,
    tt: C64,
    tau: f64,
    /// `T artanh(2T/mu)`, real for every `mu > 0`.
    t_artanh: f64,
    series: bool,
}

struct Logs {
    l0: C64,
    lp: C64,
    lm: C64,
}

impl NlsScattering {
    pub fn new(p: &ProblemParams) -> Self {
        Self::from_parts(p.x, p.t, p.mu)
    }

    pub fn from_parts(x: f64, t: f64, mu: f64) -> Self {
        let tt = eval_t(mu);
        let tau = mu * mu / 4.0 - 1.0;
        let series = tt.norm() < SERIES_RADIUS;
        let t_artanh = if series {
            t_asinh_series(tau)
        } else {
            let w = 2.0 * tt / mu;
            (tt * 0.5 * ((1.0 + w).ln() - (1.0 - w).ln())).re
        };
        Self { x, t, mu, tt, tau, t_artanh, series }
    }

    pub fn t_value(&self) -> C64 {
        self.tt
    }

    /// Maps `(z, side)` to a point of the closed upper half-plane and reports
    /// whether the result has to be conjugated.
    fn lift(&self, z: C64, side: Side) -> Result<(C64, bool)> {
        side.check(z)?;
        let (w, conj) = match side {
            Side::Upper => (z, false),
            Side::Lower => (z.conj(), true),
            Side::RealFromAbove => (C64::new(z.re, AXIS_OFFSET), false),
            Side::RealFromBelow => (C64::new(z.re, AXIS_OFFSET), true),
        };
        if (w.re - self.mu / 2.0).abs() == 0.0 && w.im <= AXIS_OFFSET {
            return Err(RhpError::Singularity { z });
        }
        if self.tt.re == 0.0 && w.re == 0.0 && w.im <= self.tt.im {
            return Err(RhpError::CutContact { z });
        }
        if !w.re.is_finite() || !w.im.is_finite() {
            return Err(RhpError::InvalidParams(format!("non-finite evaluation point {z}")));
        }
        Ok((w, conj))
    }

    fn use_series(&self, w: C64) -> bool {
        self.series && self.tau.abs() < 1e-2 * w.norm_sqr()
    }

    fn logs(&self, w: C64) -> Logs {
        let l0 = (self.mu / 2.0 - w).ln();
        let lp = (w + self.tt).ln();
        let mut lm = (w - self.tt).ln();
        if self.tt.re == 0.0 && w.re < 0.0 && w.im < self.tt.im {
            lm += 2.0 * PI * I;
        }
        Logs { l0, lp, lm }
    }

    fn upper_value(&self, w: C64) -> C64 {
        let half = self.mu / 2.0;
        let a = (half - w) * (FRAC_PI_2 * I + (half - w).ln());
        let b = if self.use_series(w) {
            w * w.ln() + pair_even_series(self.tau, w)
        } else {
            let l = self.logs(w);
            (w + self.tt) * 0.5 * l.lp + (w - self.tt) * 0.5 * l.lm
        };
        a + b - self.t_artanh - self.x * w - 2.0 * self.t * w * w + half * LN_2
    }

    fn upper_z_derivative(&self, w: C64) -> C64 {
        let l = self.logs(w);
        -FRAC_PI_2 * I - l.l0 + 0.5 * (l.lp + l.lm) - self.x - 4.0 * self.t * w
    }

    fn upper_mu_derivative(&self, w: C64) -> C64 {
        let half = self.mu / 2.0;
        let base = 0.25 * PI * I + 0.5 * (half - w).ln() + 0.5 * LN_2;
        let paired = if self.series && (self.tau == 0.0 || self.use_series(w)) {
            // mu/(8T) [2 artanh(T/z) - 2 asinh(T)] summed in powers of T^2.
            let mut odd = C64::new(0.0, 0.0);
            let w2 = w * w;
            let mut wp = w;
            let mut tk = 1.0;
            for k in 0..6 {
                odd += tk / ((2 * k + 1) as f64 * wp);
                wp *= w2;
                tk *= self.tau;
            }
            self.mu / 8.0 * (2.0 * odd - 2.0 * asinh_over_t_series(self.tau))
        } else {
            let l = self.logs(w);
            let artanh = self.t_artanh / self.tt;
            self.mu / (8.0 * self.tt) * (l.lp - l.lm - 2.0 * artanh)
        };
        base + paired
    }

    fn reflect(v: C64, conj: bool) -> C64 {
        if conj {
            v.conj()
        } else {
            v
        }
    }
}

impl ScatteringFunction for NlsScattering {
    fn mu(&self) -> f64 {
        self.mu
    }

    fn value(&self, z: C64, side: Side) -> Result<C64> {
        let (w, conj) = self.lift(z, side)?;
        Ok(Self::reflect(self.upper_value(w), conj))
    }

    fn z_derivative(&self, z: C64, side: Side) -> Result<C64> {
        let (w, conj) = self.lift(z, side)?;
        Ok(Self::reflect(self.upper_z_derivative(w), conj))
    }

    fn mu_derivative(&self, z: C64, side: Side) -> Result<C64> {
        let (w, conj) = self.lift(z, side)?;
        Ok(Self::reflect(self.upper_mu_derivative(w), conj))
    }

    fn upper_cut(&self) -> Option<C64> {
        (self.tt.re == 0.0 && self.tt.im > 0.0).then_some(self.tt)
    }
}

/// `T asinh(T)` as a series in `tau = T^2`, through `T^10`.
fn t_asinh_series(tau: f64) -> f64 {
    tau * asinh_over_t_series(tau)
}

/// `asinh(T) / T` as a series in `tau = T^2`, through `T^10`.
fn asinh_over_t_series(tau: f64) -> f64 {
    const C: [f64; 6] = [1.0, -1.0 / 6.0, 3.0 / 40.0, -5.0 / 112.0, 35.0 / 1152.0, -63.0 / 2816.0];
    C.iter().rev().fold(0.0, |acc, c| acc * tau + c)
}

/// `(z+T)/2 ln(z+T) + (z-T)/2 ln(z-T) - z ln z` for `|T| << |z|`.
fn pair_even_series(tau: f64, z: C64) -> C64 {
    let z2 = z * z;
    let mut zp = z;
    let mut tk = tau;
    let mut acc = C64::new(0.0, 0.0);
    for k in 1..=5 {
        let kk = k as f64;
        acc += tk / (2.0 * kk * (2.0 * kk - 1.0) * zp);
        zp *= z2;
        tk *= tau;
    }
    acc
}

/// Scattering function that vanishes identically; used to test plumbing.
#[derive(Clone, Copy, Debug)]
pub struct ZeroScattering {
    pub mu: f64,
}

impl ScatteringFunction for ZeroScattering {
    fn mu(&self) -> f64 {
        self.mu
    }

    fn value(&self, _z: C64, _side: Side) -> Result<C64> {
        Ok(C64::new(0.0, 0.0))
    }

    fn z_derivative(&self, _z: C64, _side: Side) -> Result<C64> {
        Ok(C64::new(0.0, 0.0))
    }

    fn mu_derivative(&self, _z: C64, _side: Side) -> Result<C64> {
        Ok(C64::new(0.0, 0.0))
    }

    fn x_derivative(&self, _z: C64, _side: Side) -> Result<C64> {
        Ok(C64::new(0.0, 0.0))
    }

    fn t_derivative(&self, _z: C64, _side: Side) -> Result<C64> {
        Ok(C64::new(0.0, 0.0))
    }
}

/// `f(z)` for the NLS scattering function.
pub fn eval_f(z: C64, side: Side, p: &ProblemParams) -> Result<C64> {
    NlsScattering::new(p).value(z, side)
}

/// `f'(z)` for the NLS scattering function.
pub fn eval_f_prime(z: C64, side: Side, p: &ProblemParams) -> Result<C64> {
    NlsScattering::new(p).z_derivative(z, side)
}

/// `df/dmu (z)`; independent of `x` and `t`.
pub fn eval_f_mu(z: C64, side: Side, mu: f64) -> Result<C64> {
    NlsScattering::from_parts(0.0, 0.0, mu).mu_derivative(z, side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(x: f64, t: f64, mu: f64) -> ProblemParams {
        ProblemParams::new(x, t, mu, 0).unwrap()
    }

    #[test]
    fn t_branches() {
        assert_eq!(eval_t(2.0), C64::new(0.0, 0.0));
        assert_relative_eq!(eval_t(2.0 * 2f64.sqrt()).re, 1.0, epsilon = 1e-15);
        let t = eval_t(1.0);
        assert_eq!(t.re, 0.0);
        assert_relative_eq!(t.im, 3f64.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn real_axis_profile_values() {
        assert_relative_eq!(im_f_real_axis(0.0, 2.0), FRAC_PI_2);
        assert_relative_eq!(im_f_real_axis(3.0, 2.0), PI);
        assert_relative_eq!(im_f_real_axis(-3.0, 2.0), -PI);
        assert_eq!(im_f_real_axis(1.25, 2.5), 0.0);
    }

    #[test]
    fn boundary_values_match_profile() {
        for &mu in &[0.7, 1.0, 1.5, 2.0, 2.0005, 2.5, 3.0] {
            let p = params(0.4, 0.2, mu);
            for k in 0..100 {
                let z = -4.0 + 8.0 * (k as f64 + 0.5) / 100.0;
                if (z - mu / 2.0).abs() < 1e-9 || z == 0.0 {
                    continue;
                }
                let v = eval_f(C64::new(z, 0.0), Side::RealFromAbove, &p).unwrap();
                assert!(
                    (v.im - im_f_real_axis(z, mu)).abs() < 1e-12,
                    "mu={mu} z={z}: {} vs {}",
                    v.im,
                    im_f_real_axis(z, mu)
                );
                let near = eval_f(C64::new(z, 1e-9), Side::Upper, &p).unwrap();
                assert!((near - v).norm() < 1e-7, "continuity to the axis at z={z}, mu={mu}");
            }
        }
    }

    #[test]
    fn schwarz_reflection() {
        let p = params(0.3, 0.1, 1.7);
        for &z in &[C64::new(0.5, 0.3), C64::new(-1.2, 2.0), C64::new(3.0, 0.01)] {
            let a = eval_f(z, Side::Upper, &p).unwrap();
            let b = eval_f(z.conj(), Side::Lower, &p).unwrap();
            assert_relative_eq!((a.conj() - b).norm(), 0.0, epsilon = 1e-14);
            let a = eval_f_prime(z, Side::Upper, &p).unwrap();
            let b = eval_f_prime(z.conj(), Side::Lower, &p).unwrap();
            assert_relative_eq!((a.conj() - b).norm(), 0.0, epsilon = 1e-14);
            let a = eval_f_mu(z, Side::Upper, 1.7).unwrap();
            let b = eval_f_mu(z.conj(), Side::Lower, 1.7).unwrap();
            assert_relative_eq!((a.conj() - b).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn errors_on_bad_tags_and_singular_points() {
        let p = params(0.0, 0.0, 2.0);
        assert!(matches!(
            eval_f(C64::new(0.5, 0.0), Side::Upper, &p),
            Err(RhpError::SideMismatch { .. })
        ));
        assert!(matches!(
            eval_f(C64::new(1.0, 0.0), Side::RealFromAbove, &p),
            Err(RhpError::Singularity { .. })
        ));
        let p = params(0.0, 0.0, 1.0);
        assert!(matches!(
            eval_f(C64::new(0.0, 0.5), Side::Upper, &p),
            Err(RhpError::CutContact { .. })
        ));
    }

    #[test]
    fn derivative_against_central_differences() {
        for &mu in &[1.0, 2.0, 2.0004, 2.6] {
            let p = params(0.7, 0.3, mu);
            let z = C64::new(0.4, 0.9);
            let exact = eval_f_prime(z, Side::Upper, &p).unwrap();
            let mut prev = f64::INFINITY;
            for &d in &[1e-2, 1e-3] {
                let fd = (eval_f(z + d, Side::Upper, &p).unwrap() - eval_f(z - d, Side::Upper, &p).unwrap())
                    / (2.0 * d);
                let err = (fd - exact).norm();
                assert!(err < prev / 50.0 || err < 1e-9, "mu={mu} d={d} err={err}");
                prev = err;
            }
        }
    }

    #[test]
    fn mu_derivative_against_central_differences() {
        let z = C64::new(1.0, 1.0);
        for &mu in &[1.5, 2.0, 2.0003, 2.8] {
            let exact = eval_f_mu(z, Side::Upper, mu).unwrap();
            let d = 1e-4;
            let f = |m: f64| eval_f(z, Side::Upper, &params(0.2, 0.1, m)).unwrap();
            let fd = (f(mu + d) - f(mu - d)) / (2.0 * d);
            assert!((fd - exact).norm() < 1e-7, "mu={mu}: {fd} vs {exact}");
        }
    }

    #[test]
    fn continuity_through_double_point() {
        let z = C64::new(1.0, 1.0);
        let mut prev: Option<C64> = None;
        for k in 0..=400 {
            let mu = 2.0 - 1e-3 + 2e-3 * k as f64 / 400.0;
            let v = eval_f(z, Side::Upper, &params(0.0, 0.0, mu)).unwrap();
            if let Some(q) = prev {
                assert!((v - q).norm() < 1e-5, "jump near mu={mu}");
            }
            prev = Some(v);
        }
        // Straddle the switch between the direct formula and the series.
        for sign in [-1.0, 1.0] {
            let edge = 2.0 * (1.0 + sign * SERIES_RADIUS * SERIES_RADIUS).sqrt();
            for f in [eval_f_mu_at, eval_f_at] {
                let a = f(z, edge - 1e-13);
                let b = f(z, edge + 1e-13);
                assert!((a - b).norm() < 1e-11, "switch at mu={edge}: {a} vs {b}");
            }
        }
    }

    fn eval_f_at(z: C64, mu: f64) -> C64 {
        eval_f(z, Side::Upper, &params(0.3, 0.2, mu)).unwrap()
    }

    fn eval_f_mu_at(z: C64, mu: f64) -> C64 {
        eval_f_mu(z, Side::Upper, mu).unwrap()
    }
}
