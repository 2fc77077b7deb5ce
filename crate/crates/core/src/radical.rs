//! Branchpoints and the radical `R(z) = sqrt(prod (z - alpha_i))`.
//!
//! `R` is built from one square-root factor per main-arc piece. Each factor
//! `s(z) = (z - a) sqrt((z - b)/(z - a))` has its cut on the chord `[a, b]`
//! and behaves like `z` at infinity; when the piece is a polyline rather than
//! the chord, the sign is flipped inside the polygon bounded by the piece and
//! the chord, which moves the cut onto the piece. With the overall sign the
//! product satisfies `R(z) ~ -z^(2N+1)` at `+infinity`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RhpError};
use crate::polygon;

type C64 = Complex64;

/// Upper-half-plane representatives `alpha_0, alpha_2, ..., alpha_{4N}`
/// listed in contour order starting from the arc through `mu/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchpointSet {
    upper: Vec<C64>,
}

impl BranchpointSet {
    pub fn new(upper: Vec<C64>) -> Result<Self> {
        if upper.len() % 2 == 0 {
            return Err(RhpError::InvalidBranchpoints(format!(
                "expected an odd number of upper branchpoints, got {}",
                upper.len()
            )));
        }
        for (i, a) in upper.iter().enumerate() {
            if !(a.im > 0.0) || !a.re.is_finite() || !a.im.is_finite() {
                return Err(RhpError::InvalidBranchpoints(format!(
                    "alpha_{} = {a} is not in the open upper half-plane",
                    2 * i
                )));
            }
            for b in &upper[..i] {
                if a == b {
                    return Err(RhpError::InvalidBranchpoints(format!("repeated branchpoint {a}")));
                }
            }
        }
        Ok(Self { upper })
    }

    /// Seeds for a given surface genus; checks the count.
    pub fn for_genus(genus: u32, upper: Vec<C64>) -> Result<Self> {
        let want = genus as usize + 1;
        if upper.len() != want {
            return Err(RhpError::InvalidBranchpoints(format!(
                "genus {genus} needs {want} upper branchpoints, got {}",
                upper.len()
            )));
        }
        Self::new(upper)
    }

    pub fn upper(&self) -> &[C64] {
        &self.upper
    }

    /// Number of `(W, Omega)` pairs.
    pub fn order(&self) -> usize {
        (self.upper.len() - 1) / 2
    }

    /// Genus of the hyperelliptic surface, `2N`.
    pub fn genus(&self) -> u32 {
        (self.upper.len() - 1) as u32
    }

    /// `alpha_0, alpha_1, ..., alpha_{4N+1}` with `alpha_{2i+1} = conj(alpha_{2i})`.
    pub fn full(&self) -> Vec<C64> {
        self.upper.iter().flat_map(|a| [*a, a.conj()]).collect()
    }

    /// Smallest distance between two branchpoints or a branchpoint and `z0`.
    pub fn min_separation(&self, z0: f64) -> f64 {
        let all = self.full();
        let mut m = f64::INFINITY;
        for i in 0..all.len() {
            m = m.min((all[i] - z0).norm());
            for j in 0..i {
                m = m.min((all[i] - all[j]).norm());
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &BranchpointSet) -> f64 {
        self.upper.iter().zip(&other.upper).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// A cut joining two branchpoints along a polyline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutPath {
    pub points: Vec<C64>,
}

impl CutPath {
    pub fn new(points: Vec<C64>) -> Self {
        debug_assert!(points.len() >= 2);
        Self { points }
    }

    pub fn start(&self) -> C64 {
        self.points[0]
    }

    pub fn end(&self) -> C64 {
        *self.points.last().unwrap()
    }

    /// Same cut, traversed backwards and reflected in the real axis.
    pub fn reflected(&self) -> Self {
        Self { points: self.points.iter().rev().map(|p| p.conj()).collect() }
    }

    /// Square root of `(z - start)(z - end)` cut along the path, `~ z` at infinity.
    pub fn factor(&self, z: C64) -> C64 {
        let (a, b) = (self.start(), self.end());
        let za = z - a;
        if za == C64::new(0.0, 0.0) {
            return za;
        }
        let s = za * ((z - b) / za).sqrt();
        if self.points.len() > 2 && polygon::contains(&self.points, z) {
            -s
        } else {
            s
        }
    }

    pub fn distance(&self, z: C64) -> f64 {
        polygon::distance_to_polyline(z, &self.points)
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Point at fraction `s` of the arclength and the unit tangent there.
    pub fn point_at(&self, s: f64) -> (C64, C64) {
        let total = self.length();
        let mut target = s.clamp(0.0, 1.0) * total;
        for w in self.points.windows(2) {
            let l = (w[1] - w[0]).norm();
            if target <= l || std::ptr::eq(w, self.points.windows(2).last().unwrap()) {
                let u = (w[1] - w[0]) / l;
                return (w[0] + u * target.min(l), u);
            }
            target -= l;
        }
        unreachable!()
    }
}

/// `R(z)` with cuts on the main-arc pieces.
#[derive(Clone, Debug)]
pub struct Radical {
    roots: Vec<C64>,
    cuts: Vec<CutPath>,
    scale: f64,
}

impl Radical {
    pub fn new(cuts: Vec<CutPath>) -> Self {
        let roots: Vec<C64> = cuts.iter().flat_map(|c| [c.start(), c.end()]).collect();
        let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
        Self { roots, cuts, scale }
    }

    pub fn roots(&self) -> &[C64] {
        &self.roots
    }

    pub fn cuts(&self) -> &[CutPath] {
        &self.cuts
    }

    /// Value off the cuts, without contact checks.
    pub fn value(&self, z: C64) -> C64 {
        -self.cuts.iter().map(|c| c.factor(z)).product::<C64>()
    }

    /// Value with a cut-contact check.
    pub fn eval(&self, z: C64) -> Result<C64> {
        if self.cuts.iter().any(|c| c.distance(z) <= 1e-14 * self.scale) {
            return Err(RhpError::CutContact { z });
        }
        Ok(self.value(z))
    }

    /// `R'(z) / R(z)`.
    pub fn log_derivative(&self, z: C64) -> C64 {
        self.roots.iter().map(|a| 0.5 / (z - a)).sum()
    }

    /// `prod (z - alpha_i)`.
    pub fn polynomial(&self, z: C64) -> C64 {
        self.roots.iter().map(|a| z - a).product()
    }
}

/// `R` continued along one closed loop, analytic on and inside the loop
/// except for a single cut along `piece`.
///
/// Roots off the piece get individual square roots with rays pointing away
/// from the loop; the constant `scale` is fixed by matching a reference value
/// at an anchor point, which picks the sheet.
#[derive(Clone, Debug)]
pub struct LoopRadical {
    piece: CutPath,
    rays: Vec<(C64, C64)>,
    scale: C64,
}

impl LoopRadical {
    /// `rays` are `(root, unit direction of its cut)`.
    pub fn new(piece: CutPath, rays: Vec<(C64, C64)>, anchor: C64, reference: C64) -> Self {
        let rays = rays.into_iter().map(|(a, u)| (a, -u.conj())).collect();
        let mut lr = Self { piece, rays, scale: C64::new(1.0, 0.0) };
        lr.scale = reference / lr.value(anchor);
        lr
    }

    pub fn value(&self, z: C64) -> C64 {
        let mut v = self.scale * self.piece.factor(z);
        for (a, rot) in &self.rays {
            v *= ((z - a) * rot).sqrt();
        }
        v
    }

    pub fn piece(&self) -> &CutPath {
        &self.piece
    }

    /// Ray cuts as `(root, far point)` segments of length `reach`.
    pub fn ray_segments(&self, reach: f64) -> Vec<(C64, C64)> {
        self.rays.iter().map(|(a, rot)| (*a, a - rot.conj() * reach)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genus_zero_normalisation() {
        let a = C64::new(0.0, 1.0);
        let r = Radical::new(vec![CutPath::new(vec![a.conj(), C64::new(1.0, 0.0), a])]);
        let v = r.eval(C64::new(3.0, 0.0)).unwrap();
        assert!((v - C64::new(-(10f64).sqrt(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn polyline_cut_moves_sign_flip() {
        let a = C64::new(0.0, 1.0);
        let r = Radical::new(vec![CutPath::new(vec![a.conj(), C64::new(1.0, 0.0), a])]);
        // Between the chord and the polyline R is continuous across the chord.
        let left = r.value(C64::new(-1e-9, 0.3));
        let right = r.value(C64::new(1e-9, 0.3));
        assert!((left - right).norm() < 1e-7);
        // Across the polyline it jumps.
        let p = C64::new(0.5, 0.5);
        let n = C64::new(1.0, 1.0) / 2f64.sqrt() * 1e-9;
        assert!((r.value(p + n) + r.value(p - n)).norm() < 1e-7);
    }

    #[test]
    fn branchpoint_validation() {
        assert!(BranchpointSet::new(vec![C64::new(0.0, 1.0), C64::new(1.0, 1.0)]).is_err());
        assert!(BranchpointSet::new(vec![C64::new(0.0, 0.0)]).is_err());
        assert!(BranchpointSet::for_genus(2, vec![C64::new(0.0, 1.0)]).is_err());
        let b = BranchpointSet::for_genus(
            2,
            vec![C64::new(0.0, 1.0), C64::new(-1.0, 1.0), C64::new(-2.0, 0.5)],
        )
        .unwrap();
        assert_eq!(b.order(), 1);
        assert_eq!(b.full().len(), 6);
    }
}
