//! Planar polygon utilities on complex coordinates.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Result, RhpError};

type C64 = Complex64;

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Even-odd point-in-polygon test; `poly` is implicitly closed.
pub fn contains(poly: &[C64], z: C64) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if z.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Parameters `(s, u)` of the proper intersection `a + s(b-a) = c + u(d-c)`,
/// if the two segments cross.
pub fn segment_intersection(a: C64, b: C64, c: C64, d: C64) -> Option<(f64, f64)> {
    let r = b - a;
    let q = d - c;
    let den = cross(r, q);
    if den == 0.0 {
        return None;
    }
    let s = cross(c - a, q) / den;
    let u = cross(c - a, r) / den;
    ((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&u)).then_some((s, u))
}

pub fn distance_to_segment(z: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (z - a).norm();
    }
    let s = ((z - a) * d.conj()).re / l2;
    (z - (a + d * s.clamp(0.0, 1.0))).norm()
}

pub fn distance_to_polyline(z: C64, path: &[C64]) -> f64 {
    path.windows(2)
        .map(|w| distance_to_segment(z, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Distance from `z` to the closed polygon boundary.
pub fn distance_to_boundary(z: C64, poly: &[C64]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| distance_to_segment(z, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Signed area; positive for counterclockwise polygons.
pub fn signed_area(poly: &[C64]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>() / 2.0
}

/// True if no two non-adjacent edges of the closed polygon meet.
pub fn is_simple(poly: &[C64]) -> bool {
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segment_intersection(a, b, c, d).is_some() {
                return false;
            }
        }
    }
    true
}

/// True if the open polyline crosses the closed polygon boundary.
pub fn polyline_crosses(path: &[C64], poly: &[C64]) -> bool {
    let n = poly.len();
    path.windows(2).any(|w| {
        (0..n).any(|i| segment_intersection(w[0], w[1], poly[i], poly[(i + 1) % n]).is_some())
    })
}

/// Douglas–Peucker simplification keeping both endpoints.
pub fn simplify(path: &[C64], tol: f64) -> Vec<C64> {
    if path.len() <= 2 {
        return path.to_vec();
    }
    let mut keep = vec![false; path.len()];
    keep[0] = true;
    keep[path.len() - 1] = true;
    let mut stack = vec![(0usize, path.len() - 1)];
    while let Some((i, j)) = stack.pop() {
        let mut worst = (0.0, i);
        for k in i + 1..j {
            let d = distance_to_segment(path[k], path[i], path[j]);
            if d > worst.0 {
                worst = (d, k);
            }
        }
        if worst.0 > tol {
            keep[worst.1] = true;
            stack.push((i, worst.1));
            stack.push((worst.1, j));
        }
    }
    path.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| *p).collect()
}

/// Unit normal of the outer common tangent of two circles on the chosen side.
fn tangent_normal(c1: C64, r1: f64, c2: C64, r2: f64, left: bool) -> Result<C64> {
    let d = c2 - c1;
    let l = d.norm();
    let k = (r2 - r1) / l;
    if !(k.abs() < 1.0) {
        return Err(RhpError::Contour("offset circles are nested".into()));
    }
    let u = d / l;
    let perp = if left { C64::new(0.0, 1.0) * u } else { C64::new(0.0, -1.0) * u };
    Ok(-k * u + (1.0 - k * k).sqrt() * perp)
}

/// Points strictly between `c + r a` and `c + r b` on the counterclockwise arc.
fn arc(c: C64, r: f64, a: C64, b: C64, step: f64, out: &mut Vec<C64>) {
    let mut delta = (b / a).arg();
    if delta <= 0.0 {
        delta += 2.0 * PI;
    }
    let m = (delta / step).ceil() as usize;
    for k in 1..m {
        let th = delta * k as f64 / m as f64;
        out.push(c + r * a * C64::from_polar(1.0, th));
    }
}

fn line_intersection(a: C64, b: C64, c: C64, d: C64) -> Option<(C64, f64, f64)> {
    let r = b - a;
    let q = d - c;
    let den = cross(r, q);
    if den.abs() < 1e-300 {
        return None;
    }
    let s = cross(c - a, q) / den;
    let u = cross(c - a, r) / den;
    Some((a + r * s, s, u))
}

/// Right-hand side of the stroke outline of `path`, including the end cap.
fn right_side(path: &[C64], radii: &[f64], step: f64) -> Result<Vec<C64>> {
    let m = path.len();
    let mut normals = Vec::with_capacity(m - 1);
    for i in 0..m - 1 {
        normals.push(tangent_normal(path[i], radii[i], path[i + 1], radii[i + 1], false)?);
    }
    let mut out = vec![path[0] + radii[0] * normals[0]];
    for i in 0..m - 1 {
        let n = normals[i];
        let end = path[i + 1] + radii[i + 1] * n;
        if i + 1 < m - 1 {
            let u0 = path[i + 1] - path[i];
            let u1 = path[i + 2] - path[i + 1];
            let next = normals[i + 1];
            if cross(u0, u1) > 0.0 {
                out.push(end);
                arc(path[i + 1], radii[i + 1], n, next, step, &mut out);
                out.push(path[i + 1] + radii[i + 1] * next);
            } else {
                let start = *out.last().unwrap();
                let a2 = path[i + 1] + radii[i + 1] * next;
                let b2 = path[i + 2] + radii[i + 2] * next;
                match line_intersection(start, end, a2, b2) {
                    Some((p, s, u)) if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&u) => {
                        out.push(p)
                    }
                    Some(_) if cross(u0, u1).abs() < 1e-14 * u0.norm() * u1.norm() => out.push(a2),
                    _ => {
                        return Err(RhpError::Contour(format!(
                            "offset radius too large for the turn at {}",
                            path[i + 1]
                        )))
                    }
                }
            }
        } else {
            out.push(end);
            let r = radii[m - 1];
            if r > 0.0 {
                let back = tangent_normal(path[m - 1], r, path[m - 2], radii[m - 2], false)?;
                arc(path[m - 1], r, n, back, step, &mut out);
            }
        }
    }
    Ok(out)
}

/// Counterclockwise outline of the union of discs of radius `radii[i]`
/// around the polyline `path` (outer common tangents, round outer joins).
///
/// A zero radius at the first vertex produces a pinched outline that passes
/// through that vertex, which is then the first vertex of the result.
pub fn stroke_outline(path: &[C64], radii: &[f64], cap_steps: usize) -> Result<Vec<C64>> {
    if path.len() < 2 || path.len() != radii.len() {
        return Err(RhpError::Contour("outline needs at least two vertices".into()));
    }
    let step = PI / cap_steps.max(1) as f64;
    let mut out = right_side(path, radii, step)?;
    let rev_path: Vec<C64> = path.iter().rev().copied().collect();
    let rev_radii: Vec<f64> = radii.iter().rev().copied().collect();
    let mut back = right_side(&rev_path, &rev_radii, step)?;
    if radii[0] == 0.0 {
        back.pop();
    }
    out.append(&mut back);
    if !is_simple(&out) {
        return Err(RhpError::Contour("offset outline self-intersects".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stadium_is_ccw_and_simple() {
        let p = stroke_outline(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], &[0.1, 0.1], 8).unwrap();
        assert!(signed_area(&p) > 0.0);
        assert!(contains(&p, C64::new(0.5, 0.05)));
        assert!(!contains(&p, C64::new(0.5, 0.2)));
        let area = signed_area(&p);
        let exact = 0.2 + PI * 0.01;
        assert!((area - exact).abs() < 0.01);
    }

    #[test]
    fn pinched_outline_starts_at_pinch() {
        let path = [C64::new(1.0, 0.0), C64::new(1.0, 1.0), C64::new(0.2, 1.6)];
        let p = stroke_outline(&path, &[0.0, 0.3, 0.3], 8).unwrap();
        assert_eq!(p[0], path[0]);
        assert!(signed_area(&p) > 0.0);
        assert!(p.iter().skip(1).all(|z| z.im > 0.0));
        for z in [C64::new(1.0, 0.5), C64::new(0.6, 1.3)] {
            assert!(contains(&p, z));
        }
    }

    #[test]
    fn inner_join_on_right_turn() {
        let path = [C64::new(0.0, 0.0), C64::new(1.0, 1.0), C64::new(2.0, 0.0)];
        let p = stroke_outline(&path, &[0.2, 0.2, 0.2], 8).unwrap();
        assert!(signed_area(&p) > 0.0);
        assert!(contains(&p, C64::new(1.0, 0.9)));
    }

    #[test]
    fn simplify_keeps_corners() {
        let mut path: Vec<C64> = (0..=10).map(|k| C64::new(k as f64 / 10.0, 0.0)).collect();
        path.extend((1..=10).map(|k| C64::new(1.0, k as f64 / 10.0)));
        let s = simplify(&path, 1e-3);
        assert_eq!(s, vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 1.0)]);
    }
}
