//! Quadrature rules for space-time elements and their faces.
//!
//! Everything reduces to tensor products of Gauss-Legendre rules: rectangles
//! and prisms directly, triangles through the Duffy collapse (which keeps
//! polynomial exactness with one extra unit of degree in the collapsed
//! direction), segments through arclength parametrization. Weights include
//! all geometric Jacobians, so integration is a plain weighted sum.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Quadrature point in global space-time coordinates.
#[derive(Clone, Copy, Debug)]
pub struct QuadPoint {
    pub x: [f64; 2],
    pub t: f64,
    pub w: f64,
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(npts: usize) -> Vec<(f64, f64)> {
    assert!(npts >= 1 && npts <= 96, "unsupported point count {npts}");
    static CACHE: OnceLock<Mutex<HashMap<usize, Vec<(f64, f64)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&npts) {
        return rule.clone();
    }
    let rule = compute_gauss_legendre(npts);
    cache.lock().unwrap().insert(npts, rule.clone());
    rule
}

fn compute_gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-based initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (p2, d2) = legendre_with_derivative(n, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss rule mapped to [a, b], weights scaled by the interval length.
pub fn gauss_on_interval(a: f64, b: f64, npts: usize) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    gauss_legendre(npts)
        .into_iter()
        .map(|(x, w)| (mid + half * x, w * half))
        .collect()
}

/// Tensor rule on an axis-aligned space-time rectangle (1+1d element).
pub fn rect_rule(x0: f64, x1: f64, t0: f64, t1: f64, nq: usize) -> Vec<QuadPoint> {
    let rx = gauss_on_interval(x0, x1, nq);
    let rt = gauss_on_interval(t0, t1, nq);
    let mut out = Vec::with_capacity(nq * nq);
    for &(x, wx) in &rx {
        for &(t, wt) in &rt {
            out.push(QuadPoint {
                x: [x, 0.0],
                t,
                w: wx * wt,
            });
        }
    }
    out
}

/// Duffy-collapsed rule on a planar triangle given by three (x, t) or (x, y)
/// vertices; the two coordinates land in `x`, `t` is set by the caller via
/// `map`. Returns (point2d, weight).
fn duffy_triangle(v: [[f64; 2]; 3], nq: usize) -> Vec<([f64; 2], f64)> {
    let ru = gauss_on_interval(0.0, 1.0, nq);
    let rv = gauss_on_interval(0.0, 1.0, nq);
    let e1 = [v[1][0] - v[0][0], v[1][1] - v[0][1]];
    let e2 = [v[2][0] - v[1][0], v[2][1] - v[1][1]];
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    let mut out = Vec::with_capacity(nq * nq);
    for &(u, wu) in &ru {
        for &(s, ws) in &rv {
            let px = v[0][0] + u * (e1[0] + s * e2[0]);
            let py = v[0][1] + u * (e1[1] + s * e2[1]);
            out.push(([px, py], wu * ws * u * det.abs()));
        }
    }
    out
}

/// Rule on a spatial triangle (2d), embedded at fixed time `t`.
pub fn triangle_rule_at_time(v: [[f64; 2]; 3], t: f64, nq: usize) -> Vec<QuadPoint> {
    duffy_triangle(v, nq)
        .into_iter()
        .map(|(x, w)| QuadPoint { x, t, w })
        .collect()
}

/// Rule on a space-time triangle in 1+1d (vertices are (x, t) pairs).
pub fn spacetime_triangle_rule(v: [[f64; 2]; 3], nq: usize) -> Vec<QuadPoint> {
    duffy_triangle(v, nq)
        .into_iter()
        .map(|(p, w)| QuadPoint {
            x: [p[0], 0.0],
            t: p[1],
            w,
        })
        .collect()
}

/// Tensor rule on a triangle-prism element: spatial triangle times [t0, t1].
pub fn prism_rule(tri: [[f64; 2]; 3], t0: f64, t1: f64, nq: usize) -> Vec<QuadPoint> {
    let base = duffy_triangle(tri, nq);
    let rt = gauss_on_interval(t0, t1, nq);
    let mut out = Vec::with_capacity(base.len() * nq);
    for &(x, wx) in &base {
        for &(t, wt) in &rt {
            out.push(QuadPoint { x, t, w: wx * wt });
        }
    }
    out
}

/// Rule on a straight space-time segment from `a` to `b` (1+1d faces; both
/// horizontal and slanted). The weight is the 1d Hausdorff measure.
pub fn segment_rule(a: [f64; 2], b: [f64; 2], nq: usize) -> Vec<QuadPoint> {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    gauss_on_interval(0.0, 1.0, nq)
        .into_iter()
        .map(|(s, w)| QuadPoint {
            x: [a[0] + s * (b[0] - a[0]), 0.0],
            t: a[1] + s * (b[1] - a[1]),
            w: w * len,
        })
        .collect()
}

/// Rule on a vertical face of a prism: spatial edge times [t0, t1].
pub fn vertical_quad_rule(
    a: [f64; 2],
    b: [f64; 2],
    t0: f64,
    t1: f64,
    nq: usize,
) -> Vec<QuadPoint> {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let rs = gauss_on_interval(0.0, 1.0, nq);
    let rt = gauss_on_interval(t0, t1, nq);
    let mut out = Vec::with_capacity(nq * nq);
    for &(s, ws) in &rs {
        for &(t, wt) in &rt {
            out.push(QuadPoint {
                x: [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])],
                t,
                w: ws * len * wt,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_monomials_exactly() {
        for n in 1..=12usize {
            let rule = gauss_legendre(n);
            let wsum: f64 = rule.iter().map(|(_, w)| w).sum();
            assert_relative_eq!(wsum, 2.0, max_relative = 1e-14);
            for k in 0..2 * n {
                let quad: f64 = rule.iter().map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 0 {
                    2.0 / (k as f64 + 1.0)
                } else {
                    0.0
                };
                assert!(
                    (quad - exact).abs() < 1e-13,
                    "n = {n}, k = {k}: {quad} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn gauss_nodes_are_symmetric() {
        let rule = gauss_legendre(7);
        for i in 0..rule.len() {
            let j = rule.len() - 1 - i;
            assert_relative_eq!(rule[i].0, -rule[j].0, epsilon = 1e-14);
            assert_relative_eq!(rule[i].1, rule[j].1, epsilon = 1e-14);
        }
    }

    #[test]
    fn rect_rule_moment() {
        let rule = rect_rule(0.0, 1.0, 0.0, 1.0, 4);
        let m: f64 = rule.iter().map(|q| q.w * q.x[0] * q.t).sum();
        assert_relative_eq!(m, 0.25, max_relative = 1e-13);
    }

    #[test]
    fn triangle_rule_matches_simplex_moments() {
        // Reference triangle (0,0), (1,0), (0,1):
        // int x^a y^b = a! b! / (a + b + 2)!.
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let rule = triangle_rule_at_time(tri, 0.0, 5);
        let total: f64 = rule.iter().map(|q| q.w).sum();
        assert_relative_eq!(total, 0.5, max_relative = 1e-13);
        let m23: f64 = rule
            .iter()
            .map(|q| q.w * q.x[0].powi(2) * q.x[1].powi(3))
            .sum();
        assert_relative_eq!(m23, 2.0 * 6.0 / 5040.0, max_relative = 1e-12);
        // A shifted, scaled triangle keeps exactness.
        let tri2 = [[1.0, 1.0], [3.0, 1.5], [1.5, 4.0]];
        let rule2 = triangle_rule_at_time(tri2, 0.0, 6);
        let area = 0.5 * ((3.0_f64 - 1.0) * (4.0 - 1.0) - (1.5 - 1.0) * (1.5 - 1.0)).abs();
        let total2: f64 = rule2.iter().map(|q| q.w).sum();
        assert_relative_eq!(total2, area, max_relative = 1e-13);
        // Centroid moment.
        let cx: f64 = rule2.iter().map(|q| q.w * q.x[0]).sum::<f64>() / area;
        assert_relative_eq!(cx, (1.0 + 3.0 + 1.5) / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn prism_rule_volume_and_moment() {
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let rule = prism_rule(tri, 1.0, 3.0, 4);
        let vol: f64 = rule.iter().map(|q| q.w).sum();
        assert_relative_eq!(vol, 1.0, max_relative = 1e-13);
        let mt: f64 = rule.iter().map(|q| q.w * q.t).sum();
        assert_relative_eq!(mt, 0.5 * 4.0, max_relative = 1e-13);
    }

    #[test]
    fn segment_rule_handles_slanted_faces() {
        // Segment from (0, 0) to (3, 4): length 5.
        let rule = segment_rule([0.0, 0.0], [3.0, 4.0], 3);
        let len: f64 = rule.iter().map(|q| q.w).sum();
        assert_relative_eq!(len, 5.0, max_relative = 1e-14);
        // int x ds = 5 * mean(x) = 5 * 1.5.
        let mx: f64 = rule.iter().map(|q| q.w * q.x[0]).sum();
        assert_relative_eq!(mx, 7.5, max_relative = 1e-13);
    }

    #[test]
    fn vertical_quad_rule_area() {
        let rule = vertical_quad_rule([0.0, 0.0], [1.0, 1.0], 0.0, 2.0, 3);
        let area: f64 = rule.iter().map(|q| q.w).sum();
        assert_relative_eq!(area, 2.0f64.sqrt() * 2.0, max_relative = 1e-13);
    }

    #[test]
    fn spacetime_triangle_covers_tent_halves() {
        // Tent quad (L, B, R, T) split along B-T: areas add up.
        let l = [0.0, 0.2];
        let b = [0.5, 0.0];
        let r = [1.0, 0.3];
        let t = [0.5, 0.6];
        let a1: f64 = spacetime_triangle_rule([l, b, t], 4)
            .iter()
            .map(|q| q.w)
            .sum();
        let a2: f64 = spacetime_triangle_rule([b, r, t], 4)
            .iter()
            .map(|q| q.w)
            .sum();
        // Shoelace area of the quad.
        let quad = [l, b, r, t];
        let mut area2 = 0.0;
        for i in 0..4 {
            let j = (i + 1) % 4;
            area2 += quad[i][0] * quad[j][1] - quad[j][0] * quad[i][1];
        }
        assert_relative_eq!(a1 + a2, 0.5 * area2.abs(), max_relative = 1e-13);
    }
}
