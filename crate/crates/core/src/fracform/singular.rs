//! Element-pair integrals
//!
//! ```text
//! I_ab = int_T int_T' (phi_a(x) - phi_a(y)) (phi_b(x) - phi_b(y)) |x - y|^(-2-2s) dy dx
//! ```
//!
//! for triangles that share a vertex, an edge, or coincide. In each case the
//! integration variables are written as `xi * omega`, where `xi` measures
//! the distance to the singular set. For piecewise-linear basis functions
//! the numerator is exactly quadratic in `xi` and the kernel is homogeneous,
//! so the `xi` integral is done in closed form and only a smooth integral
//! over `omega` remains for Gauss quadrature.

use crate::quadrature::{collapsed_triangle_rule, gauss_legendre, TriangleRule};

type P = [f64; 2];

fn sub(a: P, b: P) -> P {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: P, b: P) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn kernel(x: P, s: f64) -> f64 {
    (x[0] * x[0] + x[1] * x[1]).powf(-1.0 - s)
}

/// Gauss rules shared by the three touching-pair integrators.
#[derive(Debug, Clone)]
pub struct SingularRules {
    line: (Vec<f64>, Vec<f64>),
    tri: TriangleRule,
}

impl SingularRules {
    pub fn new(points: usize) -> Self {
        Self { line: gauss_legendre(points), tri: collapsed_triangle_rule(points) }
    }
}

fn accumulate<const N: usize>(out: &mut [[f64; N]; N], d: &[f64; N], w: f64) {
    for a in 0..N {
        let wa = w * d[a];
        for b in a..N {
            out[a][b] += wa * d[b];
        }
    }
}

fn finish<const N: usize>(mut out: [[f64; N]; N], factor: f64) -> [[f64; N]; N] {
    for a in 0..N {
        for b in a..N {
            out[a][b] *= factor;
            out[b][a] = out[a][b];
        }
    }
    out
}

/// Identical triangles `T = T'` with corners `p`; local order `p[0..3]`.
pub fn identical(p: [P; 3], s: f64, rules: &SingularRules) -> [[f64; 3]; 3] {
    let e1 = sub(p[1], p[0]);
    let e2 = sub(p[2], p[0]);
    let jac = cross(e1, e2).abs();
    // the difference (p, q) of reference coordinates ranges over the
    // hexagon {max(0,p) + max(0,q) + max(0,-p-q) = 1}; opposite edges give
    // equal contributions
    const HEX: [P; 4] = [[1.0, 0.0], [0.0, 1.0], [-1.0, 1.0], [-1.0, 0.0]];
    let (tn, tw) = &rules.line;
    let mut out = [[0.0; 3]; 3];
    for k in 0..3 {
        let (h0, h1) = (HEX[k], HEX[k + 1]);
        for (t, w) in tn.iter().zip(tw) {
            let p_ = h0[0] + t * (h1[0] - h0[0]);
            let q_ = h0[1] + t * (h1[1] - h0[1]);
            let x = [p_ * e1[0] + q_ * e2[0], p_ * e1[1] + q_ * e2[1]];
            let d = [-(p_ + q_), p_, q_];
            accumulate(&mut out, &d, w * kernel(x, s));
        }
    }
    let radial = 1.0 / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s) * (4.0 - 2.0 * s));
    finish(out, 2.0 * jac * jac * radial)
}

/// Triangles `(v0, v1, w)` and `(v0, v1, wt)` sharing the edge `v0 v1`.
/// Local order: `v0, v1, w, wt`.
pub fn edge(v0: P, v1: P, w: P, wt: P, s: f64, rules: &SingularRules) -> [[f64; 4]; 4] {
    let e = sub(v1, v0);
    let f = sub(w, v0);
    let ft = sub(wt, v0);
    let jac = cross(e, f).abs() * cross(e, ft).abs();
    // (u, beta, delta) = xi * omega with |u| + beta + delta = 1; each face of
    // that surface is split where the cut-off c(omega) has a kink
    const HALF: f64 = 0.5;
    let pos_face: [[P; 3]; 3] = [
        [[0.0, 0.0], [HALF, 0.0], [0.0, HALF]],
        [[HALF, 0.0], [1.0, 0.0], [0.0, 1.0]],
        [[HALF, 0.0], [0.0, 1.0], [0.0, HALF]],
    ];
    let neg_face: [[P; 3]; 3] = [
        [[0.0, 0.0], [1.0, 0.0], [HALF, HALF]],
        [[0.0, 0.0], [HALF, HALF], [0.0, HALF]],
        [[0.0, HALF], [HALF, HALF], [0.0, 1.0]],
    ];
    let mut out = [[0.0; 4]; 4];
    for (sign, face) in [(1.0, &pos_face), (-1.0, &neg_face)] {
        for tri in face.iter() {
            let area2 = cross(sub(tri[1], tri[0]), sub(tri[2], tri[0])).abs();
            for (q, wq) in rules.tri.points.iter().zip(&rules.tri.weights) {
                let l0 = 1.0 - q[0] - q[1];
                let a = l0 * tri[0][0] + q[0] * tri[1][0] + q[1] * tri[2][0];
                let b = l0 * tri[0][1] + q[0] * tri[1][1] + q[1] * tri[2][1];
                let u = sign * a;
                let beta = b;
                let delta = 1.0 - a - b;
                let c = (beta + u.max(0.0)).max(delta + (-u).max(0.0));
                let x = [
                    u * e[0] + beta * f[0] - delta * ft[0],
                    u * e[1] + beta * f[1] - delta * ft[1],
                ];
                let d = [-u - beta + delta, u, beta, -delta];
                let weight = wq * area2 * kernel(x, s) * c.powf(-(3.0 - 2.0 * s));
                accumulate(&mut out, &d, weight);
            }
        }
    }
    let radial = 1.0 / ((3.0 - 2.0 * s) * (4.0 - 2.0 * s));
    finish(out, jac * radial)
}

/// Triangles `(v, a1, a2)` and `(v, b1, b2)` sharing only the vertex `v`.
/// Local order: `v, a1, a2, b1, b2`.
pub fn vertex(v: P, a1: P, a2: P, b1: P, b2: P, s: f64, rules: &SingularRules) -> [[f64; 5]; 5] {
    let e1 = sub(a1, v);
    let e2 = sub(a2, v);
    let f1 = sub(b1, v);
    let f2 = sub(b2, v);
    let jac = cross(e1, e2).abs() * cross(f1, f2).abs();
    let (gn, gw) = &rules.line;
    let mut out = [[0.0; 5]; 5];
    for (w1, ww1) in gn.iter().zip(gw) {
        for (w2, ww2) in gn.iter().zip(gw) {
            for (r, wr) in gn.iter().zip(gw) {
                let weight = ww1 * ww2 * wr * r;
                // the triangle with the larger barycentric scale sits on its
                // far edge, the other one is scaled by r
                for region in 0..2 {
                    let (sx, sy) = if region == 0 { (1.0, *r) } else { (*r, 1.0) };
                    let (al, be) = (sx * (1.0 - w1), sx * w1);
                    let (ga, de) = (sy * (1.0 - w2), sy * w2);
                    let x = [
                        al * e1[0] + be * e2[0] - ga * f1[0] - de * f2[0],
                        al * e1[1] + be * e2[1] - ga * f1[1] - de * f2[1],
                    ];
                    let d = [-(al + be) + (ga + de), al, be, -ga, -de];
                    accumulate(&mut out, &d, weight * kernel(x, s));
                }
            }
        }
    }
    finish(out, jac / (4.0 - 2.0 * s))
}
