//! Brute-force reference for the stiffness matrix.
//!
//! For every pair of elements `(T, T')` the inner integral over `y in T'` is
//! done in polar coordinates centred at `x`: along each ray the integrand
//! `(phi_i(x) - phi_i(y))(phi_j(x) - phi_j(y)) r^(-1-2s)` has a quadratic
//! numerator, so the radial integral is closed-form; the angle and the outer
//! point `x in T` use adaptive tanh-sinh quadrature. The far field is done
//! the same way with the ray exit distance from the mesh boundary.

use exofrac_core::mesh::{Region, TriMesh};
use exofrac_core::special::c_ns;
use exofrac_core::DenseMatrix;

use std::f64::consts::PI;

type P = [f64; 2];

/// Adaptive tanh-sinh rule on `[a, b]` for vector-valued integrands.
pub fn tanh_sinh(a: f64, b: f64, m: usize, tol: f64, f: &mut dyn FnMut(f64, &mut [f64])) -> Vec<f64> {
    let half = 0.5 * (b - a);
    let mut total = vec![0.0; m];
    let mut buf = vec![0.0; m];
    let tmax = 3.0_f64;
    let mut h = 0.5_f64;
    let mut eval = |t: f64, total: &mut [f64], buf: &mut [f64], scale: f64| {
        let u = 0.5 * PI * t.sinh();
        // distance from a, computed without cancellation
        let sig = 1.0 / (1.0 + (-2.0 * u).exp());
        let x = if t < 0.0 { a + (b - a) * sig } else { b - (b - a) / (1.0 + (2.0 * u).exp()) };
        let w = half * 0.5 * PI * t.cosh() / u.cosh().powi(2);
        if !(w > 0.0) || x <= a || x >= b {
            return;
        }
        f(x, buf);
        for (tv, bv) in total.iter_mut().zip(buf.iter()) {
            *tv += scale * w * bv;
        }
    };
    // level 0 with step h
    let n0 = (tmax / h) as i64;
    for k in -n0..=n0 {
        eval(k as f64 * h, &mut total, &mut buf, h);
    }
    let mut prev = total.clone();
    for _ in 0..9 {
        h *= 0.5;
        // new points are the odd multiples of h
        let mut add = vec![0.0; m];
        let n = (tmax / h) as i64;
        let mut k = -n;
        if k % 2 == 0 {
            k += 1;
        }
        while k <= n {
            eval(k as f64 * h, &mut add, &mut buf, h);
            k += 2;
        }
        for (t, (p, ad)) in total.iter_mut().zip(prev.iter().zip(&add)) {
            *t = 0.5 * p + ad;
        }
        let scale = total.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1e-300);
        let diff = total.iter().zip(&prev).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()));
        prev.copy_from_slice(&total);
        if diff <= tol * scale {
            return total;
        }
    }
    total
}

fn sub(a: P, b: P) -> P {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: P, b: P) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Affine representation `phi(x) = c + g . x` of the three hats of a triangle.
#[derive(Clone, Copy)]
struct Hats {
    c: [f64; 3],
    g: [P; 3],
}

impl Hats {
    fn new(p: &[P; 3]) -> Self {
        let det = cross(sub(p[1], p[0]), sub(p[2], p[0]));
        let mut c = [0.0; 3];
        let mut g = [[0.0; 2]; 3];
        for a in 0..3 {
            let (q, r) = (p[(a + 1) % 3], p[(a + 2) % 3]);
            // phi_a vanishes on the opposite edge q r and is 1 at p[a]
            g[a] = [(q[1] - r[1]) / det, (r[0] - q[0]) / det];
            c[a] = cross(q, r) / det;
        }
        Self { c, g }
    }

    fn eval(&self, a: usize, x: P) -> f64 {
        self.c[a] + self.g[a][0] * x[0] + self.g[a][1] * x[1]
    }
}

/// `[r_in, r_out]` of the ray `x + r d` inside the triangle, if any.
fn ray_interval(p: &[P; 3], x: P, d: P) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    for k in 0..3 {
        let (a, b) = (p[k], p[(k + 1) % 3]);
        // inside: cross(b - a, y - a) >= 0 for counter-clockwise triangles
        let e = sub(b, a);
        let c0 = cross(e, sub(x, a));
        let c1 = cross(e, d);
        if c1.abs() < 1e-300 {
            if c0 < 0.0 {
                return None;
            }
            continue;
        }
        let r = -c0 / c1;
        if c1 > 0.0 {
            lo = lo.max(r);
        } else {
            hi = hi.min(r);
        }
    }
    (hi > lo).then_some((lo, hi))
}

/// `[int r^(-1-2s), int r^(-2s), int r^(1-2s)]` over `[lo, hi]`.
fn radial_moments(lo: f64, hi: f64, s: f64) -> [f64; 3] {
    let pw = |e: f64| -> f64 {
        // int r^(e-1)
        if lo == 0.0 {
            if e > 0.0 {
                hi.powf(e) / e
            } else {
                f64::INFINITY
            }
        } else if e.abs() < 1e-14 {
            (hi / lo).ln()
        } else {
            (hi.powf(e) - lo.powf(e)) / e
        }
    };
    [pw(-2.0 * s), pw(1.0 - 2.0 * s), pw(2.0 - 2.0 * s)]
}

pub struct Oracle {
    pub tol: f64,
}

impl Default for Oracle {
    fn default() -> Self {
        Self { tol: 1e-8 }
    }
}

impl Oracle {
    /// `int_T int_T' (phi_a(x)-phi_a(y))(phi_b(x)-phi_b(y)) |x-y|^(-2-2s)`
    /// for the global hats `a, b`; `slots[g]` lists the local pieces of hat
    /// `g` (0..3: vertices of T seen from x, 3..6: vertices of T' seen from
    /// y).
    fn pair(&self, pt: &[P; 3], pu: &[P; 3], slots: &[Vec<usize>], same: bool, s: f64) -> Vec<f64> {
        let n = slots.len();
        let ht = Hats::new(pt);
        let hu = Hats::new(pu);
        let tol = self.tol;
        let e1 = sub(pt[1], pt[0]);
        let e2 = sub(pt[2], pt[0]);
        let jac = cross(e1, e2).abs();
        // x = p0 + u e1 + (1-u) v e2
        let mut outer_u = |u: f64, out: &mut [f64]| {
            let mut outer_v = |v: f64, out: &mut [f64]| {
                let a = u;
                let b = (1.0 - u) * v;
                let x = [pt[0][0] + a * e1[0] + b * e2[0], pt[0][1] + a * e1[1] + b * e2[1]];
                let r = self.inner(&ht, &hu, pu, slots, x, same, s, tol);
                for (o, v_) in out.iter_mut().zip(&r) {
                    *o = v_ * (1.0 - u) * jac;
                }
            };
            let r = tanh_sinh(0.0, 1.0, n * n, tol, &mut outer_v);
            out.copy_from_slice(&r);
        };
        tanh_sinh(0.0, 1.0, n * n, tol, &mut outer_u)
    }

    #[allow(clippy::too_many_arguments)]
    fn inner(&self, ht: &Hats, hu: &Hats, pu: &[P; 3], slots: &[Vec<usize>], x: P, same: bool, s: f64, tol: f64) -> Vec<f64> {
        let n = slots.len();
        let mut fx = [0.0; 3];
        for a in 0..3 {
            fx[a] = ht.eval(a, x);
        }
        // split the angle at the vertex directions of T'
        let mut cuts: Vec<f64> = pu.iter().map(|v| (v[1] - x[1]).atan2(v[0] - x[0])).collect();
        let inside = (0..3).all(|k| cross(sub(pu[(k + 1) % 3], pu[k]), sub(x, pu[k])) > 0.0);
        let mut ranges = Vec::new();
        if inside {
            cuts.sort_by(f64::total_cmp);
            for k in 0..3 {
                let a = cuts[k];
                let b = if k == 2 { cuts[0] + 2.0 * PI } else { cuts[k + 1] };
                ranges.push((a, b));
            }
        } else {
            // unwrap relative to the first vertex direction; the triangle
            // subtends less than pi from outside
            let base = cuts[0];
            let mut rel: Vec<f64> = cuts
                .iter()
                .map(|c| {
                    let mut d = c - base;
                    while d > PI {
                        d -= 2.0 * PI;
                    }
                    while d < -PI {
                        d += 2.0 * PI;
                    }
                    d
                })
                .collect();
            rel.sort_by(f64::total_cmp);
            ranges.push((base + rel[0], base + rel[1]));
            ranges.push((base + rel[1], base + rel[2]));
        }
        let mut total = vec![0.0; n * n];
        for (a, b) in ranges {
            if b - a < 1e-15 {
                continue;
            }
            let mut f = |th: f64, out: &mut [f64]| {
                out.iter_mut().for_each(|v| *v = 0.0);
                let d = [th.cos(), th.sin()];
                let Some((lo, hi)) = ray_interval(pu, x, d) else {
                    return;
                };
                let lo = if inside { 0.0 } else { lo };
                // phi_a(x) - phi_a(x + r d) = c_a + r m_a along the ray
                let mut c = [0.0; 6];
                let mut m = [0.0; 6];
                for k in 0..3 {
                    if same {
                        c[k] = 0.0;
                        m[k] = -(ht.g[k][0] * d[0] + ht.g[k][1] * d[1]);
                    } else {
                        // node of T: phi(y) = 0 unless the node is also a node of T'
                        c[k] = fx[k];
                        m[k] = 0.0;
                    }
                    // node of T': phi(x) = 0 from T's side is handled by the
                    // caller through the shared-node map
                    c[3 + k] = -hu.eval(k, x);
                    m[3 + k] = -(hu.g[k][0] * d[0] + hu.g[k][1] * d[1]);
                }
                // combine the pieces of each hat before multiplying, so the
                // singular parts of the one-sided pieces cancel
                let mut cg = [0.0; 6];
                let mut mg = [0.0; 6];
                for (g, sl) in slots.iter().enumerate() {
                    for &k in sl {
                        cg[g] += c[k];
                        mg[g] += m[k];
                    }
                }
                let [j0, j1, j2] = radial_moments(lo, hi, s);
                for i in 0..n {
                    for j in 0..n {
                        let mut v = mg[i] * mg[j] * j2;
                        if !same {
                            v += cg[i] * cg[j] * j0 + (cg[i] * mg[j] + mg[i] * cg[j]) * j1;
                        }
                        out[n * i + j] = v;
                    }
                }
            };
            let r = tanh_sinh(a, b, n * n, tol, &mut f);
            for (t, v) in total.iter_mut().zip(&r) {
                *t += v;
            }
        }
        total
    }

    /// Far-field weight at `x`: `int_{R^2 \ mesh} |x-y|^(-2-2s) dy`.
    pub fn far_weight(&self, boundary: &[(P, P)], x: P, s: f64) -> f64 {
        let mut cuts: Vec<f64> = boundary.iter().map(|(a, _)| (a[1] - x[1]).atan2(a[0] - x[0])).collect();
        cuts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        for k in 0..cuts.len() {
            let a = cuts[k];
            let b = if k + 1 == cuts.len() { cuts[0] + 2.0 * PI } else { cuts[k + 1] };
            let mut f = |th: f64, out: &mut [f64]| {
                let d = [th.cos(), th.sin()];
                // exit distance: largest crossing of a boundary edge
                let mut rho = 0.0_f64;
                for (p, q) in boundary {
                    let e = sub(*q, *p);
                    let den = cross(d, e);
                    if den.abs() < 1e-300 {
                        continue;
                    }
                    let w = sub(*p, x);
                    let r = cross(w, e) / den;
                    let t = cross(w, d) / den;
                    if (-1e-12..=1.0 + 1e-12).contains(&t) && r > 0.0 {
                        rho = rho.max(r);
                    }
                }
                out[0] = rho.powf(-2.0 * s) / (2.0 * s);
            };
            total += tanh_sinh(a, b, 1, self.tol, &mut f)[0];
        }
        total
    }

    /// Full stiffness matrix of the mesh.
    pub fn stiffness(&self, mesh: &TriMesh, s: f64) -> DenseMatrix {
        let mut a = self.interactions(mesh, s);
        self.add_far_field(mesh, s, &mut a);
        a
    }

    /// Element-pair part only.
    pub fn interactions(&self, mesh: &TriMesh, s: f64) -> DenseMatrix {
        let c = c_ns(2, s).unwrap();
        let nv = mesh.num_vertices();
        let mut a = DenseMatrix::zeros(nv);
        let ne = mesh.num_triangles();
        let ext = |e: usize| mesh.region(e) == Region::Exterior;
        for t in 0..ne {
            for u in t..ne {
                if ext(t) && ext(u) {
                    continue;
                }
                let pt = mesh.corners(t);
                let pu = mesh.corners(u);
                let it = mesh.triangles()[t];
                let iu = mesh.triangles()[u];
                let loc = self.pair_global(&pt, &pu, &it, &iu, t == u, s);
                // unordered distinct pairs appear twice in the energy
                let factor = if t == u { 0.5 * c } else { c };
                for (i, gi) in loc.0.iter().enumerate() {
                    for (j, gj) in loc.0.iter().enumerate() {
                        a[(*gi, *gj)] += factor * loc.1[i * loc.0.len() + j];
                    }
                }
            }
        }
        a
    }

    fn add_far_field(&self, mesh: &TriMesh, s: f64, a: &mut DenseMatrix) {
        let c = c_ns(2, s).unwrap();
        let ne = mesh.num_triangles();
        let ext = |e: usize| mesh.region(e) == Region::Exterior;
        let boundary: Vec<(P, P)> = mesh
            .boundary_edges()
            .iter()
            .map(|[p, q]| (mesh.vertices()[*p], mesh.vertices()[*q]))
            .collect();
        for t in 0..ne {
            if ext(t) {
                continue;
            }
            let pt = mesh.corners(t);
            let it = mesh.triangles()[t];
            let h = Hats::new(&pt);
            let e1 = sub(pt[1], pt[0]);
            let e2 = sub(pt[2], pt[0]);
            let jac = cross(e1, e2).abs();
            let mut fu = |u: f64, out: &mut [f64]| {
                let mut fv = |v: f64, out: &mut [f64]| {
                    let x = [pt[0][0] + u * e1[0] + (1.0 - u) * v * e2[0], pt[0][1] + u * e1[1] + (1.0 - u) * v * e2[1]];
                    let w = self.far_weight(&boundary, x, s) * (1.0 - u) * jac;
                    for i in 0..3 {
                        for j in 0..3 {
                            out[3 * i + j] = w * h.eval(i, x) * h.eval(j, x);
                        }
                    }
                };
                let r = tanh_sinh(0.0, 1.0, 9, self.tol, &mut fv);
                out.copy_from_slice(&r);
            };
            let m = tanh_sinh(0.0, 1.0, 9, self.tol, &mut fu);
            for i in 0..3 {
                for j in 0..3 {
                    a[(it[i], it[j])] += c * m[3 * i + j];
                }
            }
        }
    }

    /// Pair integral in terms of the distinct global nodes of `T` and `T'`.
    pub fn pair_global(&self, pt: &[P; 3], pu: &[P; 3], it: &[usize; 3], iu: &[usize; 3], same: bool, s: f64) -> (Vec<usize>, Vec<f64>) {
        if same {
            let slots = vec![vec![0], vec![1], vec![2]];
            return (it.to_vec(), self.pair(pt, pt, &slots, true, s));
        }
        let mut nodes: Vec<usize> = it.to_vec();
        for g in iu {
            if !nodes.contains(g) {
                nodes.push(*g);
            }
        }
        let slots: Vec<Vec<usize>> = nodes
            .iter()
            .map(|g| {
                let mut v = Vec::new();
                if let Some(k) = it.iter().position(|x| x == g) {
                    v.push(k);
                }
                if let Some(k) = iu.iter().position(|x| x == g) {
                    v.push(3 + k);
                }
                v
            })
            .collect();
        let m = self.pair(pt, pu, &slots, false, s);
        (nodes, m)
    }
}
