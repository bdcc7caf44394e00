//! Dense stiffness assembly.
//!
//! Each element `T` owns the rows of its three vertices: it adds every
//! contribution of the ordered pairs `(T, T')` to those rows, over all `T'`.
//! For touching pairs a row shared by both elements receives half of the
//! symmetric pair integral from each side. Element strips are computed in
//! parallel and summed in element order, so the result does not depend on
//! the number of worker threads.

use rayon::prelude::*;

use super::singular::{self, SingularRules};
use super::tail::TailWeight;
use super::{FracParams, QuadratureConfig};
use crate::error::Result;
use crate::linalg::DenseMatrix;
use crate::mesh::{Region, TriMesh};
use crate::quadrature::{quadrature_rule, TriangleRule};

type P = [f64; 2];

struct ElemRule {
    x: Vec<P>,
    w: Vec<f64>,
    phi: Vec<[f64; 3]>,
}

impl ElemRule {
    fn new(p: &[P; 3], area: f64, rule: &TriangleRule) -> Self {
        let mut x = Vec::with_capacity(rule.len());
        let mut w = Vec::with_capacity(rule.len());
        let mut phi = Vec::with_capacity(rule.len());
        for (q, wq) in rule.points.iter().zip(&rule.weights) {
            let lam = [1.0 - q[0] - q[1], q[0], q[1]];
            x.push([
                lam[0] * p[0][0] + lam[1] * p[1][0] + lam[2] * p[2][0],
                lam[0] * p[0][1] + lam[1] * p[1][1] + lam[2] * p[2][1],
            ]);
            w.push(wq * 2.0 * area);
            phi.push(lam);
        }
        Self { x, w, phi }
    }
}

struct Elem {
    idx: [usize; 3],
    p: [P; 3],
    exterior: bool,
    centroid: P,
    diam: f64,
    regular: ElemRule,
    near: ElemRule,
}

/// Assembles the stiffness matrix of the energy
/// `C/2 int int_{R^4 \ (Omega^c)^2} (u(x)-u(y))(v(x)-v(y)) |x-y|^(-2-2s)`.
pub fn assemble_stiffness(mesh: &TriMesh, params: &FracParams, quad: &QuadratureConfig) -> Result<DenseMatrix> {
    assemble_parts(mesh, params, quad, true, true)
}

/// Element-pair part of the stiffness: both points inside the mesh.
pub fn assemble_interactions(mesh: &TriMesh, params: &FracParams, quad: &QuadratureConfig) -> Result<DenseMatrix> {
    assemble_parts(mesh, params, quad, true, false)
}

/// Far-field part `C int_Omega phi_i phi_j omega(x)`, with `omega` the
/// kernel integrated over the complement of the mesh.
pub fn assemble_tail(mesh: &TriMesh, params: &FracParams, quad: &QuadratureConfig) -> Result<DenseMatrix> {
    assemble_parts(mesh, params, quad, false, true)
}

fn assemble_parts(
    mesh: &TriMesh,
    params: &FracParams,
    quad: &QuadratureConfig,
    pairs: bool,
    far: bool,
) -> Result<DenseMatrix> {
    quad.validate()?;
    let s = params.s();
    let c = params.c_ns();
    let regular = quadrature_rule(quad.order)?;
    let near = regular.composite4();
    let tail_rule = quadrature_rule(6)?;
    let rules = SingularRules::new(quad.singular_points);

    let edges: Vec<(P, P)> = mesh
        .boundary_edges()
        .iter()
        .map(|[a, b]| (mesh.vertices()[*a], mesh.vertices()[*b]))
        .collect();
    let tail = TailWeight::new(edges, s, quad.tail_points)?;

    let elems: Vec<Elem> = (0..mesh.num_triangles())
        .map(|e| {
            let p = mesh.corners(e);
            let area = mesh.area(e);
            let centroid = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
            let d = |a: P, b: P| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            Elem {
                idx: mesh.triangles()[e],
                p,
                exterior: mesh.region(e) == Region::Exterior,
                centroid,
                diam: d(p[0], p[1]).max(d(p[1], p[2])).max(d(p[2], p[0])),
                regular: ElemRule::new(&p, area, &regular),
                near: ElemRule::new(&p, area, &near),
            }
        })
        .collect();

    // elements touching each vertex
    let nv = mesh.num_vertices();
    let mut vertex_elems: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (e, el) in elems.iter().enumerate() {
        for &v in &el.idx {
            vertex_elems[v].push(e);
        }
    }

    let ctx = Ctx { elems: &elems, vertex_elems: &vertex_elems, s, c, near_factor: quad.near_factor, rules: &rules };

    let mut a = DenseMatrix::zeros(nv);
    const BATCH: usize = 64;
    let ne = elems.len();
    let mut start = 0;
    while start < ne {
        let end = (start + BATCH).min(ne);
        let strips: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(|t| {
                let mut strip = vec![0.0; 3 * nv];
                if pairs {
                    ctx.element_rows(t, &mut strip);
                }
                if far && !elems[t].exterior {
                    tail_rows(&elems[t], mesh.area(t), &tail_rule, &tail, c, &mut strip, nv);
                }
                strip
            })
            .collect();
        for (t, strip) in (start..end).zip(strips) {
            for (r, &row) in elems[t].idx.iter().enumerate() {
                let dst = a.row_mut(row);
                for (d, v) in dst.iter_mut().zip(&strip[r * nv..(r + 1) * nv]) {
                    *d += v;
                }
            }
        }
        start = end;
    }
    a.symmetrize();
    Ok(a)
}

struct Ctx<'a> {
    elems: &'a [Elem],
    vertex_elems: &'a [Vec<usize>],
    s: f64,
    c: f64,
    near_factor: f64,
    rules: &'a SingularRules,
}

impl Ctx<'_> {
    fn element_rows(&self, t: usize, strip: &mut [f64]) {
        let nv = strip.len() / 3;
        let et = &self.elems[t];
        // touching elements and the number of shared vertices
        let mut touching: Vec<usize> = et.idx.iter().flat_map(|&v| self.vertex_elems[v].iter().copied()).collect();
        touching.sort_unstable();
        touching.dedup();

        let mut add = |r: usize, col: usize, v: f64| strip[r * nv + col] += v;

        // identical pair
        if !et.exterior {
            let m = singular::identical(et.p, self.s, self.rules);
            for a in 0..3 {
                for b in 0..3 {
                    add(a, et.idx[b], 0.5 * self.c * m[a][b]);
                }
            }
        }

        for &u in &touching {
            if u == t {
                continue;
            }
            let eu = &self.elems[u];
            if et.exterior && eu.exterior {
                continue;
            }
            let shared: Vec<usize> = (0..3).filter(|&a| eu.idx.contains(&et.idx[a])).collect();
            match shared.len() {
                2 => {
                    // local positions in T: v0, v1 shared, w the third vertex
                    let (i0, i1) = (shared[0], shared[1]);
                    let iw = 3 - i0 - i1;
                    let g = [et.idx[i0], et.idx[i1], et.idx[iw]];
                    let jw = (0..3).find(|&b| !g[..2].contains(&eu.idx[b])).unwrap();
                    let m = singular::edge(et.p[i0], et.p[i1], et.p[iw], eu.p[jw], self.s, self.rules);
                    let cols = [g[0], g[1], g[2], eu.idx[jw]];
                    for (lr, r, wgt) in [(0, i0, 0.5), (1, i1, 0.5), (2, iw, 1.0)] {
                        for lc in 0..4 {
                            add(r, cols[lc], wgt * self.c * m[lr][lc]);
                        }
                    }
                }
                1 => {
                    let iv = shared[0];
                    let (ia1, ia2) = ((iv + 1) % 3, (iv + 2) % 3);
                    let jv = (0..3).find(|&b| eu.idx[b] == et.idx[iv]).unwrap();
                    let (jb1, jb2) = ((jv + 1) % 3, (jv + 2) % 3);
                    let m = singular::vertex(
                        et.p[iv], et.p[ia1], et.p[ia2], eu.p[jb1], eu.p[jb2], self.s, self.rules,
                    );
                    let cols = [et.idx[iv], et.idx[ia1], et.idx[ia2], eu.idx[jb1], eu.idx[jb2]];
                    for (lr, r, wgt) in [(0, iv, 0.5), (1, ia1, 1.0), (2, ia2, 1.0)] {
                        for lc in 0..5 {
                            add(r, cols[lc], wgt * self.c * m[lr][lc]);
                        }
                    }
                }
                _ => unreachable!("touching elements share at least one vertex"),
            }
        }

        // separated pairs
        let mut wsum = Vec::with_capacity(et.near.x.len());
        let mut vsum = Vec::with_capacity(et.near.x.len());
        let mut ti = 0;
        for (u, eu) in self.elems.iter().enumerate() {
            if ti < touching.len() && touching[ti] == u {
                ti += 1;
                continue;
            }
            if et.exterior && eu.exterior {
                continue;
            }
            let dc = ((et.centroid[0] - eu.centroid[0]).powi(2) + (et.centroid[1] - eu.centroid[1]).powi(2)).sqrt();
            let is_near = dc < self.near_factor * et.diam.max(eu.diam);
            let (rt, ru) = if is_near { (&et.near, &eu.near) } else { (&et.regular, &eu.regular) };
            wsum.clear();
            vsum.clear();
            for x in &rt.x {
                let mut w = 0.0;
                let mut v = [0.0; 3];
                for ((y, wy), py) in ru.x.iter().zip(&ru.w).zip(&ru.phi) {
                    let dx = x[0] - y[0];
                    let dy = x[1] - y[1];
                    let k = wy * (dx * dx + dy * dy).powf(-1.0 - self.s);
                    w += k;
                    v[0] += k * py[0];
                    v[1] += k * py[1];
                    v[2] += k * py[2];
                }
                wsum.push(w);
                vsum.push(v);
            }
            let mut diag = [[0.0; 3]; 3];
            let mut cross = [[0.0; 3]; 3];
            for i in 0..rt.x.len() {
                let (wx, px) = (rt.w[i], rt.phi[i]);
                for a in 0..3 {
                    let f = wx * px[a];
                    for b in 0..3 {
                        diag[a][b] += f * px[b] * wsum[i];
                        cross[a][b] += f * vsum[i][b];
                    }
                }
            }
            for a in 0..3 {
                for b in 0..3 {
                    add(a, et.idx[b], self.c * diag[a][b]);
                    add(a, eu.idx[b], -self.c * cross[a][b]);
                }
            }
        }
    }
}

fn tail_rows(el: &Elem, area: f64, rule: &TriangleRule, tail: &TailWeight, c: f64, strip: &mut [f64], nv: usize) {
    let er = ElemRule::new(&el.p, area, rule);
    let mut m = [[0.0; 3]; 3];
    for i in 0..er.x.len() {
        let w = er.w[i] * tail.eval(er.x[i]);
        for a in 0..3 {
            for b in 0..3 {
                m[a][b] += w * er.phi[i][a] * er.phi[i][b];
            }
        }
    }
    for a in 0..3 {
        for b in 0..3 {
            strip[a * nv + el.idx[b]] += c * m[a][b];
        }
    }
}
