//! Conforming triangulations of the computational disk with region tags.
//!
//! Every element is tagged either [`Region::Omega`] (inside the physical
//! domain) or [`Region::Exterior`]. Two independent element masks mark the
//! support of the Robin weight `kappa` and the support of the exterior
//! control; both must be exterior elements.

mod generate;
mod io;

use std::collections::HashMap;

pub use generate::{generate_mesh, GeometrySpec, KappaSupport, Shape};
pub use io::{load_mesh, read_mesh, save_mesh, write_mesh};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Omega,
    Exterior,
}

impl Region {
    pub fn code(self) -> u8 {
        match self {
            Region::Omega => 0,
            Region::Exterior => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Region::Omega),
            1 => Some(Region::Exterior),
            _ => None,
        }
    }
}

/// Immutable, validated triangulation.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    elem_region: Vec<Region>,
    kappa_mask: Vec<bool>,
    control_mask: Vec<bool>,
    node_omega: Vec<bool>,
    node_kappa: Vec<bool>,
    node_control: Vec<bool>,
}

impl TriMesh {
    /// Validates and builds a mesh. Triangles must be counter-clockwise with
    /// positive area and the triangulation must be conforming.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        elem_region: Vec<Region>,
        kappa_mask: Vec<bool>,
        control_mask: Vec<bool>,
    ) -> Result<Self> {
        let nt = triangles.len();
        if elem_region.len() != nt || kappa_mask.len() != nt || control_mask.len() != nt {
            return Err(Error::Validation("per-element tag arrays must match the triangle count".into()));
        }
        let nv = vertices.len();
        for (e, t) in triangles.iter().enumerate() {
            if let Some(&bad) = t.iter().find(|&&i| i >= nv) {
                return Err(Error::Validation(format!("triangle {e} references vertex {bad} >= {nv}")));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::Validation(format!("triangle {e} repeats a vertex")));
            }
            if kappa_mask[e] && elem_region[e] != Region::Exterior {
                return Err(Error::Validation(format!("triangle {e} is in the kappa support but not exterior")));
            }
            if control_mask[e] && elem_region[e] != Region::Exterior {
                return Err(Error::Validation(format!("triangle {e} is in the control support but not exterior")));
            }
        }
        let mut mesh = TriMesh {
            node_omega: vec![false; nv],
            node_kappa: vec![false; nv],
            node_control: vec![false; nv],
            vertices,
            triangles,
            elem_region,
            kappa_mask,
            control_mask,
        };
        mesh.check_conforming()?;
        for (e, t) in mesh.triangles.iter().enumerate() {
            for &v in t {
                mesh.node_omega[v] |= mesh.elem_region[e] == Region::Omega;
                mesh.node_kappa[v] |= mesh.kappa_mask[e];
                mesh.node_control[v] |= mesh.control_mask[e];
            }
        }
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn region(&self, e: usize) -> Region {
        self.elem_region[e]
    }

    pub fn regions(&self) -> &[Region] {
        &self.elem_region
    }

    pub fn kappa_mask(&self) -> &[bool] {
        &self.kappa_mask
    }

    pub fn control_mask(&self) -> &[bool] {
        &self.control_mask
    }

    /// Nodes that belong to at least one OMEGA element.
    pub fn node_in_omega(&self) -> &[bool] {
        &self.node_omega
    }

    pub fn node_in_kappa(&self) -> &[bool] {
        &self.node_kappa
    }

    pub fn node_in_control(&self) -> &[bool] {
        &self.node_control
    }

    /// Sorted indices of the vertices of control-support elements.
    pub fn control_nodes(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&i| self.node_control[i]).collect()
    }

    pub fn corners(&self, e: usize) -> [[f64; 2]; 3] {
        let t = self.triangles[e];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    /// Signed area (positive for counter-clockwise triangles).
    pub fn area(&self, e: usize) -> f64 {
        signed_area(&self.corners(e))
    }

    pub fn total_area(&self, filter: impl Fn(usize) -> bool) -> f64 {
        (0..self.num_triangles()).filter(|&e| filter(e)).map(|e| self.area(e)).sum()
    }

    /// Replaces the kappa mask (e.g. to restrict the Robin weight to the
    /// control support).
    pub fn with_kappa_mask(&self, kappa_mask: Vec<bool>) -> Result<Self> {
        TriMesh::new(
            self.vertices.clone(),
            self.triangles.clone(),
            self.elem_region.clone(),
            kappa_mask,
            self.control_mask.clone(),
        )
    }

    /// Region of the element containing `p`; edge ties resolve to the
    /// lowest element index. `None` when `p` lies outside the mesh.
    pub fn locate_region(&self, p: [f64; 2]) -> Option<Region> {
        self.locate_element(p).map(|e| self.elem_region[e])
    }

    pub fn locate_element(&self, p: [f64; 2]) -> Option<usize> {
        (0..self.num_triangles()).find(|&e| {
            let c = self.corners(e);
            let scale = signed_area(&c);
            let tol = -1e-12 * scale;
            orient(c[0], c[1], p) >= tol && orient(c[1], c[2], p) >= tol && orient(c[2], c[0], p) >= tol
        })
    }

    /// Boundary edges of the triangulation, each oriented so the mesh lies
    /// to its left.
    pub fn boundary_edges(&self) -> Vec<[usize; 2]> {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let mut out = Vec::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if count[&(a.min(b), a.max(b))] == 1 {
                    out.push([a, b]);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Largest edge length.
    pub fn max_edge_length(&self) -> f64 {
        let mut h = 0.0_f64;
        for t in &self.triangles {
            for k in 0..3 {
                h = h.max(dist(self.vertices[t[k]], self.vertices[t[(k + 1) % 3]]));
            }
        }
        h
    }

    /// Splits every triangle into four by its edge midpoints. Children
    /// inherit the parent's region and masks.
    pub fn refine_uniform(&self) -> Result<TriMesh> {
        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let (pa, pb) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                vertices.len() - 1
            })
        };
        let nt = self.num_triangles();
        let mut triangles = Vec::with_capacity(4 * nt);
        let mut regions = Vec::with_capacity(4 * nt);
        let mut kappa = Vec::with_capacity(4 * nt);
        let mut control = Vec::with_capacity(4 * nt);
        for (e, &[a, b, c]) in self.triangles.iter().enumerate() {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            for child in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
                triangles.push(child);
                regions.push(self.elem_region[e]);
                kappa.push(self.kappa_mask[e]);
                control.push(self.control_mask[e]);
            }
        }
        TriMesh::new(vertices, triangles, regions, kappa, control)
    }

    /// Checks orientation, edge multiplicity, opposite-side neighbours and
    /// the absence of hanging nodes.
    fn check_conforming(&self) -> Result<()> {
        for e in 0..self.num_triangles() {
            if !(self.area(e) > 0.0) {
                return Err(Error::Validation(format!(
                    "triangle {e} has non-positive signed area {}",
                    self.area(e)
                )));
            }
        }
        let mut edges: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (e, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push((e, t[(k + 2) % 3]));
            }
        }
        for (&(a, b), users) in &edges {
            if users.len() > 2 {
                return Err(Error::Validation(format!("edge ({a},{b}) is shared by {} triangles", users.len())));
            }
            if users.len() == 2 {
                let (pa, pb) = (self.vertices[a], self.vertices[b]);
                let s0 = orient(pa, pb, self.vertices[users[0].1]);
                let s1 = orient(pa, pb, self.vertices[users[1].1]);
                if s0 * s1 >= 0.0 {
                    return Err(Error::Validation(format!(
                        "triangles {} and {} overlap across edge ({a},{b})",
                        users[0].0, users[1].0
                    )));
                }
            }
        }
        self.check_hanging_nodes()
    }

    fn check_hanging_nodes(&self) -> Result<()> {
        let nv = self.num_vertices();
        if nv == 0 {
            return Ok(());
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let cells = ((nv as f64).sqrt().ceil() as usize).max(1);
        let cw = [(hi[0] - lo[0]).max(1e-300) / cells as f64, (hi[1] - lo[1]).max(1e-300) / cells as f64];
        let cell_of = |p: [f64; 2]| -> (usize, usize) {
            let i = (((p[0] - lo[0]) / cw[0]) as usize).min(cells - 1);
            let j = (((p[1] - lo[1]) / cw[1]) as usize).min(cells - 1);
            (i, j)
        };
        let mut bucket: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
        for (v, p) in self.vertices.iter().enumerate() {
            let (i, j) = cell_of(*p);
            bucket[i * cells + j].push(v);
        }
        for (e, t) in self.triangles.iter().enumerate() {
            let c = self.corners(e);
            let area2 = 2.0 * signed_area(&c);
            let tol = 1e-10 * area2;
            let (bl, bh) = (
                [c[0][0].min(c[1][0]).min(c[2][0]), c[0][1].min(c[1][1]).min(c[2][1])],
                [c[0][0].max(c[1][0]).max(c[2][0]), c[0][1].max(c[1][1]).max(c[2][1])],
            );
            let (i0, j0) = cell_of(bl);
            let (i1, j1) = cell_of(bh);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    for &v in &bucket[i * cells + j] {
                        if t.contains(&v) {
                            continue;
                        }
                        let p = self.vertices[v];
                        let o = [orient(c[0], c[1], p), orient(c[1], c[2], p), orient(c[2], c[0], p)];
                        if o.iter().all(|&x| x > -tol) {
                            return Err(Error::Validation(format!(
                                "vertex {v} lies on or inside triangle {e} without being one of its corners (hanging node)"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

pub(crate) fn signed_area(c: &[[f64; 2]; 3]) -> f64 {
    0.5 * orient(c[0], c[1], c[2])
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
