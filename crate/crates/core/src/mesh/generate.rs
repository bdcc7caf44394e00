use std::f64::consts::PI;

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::{orient, Region, TriMesh};
use crate::error::{Error, Result};

/// Planar shapes used to describe the domain, the computational disk and
/// the control support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk { center: [f64; 2], radius: f64 },
    /// Axis-aligned square `center +- half_width`.
    Square { center: [f64; 2], half_width: f64 },
    /// Axis-aligned square annulus between two concentric squares.
    SquareFrame { center: [f64; 2], inner_half_width: f64, outer_half_width: f64 },
}

impl Shape {
    fn validate(&self, name: &str) -> Result<()> {
        let ok = match *self {
            Shape::Disk { center, radius } => finite2(center) && radius > 0.0 && radius.is_finite(),
            Shape::Square { center, half_width } => finite2(center) && half_width > 0.0 && half_width.is_finite(),
            Shape::SquareFrame { center, inner_half_width, outer_half_width } => {
                finite2(center)
                    && inner_half_width > 0.0
                    && outer_half_width > inner_half_width
                    && outer_half_width.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("{name}: invalid shape {self:?}")))
        }
    }

    /// Polygonal approximation with edges no longer than `h`: outer loop
    /// first (counter-clockwise), then holes.
    fn loops(&self, h: f64) -> Vec<Vec<[f64; 2]>> {
        match *self {
            Shape::Disk { center, radius } => {
                let m = ((2.0 * PI * radius / h).ceil() as usize).max(8);
                vec![(0..m)
                    .map(|k| {
                        let a = 2.0 * PI * k as f64 / m as f64;
                        [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
                    })
                    .collect()]
            }
            Shape::Square { center, half_width } => vec![square_loop(center, half_width, h)],
            Shape::SquareFrame { center, inner_half_width, outer_half_width } => {
                vec![square_loop(center, outer_half_width, h), square_loop(center, inner_half_width, h)]
            }
        }
    }

    /// Closed-set membership for the exact (curved) shape.
    fn contains_closed(&self, p: [f64; 2]) -> bool {
        match *self {
            Shape::Disk { center, radius } => super::dist(p, center) <= radius,
            Shape::Square { center, half_width } => {
                (p[0] - center[0]).abs() <= half_width && (p[1] - center[1]).abs() <= half_width
            }
            Shape::SquareFrame { center, inner_half_width, outer_half_width } => {
                let m = (p[0] - center[0]).abs().max((p[1] - center[1]).abs());
                m <= outer_half_width && m >= inner_half_width
            }
        }
    }
}

fn finite2(p: [f64; 2]) -> bool {
    p[0].is_finite() && p[1].is_finite()
}

fn square_loop(c: [f64; 2], a: f64, h: f64) -> Vec<[f64; 2]> {
    let m = ((2.0 * a / h).ceil() as usize).max(1);
    let corners = [[c[0] - a, c[1] - a], [c[0] + a, c[1] - a], [c[0] + a, c[1] + a], [c[0] - a, c[1] + a]];
    let mut out = Vec::with_capacity(4 * m);
    for k in 0..4 {
        let (p, q) = (corners[k], corners[(k + 1) % 4]);
        for i in 0..m {
            let t = i as f64 / m as f64;
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Which exterior elements carry the Robin weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KappaSupport {
    /// Every exterior element of the mesh.
    #[default]
    AllExterior,
    /// Only the control-support elements.
    Control,
}

/// Input to [`generate_mesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySpec {
    pub omega: Shape,
    /// Must be a [`Shape::Disk`].
    pub omega_tilde: Shape,
    pub control_support: Option<Shape>,
    pub target_h: f64,
    pub kappa_support: KappaSupport,
}

impl GeometrySpec {
    /// Unit-ball test setup: `Omega = B(0, 1/2)` inside `B(0, 3/2)`.
    pub fn disk_in_disk(target_h: f64) -> Self {
        GeometrySpec {
            omega: Shape::Disk { center: [0.0, 0.0], radius: 0.5 },
            omega_tilde: Shape::Disk { center: [0.0, 0.0], radius: 1.5 },
            control_support: None,
            target_h,
            kappa_support: KappaSupport::AllExterior,
        }
    }

    /// Identification setup: `Omega = [-0.4, 0.4]^2` inside `B(0, 3/2)` with
    /// a square control patch to the right of the domain.
    pub fn square_with_control(target_h: f64) -> Self {
        GeometrySpec {
            omega: Shape::Square { center: [0.0, 0.0], half_width: 0.4 },
            omega_tilde: Shape::Disk { center: [0.0, 0.0], radius: 1.5 },
            control_support: Some(Shape::Square { center: [0.85, 0.0], half_width: 0.2 }),
            target_h,
            kappa_support: KappaSupport::AllExterior,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.target_h > 0.0) || !self.target_h.is_finite() {
            return Err(Error::Parameter(format!("target_h must be a positive number, got {}", self.target_h)));
        }
        self.omega.validate("omega")?;
        self.omega_tilde.validate("omega_tilde")?;
        let Shape::Disk { center, radius } = self.omega_tilde else {
            return Err(Error::Geometry("omega_tilde must be a disk".into()));
        };
        if matches!(self.omega, Shape::SquareFrame { .. }) {
            return Err(Error::Geometry("omega must be a disk or a square".into()));
        }
        let fine = |s: &Shape| s.loops(1e-3 * radius).concat();
        let inside_tilde = |pts: &[[f64; 2]]| pts.iter().all(|&p| super::dist(p, center) < radius);
        if !inside_tilde(&fine(&self.omega)) {
            return Err(Error::Geometry("omega is not strictly inside omega_tilde".into()));
        }
        if let Some(ctrl) = &self.control_support {
            ctrl.validate("control_support")?;
            let cpts = fine(ctrl);
            if !inside_tilde(&cpts) {
                return Err(Error::Geometry("control support is not strictly inside omega_tilde".into()));
            }
            let opts = fine(&self.omega);
            if cpts.iter().any(|&p| self.omega.contains_closed(p)) || opts.iter().any(|&p| ctrl.contains_closed(p)) {
                return Err(Error::Geometry("control support intersects the closure of omega".into()));
            }
        }
        Ok(())
    }
}

/// Polygonal region: outer loop minus holes.
struct PolyRegion {
    loops: Vec<Vec<[f64; 2]>>,
}

impl PolyRegion {
    fn contains(&self, p: [f64; 2]) -> bool {
        let mut inside = point_in_polygon(&self.loops[0], p);
        for hole in &self.loops[1..] {
            if point_in_polygon(hole, p) {
                inside = false;
            }
        }
        inside
    }
}

fn point_in_polygon(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0] {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    super::dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

/// Builds a conforming mesh of `omega_tilde` whose element boundaries follow
/// the polygonal approximations of all region boundaries.
///
/// Boundary loops are sampled with spacing at most `target_h`, the interior
/// is filled with a triangular lattice of spacing `target_h` (points too
/// close to a boundary loop are dropped), and the point set is triangulated
/// with the loops as constrained edges.
pub fn generate_mesh(spec: &GeometrySpec) -> Result<TriMesh> {
    spec.validate()?;
    let h = spec.target_h;

    let outer = spec.omega_tilde.loops(h);
    let omega = PolyRegion { loops: spec.omega.loops(h) };
    let control = spec.control_support.map(|c| PolyRegion { loops: c.loops(h) });

    let mut all_loops: Vec<&Vec<[f64; 2]>> = outer.iter().collect();
    all_loops.extend(omega.loops.iter());
    if let Some(c) = &control {
        all_loops.extend(c.loops.iter());
    }

    let segments: Vec<([f64; 2], [f64; 2])> = all_loops
        .iter()
        .flat_map(|l| (0..l.len()).map(move |i| (l[i], l[(i + 1) % l.len()])))
        .collect();

    let Shape::Disk { center, radius } = spec.omega_tilde else { unreachable!() };
    let dy = h * 3f64.sqrt() / 2.0;
    let rows = (radius / dy).ceil() as i64 + 1;
    let cols = (radius / h).ceil() as i64 + 2;
    let margin = 0.55 * h;
    let mut lattice = Vec::new();
    for j in -rows..=rows {
        let y = center[1] + j as f64 * dy;
        let shift = if j.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
        for i in -cols..=cols {
            let p = [center[0] + i as f64 * h + shift, y];
            if !point_in_polygon(&outer[0], p) {
                continue;
            }
            if segments.iter().any(|&(a, b)| segment_distance(p, a, b) < margin) {
                continue;
            }
            lattice.push(p);
        }
    }

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let insert = |cdt: &mut ConstrainedDelaunayTriangulation<Point2<f64>>, p: [f64; 2]| {
        cdt.insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::Geometry(format!("point insertion failed: {e:?}")))
    };
    for l in &all_loops {
        let handles = l.iter().map(|&p| insert(&mut cdt, p)).collect::<Result<Vec<_>>>()?;
        for i in 0..handles.len() {
            let (a, b) = (handles[i], handles[(i + 1) % handles.len()]);
            if cdt.can_add_constraint(a, b) {
                cdt.add_constraint(a, b);
            } else {
                return Err(Error::Geometry("region boundaries intersect at the requested resolution".into()));
            }
        }
    }
    for p in lattice {
        insert(&mut cdt, p)?;
    }

    let vertices: Vec<[f64; 2]> = cdt.vertices().map(|v| [v.position().x, v.position().y]).collect();
    let mut triangles = Vec::new();
    let mut regions = Vec::new();
    let mut kappa = Vec::new();
    let mut ctrl_mask = Vec::new();
    for face in cdt.inner_faces() {
        let vs = face.vertices();
        let mut t = [vs[0].fix().index(), vs[1].fix().index(), vs[2].fix().index()];
        let c = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
        if orient(c[0], c[1], c[2]) < 0.0 {
            t.swap(1, 2);
        }
        let centroid = [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0];
        let region = if omega.contains(centroid) { Region::Omega } else { Region::Exterior };
        let in_control = region == Region::Exterior && control.as_ref().is_some_and(|c| c.contains(centroid));
        triangles.push(t);
        regions.push(region);
        ctrl_mask.push(in_control);
        kappa.push(match spec.kappa_support {
            KappaSupport::AllExterior => region == Region::Exterior,
            KappaSupport::Control => in_control,
        });
    }
    TriMesh::new(vertices, triangles, regions, kappa, ctrl_mask)
}
