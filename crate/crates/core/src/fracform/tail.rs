//! Far-field weight `omega(x) = int_{R^2 \ D} |x - y|^(-2-2s) dy` for points
//! `x` inside a convex polygon `D`.
//!
//! In polar coordinates around `x` the radial integral is explicit, leaving
//! `(1/2s) int rho(theta)^(-2s) dtheta` with `rho` the distance to the
//! boundary in direction `theta`. Over the angle subtended by one edge at
//! perpendicular distance `d`, `rho = d / cos(phi)`.

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone)]
pub struct TailWeight {
    edges: Vec<([f64; 2], [f64; 2])>,
    s: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TailWeight {
    /// `edges` must be the counter-clockwise boundary of a convex polygon.
    pub fn new(edges: Vec<([f64; 2], [f64; 2])>, s: f64, points: usize) -> Result<Self> {
        let scale = edges
            .iter()
            .flat_map(|(a, b)| [a[0].abs(), a[1].abs(), b[0].abs(), b[1].abs()])
            .fold(0.0_f64, f64::max);
        let tol = 1e-9 * scale.max(1.0);
        for (a, b) in &edges {
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            for (p, _) in &edges {
                let side = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
                if side < -tol * len {
                    return Err(Error::Geometry(
                        "outer mesh boundary is not convex; far-field weight needs a convex hull"
                            .into(),
                    ));
                }
            }
        }
        let (nodes, weights) = gauss_legendre(points);
        Ok(Self { edges, s, nodes, weights })
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let s2 = 2.0 * self.s;
        let mut total = 0.0;
        for (a, b) in &self.edges {
            let t = [b[0] - a[0], b[1] - a[1]];
            let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
            let t = [t[0] / len, t[1] / len];
            // outward normal of a counter-clockwise boundary
            let nrm = [t[1], -t[0]];
            let ra = [a[0] - x[0], a[1] - x[1]];
            let rb = [b[0] - x[0], b[1] - x[1]];
            let d = ra[0] * nrm[0] + ra[1] * nrm[1];
            if d <= 0.0 {
                continue;
            }
            let p1 = (ra[0] * t[0] + ra[1] * t[1]).atan2(d);
            let p2 = (rb[0] * t[0] + rb[1] * t[1]).atan2(d);
            let width = p2 - p1;
            let mut acc = 0.0;
            for (u, w) in self.nodes.iter().zip(&self.weights) {
                acc += w * (p1 + u * width).cos().powf(s2);
            }
            total += d.powf(-s2) * acc * width;
        }
        total / s2
    }
}
