//! Quadrature rules on the unit interval and on the reference triangle
//! `{(x, y) : x, y >= 0, x + y <= 1}`.

use crate::error::{Error, Result};

/// Points and weights on the reference triangle; weights sum to 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Integrates `f` over the reference triangle.
    pub fn integrate(&self, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p[0], p[1])).sum()
    }

    /// Splits the reference triangle into four congruent children and maps
    /// this rule onto each of them.
    pub fn composite4(&self) -> TriangleRule {
        let children: [[[f64; 2]; 3]; 4] = [
            [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]],
            [[0.5, 0.0], [1.0, 0.0], [0.5, 0.5]],
            [[0.0, 0.5], [0.5, 0.5], [0.0, 1.0]],
            [[0.5, 0.5], [0.0, 0.5], [0.5, 0.0]],
        ];
        let mut points = Vec::with_capacity(4 * self.len());
        let mut weights = Vec::with_capacity(4 * self.len());
        for c in &children {
            for (p, w) in self.points.iter().zip(&self.weights) {
                let (l1, l2) = (p[0], p[1]);
                let l0 = 1.0 - l1 - l2;
                points.push([
                    l0 * c[0][0] + l1 * c[1][0] + l2 * c[2][0],
                    l0 * c[0][1] + l1 * c[1][1] + l2 * c[2][1],
                ]);
                weights.push(0.25 * w);
            }
        }
        TriangleRule { points, weights }
    }
}

fn symmetric_orbit(points: &mut Vec<[f64; 2]>, weights: &mut Vec<f64>, a: f64, w: f64) {
    let b = 1.0 - 2.0 * a;
    for p in [[a, a], [b, a], [a, b]] {
        points.push(p);
        weights.push(0.5 * w);
    }
}

fn full_orbit(points: &mut Vec<[f64; 2]>, weights: &mut Vec<f64>, a: f64, b: f64, w: f64) {
    let c = 1.0 - a - b;
    for p in [[a, b], [b, a], [a, c], [c, a], [b, c], [c, b]] {
        points.push(p);
        weights.push(0.5 * w);
    }
}

/// Symmetric rule exact for polynomials of total degree `order`
/// (supported: 2, 4, 6).
pub fn quadrature_rule(order: usize) -> Result<TriangleRule> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match order {
        2 => symmetric_orbit(&mut points, &mut weights, 1.0 / 6.0, 1.0 / 3.0),
        4 => {
            symmetric_orbit(&mut points, &mut weights, 0.445948490915965, 0.223381589678011);
            symmetric_orbit(&mut points, &mut weights, 0.091576213509771, 0.109951743655322);
        }
        6 => {
            symmetric_orbit(&mut points, &mut weights, 0.249286745170910, 0.116786275726379);
            symmetric_orbit(&mut points, &mut weights, 0.063089014491502, 0.050844906370207);
            full_orbit(&mut points, &mut weights, 0.053145049844817, 0.310352451033784, 0.082851075618374);
        }
        _ => {
            return Err(Error::Parameter(format!(
                "unsupported triangle quadrature order {order}; expected 2, 4 or 6"
            )))
        }
    }
    Ok(TriangleRule { points, weights })
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Collapsed (Duffy) tensor Gauss rule with `n * n` points on the reference
/// triangle; exact for total degree `2n - 2`.
pub fn collapsed_triangle_rule(n: usize) -> TriangleRule {
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (u, wu) in x.iter().zip(&w) {
        for (v, wv) in x.iter().zip(&w) {
            points.push([u * (1.0 - v), u * v]);
            weights.push(wu * wv * u);
        }
    }
    TriangleRule { points, weights }
}
