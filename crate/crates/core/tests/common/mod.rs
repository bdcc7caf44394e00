#![allow(dead_code)]

pub mod checks;
pub mod oracle;

use exofrac_core::mesh::{Region, TriMesh};

/// 3x3 vertex grid on [-1, 1]^2 with the centre vertex moved off-centre.
/// Diagonals are chosen so that the lower-left and upper-right corner
/// triangles are disjoint; elements listed in `omega` are interior.
/// Only elements 1 and 6 avoid the outer boundary edges, so other interior
/// choices have an infinite far-field term for `s >= 1/2`.
pub fn grid8(omega: &[usize]) -> TriMesh {
    let v = vec![
        [-1.0, -1.0],
        [0.0, -1.0],
        [1.0, -1.0],
        [-1.0, 0.0],
        [0.08, -0.05],
        [1.0, 0.0],
        [-1.0, 1.0],
        [0.0, 1.0],
        [1.0, 1.0],
    ];
    let t = vec![
        [0, 1, 3],
        [1, 4, 3],
        [1, 2, 4],
        [2, 5, 4],
        [3, 4, 6],
        [4, 7, 6],
        [4, 5, 7],
        [5, 8, 7],
    ];
    let region = (0..8).map(|e| if omega.contains(&e) { Region::Omega } else { Region::Exterior }).collect();
    let kappa = (0..8).map(|e| !omega.contains(&e)).collect();
    TriMesh::new(v, t, region, kappa, vec![false; 8]).unwrap()
}

/// Two triangles sharing an edge: one interior, one exterior.
pub fn toy2() -> TriMesh {
    TriMesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [0.9, 0.8], [0.1, 1.1]],
        vec![[0, 1, 2], [0, 2, 3]],
        vec![Region::Omega, Region::Exterior],
        vec![false, true],
        vec![false, false],
    )
    .unwrap()
}

/// `m x m` cells on [-1, 1]^2, each split along alternating diagonals, with
/// interior vertices shifted by up to `jitter` times the cell size (values
/// in [-1, 1], cycled). Elements whose centroid lies within `radius` of the
/// origin are interior; all others carry the Robin weight.
pub fn square_grid(m: usize, radius: f64, jitter: &[f64]) -> TriMesh {
    let h = 2.0 / m as f64;
    let mut v = Vec::new();
    let mut c = 0;
    for j in 0..=m {
        for i in 0..=m {
            let mut p = [-1.0 + i as f64 * h, -1.0 + j as f64 * h];
            if i > 0 && i < m && j > 0 && j < m && !jitter.is_empty() {
                p[0] += 0.25 * h * jitter[c % jitter.len()];
                p[1] += 0.25 * h * jitter[(c + 1) % jitter.len()];
                c += 2;
            }
            v.push(p);
        }
    }
    let id = |i: usize, j: usize| j * (m + 1) + i;
    let mut t = Vec::new();
    for j in 0..m {
        for i in 0..m {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                t.push([a, b, c]);
                t.push([a, c, d]);
            } else {
                t.push([a, b, d]);
                t.push([b, c, d]);
            }
        }
    }
    let region: Vec<Region> = t
        .iter()
        .map(|tri| {
            let cx = tri.iter().map(|&k| v[k][0]).sum::<f64>() / 3.0;
            let cy = tri.iter().map(|&k| v[k][1]).sum::<f64>() / 3.0;
            if cx.hypot(cy) < radius { Region::Omega } else { Region::Exterior }
        })
        .collect();
    let kappa = region.iter().map(|r| *r == Region::Exterior).collect();
    let ne = t.len();
    TriMesh::new(v, t, region, kappa, vec![false; ne]).unwrap()
}
