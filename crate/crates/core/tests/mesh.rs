use std::collections::HashMap;

use exofrac_core::mesh::{generate_mesh, load_mesh, save_mesh, Region, Shape, TriMesh};
use exofrac_core::{Error, GeometrySpec};

/// Every interior edge is shared by exactly two triangles with opposite
/// orientation and no vertex lies inside another triangle's edge.
fn assert_conforming(mesh: &TriMesh) {
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in mesh.triangles() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *edges.entry((a, b)).or_default() += 1;
        }
    }
    for (&(a, b), &c) in &edges {
        assert_eq!(c, 1, "edge ({a},{b}) repeated with the same orientation");
        if !edges.contains_key(&(b, a)) {
            // boundary edge: no vertex may sit on it
            let (p, q) = (mesh.vertices()[a], mesh.vertices()[b]);
            for (i, v) in mesh.vertices().iter().enumerate() {
                if i == a || i == b {
                    continue;
                }
                let cross = (q[0] - p[0]) * (v[1] - p[1]) - (q[1] - p[1]) * (v[0] - p[0]);
                let t = ((v[0] - p[0]) * (q[0] - p[0]) + (v[1] - p[1]) * (q[1] - p[1]))
                    / ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2));
                assert!(!(cross.abs() < 1e-12 && t > 0.0 && t < 1.0), "hanging vertex {i} on edge ({a},{b})");
            }
        }
    }
}

fn omega_area(mesh: &TriMesh) -> f64 {
    mesh.total_area(|e| mesh.region(e) == Region::Omega)
}

#[test]
fn generated_meshes_conform_and_refine_by_four() {
    let mesh = generate_mesh(&GeometrySpec::disk_in_disk(0.4)).unwrap();
    assert_conforming(&mesh);
    let mut m = mesh.clone();
    for _ in 0..2 {
        let r = m.refine_uniform().unwrap();
        assert_eq!(r.num_triangles(), 4 * m.num_triangles());
        assert_conforming(&r);
        assert!((omega_area(&r) - omega_area(&m)).abs() < 1e-12);
        for p in m.vertices() {
            assert!(r.vertices().contains(p));
        }
        m = r;
    }
}

#[test]
fn children_inherit_tags() {
    let mesh = generate_mesh(&GeometrySpec::square_with_control(0.3)).unwrap();
    let fine = mesh.refine_uniform().unwrap();
    for e in 0..fine.num_triangles() {
        let c = fine.corners(e);
        let centroid = [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0];
        let parent = mesh.locate_element(centroid).unwrap();
        assert_eq!(fine.region(e), mesh.region(parent));
        assert_eq!(fine.control_mask()[e], mesh.control_mask()[parent]);
        assert_eq!(fine.kappa_mask()[e], mesh.kappa_mask()[parent]);
    }
}

#[test]
fn control_patch_is_disjoint_from_omega() {
    let mesh = generate_mesh(&GeometrySpec::square_with_control(0.15)).unwrap();
    assert!(mesh.control_mask().iter().any(|c| *c));
    for e in 0..mesh.num_triangles() {
        if mesh.control_mask()[e] {
            assert_eq!(mesh.region(e), Region::Exterior);
        }
    }
    let omega_area = omega_area(&mesh);
    assert!((omega_area - 0.64).abs() < 1e-12, "square Omega area {omega_area}");
}

#[test]
fn disk_area_converges() {
    let exact = std::f64::consts::PI * 0.25;
    let mut last = f64::INFINITY;
    for h in [0.4, 0.2, 0.1, 0.05] {
        let mesh = generate_mesh(&GeometrySpec::disk_in_disk(h)).unwrap();
        assert_conforming(&mesh);
        let err = (omega_area(&mesh) - exact).abs();
        assert!(err < last, "h={h}: {err} !< {last}");
        last = err;
    }
    assert!(last < 1e-2);
}

#[test]
fn locate_region_examples() {
    let mesh = generate_mesh(&GeometrySpec::disk_in_disk(0.3)).unwrap();
    assert_eq!(mesh.locate_region([0.0, 0.0]), Some(Region::Omega));
    assert_eq!(mesh.locate_region([1.0, 0.0]), Some(Region::Exterior));
    assert_eq!(mesh.locate_region([0.0, 2.0]), None);
}

#[test]
fn infeasible_and_degenerate_specs() {
    let mut spec = GeometrySpec::disk_in_disk(0.2);
    spec.omega = Shape::Disk { center: [0.0, 0.0], radius: 2.0 };
    assert!(matches!(generate_mesh(&spec), Err(Error::Geometry(_))));
    assert!(matches!(generate_mesh(&GeometrySpec::disk_in_disk(0.0)), Err(Error::Parameter(_))));
    assert!(matches!(generate_mesh(&GeometrySpec::disk_in_disk(-1.0)), Err(Error::Parameter(_))));
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = generate_mesh(&GeometrySpec::square_with_control(0.3)).unwrap();
    let path = dir.path().join("mesh.txt");
    save_mesh(&mesh, &path).unwrap();
    assert_eq!(load_mesh(&path).unwrap(), mesh);
}
