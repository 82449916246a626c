use std::f64::consts::PI;

use lapscat::geometry::{build_exterior_mesh, load_mesh, sphere_quadrature, ExteriorMesh, FacetTag, ObstacleShape};
use lapscat::Error;
use proptest::prelude::*;

fn unit_sphere(h: f64) -> ExteriorMesh {
    build_exterior_mesh(&ObstacleShape::Sphere { radius: 1.0 }, 2.0, 6.0, h).unwrap()
}

#[test]
fn obstacle_facets_scale_with_h_squared() {
    let coarse = unit_sphere(0.5);
    let fine = unit_sphere(0.25);
    coarse.validate().unwrap();
    let count = |m: &ExteriorMesh| m.facets_tagged(FacetTag::Obstacle).count() as f64;
    let ratio = count(&fine) / count(&coarse);
    assert!((3.0..=5.0).contains(&ratio), "{ratio}");
}

#[test]
fn volume_fills_the_annulus() {
    let exact = 4.0 / 3.0 * PI * (6.0f64.powi(3) - 1.0);
    for (h, tol) in [(0.5, 0.03), (0.25, 0.01)] {
        let rel = (unit_sphere(h).total_volume() - exact).abs() / exact;
        assert!(rel < tol, "h = {h}: {rel}");
    }
}

#[test]
fn infeasible_obstacle() {
    let err = build_exterior_mesh(&ObstacleShape::Sphere { radius: 3.0 }, 2.0, 6.0, 0.5).unwrap_err();
    assert!(matches!(err, Error::InfeasibleGeometry(_)), "{err}");
}

#[test]
fn file_round_trip() {
    let mesh = unit_sphere(0.5);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mesh.txt");
    mesh.save(&path).unwrap();
    let back = load_mesh(&path).unwrap();
    assert_eq!(back.num_vertices(), mesh.num_vertices());
    assert_eq!(back.num_cells(), mesh.num_cells());
    assert_eq!(back.facets().len(), mesh.facets().len());
    assert_eq!(
        serde_json::to_string(&back.stats()).unwrap(),
        serde_json::to_string(&mesh.stats()).unwrap()
    );
}

#[test]
fn negative_volume_cell_is_rejected() {
    let text = unit_sphere(0.8).to_text();
    let mut flipped = false;
    let bad: Vec<String> = text
        .lines()
        .map(|l| match l.strip_prefix("c ") {
            Some(rest) if !flipped => {
                flipped = true;
                let v: Vec<&str> = rest.split_whitespace().collect();
                format!("c {} {} {} {}", v[1], v[0], v[2], v[3])
            }
            _ => l.to_string(),
        })
        .collect();
    let err = ExteriorMesh::from_text(&bad.join("\n")).unwrap_err();
    match err {
        Error::MeshInvariant { invariant, .. } => assert!(invariant.contains("positive"), "{invariant}"),
        other => panic!("unexpected {other}"),
    }
    assert!(matches!(ExteriorMesh::from_text(""), Err(Error::Parse { .. })));
}

proptest! {
    #[test]
    fn sphere_rule_moments(order in 1usize..40, r in 0.5f64..5.0) {
        let q = sphere_quadrature(r, order).unwrap();
        let area = q.integrate(|_| 1.0);
        prop_assert!((area - 4.0 * PI * r * r).abs() <= 1e-10 * r * r);
        if order >= 2 {
            let m = q.integrate(|x| (x.z / r).powi(2));
            prop_assert!((m - 4.0 * PI * r * r / 3.0).abs() <= 1e-10 * r * r);
        }
    }
}
