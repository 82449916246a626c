// Mesh the region between an obstacle and the truncation sphere for the
// three supported obstacle shapes and round-trip one mesh through the
// `tetmesh 1` text format.

use lapscat::geometry::{build_exterior_mesh, ExteriorMesh, ObstacleShape, Polyhedron, Vec3};

fn octahedron() -> Polyhedron {
    let v = vec![
        Vec3::x(),
        -Vec3::x(),
        Vec3::y(),
        -Vec3::y(),
        Vec3::z(),
        -Vec3::z(),
    ];
    let t = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    Polyhedron::new(v, t).expect("closed surface")
}

fn main() -> lapscat::Result<()> {
    let shapes = [
        ("sphere", ObstacleShape::Sphere { radius: 1.0 }),
        ("box", ObstacleShape::Box { half_extents: [0.8, 0.6, 0.5] }),
        ("octahedron", ObstacleShape::Polyhedron(octahedron())),
    ];
    println!("{:<11} {:>8} {:>8} {:>9} {:>8} {:>8}", "shape", "verts", "cells", "volume", "max_edge", "Gamma");
    for (name, shape) in &shapes {
        let mesh = build_exterior_mesh(shape, 2.0, 4.0, 0.5)?;
        let s = mesh.stats();
        println!(
            "{name:<11} {:>8} {:>8} {:>9.3} {:>8.3} {:>8}",
            s.vertices, s.cells, s.volume, s.max_edge, s.obstacle_facets
        );
    }

    let mesh = build_exterior_mesh(&shapes[0].1, 2.0, 4.0, 0.5)?;
    let exact = 4.0 / 3.0 * std::f64::consts::PI * (64.0 - 1.0);
    println!("sphere shell volume {:.4} (exact {:.4})", mesh.total_volume(), exact);

    let back = ExteriorMesh::from_text(&mesh.to_text())?;
    assert_eq!(back.cells(), mesh.cells());
    println!("text round trip: {} cells", back.num_cells());
    Ok(())
}
