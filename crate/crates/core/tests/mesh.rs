use std::time::Instant;

use pipediff::geometry::{build_surface_mesh, export_stl, parse_stl, presets, DiffuserSolid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Volume of the implicit solid by uniform sampling of its bounding shell.
fn monte_carlo_volume(solid: &DiffuserSolid, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (r0, r1, h) = (solid.inner_radius, solid.outer_radius, solid.half_height);
    let mut hits = 0usize;
    for _ in 0..samples {
        let r = (r0 * r0 + rng.gen::<f64>() * (r1 * r1 - r0 * r0)).sqrt();
        let phi = rng.gen::<f64>() * std::f64::consts::TAU;
        let z = (2.0 * rng.gen::<f64>() - 1.0) * h;
        if solid.signed_distance([r * phi.cos(), r * phi.sin(), z]) <= 0.0 {
            hits += 1;
        }
    }
    let shell = std::f64::consts::PI * (r1 * r1 - r0 * r0) * 2.0 * h;
    shell * hits as f64 / samples as f64
}

#[test]
fn p2_mesh_volume_matches_sampled_solid() {
    let design = presets::p2();
    let start = Instant::now();
    let mesh = build_surface_mesh(&design, 32).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(mesh.is_watertight());
    assert!(mesh.is_consistently_oriented());
    assert!(mesh.min_triangle_area() > 1e-9);
    let volume = mesh.signed_volume();
    let solid = DiffuserSolid::new(&design).unwrap();
    let reference = monte_carlo_volume(&solid, 2_000_000, 7);
    let rel = (volume - reference).abs() / reference;
    println!(
        "triangles {} volume {volume} sampled {reference} rel {rel} time {elapsed}s",
        mesh.triangles.len()
    );
    assert!(rel < 0.05);
    assert!(elapsed < 60.0);

    let bytes = export_stl(&mesh).unwrap();
    assert_eq!(bytes.len(), 84 + 50 * mesh.triangles.len());
    let back = parse_stl(&bytes).unwrap();
    assert_eq!(back.triangles.len(), mesh.triangles.len());
    for (a, b) in back.facets().iter().zip(mesh.facets()) {
        assert_eq!(
            a.map(|v| v.map(f32::to_bits)),
            b.map(|v| v.map(f32::to_bits))
        );
    }
}

#[test]
fn meshing_is_deterministic() {
    let a = build_surface_mesh(&presets::p3(), 8).unwrap();
    let b = build_surface_mesh(&presets::p3(), 8).unwrap();
    assert_eq!(a, b);
}
