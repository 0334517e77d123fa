use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use su2dp::lie::AlgebraVector;
use su2dp::mesh::{MeshError, SimplicialMesh, VertexFlag, INSIDE_TOL};

fn random_in_ball(rng: &mut impl Rng, radius: f64) -> AlgebraVector {
    loop {
        let p = AlgebraVector::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if p.norm() <= 1.0 {
            return p * radius;
        }
    }
}

/// A point strictly inside simplex `s`, away from every face.
fn interior_point(rng: &mut impl Rng, mesh: &SimplicialMesh, s: usize) -> AlgebraVector {
    let v = mesh.simplex_vertices(s).unwrap();
    let mut w: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.05..1.0));
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    (0..4).fold(AlgebraVector::zero(), |acc, i| acc + v[i] * w[i])
}

#[test]
fn neighbouring_simplices_meet_only_in_faces() {
    let mesh = SimplicialMesh::triangulate_ball(1.5, 0.3, 0.3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut pairs = 0;
    while pairs < 1000 {
        let a = rng.gen_range(0..mesh.simplex_count());
        let corner = mesh.simplices()[a][rng.gen_range(0..4)] as usize;
        let star = mesh.star(corner).unwrap();
        let b = star[rng.gen_range(0..star.len())] as usize;
        if a == b {
            continue;
        }
        pairs += 1;
        // interiors are disjoint: no strictly interior point of one lies
        // strictly inside the other
        for (x, y) in [(a, b), (b, a)] {
            for _ in 0..20 {
                let p = interior_point(&mut rng, &mesh, x);
                let w = mesh.barycentric_weights(y, &p).unwrap();
                assert!(
                    w.iter().any(|&c| c <= 1e-9),
                    "simplices {x} and {y} overlap at {p:?}"
                );
            }
        }
    }
}

#[test]
fn each_triangle_bounds_at_most_two_tetrahedra() {
    let mesh = SimplicialMesh::triangulate_ball(1.5, 0.3, 0.3).unwrap();
    let mut count: HashMap<[u32; 3], usize> = HashMap::new();
    for s in mesh.simplices() {
        for skip in 0..4 {
            let mut face: Vec<u32> = (0..4).filter(|&i| i != skip).map(|i| s[i]).collect();
            face.sort_unstable();
            *count.entry([face[0], face[1], face[2]]).or_default() += 1;
        }
    }
    assert!(count.values().all(|&c| c <= 2));
}

#[test]
fn locate_reconstructs_random_points() {
    let (rho, h) = (2.5, 0.2);
    let mesh = SimplicialMesh::triangulate_ball(rho, 0.2, h).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let p = random_in_ball(&mut rng, rho - h);
        let loc = mesh.locate(&p).unwrap();
        let v = mesh.simplex_vertices(loc.simplex_id).unwrap();
        assert!(loc.weights.iter().all(|&w| w >= INSIDE_TOL));
        assert!((loc.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let back = (0..4).fold(AlgebraVector::zero(), |acc, i| acc + v[i] * loc.weights[i]);
        assert!((back - p).norm() < 1e-10);
    }
}

#[test]
fn construction_postconditions() {
    for (rho, r_t, h) in [(2.5, 0.2, 0.2), (2.5, 0.2, 0.4), (1.0, 0.3, 0.25)] {
        let Ok(mesh) = SimplicialMesh::triangulate_ball(rho, r_t, h) else {
            // h = 0.4 exceeds r_T = 0.2, which the mesh rejects
            assert!(h > r_t);
            continue;
        };
        assert!(mesh.max_edge_length() <= h * (1.0 + 1e-12));
        assert!(mesh.min_volume() > 1e-14);
        assert!(mesh.vertices().iter().all(|v| v.norm() <= rho + h));
        let mut targets = 0;
        for (v, f) in mesh.vertices().iter().zip(mesh.flags()) {
            if v.norm() <= r_t {
                assert_eq!(*f, VertexFlag::Target);
                targets += 1;
            }
        }
        assert!(targets > 0);
        assert!(mesh.flags().contains(&VertexFlag::OuterBoundary));
    }
}

#[test]
fn outer_hull_vertices_are_flagged() {
    let mesh = SimplicialMesh::triangulate_ball(1.0, 0.3, 0.25).unwrap();
    let mut count: HashMap<[u32; 3], usize> = HashMap::new();
    for s in mesh.simplices() {
        for skip in 0..4 {
            let mut face: Vec<u32> = (0..4).filter(|&i| i != skip).map(|i| s[i]).collect();
            face.sort_unstable();
            *count.entry([face[0], face[1], face[2]]).or_default() += 1;
        }
    }
    for (face, c) in count {
        if c == 1 {
            for v in face {
                assert_eq!(mesh.flags()[v as usize], VertexFlag::OuterBoundary);
            }
        }
    }
}

#[test]
fn triangulation_is_deterministic() {
    let a = SimplicialMesh::triangulate_ball(2.0, 0.3, 0.3).unwrap();
    let b = SimplicialMesh::triangulate_ball(2.0, 0.3, 0.3).unwrap();
    let bits = |m: &SimplicialMesh| -> Vec<u64> {
        m.vertices()
            .iter()
            .flat_map(|v| v.as_array().map(f64::to_bits))
            .collect()
    };
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.simplices(), b.simplices());
    assert_eq!(a.flags(), b.flags());
}

#[test]
fn refinement_grows_the_mesh() {
    let coarse = SimplicialMesh::triangulate_ball(2.5, 0.4, 0.4).unwrap();
    let fine = SimplicialMesh::triangulate_ball(2.5, 0.4, 0.2).unwrap();
    assert!(fine.vertex_count() >= 4 * coarse.vertex_count());
    assert!(fine.max_edge_length() <= coarse.max_edge_length());
    let finer = SimplicialMesh::triangulate_ball(2.5, 0.2, 0.1).unwrap();
    assert!(finer.vertex_count() > fine.vertex_count());
}

#[test]
fn far_points_are_out_of_domain() {
    let mesh = SimplicialMesh::triangulate_ball(2.5, 0.2, 0.2).unwrap();
    let p = AlgebraVector::new(0.0, 2.71, 0.0);
    assert_eq!(mesh.locate(&p), Err(MeshError::OutOfDomain(p)));
}

#[test]
fn rejects_bad_geometry() {
    for (rho, r_t, h) in [
        (0.1, 0.2, 0.05),
        (7.0, 0.2, 0.1),
        (5.6, 0.2, 0.2),
        (2.0, 0.2, 0.0),
        (2.0, -0.1, 0.1),
    ] {
        assert!(matches!(
            SimplicialMesh::triangulate_ball(rho, r_t, h),
            Err(MeshError::InvalidGeometry(_))
        ));
    }
}
