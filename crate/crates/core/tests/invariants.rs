use gausslab::analytic::{plane_spectrum, sphere_index, sphere_spectrum, spherical_harmonic_dim};
use gausslab::ball::ball_area;
use gausslab::estimates::{mean_value_check, EstimateReport};
use gausslab::jacobi::{assemble, cluster, constrained_spectrum, Tolerances};
use gausslab::{compute_geometry, generate, Point, SurfaceSpec, WeightSpec, WeightedMeasure};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn sphere_index_is_monotone_in_radius(a in 0.3f64..6.0, b in 0.3f64..6.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if let (Ok(i), Ok(j)) = (sphere_index(2, lo), sphere_index(2, hi)) {
            prop_assert!(i <= j);
        }
    }

    #[test]
    fn multiplicities_sum_to_polynomial_counts(n in 1usize..5, k in 0usize..8) {
        // Harmonics of degree ≤ k on Sⁿ restrict the polynomials of degree ≤ k
        // in n+1 variables modulo |x|², so their dimensions sum to C(k+n, n) + C(k+n−1, n).
        let total: usize = (0..=k).map(|j| spherical_harmonic_dim(n, j)).sum();
        let binom = |a: usize, b: usize| (0..b).fold(1usize, |acc, i| acc * (a - i) / (i + 1));
        let expected = binom(k + n, n) + if k >= 1 { binom(k + n - 1, n) } else { 0 };
        prop_assert_eq!(total, expected);
        // Plane levels 0..=k count monomials of degree ≤ k in n variables.
        let plane: usize = (0..=k).map(|j| plane_spectrum(n, j).unwrap().1).sum();
        prop_assert_eq!(plane, binom(k + n, n));
    }

    #[test]
    fn sphere_levels_increase(n in 1usize..5, r in 0.5f64..5.0, k in 0usize..10) {
        let (a, _) = sphere_spectrum(n, r, k).unwrap();
        let (b, _) = sphere_spectrum(n, r, k + 1).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn margin_is_rhs_minus_lhs(lhs in -1e3f64..1e3, rhs in -1e3f64..1e3, ok: bool) {
        let rep = EstimateReport::new("x", lhs, rhs, ok, None);
        prop_assert_eq!(rep.margin, rhs - lhs);
        prop_assert_eq!(rep.holds(), lhs <= rhs);
    }

    #[test]
    fn clusters_partition_the_input(mut values in prop::collection::vec(-5.0f64..5.0, 1..40), tol in 1e-3f64..0.5) {
        values.sort_by(f64::total_cmp);
        let clusters = cluster(&values, tol);
        prop_assert_eq!(clusters.iter().map(|c| c.multiplicity).sum::<usize>(), values.len());
        prop_assert!(clusters.windows(2).all(|w| w[0].value < w[1].value));
        prop_assert_eq!(clusters.iter().filter(|c| !c.complete).count(), 1);
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn generated_meshes_have_expected_topology(level in 1u32..4, r in 0.2f64..5.0) {
        let sphere = generate(&SurfaceSpec::sphere(r, level)).unwrap();
        let f = sphere.n_faces();
        prop_assert_eq!(f, 20 * 4usize.pow(level));
        prop_assert_eq!(sphere.n_vertices(), 10 * 4usize.pow(level) + 2);
        prop_assert_eq!(sphere.n_vertices() + f - sphere.edges().len(), 2);
        prop_assert!(sphere.is_closed());
        let max_dev = sphere.vertices().iter().map(|p| (p.norm() - r).abs()).fold(0.0, f64::max);
        prop_assert!(max_dev < 1e-12 * r.max(1.0));

        let disk = generate(&SurfaceSpec::plane_disk(0.0, 3.0, level)).unwrap();
        prop_assert_eq!(disk.n_vertices() + disk.n_faces() - disk.edges().len(), 1);
        let cyl = generate(&SurfaceSpec::cylinder(1.0, 2.0, level)).unwrap();
        prop_assert_eq!(cyl.n_vertices() + cyl.n_faces() - cyl.edges().len(), 0);
    }

    #[test]
    fn ball_area_is_monotone(a in 0.05f64..3.0, b in 0.05f64..3.0, cx in -0.5f64..0.5) {
        let mesh = generate(&SurfaceSpec::sphere(1.0, 2)).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let c = Point::new(cx, 0.0, 0.0);
        let (small, large) = (ball_area(&mesh, &c, lo), ball_area(&mesh, &c, hi));
        prop_assert!(small <= large + 1e-12);
        prop_assert!(large <= mesh.total_measure() + 1e-12);
    }

    #[test]
    fn plane_mean_value_is_equality(s in 0.1f64..1.0) {
        let mesh = generate(&SurfaceSpec::plane_disk(0.0, 3.0, 3)).unwrap();
        let geom = compute_geometry(&mesh);
        let p = (0..mesh.n_vertices()).min_by(|&a, &b| mesh.vertex(a).norm().total_cmp(&mesh.vertex(b).norm())).unwrap();
        let ones = vec![1.0; mesh.n_vertices()];
        let rep = mean_value_check(&mesh, &geom, p, &ones, s, 1.0, 0.0, 0.0).unwrap();
        prop_assert!(rep.margin.abs() <= 1e-9 * rep.lhs, "margin {}", rep.margin);
    }

    #[test]
    fn mean_zero_projection_is_idempotent(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mesh = generate(&SurfaceSpec::sphere(1.0, 2)).unwrap();
        let geom = compute_geometry(&mesh);
        let measure = WeightedMeasure::new(&mesh, &geom, &WeightSpec::Gaussian);
        let u: Vec<f64> = (0..mesh.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let once = measure.project_mean_zero(&u);
        let twice = measure.project_mean_zero(&once);
        prop_assert!(measure.integrate(&once).abs() < 1e-12);
        let diff = once.iter().zip(&twice).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn jacobi_form_is_symmetric(seed in any::<u64>(), level in 1u32..3) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mesh = generate(&SurfaceSpec::cylinder(1.0, 2.0, level)).unwrap();
        let geom = compute_geometry(&mesh);
        let a = assemble(&mesh, &geom, &WeightSpec::Gaussian).unwrap();
        let n = a.n_vertices();
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let scale = a.q(&u, &u).abs() + a.q(&v, &v).abs();
        prop_assert!((a.q(&u, &v) - a.q(&v, &u)).abs() <= 1e-12 * scale);
    }
}

#[test]
fn spectrum_is_deterministic() {
    let tol = Tolerances::default();
    let mesh = generate(&SurfaceSpec::sphere(1.0, 3)).unwrap();
    let geom = compute_geometry(&mesh);
    let a = assemble(&mesh, &geom, &WeightSpec::Gaussian).unwrap();
    let first = constrained_spectrum(&a, 8, true, &tol).unwrap();
    let second = constrained_spectrum(&a, 8, true, &tol).unwrap();
    assert_eq!(first.eigenvalues, second.eigenvalues);
    assert_eq!(first.eigenfunctions, second.eigenfunctions);
}
