//! Property suites: metric axioms on the torus, exterior-power algebra,
//! Poisson summation, heat-kernel normalization, fixed-point counts, and
//! thread-count determinism.

use lefgpd::geometry::{
    apply_map, find_fixed_points, torus_distance, QuadratureGrid, TorusGeometry, TorusMap,
};
use lefgpd::heatkernel::{theta_fourier_sum, HeatTime, ThetaKernel};
use lefgpd::linalg::{IntMatrix, SquareMatrix};
use lefgpd::superalgebra::{exterior_power_action, exterior_powers, GradedEndomorphism};
use proptest::prelude::*;

fn small_matrix(n: usize) -> impl Strategy<Value = SquareMatrix<f64>> {
    prop::collection::vec(prop::collection::vec(-2.0f64..2.0, n), n)
        .prop_map(|rows| SquareMatrix::from_rows(&rows))
}

fn torus_point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn torus_distance_is_a_metric(x in torus_point(2), y in torus_point(2), z in torus_point(2)) {
        let dxy = torus_distance(&x, &y);
        let dyx = torus_distance(&y, &x);
        prop_assert!((dxy - dyx).abs() < 1e-14);
        prop_assert!(dxy >= 0.0);
        prop_assert!(torus_distance(&x, &x) < 1e-15);
        let dxz = torus_distance(&x, &z);
        let dzy = torus_distance(&z, &y);
        prop_assert!(dxy <= dxz + dzy + 1e-12);
    }

    #[test]
    fn apply_map_lands_in_fundamental_domain(
        x in torus_point(2),
        b in torus_point(2),
        entries in prop::collection::vec(-3i64..=3, 4),
    ) {
        let a = IntMatrix::from_rows(&[vec![entries[0], entries[1]], vec![entries[2], entries[3]]]);
        let map = TorusMap::affine(a, b).unwrap();
        let y = apply_map(&map, &x);
        prop_assert!(y.iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn alternating_minor_sum_equals_det_of_i_minus_b(b in small_matrix(3)) {
        let lhs = exterior_powers(&b.transpose()).supertrace();
        let rhs = SquareMatrix::identity(3).sub(&b).det();
        let scale = 1.0f64.max(rhs.abs());
        prop_assert!((lhs - rhs).abs() < 1e-10 * scale, "{lhs} vs {rhs}");
    }

    #[test]
    fn exterior_powers_are_functorial(a in small_matrix(3), b in small_matrix(3)) {
        let ab = a.matmul(&b);
        for p in 0..=3usize {
            let lhs = exterior_power_action(&ab, p);
            let rhs = exterior_power_action(&a, p).matmul(&exterior_power_action(&b, p));
            let gap = lhs.sub(&rhs).max_abs();
            prop_assert!(gap < 1e-10, "degree {p}: {gap}");
        }
    }

    #[test]
    fn supertrace_of_supercommutator_vanishes(a in small_matrix(2), b in small_matrix(2),
                                              a2 in small_matrix(2), b2 in small_matrix(2)) {
        // two even graded endomorphisms on Lambda(R^2): blocks of sizes 1, 2, 1
        let g = GradedEndomorphism::from_blocks(vec![
            SquareMatrix::scalar(a[(0, 0)]),
            a.clone(),
            SquareMatrix::scalar(a[(1, 1)]),
        ]);
        let h = GradedEndomorphism::from_blocks(vec![
            SquareMatrix::scalar(b2[(0, 0)]),
            b.clone(),
            SquareMatrix::scalar(a2[(0, 1)]),
        ]);
        let comm = g.compose(&h).sub(&h.compose(&g));
        prop_assert!(comm.supertrace().abs() < 1e-10);
    }

    #[test]
    fn poisson_summation_on_random_points(
        x in torus_point(2),
        y in torus_point(2),
        tau_ix in 0usize..3,
    ) {
        let tau = [0.01, 0.1, 1.0][tau_ix];
        let geom = TorusGeometry::new(2, 8).unwrap();
        let theta = ThetaKernel::new(&geom, tau).unwrap();
        let lattice = theta.eval(&x, &y).unwrap();
        let fourier = theta_fourier_sum(2, tau, &x, &y);
        prop_assert!((lattice - fourier).abs() < 1e-10, "{lattice} vs {fourier}");
    }

    #[test]
    fn affine_fixed_point_count_matches_determinant(
        entries in prop::collection::vec(-3i64..=3, 4),
        b in torus_point(2),
    ) {
        let a = IntMatrix::from_rows(&[vec![entries[0], entries[1]], vec![entries[2], entries[3]]]);
        let det = a.sub(&IntMatrix::identity(2)).det();
        prop_assume!(det != 0);
        let map = TorusMap::affine(a, b).unwrap();
        let geom = TorusGeometry::new(2, 8).unwrap();
        let fps = find_fixed_points(&map, &geom).unwrap();
        prop_assert_eq!(fps.len() as i64, det.abs());
        for fp in &fps {
            let image = apply_map(&map, &fp.point);
            prop_assert!(torus_distance(&image, &fp.point) < 1e-10);
        }
    }
}

#[test]
fn theta_normalization_across_heat_times() {
    let geom = TorusGeometry::circle(512).unwrap();
    let grid = QuadratureGrid::<f64>::new(1, 512);
    for tau in [0.002, 0.01, 0.1, 0.25] {
        let theta = ThetaKernel::new(&geom, tau).unwrap();
        theta.validate().unwrap();
        for x in [0.0, 0.37, 0.5] {
            let mass = grid.integrate(|y| theta.eval_unchecked(&[x], y));
            assert!(
                (mass - 1.0).abs() < 1e-8,
                "tau = {tau}, x = {x}: mass = {mass}"
            );
        }
    }
}

#[test]
fn spectral_supertrace_is_t_independent_on_a_ladder() {
    let map = TorusMap::affine(
        IntMatrix::from_rows(&[vec![2, 1], vec![1, 1]]),
        vec![0.0f64, 0.0],
    )
    .unwrap();
    let values: Vec<f64> = (0..8)
        .map(|j| {
            let t = 0.45 * 0.5f64.powi(j);
            let ht = HeatTime::new(t, 1).unwrap();
            lefgpd::heatkernel::spectral_supertrace(&map, &ht).unwrap()
        })
        .collect();
    let spread = values
        .iter()
        .fold(0.0f64, |acc, v| acc.max((v - values[0]).abs()));
    assert!(spread < 1e-12, "spread = {spread}");
}

#[test]
fn grid_integration_is_bit_stable_across_thread_counts() {
    let geom = TorusGeometry::new(2, 64).unwrap();
    let theta = ThetaKernel::new(&geom, 0.01f64).unwrap();
    let run = || {
        let grid = QuadratureGrid::<f64>::new(2, 64);
        grid.integrate(|v| theta.eval_unchecked(v, &[0.25, 0.75]))
    };
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(run);
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(8)
        .build()
        .unwrap()
        .install(run);
    assert_eq!(single.to_bits(), many.to_bits());
}

#[test]
fn three_way_agreement_on_integer_matrix_suite() {
    // ten integer matrices with det(A - I) != 0 across n = 1, 2, 3
    let suite: Vec<Vec<Vec<i64>>> = vec![
        vec![vec![2]],
        vec![vec![3]],
        vec![vec![-1]],
        vec![vec![-2]],
        vec![vec![2, 1], vec![1, 1]],
        vec![vec![0, -1], vec![1, 0]],
        vec![vec![2, 0], vec![1, 3]],
        vec![vec![-1, 2], vec![0, 2]],
        vec![vec![2, 0, 0], vec![0, 0, -1], vec![0, 1, 0]],
        vec![vec![2, 1, 0], vec![0, 2, 1], vec![0, 0, -1]],
    ];
    for rows in suite {
        let n = rows.len();
        let a = IntMatrix::from_rows(&rows);
        let map = TorusMap::affine(a, vec![0.0f64; n]).unwrap();
        let geom = TorusGeometry::new(n, 8).unwrap();
        let config = lefgpd::lefschetz::VerificationConfig::new(
            geom,
            map,
            lefgpd::lefschetz::LadderSpec {
                t_max: 0.45,
                ratio: 0.5,
                rungs: 4,
            },
        );
        let report = lefgpd::lefschetz::verify(&config).unwrap();
        let fps = report.fixed_point_side;
        let spectral = report.spectral.unwrap();
        let coh = report.cohomological.unwrap();
        assert!(
            (spectral - fps).abs() < 1e-10 && (coh - fps).abs() < 1e-10,
            "{rows:?}: spectral {spectral}, cohomological {coh}, fixed-point {fps}"
        );
        assert!(
            (report.geometric_extrapolated - fps).abs() < 1e-4,
            "{rows:?}: geometric {} vs fixed-point {fps}",
            report.geometric_extrapolated
        );
        // t-independence of the geometric rows once the grid resolves the
        // kernel width
        let spread = report
            .rows
            .iter()
            .fold(0.0f64, |acc, r| acc.max((r.geometric - fps).abs()));
        assert!(spread < 1e-4, "{rows:?}: row spread {spread}");
        assert!(report.passed, "{rows:?}: {:?}", report.comparisons);
    }
}

#[test]
fn f32_instantiation_stays_coherent() {
    // the generic core must compile and stay roughly correct in f32
    let b = SquareMatrix::<f32>::from_rows(&[vec![1.5, -0.5], vec![0.25, 2.0]]);
    let lhs = exterior_powers(&b.transpose()).supertrace();
    let rhs = SquareMatrix::<f32>::identity(2).sub(&b).det();
    assert!((lhs - rhs).abs() < 1e-4, "{lhs} vs {rhs}");

    let map = TorusMap::<f32>::affine(IntMatrix::from_rows(&[vec![3]]), vec![0.0f32]).unwrap();
    let geom = TorusGeometry::circle(32).unwrap();
    let fps = find_fixed_points(&map, &geom).unwrap();
    assert_eq!(fps.len(), 2);
}
