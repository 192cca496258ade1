use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphcond::eigen::kappa_svd;
use sphcond::optimizer::dedup_columns;
use sphcond::sh::{coefficient_count, sh_vector};
use sphcond::shm::{build_shm, condition_number, gram, ShMatrix};
use sphcond::{eval_sh, sampling, Basis, Convention, Direction, PointSet};

fn cis(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, x)
}

/// Closed-form complex harmonics with the Condon–Shortley phase.
fn closed_form(n: usize, m: i64, theta: f64, phi: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    let e = cis(m as f64 * phi);
    let v = match (n, m) {
        (0, 0) => 0.5 / PI.sqrt(),
        (1, 0) => (3.0 / (4.0 * PI)).sqrt() * c,
        (1, 1) => -(3.0 / (8.0 * PI)).sqrt() * s,
        (1, -1) => (3.0 / (8.0 * PI)).sqrt() * s,
        (2, 0) => 0.25 * (5.0 / PI).sqrt() * (3.0 * c * c - 1.0),
        (2, 1) => -0.5 * (15.0 / (2.0 * PI)).sqrt() * s * c,
        (2, -1) => 0.5 * (15.0 / (2.0 * PI)).sqrt() * s * c,
        (2, 2) | (2, -2) => 0.25 * (15.0 / (2.0 * PI)).sqrt() * s * s,
        (3, 2) | (3, -2) => 0.25 * (105.0 / (2.0 * PI)).sqrt() * s * s * c,
        (3, 3) => -0.125 * (35.0 / PI).sqrt() * s * s * s,
        (3, -3) => 0.125 * (35.0 / PI).sqrt() * s * s * s,
        (4, 0) => 3.0 / 16.0 / PI.sqrt() * (35.0 * c.powi(4) - 30.0 * c * c + 3.0),
        _ => unreachable!(),
    };
    e * v
}

const CASES: [(usize, i64); 14] = [
    (0, 0),
    (1, 0),
    (1, 1),
    (1, -1),
    (2, 0),
    (2, 1),
    (2, -1),
    (2, 2),
    (2, -2),
    (3, 2),
    (3, -2),
    (3, 3),
    (3, -3),
    (4, 0),
];

#[test]
fn degree_three_order_two_closed_form() {
    let d = Direction::from_z(1.1, 0.7);
    let got = eval_sh(3, 2, &d).unwrap();
    let want = 0.25 * (105.0 / (2.0 * PI)).sqrt() * 1.1f64.sin().powi(2) * 1.1f64.cos() * cis(1.4);
    assert!((got - want).norm() < 1e-12, "{got} vs {want}");
}

#[test]
fn low_degrees_match_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let theta = rng.random_range(0.0..PI);
        let phi = rng.random_range(0.0..2.0 * PI);
        for &(n, m) in &CASES {
            let want = closed_form(n, m, theta, phi);
            let polar = eval_sh(n, m, &Direction::from_z(theta, phi)).unwrap();
            let elevated = eval_sh(n, m, &Direction::above_xy(PI / 2.0 - theta, phi)).unwrap();
            assert!((polar - want).norm() < 1e-12, "Y_{n}^{m}({theta},{phi})");
            assert!((elevated - want).norm() < 1e-12);
        }
    }
}

#[test]
fn rows_follow_degree_major_layout() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for order in 0..=6usize {
        let theta = rng.random_range(0.0..PI);
        let phi = rng.random_range(0.0..2.0 * PI);
        let v = sh_vector(order, theta, phi, Basis::ComplexOrthonormal);
        assert_eq!(v.len(), coefficient_count(order));
        for n in 0..=order {
            for m in -(n as i64)..=n as i64 {
                let row = (n * n + n) as i64 + m;
                let want = eval_sh(n, m, &Direction::from_z(theta, phi)).unwrap();
                assert_eq!(v[row as usize], want);
            }
        }
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

#[test]
fn gram_and_svd_condition_numbers_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let p = rng.random_range(1..8);
        let q = rng.random_range(p..p + 12);
        let a = random_matrix(&mut rng, p, q);
        // oracle: eigenvalues of the gram from a generic symmetric solver
        let g = &a * a.adjoint();
        let ev = SymmetricEigen::new(g).eigenvalues;
        let (lo, hi) = (ev.min(), ev.max());
        let from_gram = (hi / lo).sqrt();
        let shm = ShMatrix::from_matrix(a.clone()).unwrap();
        let k = condition_number(&shm);
        assert!((k - from_gram).abs() <= 1e-8 * from_gram, "{k} vs {from_gram}");
        assert!((kappa_svd(&a) - from_gram).abs() <= 1e-8 * from_gram);
    }
}

#[test]
fn transpose_keeps_condition_number() {
    for q in [10, 25, 64] {
        let y = build_shm(&sampling::fibonacci(q).unwrap(), 2, Basis::ComplexOrthonormal);
        let k = kappa_svd(y.entries());
        let kt = kappa_svd(&y.transpose());
        assert!((k - kt).abs() <= 1e-10 * k);
    }
}

#[test]
fn tdesigns_are_discretely_orthonormal() {
    for d in sampling::TDesign::ALL {
        let ps = sampling::tdesign(d);
        for basis in [Basis::ComplexOrthonormal, Basis::RealOrthonormal] {
            let y = build_shm(&ps, d.supported_order(), basis);
            let g = gram(&y, None).unwrap() * Complex64::new(4.0 * PI / ps.len() as f64, 0.0);
            let id = DMatrix::<Complex64>::identity(g.nrows(), g.ncols());
            assert!((g - id).iter().all(|z| z.norm() < 1e-8), "{}", d.name());
        }
    }
}

#[test]
fn duplicate_columns_leave_condition_number_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ps = sampling::fibonacci(30).unwrap();
    let y = build_shm(&ps, 3, Basis::ComplexOrthonormal);
    let k = condition_number(&y);
    for _ in 0..10 {
        let extra: Vec<usize> = (0..rng.random_range(1..6)).map(|_| rng.random_range(0..30)).collect();
        let with_dups = ps.concat(&ps.select(&extra).unwrap()).unwrap();
        let y2 = build_shm(&with_dups, 3, Basis::ComplexOrthonormal);
        let (reduced, dedup) = dedup_columns(&y2).unwrap();
        assert_eq!(reduced.cols(), 30);
        assert!(dedup.removable() >= 1);
        assert!((condition_number(&reduced) - k).abs() <= 1e-10 * k);
    }
}

#[test]
fn any_set_at_order_zero_is_perfectly_conditioned() {
    let ps = PointSet::from_angles(&[(0.2, 0.1), (0.3, 2.0), (1.0, 5.0)], Convention::FromZAxis).unwrap();
    let y = build_shm(&ps, 0, Basis::ComplexOrthonormal);
    assert!((condition_number(&y) - 1.0).abs() < 1e-12);
}
