use std::f64::consts::PI;

use nalgebra::{DMatrix, Rotation3, Unit, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphcond::sampling::{self, TDesign};
use sphcond::shm::build_shm;
use sphcond::voronoi::{d_measure, spherical_voronoi};
use sphcond::{Basis, PointSet};

fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation3<f64> {
    let axis = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    Rotation3::from_axis_angle(&Unit::new_normalize(axis), rng.random_range(0.0..2.0 * PI))
}

fn schemes() -> Vec<(String, PointSet)> {
    let mut v: Vec<(String, PointSet)> = vec![
        ("fibonacci 100".into(), sampling::fibonacci(100).unwrap()),
        ("gaussian 4".into(), sampling::gaussian(4)),
        ("equiangular 3".into(), sampling::equiangular(3)),
        ("cipic".into(), sampling::cipic()),
        ("ecc".into(), sampling::ecc()),
        ("mcc".into(), sampling::mcc()),
    ];
    v.extend(TDesign::ALL.map(|d| (d.name().to_string(), sampling::tdesign(d))));
    v
}

#[test]
fn d_measure_is_rotation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (name, ps) in schemes() {
        if ps.len() > 700 {
            continue;
        }
        let base = d_measure(&ps).unwrap();
        for _ in 0..3 {
            let r = random_rotation(&mut rng);
            let rotated = d_measure(&ps.rotated(r.matrix()).unwrap()).unwrap();
            assert!((rotated.d_measure - base.d_measure).abs() < 1e-8, "{name}");
        }
    }
}

#[test]
fn voronoi_areas_close_for_every_scheme() {
    for (name, ps) in schemes() {
        let total: f64 = spherical_voronoi(&ps).unwrap().iter().map(|c| c.area).sum();
        assert!((total - 4.0 * PI).abs() < 1e-9, "{name}: {total}");
    }
    for q in (4..=200).step_by(7) {
        let total: f64 = spherical_voronoi(&sampling::fibonacci(q).unwrap())
            .unwrap()
            .iter()
            .map(|c| c.area)
            .sum();
        assert!((total - 4.0 * PI).abs() < 1e-9, "fibonacci {q}");
    }
}

#[test]
fn gaussian_grids_integrate_harmonics_exactly() {
    for order in 0..=8 {
        let grid = sampling::gaussian_grid(order);
        let y = build_shm(&grid.points, order, Basis::ComplexOrthonormal);
        let w = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            grid.weights.len(),
            grid.weights.iter().map(|&w| Complex64::new(w, 0.0)),
        ));
        let g = y.entries() * w * y.entries().adjoint();
        let id = DMatrix::<Complex64>::identity(g.nrows(), g.ncols());
        assert!((g - id).iter().all(|z| z.norm() < 1e-10), "order {order}");
        assert!((grid.weights.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
    }
}

#[test]
fn fibonacci_azimuth_step_is_constant() {
    let c1 = (5f64.sqrt() - 1.0) / 2.0;
    let ps = sampling::fibonacci(150).unwrap();
    let phis: Vec<f64> = ps.directions().iter().map(|d| d.phi).collect();
    for w in phis.windows(2) {
        let step = (w[1] - w[0]).rem_euclid(2.0 * PI);
        assert!((step - (2.0 * PI * c1).rem_euclid(2.0 * PI)).abs() < 1e-12);
    }
}

#[test]
fn duplicate_points_are_rejected() {
    let ps = sampling::fibonacci(20).unwrap();
    let dup = ps.concat(&ps.select(&[3]).unwrap()).unwrap();
    assert!(spherical_voronoi(&dup).is_err());
}
