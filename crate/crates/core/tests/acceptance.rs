//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line with
//! the measured values; the process exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen, Vector3};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sphcond::ambisonics::{build_decoder, error_map, mean_error, source_grid, DecoderKind, ReproductionSetup};
use sphcond::eigen::kappa_svd;
use sphcond::hrtf::{run_ecc_mcc_protocol, ProtocolConfig};
use sphcond::optimizer::{
    make_cipic_caps, optimize_hrtf_grid, sweep_transitions, sweep_with, SolverConfig, TabulatedSolver,
};
use sphcond::sampling::{self, TDesign};
use sphcond::shm::{build_shm, build_shm_with, condition_number};
use sphcond::voronoi::{d_measure, spherical_voronoi};
use sphcond::{Basis, Convention, PointSet, SelectionMask, ShmOptions};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("T-design conditioning", Duration::from_secs(1), tdesign_conditioning),
        (
            "Fibonacci ill-conditioning",
            Duration::from_secs(1),
            fibonacci_conditioning,
        ),
        ("tabulated 3x9 sweep", Duration::from_millis(1), tabulated_sweep),
        (
            "exact solver matches enumeration",
            Duration::from_secs(120),
            exact_matches_enumeration,
        ),
        ("lambda_min trace bound", Duration::from_secs(30), trace_bound),
        (
            "sweep improvement on Fibonacci 100 -> 32",
            Duration::from_secs(30 * 60),
            sweep_improvement,
        ),
        (
            "hoop-constrained CIPIC 1250 -> 640",
            Duration::from_secs(60 * 60),
            hoop_constrained,
        ),
        ("reproduction error", Duration::from_secs(5 * 60), reproduction_error),
        ("decoder identities", Duration::from_secs(10), decoder_identities),
        ("HRTF round trip", Duration::from_secs(5 * 60), hrtf_round_trip),
        ("geometry metrics", Duration::from_secs(60), geometry_metrics),
    ];
    let mut failures = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let passed = o.passed && in_time;
        if !passed {
            failures += 1;
        }
        println!(
            "[{}] {:>2}. {name} ({:.3?} of {:?}{}): {}",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            elapsed,
            budget,
            if in_time { "" } else { ", over budget" },
            o.detail
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}

fn random_points(rng: &mut ChaCha8Rng, q: usize) -> PointSet {
    let pts: Vec<Vector3<f64>> = (0..q)
        .map(|_| {
            Vector3::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            )
            .normalize()
        })
        .collect();
    PointSet::from_cartesian(&pts, Convention::FromZAxis).unwrap()
}

/// Extreme eigenvalues of `Σ_{j ∈ cols} a_j a_jᴴ` from a dense symmetric solver.
fn extremes(a: &DMatrix<Complex64>, cols: &[usize]) -> (f64, f64) {
    let p = a.nrows();
    let mut g = DMatrix::<Complex64>::zeros(p, p);
    for &j in cols {
        let c = a.column(j);
        g += &c * c.adjoint();
    }
    let ev = SymmetricEigen::new(g).eigenvalues;
    (ev.min(), ev.max())
}

fn max_abs(a: &DMatrix<Complex64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn oracle_kappa(a: &DMatrix<Complex64>, cols: &[usize]) -> f64 {
    let (lo, hi) = extremes(a, cols);
    if lo > 1e-12 * hi {
        (hi / lo).sqrt()
    } else {
        f64::INFINITY
    }
}

fn tdesign_conditioning() -> Outcome {
    let mut worst = 0.0f64;
    for d in TDesign::ALL {
        let pts = sampling::tdesign(d);
        for basis in [Basis::ComplexOrthonormal, Basis::RealOrthonormal] {
            let k = condition_number(&build_shm(&pts, d.supported_order(), basis));
            worst = worst.max((k - 1.0).abs());
        }
    }
    outcome(
        worst < 1e-6,
        format!("max |kappa - 1| = {worst:.2e} over 7 designs, both bases"),
    )
}

fn fibonacci_conditioning() -> Outcome {
    let pts = sampling::fibonacci(32).unwrap();
    let mut found = Vec::new();
    let mut all = Vec::new();
    for (mname, mapping) in [("geometric", ShmOptions::default()), ("literal", ShmOptions::literal())] {
        for (bname, basis) in [("complex", Basis::ComplexOrthonormal), ("real", Basis::RealOrthonormal)] {
            let k = condition_number(&build_shm_with(&pts, 3, ShmOptions { basis, ..mapping }));
            all.push(format!("{mname}/{bname} {k:.2}"));
            if (k - 1670.0).abs() <= 0.1 * 1670.0 {
                found.push(format!("{mname}/{bname}"));
            }
        }
    }
    outcome(
        !found.is_empty(),
        format!("kappa: {}; within 10% of 1670: {}", all.join(", "), found.join(", ")),
    )
}

fn tabulated_sweep() -> Outcome {
    let mut solver = TabulatedSolver::worked_example();
    let trace = sweep_with(&mut solver, 100).unwrap();
    let pairs: Vec<(f64, f64)> = trace.records.iter().map(|r| (r.lambda_max, r.lambda_min)).collect();
    let k = trace.kappa_star.unwrap_or(f64::NAN);
    let ok = pairs == [(1.0, 0.4), (2.0, 0.6), (2.0, 0.8), (2.0, 0.9)] && k == 2.0 / 0.9;
    outcome(ok, format!("records {pairs:?}, kappa* = {k:.6}"))
}

fn exact_matches_enumeration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut mismatches = 0;
    for case in 0..50 {
        let qp = if case % 2 == 0 { 6 } else { 8 };
        let q = rng.random_range(qp + 1..=12);
        let y = build_shm(&random_points(&mut rng, q), 1, Basis::ComplexOrthonormal);
        let oracle = (0u32..1 << q)
            .filter(|m| m.count_ones() as usize == qp)
            .map(|m| {
                let cols: Vec<usize> = (0..q).filter(|&i| m >> i & 1 == 1).collect();
                oracle_kappa(y.entries(), &cols)
            })
            .fold(f64::INFINITY, f64::min);
        let k = sweep_transitions(&y, qp, None, &SolverConfig::exact())
            .unwrap()
            .kappa_star
            .unwrap_or(f64::INFINITY);
        let err = (k - oracle).abs() / oracle.max(1.0);
        worst = worst.max(err);
        if !(err <= 1e-9) {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("50 cases, {mismatches} mismatches, max relative gap {worst:.2e}"),
    )
}

fn trace_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0;
    let mut tightest = 0.0f64;
    for _ in 0..20 {
        let order = rng.random_range(1..=4);
        let q = rng.random_range(4..=60);
        let y = build_shm(&random_points(&mut rng, q), order, Basis::ComplexOrthonormal);
        let a = y.entries();
        let bound: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>() / a.nrows() as f64;
        for _ in 0..50 {
            let k = rng.random_range(1..=q);
            let cols = sample(&mut rng, q, k).into_vec();
            let (lo, _) = extremes(a, &cols);
            tightest = tightest.max(lo / bound);
            if lo > bound * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("1000 masks, {violations} violations, max lambda_min / bound = {tightest:.3}"),
    )
}

fn sweep_improvement() -> Outcome {
    let pts = sampling::fibonacci(100).unwrap();
    let y = build_shm_with(&pts, 3, ShmOptions::literal());
    let full = condition_number(&y);
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let best_random = (0..10_000)
        .map(|_| oracle_kappa(y.entries(), &sample(&mut rng, 100, 32).into_vec()))
        .fold(f64::INFINITY, f64::min);
    let cfg = SolverConfig {
        max_transitions: 500,
        ..SolverConfig::local(0, 8)
    };
    let trace = sweep_transitions(&y, 32, None, &cfg).unwrap();
    let k = trace.kappa_star.unwrap_or(f64::INFINITY);
    let mask = trace.best_mask.clone().unwrap_or_else(|| SelectionMask::empty(100));
    let check = oracle_kappa(y.entries(), &mask.indices());
    let ok = k < full && k < best_random && (check - k).abs() <= 1e-8 * k;
    outcome(
        ok,
        format!(
            "kappa* {k:.2} (R = {}, {:?}) vs full {full:.2}, best of 10000 random {best_random:.2}; reference 166.73",
            trace.r(),
            trace.termination
        ),
    )
}

fn hoop_constrained() -> Outcome {
    let pts = sampling::cipic();
    let caps = make_cipic_caps();
    let full = condition_number(&build_shm_with(&pts, 3, ShmOptions::literal()));
    let cfg = SolverConfig {
        max_transitions: 30,
        ..SolverConfig::local(3, 4)
    };
    let trace = optimize_hrtf_grid(&pts, 3, 640, &caps, ShmOptions::literal(), &cfg).unwrap();
    let Some(mask) = trace.best_mask.clone() else {
        return outcome(false, "no feasible selection");
    };
    let y = build_shm_with(&pts, 3, ShmOptions::literal());
    let check = oracle_kappa(y.entries(), &mask.indices());
    let k = trace.kappa_star.unwrap();
    let ok = caps.is_satisfied(&mask) && mask.q_prime() == 640 && k < 338.02 && (check - k).abs() <= 1e-8 * k;
    outcome(
        ok,
        format!(
            "kappa* {k:.2} (R = {}, {:?}) vs full {full:.2}; caps satisfied: {}; reference 186.7",
            trace.r(),
            trace.termination,
            caps.is_satisfied(&mask)
        ),
    )
}

fn optimized_layout(q_prime: usize, order: usize) -> PointSet {
    let candidates = sampling::fibonacci(100).unwrap();
    let cfg = SolverConfig {
        max_transitions: 40,
        ..SolverConfig::local(1, 4)
    };
    let trace = sweep_transitions(&build_shm(&candidates, order, Basis::default()), q_prime, None, &cfg).unwrap();
    candidates.select(&trace.best_mask.unwrap().indices()).unwrap()
}

fn reproduction_error() -> Outcome {
    let grid = source_grid();
    let mut layouts: Vec<(String, PointSet, usize)> = TDesign::ALL
        .into_iter()
        .map(|d| (d.name().to_string(), sampling::tdesign(d), d.supported_order()))
        .collect();
    for (qp, n) in [(12, 2), (24, 3), (36, 4)] {
        layouts.push((format!("optimized Q'={qp}"), optimized_layout(qp, n), n));
    }
    let mut worst_full = 0.0f64;
    let mut non_monotone = Vec::new();
    for (name, pts, n) in &layouts {
        assert!(pts.len() >= (n + 1) * (n + 1));
        let xi = error_map(pts, &grid, ReproductionSetup::matched(*n)).unwrap();
        worst_full = worst_full.max(xi.iter().cloned().fold(0.0, f64::max));

        // orders the layout cannot resolve
        let first = (0..).find(|k| (k + 1) * (k + 1) > pts.len()).unwrap();
        let means: Vec<f64> = (first..first + 4)
            .map(|k| mean_error(pts, &grid, ReproductionSetup::matched(k)).unwrap())
            .collect();
        if means.windows(2).any(|w| w[1] < w[0] * (1.0 - 1e-12)) {
            non_monotone.push(format!("{name}: {means:.4?}"));
        }
    }
    outcome(
        worst_full < 1e-8 && non_monotone.is_empty(),
        format!(
            "max xi at resolvable orders {worst_full:.2e} over {} layouts; non-monotone under-resolved means: [{}]",
            layouts.len(),
            non_monotone.join("; ")
        ),
    )
}

fn decoder_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut layouts: Vec<(PointSet, usize)> = TDesign::ALL
        .into_iter()
        .map(|d| (sampling::tdesign(d), d.supported_order()))
        .collect();
    layouts.push((sampling::fibonacci(50).unwrap(), 4));
    layouts.push((sampling::gaussian(3), 3));
    for q in [20, 40, 80] {
        layouts.push((random_points(&mut rng, q), 3));
    }
    let mut worst_identity = 0.0f64;
    let mut tested = 0;
    for (pts, n) in &layouts {
        let y = build_shm(pts, *n, Basis::default());
        if kappa_svd(y.entries()) >= 1e6 {
            continue;
        }
        tested += 1;
        let d = build_decoder(&y, DecoderKind::ModeMatching).unwrap();
        let yd = y.entries() * &d.entries;
        let err = max_abs(&(yd - DMatrix::<Complex64>::identity(y.rows(), y.rows())));
        worst_identity = worst_identity.max(err);
    }
    let mut worst_agree = 0.0f64;
    for d in TDesign::ALL {
        let y = build_shm(&sampling::tdesign(d), d.supported_order(), Basis::default());
        let mm = build_decoder(&y, DecoderKind::ModeMatching).unwrap();
        let s = build_decoder(&y, DecoderKind::Sampling).unwrap();
        worst_agree = worst_agree.max(max_abs(&(mm.entries - s.entries)));
    }
    outcome(
        worst_identity < 1e-8 && worst_agree < 1e-7,
        format!(
            "max |YD - I| {worst_identity:.2e} over {tested} layouts; max |D_mm - D_s| on T-designs {worst_agree:.2e}"
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn hrtf_round_trip() -> Outcome {
    let clean = run_ecc_mcc_protocol(ProtocolConfig::default()).unwrap();
    let max_clean = clean
        .samples
        .iter()
        .flat_map(|s| [s.lsd_ecc, s.lsd_mcc])
        .fold(0.0, f64::max);
    let noisy = run_ecc_mcc_protocol(ProtocolConfig {
        noise: 1e-4,
        ..ProtocolConfig::default()
    })
    .unwrap();
    let med_ecc = median(noisy.samples.iter().map(|s| s.lsd_ecc).collect());
    let med_mcc = median(noisy.samples.iter().map(|s| s.lsd_mcc).collect());
    let k_ecc = kappa_svd(build_shm(&sampling::ecc(), 10, Basis::default()).entries());
    let k_mcc = kappa_svd(build_shm(&sampling::mcc(), 10, Basis::default()).entries());
    let lower_kappa_wins = if k_ecc < k_mcc {
        med_ecc < med_mcc
    } else {
        med_mcc < med_ecc
    };
    outcome(
        max_clean < 1e-8 && lower_kappa_wins,
        format!(
            "noiseless max LSD {max_clean:.2e} dB; noise 1e-4: kappa ECC {k_ecc:.1} / MCC {k_mcc:.1}, \
             median LSD ECC {med_ecc:.3e} / MCC {med_mcc:.3e} dB"
        ),
    )
}

fn geometry_metrics() -> Outcome {
    let mut d_fail = Vec::new();
    let mut d_all = Vec::new();
    for d in TDesign::ALL {
        let v = d_measure(&sampling::tdesign(d)).unwrap().d_measure;
        d_all.push(format!("{} {v:.1e}", d.name()));
        if !(v.abs() < 1e-6) {
            d_fail.push(d.name());
        }
    }

    let mut schemes: Vec<(String, PointSet)> = (4..=200)
        .map(|q| (format!("fibonacci {q}"), sampling::fibonacci(q).unwrap()))
        .collect();
    for order in 0.. {
        let g = sampling::gaussian(order);
        if g.len() > 200 {
            break;
        }
        schemes.push((format!("gaussian {order}"), g));
    }
    for order in 0.. {
        let g = sampling::equiangular(order);
        if g.len() > 200 {
            break;
        }
        schemes.push((format!("equiangular {order}"), g));
    }
    for d in TDesign::ALL {
        schemes.push((d.name().to_string(), sampling::tdesign(d)));
    }
    let mut area_fail = Vec::new();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (name, pts) in &schemes {
        if pts.len() < 4 {
            continue;
        }
        checked += 1;
        match spherical_voronoi(pts) {
            Ok(cells) => {
                let err = (cells.iter().map(|c| c.area).sum::<f64>() - 4.0 * PI).abs();
                worst = worst.max(err);
                if err > 1e-9 {
                    area_fail.push(name.clone());
                }
            }
            Err(e) => area_fail.push(format!("{name} ({e})")),
        }
    }
    outcome(
        d_fail.is_empty() && area_fail.is_empty(),
        format!(
            "D: [{}]; above 1e-6: {d_fail:?}; area sums over {checked} schemes, max error {worst:.1e}, failures {area_fail:?}",
            d_all.join(", ")
        ),
    )
}
