use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sphcond::ambisonics::{direction_sweep, error_map, source_grid, DecoderKind, ReproductionSetup};
use sphcond::hrtf::{lsd, run_ecc_mcc_protocol, ProtocolConfig};
use sphcond::io;
use sphcond::optimizer::{make_cipic_caps, sweep_transitions, HoopConstraintSet, SolverConfig, SolverMode};
use sphcond::sampling::{self, TDesign};
use sphcond::shm::{build_shm_with, condition_number, gram_summary};
use sphcond::voronoi::d_measure;
use sphcond::{AngleMapping, Basis, Convention, Error, PointSet, Result, ShmOptions};

use crate::args::{
    AmbiArgs, AnalyzeArgs, BasisArg, DecoderArg, GenArgs, HrtfArgs, MappingArg, OptimizeArgs, PointArgs, Scheme,
    ShmArgs, SolverArg, SolverArgs,
};

pub const SEED_ENV: &str = "SPHCOND_SEED";

/// What a command produced: text for stdout plus the files it touched.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
}

impl Outcome {
    pub fn json<T: Serialize>(value: &T) -> Result<Self> {
        Ok(Self {
            stdout: serde_json::to_string_pretty(value)? + "\n",
            ..Self::default()
        })
    }
}

/// `SPHCOND_SEED` takes precedence over the `--seed` flag.
pub fn resolve_seed(flag: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| Error::InvalidInput(format!("{SEED_ENV}=`{v}` is not an unsigned integer: {e}"))),
        Err(_) => Ok(flag),
    }
}

fn require<T>(value: Option<T>, what: &str, scheme: Scheme) -> Result<T> {
    value.ok_or_else(|| Error::InvalidInput(format!("scheme {scheme:?} needs {what}").to_lowercase()))
}

pub fn generate(scheme: Scheme, q: Option<usize>, order: Option<usize>, name: Option<&str>) -> Result<PointSet> {
    Ok(match scheme {
        Scheme::Fibonacci => sampling::fibonacci(require(q, "--q", scheme)?)?,
        Scheme::Gaussian => sampling::gaussian(require(order, "an order", scheme)?),
        Scheme::Equiangular => sampling::equiangular(require(order, "an order", scheme)?),
        Scheme::Tdesign => match (name, q) {
            (Some(n), _) => sampling::load_tdesign(n)?,
            (None, Some(q)) => sampling::tdesign(
                TDesign::with_at_least(q)
                    .ok_or_else(|| Error::InvalidInput(format!("no embedded T-design has {q} or more points")))?,
            ),
            (None, None) => return Err(Error::InvalidInput("tdesign needs a name or --q".into())),
        },
        Scheme::Cipic => sampling::cipic(),
        Scheme::Ecc => sampling::ecc(),
        Scheme::Mcc => sampling::mcc(),
    })
}

fn note_input(path: &Path, inputs: &mut Vec<PathBuf>) {
    inputs.push(path.to_path_buf());
    if path.extension().is_some_and(|e| e == "csv") {
        let sidecar = io::sidecar_path(path);
        if sidecar.exists() {
            inputs.push(sidecar);
        }
    }
}

pub fn load_points(args: &PointArgs, inputs: &mut Vec<PathBuf>) -> Result<PointSet> {
    match (&args.points, args.scheme) {
        (Some(path), _) => {
            note_input(path, inputs);
            io::load_point_set(path)
        }
        (None, Some(scheme)) => generate(scheme, args.q, args.grid_order, args.design.as_deref()),
        (None, None) => Err(Error::InvalidInput("either --points or --scheme is required".into())),
    }
}

pub fn basis(arg: BasisArg) -> Basis {
    match arg {
        BasisArg::Complex => Basis::ComplexOrthonormal,
        BasisArg::Real => Basis::RealOrthonormal,
    }
}

pub fn shm_options(args: &ShmArgs) -> ShmOptions {
    ShmOptions {
        basis: basis(args.basis),
        mapping: match args.mapping {
            MappingArg::Geometric => AngleMapping::Geometric,
            MappingArg::Literal => AngleMapping::Literal,
        },
    }
}

pub fn solver_config(args: &SolverArgs) -> Result<SolverConfig> {
    let cfg = SolverConfig {
        mode: match args.solver {
            SolverArg::Exact => SolverMode::ExactBnb,
            SolverArg::Local => SolverMode::LocalSearch,
        },
        epsilon: args.epsilon,
        seed: resolve_seed(args.seed)?,
        restarts: args.restarts,
        max_nodes: args.max_nodes,
        max_transitions: args.max_transitions,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn save_points(path: PathBuf, points: &PointSet, outputs: &mut Vec<PathBuf>) -> Result<()> {
    io::save_point_set(&path, points)?;
    outputs.push(io::sidecar_path(&path));
    outputs.push(path);
    Ok(())
}

pub fn gen(args: &GenArgs) -> Result<Outcome> {
    let points = generate(args.scheme, args.q, args.order, args.name.as_deref())?;
    match &args.out {
        None => {
            // without a sidecar the reader assumes colatitudes
            let mut buf = Vec::new();
            io::write_points_csv(&mut buf, &points.to_convention(Convention::FromZAxis))?;
            Ok(Outcome {
                stdout: String::from_utf8(buf).expect("CSV is UTF-8"),
                ..Outcome::default()
            })
        }
        Some(path) => {
            let mut out = Outcome::json(&json!({
                "scheme": args.scheme,
                "q": points.len(),
                "convention": points.convention(),
                "csv": path,
                "sidecar": io::sidecar_path(path),
            }))?;
            save_points(path.clone(), &points, &mut out.outputs)?;
            out.outputs.sort();
            Ok(out)
        }
    }
}

pub fn dmeasure(args: &PointArgs) -> Result<Outcome> {
    let mut inputs = Vec::new();
    let points = load_points(args, &mut inputs)?;
    let mut out = Outcome::json(&d_measure(&points)?)?;
    out.inputs = inputs;
    Ok(out)
}

pub fn analyze(args: &AnalyzeArgs) -> Result<Outcome> {
    let mut inputs = Vec::new();
    let points = load_points(&args.points, &mut inputs)?;
    let options = shm_options(&args.shm);
    let shm = build_shm_with(&points, args.shm.order, options);
    let eig = gram_summary(&shm, None)?;
    let (dm, dm_error) = match d_measure(&points) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut out = Outcome::json(&json!({
        "q": points.len(),
        "order": args.shm.order,
        "p": shm.rows(),
        "basis": options.basis,
        "mapping": options.mapping,
        "kappa": eig.kappa,
        "log10_kappa": eig.kappa.log10(),
        "rank_deficient": eig.is_rank_deficient(),
        "eigen": {
            "lambda_min": eig.lambda_min,
            "lambda_max": eig.lambda_max,
            "kappa": eig.kappa,
        },
        "d_measure": dm,
        "d_measure_error": dm_error,
    }))?;
    out.inputs = inputs;
    Ok(out)
}

fn load_hoop_arg(spec: &str, inputs: &mut Vec<PathBuf>) -> Result<HoopConstraintSet> {
    if spec.eq_ignore_ascii_case("cipic") {
        return Ok(make_cipic_caps());
    }
    let path = PathBuf::from(spec);
    note_input(&path, inputs);
    io::load_hoops(&path)
}

pub fn optimize(args: &OptimizeArgs) -> Result<Outcome> {
    let mut inputs = Vec::new();
    let points = load_points(&args.points, &mut inputs)?;
    let hoops = args
        .hoops
        .as_deref()
        .map(|h| load_hoop_arg(h, &mut inputs))
        .transpose()?;
    let cfg = solver_config(&args.solver)?;
    let shm = build_shm_with(&points, args.shm.order, shm_options(&args.shm));
    let trace = sweep_transitions(&shm, args.q_prime, hoops.as_ref(), &cfg)?;
    let best = trace.best_mask.clone().ok_or_else(|| {
        Error::Infeasible(format!(
            "no {}-point subset has a full-rank order-{} gram",
            args.q_prime, args.shm.order
        ))
    })?;
    let selected_indices = best.indices();
    let summary = json!({
        "q": points.len(),
        "q_prime": args.q_prime,
        "order": args.shm.order,
        "full_kappa": condition_number(&shm),
        "kappa_star": trace.kappa_star,
        "eta_star": trace.eta_star,
        "transitions": trace.r(),
        "termination": trace.termination,
        "eta_upper_bound": trace.eta_upper_bound,
        "selected_indices": selected_indices,
    });
    let mut out = Outcome::json(&summary)?;
    out.inputs = inputs;
    out.seed = Some(cfg.seed);
    if let Some(dir) = &args.out_dir {
        let trace_path = dir.join("trace.json");
        io::write_json(
            &trace_path,
            &json!({
                "config": cfg,
                "summary": summary,
                "trace": trace,
            }),
        )?;
        out.outputs.push(trace_path);
        save_points(
            dir.join("selected.csv"),
            &points.select(&selected_indices)?,
            &mut out.outputs,
        )?;
        out.outputs.sort();
    }
    Ok(out)
}

fn decoder_kind(args: &AmbiArgs) -> DecoderKind {
    match args.decoder {
        DecoderArg::Pinv => DecoderKind::PseudoInverse,
        DecoderArg::ModeMatching => DecoderKind::ModeMatching,
        DecoderArg::Sampling => DecoderKind::Sampling,
        DecoderArg::Regularized => DecoderKind::Regularized(args.beta),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// `(azimuth, elevation)` in degrees of every source direction.
fn source_angles(grid: &PointSet) -> Vec<(f64, f64)> {
    grid.directions()
        .iter()
        .map(|d| (d.phi.to_degrees(), d.elevation().to_degrees()))
        .collect()
}

fn write_xi_map(path: PathBuf, angles: &[(f64, f64)], xi: &[f64], outputs: &mut Vec<PathBuf>) -> Result<()> {
    io::write_table_file(
        &path,
        &["azimuth", "elevation", "xi"],
        angles.iter().zip(xi).map(|(&(a, e), &x)| vec![a, e, x]),
    )?;
    outputs.push(path);
    Ok(())
}

pub fn ambi_eval(args: &AmbiArgs) -> Result<Outcome> {
    let mut inputs = Vec::new();
    note_input(&args.speakers, &mut inputs);
    let speakers = io::load_point_set(&args.speakers)?;
    let setup = ReproductionSetup {
        order: args.order,
        eval_order: args.eval_order.unwrap_or(args.order),
        decoder: decoder_kind(args),
        basis: basis(args.basis),
    };
    let grid = source_grid();
    let angles = source_angles(&grid);
    let mut outputs = Vec::new();
    let body = match &args.compare {
        None => {
            let xi = error_map(&speakers, &grid, setup)?;
            if let Some(dir) = &args.out_dir {
                write_xi_map(dir.join("xi.csv"), &angles, &xi, &mut outputs)?;
            }
            json!({
                "setup": setup,
                "mean_xi": mean(&xi),
                "max_xi": xi.iter().copied().fold(0.0, f64::max),
                "xi": xi,
            })
        }
        Some(other) => {
            note_input(other, &mut inputs);
            let compare = io::load_point_set(other)?;
            let r = direction_sweep(&speakers, &compare, &grid, setup)?;
            if let Some(dir) = &args.out_dir {
                write_xi_map(dir.join("xi.csv"), &angles, &r.xi_a, &mut outputs)?;
                write_xi_map(dir.join("xi_compare.csv"), &angles, &r.xi_b, &mut outputs)?;
            }
            json!({
                "setup": setup,
                "mean_xi": mean(&r.xi_a),
                "mean_xi_compare": mean(&r.xi_b),
                "xi": r.xi_a,
                "xi_compare": r.xi_b,
                "winners": {
                    "speakers": r.a_wins,
                    "compare": r.b_wins,
                    "ties": r.ties,
                    "speakers_percent": r.a_percent,
                    "compare_percent": r.b_percent,
                },
            })
        }
    };
    let mut out = Outcome::json(&body)?;
    out.inputs = inputs;
    out.outputs = outputs;
    Ok(out)
}

fn write_lsd_map(path: PathBuf, coords: &[(f64, f64)], values: &[f64], outputs: &mut Vec<PathBuf>) -> Result<()> {
    io::write_table_file(
        &path,
        &["lateral", "elevation", "lsd_db"],
        coords.iter().zip(values).map(|(&(l, e), &v)| vec![l, e, v]),
    )?;
    outputs.push(path);
    Ok(())
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn hrtf_eval(args: &HrtfArgs) -> Result<Outcome> {
    if let (Some(reference), Some(test)) = (&args.reference, &args.test) {
        return hrtf_lsd(reference, test, args.out_dir.as_deref());
    }
    let seed = resolve_seed(args.seed)?;
    let report = run_ecc_mcc_protocol(ProtocolConfig {
        order: args.order,
        seed,
        noise: args.noise,
    })?;
    let mut outputs = Vec::new();
    if let Some(dir) = &args.out_dir {
        let coords: Vec<(f64, f64)> = report
            .samples
            .iter()
            .map(|s| (s.lateral_deg, s.elevation_deg))
            .collect();
        let ecc: Vec<f64> = report.samples.iter().map(|s| s.lsd_ecc).collect();
        let mcc: Vec<f64> = report.samples.iter().map(|s| s.lsd_mcc).collect();
        write_lsd_map(dir.join("lsd_ecc.csv"), &coords, &ecc, &mut outputs)?;
        write_lsd_map(dir.join("lsd_mcc.csv"), &coords, &mcc, &mut outputs)?;
        let wins = dir.join("mcc_wins.csv");
        io::write_table_file(
            &wins,
            &["lateral", "elevation", "mcc_wins"],
            report
                .samples
                .iter()
                .map(|s| vec![s.lateral_deg, s.elevation_deg, if s.mcc_wins { 1.0 } else { 0.0 }]),
        )?;
        outputs.push(wins);
        let full = dir.join("report.json");
        io::write_json(&full, &report)?;
        outputs.push(full);
        outputs.sort();
    }
    let mut out = Outcome::json(&json!({
        "config": report.config,
        "kappa_ecc": report.kappa_ecc,
        "kappa_mcc": report.kappa_mcc,
        "residual_ecc": report.residual_ecc,
        "residual_mcc": report.residual_mcc,
        "median_lsd_ecc": report.median_lsd_ecc,
        "median_lsd_mcc": report.median_lsd_mcc,
        "max_lsd_ecc": report.max_lsd_ecc,
        "max_lsd_mcc": report.max_lsd_mcc,
        "mcc_win_fraction": report.mcc_win_fraction,
        "mcc_win_fraction_50_130": report.mcc_win_fraction_overhead,
        "lower_kappa_has_lower_median": report.lower_kappa_wins(),
    }))?;
    out.seed = Some(seed);
    out.outputs = outputs;
    Ok(out)
}

fn hrtf_lsd(reference: &Path, test: &Path, out_dir: Option<&Path>) -> Result<Outcome> {
    let a = io::load_spectrum(reference)?;
    let b = io::load_spectrum(test)?;
    let map = lsd(&a, &b)?;
    let mut outputs = Vec::new();
    if let Some(dir) = out_dir {
        let coords: Vec<(f64, f64)> = a
            .directions()
            .directions()
            .iter()
            .map(sampling::interaural_coordinates)
            .collect();
        write_lsd_map(dir.join("lsd.csv"), &coords, &map, &mut outputs)?;
    }
    let mut out = Outcome::json(&json!({
        "q": map.len(),
        "median_lsd": median(&map),
        "mean_lsd": mean(&map),
        "max_lsd": map.iter().copied().fold(0.0, f64::max),
        "lsd": map,
    }))?;
    out.inputs = vec![reference.to_path_buf(), test.to_path_buf()];
    out.outputs = outputs;
    Ok(out)
}
