//! Desk-scale recomputation of the published tables, reported side by side
//! with the published values.

use serde::Serialize;
use serde_json::{json, Value};
use sphcond::ambisonics::{direction_sweep, source_grid, ReproductionSetup};
use sphcond::optimizer::{sweep_transitions, sweep_with, SolverConfig, TabulatedSolver, TransitionTrace};
use sphcond::sampling::{self, TDesign};
use sphcond::shm::{build_shm_with, condition_number};
use sphcond::voronoi::d_measure;
use sphcond::{Error, PointSet, Result, ShmOptions};

use crate::args::{ReproduceArgs, Table, Table2Row};
use crate::commands::{resolve_seed, Outcome};

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    passed: bool,
}

fn check(name: impl Into<String>, passed: bool) -> Check {
    Check {
        name: name.into(),
        passed,
    }
}

fn report(table: &str, recipe: &str, entries: Value, checks: Vec<Check>) -> Value {
    let all_passed = checks.iter().all(|c| c.passed);
    json!({
        "table": table,
        "recipe": recipe,
        "entries": entries,
        "checks": checks,
        "all_passed": all_passed,
    })
}

pub fn run(args: &ReproduceArgs) -> Result<Outcome> {
    let seed = resolve_seed(args.seed)?;
    let cfg = SolverConfig {
        max_transitions: args.max_transitions,
        ..SolverConfig::local(seed, args.restarts)
    };
    cfg.validate()?;
    let body = match args.table {
        Table::AppendixC => appendix_c()?,
        Table::Table1 => table1(args.q, &cfg)?,
        Table::Table2 => table2(args.row, &cfg)?,
        Table::Table3 => table3(&cfg)?,
    };
    let mut out = Outcome::json(&body)?;
    out.seed = Some(seed);
    if let Some(path) = &args.out {
        sphcond::io::write_json(path, &body)?;
        out.outputs.push(path.clone());
    }
    Ok(out)
}

fn appendix_c() -> Result<Value> {
    let trace = sweep_with(&mut TabulatedSolver::worked_example(), 100)?;
    let records: Vec<Value> = trace
        .records
        .iter()
        .map(|r| json!({"eta": r.eta, "lambda_max": r.lambda_max, "lambda_min": r.lambda_min, "kappa": r.kappa}))
        .collect();
    let pairs: Vec<(f64, f64)> = trace.records.iter().map(|r| (r.lambda_max, r.lambda_min)).collect();
    let kappa = trace.kappa_star.unwrap_or(f64::NAN);
    Ok(report(
        "appendixC",
        "transition sweep over a 3×9 grid of tabulated (λ_max, λ_min) candidates, κ = λ_max/λ_min",
        json!({
            "published": {"transitions": 4, "kappa": 2.2, "best": [2.0, 0.9]},
            "computed": {
                "transitions": trace.r(),
                "kappa_star": kappa,
                "eta_star": trace.eta_star,
                "termination": trace.termination,
                "records": records,
            },
        }),
        vec![
            check("four transitions", trace.r() == 4),
            check(
                "records (1,0.4) (2,0.6) (2,0.8) (2,0.9)",
                pairs == [(1.0, 0.4), (2.0, 0.6), (2.0, 0.8), (2.0, 0.9)],
            ),
            check("kappa* rounds to 2.2", (kappa * 10.0).round() == 22.0),
        ],
    ))
}

const TABLE1_Q: [usize; 11] = [50, 55, 60, 65, 70, 75, 80, 85, 90, 95, 100];
const TABLE1_ETA_E4: [f64; 11] = [
    1.0851, 1.1996, 1.6513, 1.3332, 2.0353, 1.4502, 1.8704, 2.2368, 2.6939, 2.2368, 2.5471,
];
const TABLE1_KAPPA: [f64; 11] = [
    289.38, 257.74, 213.48, 232.58, 182.21, 229.37, 209.96, 189.38, 147.56, 174.65, 166.73,
];
const TABLE1_R: [usize; 11] = [63, 59, 134, 68, 76, 6, 74, 100, 49, 23, 133];

fn trace_summary(trace: &TransitionTrace) -> Value {
    json!({
        "kappa_star": trace.kappa_star,
        "eta_star": trace.eta_star,
        "transitions": trace.r(),
        "termination": trace.termination,
        "selected_indices": trace.best_mask.as_ref().map(|m| m.indices()),
    })
}

fn table1(q: usize, cfg: &SolverConfig) -> Result<Value> {
    if q < 32 {
        return Err(Error::InvalidInput(format!(
            "table1 selects 32 points; Q = {q} is too small"
        )));
    }
    let points = sampling::fibonacci(q)?;
    let shm = build_shm_with(&points, 3, ShmOptions::literal());
    let full = condition_number(&shm);
    let trace = sweep_transitions(&shm, 32, None, cfg)?;
    let row = TABLE1_Q.iter().position(|&x| x == q);
    let published =
        row.map(|i| json!({"eta_star_e4": TABLE1_ETA_E4[i], "kappa": TABLE1_KAPPA[i], "transitions": TABLE1_R[i]}));
    let kappa = trace.kappa_star.unwrap_or(f64::INFINITY);
    let mut checks = vec![
        check("kappa* below the full-set kappa", kappa < full),
        check("sweep found a full-rank subset", trace.kappa_star.is_some()),
    ];
    if let Some(i) = row {
        // the local search may land on a different (better or worse) subset
        checks.push(check(
            "kappa* no more than 1% above the published value",
            kappa <= 1.01 * TABLE1_KAPPA[i],
        ));
    }
    Ok(report(
        "table1",
        "Fibonacci lattice, N = 3, literal angle mapping, Q' = 32, local-search sweep",
        json!({
            "q": q,
            "published": published,
            "computed": {
                "full_kappa": full,
                "eta_star_e4": trace.eta_star.map(|e| e * 1e4),
                "kappa_over_published": row.map(|i| kappa / TABLE1_KAPPA[i]),
                "sweep": trace_summary(&trace),
            },
        }),
        checks,
    ))
}

/// `(Q', N)` columns of the second table.
const TABLE2_COLUMNS: [(usize, usize); 10] = [
    (6, 1),
    (8, 1),
    (12, 2),
    (18, 2),
    (20, 3),
    (24, 3),
    (30, 4),
    (32, 4),
    (36, 4),
    (50, 4),
];
type Row = [Option<f64>; 10];
const PROPOSED_LOG_KAPPA: Row = [
    Some(0.422),
    Some(0.444),
    Some(1.478),
    Some(1.269),
    Some(2.560),
    Some(2.331),
    Some(4.033),
    Some(3.647),
    Some(3.455),
    Some(3.427),
];
const PROPOSED_D: Row = [
    Some(0.080),
    Some(0.088),
    Some(1.046),
    Some(1.199),
    Some(0.352),
    Some(0.981),
    Some(0.723),
    Some(0.968),
    Some(1.070),
    Some(0.683),
];
const TDESIGN_LOG_KAPPA: Row = [
    Some(0.0),
    Some(0.0),
    Some(0.0),
    None,
    None,
    Some(0.0),
    None,
    None,
    Some(0.0),
    None,
];
const TDESIGN_D: Row = [
    Some(0.0),
    Some(0.0),
    Some(0.0),
    None,
    None,
    Some(0.0),
    None,
    None,
    Some(0.002),
    None,
];
const FIBONACCI_LOG_KAPPA: Row = [
    Some(1.227),
    Some(0.828),
    Some(2.256),
    Some(1.935),
    Some(4.061),
    Some(3.424),
    Some(5.172),
    Some(5.581),
    Some(4.575),
    Some(3.885),
];
const FIBONACCI_D: Row = [
    Some(0.095),
    Some(0.077),
    Some(0.048),
    Some(0.032),
    Some(0.029),
    Some(0.024),
    Some(0.019),
    Some(0.018),
    Some(0.016),
    Some(0.012),
];
const GAUSSIAN_LOG_KAPPA: Row = [
    None,
    Some(0.383),
    None,
    Some(16.037),
    None,
    None,
    None,
    Some(16.752),
    None,
    Some(16.496),
];
const GAUSSIAN_D: Row = [
    None,
    Some(0.036),
    None,
    Some(0.065),
    None,
    None,
    None,
    Some(0.176),
    None,
    Some(0.292),
];

fn cell(points: &PointSet, order: usize, published_log_kappa: Option<f64>, published_d: Option<f64>) -> Result<Value> {
    let literal = condition_number(&build_shm_with(points, order, ShmOptions::literal()));
    let geometric = condition_number(&build_shm_with(points, order, ShmOptions::default()));
    let d = d_measure(points).ok().map(|r| r.d_measure);
    Ok(json!({
        "q_prime": points.len(),
        "order": order,
        "published": {"log10_kappa": published_log_kappa, "d": published_d},
        "computed": {
            "log10_kappa": literal.log10(),
            "log10_kappa_geometric": geometric.log10(),
            "rank_deficient": literal.is_infinite(),
            "d": d,
        },
    }))
}

fn log_kappa(cell: &Value) -> Option<f64> {
    cell["computed"]["log10_kappa"].as_f64()
}

fn table2(row: Table2Row, cfg: &SolverConfig) -> Result<Value> {
    let wants = |r: Table2Row| row == Table2Row::All || row == r;
    let mut rows = serde_json::Map::new();
    let mut checks = Vec::new();

    if wants(Table2Row::Tdesign) {
        let mut cells = Vec::new();
        for (i, &(qp, n)) in TABLE2_COLUMNS.iter().enumerate() {
            if let Some(d) = TDesign::ALL
                .into_iter()
                .find(|d| d.count() == qp && d.supported_order() >= n)
            {
                let c = cell(&sampling::tdesign(d), n, TDESIGN_LOG_KAPPA[i], TDESIGN_D[i])?;
                // the literal mapping folds designs onto a few polar angles
                let ok = c["computed"]["log10_kappa_geometric"]
                    .as_f64()
                    .is_some_and(|k| k.abs() < 1e-6);
                checks.push(check(format!("T-design Q'={qp} N={n}: geometric log10 kappa = 0"), ok));
                cells.push(c);
            }
        }
        rows.insert("tdesign".into(), Value::Array(cells));
    }

    let fibonacci_cells: Vec<Value> = TABLE2_COLUMNS
        .iter()
        .enumerate()
        .map(|(i, &(qp, n))| cell(&sampling::fibonacci(qp)?, n, FIBONACCI_LOG_KAPPA[i], FIBONACCI_D[i]))
        .collect::<Result<_>>()?;
    if wants(Table2Row::Fibonacci) {
        for (c, published) in fibonacci_cells.iter().zip(FIBONACCI_LOG_KAPPA) {
            let ok = matches!((log_kappa(c), published), (Some(k), Some(p)) if (k - p).abs() < 1e-3);
            checks.push(check(
                format!(
                    "Fibonacci Q'={} N={}: log10 kappa within 1e-3 of the published value",
                    c["q_prime"], c["order"]
                ),
                ok,
            ));
        }
        rows.insert("fibonacci".into(), Value::Array(fibonacci_cells.clone()));
    }

    if wants(Table2Row::Gaussian) {
        let mut cells = Vec::new();
        for (i, &(qp, n)) in TABLE2_COLUMNS.iter().enumerate() {
            let grid_order = (1..=10).find(|k| 2 * (k + 1) * (k + 1) == qp);
            if let Some(k) = grid_order {
                let c = cell(&sampling::gaussian(k), n, GAUSSIAN_LOG_KAPPA[i], GAUSSIAN_D[i])?;
                // a published log10 κ near 16 is a numerically singular matrix
                if GAUSSIAN_LOG_KAPPA[i].is_some_and(|p| p > 12.0) {
                    let ok = log_kappa(&c).is_none_or(|k| k > 12.0);
                    checks.push(check(format!("Gaussian Q'={qp} N={n}: numerically singular"), ok));
                }
                cells.push(c);
            }
        }
        rows.insert("gaussian".into(), Value::Array(cells));
    }

    if wants(Table2Row::Proposed) {
        let candidates = sampling::fibonacci(100)?;
        let mut cells = Vec::new();
        for (i, &(qp, n)) in TABLE2_COLUMNS.iter().enumerate() {
            let shm = build_shm_with(&candidates, n, ShmOptions::literal());
            let trace = sweep_transitions(&shm, qp, None, cfg)?;
            let Some(mask) = trace.best_mask.as_ref() else {
                cells.push(json!({"q_prime": qp, "order": n, "computed": null, "termination": trace.termination}));
                continue;
            };
            let selected = candidates.select(&mask.indices())?;
            let mut c = cell(&selected, n, PROPOSED_LOG_KAPPA[i], PROPOSED_D[i])?;
            c["computed"]["sweep"] = trace_summary(&trace);
            let fib = log_kappa(&fibonacci_cells[i]).unwrap_or(f64::INFINITY);
            let ok = log_kappa(&c).is_some_and(|k| k < fib);
            checks.push(check(
                format!("proposed Q'={qp} N={n}: kappa below the {qp}-point Fibonacci lattice"),
                ok,
            ));
            cells.push(c);
        }
        rows.insert("proposed".into(), Value::Array(cells));
    }

    Ok(report(
        "table2",
        "log10 κ under the literal angle mapping (reproduces the Fibonacci row) and the geometric mapping (reproduces the T-design row) and D-measure; proposed = sweep over a 100-point Fibonacci lattice",
        Value::Object(rows),
        checks,
    ))
}

const TABLE3_COLUMNS: [(usize, usize); 4] = [(6, 2), (12, 3), (24, 4), (36, 6)];
const TABLE3_TDESIGN: [f64; 4] = [46.44, 27.62, 36.57, 47.84];
const TABLE3_PROPOSED: [f64; 4] = [53.56, 72.38, 63.43, 52.16];

fn table3(cfg: &SolverConfig) -> Result<Value> {
    let candidates = sampling::fibonacci(100)?;
    let grid = source_grid();
    let mut entries = Vec::new();
    let mut checks = Vec::new();
    for (i, &(qp, n)) in TABLE3_COLUMNS.iter().enumerate() {
        let design = TDesign::ALL
            .into_iter()
            .find(|d| d.count() == qp)
            .expect("a design exists for every column");
        // select at the highest order the subset can resolve
        let select_order = (0..).take_while(|k| (k + 1) * (k + 1) <= qp).last().unwrap_or(0);
        let shm = build_shm_with(&candidates, select_order, ShmOptions::default());
        let trace = sweep_transitions(&shm, qp, None, cfg)?;
        let mask = trace
            .best_mask
            .as_ref()
            .ok_or_else(|| Error::Infeasible(format!("no full-rank {qp}-point subset at order {select_order}")))?;
        let proposed = candidates.select(&mask.indices())?;
        let r = direction_sweep(
            &sampling::tdesign(design),
            &proposed,
            &grid,
            ReproductionSetup::matched(n),
        )?;
        checks.push(check(
            format!("Q'={qp} N={n}: proposed layout wins the majority of directions"),
            r.b_percent > r.a_percent,
        ));
        entries.push(json!({
            "q_prime": qp,
            "order": n,
            "design": design.name(),
            "selection_order": select_order,
            "published": {"tdesign_percent": TABLE3_TDESIGN[i], "proposed_percent": TABLE3_PROPOSED[i]},
            "computed": {
                "tdesign_percent": r.a_percent,
                "proposed_percent": r.b_percent,
                "ties": r.ties,
                "selection": trace_summary(&trace),
            },
        }));
    }
    Ok(report(
        "table3",
        "648 plane-wave directions, pseudo-inverse decoder at matched orders; proposed = sweep over a 100-point Fibonacci lattice (geometric mapping)",
        Value::Array(entries),
        checks,
    ))
}
