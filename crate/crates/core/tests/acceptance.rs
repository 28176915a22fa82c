//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::io::Write;
use std::path::Path;

use notrade::approx::{dG_dc_zero, first_order_boundary, h_zero_cost};
use notrade::diagnostics::{check_symmetries, lemma_suprema, measure_contraction};
use notrade::model::{ModelParams, Position};
use notrade::oracle::{build_discrete, compare_with_solver, relative_value_iteration};
use notrade::simulate::{switch_probability, table_params, PolicySpec};
use notrade::solver::{solve_fixed_point, SolverConfig};

type Outcome = Result<String, String>;

fn params(rho0: f64, rho1: f64, c: f64) -> ModelParams {
    ModelParams::new(rho0, rho1, c).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Reference values: gross optimal, gross naive, net optimal, net naive.
const TABLE1: [(f64, [f64; 4]); 11] = [
    (0.100, [0.687, 0.686, 0.507, 0.507]),
    (0.200, [0.690, 0.687, 0.523, 0.523]),
    (0.300, [0.693, 0.687, 0.537, 0.536]),
    (0.400, [0.696, 0.687, 0.549, 0.548]),
    (0.500, [0.698, 0.688, 0.558, 0.556]),
    (0.600, [0.697, 0.686, 0.562, 0.558]),
    (0.660, [0.696, 0.686, 0.563, 0.558]),
    (0.700, [0.695, 0.688, 0.564, 0.556]),
    (0.800, [0.691, 0.687, 0.556, 0.546]),
    (0.843, [0.686, 0.686, 0.548, 0.536]),
    (0.872, [0.681, 0.687, 0.536, 0.523]),
];

/// Reference per-period costs: optimal, naive.
const TABLE2: [(f64, [f64; 2]); 11] = [
    (0.100, [0.180, 0.179]),
    (0.200, [0.168, 0.164]),
    (0.300, [0.156, 0.151]),
    (0.400, [0.147, 0.140]),
    (0.500, [0.140, 0.132]),
    (0.600, [0.135, 0.127]),
    (0.660, [0.133, 0.127]),
    (0.742, [0.132, 0.132]),
    (0.800, [0.134, 0.140]),
    (0.843, [0.138, 0.151]),
    (0.872, [0.144, 0.164]),
];

const TABLE_STEPS: &str = "1000000";
const TABLE_SEED: &str = "20240601";

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

fn within(value: f64, target: f64, se: f64) -> bool {
    (value - target).abs() <= 0.005f64.max(3.0 * se)
}

fn criterion_tables(dir: &Path) -> (Outcome, Outcome) {
    let argv = ["notrade", "tables", "--steps", TABLE_STEPS, "--seed", TABLE_SEED, "-o", dir.to_str().unwrap()];
    let code = notrade::cli::run(argv);
    if code != 0 {
        let e = Err(format!("tables exited with {code}"));
        return (e.clone(), e);
    }

    let t1 = read_csv(&dir.join("table1.csv"));
    let mut worst: f64 = 0.0;
    let mut misses = Vec::new();
    for (row, (rho1, target)) in t1.iter().zip(TABLE1) {
        // columns: rho0, rho1, g_opt, g_naive, n_opt, n_naive, se_g_opt, se_g_naive, se_n_opt, se_n_naive
        let got = [row[2], row[3], row[4], row[5]];
        let se = [row[6], row[7], row[8], row[9]];
        for k in 0..4 {
            worst = worst.max((got[k] - target[k]).abs());
            if !within(got[k], target[k], se[k]) || (row[1] - rho1).abs() > 1e-12 {
                misses.push(format!("rho1={rho1} col{k}: {:.4} vs {:.3}", got[k], target[k]));
            }
        }
    }
    let c1 = check(
        t1.len() == 11 && misses.is_empty(),
        format!("11 rows x 4 columns, worst |diff| = {worst:.4} {misses:?}"),
    );

    let t2 = read_csv(&dir.join("table2.csv"));
    let mut worst: f64 = 0.0;
    let mut misses = Vec::new();
    for (row, (rho1, target)) in t2.iter().zip(TABLE2) {
        let got = [row[2], row[3]];
        let se = [row[4], row[5]];
        for k in 0..2 {
            worst = worst.max((got[k] - target[k]).abs());
            if !within(got[k], target[k], se[k]) || (row[1] - rho1).abs() > 1e-12 {
                misses.push(format!("rho1={rho1} col{k}: {:.4} vs {:.3}", got[k], target[k]));
            }
        }
    }
    let first = &t2[0];
    let last = &t2[t2.len() - 1];
    let crossover = first[2] > first[3] && last[2] < last[3];
    let c2 = check(
        t2.len() == 11 && misses.is_empty() && crossover,
        format!(
            "worst |diff| = {worst:.4}, crossover {:.4}>{:.4} and {:.4}<{:.4} {misses:?}",
            first[2], first[3], last[2], last[3]
        ),
    );
    (c1, c2)
}

fn criterion_zero_cost() -> Outcome {
    let p = params(0.8, 0.4, 0.0);
    let (bb, report) = solve_fixed_point(&SolverConfig::default(), &p).map_err(|e| e.to_string())?;
    let mut err_g: f64 = 0.0;
    let mut err_h: f64 = 0.0;
    for &x in bb.nodes() {
        err_g = err_g.max((bb.boundary(x, Position::Long) + 2.0 * x).abs());
        err_h = err_h.max((bb.h().eval(x) - h_zero_cost(x, &p)).abs());
    }
    check(
        report.iterations <= 2 && err_g <= 1e-9 && err_h <= 1e-6,
        format!("iterations {}, sup|G + (rho0/rho1)x| = {err_g:.1e}, sup|H - H0| = {err_h:.1e}", report.iterations),
    )
}

fn criterion_convergence() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for (r0, r1, c) in [(0.8, 0.4, 0.5), (0.8, 0.2, 0.1), (0.8, 0.3, 0.5), (0.889, 0.1, 0.5)] {
        let p = params(r0, r1, c);
        let (_, report) = solve_fixed_point(&SolverConfig::default(), &p).map_err(|e| e.to_string())?;
        let worst_ratio = report.residual_ratios().into_iter().skip(1).fold(0.0, f64::max);
        let rate = report.geometric_rate(1).unwrap_or(0.0);
        let est = measure_contraction(&p, 24, 11).map_err(|e| e.to_string())?;
        let bound = est.max_row_sum() + 0.05;
        ok &= worst_ratio < 1.0 && rate <= bound;
        details.push(format!("({r0},{r1},{c}): max ratio {worst_ratio:.3}, rate {rate:.3} <= {bound:.3}"));
    }
    check(ok, details.join("; "))
}

fn criterion_oracle() -> Outcome {
    let p = params(0.8, 0.4, 0.5);
    let (bb, report) = solve_fixed_point(&SolverConfig::default(), &p).map_err(|e| e.to_string())?;
    let mdp = build_discrete(&p, 101, 6.0).map_err(|e| e.to_string())?;
    let sol = relative_value_iteration(&mdp, 1e-10, 20_000).map_err(|e| e.to_string())?;
    let agreement = compare_with_solver(&mdp, &sol, &bb);
    let gap = (report.lambda - sol.lambda).abs();
    check(
        gap <= 2e-3 && agreement.states == 101 * 101 * 2 && agreement.fraction() >= 0.99 && agreement.max_cell_offset <= 1.0,
        format!(
            "lambda {:.5} vs oracle {:.5} (gap {gap:.1e}), agreement {:.4} on {} states, max offset {:.2} cell(s)",
            report.lambda,
            sol.lambda,
            agreement.fraction(),
            agreement.states,
            agreement.max_cell_offset
        ),
    )
}

fn criterion_first_order() -> Outcome {
    let base = params(0.8, 0.4, 0.0);
    let gap = |c: f64| -> Result<f64, String> {
        let p = base.with_cost(c).unwrap();
        let (bb, _) = solve_fixed_point(&SolverConfig::default(), &p).map_err(|e| e.to_string())?;
        Ok(bb
            .nodes()
            .iter()
            .filter(|x| x.abs() <= 2.0)
            .map(|&x| (first_order_boundary(x, Position::Long, c, &p) - bb.boundary(x, Position::Long)).abs())
            .fold(0.0, f64::max))
    };
    let (g1, g2) = (gap(0.1)?, gap(0.05)?);
    let ratio = g1 / g2;
    let anchor = dG_dc_zero(0.0, &base) == -1.0 / (2.0 * base.rho1());
    check(
        (3.0..=5.0).contains(&ratio) && anchor,
        format!("sup gap {g1:.3e} -> {g2:.3e}, ratio {ratio:.3}; dG/dc(0,0) exact: {anchor}"),
    )
}

fn criterion_symmetry() -> Outcome {
    let mut worst: f64 = 0.0;
    for (r0, r1, c) in [(0.8, 0.4, 0.5), (0.6, 0.66, 0.5), (0.889, 0.1, 0.2)] {
        let (bb, _) = solve_fixed_point(&SolverConfig::default(), &params(r0, r1, c)).map_err(|e| e.to_string())?;
        worst = worst.max(check_symmetries(&bb).map_err(|e| e.to_string())?.max_violation());
    }
    let lemma = lemma_suprema(1.0).max_error.max(lemma_suprema(1.2).max_error);
    check(worst <= 1e-6 && lemma <= 1e-10, format!("max identity violation {worst:.1e}, suprema error {lemma:.1e}"))
}

fn criterion_contraction() -> Outcome {
    let est = measure_contraction(&params(0.8, 0.2, 0.1), 24, 5).map_err(|e| e.to_string())?;
    let small = measure_contraction(&params(0.8, 0.2, 0.01), 24, 5).map_err(|e| e.to_string())?;
    let half = measure_contraction(&params(0.8, 0.4, 0.05), 24, 5).map_err(|e| e.to_string())?;
    let (r1, r2) = est.row_sums();
    let (_, h2) = half.row_sums();
    check(
        r1 < 1.0 && r2 < 1.0 && small.a21 < est.a21 && h2 < 1.0,
        format!(
            "rows {r1:.3}, {r2:.3}; a21 {:.4} (c=0.1) > {:.4} (c=0.01); rho1/rho0=0.5 row2 {h2:.3}",
            est.a21, small.a21
        ),
    )
}

fn criterion_switch_probability() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for p in [table_params(0.1, 0.5).unwrap(), params(0.8, 0.16, 0.5)] {
        let naive = switch_probability(&PolicySpec::naive(&p).unwrap(), Position::Long);
        let fo = switch_probability(&PolicySpec::first_order(&p).unwrap(), Position::Long);
        let (bb, _) = solve_fixed_point(&SolverConfig::default(), &p).map_err(|e| e.to_string())?;
        let solved = switch_probability(&PolicySpec::solver(&bb), Position::Long);
        ok &= fo > naive && solved > naive;
        details.push(format!(
            "rho1/rho0={:.3}: first-order {fo:.5}, solver {solved:.5} > naive {naive:.5}",
            p.kappa()
        ));
    }
    check(ok, details.join("; "))
}

#[test]
fn acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let (t1, t2) = criterion_tables(dir.path());
    let results: Vec<(&str, Outcome)> = vec![
        ("1 table-1 reproduction", t1),
        ("2 table-2 reproduction", t2),
        ("3 zero-cost exactness", criterion_zero_cost()),
        ("4 exponential convergence", criterion_convergence()),
        ("5 oracle equivalence", criterion_oracle()),
        ("6 first-order consistency", criterion_first_order()),
        ("7 symmetry suite", criterion_symmetry()),
        ("8 contraction measurement", criterion_contraction()),
        ("9 switch-probability ordering", criterion_switch_probability()),
    ];
    // direct handle writes are not swallowed by the test harness capture
    let mut err = std::io::stderr().lock();
    let mut failed = Vec::new();
    for (name, outcome) in &results {
        let _ = match outcome {
            Ok(detail) => writeln!(err, "PASS  {name}: {detail}"),
            Err(detail) => {
                failed.push(*name);
                writeln!(err, "FAIL  {name}: {detail}")
            }
        };
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
