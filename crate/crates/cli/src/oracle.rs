use extremal_core::certify::Objective;
use extremal_core::optimize::{maximize, OptimizeOptions};
use extremal_core::oracles::{self, CYCLE_CAP, TREE_CAP};
use extremal_core::{metric, spectral, Error, Graph, Space};
use serde::Serialize;
use serde_json::json;

use crate::io::{emit, load_graph, resolve_weights, write_text, CliError, Provenance};
use crate::{Format, OracleArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Verdict {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Serialize)]
struct Row {
    check: String,
    verdict: Verdict,
    /// Largest discrepancy found, in the check's own units.
    discrepancy: Option<f64>,
    tolerance: Option<f64>,
    detail: String,
}

fn compare(check: &str, discrepancy: f64, tolerance: f64, detail: String) -> Row {
    Row {
        check: check.into(),
        verdict: if discrepancy <= tolerance { Verdict::Pass } else { Verdict::Fail },
        discrepancy: Some(discrepancy),
        tolerance: Some(tolerance),
        detail,
    }
}

fn skipped(check: &str, why: impl ToString) -> Row {
    Row {
        check: check.into(),
        verdict: Verdict::Skipped,
        discrepancy: None,
        tolerance: None,
        detail: why.to_string(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn tree_checks(g: &Graph, f: &[f64], rows: &mut Vec<Row>) -> Result<(), CliError> {
    let trees = match oracles::enumerate_spanning_trees(g, TREE_CAP) {
        Ok(t) => t,
        Err(e @ Error::CapExceeded(_)) => {
            rows.push(skipped("spanning trees: enumeration = cofactor", &e));
            rows.push(skipped("weighted tree number: enumeration = determinant", e));
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let exact = spectral::tree_number_exact(g)?;
    rows.push(Row {
        check: "spanning trees: enumeration = cofactor".into(),
        verdict: if trees.len() as u128 == exact { Verdict::Pass } else { Verdict::Fail },
        discrepancy: Some((trees.len() as f64 - exact as f64).abs()),
        tolerance: Some(0.0),
        detail: format!("{} enumerated, {exact} by exact elimination", trees.len()),
    });
    let by_enum = oracles::weighted_tree_sum(&trees, f);
    let by_det = spectral::tree_number(g, f)?;
    rows.push(compare(
        "weighted tree number: enumeration = determinant",
        rel(by_enum, by_det),
        1e-9,
        format!("{by_enum} vs {by_det}"),
    ));
    let d_enum: Vec<f64> = oracles::tree_derivatives_by_enumeration(g, &trees, f)
        .iter()
        .map(|d| d.ln())
        .collect();
    let d_spec = spectral::log_tree_derivatives(g, f)?;
    rows.push(compare(
        "log dtau/df: enumeration = two-forest cofactor",
        max_abs_diff(&d_enum, &d_spec),
        1e-9,
        "per edge, in logarithms".into(),
    ));
    Ok(())
}

fn run_checks(g: &Graph, f: &[f64]) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    tree_checks(g, f, &mut rows)?;

    let s = spectral::spectrum(g, f)?;
    let prod: f64 = s.eigenvalues[1..].iter().map(|v| v.ln()).sum();
    let log_tau = spectral::log_tree_number(g, f)?;
    rows.push(compare(
        "kirchhoff: n tau = product of nonzero eigenvalues",
        (prod - (g.n() as f64).ln() - log_tau).abs(),
        1e-8,
        "compared in logarithms".into(),
    ));

    match metric::girth(g, f) {
        Err(Error::Forest) => rows.push(skipped("girth: enumeration = shortest cycle", "forest")),
        Err(e) => return Err(e.into()),
        Ok(gir) => match oracles::girth_by_enumeration(g, f) {
            Ok(by_enum) => rows.push(compare(
                "girth: enumeration = shortest cycle",
                rel(gir, by_enum),
                1e-12,
                format!("{by_enum} vs {gir}"),
            )),
            Err(e @ Error::CapExceeded(_)) => {
                rows.push(skipped("girth: enumeration = shortest cycle", format!("{e} (cap {CYCLE_CAP})")))
            }
            Err(e) => return Err(e.into()),
        },
    }

    let r = spectral::effective_resistances(g, f)?;
    let fd = oracles::fd_gradient(|w| spectral::log_tree_number(g, w).unwrap_or(f64::NAN), f, 1e-4);
    rows.push(compare(
        "resistances = finite differences of log tau",
        max_abs_diff(&r, &fd),
        1e-6,
        "central differences with Richardson refinement".into(),
    ));
    let pinv = spectral::resistances_by_pseudoinverse(g, f)?;
    let cof = spectral::resistances_by_cofactor(g, f)?;
    rows.push(compare(
        "resistances: pseudoinverse = cofactor",
        max_abs_diff(&pinv, &cof),
        1e-9,
        String::new(),
    ));
    let foster: f64 = r.iter().zip(f).map(|(a, b)| a * b).sum();
    rows.push(compare(
        "foster: sum f(e) R(e) = n - 1",
        (foster - (g.n() as f64 - 1.0)).abs(),
        1e-9,
        format!("{foster}"),
    ));

    let grid_objectives = [Objective::Logdet, Objective::Lambda1];
    for obj in grid_objectives {
        let name = format!("{obj} on P: optimizer >= grid");
        let grid = oracles::grid_search(|w| obj.evaluate(g, w), g, Space::P, 0.05);
        match grid {
            Err(e @ Error::DimensionTooLarge(_)) => rows.push(skipped(&name, e)),
            Err(e) => return Err(e.into()),
            Ok(grid) => {
                let best = maximize(g, Space::P, obj, &OptimizeOptions::default())?;
                rows.push(compare(
                    &name,
                    (grid.value - best.value).max(0.0),
                    1e-9,
                    format!("grid {} over {} points, optimizer {}", grid.value, grid.evaluated, best.value),
                ));
            }
        }
    }
    Ok(rows)
}

fn table(rows: &[Row]) -> String {
    let width = rows.iter().map(|r| r.check.len()).max().unwrap_or(5).max(5);
    let mut out = format!("{:<width$}  {:<7}  {:>10}  {}\n", "check", "verdict", "gap", "detail");
    for r in rows {
        let verdict = match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Skipped => "skipped",
        };
        let gap = r.discrepancy.map_or("-".to_string(), |d| format!("{d:.2e}"));
        out.push_str(&format!("{:<width$}  {:<7}  {:>10}  {}\n", r.check, verdict, gap, r.detail));
    }
    out
}

pub fn run(a: &OracleArgs) -> Result<(), CliError> {
    let (g, inline) = load_graph(&a.graph)?;
    g.require_connected()?;
    let f = resolve_weights(&g, inline, a.weights.as_deref())?;
    let rows = run_checks(&g, &f)?;
    let failed = rows.iter().filter(|r| r.verdict == Verdict::Fail).count();
    match a.format {
        Format::Table => write_text(&table(&rows), a.out.as_deref())?,
        Format::Json => {
            let provenance = Provenance::new("oracle", Some(&g), json!({})).with_weights(&f);
            emit(
                &json!({"provenance": provenance, "checks": rows, "all_pass": failed == 0}),
                a.out.as_deref(),
            )?
        }
    }
    if failed > 0 {
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(())
}
