use extremal_core::certify;
use extremal_core::constgrad::{self, LevelStructure};
use extremal_core::optimize::{maximize, OptimizeOptions};
use extremal_core::{families, metric, spectral, Error, Graph};
use serde::Serialize;
use serde_json::{json, Value};

use crate::io::{emit, load_graph, load_weights, resolve_weights, write_csv, CliError, Provenance};
use crate::{CertifyArgs, EvalArgs, Family, GenerateArgs, OptimizeArgs};

#[derive(Serialize)]
struct Lambda1Summary {
    value: f64,
    multiplicity: usize,
}

#[derive(Serialize)]
struct EvalReport {
    provenance: Provenance,
    n: usize,
    m: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
    girth: Option<f64>,
    diameter: f64,
    lambda1: Lambda1Summary,
    tree_number: f64,
    log_tree_number: f64,
    log_det_star: f64,
    effective_resistances: Vec<f64>,
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    let (g, inline) = load_graph(&a.graph)?;
    g.require_connected()?;
    let f = resolve_weights(&g, inline, a.weights.as_deref())?;
    let girth = match metric::girth(&g, &f) {
        Ok(v) => Some(v),
        Err(Error::Forest) => None,
        Err(e) => return Err(e.into()),
    };
    let l1 = spectral::lambda1(&g, &f)?;
    let resistances = spectral::effective_resistances(&g, &f)?;
    let report = EvalReport {
        provenance: Provenance::new("eval", Some(&g), json!({})).with_weights(&f),
        n: g.n(),
        m: g.m(),
        edges: g.edges().to_vec(),
        weights: f.clone(),
        girth,
        diameter: metric::diameter(&g, &f)?,
        lambda1: Lambda1Summary {
            value: l1.value,
            multiplicity: l1.multiplicity(),
        },
        tree_number: spectral::tree_number(&g, &f)?,
        log_tree_number: spectral::log_tree_number(&g, &f)?,
        log_det_star: spectral::log_det_star(&g, &f)?,
        effective_resistances: resistances.clone(),
    };
    if let Some(prefix) = &a.output.csv {
        let rows: Vec<Vec<String>> = g
            .edges()
            .iter()
            .enumerate()
            .map(|(e, &(u, v))| vec![e.to_string(), u.to_string(), v.to_string(), f[e].to_string(), resistances[e].to_string()])
            .collect();
        write_csv(prefix, "resistances", &["edge", "u", "v", "weight", "resistance"], &rows)?;
    }
    emit(&report, a.output.out.as_deref())
}

pub fn optimize(a: &OptimizeArgs) -> Result<(), CliError> {
    let (g, _) = load_graph(&a.graph)?;
    let initial = a.initial.as_deref().map(|p| load_weights(p, &g)).transpose()?;
    if a.starts == 0 {
        return Err(CliError::Usage("--starts must be at least 1".into()));
    }
    if !(a.tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let opts = OptimizeOptions {
        max_iters: a.max_iters,
        tol: a.tol,
        seed: a.seed,
        starts: a.starts,
        epsilon_floor: a.epsilon_floor,
        initial,
        certify: true,
    };
    let report = maximize(&g, a.space, a.objective, &opts)?;
    let options = json!({
        "space": a.space,
        "objective": a.objective,
        "starts": a.starts,
        "max_iters": a.max_iters,
        "tol": a.tol,
        "epsilon_floor": a.epsilon_floor,
        "initial": opts.initial,
    });
    let provenance = Provenance::new("optimize", Some(&g), options).with_seed(a.seed);
    if let Some(prefix) = &a.output.csv {
        let rows: Vec<Vec<String>> = report
            .trajectory
            .iter()
            .map(|(i, v)| vec![i.to_string(), v.to_string()])
            .collect();
        write_csv(prefix, "trajectory", &["iteration", "value"], &rows)?;
        if !report.upper_bounds.is_empty() {
            let rows: Vec<Vec<String>> = report
                .upper_bounds
                .iter()
                .map(|(i, v)| vec![i.to_string(), v.to_string()])
                .collect();
            write_csv(prefix, "upper_bounds", &["iteration", "bound"], &rows)?;
        }
    }
    emit(&json!({"provenance": provenance, "report": report}), a.output.out.as_deref())
}

pub fn certify(a: &CertifyArgs) -> Result<(), CliError> {
    let (g, _) = load_graph(&a.graph)?;
    let f = load_weights(&a.weights, &g)?;
    let cert = certify::certify(&g, &f, a.space, a.objective)?;
    let options = json!({"space": a.space, "objective": a.objective});
    let provenance = Provenance::new("certify", Some(&g), options).with_weights(&f);
    if let Some(prefix) = &a.output.csv {
        let rows: Vec<Vec<String>> = cert
            .multipliers
            .iter()
            .enumerate()
            .map(|(i, v)| vec![i.to_string(), v.to_string()])
            .collect();
        write_csv(prefix, "multipliers", &["index", "multiplier"], &rows)?;
    }
    emit(&json!({"provenance": provenance, "certificate": cert}), a.output.out.as_deref())
}

fn need(v: Option<usize>, flag: &str, family: &str) -> Result<usize, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--family {family} requires --{flag}")))
}

#[derive(Serialize)]
struct Generated {
    provenance: Provenance,
    family: String,
    graph: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvector: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvalue: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    level_structure: Option<LevelStructure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

pub fn generate(a: &GenerateArgs) -> Result<(), CliError> {
    let name = family_name(a.family);
    let mut params = serde_json::Map::new();
    let mut put = |k: &str, v: usize| {
        params.insert(k.into(), json!(v));
    };
    let (g, vector): (Graph, Option<Vec<f64>>) = match a.family {
        Family::Complete => {
            let n = need(a.n, "n", &name)?;
            put("n", n);
            (families::complete(n)?, None)
        }
        Family::Cycle => {
            let n = need(a.n, "n", &name)?;
            put("n", n);
            (families::cycle(n)?, None)
        }
        Family::CompleteBipartite => {
            let (x, y) = (need(a.a, "a", &name)?, need(a.b, "b", &name)?);
            put("a", x);
            put("b", y);
            (families::complete_bipartite(x, y)?, None)
        }
        Family::Cube => {
            let k = need(a.k, "k", &name)?;
            put("k", k);
            let (g, x) = constgrad::generate_cube(k)?;
            (g, Some(x))
        }
        Family::Petersen => (families::petersen()?, None),
        Family::MoebiusWheel => (families::moebius_wheel()?, None),
        Family::SwitchedCubes => {
            let (k, n0) = (need(a.k, "k", &name)?, need(a.n0, "n0", &name)?);
            put("k", k);
            put("n0", n0);
            let (g, x) = constgrad::generate_switched_family(k, n0, a.seed)?;
            (g, Some(x))
        }
        Family::SignedRegular => {
            let l = need(a.l, "l", &name)?;
            let k_in = need(a.k_in, "k-in", &name)?;
            let n_r = need(a.n_r, "n-r", &name)?;
            put("l", l);
            put("k_in", k_in);
            put("n_r", n_r);
            let (g, x) = constgrad::generate_signed_regular(l, k_in, n_r, a.seed)?;
            (g, Some(x))
        }
    };
    let seeded = matches!(a.family, Family::SwitchedCubes | Family::SignedRegular);
    let mut provenance = Provenance::new("generate", Some(&g), Value::Object(params));
    if seeded {
        provenance = provenance.with_seed(a.seed);
    }
    let mut out = Generated {
        provenance,
        family: name,
        graph: g.to_json_value(),
        eigenvector: None,
        eigenvalue: None,
        level_structure: None,
        note: None,
    };
    if let Some(x) = vector {
        let ones = vec![1.0; g.m()];
        let mu = spectral::dirichlet_energy(&g, &ones, &x) / x.iter().map(|v| v * v).sum::<f64>();
        out.eigenvalue = Some(mu);
        match constgrad::level_structure(&g, &x) {
            Ok(s) => out.level_structure = Some(s),
            Err(e) => out.note = Some(format!("no level structure: {e}")),
        }
        out.eigenvector = Some(x);
    }
    if let Some(path) = &a.graph_out {
        let mut text = g.to_json();
        text.push('\n');
        crate::io::write_text(&text, Some(path))?;
    }
    emit(&out, a.output.out.as_deref())
}

fn family_name(f: Family) -> String {
    use clap::ValueEnum;
    f.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}
