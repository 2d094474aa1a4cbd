//! Acceptance criteria 1 to 10, one verdict line each.
//!
//! Runs without the libtest harness so the lines always reach stdout. Exits
//! non-zero when a criterion fails unexpectedly, or when a criterion recorded
//! in `KNOWN_FAILURES` starts passing.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use extremal_core::certify::{self, Objective, Status};
use extremal_core::constgrad::{self, generate_cube, generate_switched_family, level_structure, verify_constant_gradient};
use extremal_core::families::{
    complete, complete_bipartite, cycle, hypercube, moebius_wheel, petersen, triangle_with_pendant,
};
use extremal_core::optimize::{maximize, OptimizeOptions};
use extremal_core::oracles::{self, TREE_CAP};
use extremal_core::{metric, project_to_space, spectral, tangent_basis, Graph, Space};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Criteria whose literal statement cannot hold, with the reason.
const KNOWN_FAILURES: &[(u32, &str)] = &[(
    8,
    "K3,3 has no constant-gradient eigenvector for lambda1 = 3: its +-1 vector has mu = 2k = 6, and constant-gradient eigenvalues are even",
)];

struct Verdict {
    pass: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Verdict {
    Verdict { pass: true, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Verdict {
    Verdict { pass: false, detail: detail.into() }
}

fn corpus() -> Vec<(&'static str, Graph)> {
    vec![
        ("K3", complete(3).unwrap()),
        ("K4", complete(4).unwrap()),
        ("C4", cycle(4).unwrap()),
        ("C5", cycle(5).unwrap()),
        ("C6", cycle(6).unwrap()),
        ("C7", cycle(7).unwrap()),
        ("C8", cycle(8).unwrap()),
        ("K2,3", complete_bipartite(2, 3).unwrap()),
        ("K3,3", complete_bipartite(3, 3).unwrap()),
        ("Q3", hypercube(3).unwrap()),
        ("Petersen", petersen().unwrap()),
        ("V8", moebius_wheel().unwrap()),
        ("K3+pendant", triangle_with_pendant().unwrap()),
    ]
}

fn random_p(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..2.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x * m as f64 / s).collect()
}

fn random_in_space(rng: &mut ChaCha8Rng, g: &Graph, space: Space) -> Vec<f64> {
    if space == Space::P {
        return random_p(rng, g.m());
    }
    let t = tangent_basis(g, space).unwrap();
    loop {
        let coeffs: Vec<f64> = (0..t.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = t.combine(&coeffs);
        let scale = rng.gen_range(0.05..0.6) / h.iter().fold(0.0_f64, |a, x| a.max(x.abs())).max(1e-12);
        let f: Vec<f64> = h.iter().map(|x| 1.0 + scale * x).collect();
        if f.iter().all(|&w| w > 0.1) {
            let val = project_to_space(g, &f, space).unwrap();
            if !val.boundary {
                return val.weights;
            }
        }
    }
}

fn unit_tangent(rng: &mut ChaCha8Rng, g: &Graph, space: Space) -> Vec<f64> {
    let t = tangent_basis(g, space).unwrap();
    let coeffs: Vec<f64> = (0..t.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let h = t.combine(&coeffs);
    let n = h.iter().map(|x| x * x).sum::<f64>().sqrt();
    h.iter().map(|x| x / n).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn c1_concavity() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut tests = 0;
    for (i, (name, g)) in corpus().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        for _ in 0..1000 {
            let f1 = random_p(&mut rng, g.m());
            let f2 = random_p(&mut rng, g.m());
            let mid: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| (a + b) / 2.0).collect();
            for obj in Objective::ALL {
                let (a, b, c) = (
                    obj.evaluate(&g, &f1).unwrap(),
                    obj.evaluate(&g, &f2).unwrap(),
                    obj.evaluate(&g, &mid).unwrap(),
                );
                let slack = c - (a + b) / 2.0;
                worst = worst.min(slack);
                tests += 1;
                if slack < -1e-9 {
                    return fail(format!("{name} {obj}: slack {slack:e}"));
                }
            }
        }
    }
    pass(format!("{tests} midpoint tests, worst slack {worst:.1e}"))
}

fn c2_kirchhoff() -> Verdict {
    let mut worst: f64 = 0.0;
    for (i, (name, g)) in corpus().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + i as u64);
        for _ in 0..100 {
            let f: Vec<f64> = (0..g.m()).map(|_| rng.gen_range(0.01..10.0)).collect();
            let s = spectral::spectrum(&g, &f).unwrap();
            let prod: f64 = s.eigenvalues[1..].iter().product();
            let n_tau = g.n() as f64 * spectral::tree_number(&g, &f).unwrap();
            let r = rel(prod, n_tau);
            worst = worst.max(r);
            if r > 1e-8 {
                return fail(format!("{name}: relative error {r:e}"));
            }
        }
    }
    pass(format!("13 graphs x 100 valuations, worst relative error {worst:.1e}"))
}

fn c3_oracles() -> Verdict {
    for (name, g) in corpus() {
        let trees = oracles::enumerate_spanning_trees(&g, TREE_CAP).unwrap();
        let exact = spectral::tree_number_exact(&g).unwrap();
        if trees.len() as u128 != exact {
            return fail(format!("{name}: {} trees enumerated, {exact} by cofactor", trees.len()));
        }
        let ones = vec![1.0; g.m()];
        let a = metric::girth(&g, &ones).unwrap();
        let b = oracles::girth_by_enumeration(&g, &ones).unwrap();
        if a != b {
            return fail(format!("{name}: girth {a} vs enumeration {b}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(300);
    let mut worst: f64 = 0.0;
    for g in [complete(3).unwrap(), complete(4).unwrap()] {
        let trees = oracles::enumerate_spanning_trees(&g, TREE_CAP).unwrap();
        for _ in 0..50 {
            let f: Vec<f64> = (0..g.m()).map(|_| rng.gen_range(0.01..10.0)).collect();
            let r = rel(oracles::weighted_tree_sum(&trees, &f), spectral::tree_number(&g, &f).unwrap());
            worst = worst.max(r);
            if r > 1e-9 {
                return fail(format!("weighted K{}: relative error {r:e}", g.n()));
            }
        }
    }
    pass(format!("tree counts and girths exact on 13 graphs; weighted K3/K4 worst {worst:.1e}"))
}

fn c4_gradients() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let mut worst: f64 = 0.0;
    for (name, g) in [("K4", complete(4).unwrap()), ("Petersen", petersen().unwrap())] {
        for _ in 0..50 {
            let f = random_p(&mut rng, g.m());
            let r = spectral::effective_resistances(&g, &f).unwrap();
            let fd = oracles::fd_gradient(|w| spectral::log_tree_number(&g, w).unwrap(), &f, 1e-4);
            let d = r.iter().zip(&fd).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            worst = worst.max(d);
            if d > 1e-6 {
                return fail(format!("{name}: resistance vs finite difference {d:e}"));
            }
        }
    }
    for (name, g) in corpus() {
        let s: f64 = spectral::effective_resistances(&g, &vec![1.0; g.m()]).unwrap().iter().sum();
        if (s - (g.n() as f64 - 1.0)).abs() > 1e-9 {
            return fail(format!("{name}: Foster sum {s}"));
        }
    }
    pass(format!("worst gradient error {worst:.1e}; Foster sums exact to 1e-9"))
}

fn c5_symmetry() -> Verdict {
    let transitive: Vec<(&str, Graph)> = corpus()
        .into_iter()
        .filter(|(n, _)| !matches!(*n, "V8" | "K3+pendant"))
        .collect();
    let jobs: Vec<(&str, &Graph, Space, Objective)> = transitive
        .iter()
        .flat_map(|(n, g)| {
            Space::ALL
                .into_iter()
                .flat_map(move |s| Objective::ALL.into_iter().map(move |o| (*n, g, s, o)))
        })
        .collect();
    let problems: Vec<String> = jobs
        .par_iter()
        .filter_map(|&(name, g, space, obj)| {
            let r = maximize(g, space, obj, &OptimizeOptions::default()).ok()?;
            let dist = r.final_valuation.weights.iter().fold(0.0_f64, |m, w| m.max((w - 1.0).abs()));
            let status = r.certificate.as_ref().map(|c| c.status);
            if dist > 1e-6 || status != Some(Status::Maximal) {
                return Some(format!("{name} {obj} {space}: distance {dist:.1e}, status {status:?}"));
            }
            // from random starts the maximum value is the same
            let multi = OptimizeOptions {
                starts: 3,
                seed: 5,
                ..OptimizeOptions::default()
            };
            let m = maximize(g, space, obj, &multi).ok()?;
            let spread = m.start_values.iter().fold(0.0_f64, |a, v| a.max(rel(*v, r.value)));
            (spread > 1e-6).then(|| format!("{name} {obj} {space}: restart spread {spread:.1e}"))
        })
        .collect();
    if problems.is_empty() {
        pass(format!("{} optimizer runs at the constant valuation, all certified maximal", jobs.len()))
    } else {
        fail(problems.join("; "))
    }
}

fn c6_girth_certificates() -> Verdict {
    let k4 = complete(4).unwrap();
    let cert = certify::certify_girth(&k4, &[1.0; 6], Space::P).unwrap();
    let halves = cert.multipliers.len() == 4 && cert.multipliers.iter().all(|m| (m - 0.5).abs() < 1e-9);
    if cert.status != Status::Maximal || !halves {
        return fail(format!("K4: {} multipliers {:?}", cert.status, cert.multipliers));
    }
    let g = triangle_with_pendant().unwrap();
    let f = [1.0; 4];
    let cert = certify::certify_girth(&g, &f, Space::P).unwrap();
    let Some(w) = cert.witness.as_ref().filter(|_| cert.status == Status::NotMaximal) else {
        return fail(format!("K3+pendant: {}", cert.summary()));
    };
    let moved: Vec<f64> = f.iter().zip(&w.direction).map(|(a, b)| a + w.step * b).collect();
    let gain = metric::girth(&g, &moved).unwrap() - metric::girth(&g, &f).unwrap();
    if gain <= 0.0 {
        return fail("K3+pendant witness does not improve");
    }
    pass(format!("K4 maximal with mu = 1/2 on four triangles; K3+pendant witness gains {gain:.1e}"))
}

fn c7_tree_numbers() -> Verdict {
    let v8 = moebius_wheel().unwrap();
    let q3 = hypercube(3).unwrap();
    let det = |g: &Graph| spectral::tree_number(g, &vec![1.0; g.m()]).unwrap();
    let count = |g: &Graph| oracles::enumerate_spanning_trees(g, TREE_CAP).unwrap().len();
    let (dv, dq, ev, eq) = (det(&v8), det(&q3), count(&v8), count(&q3));
    if !(dv > dq && ev > eq) {
        return fail(format!("V8 {dv}/{ev} vs Q3 {dq}/{eq}"));
    }
    let ev8 = certify::equiarboreal_check(&v8).unwrap().equiarboreal;
    let eq3 = certify::equiarboreal_check(&q3).unwrap().equiarboreal;
    if ev8 || !eq3 {
        return fail(format!("equiarboreal: V8 {ev8}, Q3 {eq3}"));
    }
    pass(format!("tau(V8) = {ev} > tau(Q3) = {eq} by determinant and enumeration; Q3 equiarboreal, V8 not"))
}

fn c8_constant_gradient() -> Verdict {
    let mut instances = Vec::new();
    for k in 1..=4 {
        instances.push((format!("Q{k}"), generate_cube(k).unwrap(), 1));
    }
    for n0 in 1..=3 {
        instances.push((format!("switched(3, {n0})"), generate_switched_family(3, n0, 17).unwrap(), n0));
    }
    for (name, (g, x), n0) in &instances {
        let cg = match verify_constant_gradient(g, x, 1e-9) {
            Ok(cg) => cg,
            Err(e) => return fail(format!("{name}: {e}")),
        };
        if (cg.c - 1.0).abs() > 1e-9 || (cg.mu - 2.0).abs() > 1e-9 {
            return fail(format!("{name}: c = {}, mu = {}", cg.c, cg.mu));
        }
        let ls = match level_structure(g, x) {
            Ok(ls) => ls,
            Err(e) => return fail(format!("{name}: {e}")),
        };
        let expected = (1usize << (ls.k / ls.r1)) * n0;
        if !ls.violations().is_empty() || g.n() != expected {
            return fail(format!("{name}: violations {:?}, |G| = {} vs {expected}", ls.violations(), g.n()));
        }
    }
    let k33 = complete_bipartite(3, 3).unwrap();
    let x: Vec<f64> = (0..6).map(|v| if v < 3 { 1.0 } else { -1.0 }).collect();
    let mu = verify_constant_gradient(&k33, &x, 1e-9).unwrap().mu;
    let report = constgrad::mu1_coincidence_check(&k33, &x, mu).unwrap();
    let k33_ok = report.coincides
        && report.mu_equals_k
        && report.k == Some(3)
        && (report.mu - 3.0).abs() < 1e-9
        && (report.lambda1 - 3.0).abs() < 1e-9;
    let cubes = format!("{} cube and switched instances verified with c = 1, mu = 2, no violations", instances.len());
    if k33_ok {
        pass(format!("{cubes}; K3,3 coincides at mu = lambda1 = 3"))
    } else {
        fail(format!(
            "{cubes}; K3,3 clause fails: mu = {}, lambda1 = {}, coincides = {}",
            report.mu, report.lambda1, report.coincides
        ))
    }
}

fn c9_lambda1_soundness() -> Verdict {
    let mut counts = [0usize; 3];
    for (name, g) in [("K4", complete(4).unwrap()), ("C4", cycle(4).unwrap())] {
        for (si, space) in Space::ALL.into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(900 + si as u64);
            for _ in 0..20 {
                let f = random_in_space(&mut rng, &g, space);
                let cert = certify::certify_lambda1(&g, &f, space).unwrap();
                let base = spectral::lambda1(&g, &f).unwrap().value;
                match cert.status {
                    Status::Maximal => {
                        counts[0] += 1;
                        for _ in 0..200 {
                            let h = unit_tangent(&mut rng, &g, space);
                            let moved: Vec<f64> = f.iter().zip(&h).map(|(a, b)| a + 1e-4 * b).collect();
                            let v = spectral::lambda1(&g, &moved).unwrap().value;
                            if v > base + 1e-10 {
                                return fail(format!("{name} {space}: maximal but a direction gains {:e}", v - base));
                            }
                        }
                    }
                    Status::NotMaximal => {
                        counts[1] += 1;
                        let w = cert.witness.as_ref().unwrap();
                        let moved: Vec<f64> = f.iter().zip(&w.direction).map(|(a, b)| a + w.step * b).collect();
                        if spectral::lambda1(&g, &moved).unwrap().value <= base {
                            return fail(format!("{name} {space}: witness does not improve"));
                        }
                    }
                    Status::Inconclusive => counts[2] += 1,
                }
            }
        }
    }
    pass(format!(
        "120 certificates: {} maximal, {} not_maximal with improving witness, {} inconclusive",
        counts[0], counts[1], counts[2]
    ))
}

fn cli(dir: &Path, args: &[&str], threads: Option<&str>) -> Result<Vec<u8>, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_extremal"));
    cmd.current_dir(dir).args(args);
    if let Some(t) = threads {
        cmd.env("GE_THREADS", t);
    }
    let out = cmd.output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    Ok(out.stdout)
}

fn c10_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("k4.json"), complete(4).unwrap().to_json()).unwrap();
    std::fs::write(dir.path().join("k3p.json"), triangle_with_pendant().unwrap().to_json()).unwrap();
    let runs: [&[&str]; 4] = [
        &["optimize", "k4.json", "--space", "P", "--objective", "lambda1", "--starts", "4", "--seed", "9"],
        &["optimize", "k3p.json", "--space", "C", "--objective", "logdet", "--starts", "4", "--seed", "3"],
        &["optimize", "k3p.json", "--space", "P", "--objective", "girth", "--starts", "3", "--seed", "1"],
        &["generate", "--family", "switched-cubes", "--k", "3", "--n0", "3", "--seed", "5"],
    ];
    for args in runs {
        let outputs: Result<Vec<Vec<u8>>, String> = [None, None, Some("1"), Some("3")]
            .into_iter()
            .map(|t| cli(dir.path(), args, t))
            .collect();
        let outputs = match outputs {
            Ok(o) => o,
            Err(e) => return fail(format!("{}: {e}", args.join(" "))),
        };
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            return fail(format!("{}: reports differ", args.join(" ")));
        }
    }
    pass("4 invocations x 4 runs (default, 1 and 3 threads) byte-identical")
}

fn main() {
    let criteria: [(u32, &str, fn() -> Verdict); 10] = [
        (1, "concavity", c1_concavity),
        (2, "kirchhoff", c2_kirchhoff),
        (3, "oracle equivalence", c3_oracles),
        (4, "gradient check", c4_gradients),
        (5, "symmetry optima", c5_symmetry),
        (6, "girth certificates", c6_girth_certificates),
        (7, "tree-number comparison", c7_tree_numbers),
        (8, "constant-gradient suite", c8_constant_gradient),
        (9, "lambda1 certificate soundness", c9_lambda1_soundness),
        (10, "determinism", c10_determinism),
    ];
    let mut unexpected = Vec::new();
    for (id, title, run) in criteria {
        let start = Instant::now();
        let v = run();
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == id).map(|(_, why)| *why);
        let verdict = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict} [{secs:6.2}s] {title}: {}", v.detail);
        match (v.pass, known) {
            (false, Some(why)) => println!("             known failure: {why}"),
            (false, None) => unexpected.push(format!("criterion {id} failed")),
            (true, Some(_)) => unexpected.push(format!("criterion {id} passed but is listed as a known failure")),
            (true, None) => {}
        }
        if secs > 60.0 {
            unexpected.push(format!("criterion {id} took {secs:.0}s"));
        }
    }
    if !unexpected.is_empty() {
        eprintln!("acceptance: {}", unexpected.join("; "));
        std::process::exit(1);
    }
}
