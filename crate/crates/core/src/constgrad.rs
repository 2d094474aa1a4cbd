//! Laplacian eigenvectors whose value changes by the same amount `c` across
//! every edge: verification, level structure, hypercube and switched
//! generators, and the signed-regular construction.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families;
use crate::graph::Graph;
use crate::spectral::{self, eigen_residual};

/// Tolerance for comparing level values of a verified vector.
pub const LEVEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantGradient {
    pub c: f64,
    pub mu: f64,
    pub residual: f64,
}

/// Checks `|x_u − x_v| = c` on every edge and `Δx = μx`.
pub fn verify_constant_gradient(g: &Graph, x: &[f64], tol: f64) -> Result<ConstantGradient> {
    g.require_connected()?;
    if x.len() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let diffs: Vec<f64> = g.edges().iter().map(|&(u, v)| (x[u] - x[v]).abs()).collect();
    let c = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if let Some((e, d)) = diffs
        .iter()
        .enumerate()
        .find(|(_, d)| (*d - c).abs() > tol * scale)
    {
        let (u, v) = g.edge(e);
        return Err(Error::GradientNotConstant(format!(
            "edge ({u},{v}) has difference {d} against mean {c}"
        )));
    }
    if c <= tol * scale {
        return Err(Error::GradientNotConstant(
            "constant vector has eigenvalue zero".into(),
        ));
    }
    let ones = vec![1.0; g.m()];
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    let mu = spectral::dirichlet_energy(g, &ones, x) / norm2;
    let residual = eigen_residual(g, &ones, x, mu);
    if residual > tol * norm2.sqrt().max(1.0) {
        return Err(Error::NotEigenvector(residual));
    }
    Ok(ConstantGradient { c, mu, residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub holds: bool,
}

/// Level decomposition of a `k`-regular graph with a constant-gradient
/// eigenvector scaled to `c = 1`, so that `f(u) = a − level(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStructure {
    pub k: usize,
    pub c: f64,
    pub a: f64,
    pub levels: Vec<usize>,
    /// Neighbours one level up, per level.
    pub r: Vec<usize>,
    pub counts: Vec<usize>,
    pub mu: f64,
    pub r1: usize,
    #[serde(rename = "N")]
    pub depth: usize,
    pub checks: Vec<InvariantCheck>,
}

impl LevelStructure {
    pub fn violations(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.name.as_str())
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

pub fn level_structure(g: &Graph, x: &[f64]) -> Result<LevelStructure> {
    let k = g.regular_degree().ok_or(Error::NotRegular)?;
    let cg = verify_constant_gradient(g, x, LEVEL_TOL)?;
    let y: Vec<f64> = x.iter().map(|v| v / cg.c).collect();
    let a = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut levels = Vec::with_capacity(g.n());
    for &yu in &y {
        let depth = a - yu;
        let j = depth.round();
        if (depth - j).abs() > 1e-6 {
            return Err(Error::InvariantViolation(format!(
                "value {yu} is not an integer number of steps below the top {a}"
            )));
        }
        levels.push(j as usize);
    }
    let depth = *levels.iter().max().unwrap();
    let mut counts = vec![0usize; depth + 1];
    let mut r: Vec<Option<usize>> = vec![None; depth + 1];
    for u in 0..g.n() {
        counts[levels[u]] += 1;
        let up = g
            .neighbors(u)
            .iter()
            .filter(|&&(w, _)| levels[w] + 1 == levels[u])
            .count();
        match r[levels[u]] {
            None => r[levels[u]] = Some(up),
            Some(prev) if prev != up => {
                return Err(Error::InvariantViolation(format!(
                    "level {} mixes {prev} and {up} upward neighbours",
                    levels[u]
                )))
            }
            _ => {}
        }
    }
    let r: Vec<usize> = r.into_iter().map(|v| v.unwrap_or(0)).collect();
    let r1 = r.get(1).copied().unwrap_or(0);
    let mu = cg.mu;
    let close = |p: f64, q: f64| (p - q).abs() <= 1e-8 * p.abs().max(q.abs()).max(1.0);

    let mut checks = Vec::new();
    let mut check = |name: &str, holds: bool| {
        checks.push(InvariantCheck { name: name.to_string(), holds })
    };
    check("a*mu = k", close(a * mu, k as f64));
    check("mu = 2 r1", close(mu, 2.0 * r1 as f64));
    check("r_j = r1 j", r.iter().enumerate().all(|(j, &rj)| rj == r1 * j));
    check("r1 divides k", r1 > 0 && k % r1 == 0);
    check(
        "n_j (k - r_j) = n_(j+1) r_(j+1)",
        (0..depth).all(|j| counts[j] * (k - r[j]) == counts[j + 1] * r[j + 1]),
    );
    check("bipartite", g.is_bipartite());
    let n0 = counts[0];
    let order_holds = r1 > 0
        && k % r1 == 0
        && (k / r1) < 64
        && (1u128 << (k / r1)) * n0 as u128 == g.n() as u128;
    check("|G| = 2^(k/r1) n0", order_holds);
    check("n0 >= r1", n0 >= r1);
    if r1 == 1 {
        check(
            "n_j = n0 C(k, j)",
            depth == k && (0..=depth).all(|j| counts[j] as u128 == n0 as u128 * binomial(k, j)),
        );
    }
    let structure = LevelStructure {
        k,
        c: cg.c,
        a,
        levels,
        r,
        counts,
        mu,
        r1,
        depth,
        checks,
    };
    let bad = structure.violations();
    if !bad.is_empty() {
        return Err(Error::InvariantViolation(bad.join(", ")));
    }
    Ok(structure)
}

fn cube_levels(k: usize, count: usize) -> Vec<f64> {
    (0..count << k)
        .map(|u| k as f64 / 2.0 - ((u & ((1 << k) - 1)) as u32).count_ones() as f64)
        .collect()
}

/// `Q_k` with `x(u) = k/2 − |u|`.
pub fn generate_cube(k: usize) -> Result<(Graph, Vec<f64>)> {
    Ok((families::hypercube(k)?, cube_levels(k, 1)))
}

/// Replaces `(u1,u2), (u3,u4)` by `(u1,u4), (u3,u2)`. `u1, u3` must share a
/// level and `u2, u4` must sit one level below it.
pub fn edge_switch(
    g: &Graph,
    x: &[f64],
    e1: (usize, usize),
    e2: (usize, usize),
) -> Result<Graph> {
    let (u1, u2) = e1;
    let (u3, u4) = e2;
    for &(p, q) in &[e1, e2] {
        if !g.has_edge(p, q) {
            return Err(Error::LevelMismatch(format!("({p},{q}) is not an edge")));
        }
    }
    let step = x[u1] - x[u2];
    let same = |p: f64, q: f64| (p - q).abs() <= LEVEL_TOL * p.abs().max(q.abs()).max(1.0);
    if step <= 0.0 || !same(x[u1], x[u3]) || !same(x[u2], x[u4]) || !same(x[u3] - x[u4], step) {
        return Err(Error::LevelMismatch(format!(
            "values ({}, {}) and ({}, {}) are not on a common pair of consecutive levels",
            x[u1], x[u2], x[u3], x[u4]
        )));
    }
    for (p, q) in [(u1, u4), (u3, u2)] {
        if p == q || g.has_edge(p, q) {
            return Err(Error::EdgeCollision(p.min(q), p.max(q)));
        }
    }
    let drop = [
        g.edge_index(u1, u2).unwrap(),
        g.edge_index(u3, u4).unwrap(),
    ];
    let mut pairs: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(i, _)| !drop.contains(i))
        .map(|(_, &e)| e)
        .collect();
    pairs.push((u1, u4));
    pairs.push((u3, u2));
    Graph::new(g.n(), &pairs)
}

/// Edges oriented from the higher to the lower value.
fn oriented_edges(g: &Graph, x: &[f64]) -> Vec<(usize, usize)> {
    g.edges()
        .iter()
        .map(|&(u, v)| if x[u] > x[v] { (u, v) } else { (v, u) })
        .collect()
}

/// Every admissible switch `(e1, e2)` of the graph, optionally only those
/// joining different components.
pub fn admissible_switches(
    g: &Graph,
    x: &[f64],
    cross_only: bool,
) -> Vec<((usize, usize), (usize, usize))> {
    let mut comp = vec![0usize; g.n()];
    for (i, c) in g.components().iter().enumerate() {
        for &v in c {
            comp[v] = i;
        }
    }
    let edges = oriented_edges(g, x);
    let mut out = Vec::new();
    for (i, &(u1, u2)) in edges.iter().enumerate() {
        for &(u3, u4) in &edges[i + 1..] {
            if cross_only && comp[u1] == comp[u3] {
                continue;
            }
            if (x[u1] - x[u3]).abs() > LEVEL_TOL || (x[u2] - x[u4]).abs() > LEVEL_TOL {
                continue;
            }
            if u1 == u3 || u2 == u4 || g.has_edge(u1, u4) || g.has_edge(u3, u2) {
                continue;
            }
            out.push(((u1, u2), (u3, u4)));
        }
    }
    out
}

/// `n0` disjoint copies of `Q_k`, levels aligned by Hamming weight, joined by
/// random cross-component switches until connected.
pub fn generate_switched_family(k: usize, n0: usize, seed: u64) -> Result<(Graph, Vec<f64>)> {
    if k < 2 || n0 == 0 {
        return Err(Error::InfeasibleDegrees(format!(
            "switched family needs k >= 2 and n0 >= 1, got k = {k}, n0 = {n0}"
        )));
    }
    let cube = families::hypercube(k)?;
    let size = 1usize << k;
    let pairs: Vec<(usize, usize)> = (0..n0)
        .flat_map(|c| cube.edges().iter().map(move |&(u, v)| (c * size + u, c * size + v)))
        .collect();
    let mut g = Graph::new(n0 * size, &pairs)?;
    let x = cube_levels(k, n0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while !g.is_connected() {
        let options = admissible_switches(&g, &x, true);
        let &(e1, e2) = options
            .choose(&mut rng)
            .ok_or_else(|| Error::InvariantViolation("no cross-component switch available".into()))?;
        g = edge_switch(&g, &x, e1, e2)?;
    }
    Ok((g, x))
}

fn circulant_offsets(k: usize, n: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    if k >= n || (k * n) % 2 == 1 {
        return Err(Error::InfeasibleDegrees(format!(
            "no {k}-regular graph on {n} vertices"
        )));
    }
    let mut offsets: Vec<usize> = (1..=k / 2).collect();
    if k % 2 == 1 {
        offsets.push(n / 2);
    }
    Ok(offsets)
}

fn permuted_circulant(n: usize, offsets: &[usize], base: usize, perm: &[usize]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..n {
        for &s in offsets {
            let j = (i + s) % n;
            if s * 2 == n && j < i {
                continue;
            }
            pairs.push((base + perm[i], base + perm[j]));
        }
    }
    pairs
}

/// Red part `0..nR`, black part `nR..2nR`: an `l`-regular bipartite graph
/// between them and a `k_in`-regular graph inside each. `x = ±1` by colour is
/// an eigenvector with eigenvalue `2l`.
pub fn generate_signed_regular(l: usize, k_in: usize, n_r: usize, seed: u64) -> Result<(Graph, Vec<f64>)> {
    if l == 0 || l > n_r {
        return Err(Error::InfeasibleDegrees(format!(
            "no {l}-regular bipartite graph on parts of size {n_r}"
        )));
    }
    let inner = circulant_offsets(k_in, n_r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let identity: Vec<usize> = (0..n_r).collect();
    for _ in 0..64 {
        let mut across = identity.clone();
        let mut red_inner = identity.clone();
        let mut black_inner = identity.clone();
        across.shuffle(&mut rng);
        red_inner.shuffle(&mut rng);
        black_inner.shuffle(&mut rng);
        let mut pairs = Vec::new();
        for i in 0..n_r {
            for s in 0..l {
                pairs.push((i, n_r + across[(i + s) % n_r]));
            }
        }
        pairs.extend(permuted_circulant(n_r, &inner, 0, &red_inner));
        pairs.extend(permuted_circulant(n_r, &inner, n_r, &black_inner));
        let g = Graph::new(2 * n_r, &pairs)?;
        if g.is_connected() {
            let x = (0..2 * n_r).map(|v| if v < n_r { 1.0 } else { -1.0 }).collect();
            return Ok((g, x));
        }
    }
    Err(Error::InfeasibleDegrees(format!(
        "no connected construction found for l = {l}, k_in = {k_in}, nR = {n_r}"
    )))
}

/// Structural test for `K_{a,b}`: bipartite, and every vertex adjacent to the
/// whole opposite side.
pub fn complete_bipartite_sides(g: &Graph) -> Option<(usize, usize)> {
    let side = g.bipartition()?;
    let a = side.iter().filter(|&&s| s).count();
    let b = g.n() - a;
    let complete = g.m() == a * b
        && (0..g.n()).all(|v| g.degree(v) == if side[v] { b } else { a });
    complete.then_some((a.min(b), a.max(b)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mu1Report {
    pub mu: f64,
    pub lambda1: f64,
    pub coincides: bool,
    pub k: Option<usize>,
    pub mu_equals_k: bool,
    pub complete_bipartite: bool,
    /// When `μ = λ₁ = k`, whether the graph is `K_{k,k}`.
    pub kkk_confirmed: Option<bool>,
    pub registry_eligible: bool,
}

pub fn mu1_coincidence_check(g: &Graph, x: &[f64], mu: f64) -> Result<Mu1Report> {
    verify_constant_gradient(g, x, LEVEL_TOL)?;
    let lambda1 = spectral::lambda1(g, &vec![1.0; g.m()])?.value;
    let tol = 1e-8 * mu.abs().max(1.0);
    let coincides = (mu - lambda1).abs() <= tol;
    let k = g.regular_degree();
    let mu_equals_k = k.is_some_and(|k| (mu - k as f64).abs() <= tol);
    let sides = complete_bipartite_sides(g);
    let complete_bipartite = sides.is_some();
    let kkk_confirmed = (coincides && mu_equals_k).then(|| {
        let k = k.unwrap();
        sides == Some((k, k))
    });
    Ok(Mu1Report {
        mu,
        lambda1,
        coincides,
        k,
        mu_equals_k,
        complete_bipartite,
        kkk_confirmed,
        registry_eligible: coincides && k.is_some_and(|k| (3..=6).contains(&k)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub mu: f64,
}

/// Instances with `μ = λ₁` for `3 ≤ k ≤ 6`, keyed by degree.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Mu1Registry {
    pub entries: BTreeMap<usize, Vec<RegistryEntry>>,
}

impl Mu1Registry {
    /// Stores the instance if the report qualifies; returns whether it did.
    pub fn record(&mut self, g: &Graph, report: &Mu1Report) -> bool {
        let (true, Some(k)) = (report.registry_eligible, report.k) else {
            return false;
        };
        let entry = RegistryEntry {
            n: g.n(),
            edges: g.edges().to_vec(),
            mu: report.mu,
        };
        let list = self.entries.entry(k).or_default();
        if list.contains(&entry) {
            return false;
        }
        list.push(entry);
        true
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
