//! Brute-force ground truth: cycle and spanning-tree enumeration, finite
//! differences and exhaustive grid search. None of these share code paths
//! with the routines they check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{tangent_basis, Graph, Space, EPS_FLOOR};
use crate::metric::canonical_cycle;

pub const TREE_CAP: usize = 1_000_000;
pub const CYCLE_CAP: usize = 100_000;

/// Every simple cycle, once up to rotation and reflection, in lexicographic order.
pub fn enumerate_cycles(g: &Graph, cap: usize) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    let mut on_path = vec![false; g.n()];
    for s in 0..g.n() {
        path.push(s);
        on_path[s] = true;
        extend_cycle(g, s, &mut path, &mut on_path, &mut out, cap)?;
        on_path[s] = false;
        path.pop();
    }
    let mut out: Vec<Vec<usize>> = out.into_iter().map(|c| canonical_cycle(&c)).collect();
    out.sort();
    Ok(out)
}

fn extend_cycle(
    g: &Graph,
    start: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<usize>>,
    cap: usize,
) -> Result<()> {
    let x = *path.last().unwrap();
    for &(y, _) in g.neighbors(x) {
        if y == start && path.len() >= 3 && path[1] < x {
            // each cycle is closed once per direction; keep the one with path[1] < last
            out.push(path.clone());
            if out.len() > cap {
                return Err(Error::CapExceeded(cap));
            }
        } else if y > start && !on_path[y] {
            path.push(y);
            on_path[y] = true;
            extend_cycle(g, start, path, on_path, out, cap)?;
            on_path[y] = false;
            path.pop();
        }
    }
    Ok(())
}

/// Lengths of all simple cycles under a valuation.
pub fn cycle_lengths(g: &Graph, f: &[f64], cycles: &[Vec<usize>]) -> Vec<f64> {
    cycles
        .iter()
        .map(|c| {
            let k = c.len();
            (0..k)
                .map(|i| f[g.edge_index(c[i], c[(i + 1) % k]).unwrap()])
                .sum()
        })
        .collect()
}

/// Girth as the minimum over the full cycle enumeration.
pub fn girth_by_enumeration(g: &Graph, f: &[f64]) -> Result<f64> {
    let cycles = enumerate_cycles(g, CYCLE_CAP)?;
    if cycles.is_empty() {
        return Err(Error::Forest);
    }
    Ok(cycle_lengths(g, f, &cycles).into_iter().fold(f64::INFINITY, f64::min))
}

struct UnionFind {
    parent: Vec<usize>,
    history: Vec<(usize, usize)>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            history: Vec::new(),
        }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[rb] = ra;
        self.history.push((rb, rb));
        true
    }

    fn undo(&mut self) {
        let (x, orig) = self.history.pop().unwrap();
        self.parent[x] = orig;
    }
}

/// Every spanning tree as a sorted list of edge indices.
///
/// Edges are decided in index order (include or delete); an include must not
/// close a cycle and a delete must keep the remaining graph connected.
pub fn enumerate_spanning_trees(g: &Graph, cap: usize) -> Result<Vec<Vec<usize>>> {
    g.require_connected()?;
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    let mut uf = UnionFind::new(g.n());
    let mut deleted = vec![false; g.m()];
    tree_branch(g, 0, &mut chosen, &mut uf, &mut deleted, &mut out, cap)?;
    Ok(out)
}

fn still_connected(g: &Graph, deleted: &[bool]) -> bool {
    let mut seen = vec![false; g.n()];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &(w, e) in g.neighbors(u) {
            if !deleted[e] && !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == g.n()
}

fn tree_branch(
    g: &Graph,
    e: usize,
    chosen: &mut Vec<usize>,
    uf: &mut UnionFind,
    deleted: &mut Vec<bool>,
    out: &mut Vec<Vec<usize>>,
    cap: usize,
) -> Result<()> {
    if chosen.len() == g.n() - 1 {
        out.push(chosen.clone());
        if out.len() > cap {
            return Err(Error::CapExceeded(cap));
        }
        return Ok(());
    }
    if e == g.m() {
        return Ok(());
    }
    let (u, v) = g.edge(e);
    if uf.union(u, v) {
        chosen.push(e);
        tree_branch(g, e + 1, chosen, uf, deleted, out, cap)?;
        chosen.pop();
        uf.undo();
    }
    deleted[e] = true;
    if still_connected(g, deleted) {
        tree_branch(g, e + 1, chosen, uf, deleted, out, cap)?;
    }
    deleted[e] = false;
    Ok(())
}

/// `Σ_T Π_{e∈T} f(e)` over an explicit tree list.
pub fn weighted_tree_sum(trees: &[Vec<usize>], f: &[f64]) -> f64 {
    trees.iter().map(|t| t.iter().map(|&e| f[e]).product::<f64>()).sum()
}

/// Number of listed spanning trees through each edge.
pub fn trees_through_edges(g: &Graph, trees: &[Vec<usize>]) -> Vec<u64> {
    let mut count = vec![0u64; g.m()];
    for t in trees {
        for &e in t {
            count[e] += 1;
        }
    }
    count
}

/// `∂τ/∂f(e)` by enumeration: sum over trees through `e` of the product of the other weights.
pub fn tree_derivatives_by_enumeration(g: &Graph, trees: &[Vec<usize>], f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.m()];
    for t in trees {
        for &e in t {
            out[e] += t.iter().filter(|&&k| k != e).map(|&k| f[k]).product::<f64>();
        }
    }
    out
}

/// Central differences per edge coordinate with one Richardson refinement.
pub fn fd_gradient<F>(objective: F, f: &[f64], h_step: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let central = |e: usize, h: f64| {
        let mut plus = f.to_vec();
        let mut minus = f.to_vec();
        plus[e] += h;
        minus[e] -= h;
        (objective(&plus) - objective(&minus)) / (2.0 * h)
    };
    (0..f.len())
        .map(|e| {
            let coarse = central(e, h_step);
            let fine = central(e, h_step / 2.0);
            (4.0 * fine - coarse) / 3.0
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: Vec<f64>,
    pub value: f64,
    pub evaluated: usize,
    /// Best point has some weight within one grid step of the floor.
    pub at_boundary: bool,
}

/// Exhaustive grid evaluation over a deformation space of tangent dimension ≤ 3.
///
/// P is swept on the simplex grid `f = step·(k₁,…,k_m)`, `Σ f = m`; T and C on a
/// cubic grid in orthonormal tangent coordinates around `f ≡ 1`, keeping
/// points whose weights stay above the floor.
pub fn grid_search<F>(objective: F, g: &Graph, space: Space, resolution: f64) -> Result<GridResult>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let tangent = tangent_basis(g, space)?;
    if tangent.dim > 3 {
        return Err(Error::DimensionTooLarge(tangent.dim));
    }
    let m = g.m();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut evaluated = 0;
    let mut consider = |f: Vec<f64>| {
        if f.iter().any(|&w| w < EPS_FLOOR) {
            return;
        }
        if let Some(v) = objective(&f) {
            evaluated += 1;
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, f));
            }
        }
    };
    match space {
        Space::P => {
            let steps = (m as f64 / resolution).round() as usize;
            let unit = m as f64 / steps as f64;
            let mut parts = vec![0usize; m];
            compositions(steps, 0, &mut parts, &mut |p| {
                consider(p.iter().map(|&k| k as f64 * unit).collect())
            });
        }
        Space::T | Space::C => {
            let radius = m as f64 + (m as f64).sqrt();
            let k = (radius / resolution).ceil() as i64;
            let dim = tangent.dim;
            let mut idx = vec![-k; dim];
            loop {
                let coeffs: Vec<f64> = idx.iter().map(|&i| i as f64 * resolution).collect();
                let h = tangent.combine(&coeffs);
                consider(if dim == 0 { vec![1.0; m] } else { h.iter().map(|x| 1.0 + x).collect() });
                let mut d = 0;
                while d < dim {
                    idx[d] += 1;
                    if idx[d] <= k {
                        break;
                    }
                    idx[d] = -k;
                    d += 1;
                }
                if d == dim {
                    break;
                }
            }
        }
    }
    let (value, best) = best.ok_or_else(|| Error::InfeasibleSpace("no grid point evaluated".into()))?;
    let at_boundary = best.iter().any(|&w| w <= resolution + EPS_FLOOR);
    Ok(GridResult {
        best,
        value,
        evaluated,
        at_boundary,
    })
}

fn compositions(total: usize, pos: usize, parts: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if pos == parts.len() - 1 {
        parts[pos] = total;
        visit(parts);
        return;
    }
    for k in 0..=total {
        parts[pos] = k;
        compositions(total - k, pos + 1, parts, visit);
    }
}
