//! Girth, systoles, distances and diameter of a weighted graph.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Default relative tolerance for calling two cycle lengths equal.
pub const SYSTOLE_TOL: f64 = 1e-9;

/// Cap on the number of distinct systoles collected.
pub const CYCLE_CAP: usize = 100_000;

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source distances, ignoring edge `skip`. Stops early once `target` is settled.
fn dijkstra(g: &Graph, f: &[f64], source: usize, skip: Option<usize>, target: Option<usize>) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.n()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem { dist: 0.0, vertex: source });
    while let Some(HeapItem { dist: d, vertex: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if Some(u) == target {
            break;
        }
        for &(w, e) in g.neighbors(u) {
            if Some(e) == skip {
                continue;
            }
            let nd = d + f[e];
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(HeapItem { dist: nd, vertex: w });
            }
        }
    }
    dist
}

fn check_weights(g: &Graph, f: &[f64]) -> Result<()> {
    if f.len() != g.m() {
        return Err(Error::DimensionMismatch {
            expected: g.m(),
            got: f.len(),
        });
    }
    if f.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Length of the shortest cycle: `min_e [f(e) + d_{G∖e}(u, v)]`.
pub fn girth(g: &Graph, f: &[f64]) -> Result<f64> {
    check_weights(g, f)?;
    let mut best = f64::INFINITY;
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let d = dijkstra(g, f, u, Some(e), Some(v))[v];
        best = best.min(d + f[e]);
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Forest)
    }
}

/// All shortest cycles of a valuation with their indicator vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystoleSet {
    pub girth: f64,
    /// Vertex sequences, rotated to start at the smallest vertex.
    pub cycles: Vec<Vec<usize>>,
    /// Edge indicator per cycle, in canonical edge order.
    pub edge_systoles: Vec<Vec<u8>>,
    /// Vertex indicator per cycle.
    pub vertex_systoles: Vec<Vec<u8>>,
    pub tol: f64,
}

impl SystoleSet {
    pub fn edge_vectors(&self) -> Vec<Vec<f64>> {
        self.edge_systoles
            .iter()
            .map(|s| s.iter().map(|&x| f64::from(x)).collect())
            .collect()
    }

    pub fn vertex_vectors(&self) -> Vec<Vec<f64>> {
        self.vertex_systoles
            .iter()
            .map(|s| s.iter().map(|&x| f64::from(x)).collect())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }
}

/// Rotates a cycle to start at its smallest vertex, traversed towards the
/// smaller of that vertex's two cycle neighbors.
pub fn canonical_cycle(cycle: &[usize]) -> Vec<usize> {
    let k = cycle.len();
    let start = (0..k).min_by_key(|&i| cycle[i]).unwrap();
    let next = cycle[(start + 1) % k];
    let prev = cycle[(start + k - 1) % k];
    if next <= prev {
        (0..k).map(|i| cycle[(start + i) % k]).collect()
    } else {
        (0..k).map(|i| cycle[(start + k - i) % k]).collect()
    }
}

/// Edge indices of a cycle given as a closed vertex sequence.
pub fn cycle_edges(g: &Graph, cycle: &[usize]) -> Vec<usize> {
    let k = cycle.len();
    (0..k)
        .map(|i| {
            g.edge_index(cycle[i], cycle[(i + 1) % k])
                .expect("consecutive cycle vertices are adjacent")
        })
        .collect()
}

/// All simple cycles of length at most `girth·(1 + tol)`.
pub fn systoles(g: &Graph, f: &[f64], tol: f64) -> Result<SystoleSet> {
    let gamma = girth(g, f)?;
    let bound = gamma * (1.0 + tol);
    let mut found: HashSet<Vec<usize>> = HashSet::new();
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let to_v = dijkstra(g, f, v, Some(e), None);
        if to_v[u] + f[e] > bound {
            continue;
        }
        let mut path = vec![u];
        let mut on_path = vec![false; g.n()];
        on_path[u] = true;
        collect_paths(
            g,
            f,
            e,
            v,
            bound - f[e],
            &to_v,
            0.0,
            &mut path,
            &mut on_path,
            &mut found,
        )?;
    }
    let mut cycles: Vec<Vec<usize>> = found.into_iter().collect();
    cycles.sort();
    let edge_systoles = cycles
        .iter()
        .map(|c| {
            let mut ind = vec![0u8; g.m()];
            for e in cycle_edges(g, c) {
                ind[e] = 1;
            }
            ind
        })
        .collect();
    let vertex_systoles = cycles
        .iter()
        .map(|c| {
            let mut ind = vec![0u8; g.n()];
            for &v in c {
                ind[v] = 1;
            }
            ind
        })
        .collect();
    Ok(SystoleSet {
        girth: gamma,
        cycles,
        edge_systoles,
        vertex_systoles,
        tol,
    })
}

#[allow(clippy::too_many_arguments)]
fn collect_paths(
    g: &Graph,
    f: &[f64],
    skip: usize,
    target: usize,
    budget: f64,
    to_target: &[f64],
    length: f64,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    found: &mut HashSet<Vec<usize>>,
) -> Result<()> {
    let x = *path.last().unwrap();
    for &(y, e) in g.neighbors(x) {
        if e == skip || on_path[y] {
            continue;
        }
        let len = length + f[e];
        if y == target {
            if len <= budget {
                path.push(y);
                found.insert(canonical_cycle(path));
                path.pop();
                if found.len() > CYCLE_CAP {
                    return Err(Error::CycleBudgetExceeded(CYCLE_CAP));
                }
            }
            continue;
        }
        if len + to_target[y] > budget {
            continue;
        }
        path.push(y);
        on_path[y] = true;
        collect_paths(g, f, skip, target, budget, to_target, len, path, on_path, found)?;
        on_path[y] = false;
        path.pop();
    }
    Ok(())
}

pub fn distance(g: &Graph, f: &[f64], u: usize, v: usize) -> Result<f64> {
    check_weights(g, f)?;
    g.require_connected()?;
    for x in [u, v] {
        if x >= g.n() {
            return Err(Error::VertexOutOfRange { vertex: x, n: g.n() });
        }
    }
    Ok(dijkstra(g, f, u, None, Some(v))[v])
}

/// All-pairs weighted distances.
pub fn distance_matrix(g: &Graph, f: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_weights(g, f)?;
    g.require_connected()?;
    Ok((0..g.n()).map(|s| dijkstra(g, f, s, None, None)).collect())
}

pub fn diameter(g: &Graph, f: &[f64]) -> Result<f64> {
    Ok(distance_matrix(g, f)?
        .iter()
        .flat_map(|row| row.iter().copied())
        .fold(0.0, f64::max))
}

/// Vertex vectors `w_v` (edge indicators of the star at `v`) and the degree vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryVectors {
    pub vertex_vectors: Vec<Vec<u8>>,
    pub degree_vector: Vec<usize>,
}

impl GeometryVectors {
    pub fn new(g: &Graph) -> Self {
        let vertex_vectors = (0..g.n())
            .map(|v| {
                let mut w = vec![0u8; g.m()];
                for &(_, e) in g.neighbors(v) {
                    w[e] = 1;
                }
                w
            })
            .collect();
        GeometryVectors {
            vertex_vectors,
            degree_vector: g.degrees(),
        }
    }

    pub fn vertex_vectors_f64(&self) -> Vec<Vec<f64>> {
        self.vertex_vectors
            .iter()
            .map(|w| w.iter().map(|&x| f64::from(x)).collect())
            .collect()
    }

    pub fn degree_vector_f64(&self) -> Vec<f64> {
        self.degree_vector.iter().map(|&d| d as f64).collect()
    }
}
