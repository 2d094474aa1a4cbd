//! Graphs, edge valuations and the three deformation spaces.
//!
//! A valuation is a positive weight per edge, stored in the canonical edge
//! order of its [`Graph`]. The deformation spaces are affine subsets of the
//! valuations with total weight `m`:
//!
//! * [`Space::P`]: every positive valuation with `Σ f(e) = m`;
//! * [`Space::T`]: valuations whose incident weights sum to `deg(v)` at every vertex;
//! * [`Space::C`]: valuations of the form `f(uv) = g(u) + g(v)` for a positive
//!   vertex function `g`.
//!
//! The constant valuation `f ≡ 1` lies in all three, so each space is
//! `𝟙 + span(tangent basis)` intersected with the positive orthant.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight floor: weights at this level count as boundary contact.
pub const EPS_FLOOR: f64 = 1e-6;

/// Tolerance for the affine constraints of a deformation space.
pub const SPACE_TOL: f64 = 1e-10;

/// Finite simple undirected graph with canonically ordered edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    /// `(neighbor, edge index)` per vertex, sorted by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
    connected: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl Graph {
    /// Builds a graph on `n` vertices from unordered vertex pairs.
    pub fn new(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if n == 0 || pairs.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut edges = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
            }
            if a == b {
                return Err(Error::LoopEdge(a));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].0, w[0].1));
        }
        let mut adjacency = vec![Vec::new(); n];
        for (i, &(u, v)) in edges.iter().enumerate() {
            adjacency[u].push((v, i));
            adjacency[v].push((u, i));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let mut graph = Graph {
            n,
            edges,
            adjacency,
            connected: false,
        };
        graph.connected = graph.components().len() == 1;
        Ok(graph)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    /// Neighbors of `v` together with the connecting edge index.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn require_connected(&self) -> Result<()> {
        if self.connected {
            Ok(())
        } else {
            Err(Error::Disconnected)
        }
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_index(u, v).is_some()
    }

    /// `Some(k)` when every vertex has degree `k`.
    pub fn regular_degree(&self) -> Option<usize> {
        let k = self.degree(0);
        self.adjacency.iter().all(|a| a.len() == k).then_some(k)
    }

    /// Vertex sets of the connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &(w, _) in &self.adjacency[u] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Proper 2-coloring (`false`/`true` per vertex) if the graph is bipartite.
    pub fn bipartition(&self) -> Option<Vec<bool>> {
        let mut color: Vec<Option<bool>> = vec![None; self.n];
        for s in 0..self.n {
            if color[s].is_some() {
                continue;
            }
            color[s] = Some(false);
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                let cu = color[u].unwrap();
                for &(w, _) in &self.adjacency[u] {
                    match color[w] {
                        None => {
                            color[w] = Some(!cu);
                            queue.push_back(w);
                        }
                        Some(cw) if cw == cu => return None,
                        Some(_) => {}
                    }
                }
            }
        }
        Some(color.into_iter().map(Option::unwrap).collect())
    }

    pub fn is_bipartite(&self) -> bool {
        self.bipartition().is_some()
    }

    /// Unsigned vertex–edge incidence matrix (`n × m`).
    pub fn incidence(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.n, self.m());
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            b[(u, e)] = 1.0;
            b[(v, e)] = 1.0;
        }
        b
    }

    /// Adjoint of [`Graph::lift`]: sums an edge vector over the edges at each vertex.
    pub fn vertex_sums(&self, edge_vec: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            out[u] += edge_vec[e];
            out[v] += edge_vec[e];
        }
        out
    }

    /// Edge vector `e = uv ↦ x(u) + x(v)`.
    pub fn lift(&self, vertex_vec: &[f64]) -> Vec<f64> {
        self.edges
            .iter()
            .map(|&(u, v)| vertex_vec[u] + vertex_vec[v])
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GraphJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let pairs: Vec<(usize, usize)> = spec.edges.iter().map(|p| (p[0], p[1])).collect();
        Graph::new(spec.n, &pairs)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("graph serializes")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(GraphJson {
            n: self.n,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
        })
        .expect("graph serializes")
    }

    /// Parses whitespace edge-list text, one `u v [weight]` per line.
    ///
    /// Blank lines and lines starting with `#` are skipped. Weights, when
    /// present on every line, are returned in canonical edge order.
    pub fn from_edge_list(text: &str) -> Result<(Self, Option<Vec<f64>>)> {
        let mut pairs = Vec::new();
        let mut weights = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse(format!("line {}: expected `u v [weight]`", lineno + 1));
            if fields.len() < 2 || fields.len() > 3 {
                return Err(bad());
            }
            let u: usize = fields[0].parse().map_err(|_| bad())?;
            let v: usize = fields[1].parse().map_err(|_| bad())?;
            pairs.push((u, v));
            if let Some(w) = fields.get(2) {
                weights.push(w.parse::<f64>().map_err(|_| bad())?);
            }
        }
        let n = pairs.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        let graph = Graph::new(n, &pairs)?;
        if weights.is_empty() {
            return Ok((graph, None));
        }
        if weights.len() != pairs.len() {
            return Err(Error::Parse("weights must be given on every line or none".into()));
        }
        let mut ordered = vec![0.0; graph.m()];
        for (&(u, v), &w) in pairs.iter().zip(&weights) {
            ordered[graph.edge_index(u, v).expect("edge just inserted")] = w;
        }
        Ok((graph, Some(ordered)))
    }
}

/// Builds a graph whose vertex count is one more than the largest label used.
pub fn build_graph(pairs: &[(usize, usize)]) -> Result<Graph> {
    let n = pairs.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    Graph::new(n, pairs)
}

/// Parses a JSON array of edge weights.
pub fn weights_from_json(text: &str) -> Result<Vec<f64>> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    P,
    T,
    C,
}

impl Space {
    pub const ALL: [Space; 3] = [Space::P, Space::T, Space::C];

    /// Floor on the optimization coordinates: edge weights for P and T,
    /// the vertex function for C (so lifted weights stay at or above [`EPS_FLOOR`]).
    pub fn coordinate_floor(self) -> f64 {
        match self {
            Space::P | Space::T => EPS_FLOOR,
            Space::C => EPS_FLOOR / 2.0,
        }
    }
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Space::P => "P",
            Space::T => "T",
            Space::C => "C",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" | "p" => Ok(Space::P),
            "T" | "t" => Ok(Space::T),
            "C" | "c" => Ok(Space::C),
            other => Err(Error::Parse(format!("unknown space `{other}`"))),
        }
    }
}

/// A positive edge valuation, optionally certified to lie in a deformation space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeValuation {
    pub weights: Vec<f64>,
    pub space: Option<Space>,
    /// Some weight (or, for C, some vertex weight) sits at the floor.
    pub boundary: bool,
    /// The vertex function `g` with `f(uv) = g(u) + g(v)`; present for C.
    pub vertex_weights: Option<Vec<f64>>,
}

impl EdgeValuation {
    /// Untagged valuation; weights must be finite and positive.
    pub fn new(g: &Graph, weights: Vec<f64>) -> Result<Self> {
        check_len(weights.len(), g.m())?;
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite);
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::InfeasibleSpace("weights must be strictly positive".into()));
        }
        let boundary = weights.iter().any(|&w| w <= EPS_FLOOR * (1.0 + 1e-6));
        Ok(EdgeValuation {
            weights,
            space: None,
            boundary,
            vertex_weights: None,
        })
    }

    /// The constant valuation `f ≡ 1`, tagged with `space`.
    pub fn constant(g: &Graph, space: Space) -> Self {
        EdgeValuation {
            weights: vec![1.0; g.m()],
            space: Some(space),
            boundary: false,
            vertex_weights: (space == Space::C).then(|| vec![0.5; g.n()]),
        }
    }

    /// Checks that the weights lie in `space` and returns a tagged copy.
    ///
    /// For C the vertex function is recovered by least squares.
    pub fn into_space(self, g: &Graph, space: Space) -> Result<Self> {
        let m = g.m() as f64;
        let w = &self.weights;
        if (w.iter().sum::<f64>() - m).abs() > SPACE_TOL * m.max(1.0) {
            return Err(Error::InfeasibleSpace(format!(
                "weights sum to {} instead of {}",
                w.iter().sum::<f64>(),
                m
            )));
        }
        let mut vertex_weights = None;
        match space {
            Space::P => {}
            Space::T => {
                let sums = g.vertex_sums(w);
                for (v, s) in sums.iter().enumerate() {
                    if (s - g.degree(v) as f64).abs() > SPACE_TOL * m.max(1.0) {
                        return Err(Error::InfeasibleSpace(format!(
                            "vertex {v} has incident weight {s}, degree {}",
                            g.degree(v)
                        )));
                    }
                }
            }
            Space::C => {
                let vw = match self.vertex_weights {
                    Some(vw) => vw,
                    None => recover_vertex_function(g, w),
                };
                let lifted = g.lift(&vw);
                let err = lifted
                    .iter()
                    .zip(w)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if err > 1e-9 {
                    return Err(Error::InfeasibleSpace(format!(
                        "weights are not a conformal lift (residual {err:.3e})"
                    )));
                }
                if let Some(v) = vw.iter().position(|&x| x <= 0.0) {
                    return Err(Error::NonPositiveVertexWeight(v));
                }
                vertex_weights = Some(vw);
            }
        }
        let boundary = self.weights.iter().any(|&x| x <= EPS_FLOOR * (1.0 + 1e-6))
            || vertex_weights
                .as_ref()
                .is_some_and(|vw| vw.iter().any(|&x| x <= Space::C.coordinate_floor() * (1.0 + 1e-6)));
        Ok(EdgeValuation {
            weights: self.weights,
            space: Some(space),
            boundary,
            vertex_weights,
        })
    }

    /// Optimization coordinates: the edge weights, or the vertex function for C.
    pub fn coordinates(&self) -> &[f64] {
        match (&self.space, &self.vertex_weights) {
            (Some(Space::C), Some(vw)) => vw,
            _ => &self.weights,
        }
    }

    /// Edges whose weight sits at the floor.
    pub fn floored_edges(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w <= EPS_FLOOR * (1.0 + 1e-6))
            .map(|(e, _)| e)
            .collect()
    }
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Orthonormal basis of the tangent space of a deformation space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentBasis {
    pub space: Space,
    /// Orthonormal edge-indexed directions.
    pub basis: Vec<Vec<f64>>,
    pub dim: usize,
    /// For C: orthonormal vertex directions `δg` with `Σ deg(v) δg(v) = 0`,
    /// whose lifts span `basis`.
    pub vertex_basis: Option<Vec<Vec<f64>>>,
}

impl TangentBasis {
    /// Orthogonal projection of an edge vector onto the tangent space.
    pub fn project(&self, h: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; h.len()];
        for b in &self.basis {
            let c = dot(b, h);
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        out
    }

    /// Coordinates of an edge vector in the orthonormal basis.
    pub fn coefficients(&self, h: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|b| dot(b, h)).collect()
    }

    /// Edge vector with the given basis coefficients.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        let m = self.basis.first().map_or(0, Vec::len);
        let mut out = vec![0.0; m];
        for (b, c) in self.basis.iter().zip(coeffs) {
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthonormal basis for the null space of `a` (columns-space vectors).
pub(crate) fn null_space(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let cols = a.ncols();
    let gram = a.transpose() * a;
    let eig = gram.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0_f64, |s, &x| s.max(x.abs()));
    let mut idx: Vec<usize> = (0..cols)
        .filter(|&i| eig.eigenvalues[i].abs() <= 1e-10 * scale)
        .collect();
    idx.sort_unstable();
    let vecs: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    orthonormalize(vecs)
}

/// Orthonormal basis of the span of the given vectors.
pub(crate) fn orthonormalize(vecs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    let scale = vecs.iter().map(|v| norm(v)).fold(0.0, f64::max).max(1e-300);
    for mut v in vecs {
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for b in &out {
                let c = dot(b, &v);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let nv = norm(&v);
        if nv > 1e-9 * scale {
            v.iter_mut().for_each(|x| *x /= nv);
            out.push(v);
        }
    }
    out
}

/// Orthonormal basis of `{x : ⟨x, d⟩ = 0}` in `ℝ^len(d)`.
pub(crate) fn complement_basis(d: &[f64]) -> Vec<Vec<f64>> {
    let k = d.len();
    let nd = norm(d);
    let unit: Vec<f64> = d.iter().map(|x| x / nd).collect();
    let mut candidates = vec![unit];
    for i in 0..k {
        let mut e = vec![0.0; k];
        e[i] = 1.0;
        candidates.push(e);
    }
    let mut basis = orthonormalize(candidates);
    basis.remove(0);
    basis.truncate(k - 1);
    basis
}

pub fn tangent_basis(g: &Graph, space: Space) -> Result<TangentBasis> {
    g.require_connected()?;
    let m = g.m();
    Ok(match space {
        Space::P => {
            let basis = complement_basis(&vec![1.0; m]);
            TangentBasis {
                space,
                dim: basis.len(),
                basis,
                vertex_basis: None,
            }
        }
        Space::T => {
            let basis = null_space(&g.incidence());
            TangentBasis {
                space,
                dim: basis.len(),
                basis,
                vertex_basis: None,
            }
        }
        Space::C => {
            let deg: Vec<f64> = g.degrees().iter().map(|&d| d as f64).collect();
            let vertex_basis = complement_basis(&deg);
            let lifts = vertex_basis.iter().map(|dv| g.lift(dv)).collect();
            let basis = orthonormalize(lifts);
            TangentBasis {
                space,
                dim: basis.len(),
                basis,
                vertex_basis: Some(vertex_basis),
            }
        }
    })
}

/// Vertex function `g` with `lift(g)` closest to `f`. On bipartite graphs the
/// lift has a kernel (`+t` on one side, `−t` on the other); the returned `g`
/// uses the kernel freedom to maximize `min g`.
pub fn recover_vertex_function(g: &Graph, f: &[f64]) -> Vec<f64> {
    let sol = lstsq(&lift_matrix(g), &DVector::from_column_slice(f));
    let mut vw: Vec<f64> = sol.iter().copied().collect();
    balance_on_kernel(g, &mut vw);
    vw
}

fn balance_on_kernel(g: &Graph, vw: &mut [f64]) {
    let Some(sides) = g.bipartition() else {
        return;
    };
    if !g.is_connected() {
        return;
    }
    let min_a = vw
        .iter()
        .zip(&sides)
        .filter(|(_, &s)| !s)
        .map(|(x, _)| *x)
        .fold(f64::INFINITY, f64::min);
    let min_b = vw
        .iter()
        .zip(&sides)
        .filter(|(_, &s)| s)
        .map(|(x, _)| *x)
        .fold(f64::INFINITY, f64::min);
    let t = (min_b - min_a) / 2.0;
    for (x, &s) in vw.iter_mut().zip(&sides) {
        if s {
            *x -= t;
        } else {
            *x += t;
        }
    }
}

/// The `m × n` matrix of [`Graph::lift`].
pub fn lift_matrix(g: &Graph) -> DMatrix<f64> {
    g.incidence().transpose()
}

/// Maps a positive vertex function to its conformal valuation, rescaled so `Σ f = m`.
pub fn conformal_lift(g: &Graph, vw: &[f64]) -> Result<EdgeValuation> {
    check_len(vw.len(), g.n())?;
    if vw.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    if let Some(v) = vw.iter().position(|&x| x <= 0.0) {
        return Err(Error::NonPositiveVertexWeight(v));
    }
    let raw = g.lift(vw);
    let scale = g.m() as f64 / raw.iter().sum::<f64>();
    let weights: Vec<f64> = raw.iter().map(|x| x * scale).collect();
    let vertex: Vec<f64> = vw.iter().map(|x| x * scale).collect();
    let boundary = vertex.iter().any(|&x| x <= Space::C.coordinate_floor() * (1.0 + 1e-6));
    Ok(EdgeValuation {
        weights,
        space: Some(Space::C),
        boundary,
        vertex_weights: Some(vertex),
    })
}

/// Orthogonal projection onto the affine space followed by positivity repair.
///
/// Coordinates below the floor are pinned to it and the remaining
/// coordinates re-projected, until no coordinate is below the floor.
pub fn project_to_space(g: &Graph, raw: &[f64], space: Space) -> Result<EdgeValuation> {
    check_len(raw.len(), g.m())?;
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let tangent = tangent_basis(g, space)?;
    let shifted: Vec<f64> = raw.iter().map(|x| x - 1.0).collect();
    let proj: Vec<f64> = tangent.project(&shifted).iter().map(|x| x + 1.0).collect();
    let floor = space.coordinate_floor();
    match space {
        Space::P | Space::T => {
            let weights = if proj.iter().all(|&x| x >= floor) {
                proj
            } else {
                let (rows, rhs) = edge_constraints(g, space);
                active_set_projection(&rows, &rhs, &DMatrix::identity(g.m(), g.m()), raw, floor, &vec![1.0; g.m()])?
            };
            EdgeValuation::new_unchecked(weights).into_space(g, space)
        }
        Space::C => {
            let vw = recover_vertex_function(g, &proj);
            let vw = if vw.iter().all(|&x| x >= floor) {
                vw
            } else {
                let deg: Vec<f64> = g.degrees().iter().map(|&d| d as f64).collect();
                let rows = DMatrix::from_row_slice(1, g.n(), &deg);
                let rhs = DVector::from_element(1, g.m() as f64);
                active_set_projection(&rows, &rhs, &lift_matrix(g), raw, floor, &vec![0.5; g.n()])?
            };
            let mut val = EdgeValuation::new_unchecked(g.lift(&vw));
            val.vertex_weights = Some(vw);
            val.into_space(g, space)
        }
    }
}

impl EdgeValuation {
    fn new_unchecked(weights: Vec<f64>) -> Self {
        EdgeValuation {
            weights,
            space: None,
            boundary: false,
            vertex_weights: None,
        }
    }
}

/// Equality constraints `A f = b` in edge coordinates for P and T.
pub(crate) fn edge_constraints(g: &Graph, space: Space) -> (DMatrix<f64>, DVector<f64>) {
    match space {
        Space::P => (
            DMatrix::from_element(1, g.m(), 1.0),
            DVector::from_element(1, g.m() as f64),
        ),
        Space::T => (
            g.incidence(),
            DVector::from_iterator(g.n(), g.degrees().iter().map(|&d| d as f64)),
        ),
        Space::C => unreachable!("C is constrained in vertex coordinates"),
    }
}

/// Minimizes `‖M x − target‖²` over `A x = b` with the coordinates in `pinned`
/// held at `floor`. Returns the minimizer and the equality multipliers.
fn pinned_least_squares(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    map: &DMatrix<f64>,
    target: &DVector<f64>,
    floor: f64,
    pinned: &[bool],
) -> Result<(Vec<f64>, DVector<f64>)> {
    let k = map.ncols();
    let free: Vec<usize> = (0..k).filter(|&i| !pinned[i]).collect();
    if free.is_empty() {
        return Err(Error::InfeasibleSpace("every coordinate pinned to the floor".into()));
    }
    let fixed_vec = DVector::from_iterator(k, (0..k).map(|i| if pinned[i] { floor } else { 0.0 }));
    let mf = map.select_columns(&free);
    let af = a.select_columns(&free);
    let r = target - map * &fixed_vec;
    let c = b - a * &fixed_vec;
    let particular = lstsq(&af, &c);
    let resid = (&af * &particular - &c).amax();
    if resid > 1e-9 * c.amax().max(1.0) {
        return Err(Error::InfeasibleSpace(
            "constraints cannot be met with the floored coordinates".into(),
        ));
    }
    let nf = free.len();
    let kernel = null_space(&af);
    let xf = if kernel.is_empty() {
        particular
    } else {
        let n = DMatrix::from_fn(nf, kernel.len(), |i, j| kernel[j][i]);
        let z = lstsq(&(&mf * &n), &(&r - &mf * &particular));
        particular + n * z
    };
    let lambda = lstsq(&af.transpose(), &(mf.transpose() * (&r - &mf * &xf)));
    let mut x = vec![floor; k];
    for (j, &i) in free.iter().enumerate() {
        x[i] = xf[j];
    }
    Ok((x, lambda))
}

/// Minimizes `‖M x − target‖²` subject to `A x = b` and `x ≥ floor`.
///
/// A feasible start comes from pinning violated coordinates until the
/// equality-constrained solution respects the floor; a primal active-set
/// method then releases pins whose multipliers have the wrong sign.
/// Minimum-norm least-squares solution, through the eigendecomposition of
/// the Gram matrix and one round of refinement.
pub(crate) fn lstsq(m: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(m.ncols());
    }
    let eig = (m.transpose() * m).symmetric_eigen();
    let top = eig.eigenvalues.amax();
    let inv = eig
        .eigenvalues
        .map(|l| if l > 1e-13 * top && top > 0.0 { 1.0 / l } else { 0.0 });
    let q = &eig.eigenvectors;
    let apply = |b: &DVector<f64>| q * inv.component_mul(&(q.transpose() * (m.transpose() * b)));
    let x = apply(rhs);
    let correction = apply(&(rhs - m * &x));
    x + correction
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub(crate) fn active_set_projection(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    map: &DMatrix<f64>,
    target: &[f64],
    floor: f64,
    interior: &[f64],
) -> Result<Vec<f64>> {
    let k = map.ncols();
    let target = DVector::from_column_slice(target);
    let mut pinned = vec![false; k];
    let mut x = None;
    for _ in 0..=k {
        let Ok((cand, _)) = pinned_least_squares(a, b, map, &target, floor, &pinned) else {
            break;
        };
        let violated: Vec<usize> = (0..k).filter(|&i| !pinned[i] && cand[i] < floor).collect();
        if violated.is_empty() {
            x = Some(cand);
            break;
        }
        for i in violated {
            pinned[i] = true;
        }
    }
    // pinning everything that went negative can overshoot; restart from a feasible point
    let mut x = x.unwrap_or_else(|| {
        pinned.iter_mut().for_each(|p| *p = false);
        interior.to_vec()
    });
    let scale = target.amax().max(1.0);
    // pins whose release led straight back to the floor; their multipliers are not unique
    let mut stuck = vec![false; k];
    let mut released = None;
    for _ in 0..20 * (k + 1) {
        let (cand, lambda) = pinned_least_squares(a, b, map, &target, floor, &pinned)?;
        let blocking = (0..k)
            .filter(|&i| !pinned[i] && cand[i] < floor && x[i] > cand[i])
            .map(|i| (((x[i] - floor) / (x[i] - cand[i])).max(0.0), i))
            .min_by(|p, q| p.0.total_cmp(&q.0));
        if let Some((alpha, i)) = blocking {
            if released == Some(i) && alpha <= 1e-14 {
                pinned[i] = true;
                stuck[i] = true;
                released = None;
                continue;
            }
            if alpha > 1e-14 {
                stuck.iter_mut().for_each(|s| *s = false);
            }
            released = None;
            for (xj, cj) in x.iter_mut().zip(&cand) {
                *xj += alpha * (cj - *xj);
            }
            x[i] = floor;
            pinned[i] = true;
            continue;
        }
        if sup_diff(&x, &cand) > 1e-14 * scale {
            stuck.iter_mut().for_each(|s| *s = false);
        }
        x = cand;
        let xv = DVector::from_column_slice(&x);
        let grad = map.transpose() * (map * &xv - &target) + a.transpose() * &lambda;
        let release = (0..k)
            .filter(|&i| pinned[i] && !stuck[i] && grad[i] < -1e-12 * scale)
            .min_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        match release {
            Some(i) => {
                pinned[i] = false;
                released = Some(i);
            }
            None => return Ok(x.iter().map(|&v| v.max(floor)).collect()),
        }
    }
    Err(Error::InfeasibleSpace("positivity repair did not settle".into()))
}
