//! Weighted Laplacian, spectrum, tree number and effective resistances.
//!
//! `Δ(f) = Σ_e f(e) Q_e` where `Q_e` is the variation matrix of edge `e`.
//! Determinants are accumulated in log space so large weights do not overflow.

use std::hash::{DefaultHasher, Hash, Hasher};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Relative eigenvalue clustering tolerance (times `‖Δ‖`).
pub const GROUP_TOL_REL: f64 = 1e-7;

/// Agreement required between the two effective-resistance routes.
pub const RESISTANCE_ROUTE_TOL: f64 = 1e-8;

pub fn laplacian(g: &Graph, f: &[f64]) -> DMatrix<f64> {
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let w = f[e];
        l[(u, u)] += w;
        l[(v, v)] += w;
        l[(u, v)] -= w;
        l[(v, u)] -= w;
    }
    l
}

pub fn adjacency(g: &Graph, f: &[f64]) -> DMatrix<f64> {
    let n = g.n();
    let mut a = DMatrix::zeros(n, n);
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        a[(u, v)] = f[e];
        a[(v, u)] = f[e];
    }
    a
}

/// `∂Δ/∂f(e)`: ones on the diagonal at the endpoints, minus ones off it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariationMatrix {
    pub edge: usize,
}

impl VariationMatrix {
    pub fn to_matrix(&self, g: &Graph) -> DMatrix<f64> {
        let (u, v) = g.edge(self.edge);
        let mut q = DMatrix::zeros(g.n(), g.n());
        q[(u, u)] = 1.0;
        q[(v, v)] = 1.0;
        q[(u, v)] = -1.0;
        q[(v, u)] = -1.0;
        q
    }

    pub fn quadratic_form(&self, g: &Graph, x: &[f64]) -> f64 {
        quadratic_form(g, self.edge, x)
    }
}

/// `xᵀ Q_e x = (x_u − x_v)²`.
pub fn quadratic_form(g: &Graph, e: usize, x: &[f64]) -> f64 {
    let (u, v) = g.edge(e);
    (x[u] - x[v]).powi(2)
}

/// Edge vector `e ↦ (x_u − x_v)²`, the gradient of `xᵀ Δ(f) x` in `f`.
pub fn edge_gradient(g: &Graph, x: &[f64]) -> Vec<f64> {
    (0..g.m()).map(|e| quadratic_form(g, e, x)).collect()
}

/// Sorted eigen-decomposition with eigenvalues clustered into eigenspaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal, `eigenvectors[i]` belongs to `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<f64>>,
    pub group_tol: f64,
    /// Half-open index ranges of eigenvalue clusters, in increasing order.
    pub groups: Vec<(usize, usize)>,
}

impl Spectrum {
    pub fn norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |s, x| s.max(x.abs()))
    }

    pub fn multiplicity(&self, group: usize) -> usize {
        let (a, b) = self.groups[group];
        b - a
    }

    pub fn group_value(&self, group: usize) -> f64 {
        let (a, b) = self.groups[group];
        self.eigenvalues[a..b].iter().sum::<f64>() / (b - a) as f64
    }

    pub fn group_basis(&self, group: usize) -> Vec<Vec<f64>> {
        let (a, b) = self.groups[group];
        self.eigenvectors[a..b].to_vec()
    }
}

/// Full symmetric eigen-decomposition of a dense matrix, ascending.
pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = m.nrows();
    let eig = m
        .clone()
        .try_symmetric_eigen(1e-15, 10_000)
        .ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let lead = v
                .iter()
                .copied()
                .enumerate()
                .fold((0, 0.0_f64), |(bi, bv), (k, x)| if x.abs() > bv + 1e-12 { (k, x.abs()) } else { (bi, bv) })
                .0;
            if v[lead] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    Ok((values, vectors))
}

fn cluster(values: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > tol {
            groups.push((start, i));
            start = i;
        }
    }
    groups
}

pub fn spectrum(g: &Graph, f: &[f64]) -> Result<Spectrum> {
    check_weights(g, f)?;
    spectrum_of(&laplacian(g, f))
}

pub(crate) fn spectrum_of(l: &DMatrix<f64>) -> Result<Spectrum> {
    let (eigenvalues, eigenvectors) = sym_eigen(l)?;
    let scale = eigenvalues.iter().fold(0.0_f64, |s, x| s.max(x.abs()));
    let group_tol = GROUP_TOL_REL * scale.max(f64::MIN_POSITIVE);
    let groups = cluster(&eigenvalues, group_tol);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        group_tol,
        groups,
    })
}

fn check_weights(g: &Graph, f: &[f64]) -> Result<()> {
    if f.len() != g.m() {
        return Err(Error::DimensionMismatch {
            expected: g.m(),
            got: f.len(),
        });
    }
    if f.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn check_positive(g: &Graph, f: &[f64]) -> Result<()> {
    check_weights(g, f)?;
    g.require_connected()?;
    if f.iter().any(|&w| w <= 0.0) {
        return Err(Error::InfeasibleSpace("weights must be strictly positive".into()));
    }
    Ok(())
}

/// Bottom nonzero eigenvalue with an orthonormal basis of its eigenspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lambda1 {
    pub value: f64,
    pub basis: Vec<Vec<f64>>,
    pub group_tol: f64,
}

impl Lambda1 {
    pub fn multiplicity(&self) -> usize {
        self.basis.len()
    }
}

pub fn lambda1(g: &Graph, f: &[f64]) -> Result<Lambda1> {
    check_positive(g, f)?;
    lambda1_from(&spectrum(g, f)?)
}

pub(crate) fn lambda1_from(s: &Spectrum) -> Result<Lambda1> {
    if s.groups.len() < 2 || s.multiplicity(0) != 1 || s.eigenvalues[1] <= s.group_tol {
        return Err(Error::Disconnected);
    }
    Ok(Lambda1 {
        value: s.eigenvalues[1],
        basis: s.group_basis(1),
        group_tol: s.group_tol,
    })
}

/// `log det` of a symmetric positive definite matrix, `None` if not SPD.
fn log_det_spd(m: DMatrix<f64>) -> Option<f64> {
    if m.nrows() == 0 {
        return Some(0.0);
    }
    let chol = m.cholesky()?;
    Some(chol.l_dirty().diagonal().iter().map(|x| 2.0 * x.ln()).sum())
}

/// `log τ` via the cofactor obtained by deleting row and column `deleted`.
pub fn log_tree_number_cofactor(g: &Graph, f: &[f64], deleted: usize) -> Result<f64> {
    check_positive(g, f)?;
    let l = laplacian(g, f);
    let reduced = l.remove_row(deleted).remove_column(deleted);
    log_det_spd(reduced).ok_or(Error::Disconnected)
}

pub fn log_tree_number(g: &Graph, f: &[f64]) -> Result<f64> {
    log_tree_number_cofactor(g, f, g.n() - 1)
}

/// Weighted spanning-tree number `Σ_T Π_{e∈T} f(e)`.
pub fn tree_number(g: &Graph, f: &[f64]) -> Result<f64> {
    Ok(log_tree_number(g, f)?.exp())
}

/// Exact spanning-tree count of the unweighted graph (fraction-free elimination).
pub fn tree_number_exact(g: &Graph) -> Result<u128> {
    g.require_connected()?;
    let n = g.n() - 1;
    if n == 0 {
        return Ok(1);
    }
    let mut a = vec![vec![0i128; n]; n];
    for &(u, v) in g.edges() {
        for (x, y) in [(u, v), (v, u)] {
            if x < n {
                a[x][x] += 1;
                if y < n {
                    a[x][y] -= 1;
                }
            }
        }
    }
    bareiss_det(a).map(|d| d.unsigned_abs())
}

fn bareiss_det(mut a: Vec<Vec<i128>>) -> Result<i128> {
    let n = a.len();
    let mut sign = 1i128;
    let mut prev = 1i128;
    let overflow = || Error::CapExceeded(usize::MAX);
    for k in 0..n {
        if a[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&r| a[r][k] != 0) else {
                return Ok(0);
            };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = a[i][j]
                    .checked_mul(a[k][k])
                    .and_then(|x| x.checked_sub(a[i][k].checked_mul(a[k][j])?))
                    .ok_or_else(overflow)?;
                a[i][j] = t / prev;
            }
        }
        prev = a[k][k];
    }
    Ok(sign * a[n - 1][n - 1])
}

/// `log det* Δ = Σ_{i≥1} log λ_i`.
pub fn log_det_star(g: &Graph, f: &[f64]) -> Result<f64> {
    check_positive(g, f)?;
    let s = spectrum(g, f)?;
    lambda1_from(&s)?;
    Ok(s.eigenvalues[1..].iter().map(|x| x.ln()).sum())
}

/// `log τ_e` for every edge, where `τ_e = ∂τ/∂f(e)` is the cofactor of `Δ`
/// with both endpoint rows and columns removed (two-forests separating the endpoints).
pub fn log_tree_derivatives(g: &Graph, f: &[f64]) -> Result<Vec<f64>> {
    check_positive(g, f)?;
    let l = laplacian(g, f);
    g.edges()
        .iter()
        .map(|&(u, v)| {
            let reduced = l.clone().remove_row(v).remove_column(v).remove_row(u).remove_column(u);
            log_det_spd(reduced).ok_or(Error::Disconnected)
        })
        .collect()
}

/// `R(e) = τ_e / τ` from cofactor determinants.
pub fn resistances_by_cofactor(g: &Graph, f: &[f64]) -> Result<Vec<f64>> {
    let log_tau = log_tree_number(g, f)?;
    Ok(log_tree_derivatives(g, f)?
        .into_iter()
        .map(|lt| (lt - log_tau).exp())
        .collect())
}

/// Moore–Penrose pseudoinverse of the Laplacian of a connected graph.
pub fn laplacian_pseudoinverse(g: &Graph, f: &[f64]) -> Result<DMatrix<f64>> {
    check_positive(g, f)?;
    let n = g.n();
    let j = DMatrix::from_element(n, n, 1.0 / n as f64);
    let shifted = laplacian(g, f) + &j;
    let inv = shifted.cholesky().ok_or(Error::Disconnected)?.inverse();
    Ok(inv - j)
}

/// `R(e) = (e_u − e_v)ᵀ Δ⁺ (e_u − e_v)`.
pub fn resistances_by_pseudoinverse(g: &Graph, f: &[f64]) -> Result<Vec<f64>> {
    let p = laplacian_pseudoinverse(g, f)?;
    Ok(g.edges()
        .iter()
        .map(|&(u, v)| p[(u, u)] + p[(v, v)] - 2.0 * p[(u, v)])
        .collect())
}

fn sampled_for_self_check(f: &[f64]) -> bool {
    if cfg!(debug_assertions) {
        return true;
    }
    let mut h = DefaultHasher::new();
    for w in f {
        w.to_bits().hash(&mut h);
    }
    h.finish() % 10 == 0
}

/// Effective resistance of every edge, `τ_e/τ = ∂ log τ / ∂f(e)`.
///
/// The pseudoinverse route is returned. In debug builds (and for a
/// deterministic tenth of inputs in release builds) the cofactor route is
/// evaluated as well and the two must agree.
pub fn effective_resistances(g: &Graph, f: &[f64]) -> Result<Vec<f64>> {
    let r = resistances_by_pseudoinverse(g, f)?;
    if sampled_for_self_check(f) {
        let r2 = resistances_by_cofactor(g, f)?;
        let worst = r
            .iter()
            .zip(&r2)
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        if worst > RESISTANCE_ROUTE_TOL {
            return Err(Error::NumericalDisagreement(format!(
                "effective resistance routes differ by {worst:.3e} (relative)"
            )));
        }
    }
    Ok(r)
}

/// Spectrum of the (weighted) adjacency matrix in decreasing order.
pub fn adjacency_spectrum(g: &Graph, f: &[f64]) -> Result<Vec<f64>> {
    check_weights(g, f)?;
    let (mut vals, _) = sym_eigen(&adjacency(g, f))?;
    vals.reverse();
    Ok(vals)
}

/// `xᵀ Δ x` for a vertex vector.
pub fn dirichlet_energy(g: &Graph, f: &[f64], x: &[f64]) -> f64 {
    g.edges()
        .iter()
        .zip(f)
        .map(|(&(u, v), w)| w * (x[u] - x[v]).powi(2))
        .sum()
}

/// `‖Δx − μx‖₂`.
pub fn eigen_residual(g: &Graph, f: &[f64], x: &[f64], mu: f64) -> f64 {
    let l = laplacian(g, f);
    let xv = DVector::from_column_slice(x);
    (&l * &xv - xv * mu).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn laplacian_examples() {
        let k2 = complete(2).unwrap();
        assert_eq!(laplacian(&k2, &[1.0]), DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let k3 = complete(3).unwrap();
        let l = laplacian(&k3, &[1.0; 3]);
        assert_eq!(l, DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0]));
        // edges (01),(02),(12) weighted 1, 2, 3
        let l = laplacian(&k3, &[1.0, 2.0, 3.0]);
        let expect = DMatrix::from_row_slice(3, 3, &[3.0, -1.0, -2.0, -1.0, 4.0, -3.0, -2.0, -3.0, 5.0]);
        assert_eq!(l, expect);
    }

    #[test]
    fn assembly_identity() {
        let g = complete(4).unwrap();
        let f = [0.3, 1.7, 0.9, 1.1, 0.6, 1.4];
        let mut sum = DMatrix::zeros(4, 4);
        for e in 0..g.m() {
            sum += VariationMatrix { edge: e }.to_matrix(&g) * f[e];
        }
        assert_eq!(sum, laplacian(&g, &f));
        let x = [0.2, -1.0, 0.5, 0.3];
        let qsum: f64 = (0..6).map(|e| f[e] * quadratic_form(&g, e, &x)).sum();
        assert!(close(qsum, dirichlet_energy(&g, &f, &x), 1e-14));
        assert_eq!(quadratic_form(&complete(2).unwrap(), 0, &[1.0, 0.0]), 1.0);
        assert_eq!(quadratic_form(&g, 0, &[1.0; 4]), 0.0);
    }

    #[test]
    fn spectra() {
        let s = spectrum(&complete(4).unwrap(), &[1.0; 6]).unwrap();
        for (a, b) in s.eigenvalues.iter().zip([0.0, 4.0, 4.0, 4.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(s.groups, vec![(0, 1), (1, 4)]);
        let s = spectrum(&cycle(4).unwrap(), &[1.0; 4]).unwrap();
        for (a, b) in s.eigenvalues.iter().zip([0.0, 2.0, 2.0, 4.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn regular_adjacency_relation() {
        let g = petersen().unwrap();
        let f = vec![1.0; g.m()];
        let lap = spectrum(&g, &f).unwrap().eigenvalues;
        let adj = adjacency_spectrum(&g, &f).unwrap();
        for j in 0..g.n() {
            assert!((lap[j] - (3.0 - adj[j])).abs() < 1e-10);
        }
    }

    #[test]
    fn lambda1_examples() {
        let l = lambda1(&complete(4).unwrap(), &[1.0; 6]).unwrap();
        assert!((l.value - 4.0).abs() < 1e-12 && l.multiplicity() == 3);
        let l = lambda1(&hypercube(3).unwrap(), &[1.0; 12]).unwrap();
        assert!((l.value - 2.0).abs() < 1e-12 && l.multiplicity() == 3);
        let l = lambda1(&petersen().unwrap(), &[1.0; 15]).unwrap();
        assert!((l.value - 2.0).abs() < 1e-12 && l.multiplicity() == 5);
    }

    #[test]
    fn tree_numbers() {
        let k3 = complete(3).unwrap();
        assert!(close(tree_number(&k3, &[1.0; 3]).unwrap(), 3.0, 1e-12));
        assert!(close(tree_number(&k3, &[1.0, 2.0, 3.0]).unwrap(), 11.0, 1e-12));
        let q3 = hypercube(3).unwrap();
        assert!(close(tree_number(&q3, &[1.0; 12]).unwrap(), 384.0, 1e-12));
        assert_eq!(tree_number_exact(&q3).unwrap(), 384);
        assert_eq!(tree_number_exact(&petersen().unwrap()).unwrap(), 2000);
        assert_eq!(tree_number_exact(&moebius_wheel().unwrap()).unwrap(), 392);
        let f = [0.5, 2.0, 1.5, 0.25, 3.0, 0.75];
        let k4 = complete(4).unwrap();
        let base = log_tree_number_cofactor(&k4, &f, 0).unwrap();
        for d in 1..4 {
            assert!(close(log_tree_number_cofactor(&k4, &f, d).unwrap().exp(), base.exp(), 1e-10));
        }
    }

    #[test]
    fn huge_weights_stay_finite_in_log_space() {
        let g = complete(5).unwrap();
        let f = vec![1e80; g.m()];
        let lt = log_tree_number(&g, &f).unwrap();
        // τ(K5) = 125, each tree has 4 edges
        assert!(close(lt, 125f64.ln() + 4.0 * 1e80f64.ln(), 1e-12));
    }

    #[test]
    fn log_det_star_examples() {
        let k3 = complete(3).unwrap();
        assert!(close(log_det_star(&k3, &[1.0; 3]).unwrap(), 9f64.ln(), 1e-12));
        assert!(close(log_det_star(&complete(4).unwrap(), &[1.0; 6]).unwrap(), 64f64.ln(), 1e-12));
        assert!(close(log_det_star(&k3, &[1.0, 2.0, 3.0]).unwrap(), 33f64.ln(), 1e-12));
    }

    #[test]
    fn resistances() {
        let r = effective_resistances(&complete(4).unwrap(), &[1.0; 6]).unwrap();
        assert!(r.iter().all(|x| (x - 0.5).abs() < 1e-12));
        for n in 3..9 {
            let r = effective_resistances(&cycle(n).unwrap(), &vec![1.0; n]).unwrap();
            let expect = (n - 1) as f64 / n as f64;
            assert!(r.iter().all(|x| (x - expect).abs() < 1e-12));
        }
        // triangle (01),(02),(12) = 1,2,3: τ_e = (5, 4, 3), τ = 11
        let r = resistances_by_cofactor(&complete(3).unwrap(), &[1.0, 2.0, 3.0]).unwrap();
        for (a, b) in r.iter().zip([5.0 / 11.0, 4.0 / 11.0, 3.0 / 11.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let r = effective_resistances(&complete(2).unwrap(), &[2.0]).unwrap();
        assert!((r[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn disconnected_errors() {
        let g = Graph::new(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(tree_number(&g, &[1.0; 2]), Err(Error::Disconnected));
        assert_eq!(lambda1(&g, &[1.0; 2]), Err(Error::Disconnected));
        assert_eq!(tree_number_exact(&g), Err(Error::Disconnected));
    }
}
