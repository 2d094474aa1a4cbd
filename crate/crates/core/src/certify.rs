//! Extremality certificates.
//!
//! Each certificate decides the first-order optimality condition of a concave
//! objective at an interior point of a deformation space: the objective's
//! supergradient set must meet the normal space of the space. When it does
//! not, the certificate carries an improving tangent direction that has been
//! checked by direct evaluation.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::graph::{dot, lstsq, norm, EdgeValuation, Graph, Space};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::metric::{self, SYSTOLE_TOL};
use crate::spectral::{self, sym_eigen};
use crate::DELTA_STRICT;

/// Residual threshold for declaring a point maximal.
pub const CERT_TOL: f64 = 1e-7;
/// Step sizes tried, largest first, when verifying a witness.
pub const WITNESS_STEPS: [f64; 7] = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Girth,
    Lambda1,
    Logdet,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Girth, Objective::Lambda1, Objective::Logdet];

    /// Value at a valuation, `None` outside the domain.
    pub fn evaluate(self, g: &Graph, f: &[f64]) -> Option<f64> {
        if f.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return None;
        }
        match self {
            Objective::Girth => metric::girth(g, f).ok(),
            Objective::Lambda1 => spectral::lambda1(g, f).ok().map(|l| l.value),
            Objective::Logdet => spectral::log_tree_number(g, f).ok(),
        }
    }

    fn kind_prefix(self) -> &'static str {
        match self {
            Objective::Girth => "girth",
            Objective::Lambda1 => "lambda1",
            Objective::Logdet => "tau",
        }
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Objective::Girth => "girth",
            Objective::Lambda1 => "lambda1",
            Objective::Logdet => "logdet",
        })
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "girth" => Ok(Objective::Girth),
            "lambda1" => Ok(Objective::Lambda1),
            "logdet" | "tau" => Ok(Objective::Logdet),
            other => Err(Error::Parse(format!("unknown objective `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Maximal,
    NotMaximal,
    Inconclusive,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Maximal => "maximal",
            Status::NotMaximal => "not_maximal",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// An improving tangent direction, checked by evaluating the objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Unit edge-space direction tangent to the deformation space.
    pub direction: Vec<f64>,
    /// First-order rate of increase along `direction`.
    pub predicted_rate: f64,
    /// Largest tried step at which the objective strictly increased.
    pub step: f64,
    pub observed_increase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: String,
    pub objective: Objective,
    pub space: Space,
    pub status: Status,
    /// Cone multipliers (girth), eigenvalues of the operator (λ₁) or Lagrange
    /// constants (τ).
    pub multipliers: Vec<f64>,
    /// Violation of the optimality condition. For a failed cone test it is the
    /// separation margin of the witness instead.
    pub residual: f64,
    pub unique: Option<bool>,
    /// Whether all multipliers could be taken `≥ δ_strict` (girth), or the
    /// operator positive definite (λ₁).
    pub open_cone: Option<bool>,
    pub witness: Option<Witness>,
    /// λ₁ operator in the eigenspace basis `eigenbasis`.
    pub operator: Option<Vec<Vec<f64>>>,
    pub eigenbasis: Option<Vec<Vec<f64>>>,
    pub eigenspace_dim: Option<usize>,
    pub diagnostics: BTreeMap<String, serde_json::Value>,
    pub note: Option<String>,
}

impl Certificate {
    fn blank(objective: Objective, space: Space) -> Self {
        Certificate {
            kind: format!("{}-{}", objective.kind_prefix(), space),
            objective,
            space,
            status: Status::Inconclusive,
            multipliers: Vec::new(),
            residual: 0.0,
            unique: None,
            open_cone: None,
            witness: None,
            operator: None,
            eigenbasis: None,
            eigenspace_dim: None,
            diagnostics: BTreeMap::new(),
            note: None,
        }
    }

    fn boundary(objective: Objective, space: Space) -> Self {
        let mut c = Self::blank(objective, space);
        c.note = Some("valuation touches the floor; the interior condition does not apply".into());
        c
    }

    /// One-line verdict.
    pub fn summary(&self) -> String {
        let mut s = format!("{}: {} (residual {:.3e})", self.kind, self.status, self.residual);
        if let Some(w) = &self.witness {
            s.push_str(&format!(", witness gains {:.3e} at step {:.0e}", w.observed_increase, w.step));
        }
        s
    }
}

/// Outcome of a cone membership test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeTest {
    /// `target + Σ a_j u_j` (or, with no target, some `Σ a_j u_j`) lies in the closed cone.
    pub inside: bool,
    /// Membership holds with every multiplier at least `δ_strict`.
    pub open: bool,
    pub multipliers: Vec<f64>,
    pub combination: Vec<f64>,
    pub min_multiplier: f64,
    pub residual: f64,
    /// Farkas alternative: `⟨w, v_i⟩ ≥ 0`, `⟨w, u_j⟩ = 0` and `⟨w, target⟩ < 0`
    /// (or, with no target, `⟨w, v_i⟩ > 0` for all `i`).
    pub separator: Option<Vec<f64>>,
    pub separation: f64,
}

/// Decides whether `target` (or, when absent, some combination of the `us`)
/// is `Σ μ_i v_i` with `μ ≥ 0` modulo the span of the `us`.
///
/// With a target the multipliers are absolute; without one they are
/// normalized to `Σ μ = 1`. Multipliers returned maximize `min μ_i`.
pub fn farkas_cone(vs: &[Vec<f64>], us: &[Vec<f64>], target: Option<&[f64]>) -> Result<ConeTest> {
    let dim = vs
        .first()
        .or(us.first())
        .map(|v| v.len())
        .or(target.map(|t| t.len()))
        .ok_or_else(|| Error::InvariantViolation("cone test without vectors".into()))?;
    for v in vs.iter().chain(us) {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
        }
    }
    let (k, p) = (vs.len(), us.len());
    let nv = k + 2 * p + 1;
    let t_idx = k + 2 * p;
    let mut lp = LinearProgram::new(nv);
    let mut obj = vec![0.0; nv];
    obj[t_idx] = 1.0;
    lp.maximize(obj);
    for r in 0..dim {
        let mut row = vec![0.0; nv];
        for (i, v) in vs.iter().enumerate() {
            row[i] = v[r];
        }
        for (j, u) in us.iter().enumerate() {
            row[k + j] = -u[r];
            row[k + p + j] = u[r];
        }
        lp.add(row, Relation::Eq, target.map_or(0.0, |t| t[r]));
    }
    if target.is_none() {
        let terms: Vec<(usize, f64)> = (0..k).map(|i| (i, 1.0)).collect();
        lp.add_sparse(&terms, Relation::Eq, 1.0);
    }
    for i in 0..k {
        lp.add_sparse(&[(i, 1.0), (t_idx, -1.0)], Relation::Ge, 0.0);
    }
    lp.add_sparse(&[(t_idx, 1.0)], Relation::Le, 1.0);

    if let LpOutcome::Optimal(sol) = lp.solve()? {
        let mu = sol.x[..k].to_vec();
        let a: Vec<f64> = (0..p).map(|j| sol.x[k + j] - sol.x[k + p + j]).collect();
        let mut resid = 0.0_f64;
        for r in 0..dim {
            let lhs: f64 = vs.iter().zip(&mu).map(|(v, m)| v[r] * m).sum::<f64>()
                - us.iter().zip(&a).map(|(u, c)| u[r] * c).sum::<f64>();
            resid = resid.max((lhs - target.map_or(0.0, |t| t[r])).abs());
        }
        let min_mu = mu.iter().copied().fold(f64::INFINITY, f64::min);
        if resid <= CERT_TOL {
            return Ok(ConeTest {
                inside: true,
                open: min_mu >= DELTA_STRICT,
                multipliers: mu,
                combination: a,
                min_multiplier: min_mu,
                residual: resid,
                separator: None,
                separation: 0.0,
            });
        }
    }

    // Farkas alternative, with w = w⁺ − w⁻ in the unit box.
    let nw = 2 * dim + 1;
    let s_idx = 2 * dim;
    let mut lp = LinearProgram::new(nw);
    let mut obj = vec![0.0; nw];
    match target {
        Some(t) => {
            for r in 0..dim {
                obj[r] = -t[r];
                obj[dim + r] = t[r];
            }
        }
        None => obj[s_idx] = 1.0,
    }
    lp.maximize(obj);
    for v in vs {
        let mut row = vec![0.0; nw];
        for r in 0..dim {
            row[r] = v[r];
            row[dim + r] = -v[r];
        }
        if target.is_none() {
            row[s_idx] = -1.0;
        }
        lp.add(row, Relation::Ge, 0.0);
    }
    for u in us {
        let mut row = vec![0.0; nw];
        for r in 0..dim {
            row[r] = u[r];
            row[dim + r] = -u[r];
        }
        lp.add(row, Relation::Eq, 0.0);
    }
    for r in 0..2 * dim {
        lp.add_sparse(&[(r, 1.0)], Relation::Le, 1.0);
    }
    lp.add_sparse(&[(s_idx, 1.0)], Relation::Le, 1.0);
    let sol = lp.solve()?.optimal()?;
    let w: Vec<f64> = (0..dim).map(|r| sol.x[r] - sol.x[dim + r]).collect();
    let separation = sol.objective;
    Ok(ConeTest {
        inside: false,
        open: false,
        multipliers: Vec::new(),
        combination: Vec::new(),
        min_multiplier: 0.0,
        residual: separation,
        separator: (separation > 1e-12).then_some(w),
        separation,
    })
}

fn numeric_rank(vectors: &[Vec<f64>], dim: usize) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(vectors.len(), dim, |i, j| vectors[i][j]);
    let sv = m.singular_values();
    let top = sv.iter().fold(0.0_f64, |a, &b| a.max(b));
    sv.iter().filter(|&&s| s > 1e-9 * top.max(1e-300)).count()
}

fn checked_valuation(g: &Graph, f: &[f64], space: Space) -> Result<EdgeValuation> {
    EdgeValuation::new(g, f.to_vec())?.into_space(g, space)
}

/// Tries the steps in [`WITNESS_STEPS`] and returns the first that increases the objective.
pub fn verify_direction(objective: Objective, g: &Graph, f: &[f64], h: &[f64]) -> Option<(f64, f64)> {
    let base = objective.evaluate(g, f)?;
    let margin = 1e-12 * base.abs().max(1.0);
    WITNESS_STEPS.iter().find_map(|&t| {
        let moved: Vec<f64> = f.iter().zip(h).map(|(a, b)| a + t * b).collect();
        let v = objective.evaluate(g, &moved)?;
        (v - base > margin).then_some((t, v - base))
    })
}

fn attach_witness(cert: &mut Certificate, g: &Graph, f: &[f64], h: Vec<f64>, rate: f64) {
    let nh = norm(&h);
    if nh <= 1e-300 {
        cert.status = Status::Inconclusive;
        cert.note = Some("improving direction vanished numerically".into());
        return;
    }
    let h: Vec<f64> = h.iter().map(|x| x / nh).collect();
    match verify_direction(cert.objective, g, f, &h) {
        Some((step, gain)) => {
            cert.status = Status::NotMaximal;
            cert.witness = Some(Witness {
                direction: h,
                predicted_rate: rate / nh,
                step,
                observed_increase: gain,
            });
        }
        None => {
            cert.status = Status::Inconclusive;
            cert.note = Some("candidate direction did not increase the objective at any tried step".into());
        }
    }
}

/// Girth extremality via the systole cone.
///
/// P: `𝟙` in the cone of edge systoles. T: some combination of vertex star
/// vectors in that cone. C: the degree vector in the cone of vertex systoles.
pub fn certify_girth(g: &Graph, f: &[f64], space: Space) -> Result<Certificate> {
    let val = checked_valuation(g, f, space)?;
    let sys = metric::systoles(g, f, SYSTOLE_TOL)?;
    if val.boundary {
        return Ok(Certificate::boundary(Objective::Girth, space));
    }
    let mut cert = Certificate::blank(Objective::Girth, space);
    let (m, n) = (g.m(), g.n());
    let ones = vec![1.0; m];
    let deg: Vec<f64> = g.degrees().iter().map(|&d| d as f64).collect();
    let stars: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            let mut w = vec![0.0; m];
            for &(_, e) in g.neighbors(v) {
                w[e] = 1.0;
            }
            w
        })
        .collect();
    let edge_sys = sys.edge_vectors();
    let vertex_sys = sys.vertex_vectors();
    let test = match space {
        Space::P => farkas_cone(&edge_sys, &[], Some(&ones))?,
        Space::T => farkas_cone(&edge_sys, &stars, None)?,
        Space::C => farkas_cone(&vertex_sys, &[], Some(&deg))?,
    };
    let mut spanning = match space {
        Space::P => edge_sys.clone(),
        Space::T => edge_sys.iter().chain(&stars).cloned().collect(),
        Space::C => vertex_sys.clone(),
    };
    let ambient = match space {
        Space::C => {
            spanning.push(deg.clone());
            // lift kernel directions do not move f
            if let Some(side) = g.bipartition() {
                spanning.push(side.iter().map(|&s| if s { 1.0 } else { -1.0 }).collect());
            }
            n
        }
        Space::P => {
            spanning.push(ones.clone());
            m
        }
        Space::T => m,
    };
    cert.unique = Some(numeric_rank(&spanning, ambient) == ambient);
    cert.diagnostics.insert("girth".into(), json!(sys.girth));
    cert.diagnostics.insert("systoles".into(), json!(sys.cycles));
    cert.residual = test.residual;
    if test.inside {
        cert.status = Status::Maximal;
        cert.multipliers = test.multipliers;
        cert.open_cone = Some(test.open);
        if !test.combination.is_empty() {
            cert.diagnostics.insert("vertex_combination".into(), json!(test.combination));
        }
        return Ok(cert);
    }
    cert.open_cone = Some(false);
    let Some(w) = test.separator else {
        cert.note = Some("cone test failed but no separating direction was found".into());
        return Ok(cert);
    };
    let h = match space {
        Space::P => {
            let s = w.iter().sum::<f64>() / m as f64;
            w.iter().map(|x| x - s).collect()
        }
        Space::T => w,
        Space::C => {
            let c = dot(&w, &deg) / dot(&deg, &deg);
            let dg: Vec<f64> = w.iter().zip(&deg).map(|(x, d)| x - c * d).collect();
            g.lift(&dg)
        }
    };
    let rate = edge_sys.iter().map(|s| dot(s, &h)).fold(f64::INFINITY, f64::min);
    attach_witness(&mut cert, g, f, h, rate);
    Ok(cert)
}

/// Tree-number extremality from the effective resistances.
///
/// P: all `R(e)` equal. T: `R(e) = λ_u + λ_v` for vertex constants. C:
/// `Σ_{e∋v} R(e) / deg v` independent of `v`.
pub fn certify_tree_number(g: &Graph, f: &[f64], space: Space) -> Result<Certificate> {
    let val = checked_valuation(g, f, space)?;
    let r = spectral::effective_resistances(g, f)?;
    if val.boundary {
        return Ok(Certificate::boundary(Objective::Logdet, space));
    }
    let mut cert = Certificate::blank(Objective::Logdet, space);
    let (max, min) = r
        .iter()
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(a, b), &x| (a.max(x), b.min(x)));
    cert.diagnostics.insert("resistances".into(), json!(r));
    cert.diagnostics.insert("resistance_spread".into(), json!(max - min));
    let (resid, h) = match space {
        Space::P => {
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            cert.multipliers = vec![mean];
            (max - min, r.iter().map(|x| x - mean).collect::<Vec<f64>>())
        }
        Space::T => {
            let bt = g.incidence().transpose();
            let lam = lstsq(&bt, &DVector::from_column_slice(&r));
            let fit = &bt * &lam;
            let res: Vec<f64> = r.iter().zip(fit.iter()).map(|(a, b)| a - b).collect();
            cert.multipliers = lam.iter().copied().collect();
            (res.iter().fold(0.0_f64, |a, x| a.max(x.abs())), res)
        }
        Space::C => {
            let deg: Vec<f64> = g.degrees().iter().map(|&d| d as f64).collect();
            let psi = g.vertex_sums(&r);
            let ratio: Vec<f64> = psi.iter().zip(&deg).map(|(p, d)| p / d).collect();
            let (hi, lo) = ratio
                .iter()
                .fold((f64::NEG_INFINITY, f64::INFINITY), |(a, b), &x| (a.max(x), b.min(x)));
            let mean = ratio.iter().sum::<f64>() / ratio.len() as f64;
            cert.multipliers = vec![mean];
            cert.diagnostics.insert("vertex_ratio".into(), json!(ratio));
            let dtv = unweighted_tree_degrees(g)?;
            let dtv_ratio: Vec<f64> = dtv.iter().zip(&deg).map(|(a, d)| a / d).collect();
            let spread = dtv_ratio.iter().fold(f64::NEG_INFINITY, |a, &x| a.max(x))
                - dtv_ratio.iter().fold(f64::INFINITY, |a, &x| a.min(x));
            cert.diagnostics.insert(
                "dtv_ratio_uniform".into(),
                json!(spread <= CERT_TOL * dtv_ratio[0].abs().max(1.0)),
            );
            let c = dot(&psi, &deg) / dot(&deg, &deg);
            let dg: Vec<f64> = psi.iter().zip(&deg).map(|(p, d)| p - c * d).collect();
            ((hi - lo) / mean.abs().max(f64::MIN_POSITIVE), g.lift(&dg))
        }
    };
    cert.residual = resid;
    if resid <= CERT_TOL {
        cert.status = Status::Maximal;
        return Ok(cert);
    }
    let rate = dot(&r, &h);
    attach_witness(&mut cert, g, f, h, rate);
    Ok(cert)
}

/// Expected degree of each vertex in a uniformly random spanning tree.
fn unweighted_tree_degrees(g: &Graph) -> Result<Vec<f64>> {
    let r = spectral::effective_resistances(g, &vec![1.0; g.m()])?;
    Ok(g.vertex_sums(&r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquiarborealReport {
    pub tree_number: u128,
    /// Spanning trees through each edge.
    pub trees_through_edge: Vec<u128>,
    pub all_equal: bool,
    /// Every count equals `τ(n−1)/m`.
    pub matches_formula: bool,
    /// `m` divides `(n−1)τ`.
    pub divisible: bool,
    pub equiarboreal: bool,
}

/// Exact per-edge spanning-tree counts of the unweighted graph.
pub fn equiarboreal_check(g: &Graph) -> Result<EquiarborealReport> {
    let tau = spectral::tree_number_exact(g)?;
    let mut through = Vec::with_capacity(g.m());
    for e in 0..g.m() {
        let rest: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != e)
            .map(|(_, &p)| p)
            .collect();
        let without = match Graph::new(g.n(), &rest) {
            Ok(h) if h.is_connected() => spectral::tree_number_exact(&h)?,
            _ => 0,
        };
        through.push(tau - without);
    }
    let (n, m) = (g.n() as u128, g.m() as u128);
    let total = (n - 1) * tau;
    let divisible = total % m == 0;
    let all_equal = through.windows(2).all(|w| w[0] == w[1]);
    let matches_formula = divisible && through.iter().all(|&t| t == total / m);
    Ok(EquiarborealReport {
        tree_number: tau,
        trees_through_edge: through,
        all_equal,
        matches_formula,
        divisible,
        equiarboreal: all_equal,
    })
}

/// Edge differentials `z_e = (v_i(u) − v_i(w))_i` for edges `e = (u, w)`, `u < w`.
pub fn eigen_edge_embedding(g: &Graph, basis: &[Vec<f64>]) -> Vec<Vec<f64>> {
    g.edges()
        .iter()
        .map(|&(u, w)| basis.iter().map(|v| v[u] - v[w]).collect())
        .collect()
}

/// `Σ c_i z_i(e)²` for every edge.
pub fn ellipsoid_values(embedding: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    embedding
        .iter()
        .map(|z| z.iter().zip(coeffs).map(|(x, c)| c * x * x).sum())
        .collect()
}

/// `M_j = Σ_e h_j(e) z_e z_eᵀ` for each tangent direction `h_j` in edge space.
pub(crate) fn restricted_variations(z: &[Vec<f64>], dirs: &[Vec<f64>]) -> Vec<DMatrix<f64>> {
    let d = z.first().map_or(0, |v| v.len());
    dirs.iter()
        .map(|h| {
            let mut m = DMatrix::zeros(d, d);
            for (ze, he) in z.iter().zip(h) {
                if *he == 0.0 {
                    continue;
                }
                for a in 0..d {
                    for b in 0..d {
                        m[(a, b)] += he * ze[a] * ze[b];
                    }
                }
            }
            m
        })
        .collect()
}

fn pair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

/// `A(Λ)_j = ⟨Λ, M_j⟩`.
pub(crate) fn operator_residual(ms: &[DMatrix<f64>], lam: &DMatrix<f64>) -> Vec<f64> {
    ms.iter().map(|m| pair(m, lam)).collect()
}

fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, x) in s.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn project_spectraplex(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let (vals, vecs) = sym_eigen(&sym).expect("small symmetric eigenproblem");
    let p = project_simplex(&vals);
    rebuild(&p, &vecs)
}

fn rebuild(vals: &[f64], vecs: &[Vec<f64>]) -> DMatrix<f64> {
    let d = vecs.first().map_or(0, |v| v.len());
    let mut out = DMatrix::zeros(d, d);
    for (l, v) in vals.iter().zip(vecs) {
        let col = DVector::from_column_slice(v);
        out += &col * col.transpose() * *l;
    }
    out
}

/// Minimizes `‖A(Λ)‖` over the spectraplex `{Λ ⪰ 0, tr Λ = 1}`.
///
/// Accelerated projected gradient, then an exact least-squares solve on the
/// face spanned by the dominant eigenvectors.
pub(crate) fn min_norm_operator(ms: &[DMatrix<f64>], d: usize) -> DMatrix<f64> {
    min_norm_operator_within(ms, d, None)
}

fn combination(ms: &[DMatrix<f64>], coeffs: &[f64], d: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(d, d);
    for (c, m) in coeffs.iter().zip(ms) {
        out += m * *c;
    }
    out
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigen(&((m + m.transpose()) * 0.5)).map_or(f64::NAN, |(v, _)| v[0])
}

/// As [`min_norm_operator`]; with `decide = Some(th)` the solve stops as soon
/// as the duality bound settles whether the minimum norm is below `th`.
pub(crate) fn min_norm_operator_within(ms: &[DMatrix<f64>], d: usize, decide: Option<f64>) -> DMatrix<f64> {
    let iters = 3000;
    let id = DMatrix::<f64>::identity(d, d) / d as f64;
    if ms.is_empty() || d == 1 {
        return id;
    }
    let cost = |l: &DMatrix<f64>| operator_residual(ms, l).iter().map(|x| x * x).sum::<f64>();
    let lip = 2.0 * ms.iter().map(|m| m.norm_squared()).sum::<f64>();
    if lip <= 0.0 {
        return id;
    }
    let mut x = id.clone();
    let mut y = id.clone();
    let mut t = 1.0_f64;
    for it in 0..iters {
        let a = operator_residual(ms, &y);
        let mut grad = DMatrix::zeros(d, d);
        for (aj, m) in a.iter().zip(ms) {
            grad += m * (2.0 * aj);
        }
        let next = project_spectraplex(&(&y - grad / lip));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = &next + (&next - &x) * ((t - 1.0) / t_next);
        let moved = (&next - &x).norm();
        x = next;
        t = t_next;
        if moved < 1e-15 {
            break;
        }
        if it % 10 == 9 {
            // 2 λ_min(M(a)) − ‖a‖² bounds the squared minimum norm from below.
            let a = operator_residual(ms, &x);
            let n2: f64 = a.iter().map(|v| v * v).sum();
            let lower = 2.0 * min_eigenvalue(&combination(ms, &a, d)) - n2;
            if n2 - lower <= 1e-10 * n2 + 1e-28 {
                break;
            }
            if let Some(th) = decide {
                if n2 <= th * th || lower > th * th {
                    return x;
                }
            }
            if it % 50 == 49 {
                if let Some(cand) = face_polish(ms, &x) {
                    let c = cost(&cand);
                    if c <= 1e-28 || decide.is_some_and(|th| c <= th * th) {
                        return cand;
                    }
                }
            }
        }
    }
    match face_polish(ms, &x) {
        Some(cand) if cost(&cand) < cost(&x) => cand,
        _ => x,
    }
}

/// Exact least squares on the face of the iterate's dominant eigenvectors,
/// then on the whole spectraplex affine hull; the better admissible one.
fn face_polish(ms: &[DMatrix<f64>], x: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let d = x.nrows();
    let cost = |l: &DMatrix<f64>| operator_residual(ms, l).iter().map(|v| v * v).sum::<f64>();
    let (vals, vecs) = sym_eigen(x).ok()?;
    let top = vals.iter().fold(0.0_f64, |a, &b| a.max(b));
    let rank = vals.iter().filter(|&&v| v > 1e-6 * top).count();
    let mut best: Option<(DMatrix<f64>, f64)> = None;
    for r in [rank, d] {
        if let Some(cand) = face_least_squares(ms, &vecs[d - r..]) {
            let c = cost(&cand);
            if best.as_ref().map_or(true, |(_, bc)| c < *bc) {
                best = Some((cand, c));
            }
        }
    }
    best.map(|(m, _)| m)
}

/// Minimizes `⟨Λ, D⟩ + t/2 ‖A(Λ)‖²` over the spectraplex, the dual of the
/// proximal model `max_h λ_min(D + Σ h_j M_j) − ‖h‖²/2t`.
pub(crate) fn prox_operator(ms: &[DMatrix<f64>], gaps: &[f64], t: f64) -> DMatrix<f64> {
    let iters = 5000;
    let d = gaps.len();
    let dm = DMatrix::from_diagonal(&DVector::from_column_slice(gaps));
    let lip = t * ms.iter().map(|m| m.norm_squared()).sum::<f64>();
    if d == 1 || lip <= 0.0 {
        let mut e = DMatrix::zeros(d, d);
        e[(0, 0)] = 1.0;
        return e;
    }
    let mut start = DMatrix::zeros(d, d);
    start[(0, 0)] = 1.0;
    let mut x = start.clone();
    let mut y = start;
    let mut k = 1.0_f64;
    for it in 0..iters {
        let a = operator_residual(ms, &y);
        let mut grad = dm.clone();
        for (aj, m) in a.iter().zip(ms) {
            grad += m * (t * aj);
        }
        let next = project_spectraplex(&(&y - grad / lip));
        let k_next = (1.0 + (1.0 + 4.0 * k * k).sqrt()) / 2.0;
        y = &next + (&next - &x) * ((k - 1.0) / k_next);
        let moved = (&next - &x).norm();
        x = next;
        k = k_next;
        if moved < 1e-15 {
            break;
        }
        if it % 10 == 9 {
            let a = operator_residual(ms, &x);
            let n2: f64 = a.iter().map(|v| v * v).sum();
            let dual = pair(&dm, &x) + 0.5 * t * n2;
            let h: Vec<f64> = a.iter().map(|v| v * t).collect();
            let primal = min_eigenvalue(&(&dm + combination(ms, &h, d))) - 0.5 * t * n2;
            if dual - primal <= 1e-3 * dual.abs() + 1e-15 {
                break;
            }
        }
    }
    x
}

/// Least-squares `Λ = U S Uᵀ`, `tr S = 1`, kept only if `S ⪰ 0`.
fn face_least_squares(ms: &[DMatrix<f64>], face: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let r = face.len();
    if r == 0 {
        return None;
    }
    let d = face[0].len();
    let u = DMatrix::from_fn(d, r, |i, j| face[j][i]);
    let mut sym_basis = Vec::new();
    for k in 0..r {
        for l in k..r {
            let mut e = DMatrix::zeros(r, r);
            if k == l {
                e[(k, k)] = 1.0;
            } else {
                e[(k, l)] = std::f64::consts::FRAC_1_SQRT_2;
                e[(l, k)] = std::f64::consts::FRAC_1_SQRT_2;
            }
            sym_basis.push(e);
        }
    }
    let p = sym_basis.len();
    let lifted: Vec<DMatrix<f64>> = sym_basis.iter().map(|e| &u * e * u.transpose()).collect();
    let a = DMatrix::from_fn(ms.len(), p, |j, k| pair(&ms[j], &lifted[k]));
    let trace = DVector::from_iterator(p, sym_basis.iter().map(|e| e.trace()));
    let mut kkt = DMatrix::zeros(p + 1, p + 1);
    kkt.view_mut((0, 0), (p, p)).copy_from(&(a.transpose() * &a));
    kkt.view_mut((0, p), (p, 1)).copy_from(&trace);
    kkt.view_mut((p, 0), (1, p)).copy_from(&trace.transpose());
    let mut rhs = DVector::zeros(p + 1);
    rhs[p] = 1.0;
    let sol = lstsq(&kkt, &rhs);
    let mut s = DMatrix::zeros(r, r);
    for (k, e) in sym_basis.iter().enumerate() {
        s += e * sol[k];
    }
    let (vals, _) = sym_eigen(&s).ok()?;
    if vals[0] < -1e-12 {
        return None;
    }
    Some(&u * s * u.transpose())
}

/// `λ₁` extremality via a positive operator on the bottom eigenspace.
///
/// With `E` the `λ₁`-eigenspace (multiplicity by the spectral group
/// tolerance) and `z_e` the edge differentials of an orthonormal basis of `E`,
/// the valuation is maximal iff some `Λ ⪰ 0`, `tr Λ = 1`, makes the edge
/// vector `e ↦ z_eᵀ Λ z_e` normal to the deformation space. The closest such
/// vector to normality, projected to the tangent space, is the steepest
/// ascent direction when the condition fails.
pub fn certify_lambda1(g: &Graph, f: &[f64], space: Space) -> Result<Certificate> {
    let val = checked_valuation(g, f, space)?;
    let l1 = spectral::lambda1(g, f)?;
    if val.boundary {
        return Ok(Certificate::boundary(Objective::Lambda1, space));
    }
    let chart = Chart::new(g, space)?;
    let mut cert = Certificate::blank(Objective::Lambda1, space);
    let d = l1.multiplicity();
    let z = eigen_edge_embedding(g, &l1.basis);
    let ms = restricted_variations(&z, &chart.edge_dirs);
    let mut lam = min_norm_operator(&ms, d);
    let mut a = operator_residual(&ms, &lam);
    let id = DMatrix::<f64>::identity(d, d) / d as f64;
    let a_id = operator_residual(&ms, &id);
    if norm(&a_id) <= CERT_TOL {
        lam = id;
        a = a_id;
    }
    let resid = norm(&a);
    cert.residual = resid;
    cert.eigenspace_dim = Some(d);
    cert.eigenbasis = Some(l1.basis.clone());
    cert.diagnostics.insert("lambda1".into(), json!(l1.value));
    if d == 1 {
        insert_rank_one_diagnostics(&mut cert, g, l1.value, &l1.basis[0], &z);
    }
    if resid <= CERT_TOL {
        let (vals, vecs) = sym_eigen(&lam)?;
        cert.status = Status::Maximal;
        cert.open_cone = Some(vals[0] >= DELTA_STRICT * lam.trace());
        cert.operator = Some((0..d).map(|i| lam.row(i).iter().copied().collect()).collect());
        // diagonalize Λ: coefficients c_i on the rotated eigenbasis
        let rotated: Vec<Vec<f64>> = vecs
            .iter()
            .map(|c| {
                let mut v = vec![0.0; g.n()];
                for (ci, bi) in c.iter().zip(&l1.basis) {
                    for (vi, bx) in v.iter_mut().zip(bi) {
                        *vi += ci * bx;
                    }
                }
                v
            })
            .collect();
        let emb = eigen_edge_embedding(g, &rotated);
        let phi = ellipsoid_values(&emb, &vals);
        cert.diagnostics.insert("edge_pairing".into(), json!(phi));
        cert.diagnostics.insert("operator_basis".into(), json!(rotated));
        cert.multipliers = vals;
        return Ok(cert);
    }
    let coeffs = a.clone();
    let h = chart.combine(&chart.edge_dirs, &coeffs);
    let nh = norm(&h);
    let rate = if nh > 0.0 {
        let unit: Vec<f64> = h.iter().map(|x| x / nh).collect();
        let m = restricted_variations(&z, &[unit]).remove(0);
        sym_eigen(&m)?.0[0] * nh
    } else {
        0.0
    };
    cert.operator = Some((0..d).map(|i| lam.row(i).iter().copied().collect()).collect());
    attach_witness(&mut cert, g, f, h, rate);
    Ok(cert)
}

fn spread_ok(values: &[f64]) -> bool {
    let hi = values.iter().fold(f64::NEG_INFINITY, |a, &x| a.max(x));
    let lo = values.iter().fold(f64::INFINITY, |a, &x| a.min(x));
    hi - lo <= CERT_TOL * hi.abs().max(1e-12)
}

/// Simple-eigenvalue forms of the conditions: constant edge gradient,
/// per-vertex constant gradient, and the vertex identity
/// `(2λ/deg x − 1)v_x² = const`.
fn insert_rank_one_diagnostics(cert: &mut Certificate, g: &Graph, lambda: f64, v: &[f64], z: &[Vec<f64>]) {
    let grad: Vec<f64> = z.iter().map(|ze| ze[0].abs()).collect();
    cert.diagnostics.insert("df_const".into(), json!(spread_ok(&grad)));
    let per_vertex = (0..g.n()).all(|x| {
        let around: Vec<f64> = g.neighbors(x).iter().map(|&(_, e)| grad[e]).collect();
        spread_ok(&around)
    });
    cert.diagnostics.insert("dfconst2".into(), json!(per_vertex));
    let conf: Vec<f64> = (0..g.n())
        .map(|x| (2.0 * lambda / g.degree(x) as f64 - 1.0) * v[x] * v[x])
        .collect();
    cert.diagnostics.insert("confeq".into(), json!(spread_ok(&conf)));
}

/// Dispatches to the certificate for `objective`.
pub fn certify(g: &Graph, f: &[f64], space: Space, objective: Objective) -> Result<Certificate> {
    match objective {
        Objective::Girth => certify_girth(g, f, space),
        Objective::Lambda1 => certify_lambda1(g, f, space),
        Objective::Logdet => certify_tree_number(g, f, space),
    }
}
