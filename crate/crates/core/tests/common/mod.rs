#![allow(dead_code)]

use extremal_core::families::{
    complete, complete_bipartite, cycle, hypercube, moebius_wheel, petersen, triangle_with_pendant,
};
use extremal_core::{project_to_space, tangent_basis, Graph, Space};
use rand::Rng;

pub fn corpus() -> Vec<(&'static str, Graph)> {
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

pub fn edge_transitive() -> Vec<(&'static str, Graph)> {
    corpus()
        .into_iter()
        .filter(|(name, _)| !matches!(*name, "V8" | "K3+pendant"))
        .collect()
}

/// Uniform-ish positive weights normalized to `Σ f = m`.
pub fn random_p<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..2.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x * m as f64 / s).collect()
}

/// Interior point of the space: the constant valuation moved along a random
/// tangent direction, kept well above the floor.
pub fn random_in_space<R: Rng>(rng: &mut R, g: &Graph, space: Space) -> Vec<f64> {
    if space == Space::P {
        return random_p(rng, g.m());
    }
    let t = tangent_basis(g, space).unwrap();
    if t.dim == 0 {
        return vec![1.0; g.m()];
    }
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

/// Unit tangent direction of the space, or zero when the space is a point.
pub fn random_tangent<R: Rng>(rng: &mut R, g: &Graph, space: Space) -> Vec<f64> {
    let t = tangent_basis(g, space).unwrap();
    if t.dim == 0 {
        return vec![0.0; g.m()];
    }
    let coeffs: Vec<f64> = (0..t.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let h = t.combine(&coeffs);
    let n = h.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    h.iter().map(|x| x / n).collect()
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
