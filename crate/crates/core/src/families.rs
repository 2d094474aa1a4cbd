//! Named graph families used throughout the test corpus and the CLI.

use crate::error::Result;
use crate::graph::Graph;

pub fn complete(n: usize) -> Result<Graph> {
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j));
        }
    }
    Graph::new(n, &pairs)
}

pub fn cycle(n: usize) -> Result<Graph> {
    let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::new(n, &pairs)
}

pub fn path(n: usize) -> Result<Graph> {
    let pairs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    Graph::new(n, &pairs)
}

/// `K_{a,b}` with parts `0..a` and `a..a+b`.
pub fn complete_bipartite(a: usize, b: usize) -> Result<Graph> {
    let mut pairs = Vec::new();
    for i in 0..a {
        for j in 0..b {
            pairs.push((i, a + j));
        }
    }
    Graph::new(a + b, &pairs)
}

/// The `k`-cube on `2^k` vertices; `u ~ w` iff they differ in one bit.
pub fn hypercube(k: usize) -> Result<Graph> {
    let n = 1usize << k;
    let mut pairs = Vec::new();
    for u in 0..n {
        for b in 0..k {
            let w = u ^ (1 << b);
            if u < w {
                pairs.push((u, w));
            }
        }
    }
    Graph::new(n, &pairs)
}

/// Outer 5-cycle `0..5`, inner pentagram `5..10`, spokes `i ~ i+5`.
pub fn petersen() -> Result<Graph> {
    let mut pairs = Vec::new();
    for i in 0..5 {
        pairs.push((i, (i + 1) % 5));
        pairs.push((5 + i, 5 + (i + 2) % 5));
        pairs.push((i, i + 5));
    }
    Graph::new(10, &pairs)
}

/// The 8-vertex Möbius wheel (Möbius ladder `V₈`): an 8-cycle plus the four
/// long diagonals. It has the most spanning trees among 8-vertex cubic
/// graphs (392 against 384 for the 3-cube) and is not equiarboreal.
pub fn moebius_wheel() -> Result<Graph> {
    let mut pairs: Vec<_> = (0..8).map(|i| (i, (i + 1) % 8)).collect();
    pairs.extend((0..4).map(|i| (i, i + 4)));
    Graph::new(8, &pairs)
}

/// A triangle with one pendant edge at vertex 0.
pub fn triangle_with_pendant() -> Result<Graph> {
    Graph::new(4, &[(0, 1), (1, 2), (0, 2), (0, 3)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(complete(4).unwrap().m(), 6);
        assert_eq!(cycle(7).unwrap().m(), 7);
        assert_eq!(complete_bipartite(2, 3).unwrap().m(), 6);
        assert_eq!(hypercube(4).unwrap().m(), 32);
        let p = petersen().unwrap();
        assert_eq!((p.n(), p.m(), p.regular_degree()), (10, 15, Some(3)));
        let v8 = moebius_wheel().unwrap();
        assert_eq!((v8.n(), v8.m(), v8.regular_degree()), (8, 12, Some(3)));
        assert!(!v8.is_bipartite());
        assert!(hypercube(3).unwrap().is_bipartite());
    }

    #[test]
    fn small_cubes() {
        let q1 = hypercube(1).unwrap();
        assert_eq!(q1.edges(), &[(0, 1)]);
        let q2 = hypercube(2).unwrap();
        assert_eq!((q2.n(), q2.m(), q2.regular_degree()), (4, 4, Some(2)));
    }
}
