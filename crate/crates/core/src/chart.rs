//! Optimization coordinates for each deformation space.
//!
//! P and T are charted by the edge weights themselves, C by the vertex
//! function `g` with `f = lift(g)`. Tangent directions are orthonormal in the
//! chart's own coordinates.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::graph::{
    active_set_projection, complement_basis, edge_constraints, null_space, recover_vertex_function,
    EdgeValuation, Graph, Space,
};

#[derive(Debug, Clone)]
pub(crate) struct Chart {
    pub space: Space,
    pub dim: usize,
    /// Orthonormal tangent directions in chart coordinates.
    pub basis: Vec<Vec<f64>>,
    /// The same directions pushed to edge space.
    pub edge_dirs: Vec<Vec<f64>>,
    pub rows: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub floor: f64,
}

impl Chart {
    pub fn new(g: &Graph, space: Space) -> Result<Self> {
        g.require_connected()?;
        let (basis, rows, rhs, dim) = match space {
            Space::P | Space::T => {
                let (rows, rhs) = edge_constraints(g, space);
                let basis = match space {
                    Space::P => complement_basis(&vec![1.0; g.m()]),
                    _ => null_space(&g.incidence()),
                };
                (basis, rows, rhs, g.m())
            }
            Space::C => {
                let deg: Vec<f64> = g.degrees().iter().map(|&d| d as f64).collect();
                let basis = complement_basis(&deg);
                let rows = DMatrix::from_row_slice(1, g.n(), &deg);
                (basis, rows, DVector::from_element(1, g.m() as f64), g.n())
            }
        };
        let edge_dirs = basis.iter().map(|b| push(g, space, b)).collect();
        Ok(Chart {
            space,
            dim,
            basis,
            edge_dirs,
            rows,
            rhs,
            floor: space.coordinate_floor(),
        })
    }

    pub fn coords(&self, g: &Graph, f: &[f64]) -> Vec<f64> {
        match self.space {
            Space::P | Space::T => f.to_vec(),
            Space::C => recover_vertex_function(g, f),
        }
    }

    pub fn edges(&self, g: &Graph, x: &[f64]) -> Vec<f64> {
        push(g, self.space, x)
    }

    /// Gradient in chart coordinates from an edge gradient (adjoint of the push).
    pub fn pull(&self, g: &Graph, grad: &[f64]) -> Vec<f64> {
        match self.space {
            Space::P | Space::T => grad.to_vec(),
            Space::C => g.vertex_sums(grad),
        }
    }

    /// Linear functional giving edge `e`'s weight in chart coordinates.
    pub fn edge_functional(&self, g: &Graph, e: usize) -> Vec<(usize, f64)> {
        match self.space {
            Space::P | Space::T => vec![(e, 1.0)],
            Space::C => {
                let (u, v) = g.edge(e);
                vec![(u, 1.0), (v, 1.0)]
            }
        }
    }

    pub fn combine(&self, basis: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; basis.first().map_or(self.dim, Vec::len)];
        for (b, c) in basis.iter().zip(coeffs) {
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        out
    }

    /// Orthonormal basis of the tangent directions that leave `fixed` coordinates alone.
    pub fn face_basis(&self, fixed: &[usize]) -> Vec<Vec<f64>> {
        if fixed.is_empty() {
            return self.basis.clone();
        }
        let k = self.basis.len();
        if k == 0 {
            return Vec::new();
        }
        let a = DMatrix::from_fn(fixed.len(), k, |r, j| self.basis[j][fixed[r]]);
        null_space(&a)
            .iter()
            .map(|c| self.combine(&self.basis, c))
            .collect()
    }

    /// Euclidean projection onto the chart's feasible set with the floor.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let id = DMatrix::identity(self.dim, self.dim);
        let center = if self.space == Space::C { 0.5 } else { 1.0 };
        active_set_projection(&self.rows, &self.rhs, &id, x, self.floor, &vec![center; self.dim])
    }

    pub fn at_floor(&self, x: &[f64]) -> Vec<usize> {
        x.iter()
            .enumerate()
            .filter(|(_, &xi)| xi <= self.floor * (1.0 + 1e-6))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn valuation(&self, g: &Graph, x: &[f64]) -> Result<EdgeValuation> {
        let weights = self.edges(g, x);
        let mut v = EdgeValuation::new(g, weights)?;
        if self.space == Space::C {
            v.vertex_weights = Some(x.to_vec());
        }
        v.into_space(g, self.space)
    }
}

fn push(g: &Graph, space: Space, x: &[f64]) -> Vec<f64> {
    match space {
        Space::P | Space::T => x.to_vec(),
        Space::C => g.lift(x),
    }
}
