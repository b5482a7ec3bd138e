//! Semidefinite programs in standard form, SDPA files and a small solver.
//!
//! The vector `x` holds the free variables followed by every PSD block as a
//! full column-major `side²` segment. Symmetry of each block is enforced by
//! tie rows `x_rc − x_cr = 0` appended after the equality rows, so `A`, `b`
//! and `c` fully describe the problem even without the block structure.

mod sdpa;
mod solver;

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sparse::SparseMat;

pub use sdpa::{format_g17, read_sdpa, write_sdpa};
pub use solver::{solve_small, Iterate, Solution, SolveOptions, Status};

/// `min cᵀx` s.t. `Ax = b`, free part unrestricted, block parts PSD.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    nfree: usize,
    blocks: Vec<usize>,
    a: SparseMat,
    b: Vec<f64>,
    c: Vec<f64>,
    n_eq: usize,
    varmap: HashMap<String, usize>,
}

impl SdpProblem {
    /// Builds a problem from its equality rows; symmetry ties are appended.
    pub fn new(nfree: usize, blocks: Vec<usize>, a_eq: SparseMat, b_eq: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let nvec = nfree + blocks.iter().map(|s| s * s).sum::<usize>();
        if a_eq.ncols() != nvec || c.len() != nvec {
            return Err(Error::Dimension(format!(
                "A has {} columns and c {} entries, expected {nvec}",
                a_eq.ncols(),
                c.len()
            )));
        }
        if a_eq.nrows() != b_eq.len() {
            return Err(Error::Dimension(format!("A has {} rows but b {} entries", a_eq.nrows(), b_eq.len())));
        }
        let n_eq = b_eq.len();
        let mut trip: Vec<((usize, usize), f64)> = a_eq.triplets().map(|(r, c, v)| ((r, c), v)).collect();
        let mut b = b_eq;
        let mut off = nfree;
        for &n in &blocks {
            for col in 0..n {
                for row in 0..col {
                    let r = b.len();
                    trip.push(((r, off + col * n + row), 1.0));
                    trip.push(((r, off + row * n + col), -1.0));
                    b.push(0.0);
                }
            }
            off += n * n;
        }
        let a = SparseMat::assemble(b.len(), nvec, trip);
        Ok(Self { nfree, blocks, a, b, c, n_eq, varmap: HashMap::new() })
    }

    pub(crate) fn with_varmap(mut self, varmap: HashMap<String, usize>) -> Self {
        self.varmap = varmap;
        self
    }

    pub fn nfree(&self) -> usize {
        self.nfree
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    /// All constraint rows, ties last.
    pub fn a(&self) -> &SparseMat {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Number of equality rows before the ties.
    pub fn n_eq(&self) -> usize {
        self.n_eq
    }

    pub fn n_ties(&self) -> usize {
        self.b.len() - self.n_eq
    }

    pub fn nrows(&self) -> usize {
        self.b.len()
    }

    pub fn nvec(&self) -> usize {
        self.c.len()
    }

    /// Decision variable name to position in `x`.
    pub fn varmap(&self) -> &HashMap<String, usize> {
        &self.varmap
    }

    /// Start of each block in `x`.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut off = self.nfree;
        self.blocks
            .iter()
            .map(|&n| {
                let o = off;
                off += n * n;
                o
            })
            .collect()
    }

    /// Block `k` of `x` as a matrix.
    pub fn block_matrix(&self, x: &[f64], k: usize) -> DMatrix<f64> {
        let n = self.blocks[k];
        let off = self.block_offsets()[k];
        DMatrix::from_column_slice(n, n, &x[off..off + n * n])
    }

    /// `Ax − b`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self.b.iter().map(|v| -v).collect();
        for (i, j, v) in self.a.triplets() {
            r[i] += v * x[j];
        }
        r
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Values of the named decision variables at `x`.
    pub fn dvar_values(&self, x: &[f64]) -> HashMap<String, f64> {
        self.varmap.iter().map(|(n, &k)| (n.clone(), x[k])).collect()
    }
}
