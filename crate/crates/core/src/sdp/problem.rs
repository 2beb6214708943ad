use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Block-diagonal real symmetric matrix.
pub type BlockMatrix = Vec<DMatrix<f64>>;

/// One upper-triangle entry of a sparse symmetric block matrix; `row <= col`.
/// Off-diagonal entries stand for both `(row, col)` and `(col, row)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Equality constraint `<A, X> = rhs`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Constraint {
    pub entries: Vec<SymEntry>,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(rhs: f64) -> Self {
        Self { entries: Vec::new(), rhs }
    }

    /// Adds `value` at `(row, col)` and its mirror; indices may come in either order.
    pub fn push(&mut self, block: usize, row: usize, col: usize, value: f64) {
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        self.entries.push(SymEntry { block, row, col, value });
    }

    pub fn inner(&self, x: &[DMatrix<f64>]) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let v = e.value * x[e.block][(e.row, e.col)];
                if e.row == e.col {
                    v
                } else {
                    2.0 * v
                }
            })
            .sum()
    }

    fn add_scaled_into(&self, scale: f64, out: &mut [DMatrix<f64>]) {
        for e in &self.entries {
            let m = &mut out[e.block];
            m[(e.row, e.col)] += scale * e.value;
            if e.row != e.col {
                m[(e.col, e.row)] += scale * e.value;
            }
        }
    }

    pub fn to_dense(&self, blocks: &[usize]) -> BlockMatrix {
        let mut out = zeros(blocks);
        self.add_scaled_into(1.0, &mut out);
        out
    }
}

pub fn zeros(blocks: &[usize]) -> BlockMatrix {
    blocks.iter().map(|&n| DMatrix::zeros(n, n)).collect()
}

pub fn identity(blocks: &[usize], scale: &[f64]) -> BlockMatrix {
    blocks
        .iter()
        .zip(scale)
        .map(|(&n, &s)| DMatrix::identity(n, n) * s)
        .collect()
}

pub fn block_inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

pub fn block_norm(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

/// `min <C, X>  s.t.  <A_i, X> = b_i,  X ⪰ 0`, with dual
/// `max bᵀy  s.t.  C - Σ y_i A_i = S ⪰ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub objective: BlockMatrix,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(blocks: Vec<usize>, objective: BlockMatrix, constraints: Vec<Constraint>) -> Result<Self> {
        let p = Self {
            blocks,
            objective,
            constraints,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.rhs).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return Err(Error::InvalidInput("SDP needs nonempty blocks".into()));
        }
        if self.objective.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch("objective block count".into()));
        }
        for (c, &n) in self.objective.iter().zip(&self.blocks) {
            if c.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "objective block {:?} vs declared {n}",
                    c.shape()
                )));
            }
            if !c.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidInput("non-finite objective entry".into()));
            }
            let asym = (c - c.transpose()).amax();
            if asym > 1e-12 {
                return Err(Error::InvalidInput(format!("objective block not symmetric ({asym:e})")));
            }
        }
        if self.constraints.is_empty() {
            return Err(Error::InvalidInput("SDP needs at least one constraint".into()));
        }
        for (k, con) in self.constraints.iter().enumerate() {
            if !con.rhs.is_finite() {
                return Err(Error::InvalidInput(format!("constraint {k} has non-finite rhs")));
            }
            if con.entries.is_empty() {
                return Err(Error::InvalidInput(format!("constraint {k} is empty")));
            }
            for e in &con.entries {
                let n = *self
                    .blocks
                    .get(e.block)
                    .ok_or_else(|| Error::DimensionMismatch(format!("constraint {k} names block {}", e.block)))?;
                if e.row > e.col || e.col >= n || !e.value.is_finite() {
                    return Err(Error::InvalidInput(format!("constraint {k} has a malformed entry {e:?}")));
                }
            }
        }
        Ok(())
    }

    /// Numerical rank of the constraint set via the Gram matrix `<A_i, A_j>`.
    /// Quadratic in the number of constraints; meant for tests and diagnostics.
    pub fn constraint_rank(&self) -> usize {
        let dense: Vec<BlockMatrix> = self.constraints.iter().map(|c| c.to_dense(&self.blocks)).collect();
        let m = dense.len();
        let gram = DMatrix::from_fn(m, m, |i, j| block_inner(&dense[i], &dense[j]));
        let eig = gram.symmetric_eigenvalues();
        let top = eig.amax();
        eig.iter().filter(|&&l| l > top * 1e-12 * m as f64).count()
    }

    pub fn check_independent(&self) -> Result<()> {
        let rank = self.constraint_rank();
        if rank < self.num_constraints() {
            return Err(Error::InvalidInput(format!(
                "constraints are linearly dependent (rank {rank} of {})",
                self.num_constraints()
            )));
        }
        Ok(())
    }

    /// `Σ y_i A_i` as dense blocks.
    pub fn adjoint(&self, y: &[f64]) -> BlockMatrix {
        let mut out = zeros(&self.blocks);
        for (c, &yi) in self.constraints.iter().zip(y) {
            c.add_scaled_into(yi, &mut out);
        }
        out
    }

    /// `(<A_i, X>)_i`.
    pub fn apply(&self, x: &[DMatrix<f64>]) -> Vec<f64> {
        self.constraints.iter().map(|c| c.inner(x)).collect()
    }

    /// JSON document with row-major flattened full matrices, for feeding external solvers.
    pub fn to_debug_json(&self) -> Value {
        let flat = |bm: &[DMatrix<f64>]| -> Vec<Vec<f64>> {
            bm.iter()
                .map(|m| {
                    let mut v = Vec::with_capacity(m.len());
                    for i in 0..m.nrows() {
                        for j in 0..m.ncols() {
                            v.push(m[(i, j)]);
                        }
                    }
                    v
                })
                .collect()
        };
        json!({
            "sense": "min",
            "blocks": self.blocks,
            "C": flat(&self.objective),
            "A": self.constraints.iter().map(|c| flat(&c.to_dense(&self.blocks))).collect::<Vec<_>>(),
            "b": self.rhs(),
        })
    }
}
