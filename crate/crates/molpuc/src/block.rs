//! Block matrices: an N×N grid of m×m complex blocks stored as one dense
//! matrix. Block-triangular structure here always refers to the block grid,
//! not to scalar entries.

use crate::cmat::{C64, CMat};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct BlockMatrix {
    m: usize,
    nb: usize,
    mat: CMat,
}

impl BlockMatrix {
    pub fn zeros(m: usize, nb: usize) -> Self {
        BlockMatrix { m, nb, mat: CMat::zeros(m * nb, m * nb) }
    }

    pub fn identity(m: usize, nb: usize) -> Self {
        BlockMatrix { m, nb, mat: CMat::identity(m * nb) }
    }

    pub fn from_dense(m: usize, nb: usize, mat: CMat) -> Result<Self> {
        if mat.rows() != m * nb || mat.cols() != m * nb {
            return Err(Error::Dimension(format!(
                "dense matrix is {}x{}, expected {}",
                mat.rows(),
                mat.cols(),
                m * nb
            )));
        }
        Ok(BlockMatrix { m, nb, mat })
    }

    pub fn block_size(&self) -> usize {
        self.m
    }

    pub fn num_blocks(&self) -> usize {
        self.nb
    }

    pub fn dense(&self) -> &CMat {
        &self.mat
    }

    pub fn block(&self, i: usize, j: usize) -> CMat {
        self.mat.submatrix(i * self.m, j * self.m, self.m, self.m)
    }

    pub fn set_block(&mut self, i: usize, j: usize, b: &CMat) {
        assert_eq!((b.rows(), b.cols()), (self.m, self.m));
        self.mat.set_submatrix(i * self.m, j * self.m, b);
    }

    pub fn add_to_block(&mut self, i: usize, j: usize, b: &CMat) {
        let cur = self.block(i, j);
        self.set_block(i, j, &cur.add(b));
    }

    pub fn mul(&self, other: &BlockMatrix) -> BlockMatrix {
        assert_eq!(self.m, other.m);
        assert_eq!(self.nb, other.nb);
        BlockMatrix { m: self.m, nb: self.nb, mat: self.mat.mul(&other.mat) }
    }

    pub fn add(&self, other: &BlockMatrix) -> BlockMatrix {
        BlockMatrix { m: self.m, nb: self.nb, mat: self.mat.add(&other.mat) }
    }

    pub fn sub(&self, other: &BlockMatrix) -> BlockMatrix {
        BlockMatrix { m: self.m, nb: self.nb, mat: self.mat.sub(&other.mat) }
    }

    pub fn scale(&self, s: C64) -> BlockMatrix {
        BlockMatrix { m: self.m, nb: self.nb, mat: self.mat.scale(s) }
    }

    pub fn dagger(&self) -> BlockMatrix {
        BlockMatrix { m: self.m, nb: self.nb, mat: self.mat.dagger() }
    }

    pub fn transpose(&self) -> BlockMatrix {
        BlockMatrix { m: self.m, nb: self.nb, mat: self.mat.transpose() }
    }

    pub fn inverse(&self) -> Result<BlockMatrix> {
        Ok(BlockMatrix { m: self.m, nb: self.nb, mat: self.mat.inverse()? })
    }

    pub fn norm_fro(&self) -> f64 {
        self.mat.norm_fro()
    }

    /// Leading l×l block submatrix as a dense matrix.
    pub fn leading(&self, l: usize) -> CMat {
        assert!(l <= self.nb);
        self.mat.submatrix(0, 0, l * self.m, l * self.m)
    }

    /// Strictly lower block-triangular part.
    pub fn lower_strict(&self) -> BlockMatrix {
        let mut out = BlockMatrix::zeros(self.m, self.nb);
        for i in 0..self.nb {
            for j in 0..i {
                out.set_block(i, j, &self.block(i, j));
            }
        }
        out
    }

    /// Upper block-triangular part, block diagonal included.
    pub fn upper_with_diag(&self) -> BlockMatrix {
        let mut out = BlockMatrix::zeros(self.m, self.nb);
        for i in 0..self.nb {
            for j in i..self.nb {
                out.set_block(i, j, &self.block(i, j));
            }
        }
        out
    }

    /// Max blockwise norm of the difference over block rows and columns
    /// `0..nb - margin`. Semi-infinite identities only survive truncation on
    /// this interior range.
    pub fn interior_max_diff(&self, other: &BlockMatrix, margin: usize) -> f64 {
        assert_eq!(self.nb, other.nb);
        let hi = self.nb.saturating_sub(margin);
        let mut worst = 0.0f64;
        for i in 0..hi {
            for j in 0..hi {
                worst = worst.max(self.block(i, j).max_diff(&other.block(i, j)));
            }
        }
        worst
    }

    /// Max block norm over the interior of this matrix itself.
    pub fn interior_max_norm(&self, margin: usize) -> f64 {
        let hi = self.nb.saturating_sub(margin);
        let mut worst = 0.0f64;
        for i in 0..hi {
            for j in 0..hi {
                worst = worst.max(self.block(i, j).norm_max());
            }
        }
        worst
    }

    /// Invert a block lower-triangular matrix with identity diagonal blocks
    /// by forward substitution on block columns.
    pub fn unit_lower_inverse(&self) -> BlockMatrix {
        let mut inv = BlockMatrix::identity(self.m, self.nb);
        for j in 0..self.nb {
            for i in j + 1..self.nb {
                // inv[i][j] = -sum_{k=j..i-1} self[i][k] inv[k][j]
                let mut acc = CMat::zeros(self.m, self.m);
                for k in j..i {
                    acc = acc.add(&self.block(i, k).mul(&inv.block(k, j)));
                }
                inv.set_block(i, j, &acc.neg());
            }
        }
        inv
    }

    /// Invert a block upper-triangular matrix (arbitrary invertible diagonal
    /// blocks) by back substitution on block columns.
    pub fn upper_inverse(&self) -> Result<BlockMatrix> {
        let mut diag_inv = Vec::with_capacity(self.nb);
        for i in 0..self.nb {
            diag_inv.push(self.block(i, i).solve_fullpiv(&CMat::identity(self.m))?);
        }
        let mut inv = BlockMatrix::zeros(self.m, self.nb);
        for i in 0..self.nb {
            inv.set_block(i, i, &diag_inv[i]);
        }
        for j in 0..self.nb {
            for i in (0..j).rev() {
                let mut acc = CMat::zeros(self.m, self.m);
                for k in i + 1..=j {
                    acc = acc.add(&self.block(i, k).mul(&inv.block(k, j)));
                }
                inv.set_block(i, j, &diag_inv[i].mul(&acc).neg());
            }
        }
        Ok(inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmat::c;

    fn filled(m: usize, nb: usize, seed: u64) -> BlockMatrix {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let mat = CMat::from_fn(m * nb, m * nb, |_, _| c(next(), next()));
        BlockMatrix::from_dense(m, nb, mat).unwrap()
    }

    #[test]
    fn triangular_inverses() {
        let a = filled(2, 5, 17);
        let mut low = a.lower_strict();
        for i in 0..5 {
            low.set_block(i, i, &CMat::identity(2));
        }
        let inv = low.unit_lower_inverse();
        let prod = low.mul(&inv);
        assert!(prod.dense().max_diff(&CMat::identity(10)) < 1e-12);

        let mut up = a.upper_with_diag();
        for i in 0..5 {
            // keep diagonals well conditioned
            up.set_block(i, i, &a.block(i, i).add(&CMat::scalar(2, c(4.0, 0.0))));
        }
        let uinv = up.upper_inverse().unwrap();
        assert!(up.mul(&uinv).dense().max_diff(&CMat::identity(10)) < 1e-12);
        assert!(uinv.mul(&up).dense().max_diff(&CMat::identity(10)) < 1e-12);
    }

    #[test]
    fn parts_sum_back() {
        let a = filled(2, 4, 5);
        let rebuilt = a.lower_strict().add(&a.upper_with_diag());
        assert!(rebuilt.dense().max_diff(a.dense()) < 1e-15);
    }
}
