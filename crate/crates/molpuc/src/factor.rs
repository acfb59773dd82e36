//! Block Gauss-Borel (LU) factorization of truncated moment matrices.
//!
//! Both factorization problems reduce to one block Doolittle pass:
//! g = L·U with L block lower unitriangular and U block upper triangular.
//! The left problem reads g^L = S₁^{-1} S₂ with S₁ = L^{-1}, S₂ = U; the
//! right problem reads g^R = Z₂ Z₁^{-1} with Z₂ = L, Z₁ = U^{-1}. The block
//! diagonal D_l = U_{ll} equals the Schur complement of the (l+1)-st leading
//! truncation by its l-th, which is what quasi-definiteness controls. No
//! pivoting is used: pivoting would destroy the triangular correspondence
//! with the orthogonal polynomials, so a near-singular running pivot is
//! reported as a quasi-definiteness failure instead.

use crate::block::BlockMatrix;
use crate::cmat::CMat;
use crate::cmv::Side;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Factorization {
    side: Side,
    m: usize,
    nb: usize,
    lower: BlockMatrix,
    upper: BlockMatrix,
    lower_inv: BlockMatrix,
    upper_inv: BlockMatrix,
    d: Vec<CMat>,
    d_cond: Vec<f64>,
}

impl Factorization {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn block_size(&self) -> usize {
        self.m
    }

    pub fn num_blocks(&self) -> usize {
        self.nb
    }

    /// Block diagonal D_0..D_{nb-1} of the upper factor.
    pub fn diag(&self) -> &[CMat] {
        &self.d
    }

    pub fn diag_conditions(&self) -> &[f64] {
        &self.d_cond
    }

    // Left problem: g^L = S₁^{-1} S₂.
    pub fn s1(&self) -> &BlockMatrix {
        debug_assert_eq!(self.side, Side::Left);
        &self.lower_inv
    }

    pub fn s1_inv(&self) -> &BlockMatrix {
        debug_assert_eq!(self.side, Side::Left);
        &self.lower
    }

    pub fn s2(&self) -> &BlockMatrix {
        debug_assert_eq!(self.side, Side::Left);
        &self.upper
    }

    pub fn s2_inv(&self) -> &BlockMatrix {
        debug_assert_eq!(self.side, Side::Left);
        &self.upper_inv
    }

    /// Normalized upper factor inverse: Ŝ₂^{-1} = S₂^{-1} D.
    pub fn s2_hat_inv(&self) -> BlockMatrix {
        debug_assert_eq!(self.side, Side::Left);
        self.scale_cols_by_diag(&self.upper_inv)
    }

    // Right problem: g^R = Z₂ Z₁^{-1}.
    pub fn z2(&self) -> &BlockMatrix {
        debug_assert_eq!(self.side, Side::Right);
        &self.lower
    }

    pub fn z2_inv(&self) -> &BlockMatrix {
        debug_assert_eq!(self.side, Side::Right);
        &self.lower_inv
    }

    pub fn z1(&self) -> &BlockMatrix {
        debug_assert_eq!(self.side, Side::Right);
        &self.upper_inv
    }

    pub fn z1_inv(&self) -> &BlockMatrix {
        debug_assert_eq!(self.side, Side::Right);
        &self.upper
    }

    /// Normalized upper factor: Ẑ₁ = Z₁ D.
    pub fn z1_hat(&self) -> BlockMatrix {
        debug_assert_eq!(self.side, Side::Right);
        self.scale_cols_by_diag(&self.upper_inv)
    }

    fn scale_cols_by_diag(&self, a: &BlockMatrix) -> BlockMatrix {
        let mut out = BlockMatrix::zeros(self.m, self.nb);
        for i in 0..self.nb {
            for j in 0..self.nb {
                out.set_block(i, j, &a.block(i, j).mul(&self.d[j]));
            }
        }
        out
    }

    /// ‖recomposed - g‖_F / ‖g‖_F.
    pub fn reconstruction_residual(&self, g: &BlockMatrix) -> f64 {
        let recomposed = self.lower.mul(&self.upper);
        recomposed.dense().sub(g.dense()).norm_fro() / g.norm_fro().max(1e-300)
    }
}

/// Block Doolittle factorization, no pivoting.
pub fn block_lu(g: &BlockMatrix, side: Side) -> Result<Factorization> {
    let m = g.block_size();
    let nb = g.num_blocks();
    let scale = g.norm_fro().max(1e-300);
    let mut work = g.clone();
    let mut lower = BlockMatrix::identity(m, nb);
    let mut upper = BlockMatrix::zeros(m, nb);
    let mut d = Vec::with_capacity(nb);
    let mut d_cond = Vec::with_capacity(nb);
    for k in 0..nb {
        let pivot = work.block(k, k);
        let sv = pivot.singular_values()?;
        let sigma_min = sv[0];
        if sigma_min < 1e-10 * scale {
            return Err(Error::NotQuasiDefinite { level: k, sigma_min });
        }
        d_cond.push(sv[sv.len() - 1] / sigma_min);
        d.push(pivot.clone());
        for j in k..nb {
            upper.set_block(k, j, &work.block(k, j));
        }
        if k + 1 == nb {
            break;
        }
        let pivot_inv = pivot.solve_fullpiv(&CMat::identity(m))?;
        for i in k + 1..nb {
            let lik = work.block(i, k).mul(&pivot_inv);
            lower.set_block(i, k, &lik);
            for j in k + 1..nb {
                let update = lik.mul(&work.block(k, j));
                work.set_block(i, j, &work.block(i, j).sub(&update));
            }
        }
    }
    let lower_inv = lower.unit_lower_inverse();
    let upper_inv = upper.upper_inverse()?;
    Ok(Factorization { side, m, nb, lower, upper, lower_inv, upper_inv, d, d_cond })
}

/// Schur complement of the leading p-block corner: for M = [[A, B], [C, D]]
/// with A the p×p block corner, returns D - C A^{-1} B.
pub fn schur_complement(mat: &BlockMatrix, p: usize) -> Result<CMat> {
    let m = mat.block_size();
    let nb = mat.num_blocks();
    if p == 0 || p >= nb {
        return Err(Error::Dimension(format!("split p = {p} must satisfy 0 < p < {nb}")));
    }
    let pm = p * m;
    let rest = (nb - p) * m;
    let a = mat.dense().submatrix(0, 0, pm, pm);
    let b = mat.dense().submatrix(0, pm, pm, rest);
    let c = mat.dense().submatrix(pm, 0, rest, pm);
    let dd = mat.dense().submatrix(pm, pm, rest, rest);
    let x = a.solve(&b).map_err(|_| Error::Singular("leading corner is singular".into()))?;
    Ok(dd.sub(&c.mul(&x)))
}

#[derive(Clone, Debug)]
pub struct LevelVerdict {
    pub level: usize,
    pub abs_det: f64,
    pub sigma_min: f64,
    pub pass: bool,
}

/// Determinant and smallest singular value of every leading block
/// truncation. Reports, never throws.
pub fn quasi_definiteness_scan(g: &BlockMatrix) -> Vec<LevelVerdict> {
    let scale = g.norm_fro().max(1e-300);
    let mut out = Vec::new();
    for l in 1..=g.num_blocks() {
        let lead = g.leading(l);
        let abs_det = lead.det().map(|d| d.norm()).unwrap_or(0.0);
        let sigma_min = lead.singular_values().map(|sv| sv[0]).unwrap_or(0.0);
        out.push(LevelVerdict { level: l, abs_det, sigma_min, pass: sigma_min >= 1e-10 * scale });
    }
    out
}
