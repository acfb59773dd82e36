//! CMV basis bookkeeping and the structural matrices.
//!
//! The interleaved Laurent basis is ordered 1, z^{-1}, z, z^{-2}, z^2, ...;
//! component l carries the power a(l) with a(0) = 0, a(2k) = k,
//! a(2k-1) = -k. Υ implements multiplication by z in this ordering and η
//! is the involution that swaps z and z^{-1}. Truncations of both are exact
//! on the interior of the block grid, so structural identities are checked
//! away from the truncation edge.


use crate::block::BlockMatrix;
use crate::cmat::{C64, CMat};
use crate::error::{Error, Result};
use crate::measure::{MomentSet, TWO_PI};

/// Which moment matrix: left pairs χ dμ χ†, right pairs χ̄ dμ χᵀ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Left => write!(f, "L"),
            Side::Right => write!(f, "R"),
        }
    }
}

/// Power of z carried by the l-th CMV basis component.
pub fn cmv_power(l: usize) -> i64 {
    if l == 0 {
        0
    } else if l % 2 == 0 {
        (l / 2) as i64
    } else {
        -((l as i64 + 1) / 2)
    }
}

/// χ^{(l)}(z) as a scalar: z^{a(l)}.
pub fn chi_scalar(l: usize, z: C64) -> Result<C64> {
    let a = cmv_power(l);
    if a < 0 && z.norm() == 0.0 {
        return Err(Error::Domain(format!("chi component {l} has power {a}, undefined at z = 0")));
    }
    Ok(z.powi(a as i32))
}

/// χ^{(l)}(z) · I.
pub fn chi_eval(m: usize, l: usize, z: C64) -> Result<CMat> {
    Ok(CMat::scalar(m, chi_scalar(l, z)?))
}

/// χ*^{(l)}(z) = z^{-1} χ^{(l)}(1/z) as a scalar: z^{-1-a(l)}.
pub fn chi_star_scalar(l: usize, z: C64) -> Result<C64> {
    if z.norm() == 0.0 {
        return Err(Error::Domain("chi* is undefined at z = 0".into()));
    }
    Ok(z.powi((-1 - cmv_power(l)) as i32))
}

/// Truncation of the shift matrix Υ: the block at (i, j) is I exactly when
/// a(j) = a(i) + 1 holds in the semi-infinite picture.
pub fn upsilon(m: usize, nb: usize) -> BlockMatrix {
    let mut u = BlockMatrix::zeros(m, nb);
    let id = CMat::identity(m);
    for i in 0..nb {
        for j in 0..nb {
            if cmv_power(j) == cmv_power(i) + 1 {
                u.set_block(i, j, &id);
            }
        }
    }
    u
}

/// Truncation of Υ^{-1} (equivalently Υᵀ of the semi-infinite matrix).
pub fn upsilon_inv(m: usize, nb: usize) -> BlockMatrix {
    upsilon(m, nb).transpose()
}

/// Integer power Υ^p as a truncated pattern matrix.
pub fn upsilon_pow(m: usize, nb: usize, p: i32) -> BlockMatrix {
    let mut u = BlockMatrix::zeros(m, nb);
    let id = CMat::identity(m);
    for i in 0..nb {
        for j in 0..nb {
            if cmv_power(j) == cmv_power(i) + p as i64 {
                u.set_block(i, j, &id);
            }
        }
    }
    u
}

/// The intertwining involution η: block (i, j) is I exactly when
/// a(j) = -a(i).
pub fn eta(m: usize, nb: usize) -> BlockMatrix {
    let mut e = BlockMatrix::zeros(m, nb);
    let id = CMat::identity(m);
    for i in 0..nb {
        for j in 0..nb {
            if cmv_power(j) == -cmv_power(i) {
                e.set_block(i, j, &id);
            }
        }
    }
    e
}

/// Truncated moment matrix: (g^L)_{ij} = 2π c_{a(j)-a(i)},
/// (g^R)_{ij} = 2π c_{a(i)-a(j)}.
pub fn build_moment_matrix(moments: &MomentSet, side: Side, nb: usize) -> Result<BlockMatrix> {
    let m = moments.block_size();
    let mut g = BlockMatrix::zeros(m, nb);
    let tau = C64::new(TWO_PI, 0.0);
    for i in 0..nb {
        for j in 0..nb {
            let n = match side {
                Side::Left => cmv_power(j) - cmv_power(i),
                Side::Right => cmv_power(i) - cmv_power(j),
            };
            g.set_block(i, j, &moments.get(n)?.scale(tau));
        }
    }
    Ok(g)
}

/// Moment index range needed to assemble an nb-block moment matrix.
pub fn required_moment_order(nb: usize) -> i64 {
    let powers: Vec<i64> = (0..nb).map(cmv_power).collect();
    let hi = *powers.iter().max().unwrap();
    let lo = *powers.iter().min().unwrap();
    hi - lo
}

/// Interior residuals of the structural identities tying g^L, g^R, Υ and η.
#[derive(Clone, Debug)]
pub struct StructuralResiduals {
    pub commute_left: f64,
    pub commute_right: f64,
    pub intertwine: f64,
    pub eta_upsilon: f64,
    pub scale: f64,
}

impl StructuralResiduals {
    pub fn max(&self) -> f64 {
        self.commute_left.max(self.commute_right).max(self.intertwine).max(self.eta_upsilon)
    }
}

pub fn structural_checks(gl: &BlockMatrix, gr: &BlockMatrix) -> StructuralResiduals {
    let m = gl.block_size();
    let nb = gl.num_blocks();
    let ups = upsilon(m, nb);
    let ups_inv = upsilon_inv(m, nb);
    let e = eta(m, nb);
    let margin = 2;
    let commute_left = ups.mul(gl).interior_max_diff(&gl.mul(&ups), margin);
    let commute_right = ups.mul(gr).interior_max_diff(&gr.mul(&ups), margin);
    let intertwine = e.mul(gr).interior_max_diff(&gl.mul(&e), margin);
    let eta_upsilon = e.mul(&ups).interior_max_diff(&ups_inv.mul(&e), margin);
    let scale = gl.norm_fro().max(gr.norm_fro()).max(1.0);
    StructuralResiduals { commute_left, commute_right, intertwine, eta_upsilon, scale }
}

/// Evaluate the truncated CMV vector (χ^{(0)}, ..., χ^{(nb-1)}) stacked as an
/// (nb·m) × m matrix.
pub fn chi_vector(m: usize, nb: usize, z: C64) -> Result<CMat> {
    let mut v = CMat::zeros(nb * m, m);
    for l in 0..nb {
        let s = chi_scalar(l, z)?;
        for d in 0..m {
            v[(l * m + d, d)] = s;
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmat::c;
    use crate::measure::{MatrixMeasure, MeasureKind};
    use std::collections::BTreeMap;

    #[test]
    fn powers_follow_cmv_order() {
        let expect = [0i64, -1, 1, -2, 2, -3, 3, -4];
        for (l, &a) in expect.iter().enumerate() {
            assert_eq!(cmv_power(l), a);
        }
    }

    #[test]
    fn chi_values() {
        let z = c(2.0, 0.0);
        assert_eq!(chi_eval(1, 0, z).unwrap()[(0, 0)], c(1.0, 0.0));
        // a(3) = -2
        assert_eq!(chi_eval(1, 3, z).unwrap()[(0, 0)], c(0.25, 0.0));
        // a(4) = 2
        assert_eq!(chi_eval(1, 4, z).unwrap()[(0, 0)], c(4.0, 0.0));
        assert!(chi_eval(1, 1, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn upsilon_and_eta_match_their_displays() {
        // frozen nonzero patterns of the two structural matrices
        let ups = upsilon(1, 10);
        let ups_expect: [(usize, usize); 9] =
            [(0, 2), (1, 0), (2, 4), (3, 1), (4, 6), (5, 3), (6, 8), (7, 5), (9, 7)];
        for i in 0..10 {
            for j in 0..10 {
                let expect = if ups_expect.contains(&(i, j)) { 1.0 } else { 0.0 };
                assert_eq!(ups.block(i, j)[(0, 0)], c(expect, 0.0), "Upsilon ({i},{j})");
            }
        }
        let e = eta(1, 9);
        let eta_expect: [(usize, usize); 9] =
            [(0, 0), (1, 2), (2, 1), (3, 4), (4, 3), (5, 6), (6, 5), (7, 8), (8, 7)];
        for i in 0..9 {
            for j in 0..9 {
                let expect = if eta_expect.contains(&(i, j)) { 1.0 } else { 0.0 };
                assert_eq!(e.block(i, j)[(0, 0)], c(expect, 0.0), "eta ({i},{j})");
            }
        }
    }

    #[test]
    fn eta_is_an_involution() {
        for nb in [2usize, 5, 8] {
            let e = eta(2, nb);
            // interior, where the pairing partner is inside the truncation
            let prod = e.mul(&e);
            assert_eq!(prod.interior_max_diff(&BlockMatrix::identity(2, nb), 2), 0.0);
        }
    }

    #[test]
    fn upsilon_shifts_chi() {
        let nb = 9;
        let z = c(0.7, 0.4);
        let ups = upsilon(1, nb);
        let chi = chi_vector(1, nb, z).unwrap();
        let shifted = ups.dense().mul(&chi);
        for l in 0..nb - 2 {
            let expect = z * chi_scalar(l, z).unwrap();
            assert!((shifted[(l, 0)] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn upsilon_transpose_inverts_interior() {
        let nb = 10;
        let ups = upsilon(2, nb);
        let prod = ups.mul(&ups.transpose());
        assert_eq!(prod.interior_max_diff(&BlockMatrix::identity(2, nb), 2), 0.0);
    }

    #[test]
    fn moment_matrix_matches_displayed_pattern() {
        // freeze the two 4x4 displays: row-by-row moment indices
        let mut coeffs = BTreeMap::new();
        for n in -4i64..=4 {
            // injective marker values so indices are verifiable
            coeffs.insert(n, CMat::scalar(1, c(n as f64 * 10.0 + 100.0, n as f64)));
        }
        let mu = MatrixMeasure::new(1, MeasureKind::MomentList, false, coeffs).unwrap();
        let ms = mu.moments(4).unwrap();
        let gl = build_moment_matrix(&ms, Side::Left, 4).unwrap();
        let gr = build_moment_matrix(&ms, Side::Right, 4).unwrap();
        let left_display: [[i64; 4]; 4] =
            [[0, -1, 1, -2], [1, 0, 2, -1], [-1, -2, 0, -3], [2, 1, 3, 0]];
        let right_display: [[i64; 4]; 4] =
            [[0, 1, -1, 2], [-1, 0, -2, 1], [1, 2, 0, 3], [-2, -1, -3, 0]];
        for i in 0..4 {
            for j in 0..4 {
                let expect_l = ms.get(left_display[i][j]).unwrap().scale(c(TWO_PI, 0.0));
                let expect_r = ms.get(right_display[i][j]).unwrap().scale(c(TWO_PI, 0.0));
                assert_eq!(gl.block(i, j).max_diff(&expect_l), 0.0, "gL mismatch at ({i},{j})");
                assert_eq!(gr.block(i, j).max_diff(&expect_r), 0.0, "gR mismatch at ({i},{j})");
            }
        }
    }

    #[test]
    fn lebesgue_structure() {
        let mu = MatrixMeasure::lebesgue(1);
        let ms = mu.moments(required_moment_order(3)).unwrap();
        let gl = build_moment_matrix(&ms, Side::Left, 3).unwrap();
        let expect = BlockMatrix::identity(1, 3).scale(c(TWO_PI, 0.0));
        assert_eq!(gl.dense().max_diff(expect.dense()), 0.0);
        let gr = build_moment_matrix(&ms, Side::Right, 3).unwrap();
        let res = structural_checks(&gl, &gr);
        assert_eq!(res.max(), 0.0);
    }

    #[test]
    fn hermitian_moment_matrices_are_hermitian() {
        let mut coeffs = BTreeMap::new();
        let a = CMat::from_rows(
            2,
            2,
            &[c(0.1, 0.2), c(0.25, -0.1), c(0.0, 0.15), c(-0.2, 0.1)],
        )
        .unwrap();
        coeffs.insert(0, CMat::scalar(2, c(2.0, 0.0)));
        coeffs.insert(1, a.clone());
        coeffs.insert(-1, a.dagger());
        let mu = MatrixMeasure::new(2, MeasureKind::TrigPoly, true, coeffs).unwrap();
        let nb = 12;
        let ms = mu.moments(required_moment_order(nb)).unwrap();
        for side in [Side::Left, Side::Right] {
            let g = build_moment_matrix(&ms, side, nb).unwrap();
            assert!(g.dense().max_diff(&g.dense().dagger()) < 1e-13 * g.norm_fro());
        }
        let gl = build_moment_matrix(&ms, Side::Left, nb).unwrap();
        let gr = build_moment_matrix(&ms, Side::Right, nb).unwrap();
        let res = structural_checks(&gl, &gr);
        assert!(res.max() < 1e-12 * res.scale);
    }
}
