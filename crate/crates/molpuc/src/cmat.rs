//! Dense complex matrices.
//!
//! Everything in this crate works on small dense matrices (block sizes
//! m ≤ 3, truncations N·m ≤ ~64), so the kernels here favour clarity and
//! determinism over speed: row-major storage, textbook LU, cyclic Jacobi
//! for Hermitian eigenvalues.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl std::fmt::Debug for CMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let v = self[(i, j)];
                write!(f, "{:+.4e}{:+.4e}i  ", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = CMat::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = C64::new(1.0, 0.0);
        }
        a
    }

    /// Scalar multiple of the identity.
    pub fn scalar(n: usize, s: C64) -> Self {
        let mut a = CMat::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = s;
        }
        a
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut a = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                a[(i, j)] = f(i, j);
            }
        }
        a
    }

    /// Build from a row-major slice of `[re, im]` pairs.
    pub fn from_rows(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                entries.len()
            )));
        }
        Ok(CMat { rows, cols, data: entries.to_vec() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        CMat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        CMat { rows: self.rows, cols: self.cols, data }
    }

    pub fn neg(&self) -> CMat {
        let data = self.data.iter().map(|a| -a).collect();
        CMat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: C64) -> CMat {
        let data = self.data.iter().map(|a| a * s).collect();
        CMat { rows: self.rows, cols: self.cols, data }
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> CMat {
        let data = self.data.iter().map(|a| a.conj()).collect();
        CMat { rows: self.rows, cols: self.cols, data }
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Max elementwise |a - b|.
    pub fn max_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn submatrix(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> CMat {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols);
        CMat::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_submatrix(&mut self, r0: usize, c0: usize, block: &CMat) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    /// LU with partial pivoting. Returns (combined LU, pivots, sign swaps).
    fn lu_decompose(&self) -> Result<(CMat, Vec<usize>, usize)> {
        if !self.is_square() {
            return Err(Error::Dimension("LU needs a square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].norm();
            for i in k + 1..n {
                let v = a[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular(format!("zero pivot at column {k}")));
            }
            if p != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = t;
                }
                piv.swap(k, p);
                swaps += 1;
            }
            let akk = a[(k, k)];
            for i in k + 1..n {
                let lik = a[(i, k)] / akk;
                a[(i, k)] = lik;
                for j in k + 1..n {
                    let akj = a[(k, j)];
                    a[(i, j)] -= lik * akj;
                }
            }
        }
        Ok((a, piv, swaps))
    }

    /// Solve `self * X = rhs` by partial-pivot LU.
    pub fn solve(&self, rhs: &CMat) -> Result<CMat> {
        if self.rows != rhs.rows {
            return Err(Error::Dimension("solve rhs row mismatch".into()));
        }
        let (lu, piv, _) = self.lu_decompose()?;
        let n = self.rows;
        let m = rhs.cols;
        let mut x = CMat::zeros(n, m);
        for i in 0..n {
            for j in 0..m {
                x[(i, j)] = rhs[(piv[i], j)];
            }
        }
        // forward: L y = P rhs
        for k in 0..n {
            for i in k + 1..n {
                let lik = lu[(i, k)];
                for j in 0..m {
                    let v = x[(k, j)];
                    x[(i, j)] -= lik * v;
                }
            }
        }
        // backward: U x = y
        for k in (0..n).rev() {
            let ukk = lu[(k, k)];
            for j in 0..m {
                x[(k, j)] /= ukk;
            }
            for i in 0..k {
                let uik = lu[(i, k)];
                for j in 0..m {
                    let v = x[(k, j)];
                    x[(i, j)] -= uik * v;
                }
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<CMat> {
        self.solve(&CMat::identity(self.rows))
    }

    pub fn det(&self) -> Result<C64> {
        let (lu, _, swaps) = self.lu_decompose()?;
        let mut d = if swaps % 2 == 0 { C64::new(1.0, 0.0) } else { C64::new(-1.0, 0.0) };
        for k in 0..self.rows {
            d *= lu[(k, k)];
        }
        Ok(d)
    }

    /// Solve `self * X = rhs` with full pivoting; used for the m×m pivot
    /// blocks inside the block factorization where we want the most robust
    /// small solve available.
    pub fn solve_fullpiv(&self, rhs: &CMat) -> Result<CMat> {
        if !self.is_square() || self.rows != rhs.rows {
            return Err(Error::Dimension("solve_fullpiv dimension mismatch".into()));
        }
        let n = self.rows;
        let m = rhs.cols;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let mut colperm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut pr, mut pc) = (k, k);
            let mut best = 0.0;
            for i in k..n {
                for j in k..n {
                    let v = a[(i, j)].norm();
                    if v > best {
                        best = v;
                        pr = i;
                        pc = j;
                    }
                }
            }
            if best == 0.0 {
                return Err(Error::Singular(format!("full-pivot breakdown at step {k}")));
            }
            if pr != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(pr, j)];
                    a[(pr, j)] = t;
                }
                for j in 0..m {
                    let t = b[(k, j)];
                    b[(k, j)] = b[(pr, j)];
                    b[(pr, j)] = t;
                }
            }
            if pc != k {
                for i in 0..n {
                    let t = a[(i, k)];
                    a[(i, k)] = a[(i, pc)];
                    a[(i, pc)] = t;
                }
                colperm.swap(k, pc);
            }
            let akk = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / akk;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in k..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
                for j in 0..m {
                    let v = b[(k, j)];
                    b[(i, j)] -= f * v;
                }
            }
        }
        let mut y = CMat::zeros(n, m);
        for k in (0..n).rev() {
            for j in 0..m {
                let mut s = b[(k, j)];
                for i in k + 1..n {
                    s -= a[(k, i)] * y[(i, j)];
                }
                y[(k, j)] = s / a[(k, k)];
            }
        }
        let mut x = CMat::zeros(n, m);
        for k in 0..n {
            for j in 0..m {
                x[(colperm[k], j)] = y[(k, j)];
            }
        }
        Ok(x)
    }

    /// Eigenvalues of a Hermitian matrix by cyclic Jacobi, ascending order.
    /// The input is symmetrised as (A + A†)/2 before iterating.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(Error::Dimension("eigenvalues need a square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.add(&self.dagger()).scale(C64::new(0.5, 0.0));
        if n == 1 {
            return Ok(vec![a[(0, 0)].re]);
        }
        let scale = a.norm_fro().max(1.0);
        for _sweep in 0..60 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in p + 1..n {
                    off = off.max(a[(p, q)].norm());
                }
            }
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    let g = apq.norm();
                    if g <= 1e-18 * scale {
                        continue;
                    }
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let phase = apq / g;
                    let tau = (aqq - app) / (2.0 * g);
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // columns: A <- A J, with J[p][p]=c, J[p][q]=s*phase, J[q][p]=-s*conj(phase), J[q][q]=c
                    for i in 0..n {
                        let aip = a[(i, p)];
                        let aiq = a[(i, q)];
                        a[(i, p)] = aip * c - aiq * s * phase.conj();
                        a[(i, q)] = aip * s * phase + aiq * c;
                    }
                    // rows: A <- J† A
                    for j in 0..n {
                        let apj = a[(p, j)];
                        let aqj = a[(q, j)];
                        a[(p, j)] = apj * c - aqj * s * phase;
                        a[(q, j)] = apj * s * phase.conj() + aqj * c;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        Ok(eig)
    }

    /// Singular values, ascending; computed as sqrt of the eigenvalues of A†A.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let ata = self.dagger().mul(self);
        let eig = ata.hermitian_eigenvalues()?;
        Ok(eig.into_iter().map(|l| l.max(0.0).sqrt()).collect())
    }

    pub fn sigma_min(&self) -> Result<f64> {
        Ok(self.singular_values()?[0])
    }

    pub fn condition(&self) -> Result<f64> {
        let sv = self.singular_values()?;
        let (lo, hi) = (sv[0], sv[sv.len() - 1]);
        if lo == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(hi / lo)
    }

    /// Matrix exponential by scaling-and-squaring on the Taylor series.
    /// Intended for the small-norm generators that show up in the flow checks.
    pub fn expm(&self) -> Result<CMat> {
        if !self.is_square() {
            return Err(Error::Dimension("expm needs a square matrix".into()));
        }
        let norm = self.norm_fro();
        let mut squarings = 0u32;
        let mut scaled = self.clone();
        if norm > 0.5 {
            squarings = (norm / 0.5).log2().ceil() as u32 + 1;
            scaled = self.scale(C64::new(0.5f64.powi(squarings as i32), 0.0));
        }
        let n = self.rows;
        let mut result = CMat::identity(n);
        let mut term = CMat::identity(n);
        for k in 1..=24 {
            term = term.mul(&scaled).scale(C64::new(1.0 / k as f64, 0.0));
            result = result.add(&term);
            if term.norm_fro() <= 1e-17 * result.norm_fro().max(1.0) {
                break;
            }
        }
        for _ in 0..squarings {
            result = result.mul(&result);
        }
        Ok(result)
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn randomish(n: usize, seed: u64) -> CMat {
        // small deterministic fill, no RNG dependency here
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        CMat::from_fn(n, n, |_, _| c(next(), next()))
    }

    #[test]
    fn solve_roundtrip() {
        let a = randomish(5, 7);
        let x = randomish(5, 11).submatrix(0, 0, 5, 2);
        let b = a.mul(&x);
        let xs = a.solve(&b).unwrap();
        assert!(xs.max_diff(&x) < 1e-12);
        let xf = a.solve_fullpiv(&b).unwrap();
        assert!(xf.max_diff(&x) < 1e-12);
    }

    #[test]
    fn inverse_and_det() {
        let a = randomish(4, 3);
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).max_diff(&CMat::identity(4)) < 1e-12);
        let d = a.det().unwrap();
        let dinv = inv.det().unwrap();
        assert!((d * dinv - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn hermitian_eigenvalues_match_invariants() {
        let b = randomish(4, 19);
        let a = b.add(&b.dagger()).scale(c(0.5, 0.0));
        let eig = a.hermitian_eigenvalues().unwrap();
        let tr: f64 = a.trace().re;
        let sum: f64 = eig.iter().sum();
        assert!((tr - sum).abs() < 1e-10);
        let fro2: f64 = a.norm_fro().powi(2);
        let sq: f64 = eig.iter().map(|l| l * l).sum();
        assert!((fro2 - sq).abs() < 1e-9);
        let det = a.det().unwrap();
        let prod: f64 = eig.iter().product();
        assert!((det.re - prod).abs() < 1e-9 && det.im.abs() < 1e-10);
    }

    #[test]
    fn eigenvalues_of_known_matrix() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3
        let a = CMat::from_rows(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)])
            .unwrap();
        let eig = a.hermitian_eigenvalues().unwrap();
        assert!((eig[0] - 1.0).abs() < 1e-12);
        assert!((eig[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_values_against_det() {
        let a = randomish(3, 23);
        let sv = a.singular_values().unwrap();
        let prod: f64 = sv.iter().product();
        let det = a.det().unwrap().norm();
        assert!((prod - det).abs() < 1e-9 * det.max(1.0));
    }

    #[test]
    fn expm_diagonal() {
        let a = CMat::from_rows(2, 2, &[c(0.3, 0.1), c(0.0, 0.0), c(0.0, 0.0), c(-0.2, 0.4)])
            .unwrap();
        let e = a.expm().unwrap();
        assert!((e[(0, 0)] - c(0.3, 0.1).exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - c(-0.2, 0.4).exp()).norm() < 1e-14);
    }

    #[test]
    fn expm_inverse_property() {
        let a = randomish(4, 31).scale(c(0.7, 0.0));
        let e1 = a.expm().unwrap();
        let e2 = a.neg().expm().unwrap();
        assert!(e1.mul(&e2).max_diff(&CMat::identity(4)) < 1e-12);
    }
}
