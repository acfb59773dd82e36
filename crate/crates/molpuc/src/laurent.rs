//! Finite Laurent polynomials with m×m matrix coefficients.

use std::collections::BTreeMap;

use crate::cmat::{C64, CMat};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixLaurentPoly {
    m: usize,
    coeffs: BTreeMap<i64, CMat>,
}

impl MatrixLaurentPoly {
    pub fn zero(m: usize) -> Self {
        MatrixLaurentPoly { m, coeffs: BTreeMap::new() }
    }

    pub fn constant(mat: CMat) -> Self {
        let m = mat.rows();
        let mut p = MatrixLaurentPoly::zero(m);
        p.add_coeff(0, &mat);
        p
    }

    pub fn block_size(&self) -> usize {
        self.m
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, CMat> {
        &self.coeffs
    }

    pub fn coeff(&self, k: i64) -> CMat {
        self.coeffs.get(&k).cloned().unwrap_or_else(|| CMat::zeros(self.m, self.m))
    }

    pub fn set_coeff(&mut self, k: i64, c: &CMat) {
        assert_eq!((c.rows(), c.cols()), (self.m, self.m));
        if c.norm_max() == 0.0 {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, c.clone());
        }
    }

    pub fn add_coeff(&mut self, k: i64, c: &CMat) {
        let cur = self.coeff(k);
        self.set_coeff(k, &cur.add(c));
    }

    pub fn min_power(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_power(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm_max(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_max()).fold(0.0, f64::max)
    }

    /// Evaluate Σ c_k z^k. z = 0 is allowed only when no negative powers
    /// are present (then the value is the constant coefficient).
    pub fn eval(&self, z: C64) -> Result<CMat> {
        if z.norm() == 0.0 {
            if let Some(min) = self.min_power() {
                if min < 0 {
                    return Err(Error::Domain(format!(
                        "Laurent polynomial with lowest power {min} is undefined at z = 0"
                    )));
                }
            }
            return Ok(self.coeff(0));
        }
        let mut acc = CMat::zeros(self.m, self.m);
        for (k, c) in &self.coeffs {
            acc = acc.add(&c.scale(z.powi(*k as i32)));
        }
        Ok(acc)
    }

    /// Evaluate the coefficient-daggered series Σ c_k^† z^k, i.e. the value
    /// of (p(z̄))^† as a function of z.
    pub fn eval_cdag(&self, z: C64) -> Result<CMat> {
        if z.norm() == 0.0 {
            if let Some(min) = self.min_power() {
                if min < 0 {
                    return Err(Error::Domain("undefined at z = 0".into()));
                }
            }
            return Ok(self.coeff(0).dagger());
        }
        let mut acc = CMat::zeros(self.m, self.m);
        for (k, c) in &self.coeffs {
            acc = acc.add(&c.dagger().scale(z.powi(*k as i32)));
        }
        Ok(acc)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.coeffs {
            out.add_coeff(*k, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.coeffs {
            out.add_coeff(*k, &c.neg());
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let coeffs = self.coeffs.iter().map(|(k, c)| (*k, c.scale(s))).collect();
        MatrixLaurentPoly { m: self.m, coeffs }
    }

    /// Left-multiply every coefficient: q(z) = M p(z).
    pub fn mul_mat_left(&self, mat: &CMat) -> Self {
        let coeffs = self.coeffs.iter().map(|(k, c)| (*k, mat.mul(c))).collect();
        MatrixLaurentPoly { m: self.m, coeffs }
    }

    /// Right-multiply every coefficient: q(z) = p(z) M.
    pub fn mul_mat_right(&self, mat: &CMat) -> Self {
        let coeffs = self.coeffs.iter().map(|(k, c)| (*k, c.mul(mat))).collect();
        MatrixLaurentPoly { m: self.m, coeffs }
    }

    /// Shift powers: q(z) = z^p p(z).
    pub fn mul_zpow(&self, p: i64) -> Self {
        let coeffs = self.coeffs.iter().map(|(k, c)| (k + p, c.clone())).collect();
        MatrixLaurentPoly { m: self.m, coeffs }
    }

    /// Reciprocal polynomial of a degree-l polynomial: coefficients
    /// (p*)_k = (p_{l-k})^†, so p*(z) = z^l (p(1/z̄))^†.
    pub fn reciprocal(&self, l: i64) -> Self {
        let coeffs = self.coeffs.iter().map(|(k, c)| (l - k, c.dagger())).collect();
        MatrixLaurentPoly { m: self.m, coeffs }
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for k in self.coeffs.keys().chain(other.coeffs.keys()) {
            worst = worst.max(self.coeff(*k).max_diff(&other.coeff(*k)));
        }
        worst
    }

    /// A genuine monic degree-l matrix polynomial: powers within [0, l] and
    /// leading coefficient I, up to `tol` in max norm.
    pub fn monic_defect(&self, l: i64) -> f64 {
        let mut defect = self.coeff(l).max_diff(&CMat::identity(self.m));
        for (k, c) in &self.coeffs {
            if *k < 0 || *k > l {
                defect = defect.max(c.norm_max());
            }
        }
        defect
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmat::c;
    use proptest::prelude::*;

    #[test]
    fn eval_and_shift() {
        let mut p = MatrixLaurentPoly::zero(1);
        p.set_coeff(-1, &CMat::scalar(1, c(2.0, 0.0)));
        p.set_coeff(1, &CMat::scalar(1, c(1.0, 0.0)));
        let z = c(2.0, 0.0);
        assert!((p.eval(z).unwrap()[(0, 0)] - c(3.0, 0.0)).norm() < 1e-15);
        let q = p.mul_zpow(1);
        assert!((q.eval(z).unwrap()[(0, 0)] - c(6.0, 0.0)).norm() < 1e-15);
        assert!(p.eval(c(0.0, 0.0)).is_err());
    }

    #[test]
    fn cdag_matches_pointwise_dagger() {
        let mut p = MatrixLaurentPoly::zero(2);
        p.set_coeff(0, &CMat::from_rows(2, 2, &[c(1.0, 2.0), c(0.5, -1.0), c(0.0, 0.3), c(2.0, 0.0)]).unwrap());
        p.set_coeff(2, &CMat::from_rows(2, 2, &[c(0.0, 1.0), c(0.2, 0.0), c(-0.4, 0.1), c(0.0, 0.0)]).unwrap());
        let z = c(0.3, -0.8);
        let lhs = p.eval_cdag(z).unwrap();
        let rhs = p.eval(z.conj()).unwrap().dagger();
        assert!(lhs.max_diff(&rhs) < 1e-14);
    }

    proptest! {
        #[test]
        fn reciprocal_is_an_involution(coeffs in proptest::collection::vec(-1.0f64..1.0, 12)) {
            let mut p = MatrixLaurentPoly::zero(1);
            for (k, pair) in coeffs.chunks(2).enumerate() {
                p.set_coeff(k as i64, &CMat::scalar(1, c(pair[0], pair[1])));
            }
            let l = 5i64;
            let twice = p.reciprocal(l).reciprocal(l);
            prop_assert!(twice.max_diff(&p) < 1e-14);
            // and p*(z) = z^l (p(1/z̄))^† at a point
            let z = c(0.7, 0.35);
            let direct = p.reciprocal(l).eval(z).unwrap();
            let via_def = p.eval(z.conj().inv()).unwrap().dagger().scale(z.powi(l as i32));
            prop_assert!(direct.max_diff(&via_def) < 1e-12);
        }
    }
}
