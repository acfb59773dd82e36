//! Matrix measures on the unit circle and their trigonometric moments.
//!
//! A measure is either a matrix trigonometric-polynomial weight
//! w(θ) = Σ_n W_n e^{inθ} with finitely many coefficients, or an explicit
//! list of moments c_n = (1/2π) ∫ e^{-inθ} dμ(θ). For absolutely continuous
//! measures these coincide (c_n = W_n), which keeps every downstream residual
//! a pure floating-point test. Coherent exponential deformations of a weight
//! are carried alongside the base coefficients and integrated by trapezoid
//! quadrature, which is spectrally accurate on the circle.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cmat::{C64, CMat};
use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureKind {
    #[serde(rename = "trig_poly")]
    TrigPoly,
    #[serde(rename = "moment_list")]
    MomentList,
}

/// Which side of the measure a matrix factor multiplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureSide {
    Left,
    Right,
}

/// Exponential deformation data: diagonal m×m times t_1 (paired with z^{-1})
/// and t_2 (paired with z), acting on the left and on the right of the weight.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Deformation {
    pub left: [Vec<C64>; 2],
    pub right: [Vec<C64>; 2],
}

impl Deformation {
    pub fn zero(m: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); m];
        Deformation { left: [z.clone(), z.clone()], right: [z.clone(), z] }
    }

    pub fn is_zero(&self) -> bool {
        self.left
            .iter()
            .chain(self.right.iter())
            .all(|d| d.iter().all(|v| v.norm() == 0.0))
    }

    /// Deformation factor on one side at the circle point z: for the left,
    /// exp(t_1 z^{-1} + t_2 z); the right factor has the same pairing.
    fn factor(ts: &[Vec<C64>; 2], z: C64) -> CMat {
        let m = ts[0].len();
        let mut f = CMat::zeros(m, m);
        for a in 0..m {
            let e = ts[0][a] / z + ts[1][a] * z;
            f[(a, a)] = e.exp();
        }
        f
    }

    pub fn left_factor(&self, z: C64) -> CMat {
        Self::factor(&self.left, z)
    }

    pub fn right_factor(&self, z: C64) -> CMat {
        Self::factor(&self.right, z)
    }

    /// Hermitian weights stay Hermitian exactly when the right times are the
    /// conjugates of the left times with the z-power pairing swapped:
    /// t^R_1 = (t^L_2)†, t^R_2 = (t^L_1)†.
    pub fn preserves_hermitian(&self) -> bool {
        let conj_swap = |x: &Vec<C64>, y: &Vec<C64>| {
            x.iter().zip(y.iter()).all(|(a, b)| (a.conj() - b).norm() < 1e-14)
        };
        conj_swap(&self.left[1], &self.right[0]) && conj_swap(&self.left[0], &self.right[1])
    }
}

/// An m×m matrix-valued measure on the unit circle.
#[derive(Clone, Debug)]
pub struct MatrixMeasure {
    m: usize,
    kind: MeasureKind,
    hermitian: bool,
    coeffs: BTreeMap<i64, CMat>,
    deformation: Option<Deformation>,
}

/// Moments c_{-n_max}..c_{n_max}.
#[derive(Clone, Debug)]
pub struct MomentSet {
    m: usize,
    n_max: i64,
    data: Vec<CMat>,
}

impl MomentSet {
    pub fn new(m: usize, n_max: i64, data: Vec<CMat>) -> Result<Self> {
        if data.len() as i64 != 2 * n_max + 1 {
            return Err(Error::Dimension(format!(
                "moment set must hold {} matrices, got {}",
                2 * n_max + 1,
                data.len()
            )));
        }
        Ok(MomentSet { m, n_max, data })
    }

    pub fn block_size(&self) -> usize {
        self.m
    }

    pub fn n_max(&self) -> i64 {
        self.n_max
    }

    pub fn get(&self, n: i64) -> Result<&CMat> {
        if n.abs() > self.n_max {
            return Err(Error::InsufficientMoments(n));
        }
        Ok(&self.data[(n + self.n_max) as usize])
    }

    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.data.iter().map(|c| c.norm_max()).fold(0.0, f64::max).max(1e-300);
        let mut worst = 0.0f64;
        for n in 0..=self.n_max {
            let a = self.get(-n).unwrap();
            let b = self.get(n).unwrap().dagger();
            worst = worst.max(a.max_diff(&b));
        }
        worst / scale
    }
}

impl MatrixMeasure {
    pub fn new(
        m: usize,
        kind: MeasureKind,
        hermitian: bool,
        coeffs: BTreeMap<i64, CMat>,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("block size m must be positive".into()));
        }
        for (n, w) in &coeffs {
            if w.rows() != m || w.cols() != m {
                return Err(Error::Config(format!("coefficient {n} is not {m}x{m}")));
            }
        }
        let measure = MatrixMeasure { m, kind, hermitian, coeffs, deformation: None };
        if hermitian {
            let defect = measure.coeff_hermitian_defect();
            if defect > 1e-13 {
                return Err(Error::Config(format!(
                    "declared Hermitian but c_-n vs c_n^† deviates by {defect:.3e} (relative)"
                )));
            }
        }
        if kind == MeasureKind::TrigPoly && hermitian {
            let min_eig = measure.min_weight_eigenvalue_on_grid(2048)?;
            if min_eig <= 0.0 {
                return Err(Error::Config(format!(
                    "Hermitian weight is not positive definite on the circle (min eig {min_eig:.3e})"
                )));
            }
        }
        Ok(measure)
    }

    /// Normalized Lebesgue-type measure: w(θ) = I.
    pub fn lebesgue(m: usize) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(0, CMat::identity(m));
        MatrixMeasure { m, kind: MeasureKind::TrigPoly, hermitian: true, coeffs, deformation: None }
    }

    pub fn block_size(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, CMat> {
        &self.coeffs
    }

    pub fn deformation(&self) -> Option<&Deformation> {
        self.deformation.as_ref()
    }

    /// Largest |n| with a stored coefficient.
    pub fn bandwidth(&self) -> i64 {
        self.coeffs.keys().map(|n| n.abs()).max().unwrap_or(0)
    }

    fn coeff_hermitian_defect(&self) -> f64 {
        let scale = self.coeffs.values().map(|c| c.norm_max()).fold(0.0, f64::max).max(1e-300);
        let zero = CMat::zeros(self.m, self.m);
        let mut worst = 0.0f64;
        for (n, w) in &self.coeffs {
            let other = self.coeffs.get(&-n).unwrap_or(&zero);
            worst = worst.max(w.dagger().max_diff(other));
        }
        worst / scale
    }

    /// Attach an exponential deformation (trig-poly weights only).
    pub fn deformed(&self, times: &Deformation) -> Result<MatrixMeasure> {
        if self.kind != MeasureKind::TrigPoly {
            return Err(Error::Config(
                "exponential deformation needs a trig_poly weight, not a bare moment list".into(),
            ));
        }
        if times.left[0].len() != self.m {
            return Err(Error::Dimension("deformation diagonal has wrong size".into()));
        }
        if times.is_zero() {
            return Ok(self.clone());
        }
        let mut combined = times.clone();
        if let Some(existing) = &self.deformation {
            for j in 0..2 {
                for a in 0..self.m {
                    combined.left[j][a] += existing.left[j][a];
                    combined.right[j][a] += existing.right[j][a];
                }
            }
        }
        let hermitian = self.hermitian && combined.preserves_hermitian();
        Ok(MatrixMeasure {
            m: self.m,
            kind: self.kind,
            hermitian,
            coeffs: self.coeffs.clone(),
            deformation: Some(combined),
        })
    }

    /// Pointwise weight at θ, including any deformation factors.
    pub fn weight_eval(&self, theta: f64) -> Result<CMat> {
        if self.kind != MeasureKind::TrigPoly {
            return Err(Error::Domain("moment_list measures have no pointwise weight".into()));
        }
        let z = Complex64::from_polar(1.0, theta);
        let mut w = CMat::zeros(self.m, self.m);
        for (n, coeff) in &self.coeffs {
            w = w.add(&coeff.scale(z.powi(*n as i32)));
        }
        if let Some(d) = &self.deformation {
            w = d.left_factor(z).mul(&w).mul(&d.right_factor(z));
        }
        Ok(w)
    }

    fn min_weight_eigenvalue_on_grid(&self, nodes: usize) -> Result<f64> {
        let mut min_eig = f64::INFINITY;
        for k in 0..nodes {
            let theta = TWO_PI * k as f64 / nodes as f64;
            let w = self.weight_eval(theta)?;
            let eig = w.hermitian_eigenvalues()?;
            min_eig = min_eig.min(eig[0]);
        }
        Ok(min_eig)
    }

    /// Moments c_n for |n| ≤ n_max. Trig-poly weights are read off exactly;
    /// moment lists are sliced; deformed weights go through the trapezoid
    /// rule with the node count raised until the values stop moving.
    pub fn moments(&self, n_max: i64) -> Result<MomentSet> {
        if n_max < 0 {
            return Err(Error::Domain("n_max must be nonnegative".into()));
        }
        match (&self.deformation, self.kind) {
            (None, MeasureKind::TrigPoly) => {
                let zero = CMat::zeros(self.m, self.m);
                let data = (-n_max..=n_max)
                    .map(|n| self.coeffs.get(&n).unwrap_or(&zero).clone())
                    .collect();
                MomentSet::new(self.m, n_max, data)
            }
            (None, MeasureKind::MomentList) => {
                let mut data = Vec::with_capacity((2 * n_max + 1) as usize);
                for n in -n_max..=n_max {
                    match self.coeffs.get(&n) {
                        Some(c) => data.push(c.clone()),
                        None => return Err(Error::InsufficientMoments(n)),
                    }
                }
                MomentSet::new(self.m, n_max, data)
            }
            (Some(_), _) => self.moments_by_quadrature(n_max),
        }
    }

    /// Trapezoid moments on M uniform nodes; exact for bandlimited
    /// integrands with M > bandwidth, and super-geometrically convergent for
    /// the exponential deformation factors.
    pub fn moments_quadrature_fixed(&self, n_max: i64, nodes: usize) -> Result<MomentSet> {
        let mut sums = vec![CMat::zeros(self.m, self.m); (2 * n_max + 1) as usize];
        for k in 0..nodes {
            let theta = TWO_PI * k as f64 / nodes as f64;
            let w = self.weight_eval(theta)?;
            for (idx, n) in (-n_max..=n_max).enumerate() {
                let phase = Complex64::from_polar(1.0, -(n as f64) * theta);
                sums[idx] = sums[idx].add(&w.scale(phase));
            }
        }
        let scale = C64::new(1.0 / nodes as f64, 0.0);
        let data = sums.into_iter().map(|s| s.scale(scale)).collect();
        MomentSet::new(self.m, n_max, data)
    }

    fn moments_by_quadrature(&self, n_max: i64) -> Result<MomentSet> {
        let base = 4 * (self.bandwidth() + n_max) as usize + 1;
        let mut nodes = base.max(128);
        let mut current = self.moments_quadrature_fixed(n_max, nodes)?;
        for _ in 0..5 {
            let refined = self.moments_quadrature_fixed(n_max, 2 * nodes)?;
            let mut diff = 0.0f64;
            let mut scale = 1e-300f64;
            for n in -n_max..=n_max {
                diff = diff.max(current.get(n)?.max_diff(refined.get(n)?));
                scale = scale.max(refined.get(n)?.norm_max());
            }
            current = refined;
            nodes *= 2;
            if diff <= 1e-14 * scale.max(1.0) {
                break;
            }
        }
        Ok(current)
    }

    /// Fourier series of the measure, F(z) = Σ c_n z^n over the stored
    /// support; deformed measures pick up their exponential factors.
    pub fn fourier_series_eval(&self, z: C64) -> Result<CMat> {
        if z.norm() == 0.0 {
            return Err(Error::Domain("Fourier series is undefined at z = 0".into()));
        }
        let mut f = CMat::zeros(self.m, self.m);
        for (n, coeff) in &self.coeffs {
            f = f.add(&coeff.scale(z.powi(*n as i32)));
        }
        if let Some(d) = &self.deformation {
            f = d.left_factor(z).mul(&f).mul(&d.right_factor(z));
        }
        Ok(f)
    }

    /// Σ c_n^† z^n over the stored support (coefficients daggered, powers
    /// kept). Undeformed measures only.
    pub fn fourier_series_eval_dagger(&self, z: C64) -> Result<CMat> {
        if z.norm() == 0.0 {
            return Err(Error::Domain("Fourier series is undefined at z = 0".into()));
        }
        if self.deformation.is_some() {
            return Err(Error::Domain("daggered Fourier series of a deformed weight".into()));
        }
        let mut f = CMat::zeros(self.m, self.m);
        for (n, coeff) in &self.coeffs {
            f = f.add(&coeff.dagger().scale(z.powi(*n as i32)));
        }
        Ok(f)
    }

    /// Multiply the measure by the linear factor (I - d z^s) on the given
    /// side, s = +1 or -1, d an m×m matrix (typically diagonal). Coefficients
    /// transform as c'_n = c_n - d c_{n-s} (left) or c_n - c_{n-s} d (right).
    pub fn multiply_linear_factor(
        &self,
        side: MeasureSide,
        s: i64,
        d: &CMat,
    ) -> Result<MatrixMeasure> {
        if s != 1 && s != -1 {
            return Err(Error::Domain("linear factor power must be +1 or -1".into()));
        }
        if d.rows() != self.m || d.cols() != self.m {
            return Err(Error::Dimension("linear factor coefficient must be m x m".into()));
        }
        let zero = CMat::zeros(self.m, self.m);
        let mut coeffs = BTreeMap::new();
        match self.kind {
            MeasureKind::TrigPoly => {
                let k = self.bandwidth();
                for n in -(k + 1)..=(k + 1) {
                    let base = self.coeffs.get(&n).unwrap_or(&zero);
                    let shifted = self.coeffs.get(&(n - s)).unwrap_or(&zero);
                    let term = match side {
                        MeasureSide::Left => d.mul(shifted),
                        MeasureSide::Right => shifted.mul(d),
                    };
                    let val = base.sub(&term);
                    if val.norm_max() > 0.0 {
                        coeffs.insert(n, val);
                    }
                }
                if coeffs.is_empty() {
                    coeffs.insert(0, zero.clone());
                }
            }
            MeasureKind::MomentList => {
                let n_max = self.bandwidth() - 1;
                if n_max < 0 {
                    return Err(Error::InsufficientMoments(0));
                }
                for n in -n_max..=n_max {
                    let base =
                        self.coeffs.get(&n).ok_or(Error::InsufficientMoments(n))?;
                    let shifted =
                        self.coeffs.get(&(n - s)).ok_or(Error::InsufficientMoments(n - s))?;
                    let term = match side {
                        MeasureSide::Left => d.mul(shifted),
                        MeasureSide::Right => shifted.mul(d),
                    };
                    coeffs.insert(n, base.sub(&term));
                }
            }
        }
        let mut out = MatrixMeasure {
            m: self.m,
            kind: self.kind,
            hermitian: false,
            coeffs,
            deformation: self.deformation.clone(),
        };
        out.hermitian = out.coeff_hermitian_defect() < 1e-13;
        Ok(out)
    }

    /// Stable content hash of the measure configuration.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("m={};kind={:?};herm={}", self.m, self.kind, self.hermitian));
        for (n, c) in &self.coeffs {
            hasher.update(format!(";{n}:"));
            for v in c.data() {
                hasher.update(v.re.to_bits().to_le_bytes());
                hasher.update(v.im.to_bits().to_le_bytes());
            }
        }
        if let Some(d) = &self.deformation {
            for part in d.left.iter().chain(d.right.iter()) {
                for v in part {
                    hasher.update(v.re.to_bits().to_le_bytes());
                    hasher.update(v.im.to_bits().to_le_bytes());
                }
            }
        }
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_config(&self) -> MeasureConfig {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(n, c)| {
                let rows = (0..self.m)
                    .map(|i| (0..self.m).map(|j| [c[(i, j)].re, c[(i, j)].im]).collect())
                    .collect();
                (n.to_string(), rows)
            })
            .collect();
        MeasureConfig { m: self.m, kind: self.kind, hermitian: self.hermitian, coeffs }
    }

    pub fn from_config(cfg: &MeasureConfig) -> Result<MatrixMeasure> {
        let mut coeffs = BTreeMap::new();
        for (key, rows) in &cfg.coeffs {
            let n: i64 = key
                .parse()
                .map_err(|_| Error::Config(format!("coefficient key '{key}' is not an integer")))?;
            if rows.len() != cfg.m {
                return Err(Error::Config(format!("coefficient {n} has {} rows", rows.len())));
            }
            let mut mat = CMat::zeros(cfg.m, cfg.m);
            for (i, row) in rows.iter().enumerate() {
                if row.len() != cfg.m {
                    return Err(Error::Config(format!("coefficient {n} row {i} is ragged")));
                }
                for (j, pair) in row.iter().enumerate() {
                    mat[(i, j)] = C64::new(pair[0], pair[1]);
                }
            }
            coeffs.insert(n, mat);
        }
        MatrixMeasure::new(cfg.m, cfg.kind, cfg.hermitian, coeffs)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_config()).expect("measure config serializes")
    }

    pub fn from_json(text: &str) -> Result<MatrixMeasure> {
        let cfg: MeasureConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("bad measure JSON: {e}")))?;
        MatrixMeasure::from_config(&cfg)
    }
}

/// On-disk measure description. Complex entries are [re, im]; matrices are
/// row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub m: usize,
    pub kind: MeasureKind,
    pub hermitian: bool,
    pub coeffs: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmat::c;
    use proptest::prelude::*;

    fn two_by_two_example() -> MatrixMeasure {
        // w(θ) = I + A e^{iθ} + A† e^{-iθ}, A = [[0, 1/4], [0, 0]]
        let mut coeffs = BTreeMap::new();
        let a = CMat::from_rows(2, 2, &[c(0.0, 0.0), c(0.25, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        coeffs.insert(0, CMat::identity(2));
        coeffs.insert(1, a.clone());
        coeffs.insert(-1, a.dagger());
        MatrixMeasure::new(2, MeasureKind::TrigPoly, true, coeffs).unwrap()
    }

    #[test]
    fn lebesgue_moments() {
        let mu = MatrixMeasure::lebesgue(1);
        let ms = mu.moments(2).unwrap();
        assert_eq!(ms.get(0).unwrap()[(0, 0)], c(1.0, 0.0));
        for n in [-2i64, -1, 1, 2] {
            assert_eq!(ms.get(n).unwrap().norm_max(), 0.0);
        }
    }

    #[test]
    fn trig_poly_moments_read_off() {
        let mu = two_by_two_example();
        let ms = mu.moments(3).unwrap();
        assert_eq!(ms.get(0).unwrap().max_diff(&CMat::identity(2)), 0.0);
        assert!((ms.get(1).unwrap()[(0, 1)] - c(0.25, 0.0)).norm() == 0.0);
        assert!((ms.get(-1).unwrap()[(1, 0)] - c(0.25, 0.0)).norm() == 0.0);
        assert_eq!(ms.get(2).unwrap().norm_max(), 0.0);
        assert!(ms.hermitian_defect() < 1e-15);
    }

    #[test]
    fn quadrature_matches_read_off() {
        let mu = two_by_two_example();
        let exact = mu.moments(4).unwrap();
        let k = mu.bandwidth();
        let nodes = (2 * (k + 4) + 1) as usize;
        let quad = mu.moments_quadrature_fixed(4, nodes).unwrap();
        let quad2 = mu.moments_quadrature_fixed(4, 2 * nodes).unwrap();
        for n in -4..=4 {
            assert!(exact.get(n).unwrap().max_diff(quad.get(n).unwrap()) < 1e-13);
            assert!(quad.get(n).unwrap().max_diff(quad2.get(n).unwrap()) < 1e-13);
        }
    }

    #[test]
    fn fourier_series_matches_weight_on_circle() {
        let mu = two_by_two_example();
        for k in 0..7 {
            let theta = TWO_PI * k as f64 / 7.0;
            let z = Complex64::from_polar(1.0, theta);
            let f = mu.fourier_series_eval(z).unwrap();
            let w = mu.weight_eval(theta).unwrap();
            assert!(f.max_diff(&w) < 1e-13);
        }
    }

    #[test]
    fn fourier_series_rejects_origin() {
        let mu = MatrixMeasure::lebesgue(1);
        assert!(mu.fourier_series_eval(c(0.0, 0.0)).is_err());
        assert!((mu.fourier_series_eval(c(0.5, 0.0)).unwrap()[(0, 0)] - c(1.0, 0.0)).norm() == 0.0);
    }

    #[test]
    fn moment_list_slicing_and_errors() {
        let mut coeffs = BTreeMap::new();
        for n in -3i64..=3 {
            coeffs.insert(n, CMat::scalar(1, c(0.5f64.powi(n.unsigned_abs() as i32), 0.0)));
        }
        let mu = MatrixMeasure::new(1, MeasureKind::MomentList, true, coeffs).unwrap();
        assert!(mu.moments(3).is_ok());
        match mu.moments(4) {
            Err(Error::InsufficientMoments(n)) => assert_eq!(n, -4),
            other => panic!("expected InsufficientMoments, got {other:?}"),
        }
    }

    #[test]
    fn hermitian_flag_is_checked() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(0, CMat::identity(1));
        coeffs.insert(1, CMat::scalar(1, c(0.3, 0.0)));
        // missing c_{-1} = 0.3 makes the hermitian claim false
        assert!(MatrixMeasure::new(1, MeasureKind::MomentList, true, coeffs.clone()).is_err());
        coeffs.insert(-1, CMat::scalar(1, c(0.3, 0.0)));
        assert!(MatrixMeasure::new(1, MeasureKind::MomentList, true, coeffs).is_ok());
    }

    #[test]
    fn linear_factor_left() {
        // (1 - 0.5 z) on Lebesgue: c'_0 = 1, c'_1 = -0.5
        let mu = MatrixMeasure::lebesgue(1);
        let d = CMat::scalar(1, c(0.5, 0.0));
        let shifted = mu.multiply_linear_factor(MeasureSide::Left, 1, &d).unwrap();
        let ms = shifted.moments(1).unwrap();
        assert!((ms.get(0).unwrap()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((ms.get(1).unwrap()[(0, 0)] - c(-0.5, 0.0)).norm() < 1e-15);
        assert_eq!(ms.get(-1).unwrap().norm_max(), 0.0);
    }

    #[test]
    fn deformed_moments_against_series() {
        // m=1 Lebesgue with exp(t/z): c_{-n} = t^n / n!, c_n = 0 for n > 0
        let mu = MatrixMeasure::lebesgue(1);
        let t = 0.3;
        let mut times = Deformation::zero(1);
        times.left[0][0] = c(t, 0.0);
        let def = mu.deformed(&times).unwrap();
        let ms = def.moments(4).unwrap();
        let mut fact = 1.0;
        for n in 0..=4i64 {
            if n > 0 {
                fact *= n as f64;
            }
            let expect = t.powi(n as i32) / fact;
            assert!((ms.get(-n).unwrap()[(0, 0)] - c(expect, 0.0)).norm() < 1e-13);
            if n > 0 {
                assert!(ms.get(n).unwrap().norm_max() < 1e-13);
            }
        }
    }

    #[test]
    fn config_roundtrip() {
        let mu = two_by_two_example();
        let text = mu.to_json();
        let back = MatrixMeasure::from_json(&text).unwrap();
        assert_eq!(back.fingerprint(), mu.fingerprint());
    }

    proptest! {
        #[test]
        fn random_hermitian_weights_have_hermitian_moments(
            entries in proptest::collection::vec(-0.3f64..0.3, 8),
            diag in 1.5f64..3.0,
        ) {
            // w = d·I + A e^{iθ} + A† e^{-iθ} with ‖A‖ small vs d, so PD holds
            let a = CMat::from_rows(2, 2, &[
                c(entries[0], entries[1]), c(entries[2], entries[3]),
                c(entries[4], entries[5]), c(entries[6], entries[7]),
            ]).unwrap();
            let mut coeffs = BTreeMap::new();
            coeffs.insert(0, CMat::scalar(2, c(diag, 0.0)));
            coeffs.insert(1, a.clone());
            coeffs.insert(-1, a.dagger());
            let mu = MatrixMeasure::new(2, MeasureKind::TrigPoly, true, coeffs).unwrap();
            let ms = mu.moments(3).unwrap();
            prop_assert!(ms.hermitian_defect() < 1e-13);
            // quadrature reproduces the read-off at two resolutions
            let q1 = mu.moments_quadrature_fixed(3, 9).unwrap();
            let q2 = mu.moments_quadrature_fixed(3, 18).unwrap();
            for n in -3i64..=3 {
                prop_assert!(ms.get(n).unwrap().max_diff(q1.get(n).unwrap()) < 1e-13);
                prop_assert!(q1.get(n).unwrap().max_diff(q2.get(n).unwrap()) < 1e-13);
            }
        }
    }
}
