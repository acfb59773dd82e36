//! The bundled example measures used by the verification suites and the CLI.

use std::collections::BTreeMap;

use crate::cmat::{CMat, c};
use crate::measure::{MatrixMeasure, MeasureKind};

/// Normalized Lebesgue measure, m = 1: w(θ) = 1.
pub fn lebesgue() -> MatrixMeasure {
    MatrixMeasure::lebesgue(1)
}

/// Bernstein-Szegő measure w(θ) = 1/|1 - a e^{iθ}|², stored as the exact
/// moment list c_n = a^{|n|}/(1 - a²) out to |n| = n_max.
pub fn bernstein_szego(a: f64, n_max: i64) -> MatrixMeasure {
    let mut coeffs = BTreeMap::new();
    for n in -n_max..=n_max {
        let v = a.powi(n.unsigned_abs() as i32) / (1.0 - a * a);
        coeffs.insert(n, CMat::scalar(1, c(v, 0.0)));
    }
    MatrixMeasure::new(1, MeasureKind::MomentList, true, coeffs)
        .expect("Bernstein-Szegő moments are Hermitian")
}

/// 2×2 Hermitian positive-definite trigonometric-polynomial weight.
pub fn herm2() -> MatrixMeasure {
    let a = CMat::from_rows(2, 2, &[c(0.25, 0.0), c(0.15, -0.05), c(-0.1, 0.2), c(0.3, 0.0)])
        .expect("2x2");
    let b = CMat::from_rows(2, 2, &[c(0.05, 0.0), c(0.0, 0.02), c(0.03, 0.0), c(-0.04, 0.0)])
        .expect("2x2");
    let w0 = CMat::from_rows(2, 2, &[c(2.0, 0.0), c(0.3, 0.1), c(0.3, -0.1), c(1.5, 0.0)])
        .expect("2x2");
    let mut coeffs = BTreeMap::new();
    coeffs.insert(0, w0);
    coeffs.insert(1, a.clone());
    coeffs.insert(-1, a.dagger());
    coeffs.insert(2, b.clone());
    coeffs.insert(-2, b.dagger());
    MatrixMeasure::new(2, MeasureKind::TrigPoly, true, coeffs)
        .expect("herm2 weight is positive definite on the circle")
}

/// 2×2 quasi-definite non-Hermitian weight: herm2 with its c_{-1}
/// coefficient perturbed away from the Hermitian pairing.
pub fn nonherm2() -> MatrixMeasure {
    let base = herm2();
    let mut coeffs = base.coeffs().clone();
    let bump = CMat::from_rows(2, 2, &[c(0.08, 0.03), c(-0.05, 0.0), c(0.0, 0.06), c(0.04, -0.02)])
        .expect("2x2");
    let w_minus = coeffs.get(&-1).expect("herm2 has c_-1").add(&bump);
    coeffs.insert(-1, w_minus);
    MatrixMeasure::new(2, MeasureKind::TrigPoly, false, coeffs).expect("valid weight")
}

/// 3×3 Hermitian positive-definite weight, used by the desk-scale coverage
/// tests (not part of the bundled CLI set).
pub fn herm3() -> MatrixMeasure {
    let a = CMat::from_rows(
        3,
        3,
        &[
            c(0.2, 0.0), c(0.1, -0.05), c(0.0, 0.08),
            c(-0.07, 0.12), c(0.25, 0.0), c(0.05, 0.0),
            c(0.03, -0.02), c(0.0, -0.1), c(0.15, 0.0),
        ],
    )
    .expect("3x3");
    let w0 = CMat::from_rows(
        3,
        3,
        &[
            c(2.0, 0.0), c(0.2, 0.1), c(0.0, -0.15),
            c(0.2, -0.1), c(1.8, 0.0), c(0.1, 0.05),
            c(0.0, 0.15), c(0.1, -0.05), c(1.6, 0.0),
        ],
    )
    .expect("3x3");
    let mut coeffs = BTreeMap::new();
    coeffs.insert(0, w0);
    coeffs.insert(1, a.clone());
    coeffs.insert(-1, a.dagger());
    MatrixMeasure::new(3, MeasureKind::TrigPoly, true, coeffs)
        .expect("herm3 weight is positive definite on the circle")
}

/// Name → measure lookup for the bundled set.
pub fn by_name(name: &str) -> Option<MatrixMeasure> {
    match name {
        "lebesgue" => Some(lebesgue()),
        "bernstein_szego" => Some(bernstein_szego(0.5, 64)),
        "herm2" => Some(herm2()),
        "nonherm2" => Some(nonherm2()),
        _ => None,
    }
}

pub const BUNDLED_NAMES: [&str; 4] = ["lebesgue", "bernstein_szego", "herm2", "nonherm2"];
