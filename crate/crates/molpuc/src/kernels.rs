//! Christoffel-Darboux kernels for the CMV families.
//!
//! K^{L,[l]}(z,z') = Σ_{k<l} [φ₂^L^{(k)}(z)]† φ₁^L^{(k)}(z') and
//! K^{R,[l]}(z,z') = Σ_{k<l} φ₁^R^{(k)}(z) [φ₂^R^{(k)}(z')]† reproduce the
//! degree-l truncations; the band structure of the dressed operators
//! compresses (1 - z̄z')K into two boundary terms (four parities, each with
//! a compact and an expanded right-hand side), and the intertwiners relate
//! K^L and K^R across z ↦ 1/z̄.

use crate::cmat::{C64, CMat};
use crate::cmv::Side;
use crate::error::Result;
use crate::families::{CmvFamilies, SzegoFamilies, VerblunskyTable, sesq_left, sesq_right};
use crate::laurent::MatrixLaurentPoly;
use crate::measure::{MatrixMeasure, TWO_PI};

/// Direct definitional sum.
pub fn kernel_eval(fam: &CmvFamilies, side: Side, level: usize, z: C64, zp: C64) -> Result<CMat> {
    let m = fam.m;
    let mut acc = CMat::zeros(m, m);
    for k in 0..level {
        match side {
            Side::Left => {
                let a = fam.phi2l[k].eval(z)?.dagger();
                let b = fam.phi1l[k].eval(zp)?;
                acc = acc.add(&a.mul(&b));
            }
            Side::Right => {
                let a = fam.phi1r[k].eval(z)?;
                let b = fam.phi2r[k].eval(zp)?.dagger();
                acc = acc.add(&a.mul(&b));
            }
        }
    }
    Ok(acc)
}

/// Reproducing property by grid quadrature over the middle variable:
/// K(z,y) = ∮ K(z,z') dμ(z')/(iz') K(z',y).
pub fn reproducing_residual(
    fam: &CmvFamilies,
    measure: &MatrixMeasure,
    side: Side,
    level: usize,
    samples: &[(C64, C64)],
    nodes: usize,
) -> Result<f64> {
    let m = fam.m;
    let mut worst = 0.0f64;
    for &(z, y) in samples {
        let mut acc = CMat::zeros(m, m);
        for t in 0..nodes {
            let theta = TWO_PI * t as f64 / nodes as f64;
            let u = C64::from_polar(1.0, theta);
            let w = measure.weight_eval(theta)?;
            let left = kernel_eval(fam, side, level, z, u)?;
            let right = kernel_eval(fam, side, level, u, y)?;
            acc = acc.add(&left.mul(&w).mul(&right));
        }
        acc = acc.scale(C64::new(TWO_PI / nodes as f64, 0.0));
        let direct = kernel_eval(fam, side, level, z, y)?;
        let scale = direct.norm_max().max(1.0);
        worst = worst.max(acc.max_diff(&direct) / scale);
    }
    Ok(worst)
}

/// Apply the degree-l projector to a Laurent polynomial through the
/// sesquilinear pairings.
pub fn projector_apply(
    fam: &CmvFamilies,
    ms: &crate::measure::MomentSet,
    side: Side,
    level: usize,
    f: &MatrixLaurentPoly,
) -> Result<MatrixLaurentPoly> {
    let mut acc = MatrixLaurentPoly::zero(fam.m);
    for k in 0..level {
        match side {
            Side::Left => {
                let pair = sesq_left(ms, &fam.phi2l[k], f)?;
                acc = acc.add(&fam.phi1l[k].mul_mat_left(&pair));
            }
            Side::Right => {
                let pair = sesq_right(ms, &fam.phi2r[k], f)?;
                acc = acc.add(&fam.phi1r[k].mul_mat_right(&pair));
            }
        }
    }
    Ok(acc)
}

fn scaled_diff(lhs: &CMat, rhs: &CMat) -> f64 {
    let scale = lhs.norm_fro().max(rhs.norm_fro()).max(1.0);
    lhs.max_diff(rhs) / scale
}

/// The four kernel parities, each with the compact and the expanded
/// right-hand side of (1 - z̄z')K = (boundary terms).
pub fn cd_formula_residuals(
    fam: &CmvFamilies,
    table: &VerblunskyTable,
    samples: &[(C64, C64)],
) -> Result<Vec<(String, f64)>> {
    let n = table.len();
    let one = C64::new(1.0, 0.0);
    let mut worst = vec![0.0f64; 8];
    let hl_inv = |k: usize| table.hl[k].solve_fullpiv(&CMat::identity(table.m));
    let hr_inv = |k: usize| table.hr[k].solve_fullpiv(&CMat::identity(table.m));
    for &(z, zp) in samples {
        for l in 1..(n - 1) / 2 {
            // interior guard: highest family index touched is 2l+2
            if 2 * l + 2 >= n {
                continue;
            }
            let zb = z.conj();
            let zpb = zp.conj();

            // L, even level 2l
            let lhs = kernel_eval(fam, Side::Left, 2 * l, z, zp)?.scale(one - zb * zp);
            let compact = {
                let a = fam.phi1r[2 * l]
                    .eval(zb.inv())?
                    .mul(&table.hr[2 * l])
                    .mul(&hr_inv(2 * l - 1)?)
                    .mul(&fam.phi1l[2 * l - 1].eval(zp)?);
                let b = fam.phi1r[2 * l - 1].eval(zb.inv())?.mul(&fam.phi1l[2 * l].eval(zp)?);
                a.sub(&b)
            };
            worst[0] = worst[0].max(scaled_diff(&lhs, &compact));
            let expanded = {
                let psi = |k: usize| fam.phi2l[k].eval_cdag(zb);
                let first = psi(2 * l + 1)?
                    .mul(&table.hr[2 * l + 1])
                    .sub(&psi(2 * l)?.mul(&table.hl[2 * l]).mul(&table.a1r[2 * l + 1]))
                    .scale(zb)
                    .mul(&hr_inv(2 * l - 1)?)
                    .mul(&fam.phi1l[2 * l - 1].eval(zp)?);
                let second = psi(2 * l - 2)?
                    .add(&psi(2 * l - 1)?.mul(&table.a2r_dag[2 * l - 1]))
                    .scale(zb)
                    .mul(&fam.phi1l[2 * l].eval(zp)?);
                first.sub(&second)
            };
            worst[1] = worst[1].max(scaled_diff(&lhs, &expanded));

            // L, odd level 2l+1
            let lhs = kernel_eval(fam, Side::Left, 2 * l + 1, z, zp)?.scale(one - zb * zp);
            let compact = {
                let a = fam.phi2l[2 * l + 1]
                    .eval_cdag(zb)?
                    .scale(zb)
                    .mul(&table.hr[2 * l + 1])
                    .mul(&hr_inv(2 * l)?)
                    .mul(&fam.phi2r[2 * l].eval_cdag(zp.inv())?);
                let b = fam.phi2l[2 * l]
                    .eval_cdag(zb)?
                    .scale(zb)
                    .mul(&fam.phi2r[2 * l + 1].eval_cdag(zp.inv())?);
                a.sub(&b)
            };
            worst[2] = worst[2].max(scaled_diff(&lhs, &compact));
            let expanded = {
                let psi = |k: usize| fam.phi2l[k].eval_cdag(zb);
                let bracket = hr_inv(2 * l - 1)?
                    .mul(&fam.phi1l[2 * l - 1].eval(zp)?)
                    .add(&table.a2l_dag[2 * l].mul(&hl_inv(2 * l)?).mul(&fam.phi1l[2 * l].eval(zp)?));
                let first = psi(2 * l + 1)?.scale(zb).mul(&table.hr[2 * l + 1]).mul(&bracket);
                let second = psi(2 * l)?.scale(zb).mul(
                    &fam.phi1l[2 * l + 2]
                        .eval(zp)?
                        .sub(&table.a1l[2 * l + 2].mul(&fam.phi1l[2 * l + 1].eval(zp)?)),
                );
                first.sub(&second)
            };
            worst[3] = worst[3].max(scaled_diff(&lhs, &expanded));

            // R, even level 2l
            let lhs = kernel_eval(fam, Side::Right, 2 * l, z, zp)?.scale(one - zpb * z);
            let compact = {
                let a = fam.phi2l[2 * l]
                    .eval_cdag(z.inv())?
                    .mul(&table.hl[2 * l])
                    .mul(&hl_inv(2 * l - 1)?)
                    .mul(&fam.phi2r[2 * l - 1].eval(zp)?.dagger());
                let b = fam.phi2l[2 * l - 1]
                    .eval_cdag(z.inv())?
                    .mul(&fam.phi2r[2 * l].eval(zp)?.dagger());
                a.sub(&b)
            };
            worst[4] = worst[4].max(scaled_diff(&lhs, &compact));
            let expanded = {
                let psi_c = |k: usize| -> Result<CMat> { Ok(fam.phi2r[k].eval(zp)?.dagger()) };
                let first = fam.phi1r[2 * l + 1]
                    .eval(z)?
                    .mul(&table.hl[2 * l + 1])
                    .sub(&fam.phi1r[2 * l].eval(z)?.mul(&table.hr[2 * l]).mul(&table.a2l_dag[2 * l + 1]))
                    .scale(z)
                    .mul(&hl_inv(2 * l - 1)?)
                    .mul(&psi_c(2 * l - 1)?);
                let second = fam.phi1r[2 * l - 2]
                    .eval(z)?
                    .add(&fam.phi1r[2 * l - 1].eval(z)?.mul(&table.a1l[2 * l - 1]))
                    .scale(z)
                    .mul(&psi_c(2 * l)?);
                first.sub(&second)
            };
            worst[5] = worst[5].max(scaled_diff(&lhs, &expanded));

            // R, odd level 2l+1
            let lhs = kernel_eval(fam, Side::Right, 2 * l + 1, z, zp)?.scale(one - zpb * z);
            let compact = {
                let a = fam.phi1r[2 * l + 1]
                    .eval(z)?
                    .scale(z)
                    .mul(&table.hl[2 * l + 1])
                    .mul(&hl_inv(2 * l)?)
                    .mul(&fam.phi1l[2 * l].eval(zpb.inv())?);
                let b = fam.phi1r[2 * l]
                    .eval(z)?
                    .scale(z)
                    .mul(&fam.phi1l[2 * l + 1].eval(zpb.inv())?);
                a.sub(&b)
            };
            worst[6] = worst[6].max(scaled_diff(&lhs, &compact));
            let expanded = {
                let psi_c = |k: usize| -> Result<CMat> { Ok(fam.phi2r[k].eval(zp)?.dagger()) };
                let bracket = hl_inv(2 * l - 1)?
                    .mul(&psi_c(2 * l - 1)?)
                    .add(&table.a1r[2 * l].mul(&hr_inv(2 * l)?).mul(&psi_c(2 * l)?));
                let first = fam.phi1r[2 * l + 1].eval(z)?.scale(z).mul(&table.hl[2 * l + 1]).mul(&bracket);
                let second = fam.phi1r[2 * l].eval(z)?.scale(z).mul(
                    &psi_c(2 * l + 2)?.sub(&table.a2r_dag[2 * l + 2].mul(&psi_c(2 * l + 1)?)),
                );
                first.sub(&second)
            };
            worst[7] = worst[7].max(scaled_diff(&lhs, &expanded));
        }
    }
    let names = [
        "cd:L-even:compact",
        "cd:L-even:expanded",
        "cd:L-odd:compact",
        "cd:L-odd:expanded",
        "cd:R-even:compact",
        "cd:R-even:expanded",
        "cd:R-odd:compact",
        "cd:R-odd:expanded",
    ];
    Ok(names.iter().zip(worst).map(|(n, w)| (n.to_string(), w)).collect())
}

/// The kernels rewritten through the Szegő polynomials (four parities).
pub fn szego_kernel_residuals(
    fam: &CmvFamilies,
    szego: &SzegoFamilies,
    table: &VerblunskyTable,
    samples: &[(C64, C64)],
) -> Result<Vec<(String, f64)>> {
    let n = table.len();
    let one = C64::new(1.0, 0.0);
    let mut worst = vec![0.0f64; 4];
    let hl_inv = |k: usize| table.hl[k].solve_fullpiv(&CMat::identity(table.m));
    let hr_inv = |k: usize| table.hr[k].solve_fullpiv(&CMat::identity(table.m));
    let star = |p: &MatrixLaurentPoly, deg: i64| p.reciprocal(deg);
    for &(z, zp) in samples {
        let zb = z.conj();
        let zpb = zp.conj();
        for l in 1..n / 2 {
            if 2 * l + 1 >= n {
                continue;
            }
            // K^{L,[2l]}
            let lhs = kernel_eval(fam, Side::Left, 2 * l, z, zp)?.scale(one - zb * zp);
            let pref = (zb / zp).powi(l as i32);
            let rhs = szego.p1r[2 * l]
                .eval(zb.inv())?
                .mul(&hr_inv(2 * l - 1)?)
                .mul(&star(&szego.p2r[2 * l - 1], (2 * l - 1) as i64).eval(zp)?)
                .sub(
                    &star(&szego.p2l[2 * l - 1], (2 * l - 1) as i64)
                        .eval(zb.inv())?
                        .mul(&hl_inv(2 * l - 1)?)
                        .mul(&szego.p1l[2 * l].eval(zp)?),
                )
                .scale(pref);
            worst[0] = worst[0].max(scaled_diff(&lhs, &rhs));

            // K^{L,[2l+1]}
            let lhs = kernel_eval(fam, Side::Left, 2 * l + 1, z, zp)?.scale(one - zb * zp);
            let pref = zb.powi(l as i32 + 1) * zp.powi(-(l as i32));
            let rhs = szego.p1r[2 * l + 1]
                .eval(zb.inv())?
                .mul(&hr_inv(2 * l)?)
                .mul(&star(&szego.p2r[2 * l], 2 * l as i64).eval(zp)?)
                .sub(
                    &star(&szego.p2l[2 * l], 2 * l as i64)
                        .eval(zb.inv())?
                        .mul(&hl_inv(2 * l)?)
                        .mul(&szego.p1l[2 * l + 1].eval(zp)?),
                )
                .scale(pref);
            worst[1] = worst[1].max(scaled_diff(&lhs, &rhs));

            // K^{R,[2l]}: conjugated evaluations enter through the
            // coefficient-daggered series
            let lhs = kernel_eval(fam, Side::Right, 2 * l, z, zp)?.scale(one - zpb * z);
            let pref = (z / zpb).powi(l as i32);
            let rhs = szego.p2l[2 * l]
                .eval_cdag(z.inv())?
                .mul(&hl_inv(2 * l - 1)?)
                .mul(&star(&szego.p1l[2 * l - 1], (2 * l - 1) as i64).eval_cdag(zpb)?)
                .sub(
                    &star(&szego.p1r[2 * l - 1], (2 * l - 1) as i64)
                        .eval_cdag(z.inv())?
                        .mul(&hr_inv(2 * l - 1)?)
                        .mul(&szego.p2r[2 * l].eval_cdag(zpb)?),
                )
                .scale(pref);
            worst[2] = worst[2].max(scaled_diff(&lhs, &rhs));

            // K^{R,[2l+1]}
            let lhs = kernel_eval(fam, Side::Right, 2 * l + 1, z, zp)?.scale(one - zpb * z);
            let pref = z.powi(l as i32 + 1) * zpb.powi(-(l as i32));
            let rhs = szego.p2l[2 * l + 1]
                .eval_cdag(z.inv())?
                .mul(&hl_inv(2 * l)?)
                .mul(&star(&szego.p1l[2 * l], 2 * l as i64).eval_cdag(zpb)?)
                .sub(
                    &star(&szego.p1r[2 * l], 2 * l as i64)
                        .eval_cdag(z.inv())?
                        .mul(&hr_inv(2 * l)?)
                        .mul(&szego.p2r[2 * l + 1].eval_cdag(zpb)?),
                )
                .scale(pref);
            worst[3] = worst[3].max(scaled_diff(&lhs, &rhs));
        }
    }
    let names = ["cd-szego:L-even", "cd-szego:L-odd", "cd-szego:R-even", "cd-szego:R-odd"];
    Ok(names.iter().zip(worst).map(|(n, w)| (n.to_string(), w)).collect())
}

/// The four relations tying K^R at (z, 1/z̄') to K^L at (1/z̄, z').
pub fn kernel_cross_residuals(
    fam: &CmvFamilies,
    table: &VerblunskyTable,
    samples: &[(C64, C64)],
) -> Result<Vec<(String, f64)>> {
    let n = table.len();
    let id = CMat::identity(table.m);
    let mut worst = vec![0.0f64; 4];
    for &(z, zp) in samples {
        let zr = z.conj().inv();
        let zpr = zp.conj().inv();
        for l in 1..n / 2 {
            if 2 * l + 2 >= n {
                continue;
            }
            // odd equality
            let kr = kernel_eval(fam, Side::Right, 2 * l + 1, z, zpr)?;
            let kl = kernel_eval(fam, Side::Left, 2 * l + 1, zr, zp)?;
            worst[0] = worst[0].max(scaled_diff(&kr, &kl));
            // even difference carries one cross term
            let kr = kernel_eval(fam, Side::Right, 2 * l + 2, z, zpr)?;
            let kl = kernel_eval(fam, Side::Left, 2 * l + 2, zr, zp)?;
            let cross = fam.phi1r[2 * l + 1]
                .eval(z)?
                .mul(&fam.phi1l[2 * l + 2].eval(zp)?)
                .sub(
                    &fam.phi1r[2 * l + 2]
                        .eval(z)?
                        .mul(&id.sub(&table.a2r_dag[2 * l + 2].mul(&table.a1l[2 * l + 2])))
                        .mul(&fam.phi1l[2 * l + 1].eval(zp)?),
                );
            worst[1] = worst[1].max(scaled_diff(&kr.sub(&kl), &cross));
            // scaled odd difference
            let kr = kernel_eval(fam, Side::Right, 2 * l + 1, z, zpr)?.scale(zp.inv());
            let kl = kernel_eval(fam, Side::Left, 2 * l + 1, zr, zp)?.scale(z.inv());
            let cross = fam.phi1r[2 * l]
                .eval(z)?
                .mul(&fam.phi1l[2 * l + 1].eval(zp)?)
                .sub(
                    &fam.phi1r[2 * l + 1]
                        .eval(z)?
                        .mul(&id.sub(&table.a1l[2 * l + 1].mul(&table.a2r_dag[2 * l + 1])))
                        .mul(&fam.phi1l[2 * l].eval(zp)?),
                );
            worst[2] = worst[2].max(scaled_diff(&kr.sub(&kl), &cross));
            // scaled even equality
            let kr = kernel_eval(fam, Side::Right, 2 * l + 2, z, zpr)?.scale(zp.inv());
            let kl = kernel_eval(fam, Side::Left, 2 * l + 2, zr, zp)?.scale(z.inv());
            worst[3] = worst[3].max(scaled_diff(&kr, &kl));
        }
    }
    let names = ["cross:odd-equal", "cross:even-diff", "cross:odd-diff", "cross:even-equal"];
    Ok(names.iter().zip(worst).map(|(n, w)| (n.to_string(), w)).collect())
}

/// Positive semidefiniteness of K(z,z) on the circle for Hermitian
/// positive-definite measures: the most negative eigenvalue relative to the
/// trace, minimized over the samples (should be ≥ -1e-11).
pub fn kernel_diagonal_psd_defect(
    fam: &CmvFamilies,
    level: usize,
    angles: usize,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for t in 0..angles {
        let theta = TWO_PI * t as f64 / angles as f64;
        let z = C64::from_polar(1.0, theta);
        let k = kernel_eval(fam, Side::Left, level, z, z)?;
        let eig = k.hermitian_eigenvalues()?;
        let trace = k.trace().re.max(1e-300);
        worst = worst.max((-eig[0] / trace).max(0.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled::{herm2, lebesgue, nonherm2};
    use crate::cmat::c;
    use crate::cmv::{build_moment_matrix, cmv_power, required_moment_order};
    use crate::factor::{Factorization, block_lu};
    use crate::families::{families_from_factorizations, szego_from_families, verblunsky_extract};
    use crate::measure::MatrixMeasure;
    use crate::sampling::sample_pairs;

    fn setup(mu: &MatrixMeasure, nb: usize) -> (CmvFamilies, Factorization, Factorization) {
        let ms = mu.moments(required_moment_order(nb)).unwrap();
        let gl = build_moment_matrix(&ms, Side::Left, nb).unwrap();
        let gr = build_moment_matrix(&ms, Side::Right, nb).unwrap();
        let fl = block_lu(&gl, Side::Left).unwrap();
        let fr = block_lu(&gr, Side::Right).unwrap();
        let fam = families_from_factorizations(&fl, &fr).unwrap();
        (fam, fl, fr)
    }

    #[test]
    fn lebesgue_kernel_values() {
        let mu = lebesgue();
        let (fam, _, _) = setup(&mu, 6);
        let z = c(0.4, 0.3);
        let zp = c(-0.2, 0.9);
        let k1 = kernel_eval(&fam, Side::Left, 1, z, zp).unwrap();
        assert!((k1[(0, 0)] - c(1.0 / TWO_PI, 0.0)).norm() < 1e-14);
        let k3 = kernel_eval(&fam, Side::Left, 3, z, zp).unwrap();
        let w = z.conj() * zp;
        let expect = (c(1.0, 0.0) + w.inv() + w) / TWO_PI;
        assert!((k3[(0, 0)] - expect).norm() < 1e-13);
        // brute-force sum over explicit χ powers
        let mut brute = c(0.0, 0.0);
        for k in 0..5usize {
            let a = cmv_power(k);
            brute += z.conj().powi(a as i32) * zp.powi(a as i32) / TWO_PI;
        }
        let k5 = kernel_eval(&fam, Side::Left, 5, z, zp).unwrap();
        assert!((k5[(0, 0)] - brute).norm() < 1e-13);
    }

    #[test]
    fn definitional_sum_matches_explicit_polynomials() {
        let mu = herm2();
        let (fam, _, _) = setup(&mu, 8);
        let z = c(0.9, -0.2);
        let zp = c(0.5, 0.6);
        for level in [2usize, 5] {
            let k = kernel_eval(&fam, Side::Right, level, z, zp).unwrap();
            let mut brute = CMat::zeros(2, 2);
            for j in 0..level {
                brute = brute
                    .add(&fam.phi1r[j].eval(z).unwrap().mul(&fam.phi2r[j].eval(zp).unwrap().dagger()));
            }
            assert!(k.max_diff(&brute) < 1e-13);
        }
    }

    #[test]
    fn reproducing_property() {
        let mu = herm2();
        let (fam, _, _) = setup(&mu, 8);
        let samples = sample_pairs(11, &[0.8, 1.0, 1.25], 4);
        for side in [Side::Left, Side::Right] {
            for level in [2usize, 3] {
                let res = reproducing_residual(&fam, &mu, side, level, &samples, 96).unwrap();
                assert!(res < 1e-10, "{side} level {level}: {res:.2e}");
            }
        }
    }

    #[test]
    fn projector_fixes_span_and_is_idempotent() {
        let mu = nonherm2();
        let nb = 10;
        let (fam, _, _) = setup(&mu, nb);
        let ms = mu.moments(required_moment_order(nb) + 4).unwrap();
        // f = z^{-1} + 2 z is in the span of the first 3 CMV components
        let mut f = MatrixLaurentPoly::zero(2);
        f.set_coeff(-1, &CMat::identity(2));
        f.set_coeff(1, &CMat::scalar(2, c(2.0, 0.0)));
        for side in [Side::Left, Side::Right] {
            let once = projector_apply(&fam, &ms, side, 5, &f).unwrap();
            assert!(once.max_diff(&f) < 1e-11, "projector should fix span members");
            // something outside the span: degree 4 monomial, level 5 spans z^{-3}..z^2
            let mut g = MatrixLaurentPoly::zero(2);
            g.set_coeff(4, &CMat::identity(2));
            let pg = projector_apply(&fam, &ms, side, 5, &g).unwrap();
            let pg2 = projector_apply(&fam, &ms, side, 5, &pg).unwrap();
            assert!(pg2.max_diff(&pg) < 1e-10, "projector idempotency");
        }
    }

    #[test]
    fn cd_formulas_all_parities() {
        for mu in [herm2(), nonherm2()] {
            let (fam, fl, fr) = setup(&mu, 14);
            let table = verblunsky_extract(&fl, &fr).unwrap();
            let samples = sample_pairs(42, &[0.8, 1.0, 1.25], 8);
            for (name, res) in cd_formula_residuals(&fam, &table, &samples).unwrap() {
                assert!(res < 1e-9, "{name}: {res:.2e}");
            }
        }
    }

    #[test]
    fn szego_form_kernels() {
        let mu = nonherm2();
        let (fam, fl, fr) = setup(&mu, 12);
        let table = verblunsky_extract(&fl, &fr).unwrap();
        let szego = szego_from_families(&fam, &fl, &fr).unwrap();
        let samples = sample_pairs(42, &[0.8, 1.0, 1.25], 6);
        for (name, res) in szego_kernel_residuals(&fam, &szego, &table, &samples).unwrap() {
            assert!(res < 1e-9, "{name}: {res:.2e}");
        }
    }

    #[test]
    fn cross_relations() {
        let mu = nonherm2();
        let (fam, fl, fr) = setup(&mu, 14);
        let table = verblunsky_extract(&fl, &fr).unwrap();
        let samples = sample_pairs(43, &[0.8, 1.0, 1.25], 6);
        for (name, res) in kernel_cross_residuals(&fam, &table, &samples).unwrap() {
            assert!(res < 1e-9, "{name}: {res:.2e}");
        }
        // Lebesgue: the first relation is a χ-sum identity, exactly zero
        let muleb = lebesgue();
        let (famleb, fll, frl) = setup(&muleb, 10);
        let tableleb = verblunsky_extract(&fll, &frl).unwrap();
        let res = kernel_cross_residuals(&famleb, &tableleb, &samples).unwrap();
        assert!(res[0].1 < 1e-13);
    }

    #[test]
    fn diagonal_kernel_is_psd_for_pd_measures() {
        let mu = herm2();
        let (fam, _, _) = setup(&mu, 8);
        for level in [2usize, 5, 7] {
            let defect = kernel_diagonal_psd_defect(&fam, level, 32).unwrap();
            assert!(defect < 1e-11, "level {level}: defect {defect:.2e}");
        }
    }
}
