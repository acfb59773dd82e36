//! Randomized-measure sweep: the core identity suites must hold for any
//! quasi-definite measure, not just the bundled ones. Measures are drawn
//! from a seeded generator as diagonally dominant Hermitian trig-poly
//! weights (positive definite by construction), optionally perturbed away
//! from Hermitian symmetry while staying quasi-definite.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use molpuc::cmat::{CMat, c};
use molpuc::cmv::{Side, build_moment_matrix, required_moment_order};
use molpuc::factor::block_lu;
use molpuc::measure::{MatrixMeasure, MeasureKind};
use molpuc::verify::{VerifyConfig, run_suite};

fn random_measure(seed: u64, m: usize, k_band: i64, hermitian: bool) -> MatrixMeasure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entry = |scale: f64| c(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
    let mut coeffs: BTreeMap<i64, CMat> = BTreeMap::new();
    // diagonal dominance: w0 ≈ 2I keeps the weight positive definite for
    // side coefficients of size ~1/(4 k_band)
    let mut w0 = CMat::scalar(m, c(2.0, 0.0));
    for i in 0..m {
        for j in 0..i {
            let v = entry(0.15);
            w0[(i, j)] = v;
            w0[(j, i)] = v.conj();
        }
    }
    coeffs.insert(0, w0);
    for n in 1..=k_band {
        let a = CMat::from_fn(m, m, |_, _| entry(0.25 / k_band as f64));
        coeffs.insert(n, a.clone());
        coeffs.insert(-n, a.dagger());
    }
    if !hermitian {
        for n in 1..=k_band {
            let bump = CMat::from_fn(m, m, |_, _| entry(0.05));
            let cur = coeffs.get(&-n).unwrap().add(&bump);
            coeffs.insert(-n, cur);
        }
    }
    MatrixMeasure::new(m, MeasureKind::TrigPoly, hermitian, coeffs).expect("valid random weight")
}

#[test]
fn core_suites_hold_on_random_measures() {
    let cfg = VerifyConfig { blocks: 10, seed: 5, tol: None };
    for seed in [3u64, 17, 91] {
        for (m, band) in [(1usize, 2i64), (2, 1), (3, 1)] {
            for hermitian in [true, false] {
                let mu = random_measure(seed, m, band, hermitian);
                for suite in
                    ["structure", "factorize", "biorthogonality", "polys", "recursion", "cd", "kernels-cross"]
                {
                    let out = run_suite(&mu, suite, &cfg)
                        .unwrap_or_else(|e| panic!("{suite} on seed {seed} m={m}: {e}"));
                    for r in &out.reports {
                        assert!(
                            r.pass,
                            "seed {seed} m={m} herm={hermitian} {suite}/{}: {:.3e} (tol {:.1e})",
                            r.check, r.max_residual, r.tol
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn reconstruction_at_n32() {
    let mu = random_measure(7, 2, 2, true);
    let nb = 32;
    let ms = mu.moments(required_moment_order(nb)).unwrap();
    let gl = build_moment_matrix(&ms, Side::Left, nb).unwrap();
    let gr = build_moment_matrix(&ms, Side::Right, nb).unwrap();
    let fl = block_lu(&gl, Side::Left).unwrap();
    let fr = block_lu(&gr, Side::Right).unwrap();
    assert!(fl.reconstruction_residual(&gl) < 1e-11);
    assert!(fr.reconstruction_residual(&gr) < 1e-11);
}

#[test]
fn scan_reports_mid_level_degeneracy() {
    // moment list engineered so the 2-block truncation of g^L is singular:
    // with c_0 = I, c_{-1} = c_1 = I (scalar), the leading 2x2 minor
    // [[1, 1], [1, 1]] degenerates while level 1 passes
    let mut coeffs = BTreeMap::new();
    for n in -2i64..=2 {
        coeffs.insert(n, CMat::scalar(1, c(1.0, 0.0)));
    }
    let mu = MatrixMeasure::new(1, MeasureKind::MomentList, true, coeffs).unwrap();
    let ms = mu.moments(2).unwrap();
    let g = build_moment_matrix(&ms, Side::Left, 3).unwrap();
    let scan = molpuc::factor::quasi_definiteness_scan(&g);
    assert!(scan[0].pass);
    assert!(!scan[1].pass);
    match block_lu(&g, Side::Left) {
        Err(molpuc::error::Error::NotQuasiDefinite { level, .. }) => assert_eq!(level, 1),
        other => panic!("expected quasi-definiteness failure at level 1, got {other:?}"),
    }
}

#[test]
fn hermitian_random_measures_have_proportional_families() {
    // the Hermitian proportionality between the two family normalizations
    let mu = random_measure(23, 2, 2, true);
    let nb = 10;
    let ms = mu.moments(required_moment_order(nb)).unwrap();
    let gl = build_moment_matrix(&ms, Side::Left, nb).unwrap();
    let gr = build_moment_matrix(&ms, Side::Right, nb).unwrap();
    let fl = block_lu(&gl, Side::Left).unwrap();
    let fr = block_lu(&gr, Side::Right).unwrap();
    let fam = molpuc::families::families_from_factorizations(&fl, &fr).unwrap();
    for l in 0..nb {
        let via_d = fam.phi1l[l].mul_mat_left(&fl.diag()[l].inverse().unwrap());
        assert!(via_d.max_diff(&fam.phi2l[l]) < 1e-10);
    }
    let table = molpuc::families::verblunsky_extract(&fl, &fr).unwrap();
    assert!(table.hermitian_defect() < 1e-10);
}
