//! Discrete flows (Darboux-type steps) and Miwa shifts.
//!
//! A discrete step multiplies the measure by a linear factor (I - d z^{±1})
//! on one side; the transfer factors ω relate consecutive factorizations and
//! realize the step as a flip of the triangular factors of the dressed
//! operators δ = I - d·(J)^{±1}. A Miwa shift is the same measure operation
//! viewed as a coherent translation of all deformation times; its fingerprint
//! is a family of exact identities tying shifted and unshifted
//! Christoffel-Darboux kernels, families and quasi-norms, culminating in
//! product formulas that rebuild the polynomials from shifted/unshifted
//! quasi-norm ratios alone.

use crate::block::BlockMatrix;
use crate::cmat::{C64, CMat};
use crate::cmv::{Side, build_moment_matrix, required_moment_order, upsilon_pow};
use crate::error::Result;
use crate::factor::{Factorization, block_lu};
use crate::families::{CmvFamilies, VerblunskyTable, families_from_factorizations, verblunsky_extract};
use crate::kernels::kernel_eval;
use crate::measure::{MatrixMeasure, MeasureSide};
use crate::operators::{OperatorKind, dress};

/// Direction of the linear factor: `Plus` multiplies by (I - d z),
/// `Minus` by (I - d z^{-1}).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftSign {
    Plus,
    Minus,
}

impl ShiftSign {
    pub fn exponent(self) -> i64 {
        match self {
            ShiftSign::Plus => 1,
            ShiftSign::Minus => -1,
        }
    }
}

impl std::fmt::Display for ShiftSign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ShiftSign::Plus => write!(f, "+"),
            ShiftSign::Minus => write!(f, "-"),
        }
    }
}

fn diag_mat(m: usize, d: &[C64]) -> CMat {
    let mut out = CMat::zeros(m, m);
    for (a, v) in d.iter().enumerate() {
        out[(a, a)] = *v;
    }
    out
}

pub fn factorize(measure: &MatrixMeasure, nb: usize) -> Result<(Factorization, Factorization)> {
    let ms = measure.moments(required_moment_order(nb))?;
    let gl = build_moment_matrix(&ms, Side::Left, nb)?;
    let gr = build_moment_matrix(&ms, Side::Right, nb)?;
    Ok((block_lu(&gl, Side::Left)?, block_lu(&gr, Side::Right)?))
}

/// Multiply the measure by (I - d z^{±1}) on the given side.
pub fn shifted_measure(
    measure: &MatrixMeasure,
    side: Side,
    sign: ShiftSign,
    d: &[C64],
) -> Result<MatrixMeasure> {
    let dm = diag_mat(measure.block_size(), d);
    let ms = match side {
        Side::Left => MeasureSide::Left,
        Side::Right => MeasureSide::Right,
    };
    measure.multiply_linear_factor(ms, sign.exponent(), &dm)
}

/// The four transfer factors of one discrete step, by their factor-quotient
/// route: ω^{H,L} relates the left-problem factors across the step, ω^{H,R}
/// the right-problem factors.
#[derive(Clone, Debug)]
pub struct TransferFactors {
    pub omega_l: BlockMatrix,
    pub omega_r: BlockMatrix,
}

pub fn transfer_factors(
    side: Side,
    base_l: &Factorization,
    base_r: &Factorization,
    shifted_l: &Factorization,
    shifted_r: &Factorization,
) -> Result<TransferFactors> {
    match side {
        Side::Left => Ok(TransferFactors {
            // ω^{L,L} = (T S₂) S₂^{-1},  ω^{L,R} = Z₁^{-1} (T Z₁)
            omega_l: shifted_l.s2().mul(base_l.s2_inv()),
            omega_r: base_r.z1_inv().mul(shifted_r.z1()),
        }),
        Side::Right => Ok(TransferFactors {
            // ω^{R,L} = (T S₁) S₁^{-1},  ω^{R,R} = Z₂^{-1} (T Z₂)
            omega_l: shifted_l.s1().mul(base_l.s1_inv()),
            omega_r: base_r.z2_inv().mul(shifted_r.z2()),
        }),
    }
}

/// One Darboux step with its residual report.
#[derive(Clone, Debug)]
pub struct DarbouxReport {
    pub shifted: MatrixMeasure,
    pub items: Vec<(String, f64)>,
}

/// Multiply the measure by (I - d z^{±1}) on side H, refactorize, build the
/// transfer factors by both routes and score the discrete Lax equations,
/// the δ recomposition and the factor-flip form of the shifted δ.
pub fn darboux_step(
    measure: &MatrixMeasure,
    side: Side,
    sign: ShiftSign,
    d: &[C64],
    nb: usize,
) -> Result<DarbouxReport> {
    let m = measure.block_size();
    let shifted = shifted_measure(measure, side, sign, d)?;
    let (bl, br) = factorize(measure, nb)?;
    let (sl, sr) = factorize(&shifted, nb)?;
    let omega = transfer_factors(side, &bl, &br, &sl, &sr)?;
    let mut items = Vec::new();
    let margin = 4;

    // δ^{H,L} = S_i (I - dΥ^{±1}) S_i^{-1} and δ^{H,R} = Z_i^{-1}(I - dΥ^{∓1}) Z_i;
    // their triangular splits reproduce the ω's
    let p = sign.exponent() as i32;
    let dfull = diag_mat(m, d);
    let mut dblock = BlockMatrix::zeros(m, nb);
    for i in 0..nb {
        dblock.set_block(i, i, &dfull);
    }
    let lin = |pp: i32| BlockMatrix::identity(m, nb).sub(&dblock.mul(&upsilon_pow(m, nb, pp)));
    let (delta_l, delta_r) = match side {
        Side::Left => (
            bl.s1().mul(&lin(p)).mul(bl.s1_inv()),
            br.z2_inv().mul(&lin(-p)).mul(br.z2()),
        ),
        Side::Right => (
            bl.s2().mul(&lin(p)).mul(bl.s2_inv()),
            br.z1_inv().mul(&lin(-p)).mul(br.z1()),
        ),
    };
    // δ^{H,H'} = I - d^{H,H'} (J^{H'})^{±1} with the dressed projections
    let jl = dress(&bl, &br, if p > 0 { OperatorKind::Jl } else { OperatorKind::JlInv })?;
    let jr = dress(&bl, &br, if p > 0 { OperatorKind::JrInv } else { OperatorKind::Jr })?;
    let d_ll = match side {
        Side::Left => bl.s1().mul(&dblock).mul(bl.s1_inv()),
        Side::Right => bl.s2().mul(&dblock).mul(bl.s2_inv()),
    };
    let d_rr = match side {
        Side::Left => br.z2_inv().mul(&dblock).mul(br.z2()),
        Side::Right => br.z1_inv().mul(&dblock).mul(br.z1()),
    };
    let delta_l_dressed = BlockMatrix::identity(m, nb).sub(&d_ll.mul(&jl.payload));
    let delta_r_dressed = BlockMatrix::identity(m, nb).sub(&d_rr.mul(&jr.payload));
    let rel = |a: &BlockMatrix, b: &BlockMatrix| {
        a.interior_max_diff(b, margin) / a.interior_max_norm(margin).max(1e-300)
    };
    items.push((format!("darboux:{side}{sign}:delta-L-dressed"), rel(&delta_l, &delta_l_dressed)));
    items.push((format!("darboux:{side}{sign}:delta-R-dressed"), rel(&delta_r, &delta_r_dressed)));

    // LU split of δ matches the ω quotients: for the left problem
    // δ^{L,L} = [(T S₁)S₁^{-1}]^{-1} (T S₂)S₂^{-1}, δ^{R,L} likewise
    let delta_l_fact = block_lu(&delta_l, Side::Left)?;
    match side {
        Side::Left => {
            // lower factor of δ^{L,L} is (T S₁)S₁^{-1} inverted; upper is ω^{L,L}
            items.push((
                format!("darboux:{side}{sign}:omega-L-two-routes"),
                rel(&omega.omega_l, delta_l_fact.s2()),
            ));
            // δ^{L,R} = (lower)·(upper)^{-1} with lower = Z₂^{-1}(T Z₂) and
            // upper^{-1} = ω^{L,R}
            let delta_r_fact = block_lu(&delta_r, Side::Right)?;
            items.push((
                format!("darboux:{side}{sign}:omega-R-two-routes"),
                rel(&omega.omega_r, delta_r_fact.z1()),
            ));
        }
        Side::Right => {
            // δ^{R,L} = ω^{-1}·upper, so the unit lower factor of its LU is
            // ω^{-1} and s1() already holds ω
            items.push((
                format!("darboux:{side}{sign}:omega-L-two-routes"),
                rel(&omega.omega_l, delta_l_fact.s1()),
            ));
            let delta_r_fact = block_lu(&delta_r, Side::Right)?;
            items.push((
                format!("darboux:{side}{sign}:omega-R-two-routes"),
                rel(&omega.omega_r, delta_r_fact.z2()),
            ));
        }
    }

    // discrete Lax: T J^L = ω^{H,L} J^L (ω^{H,L})^{-1}, T J^R = (ω^{H,R})^{-1} J^R ω^{H,R}
    let jl_base = dress(&bl, &br, OperatorKind::Jl)?;
    let jr_base = dress(&bl, &br, OperatorKind::Jr)?;
    let jl_shift = dress(&sl, &sr, OperatorKind::Jl)?;
    let jr_shift = dress(&sl, &sr, OperatorKind::Jr)?;
    let lax_l = omega.omega_l.mul(&jl_base.payload).mul(&omega.omega_l.inverse()?);
    let lax_r = omega.omega_r.inverse()?.mul(&jr_base.payload).mul(&omega.omega_r);
    items.push((format!("darboux:{side}{sign}:lax-L"), rel(&jl_shift.payload, &lax_l)));
    items.push((format!("darboux:{side}{sign}:lax-R"), rel(&jr_shift.payload, &lax_r)));

    // factor flip: the shifted δ (same constant d) is the flipped product of
    // the base δ factors
    let (delta_l_s, delta_r_s) = match side {
        Side::Left => (
            sl.s1().mul(&lin(p)).mul(sl.s1_inv()),
            sr.z2_inv().mul(&lin(-p)).mul(sr.z2()),
        ),
        Side::Right => (
            sl.s2().mul(&lin(p)).mul(sl.s2_inv()),
            sr.z1_inv().mul(&lin(-p)).mul(sr.z1()),
        ),
    };
    match side {
        Side::Left => {
            // base: δ = Λ^{-1} ω with Λ = (T S₁)S₁^{-1}; flipped: T δ = ω Λ^{-1}
            let lambda = sl.s1().mul(bl.s1_inv());
            let flipped = omega.omega_l.mul(&lambda.inverse()?);
            items.push((format!("darboux:{side}{sign}:flip-L"), rel(&delta_l_s, &flipped)));
            // right problem: δ = Λ (ω)^{-1}... shifted form flips to ω^{-1} Λ
            let lambda_r = br.z2_inv().mul(sr.z2());
            let flipped_r = omega.omega_r.inverse()?.mul(&lambda_r);
            items.push((format!("darboux:{side}{sign}:flip-R"), rel(&delta_r_s, &flipped_r)));
        }
        Side::Right => {
            let upper = sl.s2().mul(bl.s2_inv());
            let flipped = upper.mul(&omega.omega_l.inverse()?);
            items.push((format!("darboux:{side}{sign}:flip-L"), rel(&delta_l_s, &flipped)));
            let upper_r = br.z1_inv().mul(sr.z1());
            let flipped_r = upper_r.inverse()?.mul(&omega.omega_r);
            items.push((format!("darboux:{side}{sign}:flip-R"), rel(&delta_r_s, &flipped_r)));
        }
    }

    Ok(DarbouxReport { shifted, items })
}

/// Discrete Zakharov-Shabat compatibility of two steps a and b:
/// (T_a ω_b) ω_a = (T_b ω_a) ω_b for the left factors, and
/// ω_a (T_a ω_b) = ω_b (T_b ω_a) for the right factors.
pub fn discrete_zs_residual(
    measure: &MatrixMeasure,
    step_a: (Side, ShiftSign, Vec<C64>),
    step_b: (Side, ShiftSign, Vec<C64>),
    nb: usize,
) -> Result<(f64, f64)> {
    let margin = 4;
    let base = factorize(measure, nb)?;
    let mu_a = shifted_measure(measure, step_a.0, step_a.1, &step_a.2)?;
    let mu_b = shifted_measure(measure, step_b.0, step_b.1, &step_b.2)?;
    let mu_ab = shifted_measure(&mu_a, step_b.0, step_b.1, &step_b.2)?;
    let fa = factorize(&mu_a, nb)?;
    let fb = factorize(&mu_b, nb)?;
    let fab = factorize(&mu_ab, nb)?;
    let om_a = transfer_factors(step_a.0, &base.0, &base.1, &fa.0, &fa.1)?;
    let om_b = transfer_factors(step_b.0, &base.0, &base.1, &fb.0, &fb.1)?;
    // ω_b evaluated after step a, and ω_a evaluated after step b
    let om_b_after_a = transfer_factors(step_b.0, &fa.0, &fa.1, &fab.0, &fab.1)?;
    let om_a_after_b = transfer_factors(step_a.0, &fb.0, &fb.1, &fab.0, &fab.1)?;
    let lhs_l = om_b_after_a.omega_l.mul(&om_a.omega_l);
    let rhs_l = om_a_after_b.omega_l.mul(&om_b.omega_l);
    let res_l =
        lhs_l.interior_max_diff(&rhs_l, margin) / lhs_l.interior_max_norm(margin).max(1e-300);
    let lhs_r = om_a.omega_r.mul(&om_b_after_a.omega_r);
    let rhs_r = om_b.omega_r.mul(&om_a_after_b.omega_r);
    let res_r =
        lhs_r.interior_max_diff(&rhs_r, margin) / lhs_r.interior_max_norm(margin).max(1e-300);
    Ok((res_l, res_r))
}

// ---------------------------------------------------------------------------
// Miwa shifts.

/// Data of a Miwa shift: the shifted measure with both factorizations and
/// derived families / quasi-norms.
pub struct MiwaState {
    pub measure: MatrixMeasure,
    pub fam: CmvFamilies,
    pub table: VerblunskyTable,
}

pub fn miwa_state(measure: &MatrixMeasure, nb: usize) -> Result<MiwaState> {
    let (fl, fr) = factorize(measure, nb)?;
    let fam = families_from_factorizations(&fl, &fr)?;
    let table = verblunsky_extract(&fl, &fr)?;
    Ok(MiwaState { measure: measure.clone(), fam, table })
}

/// The eight kernel identities tying a diagonal-w Miwa shift of one side and
/// sign to the unshifted data, scored at the sample pairs.
pub fn miwa_kernel_residuals(
    measure: &MatrixMeasure,
    w: &[C64],
    nb: usize,
    samples: &[(C64, C64)],
) -> Result<Vec<(String, f64)>> {
    let m = measure.block_size();
    let id = CMat::identity(m);
    let wmat = diag_mat(m, w);
    let base = miwa_state(measure, nb)?;
    let mut shifted = Vec::new();
    for (side, sign) in [
        (Side::Left, ShiftSign::Plus),
        (Side::Left, ShiftSign::Minus),
        (Side::Right, ShiftSign::Plus),
        (Side::Right, ShiftSign::Minus),
    ] {
        let mu = shifted_measure(measure, side, sign, w)?;
        shifted.push(miwa_state(&mu, nb)?);
    }
    let (lp, lm, rp, rm) = (&shifted[0], &shifted[1], &shifted[2], &shifted[3]);
    let hi = (nb - 2) / 2;
    let mut worst = vec![0.0f64; 8];
    let hl_inv = |t: &VerblunskyTable, k: usize| t.hl[k].solve_fullpiv(&id);
    let hr_inv = |t: &VerblunskyTable, k: usize| t.hr[k].solve_fullpiv(&id);
    for &(z, u) in samples {
        for l in 1..hi {
            // 1: K^{L,[2l+1]}(z,u) = M^{L,+}[K^{L,[2l]}](z,u)(I-wu)
            //    + (M^{L,+}[φ₂^L]^{(2l)}(z))† M^{L,+}[h^L_{2l}](h^L_{2l})^{-1} φ₁^L^{(2l)}(u)
            let lhs = kernel_eval(&base.fam, Side::Left, 2 * l + 1, z, u)?;
            let k_shift = kernel_eval(&lp.fam, Side::Left, 2 * l, z, u)?;
            let corr = lp.fam.phi2l[2 * l]
                .eval(z)?
                .dagger()
                .mul(&lp.table.hl[2 * l])
                .mul(&hl_inv(&base.table, 2 * l)?)
                .mul(&base.fam.phi1l[2 * l].eval(u)?);
            let rhs = k_shift.mul(&id.sub(&wmat.scale(u))).add(&corr);
            worst[0] = worst[0].max(lhs.max_diff(&rhs) / lhs.norm_fro().max(1.0));

            // 2: K^{R,[2l]}(z,u) = M^{L,+}[K^{R,[2l-1]}](z,u)(I-w ū^{-1})
            //    + M^{L,+}[φ₁^R]^{(2l-1)}(z) M^{L,+}[h^L_{2l-1}](h^L_{2l-1})^{-1} (φ₂^R^{(2l-1)}(u))†
            let lhs = kernel_eval(&base.fam, Side::Right, 2 * l, z, u)?;
            let k_shift = kernel_eval(&lp.fam, Side::Right, 2 * l - 1, z, u)?;
            let corr = lp.fam.phi1r[2 * l - 1]
                .eval(z)?
                .mul(&lp.table.hl[2 * l - 1])
                .mul(&hl_inv(&base.table, 2 * l - 1)?)
                .mul(&base.fam.phi2r[2 * l - 1].eval(u)?.dagger());
            let rhs = k_shift.mul(&id.sub(&wmat.scale(u.conj().inv()))).add(&corr);
            worst[1] = worst[1].max(lhs.max_diff(&rhs) / lhs.norm_fro().max(1.0));

            // 3: K^{L,[2l]}(z,u) = M^{L,-}[K^{L,[2l-1]}](z,u)(I-wu^{-1})
            //    + (M^{L,-}[φ₂^L]^{(2l-1)}(z))† M^{L,-}[h^R_{2l-1}](h^R_{2l-1})^{-1} φ₁^L^{(2l-1)}(u)
            let lhs = kernel_eval(&base.fam, Side::Left, 2 * l, z, u)?;
            let k_shift = kernel_eval(&lm.fam, Side::Left, 2 * l - 1, z, u)?;
            let corr = lm.fam.phi2l[2 * l - 1]
                .eval(z)?
                .dagger()
                .mul(&lm.table.hr[2 * l - 1])
                .mul(&hr_inv(&base.table, 2 * l - 1)?)
                .mul(&base.fam.phi1l[2 * l - 1].eval(u)?);
            let rhs = k_shift.mul(&id.sub(&wmat.scale(u.inv()))).add(&corr);
            worst[2] = worst[2].max(lhs.max_diff(&rhs) / lhs.norm_fro().max(1.0));

            // 4: K^{R,[2l+1]}(z,u) = M^{L,-}[K^{R,[2l]}](z,u)(I-w ū)
            //    + M^{L,-}[φ₁^R]^{(2l)}(z) M^{L,-}[h^L_{2l}](h^L_{2l})^{-1} (φ₂^R^{(2l)}(u))†
            let lhs = kernel_eval(&base.fam, Side::Right, 2 * l + 1, z, u)?;
            let k_shift = kernel_eval(&lm.fam, Side::Right, 2 * l, z, u)?;
            let corr = lm.fam.phi1r[2 * l]
                .eval(z)?
                .mul(&lm.table.hr[2 * l])
                .mul(&hr_inv(&base.table, 2 * l)?)
                .mul(&base.fam.phi2r[2 * l].eval(u)?.dagger());
            let rhs = k_shift.mul(&id.sub(&wmat.scale(u.conj()))).add(&corr);
            worst[3] = worst[3].max(lhs.max_diff(&rhs) / lhs.norm_fro().max(1.0));

            // 5: K^{L,[2l]}(z,u) = (I-w z̄^{-1}) M^{R,+}[K^{L,[2l-1]}](z,u)
            //    + (φ₂^L^{(2l-1)}(z))† M^{R,+}[φ₁^L]^{(2l-1)}(u)
            let lhs = kernel_eval(&base.fam, Side::Left, 2 * l, z, u)?;
            let k_shift = kernel_eval(&rp.fam, Side::Left, 2 * l - 1, z, u)?;
            let corr = base.fam.phi2l[2 * l - 1]
                .eval(z)?
                .dagger()
                .mul(&rp.fam.phi1l[2 * l - 1].eval(u)?);
            let rhs = id.sub(&wmat.scale(z.conj().inv())).mul(&k_shift).add(&corr);
            worst[4] = worst[4].max(lhs.max_diff(&rhs) / lhs.norm_fro().max(1.0));

            // 6: K^{R,[2l+1]}(z,u) = (I-wz) M^{R,+}[K^{R,[2l]}](z,u)
            //    + φ₁^R^{(2l)}(z) (M^{R,+}[φ₂^R]^{(2l)}(u))†
            let lhs = kernel_eval(&base.fam, Side::Right, 2 * l + 1, z, u)?;
            let k_shift = kernel_eval(&rp.fam, Side::Right, 2 * l, z, u)?;
            let corr =
                base.fam.phi1r[2 * l].eval(z)?.mul(&rp.fam.phi2r[2 * l].eval(u)?.dagger());
            let rhs = id.sub(&wmat.scale(z)).mul(&k_shift).add(&corr);
            worst[5] = worst[5].max(lhs.max_diff(&rhs) / lhs.norm_fro().max(1.0));

            // 7: K^{L,[2l+1]}(z,u) = (I-w z̄) M^{R,-}[K^{L,[2l]}](z,u)
            //    + (φ₂^L^{(2l)}(z))† M^{R,-}[φ₁^L]^{(2l)}(u)
            let lhs = kernel_eval(&base.fam, Side::Left, 2 * l + 1, z, u)?;
            let k_shift = kernel_eval(&rm.fam, Side::Left, 2 * l, z, u)?;
            let corr =
                base.fam.phi2l[2 * l].eval(z)?.dagger().mul(&rm.fam.phi1l[2 * l].eval(u)?);
            let rhs = id.sub(&wmat.scale(z.conj())).mul(&k_shift).add(&corr);
            worst[6] = worst[6].max(lhs.max_diff(&rhs) / lhs.norm_fro().max(1.0));

            // 8: K^{R,[2l]}(z,u) = (I-wz^{-1}) M^{R,-}[K^{R,[2l-1]}](z,u)
            //    + φ₁^R^{(2l-1)}(z) (M^{R,-}[φ₂^R]^{(2l-1)}(u))†
            let lhs = kernel_eval(&base.fam, Side::Right, 2 * l, z, u)?;
            let k_shift = kernel_eval(&rm.fam, Side::Right, 2 * l - 1, z, u)?;
            let corr = base.fam.phi1r[2 * l - 1]
                .eval(z)?
                .mul(&rm.fam.phi2r[2 * l - 1].eval(u)?.dagger());
            let rhs = id.sub(&wmat.scale(z.inv())).mul(&k_shift).add(&corr);
            worst[7] = worst[7].max(lhs.max_diff(&rhs) / lhs.norm_fro().max(1.0));
        }
    }
    let names = [
        "miwa:L+:KL-odd",
        "miwa:L+:KR-even",
        "miwa:L-:KL-even",
        "miwa:L-:KR-odd",
        "miwa:R+:KL-even",
        "miwa:R+:KR-odd",
        "miwa:R-:KL-odd",
        "miwa:R-:KR-even",
    ];
    Ok(names.iter().zip(worst).map(|(n, r)| (n.to_string(), r)).collect())
}

/// The eight scalar-w relations between shifted and unshifted quasi-norms
/// and family values.
pub fn scalar_miwa_residuals(
    measure: &MatrixMeasure,
    w: C64,
    nb: usize,
    l_max: usize,
) -> Result<Vec<(String, f64)>> {
    let m = measure.block_size();
    let wv = vec![w; m];
    let base = miwa_state(measure, nb)?;
    // scalar w: left and right shifts coincide
    let plus = miwa_state(&shifted_measure(measure, Side::Left, ShiftSign::Plus, &wv)?, nb)?;
    let minus = miwa_state(&shifted_measure(measure, Side::Left, ShiftSign::Minus, &wv)?, nb)?;
    let id = CMat::identity(m);
    let hl_inv = |t: &VerblunskyTable, k: usize| t.hl[k].solve_fullpiv(&id);
    let hr_inv = |t: &VerblunskyTable, k: usize| t.hr[k].solve_fullpiv(&id);
    let mut worst = vec![0.0f64; 8];
    let wb = w.conj();
    for l in 1..=l_max {
        if 2 * l + 1 >= nb - 1 {
            break;
        }
        // 1: (φ₂^L^{(2l-1)}(w̄))† M⁺[h^R_{2l-1}] = φ₁^R^{(2l)}(w^{-1}) h^R_{2l}
        let lhs = base.fam.phi2l[2 * l - 1].eval(wb)?.dagger().mul(&plus.table.hr[2 * l - 1]);
        let rhs = base.fam.phi1r[2 * l].eval(w.inv())?.mul(&base.table.hr[2 * l]);
        worst[0] = worst[0].max(lhs.max_diff(&rhs) / lhs.norm_fro().max(1.0));
        // 2: M⁻[h^R_{2l-1}] (h^R_{2l-1})^{-1} φ₁^L^{(2l-1)}(w) = (φ₂^R^{(2l)}(w̄^{-1}))†
        let lhs = minus.table.hr[2 * l - 1]
            .mul(&hr_inv(&base.table, 2 * l - 1)?)
            .mul(&base.fam.phi1l[2 * l - 1].eval(w)?);
        let rhs = base.fam.phi2r[2 * l].eval(wb.inv())?.dagger();
        worst[1] = worst[1].max(lhs.max_diff(&rhs) / lhs.norm_fro().max(1.0));
        // 3: φ₁^R^{(2l-1)}(w) M⁻[h^L_{2l-1}] = (φ₂^L^{(2l)}(w̄^{-1}))† h^L_{2l}
        let lhs = base.fam.phi1r[2 * l - 1].eval(w)?.mul(&minus.table.hl[2 * l - 1]);
        let rhs = base.fam.phi2l[2 * l].eval(wb.inv())?.dagger().mul(&base.table.hl[2 * l]);
        worst[2] = worst[2].max(lhs.max_diff(&rhs) / lhs.norm_fro().max(1.0));
        // 4: M⁺[h^L_{2l-1}] (h^L_{2l-1})^{-1} (φ₂^R^{(2l-1)}(w̄))† = φ₁^L^{(2l)}(w^{-1})
        let lhs = plus.table.hl[2 * l - 1]
            .mul(&hl_inv(&base.table, 2 * l - 1)?)
            .mul(&base.fam.phi2r[2 * l - 1].eval(wb)?.dagger());
        let rhs = base.fam.phi1l[2 * l].eval(w.inv())?;
        worst[3] = worst[3].max(lhs.max_diff(&rhs) / lhs.norm_fro().max(1.0));
        // 5: φ₁^R^{(2l)}(w^{-1}) M⁺[h^R_{2l}] = (w̄ φ₂^L^{(2l+1)}(w̄))† h^R_{2l+1}
        let lhs = base.fam.phi1r[2 * l].eval(w.inv())?.mul(&plus.table.hr[2 * l]);
        let rhs = base.fam.phi2l[2 * l + 1]
            .eval(wb)?
            .scale(wb)
            .dagger()
            .mul(&base.table.hr[2 * l + 1]);
        worst[4] = worst[4].max(lhs.max_diff(&rhs) / lhs.norm_fro().max(1.0));
        // 6: M⁻[h^R_{2l}] (h^R_{2l})^{-1} (φ₂^R^{(2l)}(w̄^{-1}))† = w φ₁^L^{(2l+1)}(w)
        let lhs = minus.table.hr[2 * l]
            .mul(&hr_inv(&base.table, 2 * l)?)
            .mul(&base.fam.phi2r[2 * l].eval(wb.inv())?.dagger());
        let rhs = base.fam.phi1l[2 * l + 1].eval(w)?.scale(w);
        worst[5] = worst[5].max(lhs.max_diff(&rhs) / lhs.norm_fro().max(1.0));
        // 7: (φ₂^L^{(2l)}(w̄^{-1}))† M⁻[h^L_{2l}] = w φ₁^R^{(2l+1)}(w) h^L_{2l+1}
        let lhs = base.fam.phi2l[2 * l].eval(wb.inv())?.dagger().mul(&minus.table.hl[2 * l]);
        let rhs = base.fam.phi1r[2 * l + 1].eval(w)?.scale(w).mul(&base.table.hl[2 * l + 1]);
        worst[6] = worst[6].max(lhs.max_diff(&rhs) / lhs.norm_fro().max(1.0));
        // 8: M⁺[h^L_{2l}] (h^L_{2l})^{-1} φ₁^L^{(2l)}(w^{-1}) = (w̄ φ₂^R^{(2l+1)}(w̄))†
        let lhs = plus.table.hl[2 * l]
            .mul(&hl_inv(&base.table, 2 * l)?)
            .mul(&base.fam.phi1l[2 * l].eval(w.inv())?);
        let rhs = base.fam.phi2r[2 * l + 1].eval(wb)?.scale(wb).dagger();
        worst[7] = worst[7].max(lhs.max_diff(&rhs) / lhs.norm_fro().max(1.0));
    }
    let names = [
        "miwa-scalar:phi2L-hr-plus",
        "miwa-scalar:hr-minus-phi1L",
        "miwa-scalar:phi1R-hl-minus",
        "miwa-scalar:hl-plus-phi2R",
        "miwa-scalar:phi1R-hr-plus",
        "miwa-scalar:hr-minus-phi2R",
        "miwa-scalar:phi2L-hl-minus",
        "miwa-scalar:hl-plus-phi1L",
    ];
    Ok(names.iter().zip(worst).map(|(n, r)| (n.to_string(), r)).collect())
}

/// Scalar-w Miwa shift and the single discrete step with the matching d are
/// the same measure operation, hence produce identical tables.
pub fn miwa_darboux_consistency(
    measure: &MatrixMeasure,
    w: C64,
    sign: ShiftSign,
    nb: usize,
) -> Result<f64> {
    let m = measure.block_size();
    let wv = vec![w; m];
    let a = miwa_state(&shifted_measure(measure, Side::Left, sign, &wv)?, nb)?;
    let report = darboux_step(measure, Side::Left, sign, &wv, nb)?;
    let b = miwa_state(&report.shifted, nb)?;
    Ok(crate::flows::table_gap(&a.table, &b.table, nb))
}

/// Rebuild the family values at z from products of shifted/unshifted
/// quasi-norm ratios (eight formulas), comparing against direct evaluation.
/// Samples whose shifted measures fail to factorize are skipped and counted.
pub struct ProductReconstruction {
    pub items: Vec<(String, f64)>,
    pub skipped: usize,
}

pub fn product_reconstruction(
    measure: &MatrixMeasure,
    z_samples: &[C64],
    l_max: usize,
    nb: usize,
) -> Result<ProductReconstruction> {
    let m = measure.block_size();
    let base = miwa_state(measure, nb)?;
    let id = CMat::identity(m);
    let mut worst = vec![0.0f64; 8];
    let mut skipped = 0usize;
    for &z in z_samples {
        let wv_plus = vec![z.inv(); m];
        let wv_minus = vec![z; m];
        let plus = match shifted_measure(measure, Side::Left, ShiftSign::Plus, &wv_plus)
            .and_then(|mu| miwa_state(&mu, nb))
        {
            Ok(s) => s,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let minus = match shifted_measure(measure, Side::Left, ShiftSign::Minus, &wv_minus)
            .and_then(|mu| miwa_state(&mu, nb))
        {
            Ok(s) => s,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let ratio_desc = |sh: &VerblunskyTable, bt: &VerblunskyTable, right: bool, hi: usize| -> Result<CMat> {
            // Π_{k=hi..0} M[h_k] h_k^{-1}, highest index leftmost
            let mut acc = id.clone();
            for k in (0..=hi).rev() {
                let (s, b) = if right { (&sh.hr[k], &bt.hr[k]) } else { (&sh.hl[k], &bt.hl[k]) };
                acc = acc.mul(&s.mul(&b.solve_fullpiv(&id)?));
            }
            Ok(acc)
        };
        let ratio_asc_inv = |sh: &VerblunskyTable, bt: &VerblunskyTable, right: bool, hi: usize| -> Result<CMat> {
            // Π_{k=0..hi} h_k^{-1} M[h_k], lowest index leftmost
            let mut acc = id.clone();
            for k in 0..=hi {
                let (s, b) = if right { (&sh.hr[k], &bt.hr[k]) } else { (&sh.hl[k], &bt.hl[k]) };
                acc = acc.mul(&b.solve_fullpiv(&id)?.mul(s));
            }
            Ok(acc)
        };
        for l in 1..=l_max {
            if 2 * l + 1 >= nb - 1 {
                break;
            }
            let zb = z.conj();
            // φ₁^L^{(2l)}(z) = z^l Π_desc M⁺_{1/z}[h^L]h^L{-1}, k = 2l-1..0
            let direct = base.fam.phi1l[2 * l].eval(z)?;
            let prod = ratio_desc(&plus.table, &base.table, false, 2 * l - 1)?.scale(z.powi(l as i32));
            worst[0] = worst[0].max(direct.max_diff(&prod) / direct.norm_fro().max(1.0));
            // φ₁^L^{(2l+1)}(z) = z^{-(l+1)} Π_desc M⁻_z[h^R]h^R{-1}, k = 2l..0
            let direct = base.fam.phi1l[2 * l + 1].eval(z)?;
            let prod =
                ratio_desc(&minus.table, &base.table, true, 2 * l)?.scale(z.powi(-(l as i32 + 1)));
            worst[1] = worst[1].max(direct.max_diff(&prod) / direct.norm_fro().max(1.0));
            // (φ₂^L^{(2l)}(z̄^{-1}))† = z^{-l} Π_asc h^L{-1}M⁻_z[h^L], k = 0..2l-1, then h^L_{2l}^{-1}
            let direct = base.fam.phi2l[2 * l].eval(zb.inv())?.dagger();
            let prod = ratio_asc_inv(&minus.table, &base.table, false, 2 * l - 1)?
                .mul(&base.table.hl[2 * l].solve_fullpiv(&id)?)
                .scale(z.powi(-(l as i32)));
            worst[2] = worst[2].max(direct.max_diff(&prod) / direct.norm_fro().max(1.0));
            // (φ₂^L^{(2l+1)}(z̄^{-1}))† = z^{l+1} Π_asc h^R{-1}M⁺_{1/z}[h^R], k = 0..2l, then h^R_{2l+1}^{-1}
            let direct = base.fam.phi2l[2 * l + 1].eval(zb.inv())?.dagger();
            let prod = ratio_asc_inv(&plus.table, &base.table, true, 2 * l)?
                .mul(&base.table.hr[2 * l + 1].solve_fullpiv(&id)?)
                .scale(z.powi(l as i32 + 1));
            worst[3] = worst[3].max(direct.max_diff(&prod) / direct.norm_fro().max(1.0));
            // φ₁^R^{(2l)}(z) = z^l Π_asc h^R{-1}M⁺_{1/z}[h^R], k = 0..2l-1, then h^R_{2l}^{-1}
            let direct = base.fam.phi1r[2 * l].eval(z)?;
            let prod = ratio_asc_inv(&plus.table, &base.table, true, 2 * l - 1)?
                .mul(&base.table.hr[2 * l].solve_fullpiv(&id)?)
                .scale(z.powi(l as i32));
            worst[4] = worst[4].max(direct.max_diff(&prod) / direct.norm_fro().max(1.0));
            // φ₁^R^{(2l+1)}(z) = z^{-(l+1)} Π_asc h^L{-1}M⁻_z[h^L], k = 0..2l, then h^L_{2l+1}^{-1}
            let direct = base.fam.phi1r[2 * l + 1].eval(z)?;
            let prod = ratio_asc_inv(&minus.table, &base.table, false, 2 * l)?
                .mul(&base.table.hl[2 * l + 1].solve_fullpiv(&id)?)
                .scale(z.powi(-(l as i32 + 1)));
            worst[5] = worst[5].max(direct.max_diff(&prod) / direct.norm_fro().max(1.0));
            // (φ₂^R^{(2l)}(z̄^{-1}))† = z^{-l} Π_desc M⁻_z[h^R]h^R{-1}, k = 2l-1..0
            let direct = base.fam.phi2r[2 * l].eval(zb.inv())?.dagger();
            let prod =
                ratio_desc(&minus.table, &base.table, true, 2 * l - 1)?.scale(z.powi(-(l as i32)));
            worst[6] = worst[6].max(direct.max_diff(&prod) / direct.norm_fro().max(1.0));
            // (φ₂^R^{(2l+1)}(z̄^{-1}))† = z^{l+1} Π_desc M⁺_{1/z}[h^L]h^L{-1}, k = 2l..0
            let direct = base.fam.phi2r[2 * l + 1].eval(zb.inv())?.dagger();
            let prod =
                ratio_desc(&plus.table, &base.table, false, 2 * l)?.scale(z.powi(l as i32 + 1));
            worst[7] = worst[7].max(direct.max_diff(&prod) / direct.norm_fro().max(1.0));
        }
    }
    let names = [
        "product:phi1L-even",
        "product:phi1L-odd",
        "product:phi2L-even",
        "product:phi2L-odd",
        "product:phi1R-even",
        "product:phi1R-odd",
        "product:phi2R-even",
        "product:phi2R-odd",
    ];
    Ok(ProductReconstruction {
        items: names.iter().zip(worst).map(|(n, r)| (n.to_string(), r)).collect(),
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled::{bernstein_szego, herm2, lebesgue, nonherm2};
    use crate::cmat::c;
    use crate::sampling::sample_pairs;

    #[test]
    fn zero_step_is_identity() {
        let mu = herm2();
        let report = darboux_step(&mu, Side::Left, ShiftSign::Plus, &[c(0.0, 0.0); 2], 10).unwrap();
        assert_eq!(report.shifted.fingerprint(), mu.fingerprint());
        for (name, res) in &report.items {
            assert!(*res < 1e-11, "{name}: {res:.2e}");
        }
    }

    #[test]
    fn lebesgue_plus_step() {
        let mu = lebesgue();
        let report = darboux_step(&mu, Side::Left, ShiftSign::Plus, &[c(0.3, 0.0)], 10).unwrap();
        for (name, res) in &report.items {
            assert!(*res < 1e-10, "{name}: {res:.2e}");
        }
        // shifted measure (1 - 0.3z)dθ has α^L_{1,1} from its own factorization
        let st = miwa_state(&report.shifted, 8).unwrap();
        // Gram-Schmidt oracle on the shifted moments: P₁(z) = z + p with
        // c'_1 + p c'_0 = 0 against z^0-pairing: ∮P₁ dμ' = 2π(c'_{-1} + p c'_0)
        let ms = report.shifted.moments(2).unwrap();
        let p = -(ms.get(-1).unwrap()[(0, 0)] / ms.get(0).unwrap()[(0, 0)]);
        assert!((st.table.a1l[1][(0, 0)] - p).norm() < 1e-12);
    }

    #[test]
    fn darboux_all_sides_and_signs() {
        let mu = nonherm2();
        for side in [Side::Left, Side::Right] {
            for sign in [ShiftSign::Plus, ShiftSign::Minus] {
                let report =
                    darboux_step(&mu, side, sign, &[c(0.3, 0.1), c(-0.2, 0.15)], 12).unwrap();
                for (name, res) in &report.items {
                    let tol = if name.contains("omega") { 1e-10 } else { 1e-9 };
                    assert!(*res < tol, "{name}: {res:.2e}");
                }
            }
        }
    }

    #[test]
    fn discrete_zs() {
        let mu = herm2();
        let (l, r) = discrete_zs_residual(
            &mu,
            (Side::Left, ShiftSign::Plus, vec![c(0.25, 0.0), c(0.1, 0.05)]),
            (Side::Right, ShiftSign::Minus, vec![c(0.15, -0.1), c(0.2, 0.0)]),
            12,
        )
        .unwrap();
        assert!(l < 1e-9, "left ZS {l:.2e}");
        assert!(r < 1e-9, "right ZS {r:.2e}");
    }

    #[test]
    fn miwa_kernel_identities() {
        for mu in [herm2(), nonherm2()] {
            let samples = sample_pairs(42, &[0.8, 1.0, 1.25], 5);
            let res = miwa_kernel_residuals(&mu, &[c(0.4, 0.0), c(0.3, 0.1)], 12, &samples).unwrap();
            for (name, r) in res {
                assert!(r < 1e-9, "{name}: {r:.2e}");
            }
        }
    }

    #[test]
    fn miwa_kernel_identities_zero_w() {
        let mu = herm2();
        let samples = sample_pairs(7, &[0.8, 1.0, 1.25], 3);
        // w = 0: every identity degenerates to the kernel recursion K^{[n+1]} = K^{[n]} + term
        let res = miwa_kernel_residuals(&mu, &[c(0.0, 0.0); 2], 10, &samples).unwrap();
        for (name, r) in res {
            assert!(r < 1e-11, "{name}: {r:.2e}");
        }
    }

    #[test]
    fn scalar_miwa_relations() {
        for mu in [lebesgue(), bernstein_szego(0.5, 64)] {
            let res = scalar_miwa_residuals(&mu, c(0.4, 0.0), 10, 2).unwrap();
            for (name, r) in res {
                assert!(r < 1e-10, "{name}: {r:.2e}");
            }
        }
        let res = scalar_miwa_residuals(&nonherm2(), c(0.35, 0.15), 12, 2).unwrap();
        for (name, r) in res {
            assert!(r < 1e-9, "{name}: {r:.2e}");
        }
    }

    #[test]
    fn miwa_equals_darboux() {
        let mu = herm2();
        for sign in [ShiftSign::Plus, ShiftSign::Minus] {
            let gap = miwa_darboux_consistency(&mu, c(0.4, 0.0), sign, 10).unwrap();
            assert!(gap < 1e-12, "{sign}: {gap:.2e}");
        }
    }

    #[test]
    fn product_formulas_lebesgue_exact() {
        let mu = lebesgue();
        let rec = product_reconstruction(&mu, &[c(0.6, 0.3)], 2, 10).unwrap();
        assert_eq!(rec.skipped, 0);
        for (name, r) in rec.items {
            assert!(r < 1e-12, "{name}: {r:.2e}");
        }
    }

    #[test]
    fn product_formulas_bernstein_szego() {
        let mu = bernstein_szego(0.5, 64);
        let rec = product_reconstruction(&mu, &[c(0.6, 0.3)], 3, 12).unwrap();
        assert_eq!(rec.skipped, 0);
        for (name, r) in rec.items {
            assert!(r < 1e-8, "{name}: {r:.2e}");
        }
    }

    #[test]
    fn product_formulas_matrix_case() {
        let mu = herm2();
        let zs = crate::sampling::sample_points(42, &[0.8, 1.25], 4);
        let rec = product_reconstruction(&mu, &zs, 2, 12).unwrap();
        for (name, r) in rec.items {
            assert!(r < 1e-7, "{name}: {r:.2e}");
        }
    }
}
