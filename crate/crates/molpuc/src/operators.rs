//! Dressed CMV operators and the recursion catalog.
//!
//! J^L = S₁ΥS₁^{-1} = S₂ΥS₂^{-1} and J^R = Z₂^{-1}ΥZ₂ = Z₁^{-1}ΥZ₁ are the
//! five-band block operators representing multiplication by z on the
//! families; C_[p] = Z₂^{-1}ηΥᵖS₁^{-1} = Z₁^{-1}ηΥᵖS₂^{-1} intertwines the
//! left and right sides. Every operator admits two dressing routes (lower
//! and upper factors) whose interior agreement is a consistency check, and
//! closed-form banded coefficients in the Verblunsky data that are rebuilt
//! here and compared blockwise against the dressed values. Rows and columns
//! of the banded forms, applied to the families, reproduce the five-term
//! recursions and the mixed left/right relations; those are scored at
//! sample points.

use crate::block::BlockMatrix;
use crate::cmat::{C64, CMat};
use crate::cmv::{Side, eta, upsilon_pow};
use crate::error::{Error, Result};
use crate::factor::Factorization;
use crate::families::{CmvFamilies, SzegoFamilies, VerblunskyTable};
use crate::laurent::MatrixLaurentPoly;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Jl,
    JlInv,
    Jr,
    JrInv,
    C(i32),
    CInv(i32),
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OperatorKind::Jl => write!(f, "JL"),
            OperatorKind::JlInv => write!(f, "JL-inv"),
            OperatorKind::Jr => write!(f, "JR"),
            OperatorKind::JrInv => write!(f, "JR-inv"),
            OperatorKind::C(p) => write!(f, "C[{p}]"),
            OperatorKind::CInv(p) => write!(f, "C[{p}]-inv"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DressedOperator {
    pub kind: OperatorKind,
    pub payload: BlockMatrix,
    pub route_gap: f64,
    pub margin: usize,
}

/// Build a dressed operator from both defining routes; the payload is the
/// route through the lower factors, and `route_gap` records the interior
/// disagreement with the upper-factor route (relative to the payload norm).
pub fn dress(fl: &Factorization, fr: &Factorization, kind: OperatorKind) -> Result<DressedOperator> {
    if fl.side() != Side::Left || fr.side() != Side::Right {
        return Err(Error::Config("dressing needs a (left, right) factorization pair".into()));
    }
    let m = fl.block_size();
    let nb = fl.num_blocks();
    let (payload, alt, margin) = match kind {
        OperatorKind::Jl => {
            let ups = upsilon_pow(m, nb, 1);
            (
                fl.s1().mul(&ups).mul(fl.s1_inv()),
                fl.s2().mul(&ups).mul(fl.s2_inv()),
                2,
            )
        }
        OperatorKind::JlInv => {
            let ups = upsilon_pow(m, nb, -1);
            (
                fl.s1().mul(&ups).mul(fl.s1_inv()),
                fl.s2().mul(&ups).mul(fl.s2_inv()),
                2,
            )
        }
        OperatorKind::Jr => {
            let ups = upsilon_pow(m, nb, 1);
            (
                fr.z2_inv().mul(&ups).mul(fr.z2()),
                fr.z1_inv().mul(&ups).mul(fr.z1()),
                2,
            )
        }
        OperatorKind::JrInv => {
            let ups = upsilon_pow(m, nb, -1);
            (
                fr.z2_inv().mul(&ups).mul(fr.z2()),
                fr.z1_inv().mul(&ups).mul(fr.z1()),
                2,
            )
        }
        OperatorKind::C(p) => {
            if p.unsigned_abs() > 2 {
                return Err(Error::Domain("intertwiner power |p| ≤ 2".into()));
            }
            let mid = eta(m, nb).mul(&upsilon_pow(m, nb, p));
            (
                fr.z2_inv().mul(&mid).mul(fl.s1_inv()),
                fr.z1_inv().mul(&mid).mul(fl.s2_inv()),
                2 + p.unsigned_abs() as usize,
            )
        }
        OperatorKind::CInv(p) => {
            if p.unsigned_abs() > 2 {
                return Err(Error::Domain("intertwiner power |p| ≤ 2".into()));
            }
            // C_[p]^{-1} = S₁ Υ^{-p} η Z₂ = S₂ Υ^{-p} η Z₁
            let mid = upsilon_pow(m, nb, -p).mul(&eta(m, nb));
            (
                fl.s1().mul(&mid).mul(fr.z2()),
                fl.s2().mul(&mid).mul(fr.z1()),
                2 + p.unsigned_abs() as usize,
            )
        }
    };
    let scale = payload.interior_max_norm(margin).max(1e-300);
    let route_gap = payload.interior_max_diff(&alt, margin) / scale;
    if route_gap > 1e-9 {
        return Err(Error::Consistency(format!(
            "{kind}: lower- and upper-factor dressing routes disagree by {route_gap:.3e} on the interior"
        )));
    }
    Ok(DressedOperator { kind, payload, route_gap, margin })
}

fn j_band(inv: bool, i: i64, j: i64) -> bool {
    if !inv {
        if i % 2 == 0 { j >= i - 1 && j <= i + 2 } else { j >= i - 2 && j <= i + 1 }
    } else if i % 2 == 0 {
        j >= i - 2 && j <= i + 1
    } else {
        j >= i - 1 && j <= i + 2
    }
}

fn c0_band(inv_like: bool, i: i64, j: i64) -> bool {
    if !inv_like {
        // C[0] and C[0]^{-1}
        if i % 2 == 0 { j == i - 1 || j == i } else { j == i || j == i + 1 }
    } else {
        // C[-1] and C[-1]^{-1}
        if i % 2 == 0 { j == i || j == i + 1 } else { j == i - 1 || j == i }
    }
}

/// Is block (i, j) inside the band pattern of the operator? Negative j is
/// outside by convention. For intertwiner powers beyond the displayed ones
/// the pattern is composed from C_[p] = (J^R)^{-p} C_[0].
pub fn in_band(kind: OperatorKind, i: usize, j: usize) -> bool {
    let (i, j) = (i as i64, j as i64);
    match kind {
        OperatorKind::Jl | OperatorKind::Jr => j >= 0 && j_band(false, i, j),
        OperatorKind::JlInv | OperatorKind::JrInv => j >= 0 && j_band(true, i, j),
        OperatorKind::C(0) | OperatorKind::CInv(0) => j >= 0 && c0_band(false, i, j),
        OperatorKind::C(-1) | OperatorKind::CInv(-1) => j >= 0 && c0_band(true, i, j),
        OperatorKind::C(p) => {
            // (J^R)^{-p} band composed with the C[0] band
            let hops: Vec<bool> = vec![p > 0; p.unsigned_abs() as usize];
            compose_bands(&hops, i, j, false)
        }
        OperatorKind::CInv(p) => {
            let hops: Vec<bool> = vec![p < 0; p.unsigned_abs() as usize];
            compose_bands(&hops, i, j, true)
        }
    }
}

/// Band of (J^R)^{±1}-hops followed (or preceded, for inverses) by the C[0]
/// band: reachability through intermediate indices.
fn compose_bands(hops: &[bool], i: i64, j: i64, c_first: bool) -> bool {
    if j < 0 {
        return false;
    }
    let mut frontier = vec![i];
    let step = |frontier: &[i64], f: &dyn Fn(i64, i64) -> bool| -> Vec<i64> {
        let mut next = Vec::new();
        for &t in frontier {
            for u in (t - 4).max(0)..=t + 4 {
                if f(t, u) && !next.contains(&u) {
                    next.push(u);
                }
            }
        }
        next
    };
    if c_first {
        frontier = step(&frontier, &|a, b| c0_band(false, a, b));
        for &inv in hops {
            frontier = step(&frontier, &move |a, b| j_band(inv, a, b));
        }
    } else {
        for &inv in hops {
            frontier = step(&frontier, &move |a, b| j_band(inv, a, b));
        }
        frontier = step(&frontier, &|a, b| c0_band(false, a, b));
    }
    frontier.contains(&j)
}

/// Largest interior block outside the band pattern, relative to the
/// interior operator norm.
pub fn band_pattern_defect(op: &DressedOperator) -> f64 {
    let nb = op.payload.num_blocks();
    let hi = nb.saturating_sub(op.margin);
    let scale = op.payload.interior_max_norm(op.margin).max(1e-300);
    let mut worst = 0.0f64;
    for i in 0..hi {
        for j in 0..hi {
            if !in_band(op.kind, i, j) {
                worst = worst.max(op.payload.block(i, j).norm_max());
            }
        }
    }
    worst / scale
}

// ---------------------------------------------------------------------------
// Closed-form banded coefficients in the Verblunsky data.

struct EntryCtx<'a> {
    t: &'a VerblunskyTable,
    id: CMat,
}

impl<'a> EntryCtx<'a> {
    fn new(t: &'a VerblunskyTable) -> Self {
        EntryCtx { t, id: CMat::identity(t.m) }
    }

    fn available(&self, idx: i64) -> bool {
        idx >= 0 && (idx as usize) < self.t.len()
    }

    fn hl_inv(&self, k: usize) -> Result<CMat> {
        self.t.hl[k].solve_fullpiv(&self.id)
    }

    fn hr_inv(&self, k: usize) -> Result<CMat> {
        self.t.hr[k].solve_fullpiv(&self.id)
    }
}

/// The closed-form block at (i, j), or None if outside the band or if the
/// needed table indices are missing. Boundary convention: index 0 of every
/// α family is the identity.
pub fn closed_form_entry(
    table: &VerblunskyTable,
    kind: OperatorKind,
    i: usize,
    j: usize,
) -> Result<Option<CMat>> {
    if !in_band(kind, i, j) {
        return Ok(None);
    }
    let ctx = EntryCtx::new(table);
    let t = table;
    let k = (i / 2) as i64;
    let need = |ix: i64| ctx.available(ix);
    let entry: Option<CMat> = match kind {
        OperatorKind::Jl => {
            let ku = i / 2;
            if i % 2 == 0 {
                // row 2k: needs α up to 2k+2
                if !need(2 * k + 2) {
                    None
                } else if j + 1 == i {
                    Some(t.hl[2 * ku].mul(&t.a1r[2 * ku + 1]).mul(&ctx.hr_inv(2 * ku - 1)?).neg())
                } else if j == i {
                    Some(
                        t.hl[2 * ku]
                            .mul(&t.a1r[2 * ku + 1])
                            .mul(&t.a2l_dag[2 * ku])
                            .mul(&ctx.hl_inv(2 * ku)?)
                            .neg(),
                    )
                } else if j == i + 1 {
                    Some(t.a1l[2 * ku + 2].neg())
                } else {
                    Some(ctx.id.clone())
                }
            } else {
                if !need(2 * k + 2) {
                    None
                } else if j + 2 == i {
                    // j = 2k-1
                    Some(t.hr[2 * ku + 1].mul(&ctx.hr_inv(2 * ku - 1)?))
                } else if j + 1 == i {
                    Some(t.hr[2 * ku + 1].mul(&t.a2l_dag[2 * ku]).mul(&ctx.hl_inv(2 * ku)?))
                } else if j == i {
                    Some(t.a2r_dag[2 * ku + 1].mul(&t.a1l[2 * ku + 2]).neg())
                } else {
                    Some(t.a2r_dag[2 * ku + 1].clone())
                }
            }
        }
        OperatorKind::Jr => {
            let ku = i / 2;
            if i % 2 == 0 {
                if !need(2 * k + 2) {
                    None
                } else if j + 1 == i {
                    // sign agrees with the J^L mirror entry, fixed against
                    // the dressed operator
                    Some(t.hr[2 * ku].mul(&t.a2l_dag[2 * ku + 1]).mul(&ctx.hl_inv(2 * ku - 1)?).neg())
                } else if j == i {
                    Some(
                        t.hr[2 * ku]
                            .mul(&t.a2l_dag[2 * ku + 1])
                            .mul(&t.a1r[2 * ku])
                            .mul(&ctx.hr_inv(2 * ku)?)
                            .neg(),
                    )
                } else if j == i + 1 {
                    Some(t.a2r_dag[2 * ku + 2].neg())
                } else {
                    Some(ctx.id.clone())
                }
            } else {
                if !need(2 * k + 2) {
                    None
                } else if j + 2 == i {
                    Some(t.hl[2 * ku + 1].mul(&ctx.hl_inv(2 * ku - 1)?))
                } else if j + 1 == i {
                    Some(t.hl[2 * ku + 1].mul(&t.a1r[2 * ku]).mul(&ctx.hr_inv(2 * ku)?))
                } else if j == i {
                    Some(t.a1l[2 * ku + 1].mul(&t.a2r_dag[2 * ku + 2]).neg())
                } else {
                    Some(t.a1l[2 * ku + 1].clone())
                }
            }
        }
        OperatorKind::JlInv => {
            let ku = i / 2;
            if i % 2 == 0 {
                // row 2k: cols 2k-2..2k+1
                if !need(2 * k + 1) {
                    None
                } else if j + 2 == i {
                    // row 2k, col 2k-2: from column family (2k'+2, 2k') with k' = k-1
                    Some(t.hl[2 * ku].mul(&ctx.hl_inv(2 * ku - 2)?))
                } else if j + 1 == i {
                    Some(t.hl[2 * ku].mul(&t.a1r[2 * ku - 1]).mul(&ctx.hr_inv(2 * ku - 1)?))
                } else if j == i {
                    Some(t.a1l[2 * ku].mul(&t.a2r_dag[2 * ku + 1]).neg())
                } else {
                    Some(t.a1l[2 * ku].clone())
                }
            } else {
                // row 2k+1: cols 2k..2k+3
                if !need(2 * k + 3) {
                    None
                } else if j + 1 == i {
                    Some(
                        t.hr[2 * ku + 1]
                            .mul(&t.a2l_dag[2 * ku + 2])
                            .mul(&ctx.hl_inv(2 * ku)?)
                            .neg(),
                    )
                } else if j == i {
                    Some(
                        t.hr[2 * ku + 1]
                            .mul(&t.a2l_dag[2 * ku + 2])
                            .mul(&t.a1r[2 * ku + 1])
                            .mul(&ctx.hr_inv(2 * ku + 1)?)
                            .neg(),
                    )
                } else if j == i + 1 {
                    Some(t.a2r_dag[2 * ku + 3].neg())
                } else {
                    Some(ctx.id.clone())
                }
            }
        }
        OperatorKind::JrInv => {
            let ku = i / 2;
            if i % 2 == 0 {
                if !need(2 * k + 1) {
                    None
                } else if j + 2 == i {
                    Some(t.hr[2 * ku].mul(&ctx.hr_inv(2 * ku - 2)?))
                } else if j + 1 == i {
                    Some(t.hr[2 * ku].mul(&t.a2l_dag[2 * ku - 1]).mul(&ctx.hl_inv(2 * ku - 1)?))
                } else if j == i {
                    Some(t.a2r_dag[2 * ku].mul(&t.a1l[2 * ku + 1]).neg())
                } else {
                    Some(t.a2r_dag[2 * ku].clone())
                }
            } else {
                if !need(2 * k + 3) {
                    None
                } else if j + 1 == i {
                    Some(
                        t.hl[2 * ku + 1]
                            .mul(&t.a1r[2 * ku + 2])
                            .mul(&ctx.hr_inv(2 * ku)?)
                            .neg(),
                    )
                } else if j == i {
                    Some(
                        t.hl[2 * ku + 1]
                            .mul(&t.a1r[2 * ku + 2])
                            .mul(&t.a2l_dag[2 * ku + 1])
                            .mul(&ctx.hl_inv(2 * ku + 1)?)
                            .neg(),
                    )
                } else if j == i + 1 {
                    Some(t.a1l[2 * ku + 3].neg())
                } else {
                    Some(ctx.id.clone())
                }
            }
        }
        OperatorKind::C(0) => {
            let ku = i / 2;
            if i % 2 == 0 {
                if !need(2 * k) {
                    None
                } else if j + 1 == i {
                    Some(ctx.id.sub(&t.a2r_dag[2 * ku].mul(&t.a1l[2 * ku])))
                } else {
                    Some(t.a2r_dag[2 * ku].clone())
                }
            } else if !need(2 * k + 2) {
                None
            } else if j == i {
                Some(t.a1l[2 * ku + 2].neg())
            } else {
                Some(ctx.id.clone())
            }
        }
        OperatorKind::CInv(0) => {
            let ku = i / 2;
            if i % 2 == 0 {
                if !need(2 * k) {
                    None
                } else if j + 1 == i {
                    Some(ctx.id.sub(&t.a1l[2 * ku].mul(&t.a2r_dag[2 * ku])))
                } else {
                    Some(t.a1l[2 * ku].clone())
                }
            } else if !need(2 * k + 2) {
                None
            } else if j == i {
                Some(t.a2r_dag[2 * ku + 2].neg())
            } else {
                Some(ctx.id.clone())
            }
        }
        OperatorKind::C(-1) => {
            let ku = i / 2;
            if !need(2 * k + 1) {
                None
            } else if i % 2 == 0 {
                if j == i {
                    Some(t.a2r_dag[2 * ku + 1].neg())
                } else {
                    Some(ctx.id.clone())
                }
            } else if j + 1 == i {
                Some(ctx.id.sub(&t.a1l[2 * ku + 1].mul(&t.a2r_dag[2 * ku + 1])))
            } else {
                Some(t.a1l[2 * ku + 1].clone())
            }
        }
        OperatorKind::CInv(-1) => {
            let ku = i / 2;
            if !need(2 * k + 1) {
                None
            } else if i % 2 == 0 {
                if j == i {
                    Some(t.a1l[2 * ku + 1].neg())
                } else {
                    Some(ctx.id.clone())
                }
            } else if j + 1 == i {
                Some(ctx.id.sub(&t.a2r_dag[2 * ku + 1].mul(&t.a1l[2 * ku + 1])))
            } else {
                Some(t.a2r_dag[2 * ku + 1].clone())
            }
        }
        _ => return Err(Error::Domain(format!("no closed form implemented for {kind}"))),
    };
    Ok(entry)
}

/// Assemble the closed-form operator on nb blocks; out-of-table entries are
/// left zero (they sit in the truncation margin anyway).
pub fn synthetic_operator(
    table: &VerblunskyTable,
    kind: OperatorKind,
    nb: usize,
) -> Result<BlockMatrix> {
    let mut out = BlockMatrix::zeros(table.m, nb);
    for i in 0..nb {
        for j in 0..nb {
            if let Some(e) = closed_form_entry(table, kind, i, j)? {
                out.set_block(i, j, &e);
            }
        }
    }
    Ok(out)
}

/// Blockwise comparison of the closed-form operator against the dressed
/// one, on the interior where both are meaningful. Returns per-block items
/// (i, j, residual) and the worst relative residual.
pub fn synthetic_vs_dressed(
    table: &VerblunskyTable,
    dressed: &DressedOperator,
) -> Result<(f64, Vec<(usize, usize, f64)>)> {
    let nb = dressed.payload.num_blocks();
    let synth = synthetic_operator(table, dressed.kind, nb)?;
    let hi = nb.saturating_sub(dressed.margin + 2);
    let scale = dressed.payload.interior_max_norm(dressed.margin).max(1e-300);
    let mut items = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..hi {
        for j in 0..hi {
            if !in_band(dressed.kind, i, j) {
                continue;
            }
            if closed_form_entry(table, dressed.kind, i, j)?.is_none() {
                continue;
            }
            let res = synth.block(i, j).max_diff(&dressed.payload.block(i, j)) / scale;
            worst = worst.max(res);
            items.push((i, j, res));
        }
    }
    Ok((worst, items))
}

/// The alternate quasi-norm closed forms of the intertwiner entries, which
/// must agree with the α forms; the residuals double-check the coupling
/// relations through the operator entries.
pub fn intertwiner_alternate_form_residuals(table: &VerblunskyTable) -> Result<Vec<(String, f64)>> {
    let t = table;
    let ctx = EntryCtx::new(table);
    let id = &ctx.id;
    let mut out: Vec<(String, f64)> = Vec::new();
    let mut worst: std::collections::BTreeMap<&str, f64> = Default::default();
    let mut upd = |name: &'static str, v: f64| {
        let e = worst.entry(name).or_insert(0.0);
        if v > *e {
            *e = v;
        }
    };
    let n = t.len();
    for k in 0..(n.saturating_sub(2) + 1) / 2 {
        let even = 2 * k;
        let odd = 2 * k + 1;
        if even >= 1 && even < n {
            // C0 (2k,2k-1): I - α2R† α1L = h^R_{2k} (h^R_{2k-1})^{-1}
            let a = id.sub(&t.a2r_dag[even].mul(&t.a1l[even]));
            let b = t.hr[even].mul(&ctx.hr_inv(even - 1)?);
            upd("c0-subdiag", a.max_diff(&b));
            // C0 (2k,2k): α2R† = h^R α2L† (h^L)^{-1}
            let a = t.a2r_dag[even].clone();
            let b = t.hr[even].mul(&t.a2l_dag[even]).mul(&ctx.hl_inv(even)?);
            upd("c0-diag-even", a.max_diff(&b));
        }
        if odd < n && odd + 1 < n {
            // C0 (2k+1,2k+1): -α1L_{2k+2} = -h^L_{2k+1} α1R_{2k+2} (h^R_{2k+1})^{-1}
            let a = t.a1l[odd + 1].neg();
            let b = t.hl[odd].mul(&t.a1r[odd + 1]).mul(&ctx.hr_inv(odd)?).neg();
            upd("c0-diag-odd", a.max_diff(&b));
            // C0 (2k+1,2k+2): I = h^L_{2k+1}(I - α1R α2L†)(h^L_{2k+2})^{-1}
            let f = id.sub(&t.a1r[odd + 1].mul(&t.a2l_dag[odd + 1]));
            let b = t.hl[odd].mul(&f).mul(&ctx.hl_inv(odd + 1)?);
            upd("c0-superdiag", id.max_diff(&b));
        }
        if odd < n {
            // C[-1] (2k,2k): -α2R†_{2k+1} = -h^R_{2k} α2L†_{2k+1} (h^L_{2k})^{-1}
            let a = t.a2r_dag[odd].neg();
            let b = t.hr[even].mul(&t.a2l_dag[odd]).mul(&ctx.hl_inv(even)?).neg();
            upd("cm1-diag-even", a.max_diff(&b));
            // C[-1] (2k+1,2k): I - α1L α2R† = h^L_{2k+1} (h^L_{2k})^{-1}
            let a = id.sub(&t.a1l[odd].mul(&t.a2r_dag[odd]));
            let b = t.hl[odd].mul(&ctx.hl_inv(even)?);
            upd("cm1-subdiag", a.max_diff(&b));
            // C[-1] (2k+1,2k+1): α1L = h^L α1R (h^R)^{-1}
            let a = t.a1l[odd].clone();
            let b = t.hl[odd].mul(&t.a1r[odd]).mul(&ctx.hr_inv(odd)?);
            upd("cm1-diag-odd", a.max_diff(&b));
        }
    }
    for (name, v) in worst {
        out.push((name.to_string(), v));
    }
    Ok(out)
}

/// Interior residuals of the power identities J^R = C_[0] C_[1]^{-1} =
/// C_[-1] C_[0]^{-1} and (J^L)^{-1} = C_[0]^{-1} C_[-1], J^L = C_[1]^{-1} C_[0].
pub fn power_identity_residuals(fl: &Factorization, fr: &Factorization) -> Result<Vec<(String, f64)>> {
    let jr = dress(fl, fr, OperatorKind::Jr)?;
    let jl = dress(fl, fr, OperatorKind::Jl)?;
    let jl_inv = dress(fl, fr, OperatorKind::JlInv)?;
    let c0 = dress(fl, fr, OperatorKind::C(0))?;
    let c1 = dress(fl, fr, OperatorKind::C(1))?;
    let cm1 = dress(fl, fr, OperatorKind::C(-1))?;
    let c0_inv = dress(fl, fr, OperatorKind::CInv(0))?;
    let c1_inv = dress(fl, fr, OperatorKind::CInv(1))?;
    let margin = 4;
    let rel = |a: &BlockMatrix, b: &BlockMatrix| {
        a.interior_max_diff(b, margin) / a.interior_max_norm(margin).max(1e-300)
    };
    Ok(vec![
        ("power:jr=c0*c1inv".to_string(), rel(&jr.payload, &c0.payload.mul(&c1_inv.payload))),
        ("power:jr=cm1*c0inv".to_string(), rel(&jr.payload, &cm1.payload.mul(&c0_inv.payload))),
        ("power:jl=c0inv*c1".to_string(), rel(&jl.payload, &c0_inv.payload.mul(&c1.payload))),
        ("power:jlinv=c1inv*c0".to_string(), rel(&jl_inv.payload, &c1_inv.payload.mul(&c0.payload))),
        ("power:jlinv=c0inv*cm1".to_string(), rel(&jl_inv.payload, &c0_inv.payload.mul(&cm1.payload))),
    ])
}

/// Displayed boundary-row variants that differ from the general-pattern
/// value at the first indices; reported against the dressed blocks so the
/// dressing route stays the arbiter. These are logged, not asserted.
pub fn boundary_row_variants(
    table: &VerblunskyTable,
    jl: &DressedOperator,
    jr: &DressedOperator,
) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    if table.len() < 3 {
        return out;
    }
    let scale = jl.payload.interior_max_norm(2).max(1e-300);
    // variant reading of (J^L)_{1,1} with the first-kind right coefficient
    let v = table.a1r[2].dagger().mul(&table.a1l[2]).neg();
    out.push(("log:jl-1-1-variant".into(), v.max_diff(&jl.payload.block(1, 1)) / scale));
    // variant reading of (J^L)_{1,2}
    let v = table.a1r[2].dagger();
    out.push(("log:jl-1-2-variant".into(), v.max_diff(&jl.payload.block(1, 2)) / scale));
    // variant reading of (J^R)_{1,2} with index 2 instead of 1
    let v = table.a1l[2].clone();
    out.push(("log:jr-1-2-variant".into(), v.max_diff(&jr.payload.block(1, 2)) / scale));
    out
}

// ---------------------------------------------------------------------------
// Recursion residuals: banded operators applied to the families.

/// The cdag companion of a family member: ψ(z) = Σ c_k^† z^k = (φ(z̄))^†.
fn cdag_poly(p: &MatrixLaurentPoly) -> MatrixLaurentPoly {
    let mut q = MatrixLaurentPoly::zero(p.block_size());
    for (k, c) in p.coeffs() {
        q.set_coeff(*k, &c.dagger());
    }
    q
}

pub struct RecursionReport {
    pub items: Vec<(String, f64)>,
    pub scale: f64,
}

/// Five-term recursions and mixed relations, via the closed-form banded
/// operators applied to the families at the sample points. Covers the z and
/// z^{-1} directions for all four families, the intertwiner relations that
/// connect left and right families through C_[0]^{±1} and C_[-1]^{±1}, and
/// the boundary rows (index 0 and 1) that the band structure induces.
pub fn recursion_residuals(
    fam: &CmvFamilies,
    table: &VerblunskyTable,
    samples: &[C64],
) -> Result<RecursionReport> {
    let nb = fam.nb;
    let mut items: Vec<(String, f64)> = Vec::new();
    let mut scale = 1.0f64;
    let psi2l: Vec<MatrixLaurentPoly> = fam.phi2l.iter().map(cdag_poly).collect();
    let psi2r: Vec<MatrixLaurentPoly> = fam.phi2r.iter().map(cdag_poly).collect();

    // action of a banded operator's row r on a column family
    let row_apply = |kind: OperatorKind, r: usize, family: &[MatrixLaurentPoly], z: C64| -> Result<Option<CMat>> {
        let mut acc = CMat::zeros(fam.m, fam.m);
        for j in 0..nb {
            match closed_form_entry(table, kind, r, j)? {
                Some(e) => acc = acc.add(&e.mul(&family[j].eval(z)?)),
                None if in_band(kind, r, j) => return Ok(None),
                None => {}
            }
        }
        // reject rows whose band sticks out of the truncation
        if (0..4).any(|d| in_band(kind, r, nb + d)) {
            return Ok(None);
        }
        Ok(Some(acc))
    };
    let col_apply = |kind: OperatorKind, cidx: usize, family: &[MatrixLaurentPoly], z: C64| -> Result<Option<CMat>> {
        let mut acc = CMat::zeros(fam.m, fam.m);
        for j in 0..nb {
            match closed_form_entry(table, kind, j, cidx)? {
                Some(e) => acc = acc.add(&family[j].eval(z)?.mul(&e)),
                None if in_band(kind, j, cidx) => return Ok(None),
                None => {}
            }
        }
        if (0..4).any(|d| in_band(kind, nb + d, cidx)) {
            return Ok(None);
        }
        Ok(Some(acc))
    };

    let mut push = |name: String, worst: f64| items.push((name, worst));

    for &z in samples {
        scale = scale.max(fam.phi1l.iter().map(|p| p.eval(z).map(|v| v.norm_max()).unwrap_or(0.0)).fold(0.0, f64::max));
    }

    // z φ₁^L = J^L φ₁^L rows; z^{-1} φ₁^L = (J^L)^{-1} rows
    for (kind, pow, fam_vec, name) in [
        (OperatorKind::Jl, 1i32, &fam.phi1l, "five-term:phi1L:z"),
        (OperatorKind::JlInv, -1, &fam.phi1l, "five-term:phi1L:zinv"),
    ] {
        for r in 0..nb {
            let mut worst = 0.0f64;
            let mut any = false;
            for &z in samples {
                if let Some(lhs) = row_apply(kind, r, fam_vec, z)? {
                    any = true;
                    let rhs = fam_vec[r].eval(z)?.scale(z.powi(pow));
                    worst = worst.max(lhs.max_diff(&rhs));
                }
            }
            if any {
                push(format!("{name}:row{r}"), worst);
            }
        }
    }

    // ψ₂^L(w) (J^L-cols) = w^{-1} ψ₂^L ; and the z-direction through (J^L)^{-1} cols
    for (kind, pow, name) in [
        (OperatorKind::Jl, -1i32, "five-term:phi2L:zinv"),
        (OperatorKind::JlInv, 1, "five-term:phi2L:z"),
    ] {
        for cidx in 0..nb {
            let mut worst = 0.0f64;
            let mut any = false;
            for &w in samples {
                if let Some(lhs) = col_apply(kind, cidx, &psi2l, w)? {
                    any = true;
                    let rhs = psi2l[cidx].eval(w)?.scale(w.powi(pow));
                    worst = worst.max(lhs.max_diff(&rhs));
                }
            }
            if any {
                push(format!("{name}:col{cidx}"), worst);
            }
        }
    }

    // φ₁^R J^R = z^{-1} φ₁^R columns; (J^R)^{-1} gives the z direction
    for (kind, pow, name) in [
        (OperatorKind::Jr, -1i32, "five-term:phi1R:zinv"),
        (OperatorKind::JrInv, 1, "five-term:phi1R:z"),
    ] {
        for cidx in 0..nb {
            let mut worst = 0.0f64;
            let mut any = false;
            for &z in samples {
                if let Some(lhs) = col_apply(kind, cidx, &fam.phi1r, z)? {
                    any = true;
                    let rhs = fam.phi1r[cidx].eval(z)?.scale(z.powi(pow));
                    worst = worst.max(lhs.max_diff(&rhs));
                }
            }
            if any {
                push(format!("{name}:col{cidx}"), worst);
            }
        }
    }

    // J^R ψ₂^R = w ψ₂^R rows; inverse gives w^{-1}
    for (kind, pow, name) in [
        (OperatorKind::Jr, 1i32, "five-term:phi2R:z"),
        (OperatorKind::JrInv, -1, "five-term:phi2R:zinv"),
    ] {
        for r in 0..nb {
            let mut worst = 0.0f64;
            let mut any = false;
            for &w in samples {
                if let Some(lhs) = row_apply(kind, r, &psi2r, w)? {
                    any = true;
                    let rhs = psi2r[r].eval(w)?.scale(w.powi(pow));
                    worst = worst.max(lhs.max_diff(&rhs));
                }
            }
            if any {
                push(format!("{name}:row{r}"), worst);
            }
        }
    }

    // intertwiner relations: C_[p] φ₁^L(z) = z^p ψ₂^R(1/z) rows, and
    // φ₁^R(z) C_[p] = z^p ψ₂^L(1/z) columns; inverses go the other way.
    for (kind, p, name) in [
        (OperatorKind::C(0), 0i32, "mixed:c0"),
        (OperatorKind::C(-1), -1, "mixed:cm1"),
    ] {
        for r in 0..nb {
            let mut worst = 0.0f64;
            let mut any = false;
            for &z in samples {
                if let Some(lhs) = row_apply(kind, r, &fam.phi1l, z)? {
                    any = true;
                    let rhs = psi2r[r].eval(z.inv())?.scale(z.powi(p));
                    worst = worst.max(lhs.max_diff(&rhs));
                }
            }
            if any {
                push(format!("{name}:left:row{r}"), worst);
            }
        }
        for cidx in 0..nb {
            let mut worst = 0.0f64;
            let mut any = false;
            for &z in samples {
                if let Some(lhs) = col_apply(kind, cidx, &fam.phi1r, z)? {
                    any = true;
                    let rhs = psi2l[cidx].eval(z.inv())?.scale(z.powi(p));
                    worst = worst.max(lhs.max_diff(&rhs));
                }
            }
            if any {
                push(format!("{name}:right:col{cidx}"), worst);
            }
        }
    }
    // inverse intertwiner relations: C_[p]^{-1} ψ₂^R(1/z)-rows recover
    // z^{-p} φ₁^L. The reflected argument stays checkable because the rows
    // are evaluated pointwise.
    for (kind, p, name) in [
        (OperatorKind::CInv(0), 0i32, "mixed:c0inv"),
        (OperatorKind::CInv(-1), -1, "mixed:cm1inv"),
    ] {
        for r in 0..nb {
            let mut worst = 0.0f64;
            let mut any = false;
            for &z in samples {
                let mut acc = CMat::zeros(fam.m, fam.m);
                let mut complete = true;
                for j in 0..nb {
                    match closed_form_entry(table, kind, r, j)? {
                        Some(e) => acc = acc.add(&e.mul(&psi2r[j].eval(z.inv())?)),
                        None if in_band(kind, r, j) => {
                            complete = false;
                            break;
                        }
                        None => {}
                    }
                }
                if !complete || (0..4).any(|d| in_band(kind, r, nb + d)) {
                    continue;
                }
                any = true;
                let rhs = fam.phi1l[r].eval(z)?.scale(z.powi(-p));
                worst = worst.max(acc.max_diff(&rhs));
            }
            if any {
                push(format!("{name}:left:row{r}"), worst);
            }
        }
    }

    Ok(RecursionReport { items, scale: scale.max(1.0) })
}

/// Eigen-relations of the dressed operators on the families, interior rows.
pub fn eigen_relation_residuals(
    fam: &CmvFamilies,
    fl: &Factorization,
    fr: &Factorization,
    samples: &[C64],
) -> Result<Vec<(String, f64)>> {
    let nb = fam.nb;
    let m = fam.m;
    let psi2l: Vec<MatrixLaurentPoly> = fam.phi2l.iter().map(cdag_poly).collect();
    let psi2r: Vec<MatrixLaurentPoly> = fam.phi2r.iter().map(cdag_poly).collect();
    let jl = dress(fl, fr, OperatorKind::Jl)?;
    let jr = dress(fl, fr, OperatorKind::Jr)?;
    // dressed rows are exact up to nb-3; column sums additionally touch
    // rows two past the column index, so they stop at nb-5
    let hi_row = nb.saturating_sub(3);
    let hi_col = nb.saturating_sub(5);
    let mut out = Vec::new();
    let mut worst_jl = 0.0f64;
    let mut worst_jl_dag = 0.0f64;
    let mut worst_jr = 0.0f64;
    let mut worst_jr_dag = 0.0f64;
    for &z in samples {
        let phi1l_vals: Vec<CMat> = fam.phi1l.iter().map(|p| p.eval(z)).collect::<Result<_>>()?;
        let psi2l_vals: Vec<CMat> = psi2l.iter().map(|p| p.eval(z)).collect::<Result<_>>()?;
        let phi1r_vals: Vec<CMat> = fam.phi1r.iter().map(|p| p.eval(z)).collect::<Result<_>>()?;
        let psi2r_vals: Vec<CMat> = psi2r.iter().map(|p| p.eval(z)).collect::<Result<_>>()?;
        for r in 0..hi_row {
            // J^L φ₁^L = z φ₁^L
            let mut acc = CMat::zeros(m, m);
            for j in 0..nb {
                if in_band(OperatorKind::Jl, r, j) {
                    acc = acc.add(&jl.payload.block(r, j).mul(&phi1l_vals[j]));
                }
            }
            worst_jl = worst_jl.max(acc.max_diff(&phi1l_vals[r].scale(z)));
            // J^R (φ₂^R)† = z̄ (φ₂^R)†, transported to ψ₂^R rows
            let mut acc = CMat::zeros(m, m);
            for j in 0..nb {
                if in_band(OperatorKind::Jr, r, j) {
                    acc = acc.add(&jr.payload.block(r, j).mul(&psi2r_vals[j]));
                }
            }
            worst_jr_dag = worst_jr_dag.max(acc.max_diff(&psi2r_vals[r].scale(z)));
        }
        for r in 0..hi_col {
            // (J^L)† φ₂^L = z^{-1} φ₂^L, transported to ψ₂^L columns
            let mut acc = CMat::zeros(m, m);
            for j in 0..nb {
                if in_band(OperatorKind::Jl, j, r) {
                    acc = acc.add(&psi2l_vals[j].mul(&jl.payload.block(j, r)));
                }
            }
            worst_jl_dag = worst_jl_dag.max(acc.max_diff(&psi2l_vals[r].scale(z.inv())));
            // φ₁^R J^R = z^{-1} φ₁^R
            let mut acc = CMat::zeros(m, m);
            for j in 0..nb {
                if in_band(OperatorKind::Jr, j, r) {
                    acc = acc.add(&phi1r_vals[j].mul(&jr.payload.block(j, r)));
                }
            }
            worst_jr = worst_jr.max(acc.max_diff(&phi1r_vals[r].scale(z.inv())));
        }
    }
    out.push(("eigen:jl-phi1L".to_string(), worst_jl));
    out.push(("eigen:jl-phi2L".to_string(), worst_jl_dag));
    out.push(("eigen:jr-phi1R".to_string(), worst_jr));
    out.push(("eigen:jr-phi2R".to_string(), worst_jr_dag));
    Ok(out)
}

/// The eight Szegő recursion relations at the sampled points, interior l.
pub fn szego_recursion_residuals(
    szego: &SzegoFamilies,
    table: &VerblunskyTable,
    samples: &[C64],
) -> Result<Vec<(String, f64)>> {
    let n = table.len();
    let id = CMat::identity(table.m);
    let mut worst = vec![0.0f64; 8];
    let star = |p: &MatrixLaurentPoly, deg: i64| p.reciprocal(deg);
    for &z in samples {
        for l in 0..n / 2 {
            let l2 = 2 * l;
            // relations around the even/odd seam; guard index availability
            if l2 + 2 < n {
                // z P^L_{1,2l+1} - P^L_{1,2l+2} = -α^L_{1,2l+2} (P^R_{2,2l+1})*
                let lhs = szego.p1l[l2 + 1].eval(z)?.scale(z).sub(&szego.p1l[l2 + 2].eval(z)?);
                let rhs = table.a1l[l2 + 2].mul(&star(&szego.p2r[l2 + 1], (l2 + 1) as i64).eval(z)?).neg();
                worst[0] = worst[0].max(lhs.max_diff(&rhs));
                // z P^R_{1,2l+1} - P^R_{1,2l+2} = -(P^L_{2,2l+1})* α^R_{1,2l+2}
                let lhs = szego.p1r[l2 + 1].eval(z)?.scale(z).sub(&szego.p1r[l2 + 2].eval(z)?);
                let rhs = star(&szego.p2l[l2 + 1], (l2 + 1) as i64).eval(z)?.mul(&table.a1r[l2 + 2]).neg();
                worst[3] = worst[3].max(lhs.max_diff(&rhs));
            }
            if l2 >= 1 {
                // (P^R_{2,2l})* - (I - α^R_{2,2l}† α^L_{1,2l})(P^R_{2,2l-1})* = α^R_{2,2l}† P^L_{1,2l}
                let f = id.sub(&table.a2r_dag[l2].mul(&table.a1l[l2]));
                let lhs = star(&szego.p2r[l2], l2 as i64)
                    .eval(z)?
                    .sub(&f.mul(&star(&szego.p2r[l2 - 1], (l2 - 1) as i64).eval(z)?));
                let rhs = table.a2r_dag[l2].mul(&szego.p1l[l2].eval(z)?);
                worst[1] = worst[1].max(lhs.max_diff(&rhs));
                // (P^L_{2,2l})* - (P^L_{2,2l-1})*(I - α^R_{1,2l} α^L_{2,2l}†) = P^R_{1,2l} α^L_{2,2l}†
                let f = id.sub(&table.a1r[l2].mul(&table.a2l_dag[l2]));
                let lhs = star(&szego.p2l[l2], l2 as i64)
                    .eval(z)?
                    .sub(&star(&szego.p2l[l2 - 1], (l2 - 1) as i64).eval(z)?.mul(&f));
                let rhs = szego.p1r[l2].eval(z)?.mul(&table.a2l_dag[l2]);
                worst[2] = worst[2].max(lhs.max_diff(&rhs));
            }
            if l2 + 1 < n {
                // (P^R_{2,2l+1})* - (P^R_{2,2l})* = α^R_{2,2l+1}† z P^L_{1,2l}
                let lhs = star(&szego.p2r[l2 + 1], (l2 + 1) as i64)
                    .eval(z)?
                    .sub(&star(&szego.p2r[l2], l2 as i64).eval(z)?);
                let rhs = table.a2r_dag[l2 + 1].mul(&szego.p1l[l2].eval(z)?).scale(z);
                worst[4] = worst[4].max(lhs.max_diff(&rhs));
                // P^L_{1,2l+1} - (I - α^L_{1,2l+1} α^R_{2,2l+1}†) z P^L_{1,2l} = α^L_{1,2l+1}(P^R_{2,2l+1})*
                let f = id.sub(&table.a1l[l2 + 1].mul(&table.a2r_dag[l2 + 1]));
                let lhs = szego.p1l[l2 + 1]
                    .eval(z)?
                    .sub(&f.mul(&szego.p1l[l2].eval(z)?).scale(z));
                let rhs = table.a1l[l2 + 1].mul(&star(&szego.p2r[l2 + 1], (l2 + 1) as i64).eval(z)?);
                worst[5] = worst[5].max(lhs.max_diff(&rhs));
                // P^R_{1,2l+1} - z P^R_{1,2l}(I - α^L_{2,2l+1}† α^R_{1,2l+1}) = (P^L_{2,2l+1})* α^R_{1,2l+1}
                let f = id.sub(&table.a2l_dag[l2 + 1].mul(&table.a1r[l2 + 1]));
                let lhs = szego.p1r[l2 + 1]
                    .eval(z)?
                    .sub(&szego.p1r[l2].eval(z)?.mul(&f).scale(z));
                let rhs = star(&szego.p2l[l2 + 1], (l2 + 1) as i64).eval(z)?.mul(&table.a1r[l2 + 1]);
                worst[6] = worst[6].max(lhs.max_diff(&rhs));
                // (P^L_{2,2l})* - (P^L_{2,2l+1})* = -z P^R_{1,2l} α^L_{2,2l+1}†
                let lhs = star(&szego.p2l[l2], l2 as i64)
                    .eval(z)?
                    .sub(&star(&szego.p2l[l2 + 1], (l2 + 1) as i64).eval(z)?);
                let rhs = szego.p1r[l2].eval(z)?.mul(&table.a2l_dag[l2 + 1]).scale(z).neg();
                worst[7] = worst[7].max(lhs.max_diff(&rhs));
            }
        }
    }
    let names = [
        "szego:zP1L-step",
        "szego:P2Rstar-step",
        "szego:P2Lstar-step",
        "szego:zP1R-step",
        "szego:P2Rstar-diff",
        "szego:P1L-mixed",
        "szego:P1R-mixed",
        "szego:P2Lstar-diff",
    ];
    Ok(names.iter().zip(worst).map(|(n, w)| (n.to_string(), w)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled::{herm2, lebesgue, nonherm2};
    use crate::cmat::c;
    use crate::cmv::{build_moment_matrix, required_moment_order, upsilon};
    use crate::factor::block_lu;
    use crate::families::{families_from_factorizations, szego_from_families, verblunsky_extract};
    use crate::measure::MatrixMeasure;

    fn setup(mu: &MatrixMeasure, nb: usize) -> (Factorization, Factorization) {
        let ms = mu.moments(required_moment_order(nb)).unwrap();
        let gl = build_moment_matrix(&ms, Side::Left, nb).unwrap();
        let gr = build_moment_matrix(&ms, Side::Right, nb).unwrap();
        (block_lu(&gl, Side::Left).unwrap(), block_lu(&gr, Side::Right).unwrap())
    }

    #[test]
    fn lebesgue_dressing_is_upsilon() {
        let mu = lebesgue();
        let (fl, fr) = setup(&mu, 8);
        let jl = dress(&fl, &fr, OperatorKind::Jl).unwrap();
        assert!(jl.payload.dense().max_diff(upsilon(1, 8).dense()) < 1e-13);
        assert!(jl.route_gap < 1e-13);
        let jr = dress(&fl, &fr, OperatorKind::Jr).unwrap();
        assert!(jr.payload.dense().max_diff(upsilon(1, 8).dense()) < 1e-13);
    }

    #[test]
    fn dual_routes_agree_interior() {
        let mu = nonherm2();
        let (fl, fr) = setup(&mu, 12);
        for kind in [
            OperatorKind::Jl,
            OperatorKind::JlInv,
            OperatorKind::Jr,
            OperatorKind::JrInv,
            OperatorKind::C(0),
            OperatorKind::C(1),
            OperatorKind::C(-1),
            OperatorKind::CInv(0),
            OperatorKind::CInv(-1),
        ] {
            let op = dress(&fl, &fr, kind).unwrap();
            assert!(op.route_gap < 1e-10, "{kind}: route gap {:.2e}", op.route_gap);
            assert!(band_pattern_defect(&op) < 1e-12, "{kind}: band defect");
        }
    }

    #[test]
    fn closed_forms_match_dressed() {
        let mu = nonherm2();
        let (fl, fr) = setup(&mu, 12);
        let table = verblunsky_extract(&fl, &fr).unwrap();
        for kind in [
            OperatorKind::Jl,
            OperatorKind::JlInv,
            OperatorKind::Jr,
            OperatorKind::JrInv,
            OperatorKind::C(0),
            OperatorKind::CInv(0),
            OperatorKind::C(-1),
            OperatorKind::CInv(-1),
        ] {
            let op = dress(&fl, &fr, kind).unwrap();
            let (worst, _) = synthetic_vs_dressed(&table, &op).unwrap();
            assert!(worst < 1e-9, "{kind}: closed form vs dressed {worst:.2e}");
        }
    }

    #[test]
    fn alternate_forms_and_powers() {
        let mu = nonherm2();
        let (fl, fr) = setup(&mu, 12);
        let table = verblunsky_extract(&fl, &fr).unwrap();
        for (name, res) in intertwiner_alternate_form_residuals(&table).unwrap() {
            assert!(res < 1e-11, "{name}: {res:.2e}");
        }
        for (name, res) in power_identity_residuals(&fl, &fr).unwrap() {
            assert!(res < 1e-9, "{name}: {res:.2e}");
        }
    }

    #[test]
    fn recursions_hold_on_samples() {
        let mu = nonherm2();
        let (fl, fr) = setup(&mu, 12);
        let fam = families_from_factorizations(&fl, &fr).unwrap();
        let table = verblunsky_extract(&fl, &fr).unwrap();
        let samples = [c(0.8, 0.0), c(0.0, 1.0), c(-0.7, 1.0), c(1.25, 0.0), c(0.3, -0.9)];
        let report = recursion_residuals(&fam, &table, &samples).unwrap();
        assert!(report.items.len() > 40);
        for (name, res) in &report.items {
            assert!(*res < 1e-9 * report.scale, "{name}: {res:.2e}");
        }
    }

    #[test]
    fn eigen_relations_hold() {
        let mu = herm2();
        let (fl, fr) = setup(&mu, 12);
        let fam = families_from_factorizations(&fl, &fr).unwrap();
        let samples = [c(0.8, 0.3), c(1.1, -0.4)];
        for (name, res) in eigen_relation_residuals(&fam, &fl, &fr, &samples).unwrap() {
            assert!(res < 1e-10, "{name}: {res:.2e}");
        }
    }

    #[test]
    fn szego_recursions_hold() {
        for mu in [lebesgue(), crate::bundled::bernstein_szego(0.5, 64), nonherm2()] {
            let (fl, fr) = setup(&mu, 10);
            let fam = families_from_factorizations(&fl, &fr).unwrap();
            let szego = szego_from_families(&fam, &fl, &fr).unwrap();
            let table = verblunsky_extract(&fl, &fr).unwrap();
            let samples = [c(0.9, 0.2), c(-0.4, 0.8), c(1.2, 0.0)];
            for (name, res) in szego_recursion_residuals(&szego, &table, &samples).unwrap() {
                assert!(res < 1e-9, "{name}: {res:.2e}");
            }
        }
    }

    #[test]
    fn boundary_variant_log_exists() {
        let mu = nonherm2();
        let (fl, fr) = setup(&mu, 10);
        let table = verblunsky_extract(&fl, &fr).unwrap();
        let jl = dress(&fl, &fr, OperatorKind::Jl).unwrap();
        let jr = dress(&fl, &fr, OperatorKind::Jr).unwrap();
        let log = boundary_row_variants(&table, &jl, &jr);
        assert_eq!(log.len(), 3);
    }
}
