//! The verification suites: every closed-form identity in the library,
//! scored as residual reports at pinned tolerances.

use crate::block::BlockMatrix;
use crate::cmat::{C64, CMat};
use crate::cmv::{Side, build_moment_matrix, required_moment_order, structural_checks};
use crate::discrete::{ShiftSign, darboux_step, discrete_zs_residual, miwa_darboux_consistency, miwa_kernel_residuals, product_reconstruction, scalar_miwa_residuals};
use crate::error::{Error, Result};
use crate::factor::{Factorization, block_lu, schur_complement};
use crate::families::{
    CmvFamilies, SzegoFamilies, VerblunskyTable, biorthogonality_residual,
    families_from_factorizations, quasi_norm_integral_residual, quasi_orthogonality_residual,
    schur_route_eval, szego_from_families, szego_schur_route_eval, verblunsky_extract,
};
use crate::flows::{
    FlowAxis, FlowTimes, bilinear_residual, fd_tangent, flow_integrate,
    intertwiner_evolution_residual, lax_residual, refactorized_table, tangent_gap, toeplitz_rhs,
    wave_residuals, zs_residual,
};
use crate::kernels::{
    cd_formula_residuals, kernel_cross_residuals, kernel_diagonal_psd_defect, projector_apply,
    reproducing_residual, szego_kernel_residuals,
};
use crate::laurent::MatrixLaurentPoly;
use crate::measure::{MatrixMeasure, MeasureKind};
use crate::operators::{
    OperatorKind, band_pattern_defect, boundary_row_variants, dress, eigen_relation_residuals,
    intertwiner_alternate_form_residuals, power_identity_residuals, recursion_residuals,
    synthetic_vs_dressed, szego_recursion_residuals,
};
use crate::report::{Report, ReportBuilder};
use crate::sampling::{sample_pairs, sample_points};

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub blocks: usize,
    pub seed: u64,
    /// Override every tolerance (diagnostics only; defaults are pinned).
    pub tol: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { blocks: 12, seed: crate::sampling::DEFAULT_SEED, tol: None }
    }
}

pub struct SuiteOutcome {
    pub reports: Vec<Report>,
    pub skipped: Vec<String>,
}

pub const SUITES: [&str; 7] = [
    "structure",
    "biorthogonality",
    "recursion",
    "appendixB",
    "cd",
    "kernels-cross",
    "secondkind",
];

/// Subcommand-level checks that are not part of `verify --suite` but run
/// under `all`.
pub const EXTRA_CHECKS: [&str; 7] =
    ["factorize", "polys", "verblunsky", "flow", "bilinear", "darboux", "miwa"];

struct Ctx {
    measure: MatrixMeasure,
    name: String,
    nb: usize,
    seed: u64,
    tol_override: Option<f64>,
    gl: BlockMatrix,
    gr: BlockMatrix,
    fl: Factorization,
    fr: Factorization,
    fam: CmvFamilies,
    szego: SzegoFamilies,
    table: VerblunskyTable,
}

impl Ctx {
    fn new(measure: &MatrixMeasure, cfg: &VerifyConfig) -> Result<Ctx> {
        let nb = cfg.blocks;
        let ms = measure.moments(required_moment_order(nb) + 4)?;
        let gl = build_moment_matrix(&ms, Side::Left, nb)?;
        let gr = build_moment_matrix(&ms, Side::Right, nb)?;
        let fl = block_lu(&gl, Side::Left)?;
        let fr = block_lu(&gr, Side::Right)?;
        let fam = families_from_factorizations(&fl, &fr)?;
        let szego = szego_from_families(&fam, &fl, &fr)?;
        let table = verblunsky_extract(&fl, &fr)?;
        Ok(Ctx {
            measure: measure.clone(),
            name: measure.fingerprint(),
            nb,
            seed: cfg.seed,
            tol_override: cfg.tol,
            gl,
            gr,
            fl,
            fr,
            fam,
            szego,
            table,
        })
    }

    fn report(&self, check: &str, tol: f64) -> ReportBuilder {
        ReportBuilder::new(check, &self.name, self.nb, self.seed, self.tol_override.unwrap_or(tol))
    }

    fn is_trig(&self) -> bool {
        self.measure.kind() == MeasureKind::TrigPoly
    }
}

pub fn run_suite(measure: &MatrixMeasure, suite: &str, cfg: &VerifyConfig) -> Result<SuiteOutcome> {
    let ctx = Ctx::new(measure, cfg)?;
    match suite {
        "structure" => suite_structure(&ctx),
        "biorthogonality" => suite_biorthogonality(&ctx),
        "recursion" => suite_recursion(&ctx),
        "appendixB" => suite_coefficients(&ctx),
        "cd" => suite_cd(&ctx),
        "kernels-cross" => suite_kernels_cross(&ctx),
        "secondkind" => suite_secondkind(&ctx),
        "factorize" => suite_factorize(&ctx),
        "polys" => suite_polys(&ctx),
        "verblunsky" => suite_verblunsky(&ctx),
        "flow" => suite_flow(&ctx),
        "bilinear" => suite_bilinear(&ctx),
        "darboux" => suite_darboux(&ctx),
        "miwa" => suite_miwa(&ctx),
        "elteorema" => suite_elteorema(&ctx),
        other => Err(Error::Config(format!("unknown suite '{other}'"))),
    }
}

fn done(reports: Vec<Report>) -> Result<SuiteOutcome> {
    Ok(SuiteOutcome { reports, skipped: Vec::new() })
}

fn skipped(reason: &str) -> Result<SuiteOutcome> {
    Ok(SuiteOutcome { reports: Vec::new(), skipped: vec![reason.to_string()] })
}

fn suite_structure(ctx: &Ctx) -> Result<SuiteOutcome> {
    let res = structural_checks(&ctx.gl, &ctx.gr);
    let mut rb = ctx.report("structure", 1e-12);
    rb.item("upsilon-commutes-gL", vec![], res.commute_left / res.scale);
    rb.item("upsilon-commutes-gR", vec![], res.commute_right / res.scale);
    rb.item("eta-intertwines", vec![], res.intertwine / res.scale);
    rb.item("eta-upsilon-flip", vec![], res.eta_upsilon);
    done(vec![rb.finish()])
}

fn suite_factorize(ctx: &Ctx) -> Result<SuiteOutcome> {
    let mut reports = Vec::new();
    let mut rb = ctx.report("factorization-reconstruction", 1e-11);
    rb.item("gL", vec![], ctx.fl.reconstruction_residual(&ctx.gl));
    rb.item("gR", vec![], ctx.fr.reconstruction_residual(&ctx.gr));
    reports.push(rb.finish());

    let mut rb = ctx.report("factorization-schur-diag", 1e-11);
    for (side, g, f) in [(Side::Left, &ctx.gl, &ctx.fl), (Side::Right, &ctx.gr, &ctx.fr)] {
        let scale = g.norm_fro();
        for l in 1..ctx.nb {
            let lead = BlockMatrix::from_dense(g.block_size(), l + 1, g.leading(l + 1))?;
            let sc = schur_complement(&lead, l)?;
            rb.item(format!("schur-{side}"), vec![l as i64], sc.max_diff(&f.diag()[l]) / scale);
        }
    }
    reports.push(rb.finish());

    if ctx.measure.is_hermitian() {
        let mut rb = ctx.report("factorization-hermitian-duality", 1e-11);
        let scale = ctx.gl.norm_fro();
        rb.item(
            "s1-dagger-vs-s2hat-inv",
            vec![],
            ctx.fl.s1().dagger().dense().max_diff(ctx.fl.s2_hat_inv().dense()) / scale,
        );
        rb.item(
            "z2-dagger-vs-z1hat-inv",
            vec![],
            ctx.fr.z2().dagger().dense().max_diff(ctx.fr.z1_hat().inverse()?.dense()) / scale,
        );
        let dh = ctx
            .fl
            .diag()
            .iter()
            .chain(ctx.fr.diag())
            .map(|d| d.max_diff(&d.dagger()))
            .fold(0.0, f64::max);
        rb.item("diag-hermitian", vec![], dh / scale);
        reports.push(rb.finish());
    }

    let mut rb = ctx.report("factorization-nested", 1e-12);
    let nb_small = ctx.nb.saturating_sub(4).max(2);
    let ms = ctx.measure.moments(required_moment_order(ctx.nb) + 4)?;
    let gls = build_moment_matrix(&ms, Side::Left, nb_small)?;
    let fls = block_lu(&gls, Side::Left)?;
    let dim = nb_small * ctx.gl.block_size();
    let scale = ctx.gl.norm_fro();
    rb.item(
        "leading-lower",
        vec![],
        ctx.fl.s1_inv().dense().submatrix(0, 0, dim, dim).max_diff(fls.s1_inv().dense()) / scale,
    );
    rb.item(
        "leading-upper",
        vec![],
        ctx.fl.s2().dense().submatrix(0, 0, dim, dim).max_diff(fls.s2().dense()) / scale,
    );
    reports.push(rb.finish());
    done(reports)
}

fn suite_biorthogonality(ctx: &Ctx) -> Result<SuiteOutcome> {
    let ms = ctx.measure.moments(required_moment_order(ctx.nb) + 4)?;
    let mut reports = Vec::new();
    let mut rb = ctx.report("biorthogonality", 1e-10);
    let (_, items) = biorthogonality_residual(&ctx.fam, &ms, ctx.nb)?;
    for (j, k, res) in items {
        rb.item("pairing", vec![j as i64, k as i64], res);
    }
    reports.push(rb.finish());

    let mut rb = ctx.report("quasi-orthogonality", 1e-10);
    rb.item("monomial-ranges", vec![], quasi_orthogonality_residual(&ctx.fam, &ms, ctx.nb)?);
    reports.push(rb.finish());

    let mut rb = ctx.report("quasi-norm-integrals", 1e-10);
    rb.item(
        "norm-integrals-vs-diag",
        vec![],
        quasi_norm_integral_residual(&ctx.fam, &ctx.table, &ms, ctx.nb)?,
    );
    reports.push(rb.finish());
    done(reports)
}

fn suite_polys(ctx: &Ctx) -> Result<SuiteOutcome> {
    let zs = sample_points(ctx.seed, &[0.7, 1.0, 1.4], 10);
    let mut reports = Vec::new();
    let mut rb = ctx.report("polys-dual-route", 1e-10);
    for l in 0..ctx.nb {
        let mut worst = [0.0f64; 4];
        for &z in &zs {
            let [p1l, p2l, p1r, p2r] =
                schur_route_eval(&ctx.gl, &ctx.gr, ctx.fl.diag(), ctx.fr.diag(), l, z)?;
            let scale = p1l.norm_fro().max(1.0);
            worst[0] = worst[0].max(ctx.fam.phi1l[l].eval(z)?.max_diff(&p1l) / scale);
            worst[1] = worst[1].max(ctx.fam.phi2l[l].eval(z)?.max_diff(&p2l) / scale);
            worst[2] = worst[2].max(ctx.fam.phi1r[l].eval(z)?.max_diff(&p1r) / scale);
            worst[3] = worst[3].max(ctx.fam.phi2r[l].eval(z)?.max_diff(&p2r) / scale);
        }
        for (tag, w) in ["phi1L", "phi2L", "phi1R", "phi2R"].iter().zip(worst) {
            rb.item(format!("schur-route:{tag}"), vec![l as i64], w);
        }
    }
    reports.push(rb.finish());

    let mut rb = ctx.report("szego-dual-route", 1e-10);
    for l in 0..ctx.nb {
        let mut worst = [0.0f64; 4];
        for &z in &zs {
            let [p1l, p2l, p1r, p2r] =
                szego_schur_route_eval(&ctx.gl, &ctx.gr, ctx.fl.diag(), ctx.fr.diag(), l, z)?;
            let scale = p1l.norm_fro().max(1.0);
            worst[0] = worst[0].max(ctx.szego.p1l[l].eval(z)?.max_diff(&p1l) / scale);
            worst[1] = worst[1].max(ctx.szego.p2l[l].eval(z)?.max_diff(&p2l) / scale);
            worst[2] = worst[2].max(ctx.szego.p1r[l].eval(z)?.max_diff(&p1r) / scale);
            worst[3] = worst[3].max(ctx.szego.p2r[l].eval(z)?.max_diff(&p2r) / scale);
        }
        for (tag, w) in ["P1L", "P2L", "P1R", "P2R"].iter().zip(worst) {
            rb.item(format!("szego-schur-route:{tag}"), vec![l as i64], w);
        }
    }
    reports.push(rb.finish());

    let mut rb = ctx.report("szego-monicity", 1e-12);
    let scale = ctx
        .szego
        .p1l
        .iter()
        .chain(&ctx.szego.p2l)
        .chain(&ctx.szego.p1r)
        .chain(&ctx.szego.p2r)
        .map(|p| p.norm_max())
        .fold(1.0, f64::max);
    for l in 0..ctx.nb {
        for (tag, p) in [
            ("P1L", &ctx.szego.p1l[l]),
            ("P2L", &ctx.szego.p2l[l]),
            ("P1R", &ctx.szego.p1r[l]),
            ("P2R", &ctx.szego.p2r[l]),
        ] {
            rb.item(format!("monic:{tag}"), vec![l as i64], p.monic_defect(l as i64) / scale);
        }
    }
    reports.push(rb.finish());
    done(reports)
}

fn suite_verblunsky(ctx: &Ctx) -> Result<SuiteOutcome> {
    let mut reports = Vec::new();
    let scale = ctx.table.hl[0].norm_max().max(1.0);
    let mut rb = ctx.report("quasi-norm-couplings", 1e-11);
    rb.items_named(
        ctx.table.coupling_residuals().into_iter().map(|(n, r)| (n, r / scale)),
    );
    reports.push(rb.finish());
    if ctx.measure.is_hermitian() {
        let mut rb = ctx.report("verblunsky-hermitian-pairing", 1e-10);
        rb.item("alpha-families-coincide", vec![], ctx.table.hermitian_defect() / scale);
        reports.push(rb.finish());
    }
    done(reports)
}

fn suite_recursion(ctx: &Ctx) -> Result<SuiteOutcome> {
    let zs = sample_points(ctx.seed, &[0.8, 1.0, 1.25], 6);
    let mut reports = Vec::new();
    let rec = recursion_residuals(&ctx.fam, &ctx.table, &zs)?;
    let mut rb = ctx.report("recursion-five-term", 1e-9);
    rb.items_named(rec.items.into_iter().map(|(n, r)| (n, r / rec.scale)));
    reports.push(rb.finish());

    let mut rb = ctx.report("recursion-eigen", 1e-10);
    rb.items_named(eigen_relation_residuals(&ctx.fam, &ctx.fl, &ctx.fr, &zs)?);
    reports.push(rb.finish());

    let mut rb = ctx.report("szego-recursion", 1e-9);
    let scale = ctx.szego.p1l.iter().map(|p| p.norm_max()).fold(1.0, f64::max);
    rb.items_named(
        szego_recursion_residuals(&ctx.szego, &ctx.table, &zs)?
            .into_iter()
            .map(|(n, r)| (n, r / scale)),
    );
    reports.push(rb.finish());
    done(reports)
}

fn suite_coefficients(ctx: &Ctx) -> Result<SuiteOutcome> {
    let kinds = [
        OperatorKind::Jl,
        OperatorKind::JlInv,
        OperatorKind::Jr,
        OperatorKind::JrInv,
        OperatorKind::C(0),
        OperatorKind::CInv(0),
        OperatorKind::C(-1),
        OperatorKind::CInv(-1),
    ];
    let mut reports = Vec::new();
    let mut routes = ctx.report("dressing-dual-routes", 1e-10);
    let mut band = ctx.report("band-structure", 1e-12);
    let mut closed = ctx.report("coefficients-closed-forms", 1e-9);
    for kind in kinds {
        let op = dress(&ctx.fl, &ctx.fr, kind)?;
        routes.item(format!("routes:{kind}"), vec![], op.route_gap);
        band.item(format!("band:{kind}"), vec![], band_pattern_defect(&op));
        let (_, items) = synthetic_vs_dressed(&ctx.table, &op)?;
        for (i, j, r) in items {
            closed.item(format!("entry:{kind}"), vec![i as i64, j as i64], r);
        }
        if kind == OperatorKind::Jl {
            let jr = dress(&ctx.fl, &ctx.fr, OperatorKind::Jr)?;
            for (name, r) in boundary_row_variants(&ctx.table, &op, &jr) {
                closed.log(name, vec![], r);
            }
        }
    }
    reports.push(routes.finish());
    reports.push(band.finish());
    reports.push(closed.finish());

    let mut rb = ctx.report("coefficients-alternate-forms", 1e-11);
    let scale = ctx.table.hl[0].norm_max().max(1.0);
    rb.items_named(
        intertwiner_alternate_form_residuals(&ctx.table)?
            .into_iter()
            .map(|(n, r)| (n, r / scale)),
    );
    reports.push(rb.finish());

    let mut rb = ctx.report("intertwiner-powers", 1e-9);
    rb.items_named(power_identity_residuals(&ctx.fl, &ctx.fr)?);
    reports.push(rb.finish());
    done(reports)
}

fn suite_cd(ctx: &Ctx) -> Result<SuiteOutcome> {
    let pairs = sample_pairs(ctx.seed, &[0.8, 1.0, 1.25], 20);
    let mut reports = Vec::new();
    let mut rb = ctx.report("cd-formulas", 1e-9);
    rb.items_named(cd_formula_residuals(&ctx.fam, &ctx.table, &pairs)?);
    reports.push(rb.finish());

    let mut rb = ctx.report("cd-szego-forms", 1e-9);
    rb.items_named(szego_kernel_residuals(&ctx.fam, &ctx.szego, &ctx.table, &pairs)?);
    reports.push(rb.finish());

    if ctx.is_trig() {
        let mut rb = ctx.report("cd-reproducing", 1e-10);
        for side in [Side::Left, Side::Right] {
            for level in [2usize, 3, ctx.nb / 2] {
                let res =
                    reproducing_residual(&ctx.fam, &ctx.measure, side, level, &pairs[..4], 128)?;
                rb.item(format!("reproducing-{side}"), vec![level as i64], res);
            }
        }
        reports.push(rb.finish());
    }

    let ms = ctx.measure.moments(required_moment_order(ctx.nb) + 6)?;
    let mut rb = ctx.report("cd-projector", 1e-10);
    let m = ctx.fam.m;
    let mut f = MatrixLaurentPoly::zero(m);
    f.set_coeff(-2, &CMat::identity(m));
    f.set_coeff(3, &CMat::scalar(m, C64::new(0.5, 0.25)));
    for side in [Side::Left, Side::Right] {
        let level = ctx.nb / 2;
        let once = projector_apply(&ctx.fam, &ms, side, level, &f)?;
        let twice = projector_apply(&ctx.fam, &ms, side, level, &once)?;
        rb.item(format!("idempotent-{side}"), vec![level as i64], twice.max_diff(&once));
        // a member of the span is fixed
        let mut g = MatrixLaurentPoly::zero(m);
        g.set_coeff(-1, &CMat::identity(m));
        g.set_coeff(1, &CMat::identity(m));
        let pg = projector_apply(&ctx.fam, &ms, side, level, &g)?;
        rb.item(format!("fixes-span-{side}"), vec![level as i64], pg.max_diff(&g));
    }
    reports.push(rb.finish());

    if ctx.measure.is_hermitian() && ctx.is_trig() {
        let mut rb = ctx.report("cd-diagonal-psd", 1e-11);
        for level in [2usize, ctx.nb / 2, ctx.nb - 2] {
            rb.item(
                "min-eig-over-trace",
                vec![level as i64],
                kernel_diagonal_psd_defect(&ctx.fam, level, 24)?,
            );
        }
        reports.push(rb.finish());
    }
    done(reports)
}

fn suite_kernels_cross(ctx: &Ctx) -> Result<SuiteOutcome> {
    let pairs = sample_pairs(ctx.seed, &[0.8, 1.0, 1.25], 20);
    let mut rb = ctx.report("kernels-cross", 1e-9);
    rb.items_named(kernel_cross_residuals(&ctx.fam, &ctx.table, &pairs)?);
    done(vec![rb.finish()])
}

fn suite_secondkind(ctx: &Ctx) -> Result<SuiteOutcome> {
    if !ctx.is_trig() {
        return skipped("secondkind needs a trig_poly weight (banded factors and a pointwise weight)");
    }
    let mut reports = Vec::new();
    let band = 2 * ctx.measure.bandwidth() as usize;
    let l_hi = ctx.nb.saturating_sub(band + 3).min(4).max(1);
    let mut rb = ctx.report("secondkind-product-vs-matrix", 1e-10);
    let zs = [C64::new(1.6, 0.3), C64::new(0.2, -0.35), C64::new(-1.8, 0.0)];
    for l in 0..l_hi {
        let polys = crate::secondkind::second_kind_matrix_route(&ctx.fl, &ctx.fr, l)?;
        let mut worst = [0.0f64; 4];
        for &z in &zs {
            let vals = crate::secondkind::second_kind_product_route(&ctx.fam, &ctx.measure, l, z)?;
            let scale = vals.c2l.norm_fro().max(1.0);
            worst[0] = worst[0].max(polys.c1l_total().eval(z)?.max_diff(&vals.c1l) / scale);
            worst[1] = worst[1].max(polys.c2l_total().eval(z)?.max_diff(&vals.c2l) / scale);
            worst[2] = worst[2].max(polys.c1r_total().eval(z)?.max_diff(&vals.c1r) / scale);
            worst[3] = worst[3].max(polys.c2r_total().eval(z)?.max_diff(&vals.c2r) / scale);
        }
        for (tag, w) in ["C1L", "C2L", "C1R", "C2R"].iter().zip(worst) {
            rb.item(format!("fourier-product:{tag}"), vec![l as i64], w);
        }
    }
    reports.push(rb.finish());

    let mut rb = ctx.report("secondkind-cauchy", 1e-9);
    for l in 0..l_hi {
        let polys = crate::secondkind::second_kind_matrix_route(&ctx.fl, &ctx.fr, l)?;
        let z_out = C64::new(2.0, 0.0);
        let outer =
            crate::secondkind::second_kind_cauchy_route(&ctx.fam, &ctx.measure, l, z_out, true, 400)?;
        let scale = outer.c2l.norm_fro().max(1.0);
        rb.item("outer:C1L", vec![l as i64], polys.c1l[0].eval(z_out)?.max_diff(&outer.c1l) / scale);
        rb.item("outer:C2L", vec![l as i64], polys.c2l[0].eval(z_out)?.max_diff(&outer.c2l) / scale);
        rb.item("outer:C1R", vec![l as i64], polys.c1r[0].eval(z_out)?.max_diff(&outer.c1r) / scale);
        rb.item("outer:C2R", vec![l as i64], polys.c2r[0].eval(z_out)?.max_diff(&outer.c2r) / scale);
        let z_in = C64::new(0.4, 0.0);
        let inner =
            crate::secondkind::second_kind_cauchy_route(&ctx.fam, &ctx.measure, l, z_in, false, 400)?;
        let scale = inner.c2l.norm_fro().max(1.0);
        rb.item("inner:C1L", vec![l as i64], polys.c1l[1].eval(z_in)?.max_diff(&inner.c1l) / scale);
        rb.item("inner:C2L", vec![l as i64], polys.c2l[1].eval(z_in)?.max_diff(&inner.c2l) / scale);
        rb.item("inner:C1R", vec![l as i64], polys.c1r[1].eval(z_in)?.max_diff(&inner.c1r) / scale);
        rb.item("inner:C2R", vec![l as i64], polys.c2r[1].eval(z_in)?.max_diff(&inner.c2r) / scale);
    }
    reports.push(rb.finish());

    let mut rb = ctx.report("secondkind-gamma", 1e-11);
    for j in 0..l_hi {
        for z in [C64::new(1.5, 0.5), C64::new(0.3, -0.2)] {
            let res = crate::secondkind::gamma_series_residual(&ctx.gl, &ctx.measure, j, z)?;
            rb.item("gamma-row", vec![j as i64], res);
        }
    }
    reports.push(rb.finish());
    done(reports)
}

fn suite_flow(ctx: &Ctx) -> Result<SuiteOutcome> {
    if !ctx.is_trig() {
        return skipped("flows need a trig_poly weight (exponential deformation)");
    }
    let m = ctx.measure.block_size();
    let nb = ctx.nb.min(10);
    let mut reports = Vec::new();

    let mut rb = ctx.report("flow-tangent-fd", 5e-7);
    let table = refactorized_table(&ctx.measure, &FlowTimes::zero(m), nb)?;
    for j in [1u8, 2] {
        let axis = FlowAxis::Total { j };
        let rhs = toeplitz_rhs(&table, axis)?;
        let fd = fd_tangent(&ctx.measure, axis, 1e-4, nb)?;
        rb.item(format!("total:{j}"), vec![], tangent_gap(&rhs, &fd, 1));
        for side in [Side::Left, Side::Right] {
            for a in 0..m {
                let axis = FlowAxis::Partial { side, j, a };
                let rhs = toeplitz_rhs(&table, axis)?;
                let fd = fd_tangent(&ctx.measure, axis, 1e-4, nb)?;
                rb.item(format!("partial:{side}{j}"), vec![a as i64], tangent_gap(&rhs, &fd, 1));
            }
        }
    }
    reports.push(rb.finish());

    let mut rb = ctx.report("flow-trajectory", 1e-7);
    let traj = flow_integrate(&ctx.measure, FlowAxis::Total { j: 1 }, 0.3, 100, 6, true)?;
    let gap = traj.oracle_gap.unwrap_or(f64::INFINITY);
    rb.item("endpoint-gap", vec![], gap);
    reports.push(rb.finish());

    // order measurement at a coarser step, where the integrator error sits
    // comfortably above the refactorization noise floor
    let mut rb = ctx.report("flow-order", 1.0);
    let coarse = flow_integrate(&ctx.measure, FlowAxis::Total { j: 1 }, 0.3, 20, 6, true)?;
    let halved = flow_integrate(&ctx.measure, FlowAxis::Total { j: 1 }, 0.3, 40, 6, true)?;
    let g1 = coarse.oracle_gap.unwrap_or(f64::INFINITY);
    let g2 = halved.oracle_gap.unwrap_or(f64::INFINITY);
    if g1 > 1e-11 {
        rb.item("step-halving-ratio", vec![], 15.0 * g2 / g1.max(1e-300));
    } else {
        // both gaps at the noise floor: order unobservable, gaps logged
        rb.item("step-halving-ratio", vec![], 0.0);
        rb.log("gap-at-floor", vec![], g1);
        rb.log("gap-at-floor-halved", vec![], g2);
    }
    reports.push(rb.finish());

    let h = 1e-4;
    let ax1 = FlowAxis::Partial { side: Side::Left, j: 1, a: 0 };
    let ax2 = FlowAxis::Partial { side: Side::Right, j: 2, a: m - 1 };
    let mut rb = ctx.report("flow-wave", 1e-5);
    for hp in [Side::Left, Side::Right] {
        for (tag, ax) in [("L1", ax1), ("R2", ax2)] {
            let (r1, r2) = wave_residuals(&ctx.measure, ax, hp, h, nb)?;
            rb.item(format!("wave1-{hp}-{tag}"), vec![], r1);
            rb.item(format!("wave2-{hp}-{tag}"), vec![], r2);
        }
    }
    reports.push(rb.finish());

    let mut rb = ctx.report("flow-lax", 1e-6);
    for hp in [Side::Left, Side::Right] {
        for j in [1u8, 2] {
            rb.item(
                format!("lax-{hp}-total{j}"),
                vec![],
                lax_residual(&ctx.measure, FlowAxis::Total { j }, hp, h, nb)?,
            );
        }
    }
    reports.push(rb.finish());

    let mut rb = ctx.report("flow-zs", 1e-5);
    for hp in [Side::Left, Side::Right] {
        rb.item(format!("zs-{hp}"), vec![], zs_residual(&ctx.measure, ax1, ax2, hp, h, nb)?);
    }
    reports.push(rb.finish());

    let mut rb = ctx.report("flow-intertwiner", 1e-5);
    for p in [0i32, -1] {
        rb.item(
            format!("intertwiner-evolution[{p}]"),
            vec![],
            intertwiner_evolution_residual(&ctx.measure, ax1, p, h, nb)?,
        );
    }
    reports.push(rb.finish());

    if ctx.measure.is_hermitian() {
        let mut rb = ctx.report("flow-hermitian-preservation", 1e-10);
        let mut t = FlowTimes::zero(m);
        for a in 0..m {
            t.left[0][a] = C64::new(0.15, 0.1 * a as f64);
            t.left[1][a] = C64::new(-0.05, 0.2);
            t.right[0][a] = t.left[1][a].conj();
            t.right[1][a] = t.left[0][a].conj();
        }
        let evolved = refactorized_table(&ctx.measure, &t, nb)?;
        let scale = evolved.hl[0].norm_max().max(1.0);
        rb.item("table-stays-hermitian", vec![], evolved.hermitian_defect() / scale);
        reports.push(rb.finish());
    }
    done(reports)
}

fn suite_bilinear(ctx: &Ctx) -> Result<SuiteOutcome> {
    if !ctx.is_trig() {
        return skipped("bilinear identities need a trig_poly weight");
    }
    let m = ctx.measure.block_size();
    let nb = ctx.nb.min(10);
    let zero = FlowTimes::zero(m);
    let mut rb = ctx.report("bilinear", 1e-9);
    let (l0, r0) = bilinear_residual(&ctx.measure, &zero, &zero, 2, 3, nb, 256)?;
    rb.item("same-times:left", vec![], l0);
    rb.item("same-times:right", vec![], r0);
    for j in [0usize, 1] {
        for side in ["L", "R"] {
            let mut tt = FlowTimes::zero(m);
            for a in 0..m {
                if side == "L" {
                    tt.left[j][a] = C64::new(1e-2, 0.0);
                } else {
                    tt.right[j][a] = C64::new(1e-2, 0.0);
                }
            }
            let (l1, r1) = bilinear_residual(&ctx.measure, &zero, &tt, 2, 3, nb, 256)?;
            rb.item(format!("offset-{side}{}:left", j + 1), vec![], l1);
            rb.item(format!("offset-{side}{}:right", j + 1), vec![], r1);
        }
    }
    done(vec![rb.finish()])
}

fn default_diag(m: usize) -> Vec<C64> {
    (0..m).map(|a| C64::new(0.3 - 0.05 * a as f64, 0.1 * a as f64)).collect()
}

fn suite_darboux(ctx: &Ctx) -> Result<SuiteOutcome> {
    let m = ctx.measure.block_size();
    let d = default_diag(m);
    let mut reports = Vec::new();
    let mut omega = ctx.report("darboux-omega", 1e-10);
    let mut laxflip = ctx.report("darboux-lax-flip", 1e-9);
    for side in [Side::Left, Side::Right] {
        for sign in [ShiftSign::Plus, ShiftSign::Minus] {
            let rep = darboux_step(&ctx.measure, side, sign, &d, ctx.nb)?;
            for (name, r) in rep.items {
                if name.contains("omega") {
                    omega.item(name, vec![], r);
                } else {
                    laxflip.item(name, vec![], r);
                }
            }
        }
    }
    reports.push(omega.finish());
    reports.push(laxflip.finish());

    let mut rb = ctx.report("darboux-zs", 1e-9);
    let d2: Vec<C64> = (0..m).map(|a| C64::new(0.15, -0.08 + 0.05 * a as f64)).collect();
    let (l, r) = discrete_zs_residual(
        &ctx.measure,
        (Side::Left, ShiftSign::Plus, d.clone()),
        (Side::Right, ShiftSign::Minus, d2),
        ctx.nb,
    )?;
    rb.item("discrete-zs:left", vec![], l);
    rb.item("discrete-zs:right", vec![], r);
    reports.push(rb.finish());

    let mut rb = ctx.report("darboux-miwa-consistency", 1e-12);
    for sign in [ShiftSign::Plus, ShiftSign::Minus] {
        rb.item(
            format!("scalar-shift{sign}"),
            vec![],
            miwa_darboux_consistency(&ctx.measure, C64::new(0.35, 0.1), sign, ctx.nb.min(10))?,
        );
    }
    reports.push(rb.finish());
    done(reports)
}

fn suite_miwa(ctx: &Ctx) -> Result<SuiteOutcome> {
    let m = ctx.measure.block_size();
    let mut reports = Vec::new();
    let pairs = sample_pairs(ctx.seed, &[0.8, 1.0, 1.25], 6);
    let w: Vec<C64> = (0..m).map(|a| C64::new(0.4 - 0.1 * a as f64, 0.1 * a as f64)).collect();
    let mut rb = ctx.report("miwa-kernels", 1e-9);
    rb.items_named(miwa_kernel_residuals(&ctx.measure, &w, ctx.nb, &pairs)?);
    reports.push(rb.finish());

    let mut rb = ctx.report("miwa-scalar-relations", 1e-9);
    rb.items_named(scalar_miwa_residuals(&ctx.measure, C64::new(0.4, 0.05), ctx.nb, 2)?);
    reports.push(rb.finish());
    done(reports)
}

fn suite_elteorema(ctx: &Ctx) -> Result<SuiteOutcome> {
    let zs = sample_points(ctx.seed, &[0.8, 1.25], 8);
    let nb = ctx.nb.min(12);
    let rec = product_reconstruction(&ctx.measure, &zs, 3, nb)?;
    let mut rb = ctx.report("elteorema", 1e-7);
    rb.items_named(rec.items);
    if rec.skipped > 0 {
        rb.log("skipped-samples", vec![rec.skipped as i64], rec.skipped as f64);
    }
    done(vec![rb.finish()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    #[test]
    fn structure_suite_on_lebesgue_is_exact() {
        let cfg = VerifyConfig { blocks: 8, ..Default::default() };
        let out = run_suite(&bundled::lebesgue(), "structure", &cfg).unwrap();
        assert_eq!(out.reports.len(), 1);
        assert!(out.reports[0].pass);
        assert_eq!(out.reports[0].max_residual, 0.0);
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = VerifyConfig { blocks: 8, ..Default::default() };
        let a = run_suite(&bundled::herm2(), "cd", &cfg).unwrap();
        let b = run_suite(&bundled::herm2(), "cd", &cfg).unwrap();
        let ja: Vec<String> = a.reports.iter().map(|r| r.to_json()).collect();
        let jb: Vec<String> = b.reports.iter().map(|r| r.to_json()).collect();
        assert_eq!(ja, jb);
    }

    #[test]
    fn moment_list_measures_skip_flow_suites() {
        let cfg = VerifyConfig { blocks: 8, ..Default::default() };
        let mu = bundled::bernstein_szego(0.5, 64);
        let out = run_suite(&mu, "flow", &cfg).unwrap();
        assert!(out.reports.is_empty());
        assert_eq!(out.skipped.len(), 1);
    }

    #[test]
    fn desk_scale_m3_suites_pass() {
        let cfg = VerifyConfig { blocks: 10, ..Default::default() };
        let mu = bundled::herm3();
        for suite in ["structure", "factorize", "biorthogonality", "polys", "recursion", "cd"] {
            let out = run_suite(&mu, suite, &cfg).unwrap();
            for r in &out.reports {
                assert!(r.pass, "{suite}/{}: {:.2e}", r.check, r.max_residual);
            }
        }
    }

    #[test]
    fn failing_report_names_first_identity() {
        // craft a failing check by overriding the tolerance to an absurd value
        let cfg = VerifyConfig { blocks: 8, seed: 42, tol: Some(1e-30) };
        let out = run_suite(&bundled::herm2(), "kernels-cross", &cfg).unwrap();
        let rep = &out.reports[0];
        assert!(!rep.pass);
        assert!(rep.first_failure().is_some());
    }
}
