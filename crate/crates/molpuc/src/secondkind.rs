//! Matrix second kind functions: Cauchy-transform-like companions of the
//! CMV families.
//!
//! Three independent routes are provided. The matrix route pairs the banded
//! triangular factors against χ*(z) = z^{-1}χ(1/z); because the factors
//! inherit the moment-matrix band, these rows are exact Laurent polynomials
//! on the interior of the truncation. The product route multiplies the
//! family values at 1/z by the Fourier series of the measure. The Cauchy
//! route integrates the families against geometric kernels over the circle,
//! with a validity region per partial function (|z| > 1 outer, |z| < 1
//! inner).

use num_complex::Complex64;

use crate::cmat::{C64, CMat};
use crate::cmv::{Side, chi_star_scalar};
use crate::error::{Error, Result};
use crate::factor::Factorization;
use crate::families::CmvFamilies;
use crate::laurent::MatrixLaurentPoly;
use crate::measure::{MatrixMeasure, TWO_PI};

/// The four second kind families at one index: C₁^L, C₂^L, C₁^R, C₂^R.
#[derive(Clone, Debug)]
pub struct SecondKindValues {
    pub c1l: CMat,
    pub c2l: CMat,
    pub c1r: CMat,
    pub c2r: CMat,
}

/// Second kind functions as Laurent polynomials from the banded factors,
/// split into their two partial pieces (even-χ* and odd-χ* contributions).
#[derive(Clone, Debug)]
pub struct SecondKindPolys {
    pub c1l: [MatrixLaurentPoly; 2],
    pub c2l: [MatrixLaurentPoly; 2],
    pub c1r: [MatrixLaurentPoly; 2],
    pub c2r: [MatrixLaurentPoly; 2],
}

impl SecondKindPolys {
    pub fn c1l_total(&self) -> MatrixLaurentPoly {
        self.c1l[0].add(&self.c1l[1])
    }
    pub fn c2l_total(&self) -> MatrixLaurentPoly {
        self.c2l[0].add(&self.c2l[1])
    }
    pub fn c1r_total(&self) -> MatrixLaurentPoly {
        self.c1r[0].add(&self.c1r[1])
    }
    pub fn c2r_total(&self) -> MatrixLaurentPoly {
        self.c2r[0].add(&self.c2r[1])
    }
}

/// Matrix route at index l:
/// C₁^L = (S₁^{-1})†χ*, C₂^L = S₂χ*, C₁^R = χ*ᵀ(Z₁^{-1})†, C₂^R = χ*ᵀZ₂.
/// Partial piece 0 collects the even components of χ*, piece 1 the odd.
pub fn second_kind_matrix_route(
    fl: &Factorization,
    fr: &Factorization,
    l: usize,
) -> Result<SecondKindPolys> {
    if fl.side() != Side::Left || fr.side() != Side::Right {
        return Err(Error::Config("matrix route needs a (left, right) pair".into()));
    }
    let m = fl.block_size();
    let nb = fl.num_blocks();
    if l >= nb {
        return Err(Error::Dimension(format!("index {l} out of range for {nb} blocks")));
    }
    let mut polys = SecondKindPolys {
        c1l: [MatrixLaurentPoly::zero(m), MatrixLaurentPoly::zero(m)],
        c2l: [MatrixLaurentPoly::zero(m), MatrixLaurentPoly::zero(m)],
        c1r: [MatrixLaurentPoly::zero(m), MatrixLaurentPoly::zero(m)],
        c2r: [MatrixLaurentPoly::zero(m), MatrixLaurentPoly::zero(m)],
    };
    let s1_inv = fl.s1_inv();
    let s2 = fl.s2();
    let z1_inv = fr.z1_inv();
    let z2 = fr.z2();
    for j in 0..nb {
        let power = -1 - crate::cmv::cmv_power(j);
        let part = j % 2;
        polys.c1l[part].add_coeff(power, &s1_inv.block(j, l).dagger());
        polys.c2l[part].add_coeff(power, &s2.block(l, j));
        polys.c1r[part].add_coeff(power, &z1_inv.block(l, j).dagger());
        polys.c2r[part].add_coeff(power, &z2.block(j, l));
    }
    Ok(polys)
}

/// Product route: values from the family evaluations at 1/z times the
/// Fourier series of the measure, e.g. C₂^L(z) = 2π z^{-1} φ₁^L(1/z) F(1/z).
pub fn second_kind_product_route(
    fam: &CmvFamilies,
    measure: &MatrixMeasure,
    l: usize,
    z: C64,
) -> Result<SecondKindValues> {
    if z.norm() == 0.0 {
        return Err(Error::Domain("second kind functions are undefined at z = 0".into()));
    }
    let zi = z.inv();
    let f_at_zi = measure.fourier_series_eval(zi)?;
    let fdag_at_z = measure.fourier_series_eval_dagger(z)?;
    let pref = C64::new(TWO_PI, 0.0) / z;
    let c1l = fam.phi2l[l].eval(zi)?.mul(&fdag_at_z).scale(pref);
    let c2l = fam.phi1l[l].eval(zi)?.mul(&f_at_zi).scale(pref);
    let c1r = fdag_at_z.mul(&fam.phi2r[l].eval(zi)?).scale(pref);
    let c2r = f_at_zi.mul(&fam.phi1r[l].eval(zi)?).scale(pref);
    Ok(SecondKindValues { c1l, c2l, c1r, c2r })
}

/// Cauchy-integral route for the partial second kind functions. `outer`
/// selects the piece: true pairs the kernel z^{-1}u/(u - z^{-1}) and needs
/// |z| > 1, false pairs its complement and needs |z| < 1.
pub struct CauchyPartials {
    pub c1l: CMat,
    pub c2l: CMat,
    pub c1r: CMat,
    pub c2r: CMat,
}

pub fn second_kind_cauchy_route(
    fam: &CmvFamilies,
    measure: &MatrixMeasure,
    l: usize,
    z: C64,
    outer: bool,
    nodes: usize,
) -> Result<CauchyPartials> {
    if outer && z.norm() <= 1.0 {
        return Err(Error::Domain(format!(
            "outer Cauchy kernel needs |z| > 1, got |z| = {}",
            z.norm()
        )));
    }
    if !outer && z.norm() >= 1.0 {
        return Err(Error::Domain(format!(
            "inner Cauchy kernel needs |z| < 1, got |z| = {}",
            z.norm()
        )));
    }
    let m = fam.m;
    let mut acc1l = CMat::zeros(m, m);
    let mut acc2l = CMat::zeros(m, m);
    let mut acc1r = CMat::zeros(m, m);
    let mut acc2r = CMat::zeros(m, m);
    for t in 0..nodes {
        let theta = TWO_PI * t as f64 / nodes as f64;
        let u = Complex64::from_polar(1.0, theta);
        let w = measure.weight_eval(theta)?;
        let kernel = {
            let base = u / (z * (u - z.inv()));
            if outer { base } else { -base }
        };
        let p1l = fam.phi1l[l].eval(u)?;
        let p2l = fam.phi2l[l].eval(u)?;
        let p1r = fam.phi1r[l].eval(u)?;
        let p2r = fam.phi2r[l].eval(u)?;
        acc2l = acc2l.add(&p1l.mul(&w).scale(kernel));
        acc1l = acc1l.add(&w.mul(&p2l.dagger()).scale(kernel.conj()));
        acc2r = acc2r.add(&w.mul(&p1r).scale(kernel));
        acc1r = acc1r.add(&p2r.dagger().mul(&w).scale(kernel.conj()));
    }
    let h = C64::new(TWO_PI / nodes as f64, 0.0);
    Ok(CauchyPartials {
        c1l: acc1l.scale(h).dagger(),
        c2l: acc2l.scale(h),
        c1r: acc1r.scale(h).dagger(),
        c2r: acc2r.scale(h),
    })
}

/// Residual of the associated Fourier-series rows: (g^L χ*)^{(j)}(z) against
/// 2π z^{-1} F(1/z) χ^{(j)}(1/z).
pub fn gamma_series_residual(
    gl: &crate::block::BlockMatrix,
    measure: &MatrixMeasure,
    j: usize,
    z: C64,
) -> Result<f64> {
    let m = gl.block_size();
    let nb = gl.num_blocks();
    let mut acc = CMat::zeros(m, m);
    for k in 0..nb {
        let s = chi_star_scalar(k, z)?;
        acc = acc.add(&gl.block(j, k).scale(s));
    }
    let zi = z.inv();
    let expect = measure
        .fourier_series_eval(zi)?
        .scale(C64::new(TWO_PI, 0.0) / z * crate::cmv::chi_scalar(j, zi)?);
    Ok(acc.max_diff(&expect))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled::{herm2, nonherm2};
    use crate::cmat::c;
    use crate::cmv::{build_moment_matrix, required_moment_order};
    use crate::factor::block_lu;
    use crate::families::families_from_factorizations;
    use crate::measure::MatrixMeasure;

    fn setup(mu: &MatrixMeasure, nb: usize) -> (crate::block::BlockMatrix, CmvFamilies, Factorization, Factorization) {
        let ms = mu.moments(required_moment_order(nb)).unwrap();
        let gl = build_moment_matrix(&ms, Side::Left, nb).unwrap();
        let gr = build_moment_matrix(&ms, Side::Right, nb).unwrap();
        let fl = block_lu(&gl, Side::Left).unwrap();
        let fr = block_lu(&gr, Side::Right).unwrap();
        let fam = families_from_factorizations(&fl, &fr).unwrap();
        (gl, fam, fl, fr)
    }

    #[test]
    fn lebesgue_c2l_value() {
        let mu = MatrixMeasure::lebesgue(1);
        let (_, fam, fl, fr) = setup(&mu, 6);
        let z = c(1.7, 0.4);
        let vals = second_kind_product_route(&fam, &mu, 0, z).unwrap();
        let expect = c(TWO_PI, 0.0) / z;
        assert!((vals.c2l[(0, 0)] - expect).norm() < 1e-13);
        let polys = second_kind_matrix_route(&fl, &fr, 0).unwrap();
        assert!((polys.c2l_total().eval(z).unwrap()[(0, 0)] - expect).norm() < 1e-13);
    }

    #[test]
    fn matrix_route_matches_product_route_interior() {
        let mu = nonherm2();
        let nb = 12;
        let (_, fam, fl, fr) = setup(&mu, nb);
        // band of g is 2 blocks per unit moment index; stay well inside
        for l in 0..4usize {
            let polys = second_kind_matrix_route(&fl, &fr, l).unwrap();
            for z in [c(1.6, 0.3), c(0.2, -0.35), c(-1.8, 0.0)] {
                let vals = second_kind_product_route(&fam, &mu, l, z).unwrap();
                let scale = vals.c2l.norm_max().max(1.0);
                assert!(polys.c1l_total().eval(z).unwrap().max_diff(&vals.c1l) < 1e-10 * scale);
                assert!(polys.c2l_total().eval(z).unwrap().max_diff(&vals.c2l) < 1e-10 * scale);
                assert!(polys.c1r_total().eval(z).unwrap().max_diff(&vals.c1r) < 1e-10 * scale);
                assert!(polys.c2r_total().eval(z).unwrap().max_diff(&vals.c2r) < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn cauchy_route_matches_partials() {
        let mu = herm2();
        let nb = 12;
        let (_, fam, fl, fr) = setup(&mu, nb);
        let nodes = 400;
        for l in 0..3usize {
            let polys = second_kind_matrix_route(&fl, &fr, l).unwrap();
            let z_out = c(2.0, 0.0);
            let outer = second_kind_cauchy_route(&fam, &mu, l, z_out, true, nodes).unwrap();
            let scale = outer.c2l.norm_max().max(1.0);
            assert!(polys.c1l[0].eval(z_out).unwrap().max_diff(&outer.c1l) < 1e-9 * scale);
            assert!(polys.c2l[0].eval(z_out).unwrap().max_diff(&outer.c2l) < 1e-9 * scale);
            assert!(polys.c1r[0].eval(z_out).unwrap().max_diff(&outer.c1r) < 1e-9 * scale);
            assert!(polys.c2r[0].eval(z_out).unwrap().max_diff(&outer.c2r) < 1e-9 * scale);

            let z_in = c(0.4, 0.0);
            let inner = second_kind_cauchy_route(&fam, &mu, l, z_in, false, nodes).unwrap();
            let scale = inner.c2l.norm_max().max(1.0);
            assert!(polys.c1l[1].eval(z_in).unwrap().max_diff(&inner.c1l) < 1e-9 * scale);
            assert!(polys.c2l[1].eval(z_in).unwrap().max_diff(&inner.c2l) < 1e-9 * scale);
            assert!(polys.c1r[1].eval(z_in).unwrap().max_diff(&inner.c1r) < 1e-9 * scale);
            assert!(polys.c2r[1].eval(z_in).unwrap().max_diff(&inner.c2r) < 1e-9 * scale);
        }
    }

    #[test]
    fn region_restrictions_are_enforced() {
        let mu = herm2();
        let (_, fam, _, _) = setup(&mu, 6);
        assert!(second_kind_cauchy_route(&fam, &mu, 0, c(0.5, 0.0), true, 64).is_err());
        assert!(second_kind_cauchy_route(&fam, &mu, 0, c(2.0, 0.0), false, 64).is_err());
        assert!(second_kind_product_route(&fam, &mu, 0, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn gamma_series_rows() {
        let mu = nonherm2();
        let nb = 12;
        let ms = mu.moments(required_moment_order(nb)).unwrap();
        let gl = build_moment_matrix(&ms, Side::Left, nb).unwrap();
        for j in 0..4usize {
            for z in [c(1.5, 0.5), c(0.3, -0.2)] {
                let res = gamma_series_residual(&gl, &mu, j, z).unwrap();
                assert!(res < 1e-11, "gamma row {j} at {z}: {res:.2e}");
            }
        }
    }
}
