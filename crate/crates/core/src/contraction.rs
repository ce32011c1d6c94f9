//! Newton-Kantorovich bounds `Y`, `Z_1`, `Z_2` and the radii check.
//!
//! The approximate inverse is `A = A_finite Pi_K + A_tail` where `A_tail` is
//! `(-ik)^{-1}` on the modes `|k| > K` of `u`. All bounds are upper bounds
//! computed with directed rounding.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{add_rd, add_ru, cabs_ru, div_rd, div_ru, mul_rd, mul_ru, sqrt_rd, sub_rd, Interval};
use crate::model::{reciprocal_degree, D2Table, Field};
use crate::numerics::{node_dim, u_index, OperatorPack};
use crate::polymat::{col_sums_up, mul_bounded, op_norm_up, BoundedProduct, PolyMat};
use crate::seqspace::fcarr::weights_up;
use crate::seqspace::{FcArr, FcBall, NeumannReport, Prec};
use crate::zero_problem::{residual_balls, BallBranch, FloatBranch, Residual};

type C = Complex64;

/// Result of the radii polynomial check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NKBounds {
    pub y: Interval,
    pub z1: Interval,
    pub z2: Interval,
    pub big_r: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// smallest power of ten in `[r_min, r_max)`, or `r_min`
    pub r: f64,
    pub nu: f64,
}

/// Check `Z1 < 1`, `2 Y Z2 <= (1 - Z1)^2` and `r_min < r_max` on upper bounds.
pub fn verify_contraction(y: Interval, z1: Interval, z2: Interval, big_r: f64, nu: f64) -> Result<NKBounds> {
    let (yh, z1h, z2h) = (y.hi(), z1.hi(), z2.hi());
    if !(z1h < 1.0) {
        return Err(Error::ContractionFailed("Z1".into()));
    }
    let gap = sub_rd(1.0, z1h);
    let disc_lo = sub_rd(mul_rd(gap, gap), mul_ru(2.0, mul_ru(yh, z2h)));
    if !(disc_lo >= 0.0) {
        return Err(Error::ContractionFailed("2 Y Z2 <= (1 - Z1)^2".into()));
    }
    // (gap - sqrt(disc)) / Z2 = 2 Y / (gap + sqrt(disc)), the latter without cancellation
    let r_min = if yh == 0.0 { 0.0 } else { div_ru(mul_ru(2.0, yh), add_rd(gap, sqrt_rd(disc_lo))) };
    let r_max = if z2h == 0.0 { big_r } else { div_rd(gap, z2h).min(big_r) };
    if !(r_min < r_max) {
        return Err(Error::ContractionFailed("r_min < r_max".into()));
    }
    let mut r = r_min;
    if r_min > 0.0 {
        let p = 10f64.powi(r_min.log10().ceil() as i32);
        let p = if p < r_min { p * 10.0 } else { p };
        if p < r_max {
            r = p;
        }
    }
    Ok(NKBounds { y, z1, z2, big_r, r_min, r_max, r, nu })
}

/// Float centers of the derivative approximations and their defects.
#[derive(Clone, Debug)]
pub struct Omegas {
    /// `tau_bar d_j f_i` truncated to `(N, K)`
    pub w1: [[FcArr; 3]; 3],
    pub d1: [[f64; 3]; 3],
    /// `f_i`
    pub w2: [FcArr; 3],
    pub d2: [f64; 3],
    /// `tau_bar d_zeta_z f_i`
    pub w3: [[FcArr; 2]; 3],
    pub d3: [[f64; 2]; 3],
}

/// Rigorous enclosures at `chi_bar` shared by all bounds.
pub struct ProofContext<'a> {
    pub field: &'a dyn Field,
    pub chi: FloatBranch,
    pub g: [FcArr; 3],
    pub nu: f64,
    pub n: usize,
    pub k: usize,
    pub balls: BallBranch,
    pub res: Residual,
    pub omegas: Omegas,
}

fn trunc(b: &FcBall, n: usize, k: usize) -> (FcArr, f64) {
    let t = b.truncate(n, k);
    (t.c.resized(n, k), t.err)
}

impl<'a> ProofContext<'a> {
    pub fn new(field: &'a dyn Field, chi: &FloatBranch, g: &[FcArr; 3], nu: f64) -> Result<Self> {
        let n = chi.n_max();
        let k = chi.k_max();
        let balls = chi.balls(nu);
        let res = residual_balls(field, &balls, g, k, reciprocal_degree(n, k), Prec::Compensated)?;
        let fb = &res.field;
        let tau = &balls.tau;
        let p = Prec::Compensated;
        let w1p: Vec<Vec<(FcArr, f64)>> = (0..3).map(|i| (0..3).map(|j| trunc(&tau.mul(&fb.du[i][j], p), n, k)).collect()).collect();
        let w2p: Vec<(FcArr, f64)> = (0..3).map(|i| trunc(&fb.f[i], n, k)).collect();
        let w3p: Vec<Vec<(FcArr, f64)>> = (0..3).map(|i| (0..2).map(|z| trunc(&tau.mul(&fb.dz[i][z], p), n, k)).collect()).collect();
        let omegas = Omegas {
            w1: std::array::from_fn(|i| std::array::from_fn(|j| w1p[i][j].0.clone())),
            d1: std::array::from_fn(|i| std::array::from_fn(|j| w1p[i][j].1)),
            w2: std::array::from_fn(|i| w2p[i].0.clone()),
            d2: std::array::from_fn(|i| w2p[i].1),
            w3: std::array::from_fn(|i| std::array::from_fn(|z| w3p[i][z].0.clone())),
            d3: std::array::from_fn(|i| std::array::from_fn(|z| w3p[i][z].1)),
        };
        Ok(ProofContext { field, chi: chi.clone(), g: g.clone(), nu, n, k, balls, res, omegas })
    }

    pub fn reciprocal_reports(&self) -> Vec<NeumannReport> {
        self.res.inv.iter().map(|r| r.report).collect()
    }
}

/// `A_finite` as a polynomial matrix.
pub fn a_polymat(pack: &OperatorPack) -> PolyMat {
    let mut m = PolyMat::zeros(pack.dim, pack.dim, pack.n);
    for n in 0..=pack.n {
        for r in 0..pack.dim {
            for c in 0..pack.dim {
                m.set(n, r, c, pack.entry(n, r, c));
            }
        }
    }
    m
}

/// `||A_finite||` and `||A|| = max(||A_finite||, 1/(K+1))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ANorm {
    pub finite: f64,
    pub full: f64,
}

pub fn operator_norm_a(a: &PolyMat, nu: f64, k: usize) -> ANorm {
    let finite = op_norm_up(a, nu);
    ANorm { finite, full: finite.max(div_ru(1.0, (k + 1) as f64)) }
}

/// Weighted norm of the `k`-th Fourier mode.
fn mode_norm(a: &FcArr, k: i64, w: &[f64]) -> f64 {
    if k.unsigned_abs() as usize > a.k_max {
        return 0.0;
    }
    let mut s = 0.0;
    for n in 0..=a.n_max {
        let c = a.get(n, k);
        s = add_ru(s, mul_ru(w[n], cabs_ru(c.re, c.im)));
    }
    s
}

/// Parts of `Y`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct YParts {
    /// `||A_finite W_0||`
    pub finite: f64,
    /// Chebyshev tail beyond `2N` of the modes `|k| <= K`, times `||A_finite||`
    pub truncation: f64,
    /// `sum_{|k| > K} ||(tau f)_k|| / |k|`
    pub fourier_tail: f64,
    /// ball radii of the residual, times `||A||`
    pub radius: f64,
    pub total: f64,
}

pub fn bound_y(ctx: &ProofContext, a: &PolyMat, an: ANorm) -> YParts {
    let (n2, k) = (2 * ctx.n, ctx.k);
    let nu = ctx.nu;
    let dim = node_dim(k);
    let mut w0 = PolyMat::zeros(dim, 1, n2);
    let mut trunc_sum = 0.0;
    let mut radius = 0.0;
    let mut ftail = 0.0;
    for (i, rho) in ctx.res.rho.iter().enumerate() {
        for n in 0..=rho.c.n_max.min(n2) {
            w0.set(n, i, 0, rho.c.get(n, 0));
        }
        let w = weights_up(nu, rho.c.n_max);
        for n in n2 + 1..=rho.c.n_max {
            let c = rho.c.get(n, 0);
            trunc_sum = add_ru(trunc_sum, mul_ru(w[n], cabs_ru(c.re, c.im)));
        }
        radius = add_ru(radius, rho.err);
    }
    for i in 0..3 {
        let ode = &ctx.res.ode[i];
        let w = weights_up(nu, ode.c.n_max);
        let km = ode.c.k_max as i64;
        for m in -km..=km {
            if m.unsigned_abs() as usize <= k {
                for n in 0..=ode.c.n_max {
                    let c = ode.c.get(n, m);
                    if n <= n2 {
                        w0.set(n, u_index(k, i, m), 0, c);
                    } else {
                        trunc_sum = add_ru(trunc_sum, mul_ru(w[n], cabs_ru(c.re, c.im)));
                    }
                }
            } else {
                ftail = add_ru(ftail, div_ru(mode_norm(&ode.c, m, &w), m.unsigned_abs() as f64));
            }
        }
        radius = add_ru(radius, ode.err);
    }
    let p = mul_bounded(a, &w0, nu);
    let norms = p.c.entry_norms(nu);
    let finite = add_ru(col_sums_up(&norms)[0], col_sums_up(&p.err)[0]);
    let truncation = mul_ru(an.finite, trunc_sum);
    let radius = mul_ru(an.full, radius);
    let total = add_ru(add_ru(finite, truncation), add_ru(ftail, radius));
    YParts { finite, truncation, fourier_tail: ftail, radius, total }
}

/// Column index of `u_{j,k'}` in `W_1` (modes `|k'| <= 2K`).
#[inline]
pub fn w1_col(k: usize, j: usize, m: i64) -> usize {
    3 + j * (4 * k + 1) + (m + 2 * k as i64) as usize
}

/// Rows `Pi_K` of `W_1` on the columns `tau, zeta, u_{j,|k'| <= 2K}`, exact floats.
pub fn build_w1(ctx: &ProofContext) -> PolyMat {
    let (n, k) = (ctx.n, ctx.k);
    let ki = k as i64;
    let dim = node_dim(k);
    let cols = 3 + 3 * (4 * k + 1);
    let om = &ctx.omegas;
    let mut w = PolyMat::zeros(dim, cols, n);
    let two_pi = 2.0 * std::f64::consts::PI;
    for j in 0..3 {
        for m in -ki..=ki {
            for d in 0..=n.min(ctx.g[j].n_max) {
                w.set(d, 0, w1_col(k, j, m), ctx.g[j].get(d, m).conj() * two_pi);
            }
        }
    }
    for j in 0..2 {
        for m in -ki..=ki {
            w.set(0, 1 + j, w1_col(k, j, m), C::new(1.0, 0.0));
        }
    }
    for i in 0..3 {
        for m in -ki..=ki {
            let row = u_index(k, i, m);
            for d in 0..=n {
                w.set(d, row, 0, -om.w2[i].get(d, m));
                for z in 0..2 {
                    w.set(d, row, 1 + z, -om.w3[i][z].get(d, m));
                }
                for j in 0..3 {
                    for mp in (m - ki)..=(m + ki) {
                        w.set(d, row, w1_col(k, j, mp), -om.w1[i][j].get(d, m - mp));
                    }
                }
            }
            let col = w1_col(k, i, m);
            let v = w.get(0, row, col) + C::new(0.0, -(m as f64));
            w.set(0, row, col, v);
        }
    }
    w
}

/// Parts of `Z_1`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Z1Parts {
    /// `||A W_1 Pi_{2K} - Pi_{2K}||`, including the tail rows
    pub finite: f64,
    /// columns `|k'| > 2K`: `(1/(K+1)) max_j sum_i ||omega_1^{ij}||`
    pub far_columns: f64,
    /// `||DF - W_1||` by columns
    pub defect: f64,
    pub total: f64,
}

/// `A_finite W_1` with its rounding bound.
pub fn aw1_product(a: &PolyMat, w1: &PolyMat, nu: f64) -> BoundedProduct {
    mul_bounded(a, w1, nu)
}

pub fn bound_z1(ctx: &ProofContext, prod: &BoundedProduct, an: ANorm) -> Z1Parts {
    let (k, nu) = (ctx.k, ctx.nu);
    let ki = k as i64;
    let om = &ctx.omegas;
    let cols = prod.c.cols;
    let w = weights_up(nu, prod.c.deg);
    let eps = f64::EPSILON * 0.5;
    // column sums of C - I over the rows Pi_K
    let norms = prod.c.entry_norms(nu);
    let mut colsum = col_sums_up(&norms);
    let errsum = col_sums_up(&prod.err);
    let identity_row = |c: usize| -> Option<usize> {
        if c < 3 {
            return Some(c);
        }
        let j = (c - 3) / (4 * k + 1);
        let m = (c - 3) as i64 - (j * (4 * k + 1)) as i64 - 2 * ki;
        (m.abs() <= ki).then(|| u_index(k, j, m))
    };
    for (c, s) in colsum.iter_mut().enumerate() {
        if let Some(r) = identity_row(c) {
            // replace ||C_rr|| by ||C_rr - 1||
            let mut e = 0.0;
            for n in 0..=prod.c.deg {
                let z = prod.c.get(n, r, c);
                let re = if n == 0 { (Interval::point(z.re) - Interval::ONE).mag() } else { z.re.abs() };
                e = add_ru(e, mul_ru(w[n], cabs_ru(re, z.im)));
            }
            *s = add_ru(sub_rd_nonneg(*s, norms[(r, c)]), e);
        }
        *s = add_ru(*s, errsum[c]);
    }
    // tail rows K < |k| <= 3K: entries omega_1^{ij}_{k-k'} / (-ik)
    let w1n = |i: usize, j: usize, m: i64| mode_norm(&om.w1[i][j], m, &weights_up(nu, om.w1[i][j].n_max));
    let mut w1_modes = vec![[[0.0f64; 3]; 3]; 2 * k + 1];
    for m in -ki..=ki {
        for i in 0..3 {
            for j in 0..3 {
                w1_modes[(m + ki) as usize][i][j] = w1n(i, j, m);
            }
        }
    }
    for j in 0..3 {
        for mp in -2 * ki..=2 * ki {
            let mut s = 0.0;
            for m in (mp - ki)..=(mp + ki) {
                if m.abs() <= ki {
                    continue;
                }
                for i in 0..3 {
                    s = add_ru(s, div_ru(w1_modes[(m - mp + ki) as usize][i][j], m.unsigned_abs() as f64));
                }
            }
            let c = w1_col(k, j, mp);
            colsum[c] = add_ru(colsum[c], s);
        }
    }
    let finite = colsum.iter().take(cols).cloned().fold(0.0, f64::max);
    // columns beyond 2K
    let mut far = 0.0f64;
    for j in 0..3 {
        let mut s = 0.0;
        for i in 0..3 {
            s = add_ru(s, om.w1[i][j].norm_up(nu));
        }
        far = far.max(s);
    }
    let far_columns = div_ru(far, (k + 1) as f64);
    // DF - W_1 by columns
    let mut defect = 0.0f64;
    defect = defect.max(om.d2.iter().fold(0.0, |s, &x| add_ru(s, x)));
    for z in 0..2 {
        defect = defect.max((0..3).fold(0.0, |s, i| add_ru(s, om.d3[i][z])));
    }
    for j in 0..3 {
        let mut s = (0..3).fold(0.0, |s, i| add_ru(s, om.d1[i][j]));
        // rounding of fl(2 pi conj g) in the phase row
        let gmax = (-ki..=ki).map(|m| mode_norm(&ctx.g[j], m, &weights_up(nu, ctx.g[j].n_max))).fold(0.0, f64::max);
        s = add_ru(s, mul_ru(2.0e-15, gmax));
        // rounding of -omega_1^{jj}_0 - ik on the diagonal
        let om0 = om.w1[j][j].get(0, 0);
        s = add_ru(s, mul_ru(2.0 * eps, add_ru(k as f64, cabs_ru(om0.re, om0.im))));
        defect = defect.max(s);
    }
    let defect = mul_ru(an.full, defect);
    let total = add_ru(finite.max(far_columns), defect);
    Z1Parts { finite, far_columns, defect, total }
}

/// `s - x` for `0 <= x <= s` computed so as not to go below the true value minus
/// rounding; a lower bound is not needed, any upper bound of `s - x` is fine.
fn sub_rd_nonneg(s: f64, x: f64) -> f64 {
    // s was accumulated upward, so s - x rounded up is an upper bound of the other terms
    crate::interval::add_ru(s, -x).max(0.0)
}

/// `Z_2 = ||A|| * D2`.
pub fn bound_z2(ctx: &ProofContext, an: ANorm, big_r: f64) -> Result<(f64, D2Table)> {
    let b = &ctx.balls;
    let d2 = ctx.field.d2_table(&b.tau, &b.zeta, &b.u, &ctx.res.inv, big_r)?;
    Ok((mul_ru(an.full, d2.total), d2))
}

/// Everything produced by one contraction attempt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub nu: f64,
    pub big_r: f64,
    pub a_norm: ANorm,
    pub y: YParts,
    pub z1: Z1Parts,
    pub z2: f64,
    pub d2: D2Table,
    pub reciprocals: Vec<NeumannReport>,
    /// `Ok` bounds or the name of the failed inequality
    pub outcome: std::result::Result<NKBounds, String>,
}

impl ContractionReport {
    pub fn verified(&self) -> bool {
        self.outcome.is_ok()
    }
}

/// Run the full contraction check at weight `nu` and ball radius `big_r`.
pub fn prove_branch(field: &dyn Field, chi: &FloatBranch, g: &[FcArr; 3], pack: &OperatorPack, nu: f64, big_r: f64) -> Result<ContractionReport> {
    let ctx = ProofContext::new(field, chi, g, nu)?;
    let a = a_polymat(pack);
    let an = operator_norm_a(&a, nu, ctx.k);
    let y = bound_y(&ctx, &a, an);
    let w1 = build_w1(&ctx);
    let prod = aw1_product(&a, &w1, nu);
    let z1 = bound_z1(&ctx, &prod, an);
    let (z2, d2) = bound_z2(&ctx, an, big_r)?;
    let ub = |x: f64| Interval::new(0.0, x);
    let outcome = verify_contraction(ub(y.total), ub(z1.total), ub(z2), big_r, nu).map_err(|e| e.to_string());
    Ok(ContractionReport { nu, big_r, a_norm: an, y, z1, z2, d2, reciprocals: ctx.reciprocal_reports(), outcome })
}

/// `(1 - Z1)^2 - 2 Y Z2` in plain float arithmetic.
pub fn margin(rep: &ContractionReport) -> f64 {
    let z1 = rep.z1.total;
    (1.0 - z1) * (1.0 - z1) - 2.0 * rep.y.total * rep.z2
}

/// Runs `attempt` for each weight and keeps the report with the largest
/// margin; ties go to the larger weight.
pub fn select_nu(candidates: &[f64], mut attempt: impl FnMut(f64) -> Result<ContractionReport>) -> Result<ContractionReport> {
    if let Some(&bad) = candidates.iter().find(|&&nu| !(nu > 1.0)) {
        return Err(Error::Precondition(format!("weight {bad} is not > 1")));
    }
    let mut best: Option<(f64, ContractionReport)> = None;
    for &nu in candidates {
        let rep = match attempt(nu) {
            Ok(r) => r,
            Err(e) if e.is_verification_failure() => continue,
            Err(e) => return Err(e),
        };
        if rep.z1.total >= 1.0 {
            continue;
        }
        let m = margin(&rep);
        if !(m > 0.0) {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bm, br)) => m > *bm || (m == *bm && nu > br.nu),
        };
        if better {
            best = Some((m, rep));
        }
    }
    best.map(|(_, r)| r).ok_or(Error::NoViableNu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ub(x: f64) -> Interval {
        Interval::new(0.0, x)
    }

    #[test]
    fn closed_form_radii() {
        let b = verify_contraction(ub(0.0), ub(0.5), ub(1.0), 1.0, 1.0).unwrap();
        assert_eq!(b.r_min, 0.0);
        assert_eq!(b.r_max, 0.5);
        let b = verify_contraction(ub(0.125), ub(0.0), ub(1.0), 1.0, 1.0).unwrap();
        // 1 - sqrt(0.75) to 20 digits; the float expression itself cancels badly
        let want: f64 = 0.133_974_596_215_561_35;
        let ulp = f64::from_bits(want.to_bits() + 1) - want;
        assert!(b.r_min >= want - ulp && (b.r_min - want).abs() <= ulp, "{} {}", b.r_min, want);
        match verify_contraction(ub(0.0), ub(1.0), ub(1.0), 1.0, 1.0) {
            Err(Error::ContractionFailed(s)) => assert_eq!(s, "Z1"),
            other => panic!("{other:?}"),
        }
        assert!(verify_contraction(ub(1.0), ub(0.0), ub(1.0), 1.0, 1.0).is_err());
    }

    #[test]
    fn reported_radius_is_power_of_ten() {
        let b = verify_contraction(ub(3e-12), ub(0.1), ub(10.0), 1e-6, 1.0).unwrap();
        assert!(b.r_min > 3e-12 && b.r_min < 4e-12);
        assert_eq!(b.r, 1e-11);
    }
    fn fake(nu: f64, y: f64, z1: f64, z2: f64) -> ContractionReport {
        ContractionReport {
            nu,
            big_r: 1.0,
            a_norm: ANorm { finite: 1.0, full: 1.0 },
            y: YParts { total: y, ..Default::default() },
            z1: Z1Parts { total: z1, ..Default::default() },
            z2,
            d2: D2Table::default(),
            reciprocals: vec![],
            outcome: Err(String::new()),
        }
    }

    #[test]
    fn select_nu_examples() {
        let r = select_nu(&[1.05], |nu| Ok(fake(nu, 1e-3, 0.5, 1.0))).unwrap();
        assert_eq!(r.nu, 1.05);
        // margin falls with nu here
        let r = select_nu(&[1.001, 1.01, 1.05], |nu| Ok(fake(nu, 1e-3 * nu, 0.3 + (nu - 1.0), 1.0))).unwrap();
        assert_eq!(r.nu, 1.001);
        let r = select_nu(&[1.001, 1.01], |nu| Ok(fake(nu, 1e-3, 0.5, 1.0))).unwrap();
        assert_eq!(r.nu, 1.01);
        assert!(matches!(select_nu(&[1.1, 1.2], |nu| Ok(fake(nu, 0.0, 1.0, 1.0))), Err(Error::NoViableNu)));
        assert!(matches!(select_nu(&[1.0], |nu| Ok(fake(nu, 0.0, 0.1, 1.0))), Err(Error::Precondition(_))));
    }
}
