//! Contraction bounds for the normal-form map
//! `G(C, V) = (Pi_K V(0) - I, d_t V + V C - tau d_u f V)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::float::{c_index, floquet_dim, v_index, FloquetBranch, FloquetPack};
use crate::contraction::{verify_contraction, NKBounds, ProofContext};
use crate::error::Result;
use crate::interval::{add_ru, cabs_ru, div_ru, gamma, mul_ru, Interval};
use crate::polymat::{mul_bounded, op_norm_up, BoundedProduct, PolyMat};
use crate::seqspace::fcarr::weights_up;
use crate::seqspace::{FcArr, FcBall, Prec};

type C = Complex64;

/// `||B_finite||` and `||B|| = max(||B_finite||, 1/(K+1))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BNorm {
    pub finite: f64,
    pub full: f64,
}

pub fn operator_norm_b(pack: &FloquetPack, nu: f64, k: usize) -> BNorm {
    let finite = op_norm_up(&pack.b, nu);
    BNorm { finite, full: finite.max(div_ru(1.0, (k + 1) as f64)) }
}

/// Bound of `||tau~ d_u f(chi~) - omega_1||` as a multiplication operator.
///
/// `d2_total * r` covers the move from `chi_bar` to the true branch (the
/// `u`-to-equation block of `DF` is Lipschitz with that constant on the ball),
/// the `d1` entries cover the truncation and rounding of `omega_1`.
pub fn coefficient_defect(ctx: &ProofContext, d2_total: f64, r: f64) -> f64 {
    let d1 = &ctx.omegas.d1;
    let cols = (0..3).map(|j| (0..3).fold(0.0, |s, i| add_ru(s, d1[i][j]))).fold(0.0, f64::max);
    add_ru(cols, mul_ru(d2_total, r))
}

fn c_ball(fb: &FloquetBranch, l: usize, m: usize, nu: f64) -> FcBall {
    FcBall::exact(FcArr::cheb_real(&fb.c[l][m]), nu)
}

/// Parts of `Y_G = ||B|| ||G(upsilon_bar)||`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GResidual {
    /// `sum ||(Pi_K V(0) - I)_{lm}||`
    pub constraint: f64,
    /// `sum ||d_t V + V C - omega_1 V||`
    pub equation: f64,
    /// `||tau~ d_u f - omega_1|| sum ||V_{lm}||`
    pub coefficient: f64,
    pub total: f64,
}

pub fn g_residual(ctx: &ProofContext, fb: &FloquetBranch, delta: f64) -> Result<GResidual> {
    let nu = ctx.nu;
    let k = fb.k_max();
    let p = Prec::Compensated;
    let v: Vec<Vec<FcBall>> = (0..3).map(|l| (0..3).map(|m| FcBall::exact(fb.v[l][m].clone(), nu)).collect()).collect();
    let om: Vec<Vec<FcBall>> = (0..3).map(|i| (0..3).map(|l| FcBall::exact(ctx.omegas.w1[i][l].clone(), nu)).collect()).collect();
    let mut constraint = 0.0;
    let mut vsum = 0.0;
    for l in 0..3 {
        for m in 0..3 {
            let mut s = v[l][m].sum_modes(k);
            if l == m {
                s = s.add_scalar(crate::interval::RectComplex::real(-Interval::ONE));
            }
            constraint = add_ru(constraint, s.norm_up());
            vsum = add_ru(vsum, v[l][m].norm_up());
        }
    }
    let mut equation = 0.0;
    for i in 0..3 {
        for m in 0..3 {
            let mut e = v[i][m].dt()?;
            for l in 0..3 {
                e = e.add(&v[i][l].mul(&c_ball(fb, l, m, nu), p));
                e = e.sub(&om[i][l].mul(&v[l][m], p));
            }
            equation = add_ru(equation, e.norm_up());
        }
    }
    let coefficient = mul_ru(delta, vsum);
    let total = add_ru(add_ru(constraint, equation), coefficient);
    Ok(GResidual { constraint, equation, coefficient, total })
}

/// Copy of the given columns.
fn select_cols(a: &PolyMat, cols: &[usize]) -> PolyMat {
    let mut out = PolyMat::zeros(a.rows, cols.len(), a.deg);
    for n in 0..=a.deg {
        for (j, &c) in cols.iter().enumerate() {
            out.re[n].set_column(j, &a.re[n].column(c));
            out.im[n].set_column(j, &a.im[n].column(c));
        }
    }
    out
}

/// Index of `(l, q')` in a column block with modes `|q'| <= 2K`.
#[inline]
fn wide_col(k: usize, l: usize, q: i64) -> usize {
    l * (4 * k + 1) + (q + 2 * k as i64) as usize
}

/// `d_t - omega_1` on one column of `V`: rows `(i, |q| <= K)`, columns `(l, |q'| <= 2K)`.
fn t_block(ctx: &ProofContext, k: usize, n: usize) -> PolyMat {
    let ki = k as i64;
    let w = 2 * k + 1;
    let mut t = PolyMat::zeros(3 * w, 3 * (4 * k + 1), n);
    for i in 0..3 {
        for q in -ki..=ki {
            let row = i * w + (q + ki) as usize;
            for l in 0..3 {
                let om = &ctx.omegas.w1[i][l];
                for qp in (q - ki)..=(q + ki) {
                    for d in 0..=n.min(om.n_max) {
                        t.set(d, row, wide_col(k, l, qp), -om.get(d, q - qp));
                    }
                }
            }
            let col = wide_col(k, i, q);
            let z = t.get(0, row, col) + C::new(0.0, -(q as f64));
            t.set(0, row, col, z);
        }
    }
    t
}

/// Parts of `Z1_G`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Z1GParts {
    /// columns `|q'| <= 2K` including the tail rows
    pub finite: f64,
    /// columns `|q'| > 2K`
    pub far_columns: f64,
    /// `||B|| ||DG - W_1||`
    pub defect: f64,
    pub total: f64,
}

/// Accumulates column norms of `B_finite W_1 - I` from several float pieces.
struct ColumnAcc<'a> {
    w: &'a [f64],
    deg: usize,
}

impl ColumnAcc<'_> {
    /// Norm bound of column `c` of `sum_p pieces[p]` minus the unit vector at `ident`.
    fn column(&self, pieces: &[(&BoundedProduct, usize)], rows: usize, ident: Option<usize>) -> f64 {
        let mut total = 0.0;
        let g2 = gamma(2);
        for r in 0..rows {
            let mut e = 0.0;
            let mut mags = 0.0;
            for n in 0..=self.deg {
                let mut z = C::new(0.0, 0.0);
                for (p, c) in pieces {
                    if n <= p.c.deg {
                        let v = p.c.get(n, r, *c);
                        z += v;
                        if pieces.len() > 1 {
                            mags = add_ru(mags, mul_ru(self.w[n], cabs_ru(v.re, v.im)));
                        }
                    }
                }
                let re = if n == 0 && ident == Some(r) { (Interval::point(z.re) - Interval::ONE).mag() } else { z.re.abs() };
                e = add_ru(e, mul_ru(self.w[n], cabs_ru(re, z.im)));
            }
            for (p, c) in pieces {
                e = add_ru(e, p.err[(r, *c)]);
            }
            if pieces.len() > 1 {
                e = add_ru(e, mul_ru(g2, mags));
            }
            total = add_ru(total, e);
        }
        total
    }
}

/// `B_finite` times the rows `Pi_K` of `W_1` on columns `|q'| <= 2K`, as pieces.
pub fn bound_z1_g(ctx: &ProofContext, fb: &FloquetBranch, pack: &FloquetPack, bn: BNorm, delta: f64) -> Z1GParts {
    let nu = ctx.nu;
    let k = fb.k_max();
    let ki = k as i64;
    let n = fb.n_max();
    let d = floquet_dim(k);
    let b = &pack.b;
    let wdeg = b.deg + n;
    let w = weights_up(nu, wdeg.max(b.deg));
    let acc = ColumnAcc { w: &w, deg: wdeg };
    let t = t_block(ctx, k, n);
    // C-bar^T blocks: row m, column m' holds C_{m' m}
    let mut ct = PolyMat::zeros(3, 3, n);
    for m in 0..3 {
        for mp in 0..3 {
            for (deg, &x) in fb.c[mp][m].iter().enumerate() {
                ct.set(deg, m, mp, C::new(x, 0.0));
            }
        }
    }
    let mut colmax = 0.0f64;
    // delta C columns: rows (i, m, q) hold V_{il, q}
    let vrows: Vec<usize> = (9..d).collect();
    let mut vm = PolyMat::zeros(d - 9, 9, n);
    for i in 0..3 {
        for m in 0..3 {
            for l in 0..3 {
                for q in -ki..=ki {
                    for deg in 0..=n {
                        vm.set(deg, v_index(k, i, m, q) - 9, c_index(l, m), fb.v[i][l].get(deg, q));
                    }
                }
            }
        }
    }
    let pc = mul_bounded(&select_cols(b, &vrows), &vm, nu);
    for l in 0..3 {
        for m in 0..3 {
            let c = c_index(l, m);
            colmax = colmax.max(acc.column(&[(&pc, c)], d, Some(c)));
        }
    }
    // unit pieces: the constraint rows of W_1 are copies of B's columns
    let unit = BoundedProduct { c: select_cols(b, &(0..9).collect::<Vec<_>>()), err: nalgebra::DMatrix::zeros(d, 9) };
    // C-bar coupling for |q'| <= K, keyed by (l, q')
    let cbar: Vec<BoundedProduct> = (0..3)
        .flat_map(|l| (-ki..=ki).map(move |q| (l, q)))
        .map(|(l, q)| {
            let cols: Vec<usize> = (0..3).map(|m| v_index(k, l, m, q)).collect();
            mul_bounded(&select_cols(b, &cols), &ct, nu)
        })
        .collect();
    let w1_norms: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|i| {
            (0..3)
                .map(|l| {
                    let om = &ctx.omegas.w1[i][l];
                    let wo = weights_up(nu, om.n_max);
                    (-ki..=ki).map(|q| mode_norm(om, q, &wo)).collect()
                })
                .collect()
        })
        .collect();
    let c_rows: Vec<f64> = (0..3).map(|mp| (0..3).fold(0.0, |s, m| add_ru(s, FcArr::cheb_real(&fb.c[mp][m]).norm_up(nu)))).collect();
    for mp in 0..3 {
        let rows: Vec<usize> = (0..3).flat_map(|i| (-ki..=ki).map(move |q| v_index(k, i, mp, q))).collect();
        let pt = mul_bounded(&select_cols(b, &rows), &t, nu);
        for l in 0..3 {
            for qp in -2 * ki..=2 * ki {
                let col = wide_col(k, l, qp);
                let mut pieces: Vec<(&BoundedProduct, usize)> = vec![(&pt, col)];
                let mut ident = None;
                if qp.abs() <= ki {
                    pieces.push((&cbar[l * (2 * k + 1) + (qp + ki) as usize], mp));
                    pieces.push((&unit, c_index(l, mp)));
                    ident = Some(v_index(k, l, mp, qp));
                }
                let mut s = acc.column(&pieces, d, ident);
                // tail rows K < |q| <= 3K
                for q in (qp - ki)..=(qp + ki) {
                    if q.abs() <= ki {
                        continue;
                    }
                    for i in 0..3 {
                        s = add_ru(s, div_ru(w1_norms[i][l][(q - qp + ki) as usize], q.unsigned_abs() as f64));
                    }
                }
                if qp.abs() > ki {
                    s = add_ru(s, div_ru(c_rows[mp], qp.unsigned_abs() as f64));
                }
                colmax = colmax.max(s);
            }
        }
    }
    let om_cols = (0..3).map(|l| (0..3).fold(0.0, |s, i| add_ru(s, ctx.omegas.w1[i][l].norm_up(nu)))).fold(0.0, f64::max);
    let far_columns = div_ru(add_ru(om_cols, c_rows.iter().cloned().fold(0.0, f64::max)), (k + 1) as f64);
    // rounding of -omega_1^{jj}_{00} - iq on the diagonal
    let eps = f64::EPSILON * 0.5;
    let om0 = (0..3).map(|j| {
        let z = ctx.omegas.w1[j][j].get(0, 0);
        cabs_ru(z.re, z.im)
    });
    let diag = om0.fold(0.0, f64::max);
    let defect = mul_ru(bn.full, add_ru(delta, mul_ru(2.0 * eps, add_ru(k as f64, diag))));
    let total = add_ru(colmax.max(far_columns), defect);
    Z1GParts { finite: colmax, far_columns, defect, total }
}

fn mode_norm(a: &FcArr, q: i64, w: &[f64]) -> f64 {
    if q.unsigned_abs() as usize > a.k_max {
        return 0.0;
    }
    (0..=a.n_max).fold(0.0, |s, n| {
        let c = a.get(n, q);
        add_ru(s, mul_ru(w[n], cabs_ru(c.re, c.im)))
    })
}

/// Everything produced by the normal-form contraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetContraction {
    pub nu: f64,
    pub b_norm: BNorm,
    /// `||tau~ d_u f - omega_1||`
    pub coefficient_defect: f64,
    pub residual: GResidual,
    pub y: f64,
    pub z1: Z1GParts,
    pub z2: f64,
    pub outcome: std::result::Result<NKBounds, String>,
}

impl FloquetContraction {
    pub fn radius(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|b| b.r_min)
    }
}

/// Contraction for `G` with `R = infinity` and `Z2 = 2 ||B||`.
pub fn prove_normal_form(ctx: &ProofContext, fb: &FloquetBranch, pack: &FloquetPack, d2_total: f64, r: f64) -> Result<FloquetContraction> {
    let nu = ctx.nu;
    let bn = operator_norm_b(pack, nu, fb.k_max());
    let delta = coefficient_defect(ctx, d2_total, r);
    let residual = g_residual(ctx, fb, delta)?;
    let y = mul_ru(bn.full, residual.total);
    let z1 = bound_z1_g(ctx, fb, pack, bn, delta);
    let z2 = mul_ru(2.0, bn.full);
    let ub = |x: f64| Interval::new(0.0, x);
    let outcome = verify_contraction(ub(y), ub(z1.total), ub(z2), f64::INFINITY, nu).map_err(|e| e.to_string());
    Ok(FloquetContraction { nu, b_norm: bn, coefficient_defect: delta, residual, y, z1, z2, outcome })
}
