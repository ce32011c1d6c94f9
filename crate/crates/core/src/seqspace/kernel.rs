//! Two-dimensional Chebyshev (folded) times Fourier (full) convolution kernels.
//!
//! Both kernels return the computed product together with a rigorous bound on
//! the weighted norm of the rounding error, so callers can absorb it into a
//! ball radius.

use num_complex::Complex64;

use super::fcarr::{weights_up, FcArr};
use crate::interval::{add_ru, gamma, mul_ru};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prec {
    /// Plain float accumulation with an a-priori `gamma_n` bound.
    Fast,
    /// Error-free product and sum transformations per output (Dot2).
    Compensated,
}

/// Chebyshev targets of the stored pair `(i, j)`.
#[inline]
fn targets(i: usize, j: usize) -> ([usize; 3], usize) {
    if i == 0 || j == 0 {
        ([i + j, 0, 0], 1)
    } else if i == j {
        ([i + j, 0, 0], 3)
    } else {
        ([i + j, i.abs_diff(j), 0], 2)
    }
}

/// Upper bound on the number of products landing in one output coefficient.
pub fn terms_per_output(a: &FcArr, b: &FcArr) -> usize {
    3 * ((a.n_max + 1) * a.width()).min((b.n_max + 1) * b.width())
}

/// Slack for products that may underflow, summed over all outputs with weights.
fn underflow_slack(a: &FcArr, b: &FcArr, nu: f64) -> f64 {
    if a.is_zero() || b.is_zero() {
        return 0.0;
    }
    let n_out = a.n_max + b.n_max;
    let w = weights_up(nu, n_out);
    let total_terms = 3.0 * ((a.n_max + 1) * a.width()) as f64 * ((b.n_max + 1) * b.width()) as f64;
    mul_ru(mul_ru(total_terms, w[n_out].max(1.0)), 1.0e-290)
}

/// Product of two coefficient arrays and a bound on the weighted norm of its rounding error.
pub fn conv(a: &FcArr, b: &FcArr, prec: Prec, nu: f64) -> (FcArr, f64) {
    match prec {
        Prec::Fast => {
            let c = conv_fast(a, b);
            let l = terms_per_output(a, b);
            let g = gamma(2 * l + 2);
            let e = mul_ru(mul_ru(2.0, g), mul_ru(a.norm_up(nu), b.norm_up(nu)));
            (c, add_ru(e, underflow_slack(a, b, nu)))
        }
        Prec::Compensated => {
            let (c, exact) = conv_comp_flagged(a, b);
            if exact {
                return (c, 0.0);
            }
            let l = terms_per_output(a, b);
            let g = gamma(2 * l + 2);
            let e1 = mul_ru(2.0 * f64::EPSILON, c.norm_up(nu));
            let e2 = mul_ru(mul_ru(3.0, mul_ru(g, g)), mul_ru(a.norm_up(nu), b.norm_up(nu)));
            (c, add_ru(add_ru(e1, e2), underflow_slack(a, b, nu)))
        }
    }
}

/// Plain float convolution.
pub fn conv_fast(a: &FcArr, b: &FcArr) -> FcArr {
    let mut out = FcArr::zeros(a.n_max + b.n_max, a.k_max + b.k_max);
    let (wa, wb, wo) = (a.width(), b.width(), out.width());
    for i in 0..=a.n_max {
        let ar = &a.data[i * wa..(i + 1) * wa];
        for j in 0..=b.n_max {
            let br = &b.data[j * wb..(j + 1) * wb];
            let (ts, nt) = targets(i, j);
            for &n in &ts[..nt] {
                let orow = &mut out.data[n * wo..(n + 1) * wo];
                for (ka, &x) in ar.iter().enumerate() {
                    if x.re == 0.0 && x.im == 0.0 {
                        continue;
                    }
                    for (o, &y) in orow[ka..ka + wb].iter_mut().zip(br) {
                        o.re += x.re * y.re - x.im * y.im;
                        o.im += x.re * y.im + x.im * y.re;
                    }
                }
            }
        }
    }
    out
}

/// One Dot2 step; returns a nonzero flag when any rounding (or possible underflow) occurred.
#[inline(always)]
fn acc(s: &mut f64, c: &mut f64, x: f64, y: f64) -> bool {
    let p = x * y;
    let pe = x.mul_add(y, -p);
    let t = *s + p;
    let bb = t - *s;
    let se = (*s - (t - bb)) + (p - bb);
    *s = t;
    *c += se + pe;
    (pe != 0.0) | (se != 0.0) | ((p.abs() < 1.0e-290) & (x != 0.0) & (y != 0.0))
}

/// Convolution with compensated (Dot2) accumulation of each output.
pub fn conv_comp(a: &FcArr, b: &FcArr) -> FcArr {
    conv_comp_flagged(a, b).0
}

/// As [`conv_comp`], also reporting whether every product and sum was exact.
pub(crate) fn conv_comp_flagged(a: &FcArr, b: &FcArr) -> (FcArr, bool) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("fma") && std::is_x86_feature_detected!("avx2") {
            // SAFETY: the required CPU features were detected at run time.
            return unsafe { conv_comp_fma(a, b) };
        }
    }
    conv_comp_impl(a, b)
}

// Hardware fma gives the same (exact) fused results as the software fallback,
// so both paths produce identical bits.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "fma,avx2")]
unsafe fn conv_comp_fma(a: &FcArr, b: &FcArr) -> (FcArr, bool) {
    conv_comp_impl(a, b)
}

#[inline(always)]
fn conv_comp_impl(a: &FcArr, b: &FcArr) -> (FcArr, bool) {
    let mut exact = true;
    let n_out = a.n_max + b.n_max;
    let k_out = a.k_max + b.k_max;
    let (wa, wb, wo) = (a.width(), b.width(), 2 * k_out + 1);
    let len = (n_out + 1) * wo;
    let mut sr = vec![0.0; len];
    let mut cr = vec![0.0; len];
    let mut si = vec![0.0; len];
    let mut ci = vec![0.0; len];
    for i in 0..=a.n_max {
        let ar = &a.data[i * wa..(i + 1) * wa];
        for j in 0..=b.n_max {
            let br = &b.data[j * wb..(j + 1) * wb];
            let (ts, nt) = targets(i, j);
            for &n in &ts[..nt] {
                let base = n * wo;
                for (ka, &x) in ar.iter().enumerate() {
                    if x.re == 0.0 && x.im == 0.0 {
                        continue;
                    }
                    let o = base + ka;
                    let mut inexact = false;
                    let rows = sr[o..o + wb].iter_mut().zip(&mut cr[o..o + wb]).zip(si[o..o + wb].iter_mut().zip(&mut ci[o..o + wb]));
                    for (((s_r, c_r), (s_i, c_i)), &y) in rows.zip(br) {
                        let f1 = acc(s_r, c_r, x.re, y.re);
                        let f2 = acc(s_r, c_r, -x.im, y.im);
                        let f3 = acc(s_i, c_i, x.re, y.im);
                        let f4 = acc(s_i, c_i, x.im, y.re);
                        inexact |= f1 | f2 | f3 | f4;
                    }
                    if inexact {
                        exact = false;
                    }
                }
            }
        }
    }
    let data = (0..len).map(|o| Complex64::new(sr[o] + cr[o], si[o] + ci[o])).collect();
    (FcArr { n_max: n_out, k_max: k_out, data }, exact)
}

/// Real non-negative convolution with the same index structure, rounded up.
///
/// Inputs are `(n_max + 1) x (2 k_max + 1)` row-major grids.
pub fn conv_abs_up(a: &[f64], an: usize, ak: usize, b: &[f64], bn: usize, bk: usize) -> Vec<f64> {
    let (wa, wb) = (2 * ak + 1, 2 * bk + 1);
    let wo = wa + wb - 1;
    let mut out = vec![0.0; (an + bn + 1) * wo];
    for i in 0..=an {
        let ar = &a[i * wa..(i + 1) * wa];
        for j in 0..=bn {
            let br = &b[j * wb..(j + 1) * wb];
            let (ts, nt) = targets(i, j);
            for &n in &ts[..nt] {
                let orow = &mut out[n * wo..(n + 1) * wo];
                for (ka, &x) in ar.iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    for (o, &y) in orow[ka..ka + wb].iter_mut().zip(br) {
                        *o += x * y;
                    }
                }
            }
        }
    }
    // Each output is a sum of at most L non-negative products.
    let l = 3 * ((an + 1) * wa).min((bn + 1) * wb);
    let g = 1.0 + gamma(l + 2);
    for o in out.iter_mut() {
        if *o != 0.0 {
            *o = add_ru(mul_ru(*o, g), 1.0e-300);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn t1_squared() {
        // T_1 is [0, 1/2]; T_1^2 = (T_0 + T_2)/2 is [1/2, 0, 1/4].
        let t1 = FcArr::cheb_real(&[0.0, 0.5]);
        let p = conv_fast(&t1, &t1);
        assert_eq!(p.mode(0), vec![c(0.5, 0.0), c(0.0, 0.0), c(0.25, 0.0)]);
        assert_eq!(conv_comp(&t1, &t1), p);
    }

    #[test]
    fn fourier_modes_add() {
        let mut a = FcArr::zeros(0, 2);
        a.set(0, 1, c(1.0, 0.0));
        let p = conv_fast(&a, &a);
        assert_eq!(p.get(0, 2), c(1.0, 0.0));
        assert_eq!(p.data.iter().filter(|z| z.norm() != 0.0).count(), 1);
    }

    #[test]
    fn compensated_is_more_accurate() {
        let a = FcArr::cheb_real(&[1.0, 1e-8, 0.1]);
        let b = FcArr::cheb_real(&[1.0, -1e-8, 0.3]);
        let (p, e) = conv(&a, &b, Prec::Compensated, 1.5);
        let (q, f) = conv(&a, &b, Prec::Fast, 1.5);
        assert!(e < f);
        for (x, y) in p.data.iter().zip(&q.data) {
            assert!((x - y).norm() <= f);
        }
    }

    #[test]
    fn exact_products_have_zero_error() {
        let a = FcArr::cheb_real(&[2.0, 0.5]);
        let b = FcArr::cheb_real(&[0.25, 0.125]);
        let (_, e) = conv(&a, &b, Prec::Compensated, 1.2);
        assert_eq!(e, 0.0);
        let (_, e) = conv(&FcArr::cheb_real(&[0.1]), &FcArr::cheb_real(&[0.3]), Prec::Compensated, 1.2);
        assert!(e > 0.0);
    }
}
