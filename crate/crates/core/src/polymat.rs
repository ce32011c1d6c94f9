//! Matrices whose entries are Chebyshev polynomials in `eta` (symmetric
//! storage), with a rigorous bound on the rounding error of float products.
//!
//! Entries act as multiplication operators, so the operator norm of a matrix
//! in the weighted-l1 product norm is bounded by its largest column sum of
//! entry norms.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::interval::{add_ru, cabs_ru, gamma, mul_ru};
use crate::seqspace::fcarr::weights_up;

type C = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct PolyMat {
    pub rows: usize,
    pub cols: usize,
    pub deg: usize,
    /// real and imaginary parts of the degree-`n` coefficient matrices
    pub re: Vec<DMatrix<f64>>,
    pub im: Vec<DMatrix<f64>>,
}

impl PolyMat {
    pub fn zeros(rows: usize, cols: usize, deg: usize) -> Self {
        PolyMat { rows, cols, deg, re: vec![DMatrix::zeros(rows, cols); deg + 1], im: vec![DMatrix::zeros(rows, cols); deg + 1] }
    }

    #[inline]
    pub fn get(&self, n: usize, r: usize, c: usize) -> C {
        if n > self.deg {
            return C::new(0.0, 0.0);
        }
        C::new(self.re[n][(r, c)], self.im[n][(r, c)])
    }

    #[inline]
    pub fn set(&mut self, n: usize, r: usize, c: usize, v: C) {
        self.re[n][(r, c)] = v.re;
        self.im[n][(r, c)] = v.im;
    }

    /// Entry coefficients `0..=deg`.
    pub fn entry(&self, r: usize, c: usize) -> Vec<C> {
        (0..=self.deg).map(|n| self.get(n, r, c)).collect()
    }

    /// Upper bounds of the entry norms `|c_0| + 2 sum |c_n| nu^n`.
    pub fn entry_norms(&self, nu: f64) -> DMatrix<f64> {
        let w = weights_up(nu, self.deg);
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for c in 0..self.cols {
            for r in 0..self.rows {
                let mut s = 0.0;
                for n in 0..=self.deg {
                    s = add_ru(s, mul_ru(w[n], cabs_ru(self.re[n][(r, c)], self.im[n][(r, c)])));
                }
                out[(r, c)] = s;
            }
        }
        out
    }

    /// Float value at `eta`.
    pub fn eval(&self, eta: f64) -> DMatrix<C> {
        let t = crate::seqspace::fcarr::cheb_t_values(self.deg, eta);
        DMatrix::from_fn(self.rows, self.cols, |r, c| {
            let mut s = self.get(0, r, c);
            for n in 1..=self.deg {
                s += self.get(n, r, c) * (2.0 * t[n]);
            }
            s
        })
    }
}

/// Upper bound of column sums of a non-negative matrix.
pub fn col_sums_up(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.ncols()).map(|c| m.column(c).iter().fold(0.0, |s, &x| add_ru(s, x))).collect()
}

/// Upper bound of `a b` for non-negative matrices.
pub fn nonneg_mul_up(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), b.ncols());
    for c in 0..b.ncols() {
        for l in 0..a.ncols() {
            let bl = b[(l, c)];
            if bl == 0.0 {
                continue;
            }
            for r in 0..a.nrows() {
                let x = a[(r, l)];
                if x != 0.0 {
                    out[(r, c)] = add_ru(out[(r, c)], mul_ru(x, bl));
                }
            }
        }
    }
    out
}

/// Float product with an entrywise bound on its error.
pub struct BoundedProduct {
    pub c: PolyMat,
    /// `err[(r, c)]` bounds the weighted norm of the error of entry `(r, c)`
    pub err: DMatrix<f64>,
}

/// `a * b` computed by real GEMMs over all pairs of coefficient degrees.
///
/// In symmetric storage the product of two series is the plain convolution
/// over signed indices. Each real output coefficient is a sum of at most
/// `m = 2 * inner * (2 * deg_a + 1)` products, so its error is at most
/// `gamma_m` times the same sum with absolute values; the weighted norm of
/// that sum is bounded by `sum_l ||a_rl|| ||b_lc||`.
pub fn mul_bounded(a: &PolyMat, b: &PolyMat, nu: f64) -> BoundedProduct {
    assert_eq!(a.cols, b.rows);
    let (da, db) = (a.deg, b.deg);
    let rows = a.rows;
    let cols = b.cols;
    let deg = da + db;
    let mut c = PolyMat::zeros(rows, cols, deg);
    // stack a's coefficient matrices vertically
    let stack = |v: &Vec<DMatrix<f64>>| {
        let mut s = DMatrix::<f64>::zeros(rows * (da + 1), a.cols);
        for (n, m) in v.iter().enumerate() {
            s.view_mut((n * rows, 0), (rows, a.cols)).copy_from(m);
        }
        s
    };
    let (sr, si) = (stack(&a.re), stack(&a.im));
    let mut pr = DMatrix::<f64>::zeros(rows * (da + 1), cols);
    let mut pi = DMatrix::<f64>::zeros(rows * (da + 1), cols);
    for ib in 0..=db {
        if b.re[ib].iter().all(|&x| x == 0.0) && b.im[ib].iter().all(|&x| x == 0.0) {
            continue;
        }
        pr.gemm(1.0, &sr, &b.re[ib], 0.0);
        pr.gemm(-1.0, &si, &b.im[ib], 1.0);
        pi.gemm(1.0, &sr, &b.im[ib], 0.0);
        pi.gemm(1.0, &si, &b.re[ib], 1.0);
        for ia in 0..=da {
            let sas: &[i64] = if ia == 0 { &[1] } else { &[1, -1] };
            let sbs: &[i64] = if ib == 0 { &[1] } else { &[1, -1] };
            for &sa in sas {
                for &sb in sbs {
                    let n = sa * ia as i64 + sb * ib as i64;
                    if n < 0 {
                        continue;
                    }
                    let n = n as usize;
                    c.re[n] += pr.view((ia * rows, 0), (rows, cols));
                    c.im[n] += pi.view((ia * rows, 0), (rows, cols));
                }
            }
        }
    }
    let m = 2 * a.cols * (2 * da + 1) + 2 * (2 * db + 1);
    let g = add_ru(mul_ru(gamma(m), std::f64::consts::SQRT_2), 0.0);
    let prod = nonneg_mul_up(&a.entry_norms(nu), &b.entry_norms(nu));
    // underflow slack per coefficient, weighted
    let wsum = weights_up(nu, deg).iter().fold(0.0, |s, &x| add_ru(s, x));
    let slack = mul_ru(mul_ru(m as f64, 1.0e-300), wsum);
    let err = prod.map(|x| add_ru(mul_ru(g, x), slack));
    BoundedProduct { c, err }
}

/// Upper bound of the operator norm: max column sum of entry norms.
pub fn op_norm_up(m: &PolyMat, nu: f64) -> f64 {
    col_sums_up(&m.entry_norms(nu)).into_iter().fold(0.0, f64::max)
}
