//! Weighted sequence spaces of Chebyshev and Fourier–Chebyshev coefficients.
//!
//! Chebyshev coefficients use symmetric storage: the stored `psi_n` are the
//! two-sided coefficients `psi_{|n|}`, so the function is
//! `psi_0 + 2 sum_{n>=1} psi_n T_n` and the norm is
//! `|psi_0| + 2 sum_{n>=1} |psi_n| nu^n`. Fourier modes follow
//! `phi(t) = sum_k phi_k e^{-ikt}`.

pub mod ball;
pub mod fcarr;
pub mod kernel;
pub mod sample;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use ball::{FcBall, NeumannReport};
pub use fcarr::FcArr;
pub use kernel::Prec;

use crate::error::{Error, Result};
use crate::interval::{add_ru, cabs_ru, div_ru, gamma, mul_ru, sub_rd, Interval, RectComplex};
use fcarr::{weights_down, weights_up};

/// Element of the Chebyshev space: coefficients `n = 0..=degree`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebSeq {
    pub coeffs: Vec<RectComplex>,
}

/// Element of the Fourier–Chebyshev space: `coeffs[n * (2 k_max + 1) + k + k_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierChebSeq {
    pub n_max: usize,
    pub k_max: usize,
    pub coeffs: Vec<RectComplex>,
}

/// Three Fourier–Chebyshev components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UVec(pub [FourierChebSeq; 3]);

fn mid_rad(z: &RectComplex) -> (Complex64, f64) {
    let (re, im) = z.mid();
    let r = cabs_ru((z.re - Interval::point(re)).mag(), (z.im - Interval::point(im)).mag());
    (Complex64::new(re, im), r)
}

fn rect_from(c: Complex64, r: f64) -> RectComplex {
    RectComplex::new(Interval::midrad(c.re, r), Interval::midrad(c.im, r))
}

fn weighted_norm(coeffs: &[RectComplex], n_max: usize, width: usize, nu: f64) -> Interval {
    let wu = weights_up(nu, n_max);
    let wd = weights_down(nu, n_max);
    let (mut lo, mut hi) = (0.0, 0.0);
    for n in 0..=n_max {
        let (mut rl, mut rh) = (0.0, 0.0);
        for z in &coeffs[n * width..(n + 1) * width] {
            rh = add_ru(rh, z.abs_upper());
            rl += z.abs_lower();
        }
        hi = add_ru(hi, mul_ru(rh, wu[n]));
        lo += rl * wd[n];
    }
    // The lower sum was accumulated in round-to-nearest; back off a little.
    let lo = (lo * (1.0 - gamma(4 * (n_max + 1) * width + 4))).max(0.0);
    Interval::new(lo.min(hi), hi)
}

/// Componentwise enclosure of a product of two interval coefficient grids.
fn rect_conv(a: &[RectComplex], an: usize, ak: usize, b: &[RectComplex], bn: usize, bk: usize) -> (usize, usize, Vec<RectComplex>) {
    let mut ac = FcArr::zeros(an, ak);
    let mut bc = FcArr::zeros(bn, bk);
    let mut a_abs = vec![0.0; a.len()];
    let mut a_rad = vec![0.0; a.len()];
    let mut b_abs = vec![0.0; b.len()];
    let mut b_rad = vec![0.0; b.len()];
    for (i, z) in a.iter().enumerate() {
        let (c, r) = mid_rad(z);
        ac.data[i] = c;
        a_abs[i] = cabs_ru(c.re, c.im);
        a_rad[i] = r;
    }
    for (i, z) in b.iter().enumerate() {
        let (c, r) = mid_rad(z);
        bc.data[i] = c;
        b_abs[i] = cabs_ru(c.re, c.im);
        b_rad[i] = r;
    }
    let (center, exact) = kernel::conv_comp_flagged(&ac, &bc);
    let a_tot: Vec<f64> = a_abs.iter().zip(&a_rad).map(|(x, y)| add_ru(*x, *y)).collect();
    let r1 = kernel::conv_abs_up(&a_tot, an, ak, &b_rad, bn, bk);
    let r2 = kernel::conv_abs_up(&a_rad, an, ak, &b_abs, bn, bk);
    let r3 = kernel::conv_abs_up(&a_abs, an, ak, &b_abs, bn, bk);
    let g = if exact { 0.0 } else { mul_ru(2.0, gamma(2 * kernel::terms_per_output(&ac, &bc) + 2)) };
    let out: Vec<RectComplex> = (0..center.data.len())
        .map(|o| {
            let r = add_ru(add_ru(r1[o], r2[o]), if g == 0.0 { 0.0 } else { add_ru(mul_ru(g, r3[o]), 1.0e-300) });
            rect_from(center.data[o], r)
        })
        .collect();
    (center.n_max, center.k_max, out)
}

impl ChebSeq {
    pub fn new(coeffs: Vec<RectComplex>) -> Self {
        assert!(!coeffs.is_empty());
        ChebSeq { coeffs }
    }

    /// Stored (two-sided) coefficients given as floats.
    pub fn from_f64(c: &[f64]) -> Self {
        ChebSeq::new(c.iter().map(|&x| RectComplex::point(x, 0.0)).collect())
    }

    /// From ordinary coefficients `sum a_n T_n`; halving is exact in binary.
    pub fn from_standard(a: &[f64]) -> Self {
        ChebSeq::new(a.iter().enumerate().map(|(n, &x)| RectComplex::point(if n == 0 { x } else { 0.5 * x }, 0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Weighted norm `|psi_0| + 2 sum |psi_n| nu^n`.
    pub fn norm(&self, nu: f64) -> Interval {
        weighted_norm(&self.coeffs, self.degree(), 1, nu)
    }

    pub fn mul(&self, other: &ChebSeq) -> ChebSeq {
        let (_, _, c) = rect_conv(&self.coeffs, self.degree(), 0, &other.coeffs, other.degree(), 0);
        ChebSeq::new(c)
    }

    pub fn add(&self, other: &ChebSeq) -> ChebSeq {
        let n = self.coeffs.len().max(other.coeffs.len());
        let z = RectComplex::ZERO;
        ChebSeq::new((0..n).map(|i| *self.coeffs.get(i).unwrap_or(&z) + *other.coeffs.get(i).unwrap_or(&z)).collect())
    }

    pub fn scale(&self, s: RectComplex) -> ChebSeq {
        ChebSeq::new(self.coeffs.iter().map(|c| *c * s).collect())
    }

    pub fn truncate(&self, n: usize) -> ChebSeq {
        ChebSeq::new(self.coeffs[..=n.min(self.degree())].to_vec())
    }

    /// Complement of [`ChebSeq::truncate`].
    pub fn tail(&self, n: usize) -> ChebSeq {
        ChebSeq::new(self.coeffs.iter().enumerate().map(|(i, c)| if i <= n { RectComplex::ZERO } else { *c }).collect())
    }

    /// Clenshaw evaluation at `eta` (an interval inside `[-1, 1]`).
    pub fn eval(&self, eta: Interval) -> Result<RectComplex> {
        if eta.lo() < -1.0 || eta.hi() > 1.0 {
            return Err(Error::DomainError("eta outside [-1, 1]"));
        }
        Ok(clenshaw(&self.coeffs, eta))
    }

    pub fn mid_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.re.mid()).collect()
    }

    /// All imaginary parts are exactly zero.
    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im.lo() == 0.0 && c.im.hi() == 0.0)
    }

    pub fn to_ball(&self, nu: f64) -> FcBall {
        FcBall::from_rect(self.degree(), 0, &self.coeffs, nu)
    }
}

pub(crate) fn clenshaw(c: &[RectComplex], eta: Interval) -> RectComplex {
    let n = c.len();
    let two = Interval::point(2.0);
    let mut b1 = RectComplex::ZERO;
    let mut b2 = RectComplex::ZERO;
    for i in (1..n).rev() {
        let b0 = c[i].scale(two) + b1.scale(two * eta) - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + b1.scale(eta) - b2
}

impl FourierChebSeq {
    pub fn zeros(n_max: usize, k_max: usize) -> Self {
        FourierChebSeq { n_max, k_max, coeffs: vec![RectComplex::ZERO; (n_max + 1) * (2 * k_max + 1)] }
    }

    pub fn from_fcarr(a: &FcArr) -> Self {
        FourierChebSeq { n_max: a.n_max, k_max: a.k_max, coeffs: a.data.iter().map(|c| RectComplex::point(c.re, c.im)).collect() }
    }

    pub fn width(&self) -> usize {
        2 * self.k_max + 1
    }

    pub fn get(&self, n: usize, k: i64) -> RectComplex {
        if n > self.n_max || k.unsigned_abs() as usize > self.k_max {
            return RectComplex::ZERO;
        }
        self.coeffs[n * self.width() + (k + self.k_max as i64) as usize]
    }

    pub fn set(&mut self, n: usize, k: i64, v: RectComplex) {
        let w = self.width();
        self.coeffs[n * w + (k + self.k_max as i64) as usize] = v;
    }

    /// Weighted norm: `n` doubled, `k` summed over all of Z.
    pub fn norm(&self, nu: f64) -> Interval {
        weighted_norm(&self.coeffs, self.n_max, self.width(), nu)
    }

    pub fn mul(&self, other: &FourierChebSeq) -> FourierChebSeq {
        let (n, k, c) = rect_conv(&self.coeffs, self.n_max, self.k_max, &other.coeffs, other.n_max, other.k_max);
        FourierChebSeq { n_max: n, k_max: k, coeffs: c }
    }

    pub fn add(&self, other: &FourierChebSeq) -> FourierChebSeq {
        let n_max = self.n_max.max(other.n_max);
        let k_max = self.k_max.max(other.k_max);
        let mut out = FourierChebSeq::zeros(n_max, k_max);
        for n in 0..=n_max {
            for k in -(k_max as i64)..=k_max as i64 {
                out.set(n, k, self.get(n, k) + other.get(n, k));
            }
        }
        out
    }

    /// Keep `|k| <= k` and `n <= n`, resizing the storage.
    pub fn truncate(&self, k: usize, n: usize) -> FourierChebSeq {
        let (nn, kk) = (n.min(self.n_max), k.min(self.k_max));
        let mut out = FourierChebSeq::zeros(nn, kk);
        for i in 0..=nn {
            for j in -(kk as i64)..=kk as i64 {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    /// The modes `|k| > k`, same storage size.
    pub fn tail(&self, k: usize) -> FourierChebSeq {
        let mut out = self.clone();
        for n in 0..=self.n_max {
            for j in -(self.k_max as i64)..=self.k_max as i64 {
                if j.unsigned_abs() as usize <= k {
                    out.set(n, j, RectComplex::ZERO);
                }
            }
        }
        out
    }

    /// The modes `|k| <= k`, same storage size.
    pub fn head(&self, k: usize) -> FourierChebSeq {
        let mut out = self.clone();
        for n in 0..=self.n_max {
            for j in -(self.k_max as i64)..=self.k_max as i64 {
                if j.unsigned_abs() as usize > k {
                    out.set(n, j, RectComplex::ZERO);
                }
            }
        }
        out
    }

    /// `(d_t phi)_k = -ik phi_k`.
    pub fn dt(&self) -> FourierChebSeq {
        let mut out = self.clone();
        for n in 0..=self.n_max {
            for k in -(self.k_max as i64)..=self.k_max as i64 {
                let factor = RectComplex::point(0.0, -(k as f64));
                out.set(n, k, self.get(n, k) * factor);
            }
        }
        out
    }

    /// Chebyshev series of mode `k`.
    pub fn mode(&self, k: i64) -> ChebSeq {
        ChebSeq::new((0..=self.n_max).map(|n| self.get(n, k)).collect())
    }

    pub fn eval(&self, t: Interval, eta: Interval) -> Result<RectComplex> {
        if eta.lo() < -1.0 || eta.hi() > 1.0 {
            return Err(Error::DomainError("eta outside [-1, 1]"));
        }
        let mut s = RectComplex::ZERO;
        for k in -(self.k_max as i64)..=self.k_max as i64 {
            let ck = clenshaw(&self.mode(k).coeffs, eta);
            let arg = t * Interval::point(k as f64);
            let e = RectComplex::new(arg.cos(), -arg.sin());
            s = s + ck * e;
        }
        Ok(s)
    }

    pub fn mid(&self) -> FcArr {
        FcArr { n_max: self.n_max, k_max: self.k_max, data: self.coeffs.iter().map(|c| Complex64::new(c.re.mid(), c.im.mid())).collect() }
    }

    pub fn to_ball(&self, nu: f64) -> FcBall {
        FcBall::from_rect(self.n_max, self.k_max, &self.coeffs, nu)
    }

    /// Conjugate symmetry `phi_{n,-k} = conj(phi_{n,k})` as exact interval equality.
    pub fn is_conj_symmetric(&self) -> bool {
        for n in 0..=self.n_max {
            for k in 0..=self.k_max as i64 {
                let a = self.get(n, k);
                let b = self.get(n, -k).conj();
                if a != b {
                    return false;
                }
            }
        }
        true
    }
}

impl UVec {
    pub fn norm(&self, nu: f64) -> Interval {
        self.0.iter().fold(Interval::ZERO, |acc, c| acc + c.norm(nu))
    }
}

/// Neumann-series bound on `||phi_inv - phi^{-1}||` for exact data.
pub fn neumann_inverse_error(phi_bar: &FourierChebSeq, phi_inv_bar: &FourierChebSeq, nu: f64) -> Result<Interval> {
    let prod = phi_bar.mul(phi_inv_bar);
    let mut defect = prod.clone();
    for c in defect.coeffs.iter_mut() {
        *c = -*c;
    }
    defect.set(0, 0, RectComplex::ONE + defect.get(0, 0));
    let d = defect.norm(nu);
    if !(d.hi() < 1.0) {
        return Err(Error::NotInvertibleCandidate { defect: d.hi() });
    }
    let num = phi_inv_bar.mul(&defect).norm(nu);
    let den = Interval::ONE - d;
    Ok(Interval::new(0.0, div_ru(num.hi(), den.lo())).intersect(&Interval::new(0.0, f64::INFINITY)).unwrap())
}

/// Uniform bound on `||phi^{-1}||` over the ball of radius `r` around `phi_bar`.
pub fn ball_inverse_bound(phi_bar: &FourierChebSeq, phi_inv_bar: &FourierChebSeq, r: f64, nu: f64) -> Result<Interval> {
    let prod = phi_bar.mul(phi_inv_bar);
    let mut defect = prod;
    for c in defect.coeffs.iter_mut() {
        *c = -*c;
    }
    defect.set(0, 0, RectComplex::ONE + defect.get(0, 0));
    let d = defect.norm(nu);
    let inv_norm = phi_inv_bar.norm(nu);
    let s = add_ru(d.hi(), mul_ru(r, inv_norm.hi()));
    if !(s < 1.0) {
        return Err(Error::BallNotInvertible { what: "||1 - phi phi_inv|| + R ||phi_inv||".into(), value: s });
    }
    let hi = div_ru(inv_norm.hi(), sub_rd(1.0, s));
    let lo = inv_norm.lo() / (1.0 - (d.lo() + r * inv_norm.lo())).max(f64::MIN_POSITIVE);
    let lo = crate::interval::next_down(lo).min(hi).max(0.0);
    Ok(Interval::new(lo, hi))
}
