//! Norm balls around exact float coefficient arrays.
//!
//! An `FcBall` stands for the set `{ c + h : ||h||_nu <= err }` where `h`
//! ranges over all of the weighted space (any degree). All arithmetic is
//! inclusion-isotone, which is what the bounds need.

use num_complex::Complex64;

use super::fcarr::{weights_up, FcArr};
use super::kernel::{conv, Prec};
use crate::error::{Error, Result};
use crate::interval::{add_ru, cabs_ru, div_ru, mul_ru, sub_rd, Interval, RectComplex};

#[derive(Clone, Debug)]
pub struct FcBall {
    pub c: FcArr,
    pub err: f64,
    pub nu: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl FcBall {
    pub fn exact(c: FcArr, nu: f64) -> Self {
        FcBall { c, err: 0.0, nu }
    }

    pub fn zero(nu: f64) -> Self {
        FcBall { c: FcArr::zeros(0, 0), err: 0.0, nu }
    }

    /// Constant function with an interval value.
    pub fn constant(v: RectComplex, nu: f64) -> Self {
        let (re, im) = v.mid();
        let r = cabs_ru(v.re.rad().max((v.re - Interval::point(re)).mag()), v.im.rad().max((v.im - Interval::point(im)).mag()));
        FcBall { c: FcArr::constant(Complex64::new(re, im)), err: r, nu }
    }

    pub fn real_constant(v: Interval, nu: f64) -> Self {
        FcBall::constant(RectComplex::real(v), nu)
    }

    /// Ball enclosing a sequence of complex intervals.
    pub fn from_rect(n_max: usize, k_max: usize, coeffs: &[RectComplex], nu: f64) -> Self {
        let mut c = FcArr::zeros(n_max, k_max);
        let w = weights_up(nu, n_max);
        let mut err = 0.0;
        let wd = c.width();
        for n in 0..=n_max {
            let mut row = 0.0;
            for k in 0..wd {
                let z = coeffs[n * wd + k];
                let (re, im) = z.mid();
                c.data[n * wd + k] = Complex64::new(re, im);
                let dr = (z.re - Interval::point(re)).mag();
                let di = (z.im - Interval::point(im)).mag();
                row = add_ru(row, cabs_ru(dr, di));
            }
            err = add_ru(err, mul_ru(row, w[n]));
        }
        FcBall { c, err, nu }
    }

    /// Coefficient-wise enclosure on the stored index range.
    pub fn to_seq(&self) -> super::FourierChebSeq {
        let wd = super::fcarr::weights_down(self.nu, self.c.n_max);
        let width = self.c.width();
        let coeffs = self
            .c
            .data
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let r = if self.err == 0.0 { 0.0 } else { div_ru(self.err, wd[i / width]) };
                RectComplex::new(Interval::midrad(z.re, r), Interval::midrad(z.im, r))
            })
            .collect();
        super::FourierChebSeq { n_max: self.c.n_max, k_max: self.c.k_max, coeffs }
    }

    pub fn n_max(&self) -> usize {
        self.c.n_max
    }

    pub fn k_max(&self) -> usize {
        self.c.k_max
    }

    /// Upper bound on the weighted norm of every member.
    pub fn norm_up(&self) -> f64 {
        add_ru(self.c.norm_up(self.nu), self.err)
    }

    fn combine(&self, other: &FcBall, sign: f64) -> FcBall {
        assert_eq!(self.nu, other.nu, "balls with different weights");
        let n_max = self.c.n_max.max(other.c.n_max);
        let k_max = self.c.k_max.max(other.c.k_max);
        let mut c = FcArr::zeros(n_max, k_max);
        let w = weights_up(self.nu, n_max);
        let mut round = 0.0;
        for n in 0..=n_max {
            let mut row = 0.0;
            for k in -(k_max as i64)..=k_max as i64 {
                let a = self.c.get(n, k);
                let b = other.c.get(n, k);
                let (sr, er) = two_sum(a.re, sign * b.re);
                let (si, ei) = two_sum(a.im, sign * b.im);
                c.set(n, k, Complex64::new(sr, si));
                if er != 0.0 || ei != 0.0 {
                    row = add_ru(row, cabs_ru(er, ei));
                }
            }
            round = add_ru(round, mul_ru(row, w[n]));
        }
        FcBall { c, err: add_ru(add_ru(self.err, other.err), round), nu: self.nu }
    }

    pub fn add(&self, other: &FcBall) -> FcBall {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &FcBall) -> FcBall {
        self.combine(other, -1.0)
    }

    pub fn neg(&self) -> FcBall {
        let mut c = self.c.clone();
        for z in c.data.iter_mut() {
            *z = -*z;
        }
        FcBall { c, err: self.err, nu: self.nu }
    }

    /// Multiplication by a complex interval scalar.
    pub fn scale(&self, s: RectComplex) -> FcBall {
        let (sr, si) = s.mid();
        let sm = Complex64::new(sr, si);
        let srad = cabs_ru((s.re - Interval::point(sr)).mag(), (s.im - Interval::point(si)).mag());
        let smag = cabs_ru(sr, si);
        let mut c = self.c.clone();
        for z in c.data.iter_mut() {
            *z *= sm;
        }
        let cn = self.c.norm_up(self.nu);
        // |fl(s z) - s z| <= sqrt(5) u |s||z|; use 2.5 u plus underflow slack.
        let round = if cn == 0.0 || si == 0.0 && (sr == 1.0 || sr == -1.0 || sr == 0.0) {
            0.0
        } else {
            add_ru(mul_ru(mul_ru(2.5 * f64::EPSILON * 0.5, smag), cn), mul_ru(self.c.data.len() as f64, 1.0e-300))
        };
        let err = add_ru(add_ru(mul_ru(add_ru(smag, srad), self.err), mul_ru(srad, cn)), round);
        FcBall { c, err, nu: self.nu }
    }

    pub fn scale_real(&self, s: Interval) -> FcBall {
        self.scale(RectComplex::real(s))
    }

    /// Add a scalar to the constant coefficient.
    pub fn add_scalar(&self, s: RectComplex) -> FcBall {
        self.add(&FcBall::constant(s, self.nu))
    }

    pub fn mul(&self, other: &FcBall, prec: Prec) -> FcBall {
        assert_eq!(self.nu, other.nu, "balls with different weights");
        let (c, e) = conv(&self.c, &other.c, prec, self.nu);
        let na = self.c.norm_up(self.nu);
        let nb = other.c.norm_up(self.nu);
        let mut err = e;
        if other.err != 0.0 {
            err = add_ru(err, mul_ru(na, other.err));
        }
        if self.err != 0.0 {
            err = add_ru(err, mul_ru(self.err, nb));
            err = add_ru(err, mul_ru(self.err, other.err));
        }
        FcBall { c, err, nu: self.nu }
    }

    /// Multiply and truncate to `(n, k)` in one step.
    pub fn mul_trunc(&self, other: &FcBall, prec: Prec, n: usize, k: usize) -> FcBall {
        self.mul(other, prec).truncate(n, k)
    }

    /// Drop coefficients outside `(n, k)`, moving their norm into the radius.
    pub fn truncate(&self, n: usize, k: usize) -> FcBall {
        if n >= self.c.n_max && k >= self.c.k_max {
            return self.clone();
        }
        let tail = self.c.tail_norm_up(self.nu, n, k);
        FcBall { c: self.c.resized(n.min(self.c.n_max), k.min(self.c.k_max)), err: add_ru(self.err, tail), nu: self.nu }
    }

    /// Time derivative `(d_t phi)_k = -ik phi_k`; only defined for exact centers.
    pub fn dt(&self) -> Result<FcBall> {
        if self.err != 0.0 {
            return Err(Error::Precondition("time derivative of a ball with nonzero radius".into()));
        }
        let mut c = self.c.clone();
        let w = weights_up(self.nu, c.n_max);
        let mut round = 0.0;
        for n in 0..=c.n_max {
            let mut row = 0.0;
            for k in -(c.k_max as i64)..=c.k_max as i64 {
                let z = c.get(n, k);
                let kf = k as f64;
                // -ik (x + iy) = k y - i k x
                let re = kf * z.im;
                let im = -kf * z.re;
                let er = kf.mul_add(z.im, -re);
                let ei = (-kf).mul_add(z.re, -im);
                if er != 0.0 || ei != 0.0 {
                    row = add_ru(row, cabs_ru(er, ei));
                }
                c.set(n, k, Complex64::new(re, im));
            }
            round = add_ru(round, mul_ru(row, w[n]));
        }
        Ok(FcBall { c, err: round, nu: self.nu })
    }

    /// Keep the modes `|k| <= k` of every member; the projection has norm one.
    pub fn project_k(&self, k: usize) -> FcBall {
        FcBall { c: self.c.resized(self.c.n_max, k.min(self.c.k_max)), err: self.err, nu: self.nu }
    }

    /// `sum_{|k| <= k} phi_k(eta)`, the value at `t = 0` of the modes up to `k`.
    pub fn sum_modes(&self, k: usize) -> FcBall {
        let kk = k.min(self.c.k_max) as i64;
        let mut c = FcArr::zeros(self.c.n_max, 0);
        let w = weights_up(self.nu, self.c.n_max);
        let mut round = 0.0;
        for n in 0..=self.c.n_max {
            let (mut sr, mut si, mut er, mut ei) = (0.0, 0.0, 0.0, 0.0);
            for j in -kk..=kk {
                let z = self.c.get(n, j);
                let (a, e) = two_sum(sr, z.re);
                sr = a;
                er += e.abs();
                let (a, e) = two_sum(si, z.im);
                si = a;
                ei += e.abs();
            }
            c.set(n, 0, Complex64::new(sr, si));
            if er != 0.0 || ei != 0.0 {
                // the error sums were accumulated in round-to-nearest
                let bound = mul_ru(add_ru(er, ei), 1.0 + 4.0 * (2 * kk + 1) as f64 * f64::EPSILON);
                round = add_ru(round, mul_ru(bound, w[n]));
            }
        }
        FcBall { c, err: add_ru(self.err, round), nu: self.nu }
    }

    /// Coefficient-wise conjugate with `k -> -k`.
    pub fn conj_reflect(&self) -> FcBall {
        FcBall { c: self.c.conj_reflect(), err: self.err, nu: self.nu }
    }

    /// Coefficient-wise conjugate (pointwise conjugate for real `eta`, `k` kept).
    pub fn conj(&self) -> FcBall {
        let mut c = self.c.clone();
        for z in c.data.iter_mut() {
            *z = z.conj();
        }
        FcBall { c, err: self.err, nu: self.nu }
    }

    /// Enclosure of the inverse using an approximate inverse `approx` and the
    /// Neumann-series lemma. The product `self * approx` is truncated to `trunc`.
    pub fn inverse(&self, approx: &FcArr, prec: Prec, trunc: (usize, usize)) -> Result<(FcBall, NeumannReport)> {
        let psi = FcBall::exact(approx.clone(), self.nu);
        let prod = self.mul_trunc(&psi, prec, trunc.0, trunc.1);
        let defect_ball = FcBall::constant(RectComplex::ONE, self.nu).sub(&prod);
        let defect = defect_ball.norm_up();
        if !(defect < 1.0) {
            return Err(Error::NotInvertibleCandidate { defect });
        }
        let num = psi.mul_trunc(&defect_ball, Prec::Fast, trunc.0, trunc.1).norm_up();
        let radius = div_ru(num, sub_rd(1.0, defect));
        let psi_norm = psi.norm_up();
        Ok((FcBall { c: approx.clone(), err: radius, nu: self.nu }, NeumannReport { defect, radius, approx_norm: psi_norm }))
    }
}

/// Diagnostics of one Neumann-lemma application.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NeumannReport {
    /// Upper bound on `||1 - phi phi_inv||`.
    pub defect: f64,
    /// Upper bound on `||phi_inv - phi^{-1}||`.
    pub radius: f64,
    /// Upper bound on `||phi_inv||`.
    pub approx_norm: f64,
}

impl NeumannReport {
    /// Uniform bound on `||phi^{-1}||` over a ball of radius `r` around the
    /// center that produced this report.
    pub fn ball_bound(&self, r: f64) -> Result<f64> {
        let s = add_ru(self.defect, mul_ru(r, self.approx_norm));
        if !(s < 1.0) {
            return Err(Error::BallNotInvertible { what: "||1 - phi phi_inv|| + R ||phi_inv||".into(), value: s });
        }
        Ok(div_ru(self.approx_norm, sub_rd(1.0, s)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_product_contains_exact() {
        let a = FcBall::from_rect(1, 0, &[RectComplex::point(1.0, 0.0), RectComplex::new(Interval::new(0.1, 0.2), Interval::ZERO)], 1.5);
        let b = FcBall::exact(FcArr::cheb_real(&[2.0, 0.25]), 1.5);
        let p = a.mul(&b, Prec::Compensated);
        // exact product with a_1 = 0.15: [2 + 2*0.15*0.25, 0.5 + 0.3, 0.0375]
        let exact = [2.075, 0.55, 0.0375];
        let mut dev = 0.0;
        for (n, e) in exact.iter().enumerate() {
            let w = if n == 0 { 1.0 } else { 2.0 * 1.5f64.powi(n as i32) };
            dev += w * (p.c.get(n, 0).re - e).abs();
        }
        assert!(dev <= p.err);
    }

    #[test]
    fn inverse_of_two() {
        let two = FcBall::exact(FcArr::cheb_real(&[2.0]), 1.1);
        let (inv, rep) = two.inverse(&FcArr::cheb_real(&[0.5]), Prec::Compensated, (4, 0)).unwrap();
        assert_eq!(inv.err, 0.0);
        assert_eq!(rep.defect, 0.0);
        assert_eq!(rep.ball_bound(1.0).unwrap(), 1.0);
    }

    #[test]
    fn sum_of_modes() {
        let mut c = FcArr::zeros(1, 2);
        c.set(0, -2, Complex64::new(0.1, 0.0));
        c.set(0, 1, Complex64::new(0.2, 0.5));
        c.set(1, 0, Complex64::new(1.0, 0.0));
        let b = FcBall::exact(c, 1.5);
        let s = b.sum_modes(1);
        assert_eq!(s.c.get(0, 0), Complex64::new(0.2, 0.5));
        assert_eq!(s.c.get(1, 0), Complex64::new(1.0, 0.0));
        let s = b.sum_modes(2);
        assert!((s.c.get(0, 0).re - 0.3).abs() <= 1e-16);
        assert!(s.err < 1e-15);
    }

    #[test]
    fn dt_of_mode_one() {
        let mut c = FcArr::zeros(0, 1);
        c.set(0, 1, Complex64::new(1.0, 0.0));
        let d = FcBall::exact(c, 1.0).dt().unwrap();
        assert_eq!(d.c.get(0, 1), Complex64::new(0.0, -1.0));
        assert_eq!(d.err, 0.0);
    }
}
