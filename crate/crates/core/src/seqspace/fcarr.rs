//! Plain floating-point coefficient arrays and Chebyshev helpers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::interval::{add_ru, cabs_ru, mul_ru};

/// Fourier–Chebyshev coefficients `c[n][k]`, `n = 0..=n_max`, `k = -k_max..=k_max`,
/// stored row-major in `n`. Chebyshev index `n` uses the symmetric convention
/// `psi(eta) = psi_0 + 2 sum_{n>=1} psi_n T_n(eta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FcArr {
    pub n_max: usize,
    pub k_max: usize,
    pub data: Vec<Complex64>,
}

impl FcArr {
    pub fn zeros(n_max: usize, k_max: usize) -> Self {
        FcArr { n_max, k_max, data: vec![Complex64::new(0.0, 0.0); (n_max + 1) * (2 * k_max + 1)] }
    }

    /// Chebyshev-only array (`k_max = 0`) from real coefficients.
    pub fn cheb_real(c: &[f64]) -> Self {
        assert!(!c.is_empty());
        FcArr { n_max: c.len() - 1, k_max: 0, data: c.iter().map(|&x| Complex64::new(x, 0.0)).collect() }
    }

    pub fn constant(c: Complex64) -> Self {
        FcArr { n_max: 0, k_max: 0, data: vec![c] }
    }

    #[inline]
    pub fn width(&self) -> usize {
        2 * self.k_max + 1
    }

    #[inline]
    pub fn idx(&self, n: usize, k: i64) -> usize {
        n * self.width() + (k + self.k_max as i64) as usize
    }

    #[inline]
    pub fn get(&self, n: usize, k: i64) -> Complex64 {
        if n > self.n_max || k.unsigned_abs() as usize > self.k_max {
            return Complex64::new(0.0, 0.0);
        }
        self.data[self.idx(n, k)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, k: i64, v: Complex64) {
        let i = self.idx(n, k);
        self.data[i] = v;
    }

    /// The Chebyshev series of Fourier mode `k`.
    pub fn mode(&self, k: i64) -> Vec<Complex64> {
        (0..=self.n_max).map(|n| self.get(n, k)).collect()
    }

    pub fn set_mode(&mut self, k: i64, c: &[Complex64]) {
        for (n, &v) in c.iter().enumerate().take(self.n_max + 1) {
            self.set(n, k, v);
        }
    }

    /// Copy into an array of different size, dropping what does not fit.
    pub fn resized(&self, n_max: usize, k_max: usize) -> FcArr {
        let mut out = FcArr::zeros(n_max, k_max);
        let km = self.k_max.min(k_max) as i64;
        for n in 0..=self.n_max.min(n_max) {
            for k in -km..=km {
                out.set(n, k, self.get(n, k));
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Rigorous upper bound on the weighted norm `sum_{n in Z, k} |c_{|n|,k}| nu^|n|`.
    pub fn norm_up(&self, nu: f64) -> f64 {
        let w = weights_up(nu, self.n_max);
        let mut s = 0.0;
        for n in 0..=self.n_max {
            let mut row = 0.0;
            for c in &self.data[n * self.width()..(n + 1) * self.width()] {
                row = add_ru(row, cabs_ru(c.re, c.im));
            }
            s = add_ru(s, mul_ru(row, w[n]));
        }
        s
    }

    /// Rigorous upper bound on the norm of the part with `n > n_keep` or `|k| > k_keep`.
    pub fn tail_norm_up(&self, nu: f64, n_keep: usize, k_keep: usize) -> f64 {
        let w = weights_up(nu, self.n_max);
        let mut s = 0.0;
        for n in 0..=self.n_max {
            let mut row = 0.0;
            for k in -(self.k_max as i64)..=self.k_max as i64 {
                if n > n_keep || k.unsigned_abs() as usize > k_keep {
                    let c = self.get(n, k);
                    row = add_ru(row, cabs_ru(c.re, c.im));
                }
            }
            s = add_ru(s, mul_ru(row, w[n]));
        }
        s
    }

    /// Float (non-rigorous) weighted norm.
    pub fn norm_f(&self, nu: f64) -> f64 {
        let mut s = 0.0;
        let mut w = 1.0;
        for n in 0..=self.n_max {
            let row: f64 = self.data[n * self.width()..(n + 1) * self.width()].iter().map(|c| c.norm()).sum();
            s += row * if n == 0 { 1.0 } else { 2.0 * w };
            w *= nu;
        }
        s
    }

    /// Float evaluation at `(t, eta)` with `phi(t) = sum_k phi_k e^{-ikt}`.
    pub fn eval_f(&self, t: f64, eta: f64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for k in -(self.k_max as i64)..=self.k_max as i64 {
            let ck = cheb_eval_c(&self.mode(k), eta);
            s += ck * Complex64::from_polar(1.0, -(k as f64) * t);
        }
        s
    }

    /// Float evaluation of every Fourier mode at `eta`.
    pub fn modes_at(&self, eta: f64) -> Vec<Complex64> {
        let t = cheb_t_values(self.n_max, eta);
        let mut out = vec![Complex64::new(0.0, 0.0); self.width()];
        for n in 0..=self.n_max {
            let w = if n == 0 { t[0] } else { 2.0 * t[n] };
            for (o, c) in out.iter_mut().zip(&self.data[n * self.width()..(n + 1) * self.width()]) {
                *o += c * w;
            }
        }
        out
    }

    pub fn conj_reflect(&self) -> FcArr {
        let mut out = FcArr::zeros(self.n_max, self.k_max);
        for n in 0..=self.n_max {
            for k in -(self.k_max as i64)..=self.k_max as i64 {
                out.set(n, k, self.get(n, -k).conj());
            }
        }
        out
    }

    /// Is `c_{n,-k} = conj(c_{n,k})` bit for bit?
    pub fn is_conj_symmetric(&self) -> bool {
        for n in 0..=self.n_max {
            for k in 0..=self.k_max as i64 {
                let a = self.get(n, k);
                let b = self.get(n, -k);
                if a.re.to_bits() != b.re.to_bits() || a.im.to_bits() != (-b.im).to_bits() {
                    // Allow +0 / -0 mismatch only for exact zeros.
                    if !(a.re == b.re && a.im == -b.im) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Enforce conjugate symmetry by averaging each pair; mode 0 becomes real.
    pub fn symmetrize(&mut self) {
        for n in 0..=self.n_max {
            for k in 0..=self.k_max as i64 {
                if k == 0 {
                    let c = self.get(n, 0);
                    self.set(n, 0, Complex64::new(c.re, 0.0));
                } else {
                    let a = self.get(n, k);
                    let b = self.get(n, -k).conj();
                    let m = (a + b) * 0.5;
                    self.set(n, k, m);
                    self.set(n, -k, m.conj());
                }
            }
        }
    }
}

/// `w_0 = 1`, `w_n = 2 nu^n` rounded up.
pub fn weights_up(nu: f64, n_max: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n_max + 1);
    let mut p = 1.0;
    w.push(1.0);
    for _ in 1..=n_max {
        p = mul_ru(p, nu);
        w.push(mul_ru(2.0, p));
    }
    w
}

/// `w_0 = 1`, `w_n = 2 nu^n` rounded down.
pub fn weights_down(nu: f64, n_max: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n_max + 1);
    let mut p = 1.0;
    w.push(1.0);
    for _ in 1..=n_max {
        p = crate::interval::mul_rd(p, nu);
        w.push(2.0 * p);
    }
    w
}

/// Chebyshev nodes `eta_l = -cos(l pi / n)`, `l = 0..=n`, with exact
/// symmetry and exact endpoints.
pub fn cheb_nodes(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..=n).map(|l| -((l as f64) * std::f64::consts::PI / n as f64).cos()).collect();
    if n == 0 {
        return vec![0.0];
    }
    v[0] = -1.0;
    v[n] = 1.0;
    for l in 0..=n / 2 {
        let m = 0.5 * (v[n - l] - v[l]);
        v[l] = -m;
        v[n - l] = m;
    }
    if n.is_multiple_of(2) {
        v[n / 2] = 0.0;
    }
    v
}

/// `T_0(eta) .. T_n(eta)` in floats.
pub fn cheb_t_values(n: usize, eta: f64) -> Vec<f64> {
    let mut t = vec![1.0; n + 1];
    if n >= 1 {
        t[1] = eta;
    }
    for i in 2..=n {
        t[i] = 2.0 * eta * t[i - 1] - t[i - 2];
    }
    t
}

/// Interpolate values at `cheb_nodes(n)` by a degree-`n` series in symmetric storage.
pub fn cheb_interp_c(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len() - 1;
    if n == 0 {
        return vec![values[0]];
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
    let nf = n as f64;
    for (m, o) in out.iter_mut().enumerate() {
        let mut s = Complex64::new(0.0, 0.0);
        for (l, v) in values.iter().enumerate() {
            // T_m(-cos(l pi / n)) = (-1)^m cos(m l pi / n)
            let arg = ((m * l) % (2 * n)) as f64 * std::f64::consts::PI / nf;
            let mut c = arg.cos();
            if m % 2 == 1 {
                c = -c;
            }
            let h = if l == 0 || l == n { 0.5 } else { 1.0 };
            s += v * (c * h);
        }
        // Standard coefficient is (2/n) s (halved at m = 0, n); symmetric storage halves again for m >= 1.
        let scale = if m == 0 {
            1.0 / nf
        } else if m == n {
            0.5 / nf
        } else {
            1.0 / nf
        };
        *o = s * scale;
    }
    out
}

pub fn cheb_interp_r(values: &[f64]) -> Vec<f64> {
    let v: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    cheb_interp_c(&v).into_iter().map(|c| c.re).collect()
}

/// Float evaluation of a symmetric-storage Chebyshev series.
pub fn cheb_eval_c(c: &[Complex64], eta: f64) -> Complex64 {
    // Clenshaw on a_0 = c_0, a_n = 2 c_n.
    let n = c.len();
    if n == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for i in (1..n).rev() {
        let b0 = c[i] * 2.0 + b1 * (2.0 * eta) - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + b1 * eta - b2
}

pub fn cheb_eval_r(c: &[f64], eta: f64) -> f64 {
    let n = c.len();
    if n == 0 {
        return 0.0;
    }
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for i in (1..n).rev() {
        let b0 = 2.0 * c[i] + 2.0 * eta * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + eta * b1 - b2
}

/// Derivative in `eta` of a symmetric-storage real series.
pub fn cheb_deriv_eval_r(c: &[f64], eta: f64) -> f64 {
    // d/deta T_n = n U_{n-1}
    let mut u_prev = 0.0; // U_{-1}
    let mut u = 1.0; // U_0
    let mut s = 0.0;
    for (i, ci) in c.iter().enumerate().skip(1) {
        s += 2.0 * ci * i as f64 * u;
        let next = 2.0 * eta * u - u_prev;
        u_prev = u;
        u = next;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_reproduces_t3() {
        let n = 8;
        let nodes = cheb_nodes(n);
        let vals: Vec<f64> = nodes.iter().map(|&x| 4.0 * x * x * x - 3.0 * x).collect();
        let c = cheb_interp_r(&vals);
        for (i, ci) in c.iter().enumerate() {
            let expect = if i == 3 { 0.5 } else { 0.0 };
            assert!((ci - expect).abs() < 1e-14, "{i} {ci}");
        }
    }

    #[test]
    fn constant_data_gives_constant_series() {
        let c = cheb_interp_r(&[2.5; 7]);
        assert!((c[0] - 2.5).abs() < 1e-15);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn nodes_are_symmetric() {
        let v = cheb_nodes(30);
        assert_eq!(v[15], 0.0);
        for l in 0..=30 {
            assert_eq!(v[l], -v[30 - l]);
        }
    }

    #[test]
    fn eval_and_derivative() {
        // psi = T_2 in symmetric storage
        let c = [0.0, 0.0, 0.5];
        assert!((cheb_eval_r(&c, 0.3) - (2.0 * 0.09 - 1.0)).abs() < 1e-15);
        assert!((cheb_deriv_eval_r(&c, 0.3) - 4.0 * 0.3).abs() < 1e-15);
    }

    #[test]
    fn norm_example() {
        let a = FcArr::cheb_real(&[0.0, 1.0]);
        assert_eq!(a.norm_up(2.0), 4.0);
    }
}
