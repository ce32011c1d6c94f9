//! Deterministic inputs for the kernel benchmarks.

use num_complex::Complex64;
use stablefam_core::polymat::PolyMat;
use stablefam_core::FcArr;

/// Coefficients decaying geometrically in both indices, like a smooth branch.
pub fn smooth_fcarr(n_max: usize, k_max: usize, seed: f64) -> FcArr {
    let mut a = FcArr::zeros(n_max, k_max);
    for n in 0..=n_max {
        for k in -(k_max as i64)..=k_max as i64 {
            let decay = 0.6f64.powi(n as i32) * 0.7f64.powi(k.unsigned_abs() as i32);
            let phase = seed + 0.37 * n as f64 + 1.13 * k as f64;
            a.set(n, k, Complex64::new(phase.cos(), phase.sin()) * decay);
        }
    }
    a
}

/// Dense polynomial matrix with decaying coefficient matrices.
pub fn dense_polymat(rows: usize, cols: usize, deg: usize, seed: f64) -> PolyMat {
    let mut m = PolyMat::zeros(rows, cols, deg);
    for d in 0..=deg {
        let s = 0.5f64.powi(d as i32);
        for i in 0..rows {
            for j in 0..cols {
                let x = seed + (i * cols + j) as f64 * 0.618 + d as f64;
                m.re[d][(i, j)] = s * x.sin();
                m.im[d][(i, j)] = s * x.cos();
            }
        }
    }
    m
}
