//! Float sampling on (Chebyshev node) x (uniform time grid) and back.
//!
//! Used only to build approximate objects (reciprocals, node data); nothing
//! here is rigorous.

use num_complex::Complex64;

use super::fcarr::{cheb_interp_c, cheb_nodes, FcArr};

/// Direct DFT on `m` equispaced points, `phi(t) = sum_k phi_k e^{-ikt}`.
#[derive(Clone, Debug)]
pub struct Dft {
    m: usize,
    table: Vec<Complex64>,
}

impl Dft {
    pub fn new(m: usize) -> Self {
        let table = (0..m)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                Complex64::new(th.cos(), -th.sin())
            })
            .collect();
        Dft { m, table }
    }

    /// Grid large enough to resolve products with modes up to `k` without aliasing into `|k| <= k`.
    pub fn for_modes(k: usize) -> Self {
        Dft::new((4 * k + 2).next_power_of_two().max(64))
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.m).map(|j| 2.0 * std::f64::consts::PI * j as f64 / self.m as f64).collect()
    }

    #[inline]
    fn tw(&self, k: i64, j: usize) -> Complex64 {
        let m = self.m as i64;
        self.table[((k * j as i64).rem_euclid(m)) as usize]
    }

    /// Values on the grid from modes `-k_max..=k_max`.
    pub fn synth(&self, modes: &[Complex64]) -> Vec<Complex64> {
        let k_max = (modes.len() / 2) as i64;
        (0..self.m)
            .map(|j| {
                let mut s = Complex64::new(0.0, 0.0);
                for (i, c) in modes.iter().enumerate() {
                    s += c * self.tw(i as i64 - k_max, j);
                }
                s
            })
            .collect()
    }

    /// Real values on the grid (imaginary parts dropped).
    pub fn synth_re(&self, modes: &[Complex64]) -> Vec<f64> {
        self.synth(modes).into_iter().map(|z| z.re).collect()
    }

    /// Modes `-k_out..=k_out` of grid values.
    pub fn analyze(&self, vals: &[Complex64], k_out: usize) -> Vec<Complex64> {
        let scale = 1.0 / self.m as f64;
        (-(k_out as i64)..=k_out as i64)
            .map(|k| {
                let mut s = Complex64::new(0.0, 0.0);
                for (j, v) in vals.iter().enumerate() {
                    s += v * self.tw(k, j).conj();
                }
                s * scale
            })
            .collect()
    }

    pub fn analyze_re(&self, vals: &[f64], k_out: usize) -> Vec<Complex64> {
        let c: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.analyze(&c, k_out)
    }
}

/// Evaluate several arrays on the grid `cheb_nodes(n_out) x dft` and apply `f`
/// pointwise (arguments: `eta`, values), returning the degree-`(n_out, k_out)`
/// interpolant of the result.
pub fn map_grid<F>(inputs: &[&FcArr], n_out: usize, k_out: usize, dft: &Dft, f: F) -> FcArr
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    let etas = cheb_nodes(n_out);
    let per_node: Vec<Vec<Complex64>> = etas
        .iter()
        .map(|&eta| {
            let grids: Vec<Vec<f64>> = inputs.iter().map(|a| dft.synth_re(&a.modes_at(eta))).collect();
            let mut args = vec![0.0; inputs.len()];
            let vals: Vec<f64> = (0..dft.len())
                .map(|j| {
                    for (a, g) in args.iter_mut().zip(&grids) {
                        *a = g[j];
                    }
                    f(eta, &args)
                })
                .collect();
            dft.analyze_re(&vals, k_out)
        })
        .collect();
    from_node_modes(&per_node, k_out)
}

/// Chebyshev-interpolate per-node Fourier modes (nodes `cheb_nodes(len - 1)`).
pub fn from_node_modes(per_node: &[Vec<Complex64>], k_out: usize) -> FcArr {
    let n = per_node.len() - 1;
    let mut out = FcArr::zeros(n, k_out);
    for (i, k) in (-(k_out as i64)..=k_out as i64).enumerate() {
        let vals: Vec<Complex64> = per_node.iter().map(|m| m[i]).collect();
        out.set_mode(k, &cheb_interp_c(&vals));
    }
    out
}

/// Approximate reciprocal of a real-valued function, at degree `(n_out, k_out)`.
pub fn approx_reciprocal(a: &FcArr, n_out: usize, k_out: usize) -> FcArr {
    let dft = Dft::for_modes(k_out.max(a.k_max));
    let mut r = map_grid(&[a], n_out, k_out, &dft, |_, v| 1.0 / v[0]);
    r.symmetrize();
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dft_round_trip() {
        let dft = Dft::new(16);
        let modes: Vec<Complex64> = (0..7).map(|i| Complex64::new(i as f64 * 0.1, 0.3 - i as f64 * 0.05)).collect();
        let back = dft.analyze(&dft.synth(&modes), 3);
        for (a, b) in modes.iter().zip(&back) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn sign_convention() {
        // e^{-it} has its single mode at k = +1
        let dft = Dft::new(8);
        let t = dft.times();
        let vals: Vec<Complex64> = t.iter().map(|&s| Complex64::new(s.cos(), -s.sin())).collect();
        let m = dft.analyze(&vals, 1);
        assert!((m[2] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(m[0].norm() < 1e-15);
    }

    #[test]
    fn reciprocal_of_affine() {
        // 1 / (2 + eta/2) approximated on 20 nodes
        let a = FcArr::cheb_real(&[2.0, 0.25]);
        let r = approx_reciprocal(&a, 20, 0);
        for eta in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            let v = r.eval_f(0.0, eta).re;
            assert!((v - 1.0 / (2.0 + 0.5 * eta)).abs() < 1e-14);
        }
    }
}
