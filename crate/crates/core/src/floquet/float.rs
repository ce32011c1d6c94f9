//! Float Floquet normal form at Chebyshev nodes and the approximate inverse `B_finite`.
//!
//! Unknowns at a node are `(C_{lm}, V_{im,k})` with `C` stored row-major in the
//! first nine slots and `V_{im}` mode `k` at [`v_index`].

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Field;
use crate::numerics::branch_at;
use crate::polymat::PolyMat;
use crate::seqspace::fcarr::{cheb_interp_c, cheb_interp_r, cheb_nodes};
use crate::seqspace::sample::Dft;
use crate::seqspace::FcArr;
use crate::zero_problem::FloatBranch;

type C = Complex64;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub fn floquet_dim(k: usize) -> usize {
    9 + 9 * (2 * k + 1)
}

#[inline]
pub fn c_index(l: usize, m: usize) -> usize {
    3 * l + m
}

#[inline]
pub fn v_index(k: usize, i: usize, m: usize, mode: i64) -> usize {
    9 + (3 * i + m) * (2 * k + 1) + (mode + k as i64) as usize
}

/// Modes `-2K..=2K` of `tau d_j f_i` along the node solution at `eta`.
pub fn coefficient_modes(field: &dyn Field, x: &[C], eta: f64, k: usize, grid: usize) -> [[Vec<C>; 3]; 3] {
    let dft = Dft::new(grid.max(8 * k + 4));
    let w = 2 * k + 1;
    let vals: Vec<Vec<f64>> = (0..3).map(|j| dft.synth_re(&x[3 + j * w..3 + (j + 1) * w])).collect();
    let tau = x[0].re;
    let zeta = [x[1].re, x[2].re];
    let m = dft.len();
    let mut a = vec![vec![vec![0.0; m]; 3]; 3];
    for (p, &t) in dft.times().iter().enumerate() {
        let jet = field.point(t, eta, zeta, [vals[0][p], vals[1][p], vals[2][p]]);
        for i in 0..3 {
            for j in 0..3 {
                a[i][j][p] = tau * jet.du[i][j];
            }
        }
    }
    std::array::from_fn(|i| std::array::from_fn(|j| dft.analyze_re(&a[i][j], 2 * k)))
}

/// Truncated normal-form equations at one node.
pub struct FloquetSystem {
    pub k: usize,
    /// modes `-2K..=2K`
    pub a: [[Vec<C>; 3]; 3],
}

impl FloquetSystem {
    fn a_at(&self, i: usize, l: usize, mode: i64) -> C {
        let k = self.k as i64;
        if mode.abs() > 2 * k {
            return C::new(0.0, 0.0);
        }
        self.a[i][l][(mode + 2 * k) as usize]
    }

    /// `(Pi_K V(0) - I, -ik V_k + (V C)_k - (A V)_k)`.
    pub fn residual(&self, x: &[C]) -> Vec<C> {
        let k = self.k;
        let ki = k as i64;
        let mut r = vec![C::new(0.0, 0.0); floquet_dim(k)];
        for l in 0..3 {
            for m in 0..3 {
                let s: C = (-ki..=ki).map(|q| x[v_index(k, l, m, q)]).sum();
                r[c_index(l, m)] = s - if l == m { 1.0 } else { 0.0 };
            }
        }
        for i in 0..3 {
            for m in 0..3 {
                for q in -ki..=ki {
                    let mut s = C::new(0.0, -(q as f64)) * x[v_index(k, i, m, q)];
                    for l in 0..3 {
                        s += x[v_index(k, i, l, q)] * x[c_index(l, m)];
                        for qp in -ki..=ki {
                            s -= self.a_at(i, l, q - qp) * x[v_index(k, l, m, qp)];
                        }
                    }
                    r[v_index(k, i, m, q)] = s;
                }
            }
        }
        r
    }

    pub fn jacobian(&self, x: &[C]) -> DMatrix<C> {
        let k = self.k;
        let ki = k as i64;
        let d = floquet_dim(k);
        let mut jm = DMatrix::<C>::zeros(d, d);
        let one = C::new(1.0, 0.0);
        for l in 0..3 {
            for m in 0..3 {
                for q in -ki..=ki {
                    jm[(c_index(l, m), v_index(k, l, m, q))] = one;
                }
            }
        }
        for i in 0..3 {
            for m in 0..3 {
                for q in -ki..=ki {
                    let row = v_index(k, i, m, q);
                    for l in 0..3 {
                        jm[(row, c_index(l, m))] += x[v_index(k, i, l, q)];
                        jm[(row, v_index(k, i, l, q))] += x[c_index(l, m)];
                        for qp in -ki..=ki {
                            jm[(row, v_index(k, l, m, qp))] -= self.a_at(i, l, q - qp);
                        }
                    }
                    jm[(row, row)] += C::new(0.0, -(q as f64));
                }
            }
        }
        jm
    }

    /// `A(t)` from its modes.
    fn a_time(&self, t: f64) -> Matrix3<f64> {
        let k = 2 * self.k as i64;
        let e: Vec<C> = (-k..=k).map(|q| C::from_polar(1.0, -(q as f64) * t)).collect();
        Matrix3::from_fn(|i, l| self.a[i][l].iter().zip(&e).map(|(c, z)| (c * z).re).sum())
    }
}

/// Float node solution of the normal form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetNode {
    pub index: usize,
    pub eta: f64,
    pub c: [[f64; 3]; 3],
    /// modes `-K..=K` of `V_{im}`
    pub v: Vec<Vec<C>>,
    pub residual: f64,
    pub iterations: usize,
    /// eigenvalues of `C`, sorted by real part
    pub exponents: [C; 3],
}

/// Eigenvalues of a real 3x3 matrix sorted by real part, then imaginary part.
pub fn eigenvalues3(m: &Matrix3<f64>) -> [C; 3] {
    let ev = m.complex_eigenvalues();
    let mut v = [ev[0], ev[1], ev[2]];
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

/// Null vector of the rank-two complex matrix `b` from the best-conditioned
/// cross product of two rows.
fn null_vector(b: &nalgebra::Matrix3<C>) -> nalgebra::Vector3<C> {
    let cross = |r: usize, s: usize| {
        let (x, y) = (b.row(r), b.row(s));
        nalgebra::Vector3::new(x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0])
    };
    let cands = [cross(0, 1), cross(0, 2), cross(1, 2)];
    let best = cands.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
    best / C::new(best.norm(), 0.0)
}

/// Float eigenvectors (columns) for the given eigenvalues.
pub fn eigenbasis3(m: &Matrix3<f64>, ev: &[C; 3]) -> nalgebra::Matrix3<C> {
    let mc = m.map(|x| C::new(x, 0.0));
    let mut p = nalgebra::Matrix3::<C>::zeros();
    for (j, &l) in ev.iter().enumerate() {
        let v = null_vector(&(mc - nalgebra::Matrix3::<C>::identity() * l));
        p.set_column(j, &v);
    }
    p
}

/// `log(M) / 2 pi` for a real matrix with simple eigenvalues off the negative axis.
fn real_log(m: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let ev = eigenvalues3(m);
    if ev.iter().any(|z| z.re <= 0.0 && z.im.abs() < 1e-12 * z.norm()) {
        return None;
    }
    let p = eigenbasis3(m, &ev);
    let pinv = p.try_inverse()?;
    let d = nalgebra::Matrix3::<C>::from_diagonal(&nalgebra::Vector3::new(ev[0].ln(), ev[1].ln(), ev[2].ln()));
    let l = p * d * pinv / C::new(TWO_PI, 0.0);
    Some(l.map(|z| z.re))
}

/// Monodromy matrix of `Phi' = A(t) Phi` and `Phi` on `grid` equispaced times.
fn monodromy(sys: &FloquetSystem, steps: usize, grid: usize) -> (Matrix3<f64>, Vec<Matrix3<f64>>) {
    let h = TWO_PI / steps as f64;
    let every = steps / grid;
    let mut phi = Matrix3::<f64>::identity();
    let mut out = Vec::with_capacity(grid);
    for s in 0..steps {
        if s % every == 0 {
            out.push(phi);
        }
        let t = s as f64 * h;
        let a0 = sys.a_time(t);
        let a1 = sys.a_time(t + 0.5 * h);
        let a2 = sys.a_time(t + h);
        let k1 = a0 * phi;
        let k2 = a1 * (phi + k1 * (0.5 * h));
        let k3 = a1 * (phi + k2 * (0.5 * h));
        let k4 = a2 * (phi + k3 * h);
        phi += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    (phi, out)
}

fn exp_neg(c: &Matrix3<f64>, t: f64) -> Matrix3<f64> {
    // scaling and squaring with a Taylor polynomial; the norm of C t is modest
    let a = c * (-t);
    let norm = a.abs().row_sum().max();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a / 2f64.powi(s);
    let mut term = Matrix3::<f64>::identity();
    let mut sum = term;
    for n in 1..=18 {
        term = term * b / n as f64;
        sum += term;
    }
    for _ in 0..s {
        sum = sum * sum;
    }
    sum
}

/// Initial guess from the monodromy matrix and a real logarithm.
pub fn seed_node(sys: &FloquetSystem) -> Result<Vec<C>> {
    let k = sys.k;
    let grid = 128usize.max((4 * k + 2).next_power_of_two());
    let steps = grid * 32;
    let (mono, phis) = monodromy(sys, steps, grid);
    let c = real_log(&mono).ok_or_else(|| Error::StabilityUnverified("monodromy has no real logarithm".into()))?;
    let dft = Dft::new(grid);
    let times = dft.times();
    let vt: Vec<Matrix3<f64>> = phis.iter().zip(&times).map(|(p, &t)| p * exp_neg(&c, t)).collect();
    let mut x = vec![C::new(0.0, 0.0); floquet_dim(k)];
    for l in 0..3 {
        for m in 0..3 {
            x[c_index(l, m)] = C::new(c[(l, m)], 0.0);
            let vals: Vec<f64> = vt.iter().map(|v| v[(l, m)]).collect();
            for (q, z) in (-(k as i64)..=k as i64).zip(dft.analyze_re(&vals, k)) {
                x[v_index(k, l, m, q)] = z;
            }
        }
    }
    symmetrize(k, &mut x);
    Ok(x)
}

/// Real `C` and conjugate-symmetric modes of `V`.
pub fn symmetrize(k: usize, x: &mut [C]) {
    for z in x.iter_mut().take(9) {
        z.im = 0.0;
    }
    let ki = k as i64;
    for i in 0..9 {
        let base = 9 + i * (2 * k + 1);
        x[base + k].im = 0.0;
        for q in 1..=ki {
            let (p, n) = (base + (q + ki) as usize, base + (ki - q) as usize);
            let avg = (x[p] + x[n].conj()) * 0.5;
            x[p] = avg;
            x[n] = avg.conj();
        }
    }
}

fn max_abs(v: &[C]) -> f64 {
    v.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Newton on the node truncation, starting from the monodromy seed.
pub fn solve_node(sys: &FloquetSystem, index: usize, eta: f64, tol: f64, max_iter: usize) -> Result<FloquetNode> {
    let k = sys.k;
    let mut x = seed_node(sys)?;
    let mut res = max_abs(&sys.residual(&x));
    let mut it = 0;
    while res > tol && it < max_iter {
        let j = sys.jacobian(&x);
        let r = DMatrix::from_column_slice(x.len(), 1, &sys.residual(&x));
        let dx = j.lu().solve(&r).ok_or(Error::SingularNodeMatrix(index))?;
        for (a, d) in x.iter_mut().zip(dx.iter()) {
            *a -= d;
        }
        symmetrize(k, &mut x);
        let next = max_abs(&sys.residual(&x));
        it += 1;
        if !(next < res) && next > 1e2 * tol {
            return Err(Error::NewtonDiverged { node: index, eta, residual: next, iterations: it });
        }
        res = next;
    }
    if !(res <= 1e2 * tol) {
        return Err(Error::NewtonDiverged { node: index, eta, residual: res, iterations: it });
    }
    let c: [[f64; 3]; 3] = std::array::from_fn(|l| std::array::from_fn(|m| x[c_index(l, m)].re));
    let v = (0..9).map(|e| x[9 + e * (2 * k + 1)..9 + (e + 1) * (2 * k + 1)].to_vec()).collect();
    let exponents = eigenvalues3(&Matrix3::from_fn(|l, m| c[l][m]));
    Ok(FloquetNode { index, eta, c, v, residual: res, iterations: it, exponents })
}

/// Normal-form system at `eta` along the float branch.
pub fn node_system(field: &dyn Field, chi: &FloatBranch, eta: f64, grid: usize) -> FloquetSystem {
    let k = chi.k_max();
    FloquetSystem { k, a: coefficient_modes(field, &branch_at(chi, eta), eta, k, grid) }
}

/// Node solutions at the Chebyshev nodes of degree `chi.n_max()`.
pub fn solve_floquet_nodes(field: &dyn Field, chi: &FloatBranch, grid: usize, tol: f64, max_iter: usize) -> Result<Vec<FloquetNode>> {
    let etas = cheb_nodes(chi.n_max());
    etas.par_iter().enumerate().map(|(l, &eta)| solve_node(&node_system(field, chi, eta, grid), l, eta, tol, max_iter)).collect()
}

/// Interpolated normal form `(C_bar, V_bar)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FloquetBranch {
    /// real Chebyshev coefficients (stored form) of `C_{lm}`
    pub c: [[Vec<f64>; 3]; 3],
    pub v: [[FcArr; 3]; 3],
}

impl FloquetBranch {
    pub fn n_max(&self) -> usize {
        self.c[0][0].len() - 1
    }

    pub fn k_max(&self) -> usize {
        self.v[0][0].k_max
    }

    pub fn c_at(&self, eta: f64) -> Matrix3<f64> {
        Matrix3::from_fn(|l, m| crate::seqspace::fcarr::cheb_eval_r(&self.c[l][m], eta))
    }

    /// Node vector at `eta`.
    pub fn at(&self, eta: f64) -> Vec<C> {
        let k = self.k_max();
        let mut x = vec![C::new(0.0, 0.0); floquet_dim(k)];
        let c = self.c_at(eta);
        for l in 0..3 {
            for m in 0..3 {
                x[c_index(l, m)] = C::new(c[(l, m)], 0.0);
                for (q, z) in (-(k as i64)..=k as i64).zip(self.v[l][m].modes_at(eta)) {
                    x[v_index(k, l, m, q)] = z;
                }
            }
        }
        x
    }
}

pub fn interpolate_floquet(nodes: &[FloquetNode]) -> FloquetBranch {
    let n = nodes.len() - 1;
    let k = (nodes[0].v[0].len() - 1) / 2;
    let c = std::array::from_fn(|l| std::array::from_fn(|m| cheb_interp_r(&nodes.iter().map(|s| s.c[l][m]).collect::<Vec<_>>())));
    let v = std::array::from_fn(|l| {
        std::array::from_fn(|m| {
            let mut a = FcArr::zeros(n, k);
            for (i, q) in (-(k as i64)..=k as i64).enumerate() {
                let vals: Vec<C> = nodes.iter().map(|s| s.v[3 * l + m][i]).collect();
                a.set_mode(q, &cheb_interp_c(&vals));
            }
            a.symmetrize();
            a
        })
    });
    FloquetBranch { c, v }
}

/// Float data of `B_finite` with node diagnostics.
#[derive(Clone, Debug)]
pub struct FloquetPack {
    pub b: PolyMat,
    pub cond: Vec<f64>,
    pub node_defect: f64,
}

fn one_norm(m: &DMatrix<C>) -> f64 {
    (0..m.ncols()).map(|c| m.column(c).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Inverses of the node Jacobians at the interpolated data, interpolated in `eta`.
pub fn build_floquet_pack(field: &dyn Field, chi: &FloatBranch, fb: &FloquetBranch, grid: usize) -> Result<FloquetPack> {
    let n = fb.n_max();
    let k = fb.k_max();
    let d = floquet_dim(k);
    let etas = cheb_nodes(n);
    let per_node: Vec<Result<(DMatrix<C>, f64, f64)>> = etas
        .par_iter()
        .enumerate()
        .map(|(l, &eta)| {
            let sys = node_system(field, chi, eta, grid);
            let jm = sys.jacobian(&fb.at(eta));
            let inv = jm.clone().try_inverse().ok_or(Error::SingularNodeMatrix(l))?;
            if !inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::SingularNodeMatrix(l));
            }
            let defect = max_abs((&jm * &inv - DMatrix::<C>::identity(d, d)).as_slice());
            let cond = one_norm(&jm) * one_norm(&inv);
            Ok((inv, cond, defect))
        })
        .collect();
    let mut invs = Vec::with_capacity(n + 1);
    let mut cond = Vec::with_capacity(n + 1);
    let mut node_defect = 0.0f64;
    for r in per_node {
        let (m, c, e) = r?;
        invs.push(m);
        cond.push(c);
        node_defect = node_defect.max(e);
    }
    let mut b = PolyMat::zeros(d, d, n);
    let mut vals = vec![C::new(0.0, 0.0); n + 1];
    for r in 0..d {
        for c in 0..d {
            for (l, m) in invs.iter().enumerate() {
                vals[l] = m[(r, c)];
            }
            for (deg, v) in cheb_interp_c(&vals).into_iter().enumerate() {
                b.set(deg, r, c, v);
            }
        }
    }
    Ok(FloquetPack { b, cond, node_defect })
}
