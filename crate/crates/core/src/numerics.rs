//! Float stage: Newton at Chebyshev nodes, interpolation of the branch and the
//! approximate inverse `A_finite`.
//!
//! Nothing in this module is rigorous. Unknowns at a node are laid out as
//! `(tau, zeta_1, zeta_2, u_1[-K..=K], u_2[..], u_3[..])`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Field;
use crate::seqspace::fcarr::{cheb_interp_c, cheb_interp_r, cheb_nodes, cheb_t_values};
use crate::seqspace::sample::Dft;
use crate::seqspace::FcArr;
use crate::zero_problem::{float_dt, FloatBranch};

type C = Complex64;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Settings of the float stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloatConfig {
    pub k: usize,
    pub n: usize,
    /// time-grid size used to evaluate the field
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// integration horizon and step of the seed
    pub seed_horizon: f64,
    pub seed_step: f64,
}

impl Default for FloatConfig {
    fn default() -> Self {
        FloatConfig { k: 20, n: 30, grid: 256, tol: 1e-12, max_iter: 50, seed_horizon: 8000.0, seed_step: 0.01 }
    }
}

/// Number of unknowns at one node.
pub fn node_dim(k: usize) -> usize {
    3 + 3 * (2 * k + 1)
}

/// Position of `u_{j,m}` in the node vector.
#[inline]
pub fn u_index(k: usize, j: usize, m: i64) -> usize {
    3 + j * (2 * k + 1) + (m + k as i64) as usize
}

/// A converged node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSolution {
    pub index: usize,
    pub eta: f64,
    pub tau: f64,
    pub zeta: [f64; 2],
    /// modes `-K..=K` of each component
    pub u: [Vec<C>; 3],
    pub residual: f64,
    pub iterations: usize,
    /// max-norm residual before each step
    pub history: Vec<f64>,
}

impl NodeSolution {
    fn from_vec(index: usize, eta: f64, k: usize, x: &[C], residual: f64, history: Vec<f64>) -> Self {
        let w = 2 * k + 1;
        NodeSolution {
            index,
            eta,
            tau: x[0].re,
            zeta: [x[1].re, x[2].re],
            u: std::array::from_fn(|j| x[3 + j * w..3 + (j + 1) * w].to_vec()),
            residual,
            iterations: history.len().saturating_sub(1),
            history,
        }
    }

    pub fn to_vec(&self) -> Vec<C> {
        let mut x = vec![C::new(self.tau, 0.0), C::new(self.zeta[0], 0.0), C::new(self.zeta[1], 0.0)];
        for j in 0..3 {
            x.extend_from_slice(&self.u[j]);
        }
        x
    }
}

/// The truncated problem `Pi_K F|_eta` on node vectors.
pub struct NodeSystem<'a> {
    pub field: &'a dyn Field,
    pub eta: f64,
    pub k: usize,
    dft: Dft,
    /// phase reference modes `-K..=K`
    g: [Vec<C>; 3],
}

struct GridEval {
    f: [Vec<C>; 3],
    du: [[Vec<C>; 3]; 3],
    dz: [[Vec<C>; 2]; 3],
}

impl<'a> NodeSystem<'a> {
    pub fn new(field: &'a dyn Field, eta: f64, k: usize, grid: usize, g: [Vec<C>; 3]) -> Self {
        let grid = grid.max(4 * k + 2);
        NodeSystem { field, eta, k, dft: Dft::new(grid), g }
    }

    fn grid_eval(&self, x: &[C], with_jet: bool) -> GridEval {
        let k = self.k;
        let w = 2 * k + 1;
        let vals: Vec<Vec<f64>> = (0..3).map(|j| self.dft.synth_re(&x[3 + j * w..3 + (j + 1) * w])).collect();
        let times = self.dft.times();
        let zeta = [x[1].re, x[2].re];
        let m = self.dft.len();
        let mut f = vec![vec![0.0; m]; 3];
        let mut du = vec![vec![vec![0.0; m]; 3]; 3];
        let mut dz = vec![vec![vec![0.0; m]; 2]; 3];
        for (p, &t) in times.iter().enumerate() {
            let jet = self.field.point(t, self.eta, zeta, [vals[0][p], vals[1][p], vals[2][p]]);
            for i in 0..3 {
                f[i][p] = jet.f[i];
                for j in 0..3 {
                    du[i][j][p] = jet.du[i][j];
                }
                for j in 0..2 {
                    dz[i][j][p] = jet.dz[i][j];
                }
            }
        }
        let an = |v: &Vec<f64>, ko: usize| self.dft.analyze_re(v, ko);
        let kj = if with_jet { 2 * k } else { 0 };
        GridEval {
            f: std::array::from_fn(|i| an(&f[i], k)),
            du: std::array::from_fn(|i| std::array::from_fn(|j| if with_jet { an(&du[i][j], kj) } else { Vec::new() })),
            dz: std::array::from_fn(|i| std::array::from_fn(|j| if with_jet { an(&dz[i][j], k) } else { Vec::new() })),
        }
    }

    pub fn residual(&self, x: &[C]) -> Vec<C> {
        let k = self.k;
        let ge = self.grid_eval(x, false);
        let mut r = vec![C::new(0.0, 0.0); node_dim(k)];
        let mut ph = C::new(0.0, 0.0);
        for j in 0..3 {
            for m in -(k as i64)..=k as i64 {
                ph += x[u_index(k, j, m)] * self.g[j][(m + k as i64) as usize].conj();
            }
        }
        r[0] = ph * TWO_PI;
        for j in 0..2 {
            r[1 + j] = (-(k as i64)..=k as i64).map(|m| x[u_index(k, j, m)]).sum::<C>() - 1.0;
        }
        let tau = x[0];
        for j in 0..3 {
            for m in -(k as i64)..=k as i64 {
                let i = u_index(k, j, m);
                r[i] = C::new(0.0, -(m as f64)) * x[i] - tau * ge.f[j][(m + k as i64) as usize];
            }
        }
        r
    }

    pub fn jacobian(&self, x: &[C]) -> DMatrix<C> {
        let k = self.k;
        let ki = k as i64;
        let d = node_dim(k);
        let ge = self.grid_eval(x, true);
        let mut jm = DMatrix::<C>::zeros(d, d);
        for j in 0..3 {
            for m in -ki..=ki {
                jm[(0, u_index(k, j, m))] = self.g[j][(m + ki) as usize].conj() * TWO_PI;
            }
        }
        for j in 0..2 {
            for m in -ki..=ki {
                jm[(1 + j, u_index(k, j, m))] = C::new(1.0, 0.0);
            }
        }
        let tau = x[0];
        for i in 0..3 {
            for m in -ki..=ki {
                let row = u_index(k, i, m);
                jm[(row, 0)] = -ge.f[i][(m + ki) as usize];
                for z in 0..2 {
                    jm[(row, 1 + z)] = -tau * ge.dz[i][z][(m + ki) as usize];
                }
                for j in 0..3 {
                    for mp in -ki..=ki {
                        // modes of d_j f_i are stored for -2K..=2K
                        jm[(row, u_index(k, j, mp))] = -tau * ge.du[i][j][(m - mp + 2 * ki) as usize];
                    }
                }
                jm[(row, row)] += C::new(0.0, -(m as f64));
            }
        }
        jm
    }
}

fn max_abs(v: &[C]) -> f64 {
    v.iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

/// Make `tau`, `zeta` real and pair the Fourier modes.
pub fn symmetrize_vec(k: usize, x: &mut [C]) {
    for v in x.iter_mut().take(3) {
        v.im = 0.0;
    }
    for j in 0..3 {
        x[u_index(k, j, 0)].im = 0.0;
        for m in 1..=k as i64 {
            let a = x[u_index(k, j, m)];
            let b = x[u_index(k, j, -m)].conj();
            let c = (a + b) * 0.5;
            x[u_index(k, j, m)] = c;
            x[u_index(k, j, -m)] = c.conj();
        }
    }
}

/// Newton's method on one node, starting from `x0`.
pub fn newton_at_node(sys: &NodeSystem, index: usize, x0: &[C], tol: f64, max_iter: usize) -> Result<NodeSolution> {
    let mut x = x0.to_vec();
    symmetrize_vec(sys.k, &mut x);
    let mut history = Vec::new();
    let fail = |res: f64, it: usize| Error::NewtonDiverged { node: index, eta: sys.eta, residual: res, iterations: it };
    for it in 0..=max_iter {
        let r = sys.residual(&x);
        let rn = max_abs(&r);
        history.push(rn);
        if !rn.is_finite() {
            return Err(fail(rn, it));
        }
        if rn <= tol {
            return Ok(NodeSolution::from_vec(index, sys.eta, sys.k, &x, rn, history));
        }
        if it == max_iter || (it >= 5 && rn > 1e3 * history[0].max(1.0)) {
            return Err(fail(rn, it));
        }
        // stagnation at the rounding floor: one more step will not help
        if it >= 3 && rn >= 0.5 * history[it - 1] && rn <= 1e2 * tol {
            return Ok(NodeSolution::from_vec(index, sys.eta, sys.k, &x, rn, history));
        }
        let jm = sys.jacobian(&x);
        let dx = jm.lu().solve(&nalgebra::DVector::from_vec(r)).ok_or_else(|| fail(rn, it))?;
        for (a, b) in x.iter_mut().zip(dx.iter()) {
            *a -= b;
        }
        symmetrize_vec(sys.k, &mut x);
    }
    unreachable!()
}

fn rk4_step(field: &dyn Field, eta: f64, y: [f64; 3], h: f64) -> [f64; 3] {
    let f = |y: [f64; 3]| field.point(0.0, eta, [1.0, 1.0], y).f;
    let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let k1 = f(y);
    let k2 = f(add(y, k1, 0.5 * h));
    let k3 = f(add(y, k2, 0.5 * h));
    let k4 = f(add(y, k3, h));
    [0, 1, 2].map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Seed for the middle node: integrate the unscaled system (`zeta = 1`) onto
/// its attractor, cut one period at an upward crossing of the mean prey level
/// and normalize so that `u_1(0) = u_2(0) = 1`.
pub fn seed_by_integration(field: &dyn Field, eta: f64, cfg: &FloatConfig) -> Result<Vec<C>> {
    let h = cfg.seed_step;
    let steps = (cfg.seed_horizon / h).round() as usize;
    let mut y = [0.1, 0.1, 0.5];
    let keep = steps / 8;
    let mut tail: Vec<[f64; 3]> = Vec::with_capacity(keep + 1);
    for s in 0..steps {
        y = rk4_step(field, eta, y, h);
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Precondition("seed integration blew up".into()));
        }
        if s + keep >= steps {
            tail.push(y);
        }
    }
    let mean = tail.iter().map(|v| v[2]).sum::<f64>() / tail.len() as f64;
    let ups: Vec<usize> = (0..tail.len() - 1).filter(|&i| tail[i][2] < mean && tail[i + 1][2] >= mean).collect();
    if ups.len() < 3 {
        return Err(Error::Precondition("seed integration did not settle on a periodic orbit".into()));
    }
    let frac = |i: usize| i as f64 + (mean - tail[i][2]) / (tail[i + 1][2] - tail[i][2]);
    let (i0, i1) = (ups[ups.len() - 2], ups[ups.len() - 1]);
    let period = (frac(i1) - frac(i0)) * h;
    let start = rk4_step(field, eta, tail[i0], (frac(i0) - i0 as f64) * h);
    let m = cfg.grid.max(4 * cfg.k + 2);
    let sub = 16;
    let hs = period / (m * sub) as f64;
    let mut samples = Vec::with_capacity(m);
    let mut z = start;
    for _ in 0..m {
        samples.push(z);
        for _ in 0..sub {
            z = rk4_step(field, eta, z, hs);
        }
    }
    let dft = Dft::new(m);
    let zeta = [samples[0][0], samples[0][1]];
    let mut x = vec![C::new(period / TWO_PI, 0.0), C::new(zeta[0], 0.0), C::new(zeta[1], 0.0)];
    for j in 0..3 {
        let scale = if j < 2 { 1.0 / zeta[j] } else { 1.0 };
        let vals: Vec<f64> = samples.iter().map(|s| s[j] * scale).collect();
        x.extend(dft.analyze_re(&vals, cfg.k));
    }
    symmetrize_vec(cfg.k, &mut x);
    Ok(x)
}

fn dt_modes(k: usize, x: &[C]) -> [Vec<C>; 3] {
    std::array::from_fn(|j| (-(k as i64)..=k as i64).map(|m| C::new(0.0, -(m as f64)) * x[u_index(k, j, m)]).collect())
}

/// Continuation of node solutions from the middle node outward.
///
/// The phase reference is the time derivative of the middle solution, held
/// fixed for every node.
pub fn solve_nodes(field: &dyn Field, seed: &[C], cfg: &FloatConfig) -> Result<Vec<NodeSolution>> {
    let k = cfg.k;
    let etas = cheb_nodes(cfg.n);
    let mid = cfg.n / 2;
    let g0 = dt_modes(k, seed);
    let first = newton_at_node(&NodeSystem::new(field, etas[mid], k, cfg.grid, g0), mid, seed, cfg.tol, cfg.max_iter)?;
    let g = dt_modes(k, &first.to_vec());
    let first = newton_at_node(&NodeSystem::new(field, etas[mid], k, cfg.grid, g.clone()), mid, &first.to_vec(), cfg.tol, cfg.max_iter)?;
    let sweep = |order: Vec<usize>| -> Result<Vec<NodeSolution>> {
        let mut out: Vec<NodeSolution> = Vec::new();
        let mut prev = first.to_vec();
        let mut prev2: Option<(f64, Vec<C>)> = None;
        let mut prev_eta = first.eta;
        for l in order {
            // secant predictor from the last two nodes
            let guess: Vec<C> = match &prev2 {
                Some((e2, x2)) => {
                    let s = (etas[l] - prev_eta) / (prev_eta - e2);
                    prev.iter().zip(x2).map(|(a, b)| a + (a - b) * s).collect()
                }
                None => prev.clone(),
            };
            let sys = NodeSystem::new(field, etas[l], k, cfg.grid, g.clone());
            let sol = newton_at_node(&sys, l, &guess, cfg.tol, cfg.max_iter)?;
            prev2 = Some((prev_eta, std::mem::replace(&mut prev, sol.to_vec())));
            prev_eta = sol.eta;
            out.push(sol);
        }
        Ok(out)
    };
    let (up, down) = rayon::join(|| sweep((mid + 1..=cfg.n).collect()), || sweep((0..mid).rev().collect()));
    let mut all = vec![first];
    all.extend(up?);
    all.extend(down?);
    all.sort_by_key(|s| s.index);
    Ok(all)
}

/// Node data sampled from a known branch, with each node's residual under its
/// own phase reference. Used for test fields whose exact zero is known.
pub fn sample_nodes(field: &dyn Field, exact: &FloatBranch, cfg: &FloatConfig) -> Vec<NodeSolution> {
    cheb_nodes(cfg.n)
        .into_iter()
        .enumerate()
        .map(|(l, eta)| {
            let x = branch_at(exact, eta);
            let sys = NodeSystem::new(field, eta, cfg.k, cfg.grid, dt_modes(cfg.k, &x));
            let res = max_abs(&sys.residual(&x));
            NodeSolution::from_vec(l, eta, cfg.k, &x, res, vec![res])
        })
        .collect()
}

/// Degree-`N` interpolation of the node data, symmetrized exactly.
pub fn interpolate_branch(nodes: &[NodeSolution]) -> FloatBranch {
    let k = (nodes[0].u[0].len() - 1) / 2;
    let n = nodes.len() - 1;
    let col = |f: &dyn Fn(&NodeSolution) -> f64| cheb_interp_r(&nodes.iter().map(f).collect::<Vec<_>>());
    let tau = col(&|s| s.tau);
    let zeta = [col(&|s| s.zeta[0]), col(&|s| s.zeta[1])];
    let u = std::array::from_fn(|j| {
        let mut a = FcArr::zeros(n, k);
        for (i, m) in (-(k as i64)..=k as i64).enumerate() {
            let vals: Vec<C> = nodes.iter().map(|s| s.u[j][i]).collect();
            a.set_mode(m, &cheb_interp_c(&vals));
        }
        a.symmetrize();
        a
    });
    FloatBranch { tau, zeta, u }
}

/// Node vector of a branch evaluated at `eta`.
pub fn branch_at(b: &FloatBranch, eta: f64) -> Vec<C> {
    let ev = |c: &[f64]| crate::seqspace::fcarr::cheb_eval_r(c, eta);
    let mut x = vec![C::new(ev(&b.tau), 0.0), C::new(ev(&b.zeta[0]), 0.0), C::new(ev(&b.zeta[1]), 0.0)];
    for j in 0..3 {
        x.extend(b.u[j].modes_at(eta));
    }
    x
}

/// Float data of the approximate inverse `A_finite`.
#[derive(Clone, Debug)]
pub struct OperatorPack {
    pub n: usize,
    pub k: usize,
    pub dim: usize,
    /// `a[n]` is the row-major `dim x dim` matrix of `n`-th Chebyshev coefficients
    pub a: Vec<Vec<C>>,
    /// condition-number estimates of the node matrices (1-norm)
    pub cond: Vec<f64>,
    /// max over nodes of the largest entry of `DF(eta_l) A(eta_l) - I`
    pub node_defect: f64,
}

impl OperatorPack {
    #[inline]
    pub fn entry(&self, n: usize, r: usize, c: usize) -> C {
        self.a[n][r * self.dim + c]
    }

    /// `A_finite(eta)` as a float matrix.
    pub fn eval(&self, eta: f64) -> DMatrix<C> {
        let t = cheb_t_values(self.n, eta);
        DMatrix::from_fn(self.dim, self.dim, |r, c| {
            let mut s = self.entry(0, r, c);
            for n in 1..=self.n {
                s += self.entry(n, r, c) * (2.0 * t[n]);
            }
            s
        })
    }
}

fn one_norm(m: &DMatrix<C>) -> f64 {
    (0..m.ncols()).map(|c| m.column(c).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Node matrices of `Pi_K DF Pi_K` at `chi_bar` with phase reference `g`, their
/// inverses, and the Chebyshev interpolant of the inverses.
pub fn build_operator_pack(field: &dyn Field, chi: &FloatBranch, g: &[FcArr; 3], grid: usize) -> Result<OperatorPack> {
    use rayon::prelude::*;
    let n = chi.n_max();
    let k = chi.k_max();
    let dim = node_dim(k);
    let etas = cheb_nodes(n);
    let per_node: Vec<Result<(DMatrix<C>, f64, f64)>> = etas
        .par_iter()
        .enumerate()
        .map(|(l, &eta)| {
            let gm: [Vec<C>; 3] = std::array::from_fn(|j| g[j].resized(g[j].n_max, k).modes_at(eta));
            let sys = NodeSystem::new(field, eta, k, grid, gm);
            let df = sys.jacobian(&branch_at(chi, eta));
            let inv = df.clone().try_inverse().ok_or(Error::SingularNodeMatrix(l))?;
            if !inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::SingularNodeMatrix(l));
            }
            let cond = one_norm(&df) * one_norm(&inv);
            Ok((inv, cond, 0.0))
        })
        .collect();
    let mut invs = Vec::with_capacity(n + 1);
    let mut cond = Vec::with_capacity(n + 1);
    for r in per_node {
        let (m, c, _) = r?;
        invs.push(m);
        cond.push(c);
    }
    let mut a = vec![vec![C::new(0.0, 0.0); dim * dim]; n + 1];
    let mut vals = vec![C::new(0.0, 0.0); n + 1];
    for r in 0..dim {
        for c in 0..dim {
            for (l, m) in invs.iter().enumerate() {
                vals[l] = m[(r, c)];
            }
            for (deg, v) in cheb_interp_c(&vals).into_iter().enumerate() {
                a[deg][r * dim + c] = v;
            }
        }
    }
    let mut pack = OperatorPack { n, k, dim, a, cond, node_defect: 0.0 };
    let defects: Vec<f64> = etas
        .par_iter()
        .map(|&eta| {
            let gm: [Vec<C>; 3] = std::array::from_fn(|j| g[j].resized(g[j].n_max, k).modes_at(eta));
            let df = NodeSystem::new(field, eta, k, grid, gm).jacobian(&branch_at(chi, eta));
            let prod = df * pack.eval(eta) - DMatrix::<C>::identity(dim, dim);
            prod.iter().fold(0.0f64, |m, z| m.max(z.norm()))
        })
        .collect();
    pack.node_defect = defects.into_iter().fold(0.0, f64::max);
    Ok(pack)
}

/// Phase reference of the rigorous stage: `fl(-ik u_bar)`.
pub fn phase_reference(chi: &FloatBranch) -> [FcArr; 3] {
    std::array::from_fn(|j| float_dt(&chi.u[j]))
}

/// Full float stage for a field with an integrable attractor at the middle node.
pub fn approximate(field: &dyn Field, cfg: &FloatConfig) -> Result<(Vec<NodeSolution>, FloatBranch)> {
    let etas = cheb_nodes(cfg.n);
    let seed = seed_by_integration(field, etas[cfg.n / 2], cfg)?;
    let nodes = solve_nodes(field, &seed, cfg)?;
    let chi = interpolate_branch(&nodes);
    Ok((nodes, chi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinearToy, ModelParams, PredatorPrey};

    #[test]
    fn interpolation_of_constant_and_t3() {
        let n = 6;
        let etas = cheb_nodes(n);
        let mk = |f: &dyn Fn(f64) -> f64| -> Vec<NodeSolution> {
            etas.iter()
                .enumerate()
                .map(|(i, &e)| NodeSolution {
                    index: i,
                    eta: e,
                    tau: f(e),
                    zeta: [1.0, 0.0],
                    u: std::array::from_fn(|_| vec![C::new(0.0, 0.0), C::new(f(e), 0.0), C::new(0.0, 0.0)]),
                    residual: 0.0,
                    iterations: 0,
                    history: vec![],
                })
                .collect()
        };
        let b = interpolate_branch(&mk(&|_| 2.5));
        assert!((b.tau[0] - 2.5).abs() < 1e-15 && b.tau[1..].iter().all(|c| c.abs() < 1e-15));
        assert!((b.zeta[0][0] - 1.0).abs() < 1e-15);
        let b = interpolate_branch(&mk(&|e| 4.0 * e * e * e - 3.0 * e));
        // symmetric storage: T_3 has stored coefficient 1/2
        for (i, c) in b.tau.iter().enumerate() {
            let want = if i == 3 { 0.5 } else { 0.0 };
            assert!((c - want).abs() < 1e-14, "{i} {c}");
        }
        assert!(b.u[0].is_conj_symmetric());
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 12;
        let etas = cheb_nodes(n);
        let a: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = |e: f64| a.iter().enumerate().map(|(i, c)| c * (i as f64 * e).sin()).sum::<f64>() + (2.0 * e).exp();
        let nodes: Vec<NodeSolution> = etas
            .iter()
            .enumerate()
            .map(|(i, &e)| NodeSolution {
                index: i,
                eta: e,
                tau: f(e),
                zeta: [0.0, 0.0],
                u: std::array::from_fn(|_| vec![C::new(0.0, 0.0)]),
                residual: 0.0,
                iterations: 0,
                history: vec![],
            })
            .collect();
        let b = interpolate_branch(&nodes);
        for &e in &etas {
            assert!((crate::seqspace::fcarr::cheb_eval_r(&b.tau, e) - f(e)).abs() < 1e-12);
        }
    }

    #[test]
    fn toy_node_newton_is_exact_at_solution() {
        let sol = LinearToy::reference_solution(1, 3);
        let toy = LinearToy::with_solution(&sol);
        let fb = FloatBranch { tau: sol.tau.clone(), zeta: sol.zeta.clone(), u: sol.u.clone() };
        let eta = 0.25;
        let x = branch_at(&fb, eta);
        let g = dt_modes(3, &x);
        let sys = NodeSystem::new(&toy, eta, 3, 64, g);
        assert!(max_abs(&sys.residual(&x)) < 1e-14);
        // tau u is bilinear, so convergence is quadratic rather than one-step
        let mut x0 = x.clone();
        x0[0] += 0.1;
        x0[u_index(3, 2, 1)] += C::new(0.05, 0.02);
        x0[u_index(3, 2, -1)] += C::new(0.05, -0.02);
        let s = newton_at_node(&sys, 0, &x0, 1e-13, 10).unwrap();
        assert!(s.iterations <= 6, "{:?}", s.history);
        let h = &s.history;
        for i in 1..h.len() - 1 {
            assert!(h[i] <= 10.0 * h[i - 1] * h[i - 1], "{h:?}");
        }
        assert!((s.tau - 1.0).abs() < 1e-13);
    }

    #[test]
    fn toy_operator_pack_inverts_node_matrices() {
        let sol = LinearToy::reference_solution(2, 3);
        let toy = LinearToy::with_solution(&sol);
        let fb = FloatBranch { tau: sol.tau.clone(), zeta: sol.zeta.clone(), u: sol.u.clone() };
        let g = phase_reference(&fb);
        let pack = build_operator_pack(&toy, &fb, &g, 64).unwrap();
        assert!(pack.node_defect < 1e-10, "{}", pack.node_defect);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let field = PredatorPrey::new(&ModelParams::reference());
        let k = 3;
        let mut x = vec![C::new(2.9, 0.0), C::new(0.1, 0.0), C::new(0.18, 0.0)];
        for j in 0..3 {
            let mut m = vec![C::new(0.0, 0.0); 2 * k + 1];
            m[k] = C::new(0.6 + 0.1 * j as f64, 0.0);
            m[k + 1] = C::new(0.1, 0.05);
            m[k - 1] = C::new(0.1, -0.05);
            x.extend(m);
        }
        let g = dt_modes(k, &x);
        let sys = NodeSystem::new(&field, 0.2, k, 64, g);
        let jm = sys.jacobian(&x);
        let h = 1e-6;
        for col in [0, 1, 2, u_index(k, 2, 0), u_index(k, 0, 1)] {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[col] += h;
            xm[col] -= h;
            // keep directions real-symmetric
            if col >= 3 && col != u_index(k, 2, 0) {
                let j = (col - 3) / (2 * k + 1);
                xp[u_index(k, j, -1)] += h;
                xm[u_index(k, j, -1)] -= h;
            }
            let (rp, rm) = (sys.residual(&xp), sys.residual(&xm));
            for row in 0..node_dim(k) {
                let fd = (rp[row] - rm[row]) / (2.0 * h);
                let mut an = jm[(row, col)];
                if col >= 3 && col != u_index(k, 2, 0) {
                    let j = (col - 3) / (2 * k + 1);
                    an += jm[(row, u_index(k, j, -1))];
                }
                assert!((fd - an).norm() < 1e-6, "row {row} col {col}: {fd} vs {an}");
            }
        }
    }
}
