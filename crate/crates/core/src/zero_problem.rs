//! The zero-finding map `F(chi) = (rho(u), d_t u - tau f(zeta, u))`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::interval::{pi, Interval, RectComplex};
use crate::model::{certify_reciprocals, reciprocal_degree, Field, FieldBalls, ParamCurves, PredatorPrey, Reciprocal};
use crate::seqspace::{ChebSeq, FcArr, FcBall, FourierChebSeq, Prec, UVec};

/// A point `chi = (tau, zeta_1, zeta_2, u)` of the product space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub tau: ChebSeq,
    pub zeta1: ChebSeq,
    pub zeta2: ChebSeq,
    pub u: UVec,
}

/// Float coefficients of a branch (point data).
#[derive(Clone, Debug, PartialEq)]
pub struct FloatBranch {
    pub tau: Vec<f64>,
    pub zeta: [Vec<f64>; 2],
    pub u: [FcArr; 3],
}

impl FloatBranch {
    pub fn n_max(&self) -> usize {
        self.tau.len() - 1
    }

    pub fn k_max(&self) -> usize {
        self.u[0].k_max
    }

    pub fn to_point(&self) -> BranchPoint {
        BranchPoint {
            tau: ChebSeq::from_f64(&self.tau),
            zeta1: ChebSeq::from_f64(&self.zeta[0]),
            zeta2: ChebSeq::from_f64(&self.zeta[1]),
            u: UVec(std::array::from_fn(|j| FourierChebSeq::from_fcarr(&self.u[j]))),
        }
    }

    pub fn balls(&self, nu: f64) -> BallBranch {
        BallBranch {
            tau: FcBall::exact(FcArr::cheb_real(&self.tau), nu),
            zeta: std::array::from_fn(|j| FcBall::exact(FcArr::cheb_real(&self.zeta[j]), nu)),
            u: std::array::from_fn(|j| FcBall::exact(self.u[j].clone(), nu)),
        }
    }

    /// Exact invariance under the conjugation symmetry.
    pub fn is_sigma_symmetric(&self) -> bool {
        self.u.iter().all(|a| a.is_conj_symmetric())
    }
}

impl BranchPoint {
    pub fn n_max(&self) -> usize {
        self.tau.degree()
    }

    pub fn k_max(&self) -> usize {
        self.u.0[0].k_max
    }

    /// `||tau|| + ||zeta_1|| + ||zeta_2|| + ||u||`.
    pub fn norm(&self, nu: f64) -> Interval {
        self.tau.norm(nu) + self.zeta1.norm(nu) + self.zeta2.norm(nu) + self.u.norm(nu)
    }

    /// Midpoint data; exact when every coefficient is a point.
    pub fn to_float(&self) -> FloatBranch {
        FloatBranch { tau: self.tau.mid_f64(), zeta: [self.zeta1.mid_f64(), self.zeta2.mid_f64()], u: std::array::from_fn(|j| self.u.0[j].mid()) }
    }

    pub fn balls(&self, nu: f64) -> BallBranch {
        BallBranch { tau: self.tau.to_ball(nu), zeta: [self.zeta1.to_ball(nu), self.zeta2.to_ball(nu)], u: std::array::from_fn(|j| self.u.0[j].to_ball(nu)) }
    }

    pub fn is_point(&self) -> bool {
        let pt = |c: &RectComplex| c.re.is_point() && c.im.is_point();
        [&self.tau, &self.zeta1, &self.zeta2].iter().all(|s| s.coeffs.iter().all(pt)) && self.u.0.iter().all(|s| s.coeffs.iter().all(pt))
    }
}

/// The symmetry `Sigma`: conjugate Chebyshev coefficients, and `phi_{n,k} -> conj(phi_{n,-k})`.
pub fn sigma(chi: &BranchPoint) -> BranchPoint {
    let cj = |s: &ChebSeq| ChebSeq::new(s.coeffs.iter().map(|c| c.conj()).collect());
    let refl = |s: &FourierChebSeq| {
        let mut out = s.clone();
        for n in 0..=s.n_max {
            for k in -(s.k_max as i64)..=s.k_max as i64 {
                out.set(n, k, s.get(n, -k).conj());
            }
        }
        out
    };
    BranchPoint { tau: cj(&chi.tau), zeta1: cj(&chi.zeta1), zeta2: cj(&chi.zeta2), u: UVec(std::array::from_fn(|j| refl(&chi.u.0[j]))) }
}

/// Bit-level check of `Sigma(chi) = chi`.
pub fn is_sigma_fixed(chi: &BranchPoint) -> bool {
    let real = |s: &ChebSeq| s.is_real();
    real(&chi.tau) && real(&chi.zeta1) && real(&chi.zeta2) && chi.u.0.iter().all(|s| s.is_conj_symmetric())
}

/// Ball version of a branch point.
#[derive(Clone, Debug)]
pub struct BallBranch {
    pub tau: FcBall,
    pub zeta: [FcBall; 2],
    pub u: [FcBall; 3],
}

impl BallBranch {
    pub fn nu(&self) -> f64 {
        self.tau.nu
    }
}

/// The fixed function `d_t Gamma` of the phase condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReference {
    pub dgamma: UVec,
}

impl PhaseReference {
    /// `fl(-ik u_k)` of the given float data.
    pub fn from_float(u: &[FcArr; 3]) -> Self {
        PhaseReference { dgamma: UVec(std::array::from_fn(|j| FourierChebSeq::from_fcarr(&float_dt(&u[j])))) }
    }

    pub fn float(&self) -> [FcArr; 3] {
        std::array::from_fn(|j| self.dgamma.0[j].mid())
    }
}

/// Rounded `-ik phi_k`.
pub fn float_dt(a: &FcArr) -> FcArr {
    let mut out = a.clone();
    for n in 0..=a.n_max {
        for k in -(a.k_max as i64)..=a.k_max as i64 {
            out.set(n, k, a.get(n, k) * Complex64::new(0.0, -(k as f64)));
        }
    }
    out
}

/// `h_k = conj(g_{-k})`, so that `sum_k u_k conj(g_k) = (u h)_0`.
fn pairing_partner(g: &FcArr) -> FcArr {
    g.conj_reflect()
}

/// Phase and amplitude functionals on balls.
pub fn rho_balls(u: &[FcBall; 3], g: &[FcArr; 3], k_trunc: usize, prec: Prec) -> [FcBall; 3] {
    let nu = u[0].nu;
    let mut r1 = FcBall::zero(nu);
    for j in 0..3 {
        let h = FcBall::exact(pairing_partner(&g[j]), nu);
        r1 = r1.add(&u[j].mul(&h, prec).project_k(0));
    }
    let two_pi = Interval::point(2.0) * pi();
    let r1 = r1.scale_real(two_pi);
    let amp = |j: usize| u[j].sum_modes(k_trunc).add_scalar(RectComplex::point(-1.0, 0.0));
    [r1, amp(0), amp(1)]
}

/// `rho(u)`: the phase pairing `2 pi sum <u, d_t Gamma>` and `u_j(0, .) - 1` for the
/// modes `|k| <= k`.
pub fn phase_rho(u: &UVec, reference: &PhaseReference, _n: usize, k: usize) -> (ChebSeq, ChebSeq, ChebSeq) {
    let nu = 1.0;
    let ub: [FcBall; 3] = std::array::from_fn(|j| u.0[j].to_ball(nu));
    // interval-valued references are split into center and radius
    let g = reference.float();
    let mut r = rho_balls(&ub, &g, k, Prec::Compensated);
    let grad = reference_radius(reference);
    if grad > 0.0 {
        let extra = crate::interval::mul_ru(crate::interval::mul_ru(7.0, grad), u.norm(nu).hi());
        r[0].err = crate::interval::add_ru(r[0].err, extra);
    }
    let cheb = |b: &FcBall| ChebSeq::new(b.to_seq().coeffs);
    (cheb(&r[0]), cheb(&r[1]), cheb(&r[2]))
}

fn reference_radius(r: &PhaseReference) -> f64 {
    let mut m: f64 = 0.0;
    for s in &r.dgamma.0 {
        let b = s.to_ball(1.0);
        m = m.max(b.err);
    }
    m
}

/// Residual of `F` on balls together with the field enclosures used to build it.
pub struct Residual {
    pub rho: [FcBall; 3],
    /// `d_t u - tau f` (all modes of the enclosure)
    pub ode: [FcBall; 3],
    /// `tau f`
    pub tau_f: [FcBall; 3],
    pub field: FieldBalls,
    pub inv: Vec<Reciprocal>,
}

/// `F` on a ball branch with exact `u` centers.
pub fn residual_balls(field: &dyn Field, chi: &BallBranch, g: &[FcArr; 3], k_trunc: usize, recip_deg: (usize, usize), prec: Prec) -> Result<Residual> {
    let inv = certify_reciprocals(field, &chi.u, recip_deg.0, recip_deg.1)?;
    let fb = field.enclose(&chi.zeta, &chi.u, &inv, prec);
    let tau_f: [FcBall; 3] = std::array::from_fn(|j| chi.tau.mul(&fb.f[j], prec));
    let mut ode: [FcBall; 3] = std::array::from_fn(|_| FcBall::zero(chi.nu()));
    for j in 0..3 {
        ode[j] = chi.u[j].dt()?.sub(&tau_f[j]);
    }
    let rho = rho_balls(&chi.u, g, k_trunc, prec);
    Ok(Residual { rho, ode, tau_f, field: fb, inv })
}

/// `F(chi)` for the two-predator field.
pub fn eval_f(chi: &BranchPoint, pc: &ParamCurves, reference: &PhaseReference) -> Result<([ChebSeq; 3], UVec)> {
    let field = PredatorPrey { curves: pc.clone() };
    eval_f_with(&field, chi, reference)
}

/// `F(chi)` for any field.
pub fn eval_f_with(field: &dyn Field, chi: &BranchPoint, reference: &PhaseReference) -> Result<([ChebSeq; 3], UVec)> {
    let nu = 1.0;
    let mut b = chi.balls(nu);
    // d_t of interval data is taken coefficient-wise before entering the balls
    let du: [FcBall; 3] = std::array::from_fn(|j| chi.u.0[j].dt().to_ball(nu));
    let (n, k) = reciprocal_degree(chi.n_max(), chi.k_max());
    let inv = certify_reciprocals(field, &b.u, n, k)?;
    let fb = field.enclose(&b.zeta, &b.u, &inv, Prec::Compensated);
    let ode: [FcBall; 3] = std::array::from_fn(|j| du[j].sub(&b.tau.mul(&fb.f[j], Prec::Compensated)));
    let (r1, r2, r3) = phase_rho(&chi.u, reference, chi.n_max(), chi.k_max());
    b.tau = FcBall::zero(nu);
    Ok(([r1, r2, r3], UVec(std::array::from_fn(|j| ode[j].to_seq()))))
}

/// Directional derivative `DF(chi)[v]` for the two-predator field.
pub fn apply_df(chi: &BranchPoint, v: &BranchPoint, pc: &ParamCurves, reference: &PhaseReference) -> Result<([ChebSeq; 3], UVec)> {
    let field = PredatorPrey { curves: pc.clone() };
    apply_df_with(&field, chi, v, reference)
}

pub fn apply_df_with(field: &dyn Field, chi: &BranchPoint, v: &BranchPoint, reference: &PhaseReference) -> Result<([ChebSeq; 3], UVec)> {
    let nu = 1.0;
    let prec = Prec::Compensated;
    let b = chi.balls(nu);
    let vb = v.balls(nu);
    let (n, k) = reciprocal_degree(chi.n_max(), chi.k_max());
    let inv = certify_reciprocals(field, &b.u, n, k)?;
    let fb = field.enclose(&b.zeta, &b.u, &inv, prec);
    let g = reference.float();
    // rho is affine in u, so its derivative is rho without the constant
    let mut drho = rho_balls(&vb.u, &g, v.k_max(), prec);
    for r in drho.iter_mut().skip(1) {
        *r = r.add_scalar(RectComplex::ONE);
    }
    let dvt: [FcBall; 3] = std::array::from_fn(|j| v.u.0[j].dt().to_ball(nu));
    let ode: [FcBall; 3] = std::array::from_fn(|i| {
        let mut lin = FcBall::zero(nu);
        for j in 0..3 {
            lin = lin.add(&fb.du[i][j].mul(&vb.u[j], prec));
        }
        for j in 0..2 {
            lin = lin.add(&fb.dz[i][j].mul(&vb.zeta[j], prec));
        }
        dvt[i].sub(&vb.tau.mul(&fb.f[i], prec)).sub(&b.tau.mul(&lin, prec))
    });
    let cheb = |x: &FcBall| ChebSeq::new(x.to_seq().coeffs);
    Ok(([cheb(&drho[0]), cheb(&drho[1]), cheb(&drho[2])], UVec(std::array::from_fn(|j| ode[j].to_seq()))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_param_curves, LinearToy, ModelParams};

    fn single(n: usize, k: i64, v: Complex64, n_max: usize, k_max: usize) -> FourierChebSeq {
        let mut s = FourierChebSeq::zeros(n_max, k_max);
        s.set(n, k, RectComplex::point(v.re, v.im));
        s
    }

    fn zero_u(n_max: usize, k_max: usize) -> UVec {
        UVec(std::array::from_fn(|_| FourierChebSeq::zeros(n_max, k_max)))
    }

    #[test]
    fn disjoint_modes_pair_to_zero() {
        let mut u = zero_u(0, 5);
        u.0[0] = single(0, 5, Complex64::new(1.0, 0.0), 0, 5);
        let mut g = zero_u(0, 5);
        g.0[0] = single(0, 3, Complex64::new(0.0, 2.0), 0, 5);
        let (r1, _, _) = phase_rho(&u, &PhaseReference { dgamma: g }, 0, 5);
        assert!(r1.coeffs.iter().all(|c| c.re.hi() == 0.0 && c.re.lo() == 0.0 && c.contains_zero()));
    }

    #[test]
    fn unit_amplitude_constraint() {
        let mut u = zero_u(0, 2);
        u.0[0] = single(0, 0, Complex64::new(1.0, 0.0), 0, 2);
        u.0[1] = single(0, 0, Complex64::new(1.0, 0.0), 0, 2);
        let (_, r2, r3) = phase_rho(&u, &PhaseReference { dgamma: zero_u(0, 2) }, 0, 2);
        assert!(r2.coeffs[0].contains(0.0, 0.0) && r2.coeffs[0].re.width() == 0.0);
        assert!(r3.coeffs[0].contains(0.0, 0.0));
    }

    #[test]
    fn phase_pairing_matches_quadrature() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (n_max, k_max) = (2, 4);
        let mut u = zero_u(n_max, k_max);
        let mut g = zero_u(n_max, k_max);
        for s in u.0.iter_mut().chain(g.0.iter_mut()) {
            for c in s.coeffs.iter_mut() {
                *c = RectComplex::point(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let (r1, _, _) = phase_rho(&u, &PhaseReference { dgamma: g.clone() }, n_max, k_max);
        let eta = 0.37;
        let m = 2048;
        let mut quad = Complex64::new(0.0, 0.0);
        for i in 0..m {
            let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            for j in 0..3 {
                quad += u.0[j].mid().eval_f(t, eta) * g.0[j].mid().eval_f(t, eta).conj();
            }
        }
        quad *= 2.0 * std::f64::consts::PI / m as f64;
        let v = r1.eval(Interval::point(eta)).unwrap();
        assert!((v.re.mid() - quad.re).abs() < 1e-9 && (v.im.mid() - quad.im).abs() < 1e-9);
    }

    #[test]
    fn self_pairing_is_real_positive() {
        let sol = LinearToy::reference_solution(1, 1);
        let g = PhaseReference::from_float(&sol.u);
        let (r1, _, _) = phase_rho(&g.dgamma, &g, 1, 1);
        let v = r1.eval(Interval::point(0.3)).unwrap();
        assert!(v.re.lo() > 0.0 && v.im.contains(0.0));
    }

    fn toy_chi() -> (LinearToy, BranchPoint, PhaseReference) {
        let sol = LinearToy::reference_solution(1, 2);
        let toy = LinearToy::with_solution(&sol);
        let fb = FloatBranch { tau: sol.tau.clone(), zeta: sol.zeta.clone(), u: sol.u.clone() };
        let reference = PhaseReference::from_float(&sol.u);
        (toy, fb.to_point(), reference)
    }

    #[test]
    fn toy_zero_has_zero_residual() {
        let (toy, chi, reference) = toy_chi();
        let (rho, ode) = eval_f_with(&toy, &chi, &reference).unwrap();
        for r in &rho {
            assert!(r.coeffs.iter().all(|c| c.contains_zero()));
        }
        for s in &ode.0 {
            assert!(s.coeffs.iter().all(|c| c.contains_zero()));
        }
    }

    #[test]
    fn df_is_linear_and_zero_at_zero() {
        let (toy, chi, reference) = toy_chi();
        let mut v = chi.clone();
        for c in v.u.0[2].coeffs.iter_mut() {
            *c = RectComplex::ZERO;
        }
        v.tau = ChebSeq::from_f64(&[0.5, 0.25]);
        let zero = BranchPoint { tau: ChebSeq::from_f64(&[0.0]), zeta1: ChebSeq::from_f64(&[0.0]), zeta2: ChebSeq::from_f64(&[0.0]), u: zero_u(1, 2) };
        let (r0, o0) = apply_df_with(&toy, &chi, &zero, &reference).unwrap();
        assert!(r0.iter().all(|r| r.coeffs.iter().all(|c| c.contains_zero())));
        assert!(o0.0.iter().all(|s| s.coeffs.iter().all(|c| c.contains_zero())));
        let (r1, o1) = apply_df_with(&toy, &chi, &v, &reference).unwrap();
        let mut v2 = v.clone();
        v2.tau = v.tau.scale(RectComplex::point(2.0, 0.0));
        v2.zeta1 = v.zeta1.scale(RectComplex::point(2.0, 0.0));
        v2.zeta2 = v.zeta2.scale(RectComplex::point(2.0, 0.0));
        for s in v2.u.0.iter_mut() {
            for c in s.coeffs.iter_mut() {
                *c = c.scale(Interval::point(2.0));
            }
        }
        let (r2, o2) = apply_df_with(&toy, &chi, &v2, &reference).unwrap();
        for (a, b) in r1.iter().zip(&r2) {
            for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
                let d = x.scale(Interval::point(2.0));
                assert!(d.inflate(1e-12).contains(y.re.mid(), y.im.mid()));
            }
        }
        for (a, b) in o1.0.iter().zip(&o2.0) {
            for n in 0..=a.n_max {
                for k in -(a.k_max as i64)..=a.k_max as i64 {
                    let d = a.get(n, k).scale(Interval::point(2.0));
                    let y = b.get(n, k);
                    assert!(d.inflate(1e-12).contains(y.re.mid(), y.im.mid()));
                }
            }
        }
    }

    #[test]
    fn df_matches_finite_differences() {
        let pc = build_param_curves(&ModelParams::reference());
        let mut u = zero_u(1, 1);
        u.0[0] = single(0, 0, Complex64::new(0.8, 0.0), 1, 1);
        u.0[1] = single(0, 0, Complex64::new(0.6, 0.0), 1, 1);
        let mut u3 = single(0, 0, Complex64::new(0.5, 0.0), 1, 1);
        u3.set(0, 1, RectComplex::point(0.05, 0.02));
        u3.set(0, -1, RectComplex::point(0.05, -0.02));
        u.0[2] = u3;
        let chi = BranchPoint { tau: ChebSeq::from_f64(&[3.0]), zeta1: ChebSeq::from_f64(&[0.1, 0.01]), zeta2: ChebSeq::from_f64(&[0.2]), u };
        let mut v = chi.clone();
        v.tau = ChebSeq::from_f64(&[0.3]);
        v.u.0[0].set(0, 1, RectComplex::point(0.1, 0.1));
        v.u.0[0].set(0, -1, RectComplex::point(0.1, -0.1));
        let reference = PhaseReference::from_float(&chi.to_float().u);
        let (_, d) = apply_df(&chi, &v, &pc, &reference).unwrap();
        let h = 1e-6;
        let shift = |s: f64| {
            let mut c = chi.clone();
            let add = |a: &ChebSeq, b: &ChebSeq| a.add(&b.scale(RectComplex::point(s, 0.0)));
            c.tau = add(&chi.tau, &v.tau);
            c.zeta1 = add(&chi.zeta1, &v.zeta1);
            c.zeta2 = add(&chi.zeta2, &v.zeta2);
            for j in 0..3 {
                let mut w = chi.u.0[j].clone();
                for (x, y) in w.coeffs.iter_mut().zip(&v.u.0[j].coeffs) {
                    let m = (*x + y.scale(Interval::point(s))).mid();
                    *x = RectComplex::point(m.0, m.1);
                }
                c.u.0[j] = w;
            }
            c.tau = ChebSeq::from_f64(&c.tau.mid_f64());
            c.zeta1 = ChebSeq::from_f64(&c.zeta1.mid_f64());
            c.zeta2 = ChebSeq::from_f64(&c.zeta2.mid_f64());
            eval_f(&c, &pc, &reference).unwrap().1
        };
        let (fp, fm) = (shift(h), shift(-h));
        for j in 0..3 {
            for n in 0..=1 {
                for k in -1..=1i64 {
                    let a = fp.0[j].get(n, k);
                    let b = fm.0[j].get(n, k);
                    let fd = ((a.re.mid() - b.re.mid()) / (2.0 * h), (a.im.mid() - b.im.mid()) / (2.0 * h));
                    let e = d.0[j].get(n, k);
                    // the enclosure must contain the true derivative; centers carry truncation error
                    assert!(e.inflate(1e-6).contains(fd.0, fd.1), "{j} {n} {k} {:?} {:?}", e, fd);
                }
            }
        }
    }

    #[test]
    fn sigma_equivariance_on_symmetric_point() {
        let (toy, chi, reference) = toy_chi();
        assert!(is_sigma_fixed(&chi));
        assert_eq!(sigma(&chi), chi);
        let mut broken = chi.clone();
        let c = broken.u.0[1].get(0, 1);
        broken.u.0[1].set(0, 1, RectComplex::new(c.re, -c.im));
        assert!(!is_sigma_fixed(&broken));
        let (_, a) = eval_f_with(&toy, &chi, &reference).unwrap();
        let (_, b) = eval_f_with(&toy, &sigma(&chi), &reference).unwrap();
        assert_eq!(a, b);
    }
}
