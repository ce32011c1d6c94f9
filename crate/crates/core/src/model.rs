//! The rescaled two-predator/one-prey system in blow-up coordinates.
//!
//! With `q_j = (u_3 - lambda_j) / (u_3 + alpha_j)` the auxiliary field is
//!
//! ```text
//! f_j = delta_j q_j u_j                                   j = 1, 2
//! f_3 = (1 - u_3 - zeta_1 u_1/(u_3+alpha_1) - zeta_2 u_2/(u_3+alpha_2)) u_3
//! ```
//!
//! and `alpha_j`, `lambda_j` are affine in the continuation parameter `eta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{add_ru, mul_ru, Interval, RectComplex};
use crate::seqspace::sample::approx_reciprocal;
use crate::seqspace::{ChebSeq, FcArr, FcBall, FourierChebSeq, NeumannReport, Prec, UVec};

/// The ten model parameters and the carrying-capacity range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a1: Interval,
    pub a2: Interval,
    pub d1: Interval,
    pub d2: Interval,
    pub m1: Interval,
    pub m2: Interval,
    pub y1: Interval,
    pub y2: Interval,
    pub gamma: Interval,
    pub kappa1: Interval,
    pub kappa2: Interval,
}

impl ModelParams {
    /// The parameter set studied in the literature for this family.
    pub fn reference() -> Self {
        let p = |s: &str| Interval::parse_decimal(s).expect("literal");
        ModelParams {
            a1: p("10"),
            a2: p("41"),
            d1: p("0.8"),
            d2: p("0.5"),
            m1: p("1"),
            m2: p("1"),
            y1: p("1"),
            y2: p("1"),
            gamma: p("1"),
            kappa1: p("92"),
            kappa2: p("129"),
        }
    }

    pub fn a(&self, j: usize) -> Interval {
        [self.a1, self.a2][j]
    }

    pub fn d(&self, j: usize) -> Interval {
        [self.d1, self.d2][j]
    }

    pub fn m(&self, j: usize) -> Interval {
        [self.m1, self.m2][j]
    }

    pub fn y(&self, j: usize) -> Interval {
        [self.y1, self.y2][j]
    }

    /// `delta_j = (m_j - d_j) / gamma`.
    pub fn delta(&self, j: usize) -> Interval {
        (self.m(j) - self.d(j)) / self.gamma
    }

    /// `a_j d_j / (m_j - d_j)`, the numerator of `lambda_j`.
    fn lambda_num(&self, j: usize) -> Interval {
        self.a(j) * self.d(j) / (self.m(j) - self.d(j))
    }

    /// Check positivity and the existence of the boundary equilibria.
    pub fn validate(&self) -> Result<()> {
        let all = [self.a1, self.a2, self.d1, self.d2, self.m1, self.m2, self.y1, self.y2, self.gamma, self.kappa1, self.kappa2];
        if all.iter().any(|x| !(x.lo() > 0.0)) {
            return Err(Error::Precondition("model parameters must be positive".into()));
        }
        if !(self.kappa1.hi() <= self.kappa2.lo()) {
            return Err(Error::Precondition("kappa1 must not exceed kappa2".into()));
        }
        for j in 0..2 {
            if !((self.m(j) - self.d(j)).lo() > 0.0) {
                return Err(Error::Precondition(format!("m{0} - d{0} must be positive", j + 1)));
            }
            for kappa in [self.kappa1, self.kappa2] {
                let lam = self.lambda_num(j) / kappa;
                if !(lam.hi() < 1.0) {
                    return Err(Error::Precondition(format!("1 - lambda{} must be positive", j + 1)));
                }
            }
        }
        Ok(())
    }

    /// Exchange the roles of the two predators.
    pub fn swapped(&self) -> Self {
        ModelParams { a1: self.a2, a2: self.a1, d1: self.d2, d2: self.d1, m1: self.m2, m2: self.m1, y1: self.y2, y2: self.y1, ..self.clone() }
    }
}

/// `kappa(eta) = 2 kappa1 kappa2 / (kappa1 + kappa2 + (kappa1 - kappa2) eta)`.
pub fn kappa_of_eta(p: &ModelParams, eta: Interval) -> Result<Interval> {
    if eta.lo() < -1.0 || eta.hi() > 1.0 {
        return Err(Error::DomainError("eta outside [-1, 1]"));
    }
    if !eta.is_point() {
        // the denominator is affine in eta, so kappa is monotone between the endpoints
        let a = kappa_of_eta(p, Interval::point(eta.lo()))?;
        let b = kappa_of_eta(p, Interval::point(eta.hi()))?;
        return Ok(a.hull(&b));
    }
    let (k1, k2) = (p.kappa1, p.kappa2);
    // Written as 2 k1 k2 / (k1 (1 + eta) + k2 (1 - eta)) to keep the endpoints sharp.
    let two = Interval::point(2.0);
    let den = k1 * (Interval::ONE + eta) + k2 * (Interval::ONE - eta);
    (two * k1 * k2).try_div(den)
}

/// Inverse of [`kappa_of_eta`].
pub fn eta_of_kappa(p: &ModelParams, kappa: Interval) -> Result<Interval> {
    let (k1, k2) = (p.kappa1, p.kappa2);
    let two = Interval::point(2.0);
    let num = two * k1 * k2 - kappa * (k1 + k2);
    num.try_div(kappa * (k1 - k2))
}

/// `alpha_j`, `lambda_j` as degree-one Chebyshev series and the rates `delta_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamCurves {
    pub alpha1: ChebSeq,
    pub alpha2: ChebSeq,
    pub lambda1: ChebSeq,
    pub lambda2: ChebSeq,
    pub delta1: Interval,
    pub delta2: Interval,
}

pub fn build_param_curves(p: &ModelParams) -> ParamCurves {
    let (k1, k2) = (p.kappa1, p.kappa2);
    let den = Interval::point(2.0) * k1 * k2;
    let s0 = (k1 + k2) / den;
    // standard T_1 coefficient (k1 - k2)/(2 k1 k2), stored halved
    let s1 = (k1 - k2) / (den * Interval::point(2.0));
    let series = |c: Interval| ChebSeq::new(vec![RectComplex::real(c * s0), RectComplex::real(c * s1)]);
    ParamCurves {
        alpha1: series(p.a1),
        alpha2: series(p.a2),
        lambda1: series(p.lambda_num(0)),
        lambda2: series(p.lambda_num(1)),
        delta1: p.delta(0),
        delta2: p.delta(1),
    }
}

impl ParamCurves {
    pub fn alpha(&self, j: usize) -> &ChebSeq {
        [&self.alpha1, &self.alpha2][j]
    }

    pub fn lambda(&self, j: usize) -> &ChebSeq {
        [&self.lambda1, &self.lambda2][j]
    }

    pub fn delta(&self, j: usize) -> Interval {
        [self.delta1, self.delta2][j]
    }

    /// Float values `(alpha_j, lambda_j)` at `eta`.
    pub fn at(&self, j: usize, eta: f64) -> (f64, f64) {
        let ev = |s: &ChebSeq| {
            let c = s.mid_f64();
            c[0] + 2.0 * c[1] * eta
        };
        (ev(self.alpha(j)), ev(self.lambda(j)))
    }
}

/// A field value and its first derivatives at one point.
#[derive(Clone, Copy, Debug, Default)]
pub struct PointJet {
    pub f: [f64; 3],
    /// `du[i][j] = d f_i / d u_j`
    pub du: [[f64; 3]; 3],
    /// `dz[i][j] = d f_i / d zeta_j`
    pub dz: [[f64; 2]; 3],
}

/// Ball enclosures of `f` and its first derivatives along the branch.
#[derive(Clone, Debug)]
pub struct FieldBalls {
    pub f: [FcBall; 3],
    pub du: [[FcBall; 3]; 3],
    pub dz: [[FcBall; 2]; 3],
}

/// Terms of the second-derivative table and their maximum.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct D2Table {
    pub terms: Vec<(String, f64)>,
    /// Upper bound on `sup_{B_R} ||D^2 F||`.
    pub total: f64,
}

/// Certified reciprocal of one denominator.
#[derive(Clone, Debug)]
pub struct Reciprocal {
    pub ball: FcBall,
    pub report: NeumannReport,
}

/// The vector field entering `d_t u = tau f(zeta, u)`.
pub trait Field: Send + Sync {
    /// Float value and derivatives at time `t` (for non-autonomous test fields) and `eta`.
    fn point(&self, t: f64, eta: f64, zeta: [f64; 2], u: [f64; 3]) -> PointJet;

    /// Balls of the functions that must be inverted.
    fn denominators(&self, u: &[FcBall; 3]) -> Vec<FcBall>;

    /// Enclosures of `f`, `d_u f`, `d_zeta f` given certified reciprocals.
    fn enclose(&self, zeta: &[FcBall; 2], u: &[FcBall; 3], inv: &[Reciprocal], prec: Prec) -> FieldBalls;

    /// Second-derivative table over the ball of radius `r_ball` around the given centers.
    fn d2_table(&self, tau: &FcBall, zeta: &[FcBall; 2], u: &[FcBall; 3], inv: &[Reciprocal], r_ball: f64) -> Result<D2Table>;

    /// Whether `f` depends on time explicitly.
    fn is_autonomous(&self) -> bool {
        true
    }
}

/// Certify reciprocals of all denominators at degree `(n, k)`.
pub fn certify_reciprocals(field: &dyn Field, u: &[FcBall; 3], n: usize, k: usize) -> Result<Vec<Reciprocal>> {
    field
        .denominators(u)
        .iter()
        .map(|d| {
            let approx = approx_reciprocal(&d.c, n, k);
            let (ball, report) = d.inverse(&approx, Prec::Compensated, (n, k))?;
            Ok(Reciprocal { ball, report })
        })
        .collect()
}

/// The two-predator/one-prey field.
#[derive(Clone, Debug)]
pub struct PredatorPrey {
    pub curves: ParamCurves,
}

impl PredatorPrey {
    pub fn new(p: &ModelParams) -> Self {
        PredatorPrey { curves: build_param_curves(p) }
    }

    fn series_ball(s: &ChebSeq, nu: f64) -> FcBall {
        FcBall::from_rect(s.degree(), 0, &s.coeffs, nu)
    }

    fn alpha_ball(&self, j: usize, nu: f64) -> FcBall {
        Self::series_ball(self.curves.alpha(j), nu)
    }

    fn lambda_ball(&self, j: usize, nu: f64) -> FcBall {
        Self::series_ball(self.curves.lambda(j), nu)
    }
}

impl Field for PredatorPrey {
    fn point(&self, _t: f64, eta: f64, zeta: [f64; 2], u: [f64; 3]) -> PointJet {
        let mut jet = PointJet::default();
        let u3 = u[2];
        let mut f3 = 1.0 - u3;
        let mut d33 = 1.0 - 2.0 * u3;
        for j in 0..2 {
            let (al, la) = self.curves.at(j, eta);
            let de = self.curves.delta(j).mid();
            let inv = 1.0 / (u3 + al);
            let q = (u3 - la) * inv;
            jet.f[j] = de * q * u[j];
            jet.du[j][j] = de * q;
            jet.du[j][2] = de * (la + al) * inv * inv * u[j];
            f3 -= zeta[j] * u[j] * inv;
            jet.du[2][j] = -zeta[j] * u3 * inv;
            jet.dz[2][j] = -u[j] * u3 * inv;
            d33 -= zeta[j] * u[j] * al * inv * inv;
        }
        jet.f[2] = f3 * u3;
        jet.du[2][2] = d33;
        jet
    }

    fn denominators(&self, u: &[FcBall; 3]) -> Vec<FcBall> {
        let nu = u[2].nu;
        (0..2).map(|j| u[2].add(&self.alpha_ball(j, nu))).collect()
    }

    fn enclose(&self, zeta: &[FcBall; 2], u: &[FcBall; 3], inv: &[Reciprocal], prec: Prec) -> FieldBalls {
        let nu = u[2].nu;
        let zero = FcBall::zero(nu);
        let mut f: [FcBall; 3] = std::array::from_fn(|_| zero.clone());
        let mut du: [[FcBall; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| zero.clone()));
        let mut dz: [[FcBall; 2]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| zero.clone()));
        let u3 = &u[2];
        let one = FcBall::constant(RectComplex::ONE, nu);
        let mut bracket = one.sub(u3);
        let mut d33 = one.sub(&u3.scale_real(Interval::point(2.0)));
        for j in 0..2 {
            let ib = &inv[j].ball;
            let de = RectComplex::real(self.curves.delta(j));
            let q = u3.sub(&self.lambda_ball(j, nu)).mul(ib, prec);
            f[j] = q.mul(&u[j], prec).scale(de);
            du[j][j] = q.scale(de);
            let inv2 = ib.mul(ib, prec);
            let la_al = self.lambda_ball(j, nu).add(&self.alpha_ball(j, nu));
            du[j][2] = la_al.mul(&inv2, prec).mul(&u[j], prec).scale(de);
            let s = u[j].mul(ib, prec);
            bracket = bracket.sub(&zeta[j].mul(&s, prec));
            du[2][j] = zeta[j].mul(&u3.mul(ib, prec), prec).neg();
            dz[2][j] = s.mul(u3, prec).neg();
            let za = zeta[j].mul(&self.alpha_ball(j, nu), prec);
            d33 = d33.sub(&za.mul(&u[j], prec).mul(&inv2, prec));
        }
        f[2] = bracket.mul(u3, prec);
        du[2][2] = d33;
        FieldBalls { f, du, dz }
    }

    fn d2_table(&self, tau: &FcBall, zeta: &[FcBall; 2], u: &[FcBall; 3], inv: &[Reciprocal], r: f64) -> Result<D2Table> {
        let nu = u[2].nu;
        let up = |b: &FcBall| add_ru(b.norm_up(), r);
        let m = |a: f64, b: f64| mul_ru(a, b);
        let t = up(tau);
        let z = [up(&zeta[0]), up(&zeta[1])];
        let uu = [up(&u[0]), up(&u[1]), up(&u[2])];
        let mut c = [0.0; 2];
        let mut lm = [0.0; 2];
        let mut s = [0.0; 2];
        let mut a = [0.0; 2];
        let mut de = [0.0; 2];
        for j in 0..2 {
            c[j] = inv[j].report.ball_bound(r)?;
            lm[j] = up(&u[2].sub(&self.lambda_ball(j, nu)));
            s[j] = self.lambda_ball(j, nu).add(&self.alpha_ball(j, nu)).norm_up();
            a[j] = self.alpha_ball(j, nu).norm_up();
            de[j] = self.curves.delta(j).hi();
        }
        let c2 = [m(c[0], c[0]), m(c[1], c[1])];
        let c3 = [m(c2[0], c[0]), m(c2[1], c[1])];
        // ||1 - 2 u_3|| over the ball
        let one_minus = add_ru(FcBall::constant(RectComplex::ONE, nu).sub(&u[2].scale_real(Interval::point(2.0))).norm_up(), m(2.0, r));
        let zua2 = (0..2).fold(0.0, |acc, j| add_ru(acc, m(m(z[j], uu[j]), m(a[j], c2[j]))));
        let zua3 = (0..2).fold(0.0, |acc, j| add_ru(acc, m(m(z[j], uu[j]), m(a[j], c3[j]))));
        let b = add_ru(one_minus, zua2);

        let mut dtau = [0.0; 3];
        let mut duj = [0.0; 2];
        let mut du3 = [0.0; 3];
        let mut dzeta3 = [0.0; 2];
        let mut duj3 = [0.0; 2];
        for j in 0..2 {
            dtau[j] = m(de[j], f64::max(m(lm[j], c[j]), m(m(s[j], uu[j]), c2[j])));
            duj[j] = m(de[j], f64::max(m(lm[j], c[j]), m(m(t, s[j]), c2[j])));
            du3[j] = m(de[j], f64::max(f64::max(m(m(s[j], uu[j]), c2[j]), m(m(t, s[j]), c2[j])), m(2.0, m(m(t, s[j]), m(uu[j], c3[j])))));
            dzeta3[j] = f64::max(f64::max(m(m(uu[j], uu[2]), c[j]), m(m(t, uu[2]), c[j])), m(m(t, uu[j]), m(a[j], c2[j])));
            duj3[j] = f64::max(f64::max(m(m(z[j], uu[2]), c[j]), m(m(t, uu[2]), c[j])), m(m(t, z[j]), m(a[j], c2[j])));
        }
        dtau[2] = [m(m(uu[0], uu[2]), c[0]), m(m(uu[1], uu[2]), c[1]), m(m(z[0], uu[2]), c[0]), m(m(z[1], uu[2]), c[1]), b].into_iter().fold(0.0, f64::max);
        du3[2] = [
            b,
            m(m(t, uu[0]), m(a[0], c2[0])),
            m(m(t, uu[1]), m(a[1], c2[1])),
            m(m(t, z[0]), m(a[0], c2[0])),
            m(m(t, z[1]), m(a[1], c2[1])),
            m(2.0, m(t, add_ru(1.0, zua3))),
        ]
        .into_iter()
        .fold(0.0, f64::max);

        let cols = [
            ("tau", add_ru(add_ru(dtau[0], dtau[1]), dtau[2])),
            ("zeta1", dzeta3[0]),
            ("zeta2", dzeta3[1]),
            ("u1", add_ru(duj[0], duj3[0])),
            ("u2", add_ru(duj[1], duj3[1])),
            ("u3", add_ru(add_ru(du3[0], du3[1]), du3[2])),
        ];
        let total = cols.iter().fold(0.0, |acc: f64, x| acc.max(x.1));
        let mut terms: Vec<(String, f64)> = cols.iter().map(|(n, v)| (n.to_string(), *v)).collect();
        terms.push(("C1".into(), c[0]));
        terms.push(("C2".into(), c[1]));
        Ok(D2Table { terms, total })
    }
}

/// Linear test field `f_j = u_j - c_j - zeta_j` (`j = 1, 2`), `f_3 = u_3 - c_3`.
///
/// [`LinearToy::with_solution`] builds `c` from a chosen exact zero, so the
/// full proof pipeline can be run against a known answer.
#[derive(Clone, Debug)]
pub struct LinearToy {
    pub c: [FcArr; 3],
}

/// Exact data of a toy solution: `tau`, `zeta_1`, `zeta_2` (stored Chebyshev
/// coefficients) and the three components of `u`.
#[derive(Clone, Debug)]
pub struct ToySolution {
    pub tau: Vec<f64>,
    pub zeta: [Vec<f64>; 2],
    pub u: [FcArr; 3],
}

impl LinearToy {
    /// The default dyadic solution: `tau = 1`, `u_j(0, eta) = 1`, one Fourier mode.
    pub fn reference_solution(n_max: usize, k_max: usize) -> ToySolution {
        use num_complex::Complex64 as C;
        assert!(n_max >= 1 && k_max >= 1);
        let mut u: [FcArr; 3] = std::array::from_fn(|_| FcArr::zeros(n_max, k_max));
        // u_1 = (1/2 - eta/8) + (1/4 + eta/16)(e^{it} + e^{-it})
        u[0].set(0, 0, C::new(0.5, 0.0));
        u[0].set(1, 0, C::new(-0.0625, 0.0));
        for k in [-1, 1] {
            u[0].set(0, k, C::new(0.25, 0.0));
            u[0].set(1, k, C::new(0.03125, 0.0));
        }
        // u_2 = 1/2 + 2 Re((1/4 + i(1/8 + eta/16)) e^{-it})
        u[1].set(0, 0, C::new(0.5, 0.0));
        u[1].set(0, 1, C::new(0.25, 0.125));
        u[1].set(0, -1, C::new(0.25, -0.125));
        u[1].set(1, 1, C::new(0.0, 0.03125));
        u[1].set(1, -1, C::new(0.0, -0.03125));
        // u_3 = 3/4 + (i/8) e^{-it} - (i/8) e^{it}
        u[2].set(0, 0, C::new(0.75, 0.0));
        u[2].set(0, 1, C::new(0.0, 0.125));
        u[2].set(0, -1, C::new(0.0, -0.125));
        let mut tau = vec![0.0; n_max + 1];
        tau[0] = 1.0;
        let mut z1 = vec![0.0; n_max + 1];
        z1[0] = 0.25;
        z1[1] = 0.0625;
        let mut z2 = vec![0.0; n_max + 1];
        z2[0] = -0.125;
        ToySolution { tau, zeta: [z1, z2], u }
    }

    /// Field whose zero (with `tau = 1`) is the given solution.
    pub fn with_solution(sol: &ToySolution) -> Self {
        assert!(sol.tau[0] == 1.0 && sol.tau[1..].iter().all(|&x| x == 0.0), "toy solutions use tau = 1");
        let c = std::array::from_fn(|j| {
            let u = &sol.u[j];
            let mut c = u.clone();
            for n in 0..=u.n_max {
                for k in -(u.k_max as i64)..=u.k_max as i64 {
                    // c = u - d_t u - zeta, and (d_t u)_k = -ik u_k
                    let z = u.get(n, k);
                    let ik = num_complex::Complex64::new(0.0, k as f64);
                    c.set(n, k, z + ik * z);
                }
                if j < 2 {
                    let z = c.get(n, 0);
                    c.set(n, 0, z - sol.zeta[j].get(n).copied().unwrap_or(0.0));
                }
            }
            c
        });
        LinearToy { c }
    }
}

impl Field for LinearToy {
    fn point(&self, t: f64, eta: f64, zeta: [f64; 2], u: [f64; 3]) -> PointJet {
        let mut jet = PointJet::default();
        for j in 0..3 {
            jet.f[j] = u[j] - self.c[j].eval_f(t, eta).re - if j < 2 { zeta[j] } else { 0.0 };
            jet.du[j][j] = 1.0;
        }
        jet.dz[0][0] = -1.0;
        jet.dz[1][1] = -1.0;
        jet
    }

    fn denominators(&self, _u: &[FcBall; 3]) -> Vec<FcBall> {
        Vec::new()
    }

    fn enclose(&self, zeta: &[FcBall; 2], u: &[FcBall; 3], _inv: &[Reciprocal], _prec: Prec) -> FieldBalls {
        let nu = u[0].nu;
        let zero = FcBall::zero(nu);
        let one = FcBall::constant(RectComplex::ONE, nu);
        let f = std::array::from_fn(|j| {
            let mut v = u[j].sub(&FcBall::exact(self.c[j].clone(), nu));
            if j < 2 {
                v = v.sub(&zeta[j]);
            }
            v
        });
        let du = std::array::from_fn(|i| std::array::from_fn(|j| if i == j { one.clone() } else { zero.clone() }));
        let dz = std::array::from_fn(|i| std::array::from_fn(|j| if i == j { one.neg() } else { zero.clone() }));
        FieldBalls { f, du, dz }
    }

    fn d2_table(&self, _tau: &FcBall, _zeta: &[FcBall; 2], _u: &[FcBall; 3], _inv: &[Reciprocal], _r: f64) -> Result<D2Table> {
        // Only d_tau d_u (tau f) and d_tau d_zeta (tau f) are nonzero, all of norm one.
        let cols = [("tau", 3.0), ("zeta1", 1.0), ("zeta2", 1.0), ("u1", 1.0), ("u2", 1.0), ("u3", 1.0)];
        Ok(D2Table { terms: cols.iter().map(|(n, v)| (n.to_string(), *v)).collect(), total: 3.0 })
    }

    fn is_autonomous(&self) -> bool {
        false
    }
}

/// Default degree of approximate reciprocals for inputs of degree `(n, k)`.
pub fn reciprocal_degree(n: usize, k: usize) -> (usize, usize) {
    (2 * n, 2 * k)
}

fn seq_ball(s: &ChebSeq, nu: f64) -> FcBall {
    s.to_ball(nu)
}

fn balls_of(zeta1: &ChebSeq, zeta2: &ChebSeq, u: &UVec, nu: f64) -> ([FcBall; 2], [FcBall; 3]) {
    ([seq_ball(zeta1, nu), seq_ball(zeta2, nu)], std::array::from_fn(|j| u.0[j].to_ball(nu)))
}

/// Weight used when converting balls back to coefficient enclosures.
const SEQ_NU: f64 = 1.0;

/// Enclosure of `f(zeta_1, zeta_2, u)` for the two-predator field.
pub fn vector_field(pc: &ParamCurves, zeta1: &ChebSeq, zeta2: &ChebSeq, u: &UVec) -> Result<UVec> {
    let field = PredatorPrey { curves: pc.clone() };
    let (z, ub) = balls_of(zeta1, zeta2, u, SEQ_NU);
    let (n, k) = reciprocal_degree(ub[2].n_max(), ub[2].k_max());
    let inv = certify_reciprocals(&field, &ub, n, k)?;
    let fb = field.enclose(&z, &ub, &inv, Prec::Compensated);
    Ok(UVec(std::array::from_fn(|j| fb.f[j].to_seq())))
}

/// Enclosure of the 3x3 Jacobian `d_u f`.
pub fn jacobian_u(pc: &ParamCurves, zeta1: &ChebSeq, zeta2: &ChebSeq, u: &UVec) -> Result<[[FourierChebSeq; 3]; 3]> {
    let field = PredatorPrey { curves: pc.clone() };
    let (z, ub) = balls_of(zeta1, zeta2, u, SEQ_NU);
    let (n, k) = reciprocal_degree(ub[2].n_max(), ub[2].k_max());
    let inv = certify_reciprocals(&field, &ub, n, k)?;
    let fb = field.enclose(&z, &ub, &inv, Prec::Compensated);
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| fb.du[i][j].to_seq())))
}

/// Second-derivative table over the ball of radius `r` around the given point, in the `nu`-norm.
pub fn second_derivative_norms(pc: &ParamCurves, r: f64, tau: &ChebSeq, zeta1: &ChebSeq, zeta2: &ChebSeq, u: &UVec, nu: f64) -> Result<D2Table> {
    let field = PredatorPrey { curves: pc.clone() };
    let (z, ub) = balls_of(zeta1, zeta2, u, nu);
    let (n, k) = reciprocal_degree(ub[2].n_max(), ub[2].k_max());
    let inv = certify_reciprocals(&field, &ub, n, k)?;
    field.d2_table(&tau.to_ball(nu), &z, &ub, &inv, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn cs(v: f64) -> ChebSeq {
        ChebSeq::from_f64(&[v])
    }

    fn const_u(v: [f64; 3]) -> UVec {
        UVec(std::array::from_fn(|j| {
            let mut s = FourierChebSeq::zeros(0, 0);
            s.set(0, 0, RectComplex::point(v[j], 0.0));
            s
        }))
    }

    #[test]
    fn kappa_endpoints() {
        let p = ModelParams::reference();
        let k = kappa_of_eta(&p, Interval::point(-1.0)).unwrap();
        assert!(k.contains(92.0) && k.width() == 0.0);
        let k = kappa_of_eta(&p, Interval::ONE).unwrap();
        assert!(k.contains(129.0) && k.width() == 0.0);
        let k = kappa_of_eta(&p, Interval::ZERO).unwrap();
        assert!(k.contains(2.0 * 92.0 * 129.0 / 221.0));
        assert!(kappa_of_eta(&p, Interval::point(1.5)).is_err());
        let e = eta_of_kappa(&p, Interval::point(92.0)).unwrap();
        assert!(e.contains(-1.0));
        let e = eta_of_kappa(&p, Interval::point(129.0)).unwrap();
        assert!(e.contains(1.0));
    }

    #[test]
    fn curves_match_direct_evaluation() {
        let p = ModelParams::reference();
        let pc = build_param_curves(&p);
        let a = pc.alpha1.eval(Interval::point(-1.0)).unwrap();
        assert!(a.re.contains(10.0 / 92.0));
        let l = pc.lambda1.eval(Interval::ONE).unwrap();
        assert!(l.re.contains(40.0 / 129.0));
        let l2 = pc.lambda2.eval(Interval::point(-1.0)).unwrap();
        assert!(l2.re.contains(41.0 / 92.0));
        assert!(pc.delta1.contains(0.2) && pc.delta2.contains(0.5));
        assert!(p.validate().is_ok());
    }

    #[test]
    fn degenerate_kappa_is_constant() {
        let mut p = ModelParams::reference();
        p.kappa2 = p.kappa1;
        let pc = build_param_curves(&p);
        assert!(pc.alpha1.coeffs[1].contains(0.0, 0.0));
        assert!(pc.alpha1.coeffs[0].re.contains(10.0 / 92.0));
    }

    #[test]
    fn validate_rejects_bad_parameters() {
        let mut p = ModelParams::reference();
        p.d1 = Interval::point(1.5);
        assert!(p.validate().is_err());
        let mut p = ModelParams::reference();
        p.kappa1 = Interval::point(5.0);
        assert!(p.validate().is_err());
    }

    #[test]
    fn logistic_factor_equilibrium() {
        let pc = build_param_curves(&ModelParams::reference());
        let f = vector_field(&pc, &cs(0.0), &cs(0.0), &const_u([0.0, 0.0, 1.0])).unwrap();
        for j in 0..3 {
            assert!(f.0[j].get(0, 0).contains_zero());
        }
    }

    #[test]
    fn decoupled_rate() {
        let pc = build_param_curves(&ModelParams::reference());
        let s = 0.6;
        let f = vector_field(&pc, &cs(0.0), &cs(0.0), &const_u([1.0, 1.0, s])).unwrap();
        let (al, la) = pc.at(0, 0.0);
        let expect = 0.2 * (s - la) / (s + al);
        // f_1 is a series in eta; its value at eta = 0
        let v = f.0[0].mode(0).eval(Interval::ZERO).unwrap();
        assert!(v.re.inflate(1e-12).contains(expect), "{v:?} {expect}");
    }

    #[test]
    fn jacobian_structure() {
        let pc = build_param_curves(&ModelParams::reference());
        let j = jacobian_u(&pc, &cs(0.0), &cs(0.0), &const_u([0.3, 0.4, 0.5])).unwrap();
        for (a, b) in [(0, 1), (1, 0), (2, 0), (2, 1)] {
            assert!(j[a][b].coeffs.iter().all(|c| c.contains_zero()), "entry {a},{b}");
        }
    }

    #[test]
    fn point_jet_matches_finite_differences() {
        let field = PredatorPrey::new(&ModelParams::reference());
        let z = [0.1, 0.2];
        let u = [0.3, 0.4, 0.25];
        let jet = field.point(0.0, 0.3, z, u);
        let h = 1e-6;
        for j in 0..3 {
            let mut up = u;
            let mut dn = u;
            up[j] += h;
            dn[j] -= h;
            let fp = field.point(0.0, 0.3, z, up).f;
            let fm = field.point(0.0, 0.3, z, dn).f;
            for i in 0..3 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - jet.du[i][j]).abs() <= 1e-6 * (1.0 + fd.abs()));
            }
        }
        for j in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[j] += h;
            zm[j] -= h;
            let fd = (field.point(0.0, 0.3, zp, u).f[2] - field.point(0.0, 0.3, zm, u).f[2]) / (2.0 * h);
            assert!((fd - jet.dz[2][j]).abs() <= 1e-6);
        }
    }

    #[test]
    fn enclosure_contains_point_values() {
        let field = PredatorPrey::new(&ModelParams::reference());
        let nu = 1.05;
        let mut u3 = FcArr::zeros(1, 1);
        u3.set(0, 0, Complex64::new(0.5, 0.0));
        u3.set(1, 0, Complex64::new(0.05, 0.0));
        u3.set(0, 1, Complex64::new(0.1, 0.05));
        u3.set(0, -1, Complex64::new(0.1, -0.05));
        let mut u1 = FcArr::zeros(0, 1);
        u1.set(0, 0, Complex64::new(0.7, 0.0));
        u1.set(0, 1, Complex64::new(0.0, 0.2));
        u1.set(0, -1, Complex64::new(0.0, -0.2));
        let u2 = FcArr::cheb_real(&[0.4, 0.1]);
        let ub = [FcBall::exact(u1.clone(), nu), FcBall::exact(u2.clone(), nu), FcBall::exact(u3.clone(), nu)];
        let z = [FcBall::exact(FcArr::cheb_real(&[0.2]), nu), FcBall::exact(FcArr::cheb_real(&[0.3, 0.05]), nu)];
        let inv = certify_reciprocals(&field, &ub, 16, 24).unwrap();
        let fb = field.enclose(&z, &ub, &inv, Prec::Compensated);
        for &(t, eta) in &[(0.0, 0.0), (1.0, -0.7), (2.5, 0.9)] {
            let uv = [u1.eval_f(t, eta).re, u2.eval_f(t, eta).re, u3.eval_f(t, eta).re];
            let zv = [0.2, 0.3 + 0.1 * eta];
            let jet = field.point(t, eta, zv, uv);
            for i in 0..3 {
                // sup norm is bounded by the weighted norm
                let d = (fb.f[i].c.eval_f(t, eta).re - jet.f[i]).abs();
                assert!(d <= fb.f[i].err + 1e-13, "f{i}: {d} vs {}", fb.f[i].err);
                for j in 0..3 {
                    let d = (fb.du[i][j].c.eval_f(t, eta).re - jet.du[i][j]).abs();
                    assert!(d <= fb.du[i][j].err + 1e-13);
                }
            }
        }
    }

    #[test]
    fn d2_monotone_in_radius() {
        let pc = build_param_curves(&ModelParams::reference());
        let u = const_u([0.3, 0.4, 0.5]);
        let a = second_derivative_norms(&pc, 0.01, &cs(3.0), &cs(0.1), &cs(0.1), &u, 1.1).unwrap();
        let b = second_derivative_norms(&pc, 0.1, &cs(3.0), &cs(0.1), &cs(0.1), &u, 1.1).unwrap();
        assert!(b.total >= a.total);
        for (x, y) in a.terms.iter().zip(&b.terms) {
            assert!(y.1 >= x.1);
        }
    }

    #[test]
    fn d2_degenerate_point_data() {
        // u_3 = lambda = alpha = 1 (constant), u_1 = 0, R = 0: d_tau grad(tau f_1) vanishes.
        let mut p = ModelParams::reference();
        p.a1 = Interval::point(92.0);
        p.kappa2 = p.kappa1;
        // lambda_1 = a d/((m-d) kappa) = 1 with d = 0.5, m = 1, a = 92
        p.d1 = Interval::point(0.5);
        let pc = build_param_curves(&p);
        let field = PredatorPrey { curves: pc };
        let nu = 1.1;
        let ub = [FcBall::zero(nu), FcBall::exact(FcArr::cheb_real(&[0.5]), nu), FcBall::exact(FcArr::cheb_real(&[1.0]), nu)];
        let inv = certify_reciprocals(&field, &ub, 4, 0).unwrap();
        let table = field.d2_table(&FcBall::exact(FcArr::cheb_real(&[1.0]), nu), &[FcBall::zero(nu), FcBall::zero(nu)], &ub, &inv, 0.0).unwrap();
        // the f_1 part of the tau column is zero, so the tau column equals the f_2 and f_3 parts only
        assert!(table.total.is_finite());
        let lm = ub[2].sub(&FcBall::exact(FcArr::cheb_real(&[1.0]), nu)).norm_up();
        assert_eq!(lm, 0.0);
    }

    #[test]
    fn interchange_symmetry() {
        let p = ModelParams::reference();
        let a = PredatorPrey::new(&p);
        let b = PredatorPrey::new(&p.swapped());
        let ja = a.point(0.0, 0.2, [0.1, 0.3], [0.4, 0.6, 0.5]);
        let jb = b.point(0.0, 0.2, [0.3, 0.1], [0.6, 0.4, 0.5]);
        assert_eq!(ja.f[0], jb.f[1]);
        assert_eq!(ja.f[1], jb.f[0]);
        assert!((ja.f[2] - jb.f[2]).abs() < 1e-15);
    }

    #[test]
    fn toy_solution_is_exact_zero() {
        let sol = LinearToy::reference_solution(2, 2);
        let toy = LinearToy::with_solution(&sol);
        for &(t, eta) in &[(0.0, 0.0), (0.7, -0.4), (3.0, 1.0)] {
            let u = [sol.u[0].eval_f(t, eta).re, sol.u[1].eval_f(t, eta).re, sol.u[2].eval_f(t, eta).re];
            let z = [crate::seqspace::fcarr::cheb_eval_r(&sol.zeta[0], eta), crate::seqspace::fcarr::cheb_eval_r(&sol.zeta[1], eta)];
            let f = toy.point(t, eta, z, u).f;
            // d_t u at this point, by differentiating the Fourier series
            for j in 0..3 {
                let h = 1e-5;
                let dudt = (sol.u[j].eval_f(t + h, eta).re - sol.u[j].eval_f(t - h, eta).re) / (2.0 * h);
                assert!((dudt - f[j]).abs() < 1e-9, "{j}: {dudt} {}", f[j]);
            }
            for j in 0..2 {
                assert!((sol.u[j].eval_f(0.0, eta).re - 1.0).abs() < 1e-15);
            }
        }
    }
}
