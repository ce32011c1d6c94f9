//! Checks performed once the branch is enclosed: real-valuedness, scalar
//! enclosures, monotonicity of the predator scalings near the boundary,
//! location of the two boundary crossings and conversion back to the
//! original variables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{add_ru, mul_ru, pi, Interval};
use crate::model::{eta_of_kappa, kappa_of_eta, ModelParams};
use crate::seqspace::ChebSeq;
use crate::zero_problem::{is_sigma_fixed, BranchPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
    Undetermined,
}

/// Exact invariance of the coefficients under the conjugation symmetry.
pub fn check_sigma_fixed(chi: &BranchPoint) -> bool {
    is_sigma_fixed(chi)
}

/// Real part of `bar(eta)` inflated by `r`.
pub fn enclose_scalar(bar: &ChebSeq, r: f64, eta: Interval) -> Result<Interval> {
    let v = eval_trig(bar, eta)?;
    Ok(v.inflate(r))
}

/// `psi_0 + sum 2 psi_n cos(n theta)` with `theta = acos(eta)`.
///
/// On a panel this is much tighter than an interval Clenshaw recurrence: each
/// term widens only by `n` times the width of `theta`.
fn eval_trig(bar: &ChebSeq, eta: Interval) -> Result<Interval> {
    if eta.lo() < -1.0 || eta.hi() > 1.0 {
        return Err(Error::DomainError("eta outside [-1, 1]"));
    }
    if eta.is_point() {
        return Ok(bar.eval(eta)?.re);
    }
    let theta = eta.acos()?;
    let two = Interval::point(2.0);
    let mut s = bar.coeffs[0].re;
    for (n, c) in bar.coeffs.iter().enumerate().skip(1) {
        if c.re.lo() == 0.0 && c.re.hi() == 0.0 {
            continue;
        }
        s = s + two * c.re * (theta * Interval::point(n as f64)).cos();
    }
    Ok(s)
}

/// Upper bound of `sum_{n > N} n nu^{-n} = ((nu - 1) N + nu) / ((nu - 1)^2 nu^N)`.
fn derivative_tail(nu: f64, n: usize) -> Interval {
    let nu_i = Interval::point(nu);
    let nm1 = nu_i - Interval::ONE;
    let num = nm1 * Interval::point(n as f64) + nu_i;
    let den = nm1.sqr() * nu_i.powi(n as u32);
    num / den
}

/// Sign of `d psi / d eta` over `eta` for every `psi` within `r` of `bar`.
///
/// `d psi/d eta = sum n psi_n sin(n theta) / sin(theta)` with ordinary
/// coefficients `psi_n`, so on the open interval only the numerator matters.
pub fn derivative_sign(bar: &ChebSeq, r: f64, nu: f64, n_trunc: usize, eta: Interval) -> Sign {
    if nu <= 1.0 || eta.lo() <= -1.0 || eta.hi() >= 1.0 {
        return Sign::Undetermined;
    }
    let Ok(theta) = eta.acos() else { return Sign::Undetermined };
    let n_top = n_trunc.max(bar.degree());
    let two = Interval::point(2.0);
    let mut s = Interval::ZERO;
    let mut weights = 0.0;
    for n in 1..=n_top {
        let nn = Interval::point(n as f64);
        let sn = (theta * nn).sin();
        weights = add_ru(weights, mul_ru(n as f64, sn.mag()));
        if let Some(c) = bar.coeffs.get(n) {
            s = s + nn * two * c.re * sn;
        }
    }
    let err = mul_ru(r, add_ru(weights, derivative_tail(nu, n_top).hi()));
    let s = s.inflate(err);
    if s.lo() > 0.0 {
        Sign::Positive
    } else if s.hi() < 0.0 {
        Sign::Negative
    } else {
        Sign::Undetermined
    }
}

/// Settings for [`verify_crossings`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossingConfig {
    /// width of `[h^-, h^+]` around each float root
    pub h_gap: f64,
    /// smallest panel before giving up
    pub min_panel: f64,
}

impl Default for CrossingConfig {
    fn default() -> Self {
        CrossingConfig { h_gap: 0.04, min_panel: (2.0f64).powi(-20) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub h1_minus: f64,
    pub h1_plus: f64,
    pub h2_minus: f64,
    pub h2_plus: f64,
    /// certified sign change of `zeta_2` and of `zeta_1`
    pub eta_hat_1: Interval,
    pub eta_hat_2: Interval,
    pub kappa_hat_1: Interval,
    pub kappa_hat_2: Interval,
    /// both scalings positive on `[h1^+, h2^-]`
    pub positive: bool,
    pub panels: usize,
}

fn float_eval(c: &[f64], eta: f64) -> f64 {
    let t = crate::seqspace::fcarr::cheb_t_values(c.len() - 1, eta);
    c.iter().zip(&t).enumerate().map(|(n, (a, b))| if n == 0 { a * b } else { 2.0 * a * b }).sum()
}

/// Root of a float Chebyshev series with a sign change on `[a, b]`.
fn float_root(c: &[f64], mut a: f64, mut b: f64) -> f64 {
    let fa = float_eval(c, a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (float_eval(c, m) < 0.0) == (fa < 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// First sign change of `c` scanning from `start` in direction `dir`.
fn scan_root(c: &[f64], start: f64, dir: f64) -> Option<f64> {
    const STEPS: usize = 4096;
    let h = 2.0 / STEPS as f64;
    let mut x0 = start;
    let mut f0 = float_eval(c, x0);
    for i in 1..=STEPS {
        let x1 = start + dir * h * i as f64;
        let f1 = float_eval(c, x1);
        if (f0 < 0.0) != (f1 < 0.0) {
            return Some(if dir > 0.0 { float_root(c, x0, x1) } else { float_root(c, x1, x0) });
        }
        x0 = x1;
        f0 = f1;
    }
    None
}

/// Round to a multiple of `2^-20`.
fn grid_round(x: f64) -> f64 {
    let s = (2.0f64).powi(20);
    (x * s).round() / s
}

/// Dyadic subdivision of `[a, b]` until `ok` holds on each panel.
fn certify_panels(a: f64, b: f64, min_panel: f64, what: &str, ok: impl Fn(Interval) -> bool) -> Result<usize> {
    let mut stack = vec![(a, b)];
    let mut count = 0;
    while let Some((lo, hi)) = stack.pop() {
        if ok(Interval::new(lo, hi)) {
            count += 1;
            continue;
        }
        if hi - lo <= min_panel {
            return Err(Error::CrossingUnverified(format!("{what} on [{lo:e}, {hi:e}]")));
        }
        let m = 0.5 * (lo + hi);
        stack.push((m, hi));
        stack.push((lo, m));
    }
    Ok(count)
}

/// Shrink a bracket whose endpoints have certified opposite signs.
fn refine_bracket(bar: &ChebSeq, r: f64, mut lo: f64, mut hi: f64, neg_at_lo: bool) -> Result<Interval> {
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        let v = enclose_scalar(bar, r, Interval::point(m))?;
        let neg = v.hi() < 0.0;
        let pos = v.lo() > 0.0;
        if !(neg || pos) {
            // find the far edges of the undetermined zone
            let (mut a, mut b) = (lo, m);
            for _ in 0..100 {
                let c = 0.5 * (a + b);
                if c <= a || c >= b {
                    break;
                }
                if definite(bar, r, c)? {
                    a = c;
                } else {
                    b = c;
                }
            }
            lo = a;
            let (mut a, mut b) = (m, hi);
            for _ in 0..100 {
                let c = 0.5 * (a + b);
                if c <= a || c >= b {
                    break;
                }
                if definite(bar, r, c)? {
                    b = c;
                } else {
                    a = c;
                }
            }
            hi = b;
            break;
        }
        if neg == neg_at_lo {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(Interval::new(lo, hi))
}

fn definite(bar: &ChebSeq, r: f64, eta: f64) -> Result<bool> {
    let v = enclose_scalar(bar, r, Interval::point(eta))?;
    Ok(v.lo() > 0.0 || v.hi() < 0.0)
}

/// Certifies the interior positivity and the two boundary crossings.
///
/// `zeta_2` must change sign from negative to positive near `eta = -1` and
/// `zeta_1` from positive to negative near `eta = 1`.
pub fn verify_crossings(chi: &BranchPoint, r: f64, nu: f64, p: &ModelParams, cfg: &CrossingConfig) -> Result<CrossingReport> {
    let z1 = &chi.zeta1;
    let z2 = &chi.zeta2;
    let (c1, c2) = (z1.mid_f64(), z2.mid_f64());
    let root1 = scan_root(&c2, -1.0, 1.0).ok_or_else(|| Error::CrossingUnverified("zeta_2 has no sign change".into()))?;
    let root2 = scan_root(&c1, 1.0, -1.0).ok_or_else(|| Error::CrossingUnverified("zeta_1 has no sign change".into()))?;
    let g = 0.5 * cfg.h_gap;
    let lim = 1.0 - (2.0f64).powi(-20);
    let h1m = grid_round(root1 - g).max(-lim);
    let h1p = grid_round(root1 + g);
    let h2m = grid_round(root2 - g);
    let h2p = grid_round(root2 + g).min(lim);
    if !(h1m < h1p && h1p <= 0.0 && 0.0 <= h2m && h2m < h2p) {
        return Err(Error::CrossingUnverified(format!("h-values out of order: {h1m} {h1p} {h2m} {h2p}")));
    }
    let n = chi.n_max();
    if enclose_scalar(z2, r, Interval::point(h1m))?.hi() >= 0.0 {
        return Err(Error::CrossingUnverified(format!("zeta_2 < 0 at h1- = {h1m}")));
    }
    if enclose_scalar(z1, r, Interval::point(h2p))?.hi() >= 0.0 {
        return Err(Error::CrossingUnverified(format!("zeta_1 < 0 at h2+ = {h2p}")));
    }
    let mut panels = 0;
    panels += certify_panels(h1m, h1p, cfg.min_panel, "d zeta_2 / d eta > 0", |e| derivative_sign(z2, r, nu, n, e) == Sign::Positive)?;
    panels += certify_panels(h2m, h2p, cfg.min_panel, "d zeta_1 / d eta < 0", |e| derivative_sign(z1, r, nu, n, e) == Sign::Negative)?;
    for (j, z) in [z1, z2].into_iter().enumerate() {
        let what = format!("zeta_{} > 0", j + 1);
        panels += certify_panels(h1p, h2m, cfg.min_panel, &what, |e| enclose_scalar(z, r, e).map(|v| v.lo() > 0.0).unwrap_or(false))?;
    }
    let eta_hat_1 = refine_bracket(z2, r, h1m, h1p, true)?;
    let eta_hat_2 = refine_bracket(z1, r, h2m, h2p, false)?;
    Ok(CrossingReport {
        h1_minus: h1m,
        h1_plus: h1p,
        h2_minus: h2m,
        h2_plus: h2p,
        eta_hat_1,
        eta_hat_2,
        kappa_hat_1: kappa_of_eta(p, eta_hat_1)?,
        kappa_hat_2: kappa_of_eta(p, eta_hat_2)?,
        positive: true,
        panels,
    })
}

/// Enclosure of the unscaled solution at `(t, kappa)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OriginalPoint {
    pub x1: Interval,
    pub x2: Interval,
    pub s: Interval,
    pub period: Interval,
}

/// `X_j = kappa zeta_j (gamma y_j / m_j) u_j(gamma t / tau)`, `S = kappa u_3(gamma t / tau)`,
/// minimal period `2 pi tau / gamma`, all at `eta(kappa)`.
pub fn to_original(chi: &BranchPoint, r: f64, p: &ModelParams, kappa: Interval, t: Interval) -> Result<OriginalPoint> {
    let lo = p.kappa1.lo().min(p.kappa2.lo());
    let hi = p.kappa1.hi().max(p.kappa2.hi());
    if kappa.lo() < lo || kappa.hi() > hi {
        return Err(Error::DomainError("kappa outside [kappa1, kappa2]"));
    }
    let eta = eta_of_kappa(p, kappa)?.intersect(&Interval::new(-1.0, 1.0)).ok_or(Error::DomainError("eta outside [-1, 1]"))?;
    let tau = chi.tau.eval(eta)?.re.inflate(r);
    let s_arg = (p.gamma * t).try_div(tau)?;
    let u = |j: usize| -> Result<Interval> { Ok(chi.u.0[j].eval(s_arg, eta)?.re.inflate(r)) };
    let zeta = [chi.zeta1.eval(eta)?.re.inflate(r), chi.zeta2.eval(eta)?.re.inflate(r)];
    let x = |j: usize| -> Result<Interval> { Ok(kappa * zeta[j] * (p.gamma * p.y(j)).try_div(p.m(j))? * u(j)?) };
    Ok(OriginalPoint { x1: x(0)?, x2: x(1)?, s: kappa * u(2)?, period: (Interval::point(2.0) * pi() * tau).try_div(p.gamma)? })
}

/// One row of the `(kappa, period, zeta_1, zeta_2)` table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSample {
    pub kappa: Interval,
    pub period: Interval,
    pub zeta1: Interval,
    pub zeta2: Interval,
}

/// Samples at `count` equally spaced `kappa` values in `[kappa1, kappa2]`.
pub fn branch_samples(chi: &BranchPoint, r: f64, p: &ModelParams, count: usize) -> Result<Vec<BranchSample>> {
    let (k1, k2) = (p.kappa1.mid(), p.kappa2.mid());
    (0..count)
        .map(|i| {
            let s = if count <= 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
            let kappa = Interval::point(k1 + (k2 - k1) * s).intersect(&Interval::new(k1.min(k2), k1.max(k2))).unwrap();
            let eta = eta_of_kappa(p, kappa)?.intersect(&Interval::new(-1.0, 1.0)).ok_or(Error::DomainError("eta outside [-1, 1]"))?;
            let tau = enclose_scalar(&chi.tau, r, eta)?;
            Ok(BranchSample {
                kappa,
                period: (Interval::point(2.0) * pi() * tau).try_div(p.gamma)?,
                zeta1: enclose_scalar(&chi.zeta1, r, eta)?,
                zeta2: enclose_scalar(&chi.zeta2, r, eta)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t1(sign: f64) -> ChebSeq {
        ChebSeq::from_standard(&[0.0, sign])
    }

    #[test]
    fn enclose_scalar_examples() {
        let c = ChebSeq::from_f64(&[3.0]);
        let v = enclose_scalar(&c, 0.1, Interval::point(0.3)).unwrap();
        assert!(v.contains(2.9) && v.contains(3.1) && v.width() < 0.2 + 1e-15);
        let v = enclose_scalar(&t1(1.0), 0.0, Interval::point(0.25)).unwrap();
        assert_eq!(v, Interval::point(0.25));
    }

    #[test]
    fn panel_evaluation_contains_values() {
        let c = ChebSeq::from_standard(&[0.3, -1.2, 0.7, 0.05, -0.4]);
        let panel = Interval::new(-0.37, -0.21);
        let v = enclose_scalar(&c, 0.0, panel).unwrap();
        for i in 0..=20 {
            let e = -0.37 + 0.16 * i as f64 / 20.0;
            assert!(v.contains(float_eval(&c.mid_f64(), e)));
        }
    }

    #[test]
    fn derivative_sign_examples() {
        let e = Interval::point(0.0);
        assert_eq!(derivative_sign(&t1(1.0), 1e-12, 1.1, 1, e), Sign::Positive);
        assert_eq!(derivative_sign(&t1(-1.0), 1e-12, 1.1, 1, e), Sign::Negative);
        assert_eq!(derivative_sign(&t1(1.0), 10.0, 1.1, 1, e), Sign::Undetermined);
        assert_eq!(derivative_sign(&t1(1.0), 1e-12, 1.0, 1, e), Sign::Undetermined);
    }

    #[test]
    fn derivative_sign_agrees_with_slope() {
        let c = ChebSeq::from_standard(&[0.1, 0.8, -0.3, 0.1, 0.02]);
        let f = c.mid_f64();
        for i in 1..40 {
            let e = -0.975 + 0.05 * i as f64;
            let h = 1e-6;
            let slope = (float_eval(&f, e + h) - float_eval(&f, e - h)) / (2.0 * h);
            match derivative_sign(&c, 1e-10, 1.05, 4, Interval::point(e)) {
                Sign::Positive => assert!(slope > 0.0),
                Sign::Negative => assert!(slope < 0.0),
                Sign::Undetermined => {}
            }
        }
    }

    fn synthetic() -> (BranchPoint, ModelParams) {
        use crate::seqspace::{FcArr, FourierChebSeq, UVec};
        let u = FourierChebSeq::from_fcarr(&FcArr::zeros(1, 1));
        let chi = BranchPoint {
            tau: ChebSeq::from_f64(&[2.0]),
            zeta1: ChebSeq::from_standard(&[0.9, -1.0]),
            zeta2: ChebSeq::from_standard(&[0.9, 1.0]),
            u: UVec([u.clone(), u.clone(), u]),
        };
        (chi, ModelParams::reference())
    }

    #[test]
    fn affine_crossings_are_bracketed() {
        let (chi, p) = synthetic();
        let rep = verify_crossings(&chi, 1e-12, 1.1, &p, &CrossingConfig::default()).unwrap();
        assert!(rep.eta_hat_1.contains(-0.9) && rep.eta_hat_1.width() < 1e-9);
        assert!(rep.eta_hat_2.contains(0.9) && rep.eta_hat_2.width() < 1e-9);
        assert!(rep.h1_minus < rep.h1_plus && rep.h1_plus <= 0.0 && rep.h2_minus < rep.h2_plus);
        let k = kappa_of_eta(&p, Interval::point(-0.9)).unwrap();
        assert!(rep.kappa_hat_1.contains(k.mid()));
        assert!(rep.positive);
    }

    #[test]
    fn crossing_fails_for_large_radius() {
        let (chi, p) = synthetic();
        let e = verify_crossings(&chi, 0.5, 1.1, &p, &CrossingConfig::default()).unwrap_err();
        assert!(matches!(e, Error::CrossingUnverified(_)));
    }

    #[test]
    fn kappa_endpoints_and_period() {
        let (chi, p) = synthetic();
        assert!(eta_of_kappa(&p, p.kappa1).unwrap().contains(-1.0));
        assert!(eta_of_kappa(&p, p.kappa2).unwrap().contains(1.0));
        let o = to_original(&chi, 0.0, &p, Interval::point(110.0), Interval::ZERO).unwrap();
        let want = 2.0 * std::f64::consts::PI * 2.0 / p.gamma.mid();
        assert!(o.period.inflate(1e-12).contains(want));
    }

    #[test]
    fn samples_have_requested_count() {
        let (chi, p) = synthetic();
        let s = branch_samples(&chi, 1e-10, &p, 17).unwrap();
        assert_eq!(s.len(), 17);
        assert!(s[0].kappa.contains(p.kappa1.mid()));
    }
}
