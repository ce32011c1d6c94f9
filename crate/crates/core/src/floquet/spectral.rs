//! Location of the Floquet exponents from an enclosure of `C(eta)`.

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::float::{eigenbasis3, eigenvalues3, FloquetBranch};
use crate::error::{Error, Result};
use crate::interval::{add_ru, div_ru, mul_ru, sub_rd, Interval, RectComplex};
use crate::model::{kappa_of_eta, ModelParams};

type C = Complex64;
pub type IMat3 = [[RectComplex; 3]; 3];

/// Enclosure of `psi_0 + sum 2 psi_n cos(n theta)` over `eta = cos theta`.
pub fn enclose_series(c: &[f64], eta: Interval) -> Result<Interval> {
    if eta.lo() < -1.0 || eta.hi() > 1.0 {
        return Err(Error::DomainError("eta outside [-1, 1]"));
    }
    let theta = eta.acos()?;
    let two = Interval::point(2.0);
    let mut s = Interval::point(c[0]);
    for (n, &x) in c.iter().enumerate().skip(1) {
        if x != 0.0 {
            s = s + two * Interval::point(x) * (theta * Interval::point(n as f64)).cos();
        }
    }
    Ok(s)
}

/// Entrywise enclosure of every `C` within `r` of the float data on `eta`.
pub fn c_enclosure(fb: &FloquetBranch, r: f64, eta: Interval) -> Result<IMat3> {
    let mut m = [[RectComplex::ZERO; 3]; 3];
    for l in 0..3 {
        for j in 0..3 {
            let re = enclose_series(&fb.c[l][j], eta)?.inflate(r);
            m[l][j] = RectComplex::new(re, Interval::symmetric(r));
        }
    }
    Ok(m)
}

fn point(z: C) -> RectComplex {
    RectComplex::point(z.re, z.im)
}

fn to_imat(a: &Matrix3<C>) -> IMat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| point(a[(i, j)])))
}

fn imul(a: &IMat3, b: &IMat3) -> IMat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).fold(RectComplex::ZERO, |s, k| s + a[i][k] * b[k][j])))
}

fn mid(a: &IMat3) -> Matrix3<C> {
    Matrix3::from_fn(|i, j| {
        let (re, im) = a[i][j].mid();
        C::new(re, im)
    })
}

/// `||I - a||_1` from above.
fn defect_one_norm(a: &IMat3) -> f64 {
    (0..3)
        .map(|j| {
            (0..3).fold(0.0, |s, i| {
                let e = if i == j { RectComplex::ONE - a[i][j] } else { -a[i][j] };
                add_ru(s, e.abs_upper())
            })
        })
        .fold(0.0, f64::max)
}

/// `||I - a||_inf` from above.
fn defect_inf_norm(a: &IMat3) -> f64 {
    (0..3)
        .map(|i| {
            (0..3).fold(0.0, |s, j| {
                let e = if i == j { RectComplex::ONE - a[i][j] } else { -a[i][j] };
                add_ru(s, e.abs_upper())
            })
        })
        .fold(0.0, f64::max)
}

/// Entrywise enclosure of `xi^{-1}`.
///
/// With `X` a float inverse and `delta = ||I - X xi||_inf < 1`,
/// `||xi^{-1} - X||_inf <= delta ||X||_inf / (1 - delta)`.
pub fn inverse_enclosure(xi: &Matrix3<C>) -> Result<IMat3> {
    let x = xi.try_inverse().ok_or(Error::XiNotInvertible)?;
    let xi_i = to_imat(&x);
    let delta = defect_inf_norm(&imul(&xi_i, &to_imat(xi)));
    if !(delta < 1.0) {
        return Err(Error::XiNotInvertible);
    }
    let xn = (0..3).map(|i| (0..3).fold(0.0, |s, j| add_ru(s, point(x[(i, j)]).abs_upper()))).fold(0.0, f64::max);
    let rad = div_ru(mul_ru(delta, xn), sub_rd(1.0, delta));
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| xi_i[i][j].inflate(rad))))
}

/// Closed disc `|z - center| <= radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub re: f64,
    pub im: f64,
    pub radius: f64,
}

impl Disc {
    pub fn contains(&self, re: f64, im: f64) -> bool {
        let d = RectComplex::point(re, im) - RectComplex::point(self.re, self.im);
        d.abs_upper() <= self.radius
    }

    pub fn disjoint(&self, other: &Disc) -> bool {
        let d = RectComplex::point(self.re, self.im) - RectComplex::point(other.re, other.im);
        d.abs_lower() > add_ru(self.radius, other.radius)
    }

    /// Enclosure of the real parts of the members.
    pub fn re_range(&self) -> Interval {
        Interval::point(self.re).inflate(self.radius)
    }

    fn hull(&self) -> Rect {
        let re = self.re_range();
        let im = Interval::point(self.im).inflate(self.radius);
        Rect { re_lo: re.lo(), re_hi: re.hi(), im_lo: im.lo(), im_hi: im.hi() }
    }
}

/// Row discs of `xi^{-1} m xi`.
pub fn gershgorin(m: &IMat3, xi: &Matrix3<C>) -> Result<[Disc; 3]> {
    let inv = inverse_enclosure(xi)?;
    let t = imul(&imul(&inv, m), &to_imat(xi));
    Ok(std::array::from_fn(|i| {
        let (re, im) = t[i][i].mid();
        let mut radius = (t[i][i] - RectComplex::point(re, im)).abs_upper();
        for j in 0..3 {
            if j != i {
                radius = add_ru(radius, t[i][j].abs_upper());
            }
        }
        Disc { re, im, radius }
    }))
}

/// `z I - m` is invertible for every member, shown by `||I - X (z I - m)||_1 < 1`.
pub fn resolvent_ok(m: &IMat3, z: RectComplex) -> bool {
    let a: IMat3 = std::array::from_fn(|i| std::array::from_fn(|j| if i == j { z - m[i][j] } else { -m[i][j] }));
    let Some(x) = mid(&a).try_inverse() else {
        return false;
    };
    defect_one_norm(&imul(&to_imat(&x), &a)) < 1.0
}

/// Axis-parallel closed rectangle in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl Rect {
    pub fn contains_disc(&self, d: &Disc) -> bool {
        let h = d.hull();
        h.re_lo > self.re_lo && h.re_hi < self.re_hi && h.im_lo > self.im_lo && h.im_hi < self.im_hi
    }

    pub fn disjoint_disc(&self, d: &Disc) -> bool {
        let h = d.hull();
        h.re_hi < self.re_lo || h.re_lo > self.re_hi || h.im_hi < self.im_lo || h.im_lo > self.im_hi
    }

    /// Boundary as thin boxes, each side cut into pieces of length at most `step`.
    pub fn boundary(&self, step: f64) -> Vec<RectComplex> {
        let mut out = Vec::new();
        let mut side = |a: f64, b: f64, fixed: f64, horizontal: bool| {
            let n = ((b - a) / step).ceil().max(1.0) as usize;
            for i in 0..n {
                let lo = a + (b - a) * i as f64 / n as f64;
                let hi = if i + 1 == n { b } else { a + (b - a) * (i + 1) as f64 / n as f64 };
                let s = Interval::new(lo, hi);
                let f = Interval::point(fixed);
                out.push(if horizontal { RectComplex::new(s, f) } else { RectComplex::new(f, s) });
            }
        };
        side(self.re_lo, self.re_hi, self.im_lo, true);
        side(self.re_lo, self.re_hi, self.im_hi, true);
        side(self.im_lo, self.im_hi, self.re_lo, false);
        side(self.im_lo, self.im_hi, self.re_hi, false);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    /// float samples per unit of `eta` for the exponent ranges
    pub samples: usize,
    /// boundary piece length
    pub step: f64,
    pub min_eta_width: f64,
    pub min_z_width: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig { samples: 400, step: 0.05, min_eta_width: 1.0 / 65536.0, min_z_width: 1e-7 }
    }
}

fn split(z: RectComplex) -> (RectComplex, RectComplex) {
    let (re, im) = (z.re, z.im);
    if re.width() >= im.width() {
        let m = re.mid();
        (RectComplex::new(Interval::new(re.lo(), m), im), RectComplex::new(Interval::new(m, re.hi()), im))
    } else {
        let m = im.mid();
        (RectComplex::new(re, Interval::new(im.lo(), m)), RectComplex::new(re, Interval::new(m, im.hi())))
    }
}

/// Rough float bound of `|dC/deta|` used to decide which dimension to split.
fn slope(fb: &FloquetBranch) -> f64 {
    let mut s: f64 = 0.0;
    for row in &fb.c {
        for c in row {
            let d: f64 = c.iter().enumerate().map(|(n, x)| 2.0 * (n * n) as f64 * x.abs()).sum();
            s = s.max(d);
        }
    }
    s
}

/// No exponent of any `C` within `r` of the data lies on `rect`'s boundary
/// for `eta` in `[a, b]`. Returns the number of panels checked.
pub fn verify_boundary(fb: &FloquetBranch, r: f64, a: f64, b: f64, rect: &Rect, cfg: &SpectralConfig) -> Result<usize> {
    let lip = slope(fb).max(1e-300);
    let mut stack: Vec<(f64, f64, RectComplex)> = rect.boundary(cfg.step).into_iter().map(|z| (a, b, z)).collect();
    let mut count = 0;
    while let Some((lo, hi, z)) = stack.pop() {
        count += 1;
        let m = c_enclosure(fb, r, Interval::new(lo, hi))?;
        if resolvent_ok(&m, z) {
            continue;
        }
        let zw = z.re.width().max(z.im.width());
        let ew = hi - lo;
        let eta_splittable = ew > cfg.min_eta_width;
        let z_splittable = zw > cfg.min_z_width;
        if eta_splittable && (!z_splittable || ew * lip >= zw) {
            let m = 0.5 * (lo + hi);
            stack.push((lo, m, z));
            stack.push((m, hi, z));
        } else if z_splittable {
            let (z1, z2) = split(z);
            stack.push((lo, hi, z1));
            stack.push((lo, hi, z2));
        } else {
            return Err(Error::StabilityUnverified(format!("boundary: eta [{lo:.6}, {hi:.6}], z {:.6}{:+.6}i", z.re.mid(), z.im.mid())));
        }
    }
    Ok(count)
}

/// Float exponents ordered with the trivial one (smallest modulus) first.
pub fn float_exponents(fb: &FloquetBranch, eta: f64) -> [C; 3] {
    let mut ev = eigenvalues3(&fb.c_at(eta));
    let t = (0..3).min_by(|&i, &j| ev[i].norm().total_cmp(&ev[j].norm())).unwrap();
    ev.swap(0, t);
    if ev[1].re > ev[2].re {
        ev.swap(1, 2);
    }
    ev
}

fn sample_etas(a: f64, b: f64, per_unit: usize) -> Vec<f64> {
    let n = (((b - a) * per_unit as f64).ceil() as usize).max(2);
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// Rectangle around the sampled non-trivial exponents.
///
/// Left edge and height get a 20% margin; the right edge sits halfway between
/// the rightmost sample and the imaginary axis.
pub fn omega_from_samples(fb: &FloquetBranch, a: f64, b: f64, cfg: &SpectralConfig) -> Rect {
    let (mut min_re, mut max_re, mut max_im) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for eta in sample_etas(a, b, cfg.samples) {
        let ev = float_exponents(fb, eta);
        for z in &ev[1..] {
            min_re = min_re.min(z.re);
            max_re = max_re.max(z.re);
            max_im = max_im.max(z.im.abs());
        }
    }
    let span = max_re - min_re;
    let im = max_im + 0.2 * max_im.max(span);
    Rect { re_lo: min_re - 0.2 * span, re_hi: 0.5 * max_re, im_lo: -im, im_hi: im }
}

fn local_basis(fb: &FloquetBranch, eta: f64) -> Matrix3<C> {
    let c = fb.c_at(eta);
    eigenbasis3(&c, &eigenvalues3(&c))
}

/// Discs at a point `eta` in the local float eigenbasis, trivial first.
pub fn discs_at(fb: &FloquetBranch, r: f64, eta: f64) -> Result<[Disc; 3]> {
    let m = c_enclosure(fb, r, Interval::point(eta))?;
    let mut d = gershgorin(&m, &local_basis(fb, eta))?;
    let t = (0..3).min_by(|&i, &j| d[i].re.hypot(d[i].im).total_cmp(&d[j].re.hypot(d[j].im))).unwrap();
    d.swap(0, t);
    if d[1].re > d[2].re {
        d.swap(1, 2);
    }
    Ok(d)
}

/// One exponent kept inside `omega` over an `eta` interval at the ends of the branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearBoundary {
    pub eta: Interval,
    pub kappa: Interval,
    pub omega: Rect,
    pub panels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralVerdict {
    /// `eta` where the count is taken
    pub eta_count: f64,
    pub mu_trivial: Disc,
    pub mu1: Disc,
    pub mu2: Disc,
    pub omega: Rect,
    pub stable_eta: Interval,
    pub stable_kappa: Interval,
    pub panels: usize,
    pub near_boundary: Vec<NearBoundary>,
}

/// Two non-trivial exponents with negative real part on `[a, b]`.
///
/// At one `eta` the Gershgorin discs put them inside `omega` and the trivial
/// exponent outside; the resolvent on the boundary of `omega` keeps that count
/// on the whole interval.
pub fn stable_interval(fb: &FloquetBranch, r: f64, a: f64, b: f64, omega: &Rect, cfg: &SpectralConfig) -> Result<(f64, [Disc; 3], usize)> {
    if !(omega.re_hi < 0.0) {
        return Err(Error::StabilityUnverified("omega meets the right half plane".into()));
    }
    let eta0 = if a <= 0.0 && 0.0 <= b { 0.0 } else { 0.5 * (a + b) };
    let m = c_enclosure(fb, r, Interval::point(eta0))?;
    let xi = local_basis(fb, eta0);
    let d = gershgorin(&m, &xi).map_err(|_| Error::StabilityUnverified("step2: basis".into()))?;
    let t = (0..3).min_by(|&i, &j| d[i].re.hypot(d[i].im).total_cmp(&d[j].re.hypot(d[j].im))).unwrap();
    let others: Vec<usize> = (0..3).filter(|&i| i != t).collect();
    let ok = d[t].contains(0.0, 0.0) && omega.disjoint_disc(&d[t]) && others.iter().all(|&i| omega.contains_disc(&d[i]) && d[i].disjoint(&d[t]));
    if !ok {
        return Err(Error::StabilityUnverified("step2".into()));
    }
    let panels = verify_boundary(fb, r, a, b, omega, cfg)?;
    let (o1, o2) = if d[others[0]].re <= d[others[1]].re { (others[0], others[1]) } else { (others[1], others[0]) };
    Ok((eta0, [d[t], d[o1], d[o2]], panels))
}

/// Keep the most negative non-trivial exponent inside its own rectangle on `[a, b]`.
pub fn near_boundary(fb: &FloquetBranch, r: f64, a: f64, b: f64, p: &ModelParams, cfg: &SpectralConfig) -> Result<NearBoundary> {
    let (mut lo, mut hi, mut gap) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    for eta in sample_etas(a, b, cfg.samples.max(50) * 10) {
        let ev = float_exponents(fb, eta);
        let z = ev[1];
        lo = lo.min(z.re);
        hi = hi.max(z.re);
        gap = gap.min((ev[0] - z).norm()).min((ev[2] - z).norm());
    }
    let m = 0.4 * gap;
    let omega = Rect { re_lo: lo - m, re_hi: hi + m, im_lo: -m, im_hi: m };
    if !(omega.re_hi < 0.0) {
        return Err(Error::StabilityUnverified("step3: rectangle meets the right half plane".into()));
    }
    let eta0 = 0.5 * (a + b);
    let d = discs_at(fb, r, eta0).map_err(|_| Error::StabilityUnverified("step3: basis".into()))?;
    let inside: Vec<&Disc> = d.iter().filter(|x| omega.contains_disc(x)).collect();
    let outside = d.iter().filter(|x| omega.disjoint_disc(x)).count();
    if inside.len() != 1 || outside != 2 {
        return Err(Error::StabilityUnverified("step3".into()));
    }
    let panels = verify_boundary(fb, r, a, b, &omega, cfg)?;
    let eta = Interval::new(a, b);
    Ok(NearBoundary { eta, kappa: kappa_of_eta(p, eta)?, omega, panels })
}

/// Steps two and three on the stable interval and both end intervals.
pub fn stability_verdict(
    fb: &FloquetBranch,
    r: f64,
    p: &ModelParams,
    stable: (f64, f64),
    ends: &[(f64, f64)],
    cfg: &SpectralConfig,
) -> Result<SpectralVerdict> {
    let (a, b) = stable;
    let omega = omega_from_samples(fb, a, b, cfg);
    let (eta_count, d, panels) = stable_interval(fb, r, a, b, &omega, cfg)?;
    let near = ends.iter().map(|&(lo, hi)| near_boundary(fb, r, lo, hi, p, cfg)).collect::<Result<Vec<_>>>()?;
    let stable_eta = Interval::new(a, b);
    Ok(SpectralVerdict {
        eta_count,
        mu_trivial: d[0],
        mu1: d[1],
        mu2: d[2],
        omega,
        stable_eta,
        stable_kappa: kappa_of_eta(p, stable_eta)?,
        panels,
        near_boundary: near,
    })
}

/// Real parts of the non-trivial exponents at one point of the branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentBand {
    pub eta: f64,
    pub kappa: Interval,
    pub re_mu1: Interval,
    pub re_mu2: Interval,
}

/// Bands from discs at `count` equally spaced `eta`; points where the local
/// basis is too ill-conditioned are skipped.
pub fn exponent_bands(fb: &FloquetBranch, r: f64, p: &ModelParams, count: usize) -> Result<Vec<ExponentBand>> {
    let mut out = Vec::new();
    for i in 0..count {
        let eta = -1.0 + 2.0 * i as f64 / (count.max(2) - 1) as f64;
        let Ok(d) = discs_at(fb, r, eta) else { continue };
        let (mut r1, mut r2) = (d[1].re_range(), d[2].re_range());
        if !d[1].disjoint(&d[2]) {
            r1 = r1.hull(&r2);
            r2 = r1;
        }
        out.push(ExponentBand { eta, kappa: kappa_of_eta(p, Interval::point(eta))?, re_mu1: r1, re_mu2: r2 });
    }
    Ok(out)
}
