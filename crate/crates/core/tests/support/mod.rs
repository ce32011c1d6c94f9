//! Oracle checks shared by the property suites and the acceptance run.
#![allow(dead_code)]

use nalgebra::Matrix3;
use num_complex::Complex64;
use stablefam_core::contraction::verify_contraction;
use stablefam_core::floquet::spectral::{gershgorin, IMat3};
use stablefam_core::interval::{Interval, RectComplex};
use stablefam_core::seqspace::fcarr::{cheb_eval_r, cheb_interp_r, cheb_nodes};
use stablefam_core::seqspace::kernel::conv;
use stablefam_core::seqspace::{ball_inverse_bound, neumann_inverse_error, ChebSeq, FcArr, FourierChebSeq, Prec};

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn iv(a: f64, b: f64) -> Interval {
    Interval::new(a.min(b), a.max(b))
}

/// Point `x + s (y - x)` for `s in [0, 1]`, clamped into `[x, y]`.
fn inside(i: Interval, s: f64) -> f64 {
    (i.lo() + s * (i.hi() - i.lo())).clamp(i.lo(), i.hi())
}

/// Every operation on `[a0, a1]` and `[b0, b1]` must contain the float result on
/// the sampled members. Float results of the basic operations are between the
/// directed roundings of the exact value, so they must be enclosed exactly.
pub fn interval_ops(a: (f64, f64), b: (f64, f64), s: (f64, f64)) -> Check {
    let (x, y) = (iv(a.0, a.1), iv(b.0, b.1));
    let (p, q) = (inside(x, s.0), inside(y, s.1));
    let fail = |op: &str, v: f64, e: Interval| format!("{op}: {v:e} not in {e:?} for x = {p:e}, y = {q:e}");
    ensure((x + y).contains(p + q), || fail("add", p + q, x + y))?;
    ensure((x - y).contains(p - q), || fail("sub", p - q, x - y))?;
    ensure((x * y).contains(p * q), || fail("mul", p * q, x * y))?;
    ensure((-x).contains(-p), || fail("neg", -p, -x))?;
    ensure(x.sqr().contains(p * p), || fail("sqr", p * p, x.sqr()))?;
    ensure(x.abs().contains(p.abs()), || fail("abs", p.abs(), x.abs()))?;
    if !y.contains_zero() {
        let d = x.try_div(y).map_err(|e| e.to_string())?;
        ensure(d.contains(p / q), || fail("div", p / q, d))?;
    }
    if x.lo() >= 0.0 {
        let r = x.sqrt().map_err(|e| e.to_string())?;
        ensure(r.contains(p.sqrt()), || fail("sqrt", p.sqrt(), r))?;
    }
    ensure(x.sin().contains(p.sin()), || fail("sin", p.sin(), x.sin()))?;
    ensure(x.cos().contains(p.cos()), || fail("cos", p.cos(), x.cos()))?;
    let c = iv(a.0.clamp(-1.0, 1.0), a.1.clamp(-1.0, 1.0));
    let pc = inside(c, s.0);
    let ac = c.acos().map_err(|e| e.to_string())?;
    ensure(ac.contains(pc.acos()), || fail("acos", pc.acos(), ac))?;
    let h = x.hull(&y);
    ensure(h.contains(p) && h.contains(q), || format!("hull {h:?} misses {p:e} or {q:e}"))
}

fn fourier_cheb(n: usize, k: usize, v: &[f64]) -> FcArr {
    let mut a = FcArr::zeros(n, k);
    for (i, c) in a.data.iter_mut().enumerate() {
        *c = Complex64::new(v[2 * i % v.len()], v[(2 * i + 1) % v.len()]);
    }
    a
}

/// `||a b|| <= ||a|| ||b||` in the Chebyshev space.
pub fn banach_cheb(a: &[f64], b: &[f64], nu: f64) -> Check {
    let (x, y) = (ChebSeq::from_f64(a), ChebSeq::from_f64(b));
    let lhs = x.mul(&y).norm(nu);
    let rhs = x.norm(nu) * y.norm(nu);
    ensure(lhs.lo() <= rhs.hi(), || format!("Chebyshev: {lhs:?} > {rhs:?} at nu = {nu}"))
}

/// `||a b|| <= ||a|| ||b||` in the Fourier-Chebyshev space, both for the interval
/// product and for the float kernel with its rounding bound.
pub fn banach_fc(n: (usize, usize), k: (usize, usize), a: &[f64], b: &[f64], nu: f64) -> Check {
    let (fa, fb) = (fourier_cheb(n.0, k.0, a), fourier_cheb(n.1, k.1, b));
    let (x, y) = (FourierChebSeq::from_fcarr(&fa), FourierChebSeq::from_fcarr(&fb));
    let lhs = x.mul(&y).norm(nu);
    let rhs = x.norm(nu) * y.norm(nu);
    ensure(lhs.lo() <= rhs.hi(), || format!("Fourier-Chebyshev: {lhs:?} > {rhs:?} at nu = {nu}"))?;
    let (c, err) = conv(&fa, &fb, Prec::Fast, nu);
    let lo = FourierChebSeq::from_fcarr(&c).norm(nu).lo() - err;
    ensure(lo <= rhs.hi(), || format!("kernel: {lo:e} > {rhs:?} at nu = {nu}"))
}

/// The computed product agrees with the product of point values at `(t, eta)`
/// up to the enclosure widths and the kernel rounding bound.
pub fn convolution_pointwise(n: (usize, usize), k: (usize, usize), a: &[f64], b: &[f64], t: f64, eta: f64, prec: Prec) -> Check {
    let (fa, fb) = (fourier_cheb(n.0, k.0, a), fourier_cheb(n.1, k.1, b));
    let (c, err) = conv(&fa, &fb, prec, 1.0);
    let (ti, ei) = (Interval::point(t), Interval::point(eta));
    let ev = |f: &FcArr| FourierChebSeq::from_fcarr(f).eval(ti, ei).map_err(|e| e.to_string());
    let prod = ev(&fa)? * ev(&fb)?;
    // sup over [-1, 1] x R is bounded by the norm at nu = 1
    let got = ev(&c)?.inflate(err);
    ensure(got.re.intersect(&prod.re).is_some() && got.im.intersect(&prod.im).is_some(), || {
        format!("product at ({t}, {eta}): kernel {got:?} vs pointwise {prod:?}")
    })
}

/// Interpolant of `1 / phi`; for the reference, coefficients at the rounding
/// floor are dropped so that `nu^n` does not amplify noise.
fn reference_inverse(phi: &[f64], degree: usize) -> Vec<f64> {
    let vals: Vec<f64> = cheb_nodes(degree).iter().map(|&e| 1.0 / cheb_eval_r(phi, e)).collect();
    let mut c = cheb_interp_r(&vals);
    if degree >= 100 {
        let floor = 1e-15 * c[0].abs();
        for x in c.iter_mut() {
            if x.abs() < floor {
                *x = 0.0;
            }
        }
    }
    c
}

fn norm_f(c: &[f64], nu: f64) -> f64 {
    c.iter().enumerate().map(|(n, x)| if n == 0 { x.abs() } else { 2.0 * x.abs() * nu.powi(n as i32) }).sum()
}

fn diff_norm(a: &[f64], b: &[f64], nu: f64) -> f64 {
    let n = a.len().max(b.len());
    let d: Vec<f64> = (0..n).map(|i| a.get(i).unwrap_or(&0.0) - b.get(i).unwrap_or(&0.0)).collect();
    norm_f(&d, nu)
}

/// Accuracy allowance of the degree-200 reference (interpolation and float error).
const REFERENCE_SLACK: f64 = 1e-12;

/// Neumann bounds on an approximate inverse and on inverses over a ball,
/// checked against a degree-200 interpolant of `1 / phi`.
pub fn neumann_reference(phi: &[f64], approx_degree: usize, delta: &[f64], r: f64, nu: f64) -> Check {
    let p = FourierChebSeq::from_fcarr(&FcArr::cheb_real(phi));
    let approx = reference_inverse(phi, approx_degree);
    let pa = FourierChebSeq::from_fcarr(&FcArr::cheb_real(&approx));
    let reference = reference_inverse(phi, 200);
    let bound = neumann_inverse_error(&p, &pa, nu).map_err(|e| e.to_string())?;
    let actual = diff_norm(&approx, &reference, nu);
    ensure(actual <= bound.hi() + REFERENCE_SLACK, || format!("inverse error {actual:e} above bound {:e}", bound.hi()))?;

    let ball = ball_inverse_bound(&p, &pa, r, nu).map_err(|e| e.to_string())?;
    // a member of the ball: phi + delta with ||delta|| <= r
    let dn = norm_f(delta, nu);
    let scale = if dn > 0.0 { 0.999 * r / dn } else { 0.0 };
    let member: Vec<f64> = (0..phi.len().max(delta.len())).map(|i| phi.get(i).unwrap_or(&0.0) + scale * delta.get(i).unwrap_or(&0.0)).collect();
    let inv = norm_f(&reference_inverse(&member, 200), nu);
    ensure(inv <= ball.hi() + REFERENCE_SLACK, || format!("ball member inverse norm {inv:e} above bound {:e}", ball.hi()))
}

fn point_mat(m: &Matrix3<Complex64>) -> IMat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| RectComplex::point(m[(i, j)].re, m[(i, j)].im)))
}

fn covered(discs: &[stablefam_core::floquet::spectral::Disc; 3], z: Complex64, slack: f64) -> bool {
    discs.iter().any(|d| (z - Complex64::new(d.re, d.im)).norm() <= d.radius + slack)
}

/// Eigensolver accuracy allowance, relative to the matrix size.
const EIGEN_SLACK: f64 = 1e-9;

/// Every eigenvalue of a real matrix lies in the union of its discs, in the
/// standard basis and after a similarity by `xi`.
pub fn gershgorin_real(m: &[f64; 9], xi: &[f64; 18]) -> Check {
    let mr = Matrix3::from_row_slice(m);
    let mc = mr.map(|x| Complex64::new(x, 0.0));
    let slack = EIGEN_SLACK * mr.norm().max(1.0);
    let eig = mr.complex_eigenvalues();
    let x = Matrix3::from_fn(|i, j| Complex64::new(xi[2 * (3 * i + j)], xi[2 * (3 * i + j) + 1]));
    for basis in [Matrix3::identity(), x] {
        let discs = match gershgorin(&point_mat(&mc), &basis) {
            Ok(d) => d,
            // badly conditioned similarities are rejected, which is not a containment failure
            Err(_) if basis != Matrix3::identity() => continue,
            Err(e) => return Err(e.to_string()),
        };
        for z in eig.iter() {
            ensure(covered(&discs, *z, slack), || format!("eigenvalue {z} outside discs {discs:?}"))?;
        }
    }
    Ok(())
}

/// `m = xi diag(d) xi^{-1}`: with the eigenbasis the discs are tight around `d`.
pub fn gershgorin_eigenbasis(d: [Complex64; 3], xi: &[f64; 18]) -> Check {
    let x = Matrix3::from_fn(|i, j| Complex64::new(xi[2 * (3 * i + j)], xi[2 * (3 * i + j) + 1]));
    let Some(xinv) = x.try_inverse() else { return Ok(()) };
    let m = x * Matrix3::from_diagonal(&nalgebra::Vector3::from(d)) * xinv;
    let cond = x.norm() * xinv.norm();
    if cond > 1e6 {
        return Ok(());
    }
    let discs = gershgorin(&point_mat(&m), &x).map_err(|e| e.to_string())?;
    let slack = EIGEN_SLACK * m.norm().max(1.0) * cond;
    for z in d {
        ensure(covered(&discs, z, slack), || format!("eigenvalue {z} outside discs {discs:?}"))?;
    }
    Ok(())
}

fn ulps(a: f64, b: f64) -> u64 {
    (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
}

/// Closed-form radius: `Y = 0` gives zero, `Z1 = 0` gives `2Y / (1 + sqrt(1 - 2 Y Z2))`.
///
/// `y = 2^e` and `z2 = (1 - q^2) / 2^(e+1)` with dyadic `q` keep every
/// intermediate exact, so only the final division rounds.
pub fn closed_form_r_min(e: i32, j: u32, z1: f64, z2: f64) -> Check {
    let zero = verify_contraction(Interval::ZERO, Interval::point(z1), Interval::point(z2), 1.0, 1.1).map_err(|e| e.to_string())?;
    ensure(zero.r_min == 0.0, || format!("Y = 0 gives r_min = {:e}", zero.r_min))?;

    let q = j as f64 / 1024.0;
    let y = 2f64.powi(e);
    let z2 = (1.0 - q * q) / 2f64.powi(e + 1);
    let b = verify_contraction(Interval::point(y), Interval::ZERO, Interval::point(z2), f64::INFINITY, 1.1).map_err(|e| e.to_string())?;
    let expect = 2.0 * y / (1.0 + (1.0 - 2.0 * y * z2).sqrt());
    ensure(ulps(b.r_min, expect) <= 1, || format!("Z1 = 0: r_min = {:e}, closed form {expect:e}", b.r_min))
}
