//! `K_nu(z)` on the principal branch of the cut plane `C \ (-inf, 0]`.
//!
//! * `|z| < 2`: Temme's series in complex arithmetic (covers integer orders
//!   through the same limit as the real case, no separate log series).
//! * `|z| >= 2`, `Re z >= 0`: Steed's CF2 continued fraction.
//! * `|z| >= 2`, `Re z < 0`: continuation from `zeta = -z` in the right
//!   half-plane, `K_nu(zeta e^{m pi i}) = e^{-m nu pi i} K_nu(zeta) - m pi i I_nu(zeta)`,
//!   with `I_nu(zeta)` from CF1 and the Wronskian.
//!
//! Half-integer orders also have the closed form
//! `K_{n+1/2}(z) = sqrt(pi/2z) e^{-z} theta_n(1/z)`, see [`half_integer_poly`].

use num_complex::Complex64;
use std::f64::consts::PI;

use super::bessel::SERIES_RADIUS;
use super::gamma::temme_gammas;
use super::Order;
use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const MAXIT: usize = 100_000;

/// Largest modulus accepted by [`bessel_k_complex`]; beyond it `I_nu(-z)`
/// overflows in the continuation.
pub const COMPLEX_RANGE: f64 = 600.0;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn k_pair_reduced(mu: f64, z: Complex64) -> (Complex64, Complex64) {
    let zi = z.inv();
    if z.norm() < SERIES_RADIUS {
        let z2 = 0.5 * z;
        let pimu = PI * mu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -z2.ln();
        let e = mu * d;
        let fact2 = if e.norm() < EPS { c(1.0, 0.0) } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut cc = c(1.0, 0.0);
        let dd = z2 * z2;
        let mut sum1 = p;
        let mu2 = mu * mu;
        for i in 1..MAXIT {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu2);
            cc *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = cc * ff;
            sum += del;
            sum1 += cc * (p - fi * ff);
            if del.norm() < sum.norm() * EPS {
                break;
            }
        }
        (sum, sum1 * 2.0 * zi)
    } else {
        let mut b = 2.0 * (1.0 + z);
        let mut d = b.inv();
        let mut h = d;
        let mut delh = d;
        let mut q1 = c(0.0, 0.0);
        let mut q2 = c(1.0, 0.0);
        let a1 = 0.25 - mu * mu;
        let mut q = c(a1, 0.0);
        let mut cc = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..MAXIT {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            cc = -a * cc / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += cc * qnew;
            b += 2.0;
            d = (b + a * d).inv();
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).norm() < EPS {
                break;
            }
        }
        h *= a1;
        let kmu = (PI / (2.0 * z)).sqrt() * (-z).exp() / s;
        let k1 = kmu * (mu + z + 0.5 - h) * zi;
        (kmu, k1)
    }
}

fn k_pair_direct(nu: f64, z: Complex64) -> (Complex64, Complex64) {
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let (mut kmu, mut k1) = k_pair_reduced(mu, z);
    let zi2 = 2.0 / z;
    for i in 1..=(nl as usize) {
        let next = (mu + i as f64) * zi2 * k1 + kmu;
        kmu = k1;
        k1 = next;
    }
    (kmu, k1)
}

fn cf1_ratio(nu: f64, z: Complex64) -> Complex64 {
    let tiny = 1e-300;
    let zi2 = 2.0 / z;
    let mut h = nu / z;
    if h.norm() < tiny {
        h = c(tiny, 0.0);
    }
    let mut b = zi2 * nu;
    let mut d = c(0.0, 0.0);
    let mut cc = h;
    for _ in 0..MAXIT {
        b += zi2;
        d = b + d;
        if d.norm() < tiny {
            d = c(tiny, 0.0);
        }
        d = d.inv();
        cc = b + cc.inv();
        if cc.norm() < tiny {
            cc = c(tiny, 0.0);
        }
        let del = cc * d;
        h *= del;
        if (del - 1.0).norm() < EPS {
            break;
        }
    }
    h
}

/// `(K_nu(z), K_{nu+1}(z))` on the principal branch, without range checks.
pub(crate) fn k_pair_complex(nu: f64, z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < SERIES_RADIUS || z.re >= 0.0 {
        return k_pair_direct(nu, z);
    }
    let zeta = -z;
    let m = if z.im >= 0.0 { 1.0 } else { -1.0 };
    let (k, k1) = k_pair_direct(nu, zeta);
    let f = cf1_ratio(nu, zeta);
    let kp = nu / zeta * k - k1;
    let i = (zeta * (f * k - kp)).inv();
    // I_{nu+1} = I'_nu - (nu/zeta) I_nu
    let i1 = i * (f - nu / zeta);
    let rot = |o: f64| Complex64::from_polar(1.0, -m * o * PI);
    let mpi = c(0.0, m * PI);
    let knu = rot(nu) * k - mpi * i;
    let knu1 = rot(nu + 1.0) * k1 - mpi * i1;
    (knu, knu1)
}

fn check_z(z: Complex64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {z}")));
    }
    if z.im == 0.0 && z.re <= 0.0 {
        return Err(Error::BranchCut { re: z.re, im: z.im });
    }
    let r = z.norm();
    if r > COMPLEX_RANGE {
        return Err(Error::OutOfRange {
            modulus: r,
            limit: COMPLEX_RANGE,
        });
    }
    Ok(())
}

/// Principal-branch `K_nu(z)` for `z` off the cut `(-inf, 0]`.
pub fn bessel_k_complex(nu: Order, z: Complex64) -> Result<Complex64> {
    check_z(z)?;
    Ok(k_pair_complex(nu.value(), z).0)
}

/// Coefficients `a_k = (n+k)! / (k! (n-k)! 2^k)` of
/// `K_{n+1/2}(z) = sqrt(pi/2z) e^{-z} sum_k a_k z^{-k}`.
pub fn half_integer_poly(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            let mut a = 1.0;
            // (n+k)!/(n-k)! = prod_{j=n-k+1}^{n+k} j
            for j in (n - k + 1)..=(n + k) {
                a *= j as f64;
            }
            for j in 1..=k {
                a /= j as f64 * 2.0;
            }
            a
        })
        .collect()
}

/// `sum_k a_k y^k`, the reduced half-integer Bessel polynomial at `y = 1/z`.
pub(crate) fn half_integer_reduced(n: usize, y: Complex64) -> Complex64 {
    half_integer_poly(n)
        .iter()
        .rev()
        .fold(c(0.0, 0.0), |acc, &a| acc * y + a)
}

/// Closed-form `K_{n+1/2}(z)` on the principal branch.
pub fn bessel_k_half_integer(n: usize, z: Complex64) -> Result<Complex64> {
    check_z(z)?;
    Ok((PI / (2.0 * z)).sqrt() * (-z).exp() * half_integer_reduced(n, z.inv()))
}
