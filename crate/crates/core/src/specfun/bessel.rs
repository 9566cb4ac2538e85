//! Modified Bessel functions `I_nu`, `K_nu` of real order `nu >= 0` and real
//! positive argument.
//!
//! Temme's method: the order is split as `nu = n + mu` with `|mu| <= 1/2`.
//! `K_mu`, `K_{mu+1}` come from Temme's series for `x < 2` and from Steed's
//! continued fraction (CF2) for `x >= 2`; `K` is then recurred upward to
//! `nu`. `I_nu` follows from the ratio `I'_nu / I_nu` (CF1, Lentz) and the
//! Wronskian `I_nu K'_nu - I'_nu K_nu = -1/x`. Everything is carried in
//! exponentially scaled form, `I e^{-x}` and `K e^{x}`, so no intermediate
//! overflows for large arguments.

use std::f64::consts::PI;

use super::gamma::temme_gammas;
use super::Order;
use crate::error::{domain, Error, Result};

/// Switchover radius between Temme's series and the CF2 continued fraction.
pub const SERIES_RADIUS: f64 = 2.0;

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAXIT: usize = 100_000;

/// Scaled values at one order: `i = I_nu(x) e^{-x}`, `k = K_nu(x) e^{x}`,
/// `k_next = K_{nu+1}(x) e^{x}`.
#[derive(Debug, Clone, Copy)]
pub struct BesselIkScaled {
    pub i: f64,
    pub k: f64,
    pub k_next: f64,
}

/// `I'_nu(x) / I_nu(x)` by the modified Lentz method.
pub(crate) fn cf1_ratio(nu: f64, x: f64) -> f64 {
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let mut h = nu * xi;
    if h < FPMIN {
        h = FPMIN;
    }
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    for _ in 0..MAXIT {
        b += xi2;
        d = 1.0 / (b + d);
        c = b + 1.0 / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Scaled `K_mu`, `K_{mu+1}` for `|mu| <= 1/2`.
fn k_pair_reduced_scaled(mu: f64, x: f64) -> (f64, f64) {
    let xi = 1.0 / x;
    if x < SERIES_RADIUS {
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        let mu2 = mu * mu;
        for i in 1..MAXIT {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu2);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            let del1 = c * (p - fi * ff);
            sum1 += del1;
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        let scale = x.exp();
        (sum * scale, sum1 * 2.0 * xi * scale)
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu * mu;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..MAXIT {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh *= b * d - 1.0;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                break;
            }
        }
        h *= a1;
        let kmu = (PI / (2.0 * x)).sqrt() / s;
        let k1 = kmu * (mu + x + 0.5 - h) * xi;
        (kmu, k1)
    }
}

/// Scaled `K_nu`, `K_{nu+1}` by upward recurrence from the reduced order.
pub(crate) fn k_pair_scaled(nu: f64, x: f64) -> (f64, f64) {
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let (mut kmu, mut k1) = k_pair_reduced_scaled(mu, x);
    let xi2 = 2.0 / x;
    for i in 1..=(nl as usize) {
        let next = (mu + i as f64) * xi2 * k1 + kmu;
        kmu = k1;
        k1 = next;
    }
    (kmu, k1)
}

/// Scaled `I_nu`, `K_nu`, `K_{nu+1}` for `nu >= 0`, `x > 0` (unchecked).
pub fn bessel_ik_scaled(nu: f64, x: f64) -> BesselIkScaled {
    let (k, k_next) = k_pair_scaled(nu, x);
    let f = cf1_ratio(nu, x);
    // K'_nu = (nu/x) K_nu - K_{nu+1}
    let kp = nu / x * k - k_next;
    let i = 1.0 / (x * (f * k - kp));
    BesselIkScaled { i, k, k_next }
}

fn check_args(nu: Order, u: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return domain(format!("Bessel argument must be positive and finite, got {u}"));
    }
    Ok(nu.value())
}

/// `I_nu(u)`.
pub fn bessel_i(nu: Order, u: f64) -> Result<f64> {
    let nu = check_args(nu, u)?;
    let s = bessel_ik_scaled(nu, u);
    let v = s.i * u.exp();
    if !v.is_finite() {
        return Err(Error::Overflow(format!("I_{nu}({u}) exceeds f64 range")));
    }
    Ok(v)
}

/// `K_nu(u)`.
pub fn bessel_k(nu: Order, u: f64) -> Result<f64> {
    let nu = check_args(nu, u)?;
    let (k, _) = k_pair_scaled(nu, u);
    let v = k * (-u).exp();
    if !v.is_finite() {
        return Err(Error::Overflow(format!("K_{nu}({u}) exceeds f64 range")));
    }
    Ok(v)
}

/// `I_nu(u) e^{-u}`.
pub fn bessel_i_scaled(nu: Order, u: f64) -> Result<f64> {
    let nu = check_args(nu, u)?;
    Ok(bessel_ik_scaled(nu, u).i)
}

/// `K_nu(u) e^{u}`.
pub fn bessel_k_scaled(nu: Order, u: f64) -> Result<f64> {
    let nu = check_args(nu, u)?;
    Ok(k_pair_scaled(nu, u).0)
}
