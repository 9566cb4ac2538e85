//! Zeros of `K_mu(z)` in the cut plane.
//!
//! Half-integer orders: `K_{n+1/2}(z) = sqrt(pi/2z) e^{-z} theta(1/z)`, so the
//! zeros are the roots of the degree-`n` polynomial `z^n theta(1/z)`,
//! found as companion-matrix eigenvalues and polished by Newton.
//! Other orders: complex Newton on `K_mu` seeded over the upper half of the
//! annulus `{Re z < 0, 0.05 <= |z| <= 3 mu + 4}`; the lower-half zeros are
//! the conjugates.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use super::complex::{half_integer_poly, k_pair_complex};
use super::{half_integer_index, Order};
use crate::error::{domain, Error, Result};

/// Orders above this are rejected by [`k_zero_set`].
pub const MAX_ZERO_ORDER: f64 = 10.0;

const DEDUP_DIST: f64 = 1e-6;

/// The zeros `{z_1, .., z_k}` of `K_mu` with `|arg z| < pi` (plus the real
/// negative zeros of the entire half-integer case).
#[derive(Debug, Clone, PartialEq)]
pub struct KZeroSet {
    pub order: Order,
    /// Sorted by real part, each upper zero followed by its conjugate.
    pub zeros: Vec<Complex64>,
}

impl KZeroSet {
    pub fn count(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }
}

/// `k_mu`: `mu - 1/2` for half-integer orders, otherwise the even integer
/// closest to `mu - 1/2`.
pub fn k_zero_count(mu: Order) -> usize {
    let mu = mu.value();
    if let Some(n) = half_integer_index(mu) {
        return n;
    }
    if mu < 0.5 {
        return 0;
    }
    2 * ((mu - 0.5) / 2.0).round() as usize
}

pub fn k_zero_set(mu: Order) -> Result<KZeroSet> {
    let m = mu.value();
    if m > MAX_ZERO_ORDER {
        return domain(format!(
            "zero search supports orders up to {MAX_ZERO_ORDER}, got {m}"
        ));
    }
    let expected = k_zero_count(mu);
    let zeros = if expected == 0 {
        Vec::new()
    } else if let Some(n) = mu.half_integer_index() {
        polynomial_zeros(n)?
    } else {
        newton_zeros(m)?
    };
    if zeros.len() != expected {
        return Err(Error::ZeroCount {
            order: m,
            found: zeros.len(),
            expected,
        });
    }
    Ok(KZeroSet { order: mu, zeros })
}

fn horner(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    // coeffs in descending powers
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in coeffs {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

fn polynomial_zeros(n: usize) -> Result<Vec<Complex64>> {
    // z^n theta(1/z) = sum_k a_k z^{n-k}: descending coefficients are a_0..a_n
    let coeffs = half_integer_poly(n);
    let roots: Vec<Complex64> = if n == 1 {
        vec![Complex64::new(-coeffs[1], 0.0)]
    } else {
        let mut companion = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            companion[(0, j)] = -coeffs[j + 1] / coeffs[0];
        }
        for i in 1..n {
            companion[(i, i - 1)] = 1.0;
        }
        companion
            .complex_eigenvalues()
            .iter()
            .map(|&r| {
                let mut z = r;
                for _ in 0..50 {
                    let (p, dp) = horner(&coeffs, z);
                    let step = p / dp;
                    z -= step;
                    if step.norm() <= 1e-16 * z.norm() {
                        break;
                    }
                }
                z
            })
            .collect()
    };
    Ok(pair_conjugates(roots, true))
}

/// Keeps one representative per conjugate pair (upper half-plane or real)
/// and rebuilds the set so conjugation closure is exact.
fn pair_conjugates(roots: Vec<Complex64>, allow_real: bool) -> Vec<Complex64> {
    let mut upper: Vec<Complex64> = Vec::new();
    for r in roots {
        let r = if allow_real && r.im.abs() < 1e-10 * r.norm().max(1.0) {
            Complex64::new(r.re, 0.0)
        } else {
            r
        };
        if r.im < 0.0 {
            continue;
        }
        if upper.iter().all(|u| (u - r).norm() > DEDUP_DIST) {
            upper.push(r);
        }
    }
    upper.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut out = Vec::with_capacity(2 * upper.len());
    for u in upper {
        out.push(u);
        if u.im != 0.0 {
            out.push(u.conj());
        }
    }
    out
}

fn newton(mu: f64, mut z: Complex64, rmax: f64) -> Option<Complex64> {
    for _ in 0..60 {
        let (k, k1) = k_pair_complex(mu, z);
        let dk = mu / z * k - k1;
        if dk.norm() == 0.0 || !dk.norm().is_finite() {
            return None;
        }
        let step = k / dk;
        // damp long jumps so iterates do not hop across the cut
        let step = if step.norm() > 0.5 * z.norm() {
            step * (0.5 * z.norm() / step.norm())
        } else {
            step
        };
        z -= step;
        if z.im <= 0.0 || z.norm() > rmax * 1.5 || z.norm() < 1e-3 {
            return None;
        }
        if step.norm() <= 1e-14 * z.norm() {
            return (z.re < 0.0).then_some(z);
        }
    }
    None
}

fn newton_zeros(mu: f64) -> Result<Vec<Complex64>> {
    let rmax = 3.0 * mu + 4.0;
    let mut found = Vec::new();
    let n_rad = ((rmax - 0.05) / 0.25).ceil() as usize + 1;
    let n_ang = 16;
    for ir in 0..n_rad {
        let r = 0.05 + (rmax - 0.05) * ir as f64 / (n_rad - 1) as f64;
        for ia in 0..n_ang {
            let theta = 0.5 * PI + 0.5 * PI * (ia as f64 + 0.5) / n_ang as f64;
            let seed = Complex64::from_polar(r, theta);
            if let Some(z) = newton(mu, seed, rmax) {
                if found.iter().all(|f: &Complex64| (f - z).norm() > DEDUP_DIST) {
                    found.push(z);
                }
            }
        }
    }
    Ok(pair_conjugates(found, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::bessel_k_complex;

    fn o(nu: f64) -> Order {
        Order::new(nu).unwrap()
    }

    #[test]
    fn count_rule() {
        let cases = [
            (0.0, 0),
            (0.5, 0),
            (1.0, 0),
            (1.4, 0),
            (1.5, 1),
            (1.6, 2),
            (2.0, 2),
            (2.5, 2),
            (3.0, 2),
            (3.5, 3),
            (4.3, 4),
            (10.0, 10),
        ];
        for (mu, k) in cases {
            assert_eq!(k_zero_count(o(mu)), k, "mu={mu}");
        }
    }

    #[test]
    fn closed_form_zero_sets() {
        assert!(k_zero_set(o(0.5)).unwrap().is_empty());
        let z = k_zero_set(o(1.5)).unwrap();
        assert_eq!(z.zeros, vec![Complex64::new(-1.0, 0.0)]);
        let z = k_zero_set(o(2.5)).unwrap();
        let s3 = 3f64.sqrt() / 2.0;
        assert_eq!(z.count(), 2);
        assert!((z.zeros[0] - Complex64::new(-1.5, s3)).norm() < 1e-12);
        assert!((z.zeros[1] - Complex64::new(-1.5, -s3)).norm() < 1e-12);
    }

    #[test]
    fn general_orders_match_reference_locations() {
        // reference zeros from an independent arbitrary-precision root finder
        let z = k_zero_set(o(2.0)).unwrap();
        assert_eq!(z.count(), 2);
        assert!((z.zeros[0] - Complex64::new(-1.281_373_8, 0.429_484_97)).norm() < 1e-7);
        let z = k_zero_set(o(3.0)).unwrap();
        assert!((z.zeros[0] - Complex64::new(-1.681_788_8, 1.308_012_03)).norm() < 1e-7);
        let z = k_zero_set(o(3.5)).unwrap();
        assert_eq!(z.count(), 3);
        assert!((z.zeros[0] - Complex64::new(-2.322_185_35, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn residuals_and_conjugate_closure() {
        for &mu in &[1.6, 2.0, 2.2, 3.0, 3.5, 4.3, 5.5, 6.7, 10.0] {
            let set = k_zero_set(o(mu)).unwrap();
            assert_eq!(set.count(), k_zero_count(o(mu)), "mu={mu}");
            for z in &set.zeros {
                assert!(z.re < 0.0);
                assert!(set.zeros.contains(&z.conj()), "closure mu={mu}");
                let (k, _) = k_pair_complex(mu, *z);
                assert!(k.norm() <= 1e-10, "mu={mu} z={z} |K|={}", k.norm());
                if z.im != 0.0 {
                    let km1 = bessel_k_complex(o(mu - 1.0), *z).unwrap();
                    assert!(km1.norm() > 1e-6);
                }
            }
        }
    }

    #[test]
    fn order_cap() {
        assert!(k_zero_set(o(10.5)).is_err());
    }
}
