//! The kernel `w_lambda` in the representation of the density of `A(tau)`.
//!
//! `w = w1 + w2`, where `w1` is a finite exponential sum over the zeros of
//! `K_mu` and `w2` is a Laplace transform of the nonnegative function
//! `h_{mu,lambda}`:
//!
//! ```text
//! w1(v) = -(x^mu / lambda) sum_i z_i e^{lambda z_i} K_mu(x z_i) / K_{mu-1}(z_i) e^{z_i v}
//! w2(v) = -cos(pi mu) (x^mu / lambda) int_0^inf h(u) e^{-v u} u du
//! h(u)  = (I_mu(xu) K_mu(u) - I_mu(u) K_mu(xu)) e^{-lambda u}
//!         / (cos^2(pi mu) K_mu(u)^2 + (pi I_mu(u) + sin(pi mu) K_mu(u))^2)
//! ```
//!
//! `w2` vanishes identically for half-integer `mu`. [`build_w`] discretises
//! the `u`-integral with the trapezoid rule in `ln u`, which turns `w2` into
//! a positive (or negative) mixture of decaying exponentials. This is
//! exponentially accurate because the integrand is analytic in a strip
//! around the real `ln u` axis; the strip half-width is the angle between
//! the positive axis and the nearest `-z_i`, and the step is chosen from it.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::quad::{integrate_semi_infinite, QuadratureSpec};
use crate::specfun::{
    bessel_ik_scaled, gamma_pos, half_integer_index, half_integer_reduced, k_pair_complex,
    k_zero_set, KZeroSet, Order,
};

/// Drift `mu >= 0`, start point `x > 1`, `lambda = x - 1`, hitting level `a = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub mu: f64,
    pub x: f64,
    pub lambda: f64,
    pub a: f64,
}

impl ModelParams {
    pub fn new(mu: f64, x: f64) -> Result<Self> {
        Order::new(mu)?;
        if !(x.is_finite() && x > 1.0) {
            return domain(format!("start point must satisfy x > 1, got {x}"));
        }
        Ok(ModelParams {
            mu,
            x,
            lambda: x - 1.0,
            a: 1.0,
        })
    }

    pub fn order(&self) -> Order {
        Order::new(self.mu).expect("validated at construction")
    }

    /// `Some(n)` when `mu = n + 1/2`.
    pub fn half_integer(&self) -> Option<usize> {
        half_integer_index(self.mu)
    }

    /// `x^{mu - 1/2} (mu^2 - 1/4) / (2x)`, the total integral of `w`.
    pub fn mass_of_w(&self) -> f64 {
        self.x.powf(self.mu - 0.5) * (self.mu * self.mu - 0.25) / (2.0 * self.x)
    }

    /// Coefficient of `u^{2 mu}` in the small-`u` behaviour of `h` (`mu > 0`).
    fn h_small_u_coefficient(&self) -> f64 {
        let mu = self.mu;
        let ratio = 2f64.powf(1.0 - 2.0 * mu) / (gamma_pos(mu) * gamma_pos(mu + 1.0));
        (self.x.powf(2.0 * mu) - 1.0) * self.x.powf(-mu) * ratio
    }

    fn w2_prefactor(&self) -> f64 {
        -(PI * self.mu).cos() * self.x.powf(self.mu) / self.lambda
    }
}

/// Below this `u`, `h` is replaced by its leading small-`u` term; the terms
/// dropped are smaller than `u^{2 mu + 2} < e^{-700}`.
fn h_floor(mu: f64) -> f64 {
    (-(700.0 / (2.0 * mu + 2.0) + 5.0)).exp()
}

fn h_asymptotic(u: f64, p: &ModelParams) -> f64 {
    if p.mu == 0.0 {
        p.x.ln() / (u.ln() * u.ln())
    } else {
        let log = p.h_small_u_coefficient().ln() + 2.0 * p.mu * u.ln() - p.lambda * u;
        log.exp()
    }
}

pub(crate) fn h_unchecked(u: f64, p: &ModelParams) -> f64 {
    let mu = p.mu;
    if u < h_floor(mu) {
        return h_asymptotic(u, p);
    }
    let (sn, cs) = (PI * mu).sin_cos();
    let a = bessel_ik_scaled(mu, u);
    let b = bessel_ik_scaled(mu, p.x * u);
    if u < 1.0 {
        let i0 = a.i * u.exp();
        let k0 = a.k * (-u).exp();
        let i1 = b.i * (p.x * u).exp();
        let k1 = b.k * (-p.x * u).exp();
        let ri = i0 / k0;
        let num = i1 / k0 - ri * (k1 / k0);
        let den = cs * cs + (PI * ri + sn).powi(2);
        num / den * (-p.lambda * u).exp()
    } else {
        // everything in exponentially scaled form, common factors pulled out
        let num = b.i * a.k - a.i * b.k * (-2.0 * p.lambda * u).exp();
        let damp = (-2.0 * u).exp();
        let den = (cs * a.k * damp).powi(2) + (PI * a.i + sn * a.k * damp).powi(2);
        num / den * damp
    }
}

/// `h_{mu,lambda}(u) >= 0`.
pub fn h_mu_lambda(u: f64, params: &ModelParams) -> Result<f64> {
    if !(u > 0.0 && u.is_finite()) {
        return domain(format!("h is defined for u > 0, got {u}"));
    }
    Ok(h_unchecked(u, params).max(0.0))
}

/// `w2(v)` by adaptive quadrature of its defining integral. Independent of
/// the exponential-mixture representation built by [`build_w`].
pub fn w2_eval(v: f64, params: &ModelParams) -> Result<f64> {
    if params.half_integer().is_some() {
        return domain("w2 is absent for half-integer mu");
    }
    if !(v >= 0.0 && v.is_finite()) {
        return domain(format!("v must be finite and >= 0, got {v}"));
    }
    let spec = QuadratureSpec {
        abs_tol: 1e-300,
        rel_tol: 1e-11,
        max_subdivisions: 2000,
        split_points: Vec::new(),
    };
    // (0, 1] in s = -ln u: resolves the u^{2mu} and (log u)^{-2} endpoint
    let near = integrate_semi_infinite(
        |s: f64| {
            let u = (-s).exp();
            h_unchecked(u, params) * (-v * u).exp() * u * u
        },
        0.0,
        0.9 * (2.0 * params.mu + 2.0),
        &spec.clone().with_splits([v.max(1.0).ln(), v.max(1.0).ln() + 3.0]),
    )?;
    let far = integrate_semi_infinite(
        |t: f64| {
            let u = 1.0 + t;
            h_unchecked(u, params) * (-v * t).exp() * u
        },
        0.0,
        1.9 + v,
        &spec,
    )?;
    let total = near.value + (-v).exp() * far.value;
    Ok(params.w2_prefactor() * total)
}

/// One exponential term `coefficient * exp(rate * v)` of `w1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteTerm {
    pub coefficient: Complex64,
    pub rate: Complex64,
}

fn discrete_terms(params: &ModelParams, zeros: &KZeroSet) -> Result<Vec<DiscreteTerm>> {
    if (zeros.order.value() - params.mu).abs() > 1e-14 {
        return Err(Error::InconsistentZeros {
            zeros_order: zeros.order.value(),
            mu: params.mu,
        });
    }
    let (mu, x, lambda) = (params.mu, params.x, params.lambda);
    let scale = -x.powf(mu) / lambda;
    let terms = zeros
        .zeros
        .iter()
        .map(|&z| {
            let ratio = match params.half_integer() {
                // K_mu(xz) / K_{mu-1}(z) with the e^{-xz}, e^{-z} and sqrt
                // factors cancelled; no branch choice left
                Some(n) => {
                    x.powf(-0.5) * (-lambda * z).exp()
                        * half_integer_reduced(n, 1.0 / (x * z))
                        / half_integer_reduced(n - 1, 1.0 / z)
                }
                None => {
                    let (kx, _) = k_pair_complex(mu, x * z);
                    let (km1, _) = k_pair_complex(mu - 1.0, z);
                    kx / km1
                }
            };
            DiscreteTerm {
                coefficient: scale * z * (lambda * z).exp() * ratio,
                rate: z,
            }
        })
        .collect();
    Ok(terms)
}

/// `w1(v)` directly from a zero set.
pub fn w1_eval(v: f64, params: &ModelParams, zeros: &KZeroSet) -> Result<f64> {
    if !(v >= 0.0 && v.is_finite()) {
        return domain(format!("v must be finite and >= 0, got {v}"));
    }
    Ok(sum_discrete(&discrete_terms(params, zeros)?, v))
}

fn sum_discrete(terms: &[DiscreteTerm], v: f64) -> f64 {
    terms
        .iter()
        .map(|t| (t.coefficient * (t.rate * v).exp()).re)
        .sum()
}

/// `sum_k weights[k] exp(-rates[k] v)`, rates ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpMixture {
    pub rates: Vec<f64>,
    pub weights: Vec<f64>,
    /// the `u`-integral was truncated below this rate
    pub lower_cut: f64,
    /// trapezoid step in `ln u`
    pub step: f64,
    /// `prefix0[k] = sum_{j<k} weights[j]`, `prefix1[k] = sum_{j<k} weights[j] rates[j]`
    prefix0: Vec<f64>,
    prefix1: Vec<f64>,
}

/// Nodes with `rate * v` below this are summed through the prefix sums
/// with a first-order expansion of the exponential.
const LINEAR_REGIME: f64 = 1e-8;

impl ExpMixture {
    fn new(rates: Vec<f64>, weights: Vec<f64>, lower_cut: f64, step: f64) -> Self {
        let mut prefix0 = Vec::with_capacity(rates.len() + 1);
        let mut prefix1 = Vec::with_capacity(rates.len() + 1);
        let (mut a, mut b) = (0.0, 0.0);
        prefix0.push(a);
        prefix1.push(b);
        for (&r, &w) in rates.iter().zip(&weights) {
            a += w;
            b += w * r;
            prefix0.push(a);
            prefix1.push(b);
        }
        ExpMixture {
            rates,
            weights,
            lower_cut,
            step,
            prefix0,
            prefix1,
        }
    }

    /// Index of the first node with `rate >= bound`.
    pub(crate) fn split_index(&self, bound: f64) -> usize {
        self.rates.partition_point(|&r| r < bound)
    }

    /// `(sum_{j<k} w_j, sum_{j<k} w_j r_j)`.
    pub(crate) fn prefix(&self, k: usize) -> (f64, f64) {
        (self.prefix0[k], self.prefix1[k])
    }

    pub fn eval(&self, v: f64) -> f64 {
        let k = if v > 0.0 {
            self.split_index(LINEAR_REGIME / v)
        } else {
            self.rates.len()
        };
        let mut s = self.prefix0[k] - v * self.prefix1[k];
        for (&r, &w) in self.rates[k..].iter().zip(&self.weights[k..]) {
            let e = r * v;
            if e > 745.0 {
                break;
            }
            s += w * (-e).exp();
        }
        s
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

/// Large-`v` behaviour of `w2`: `constant * v^{-power} * (ln v)^{-log_power}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailModel {
    pub constant: f64,
    pub power: f64,
    pub log_power: f64,
}

impl TailModel {
    pub fn eval(&self, v: f64) -> f64 {
        self.constant * v.powf(-self.power) * v.ln().powf(-self.log_power)
    }
}

/// Limit of `v^{2mu+2} w2(v)` (`mu > 0`) or `(v ln v)^2 w2(v)` (`mu = 0`).
///
/// Follows from `h(u) ~ x^mu (c/c') (1 - x^{-2mu}) u^{2mu}` at `u -> 0`
/// with `c/c' = 2^{1-2mu} / (Gamma(mu) Gamma(mu+1))`.
pub fn w2_tail_limit(params: &ModelParams) -> f64 {
    let mu = params.mu;
    if mu == 0.0 {
        -params.x.ln() / params.lambda
    } else {
        params.w2_prefactor() * params.h_small_u_coefficient() * gamma_pos(2.0 * mu + 2.0)
    }
}

/// The assembled kernel. Immutable, cheap to share between threads.
#[derive(Debug, Clone)]
pub struct WLambdaRep {
    pub params: ModelParams,
    pub zeros: KZeroSet,
    pub discrete_terms: Vec<DiscreteTerm>,
    /// `None` exactly when `mu` is a half-integer
    pub continuous: Option<ExpMixture>,
    pub tail: TailModel,
    /// beyond this `v` the mixture is replaced by the tail model
    pub v_max: f64,
}

const S_UPPER: f64 = 3.7; // ln 40: h(u) u^2 < e^{-75} beyond
const MAX_STEP: f64 = 0.05;
const MAX_HALVINGS: usize = 8;
const HALVING_TOL: f64 = 1e-13;

pub fn build_w(params: &ModelParams) -> Result<WLambdaRep> {
    let zeros = k_zero_set(params.order())?;
    let discrete = discrete_terms(params, &zeros)?;
    let tail = TailModel {
        constant: w2_tail_limit(params),
        power: if params.mu == 0.0 { 2.0 } else { 2.0 * params.mu + 2.0 },
        log_power: if params.mu == 0.0 { 2.0 } else { 0.0 },
    };
    if params.half_integer().is_some() {
        return Ok(WLambdaRep {
            params: *params,
            zeros,
            discrete_terms: discrete,
            continuous: None,
            tail: TailModel {
                constant: 0.0,
                ..tail
            },
            v_max: f64::INFINITY,
        });
    }
    // strip half-width: angle from the positive axis to the nearest -z_i
    let strip = zeros
        .zeros
        .iter()
        .map(|z| PI - z.im.atan2(z.re).abs())
        .fold(f64::INFINITY, f64::min);
    let s_lower = -(700.0 / (2.0 * params.mu + 2.0) + 5.0).min(305.0);
    let node = |s: f64| -> Result<(f64, f64)> {
        let u = s.exp();
        let hu = h_unchecked(u, params);
        if !hu.is_finite() {
            return Err(Error::NonConvergence {
                value: hu,
                error: f64::INFINITY,
                context: "h is not finite at a mixture node",
            });
        }
        Ok((u, hu * u * u))
    };
    // Singularities of h on the neighbouring sheet can sit closer to the
    // axis than any -z_i, so the step is confirmed by halving: the sums for
    // w2(0) and int w2 must agree between steps `step` and `step / 2`.
    let mut step = MAX_STEP.min(strip / 6.0);
    let mut n = ((S_UPPER - s_lower) / step).ceil() as usize;
    let mut nodes: Vec<(f64, f64)> = (0..=n)
        .map(|k| node(s_lower + k as f64 * step))
        .collect::<Result<_>>()?;
    for _ in 0..MAX_HALVINGS {
        let mids: Vec<(f64, f64)> = (0..n)
            .map(|k| node(s_lower + (k as f64 + 0.5) * step))
            .collect::<Result<_>>()?;
        let sums = |pts: &[(f64, f64)]| {
            pts.iter()
                .fold((0.0, 0.0), |(a, b), &(u, g)| (a + g, b + g / u))
        };
        let (c0, c1) = sums(&nodes);
        let (m0, m1) = sums(&mids);
        let (c0, c1) = (step * c0, step * c1);
        let (f0, f1) = (0.5 * c0 + 0.5 * step * m0, 0.5 * c1 + 0.5 * step * m1);
        if (f0 - c0).abs() <= HALVING_TOL * f0.abs() && (f1 - c1).abs() <= HALVING_TOL * f1.abs()
        {
            break;
        }
        let mut merged = Vec::with_capacity(2 * n + 1);
        for k in 0..n {
            merged.push(nodes[k]);
            merged.push(mids[k]);
        }
        merged.push(nodes[n]);
        nodes = merged;
        step *= 0.5;
        n *= 2;
    }
    let pref = params.w2_prefactor();
    let rates: Vec<f64> = nodes.iter().map(|&(u, _)| u).collect();
    let weights: Vec<f64> = nodes.iter().map(|&(_, g)| pref * step * g).collect();
    let lower_cut = s_lower.exp();
    Ok(WLambdaRep {
        params: *params,
        zeros,
        discrete_terms: discrete,
        continuous: Some(ExpMixture::new(rates, weights, lower_cut, step)),
        tail,
        // relative truncation error of the mixture there is below e^{-40}
        v_max: (-20.0f64).exp() / lower_cut,
    })
}

impl WLambdaRep {
    pub fn has_continuous(&self) -> bool {
        self.continuous.is_some()
    }

    pub fn w1(&self, v: f64) -> f64 {
        sum_discrete(&self.discrete_terms, v)
    }

    pub fn w2(&self, v: f64) -> f64 {
        match &self.continuous {
            None => 0.0,
            Some(_) if v > self.v_max => self.tail.eval(v),
            Some(m) => m.eval(v),
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        self.w1(v) + self.w2(v)
    }

    /// `int_0^inf kappa^m w(v) dv`, `kappa = v (2 lambda + v)`; see [`w_moment`].
    pub fn moment(&self, m: u32) -> Result<f64> {
        w_moment(self, m)
    }
}

/// `int_0^inf (2 lambda v + v^2)^m e^{-r v} dv` for `Re r > 0`.
fn kappa_laplace(m: u32, lambda: f64, r: Complex64) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    let mut binom = 1.0;
    for j in 0..=m {
        // binom(m, j) (2 lambda)^{m-j} v^{m+j}
        let coeff = binom * (2.0 * lambda).powi((m - j) as i32) * factorial(m + j);
        total += coeff / r.powi((m + j + 1) as i32);
        binom *= (m - j) as f64 / (j + 1) as f64;
    }
    total
}

/// `weight * int_0^inf kappa^m e^{-r v} dv` for tiny real `r`, dividing
/// step by step so neither `r^{-k}` nor the product leaves the float range.
fn kappa_laplace_real(m: u32, lambda: f64, r: f64, weight: f64) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0;
    for j in 0..=m {
        let coeff = binom * (2.0 * lambda).powi((m - j) as i32) * factorial(m + j);
        let mut t = weight * coeff;
        for _ in 0..(m + j + 1) {
            t /= r;
        }
        total += t;
        binom *= (m - j) as f64 / (j + 1) as f64;
    }
    total
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Moments `int_0^inf kappa^m w_lambda(v) dv`.
///
/// `m = 0` gives `x^{mu-1/2} (mu^2 - 1/4) / (2x)`, the whole product divided
/// by `2x` (not multiplied by `x/2`); `m = 1` gives `2 x^{mu-1/2}` for `mu > 1/2`.
///
/// Defined for `m = 0` and for `1 <= m <= mu + 1/2` (beyond that the
/// `v^{-2mu-2}` tail of `w2` makes the integral diverge; for half-integer
/// `mu` any `m` is fine but only `m <= mu + 1/2` is meaningful downstream).
pub fn w_moment(rep: &WLambdaRep, m: u32) -> Result<f64> {
    let p = &rep.params;
    if m > 0 && (m as f64) > p.mu + 0.5 + 1e-12 {
        return Err(Error::Integrability { m, mu: p.mu });
    }
    let mut total: f64 = rep
        .discrete_terms
        .iter()
        .map(|t| (t.coefficient * kappa_laplace(m, p.lambda, -t.rate)).re)
        .sum();
    if let Some(mix) = &rep.continuous {
        for (&u, &w) in mix.rates.iter().zip(&mix.weights) {
            total += kappa_laplace_real(m, p.lambda, u, w);
        }
        total += truncated_moment(p, m, mix.lower_cut);
    }
    Ok(total)
}

/// Contribution of `u < cut` to a moment, from the leading small-`u` form of `h`.
fn truncated_moment(p: &ModelParams, m: u32, cut: f64) -> f64 {
    let pref = p.w2_prefactor();
    if p.mu == 0.0 {
        // int_0^cut log x / log^2 u du, leading order
        return pref * p.x.ln() * cut / (cut.ln() * cut.ln());
    }
    let a = p.h_small_u_coefficient();
    let mut total = 0.0;
    let mut binom = 1.0;
    for j in 0..=m {
        let coeff = binom * (2.0 * p.lambda).powi((m - j) as i32) * factorial(m + j);
        // int_0^cut u^{2mu+1} u^{-(m+j+1)} du
        let e = 2.0 * p.mu + 1.0 - (m + j) as f64;
        total += coeff * cut.powf(e) / e;
        binom *= (m - j) as f64 / (j + 1) as f64;
    }
    pref * a * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(mu: f64, x: f64) -> ModelParams {
        ModelParams::new(mu, x).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1.0, 1.0).is_err());
        assert!(ModelParams::new(-0.1, 2.0).is_err());
        let p = params(1.0, 2.5);
        assert_eq!(p.lambda, 1.5);
        assert_eq!(p.a, 1.0);
    }

    #[test]
    fn h_half_integer_closed_form() {
        // mu = 1/2: I = sqrt(2/(pi u)) sinh u, K = sqrt(pi/(2u)) e^{-u},
        // denominator reduces to pi^2 I^2 + K^2 + 2 pi I K = (pi I + K)^2
        let p = params(0.5, 2.0);
        let u: f64 = 1.0;
        let i = |y: f64| (2.0 / (PI * y)).sqrt() * y.sinh();
        let k = |y: f64| (PI / (2.0 * y)).sqrt() * (-y).exp();
        let want = (i(2.0 * u) * k(u) - i(u) * k(2.0 * u)) / (PI * i(u) + k(u)).powi(2)
            * (-u).exp();
        assert_relative_eq!(h_mu_lambda(u, &p).unwrap(), want, max_relative = 1e-13);
    }

    #[test]
    fn h_small_u_limit() {
        // h(u) / u^{2mu} -> x^mu (c/c')(1 - x^{-2mu}); mu = 1, x = 2 gives 3/4
        let p = params(1.0, 2.0);
        let u = 1e-7;
        assert_relative_eq!(h_mu_lambda(u, &p).unwrap() / (u * u), 0.75, max_relative = 1e-5);
        let p = params(0.0, 2.0);
        let u: f64 = 1e-60;
        let ratio = h_mu_lambda(u, &p).unwrap() * u.ln().powi(2) / 2f64.ln();
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn h_large_u_envelope() {
        let p = params(1.0, 2.0);
        for &u in &[5.0, 10.0, 40.0] {
            let h = h_mu_lambda(u, &p).unwrap();
            // leading terms: I ~ e^u/sqrt(2 pi u), K ~ sqrt(pi/2u) e^{-u}
            let envelope = (-2.0 * u as f64).exp() / (PI * PI) * (2.0 * PI * u).sqrt() / 2f64.sqrt();
            assert!(h > 0.0 && h <= 1.1 * envelope, "u={u} h={h} env={envelope}");
        }
        assert!(h_mu_lambda(0.0, &p).is_err());
    }

    #[test]
    fn h_is_nonnegative() {
        for &mu in &[0.0, 0.3, 1.0, 2.2, 4.3] {
            for &x in &[1.2, 2.0, 5.0] {
                let p = params(mu, x);
                let mut u = 1e-9;
                while u < 60.0 {
                    assert!(h_unchecked(u, &p) >= 0.0, "mu={mu} x={x} u={u}");
                    u *= 1.3;
                }
            }
        }
    }

    #[test]
    fn closed_form_kernels() {
        let w = build_w(&params(1.5, 2.0)).unwrap();
        assert!(!w.has_continuous());
        for k in 0..=200 {
            let v = 0.1 * k as f64;
            assert!((w.eval(v) - (-v).exp()).abs() < 1e-12, "v={v}");
        }
        for &lambda in &[0.2, 1.0, 4.0] {
            let w = build_w(&params(2.5, 1.0 + lambda)).unwrap();
            let s3 = 3f64.sqrt();
            for k in 0..=200 {
                let v = 0.1 * k as f64;
                let want = 3.0
                    * (-1.5 * v).exp()
                    * ((2.0 * lambda + 1.0) * (s3 * v / 2.0).cos() + s3 * (s3 * v / 2.0).sin());
                assert!((w.eval(v) - want).abs() < 1e-10, "lambda={lambda} v={v}");
            }
        }
        assert_relative_eq!(build_w(&params(2.5, 2.0)).unwrap().eval(0.0), 9.0, max_relative = 1e-12);
    }

    #[test]
    fn half_order_is_zero() {
        let w = build_w(&params(0.5, 3.0)).unwrap();
        assert!(w.discrete_terms.is_empty() && !w.has_continuous());
        assert_eq!(w.eval(1.7), 0.0);
        let z = k_zero_set(Order::new(1.0).unwrap()).unwrap();
        assert_eq!(w1_eval(2.0, &params(1.0, 2.0), &z).unwrap(), 0.0);
    }

    #[test]
    fn w1_rejects_foreign_zeros() {
        let z = k_zero_set(Order::new(2.5).unwrap()).unwrap();
        assert!(matches!(
            w1_eval(1.0, &params(1.5, 2.0), &z),
            Err(Error::InconsistentZeros { .. })
        ));
    }

    #[test]
    fn mixture_matches_adaptive_w2() {
        for &(mu, x) in &[(0.0, 2.0), (0.3, 1.2), (1.0, 2.0), (2.2, 5.0), (4.3, 2.0)] {
            let p = params(mu, x);
            let w = build_w(&p).unwrap();
            for &v in &[0.0, 0.3, 1.0, 4.0, 20.0, 300.0, 1e4] {
                let direct = w2_eval(v, &p).unwrap();
                let mixed = w.w2(v);
                assert!(
                    (mixed - direct).abs() <= 1e-10 * direct.abs().max(1e-300) + 1e-14,
                    "mu={mu} x={x} v={v}: {mixed} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn moment_identities() {
        for &mu in &[0.0, 0.3, 1.0, 1.5, 2.2, 2.5] {
            for &x in &[1.2, 2.0, 5.0] {
                let p = params(mu, x);
                let w = build_w(&p).unwrap();
                let m0 = w.moment(0).unwrap();
                assert!((m0 - p.mass_of_w()).abs() < 1e-9, "mu={mu} x={x} m0={m0}");
                if mu > 0.5 {
                    let m1 = w.moment(1).unwrap();
                    let want = 2.0 * x.powf(mu - 0.5);
                    assert!((m1 - want).abs() < 1e-9, "mu={mu} x={x} m1={m1}");
                }
                if mu >= 2.0 {
                    let m2 = w.moment(2).unwrap();
                    assert!(m2.abs() < 1e-9, "mu={mu} x={x} m2={m2}");
                }
            }
        }
        let w = build_w(&params(1.0, 2.0)).unwrap();
        assert!(matches!(w.moment(2), Err(Error::Integrability { m: 2, .. })));
    }

    #[test]
    fn sign_and_boundedness() {
        for &mu in &[0.0, 0.3, 1.0, 2.2, 4.3] {
            let p = params(mu, 2.0);
            let w = build_w(&p).unwrap();
            let sign = -(PI * mu).cos();
            let mut coarse: f64 = 0.0;
            let mut fine: f64 = 0.0;
            for k in 0..=4000 {
                let v = 0.01 * k as f64;
                let w2 = w.w2(v);
                assert!(sign * w2 >= -1e-12, "mu={mu} v={v}");
                let a = w.eval(v).abs();
                fine = fine.max(a);
                if k % 2 == 0 {
                    coarse = coarse.max(a);
                }
            }
            assert!(fine.is_finite());
            assert!((fine - coarse).abs() <= 1e-6 * fine, "mu={mu}");
        }
    }

    #[test]
    fn tail_limits_against_adaptive_route() {
        // v^4 w2 -> 9 at mu = 1, x = 2
        let p = params(1.0, 2.0);
        assert_relative_eq!(w2_tail_limit(&p), 9.0, max_relative = 1e-14);
        let v: f64 = 1e5;
        let scaled = v.powi(4) * w2_eval(v, &p).unwrap();
        assert!((scaled / 9.0 - 1.0).abs() < 2e-3, "{scaled}");
        // (v ln v)^2 w2 -> -ln 2 at mu = 0, x = 2, with O(1/ln v) approach
        let p = params(0.0, 2.0);
        let v: f64 = 1e8;
        let scaled = (v * v.ln()).powi(2) * w2_eval(v, &p).unwrap();
        assert!((scaled / -(2f64.ln()) - 1.0).abs() < 0.02, "{scaled}");
    }
}
