//! Density `q_mu` of `A(tau)`, its Laplace transform, mass, survival
//! function and tail constant; the Dufresne density of `A(inf)`.
//!
//! Two evaluation routes are used:
//!
//! * `t <= t_switch`: `q = lambda e^{-lambda^2/4t} / sqrt(pi t) * B(t)` with
//!   `B = x^{mu-1/2}/2t - M_0 + int e^{-kappa/4t} w dv`; the exponential
//!   mixture part of `w` integrates in closed form through `erfcx`.
//! * `t > t_switch`: `B = [l = 0] x^{mu-1/2}/2t + int E_l(kappa/4t) w dv`
//!   where `E_l(s) = e^{-s} - sum_{j<=l} (-s)^j/j!`, integrated in `ln v`.
//!   Subtracting `l` Taylor terms keeps the integrand free of the
//!   cancellation that the bare form suffers once `kappa/4t` is small.

use std::cell::RefCell;
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::quad::{integrate_finite, integrate_semi_infinite, QuadratureSpec};
use crate::specfun::{bessel_k_scaled, erfcx, Order, EULER_GAMMA};
use crate::wlambda::{build_w, w_moment, ModelParams, WLambdaRep};

/// Below this `lambda` the density piles up near 0 and the quadrature
/// budget is easily exhausted.
pub const FRAGILE_LAMBDA: f64 = 0.05;

/// Upper end (in `ln t`) of the numerically integrated part of the mass
/// when `mu = 0`; the rest comes from the logarithmic tail law.
const LOG_TAIL_START: f64 = 100.0;

#[derive(Debug, Clone)]
pub struct DensityEvaluator {
    pub params: ModelParams,
    pub w: WLambdaRep,
    pub quad: QuadratureSpec,
    /// Taylor terms subtracted on the large-`t` route.
    pub l_terms: u32,
    /// Route switch: `10^3 max(1, lambda^2)`.
    pub t_switch: f64,
    m0: f64,
    inner: QuadratureSpec,
}

/// Number of subtracted terms: `floor(mu + 1/2)`, or `mu - 1/2` when that is an integer.
pub fn subtraction_order(mu: f64) -> u32 {
    match Order::new(mu).ok().and_then(|o| o.half_integer_index()) {
        Some(n) => n as u32,
        None => (mu + 0.5).floor() as u32,
    }
}

impl DensityEvaluator {
    pub fn new(mu: f64, x: f64) -> Result<Self> {
        Self::with_quad(ModelParams::new(mu, x)?, QuadratureSpec::default())
    }

    pub fn with_quad(params: ModelParams, quad: QuadratureSpec) -> Result<Self> {
        let quad = QuadratureSpec::new(quad.abs_tol, quad.rel_tol)?
            .with_max_subdivisions(quad.max_subdivisions)
            .with_splits(quad.split_points);
        if params.lambda < FRAGILE_LAMBDA {
            log::warn!(
                "lambda = {} is below {FRAGILE_LAMBDA}: the density concentrates near 0 and evaluation is fragile",
                params.lambda
            );
        }
        let w = build_w(&params)?;
        let m0 = w_moment(&w, 0)?;
        // inner integrals are controlled relative to their own size so that
        // the far tail of q keeps its relative accuracy
        let inner = QuadratureSpec::new(f64::MIN_POSITIVE, (0.1 * quad.rel_tol).max(1e-13))?
            .with_max_subdivisions(quad.max_subdivisions.max(400));
        Ok(DensityEvaluator {
            params,
            w,
            l_terms: subtraction_order(params.mu),
            t_switch: 1e3 * params.lambda.powi(2).max(1.0),
            quad,
            m0,
            inner,
        })
    }

    fn stable_case(&self) -> bool {
        self.params.half_integer() == Some(0)
    }

    fn prefactor(&self, t: f64) -> f64 {
        let lam = self.params.lambda;
        lam * (-lam * lam / (4.0 * t)).exp() / (PI * t).sqrt()
    }

    /// `q_mu(t)`.
    pub fn density(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if self.stable_case() {
            let lam = self.params.lambda;
            return Ok(lam * (-lam * lam / (4.0 * t)).exp() / (2.0 * (PI * t.powi(3)).sqrt()));
        }
        if t <= self.t_switch {
            self.density_small_t(t)
        } else {
            self.density_subtracted(t, self.l_terms)
        }
    }

    /// Evaluates a batch of times; the result does not depend on scheduling.
    pub fn density_batch(&self, ts: &[f64]) -> Vec<Result<f64>> {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            ts.par_iter().map(|&t| self.density(t)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            ts.iter().map(|&t| self.density(t)).collect()
        }
    }

    /// Small-`t` route (no subtraction, Gaussian factor integrated exactly).
    pub fn density_small_t(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let p = &self.params;
        let bracket = p.x.powf(p.mu - 0.5) / (2.0 * t) - self.m0
            + self.gauss_mixture(t)
            + self.gauss_discrete(t)?;
        Ok(self.prefactor(t) * bracket)
    }

    /// `int e^{-kappa/4t} w2 dv` over the exponential mixture: each node
    /// contributes `sqrt(pi t) erfcx((lambda + 2 t u) / 2 sqrt t)`.
    fn gauss_mixture(&self, t: f64) -> f64 {
        let Some(mix) = &self.w.continuous else {
            return 0.0;
        };
        let st = t.sqrt();
        let y0 = self.params.lambda / (2.0 * st);
        // nodes with sqrt(t) u tiny: first-order expansion of erfcx about y0
        let k = mix.split_index(1e-6 / st);
        let (p0, p1) = mix.prefix(k);
        let e0 = erfcx(y0);
        let slope = 2.0 * y0 * e0 - 2.0 / PI.sqrt();
        let mut s = e0 * p0 + slope * st * p1;
        for (&u, &c) in mix.rates[k..].iter().zip(&mix.weights[k..]) {
            s += c * erfcx(y0 + st * u);
        }
        (PI * t).sqrt() * s
    }

    /// `int e^{-kappa/4t} w1 dv`.
    fn gauss_discrete(&self, t: f64) -> Result<f64> {
        let terms = &self.w.discrete_terms;
        if terms.is_empty() {
            return Ok(0.0);
        }
        let lam = self.params.lambda;
        let slowest = terms.iter().map(|d| -d.rate.re).fold(f64::INFINITY, f64::min);
        let decay = 0.9 * (slowest + lam / (2.0 * t));
        let f = |v: f64| (-v * (2.0 * lam + v) / (4.0 * t)).exp() * self.w.w1(v);
        Ok(integrate_semi_infinite(f, 0.0, decay, &self.inner)?.value)
    }

    /// Large-`t` route with `l` subtracted Taylor terms; valid for any
    /// `t > 0` as long as the first `l` moments of `w` exist.
    pub fn density_subtracted(&self, t: f64, l: u32) -> Result<f64> {
        check_time(t)?;
        let p = &self.params;
        if l > 0 && (l as f64) >= p.mu + 0.5 - 1e-12 {
            return Err(Error::Integrability { m: l, mu: p.mu });
        }
        let lam = p.lambda;
        let w = &self.w;
        let f = |psi: f64| {
            let v = psi.exp();
            let s = v * (2.0 * lam + v) / (4.0 * t);
            let r = subtracted_exp(l, s) * w.eval(v) * v;
            if r.is_finite() {
                r
            } else {
                0.0
            }
        };
        let lower = integrate_semi_infinite(|tau| f(-tau), 0.0, 0.9 * (l as f64 + 2.0), &self.inner)?;
        let upper_decay = if self.w.has_continuous() {
            0.9 * (2.0 * p.mu + 1.0 - 2.0 * l as f64)
        } else {
            1.8
        };
        let mut splits = vec![(2.0 * t.sqrt()).ln(), 40f64.ln()];
        if self.w.has_continuous() {
            splits.push(self.w.v_max.ln());
        }
        splits.retain(|s| s.is_finite() && *s > 0.0 && *s < 340.0);
        let upper = integrate_semi_infinite(f, 0.0, upper_decay, &self.inner.clone().with_splits(splits))?;
        let mut bracket = lower.value + upper.value;
        if l == 0 {
            bracket += p.x.powf(p.mu - 0.5) / (2.0 * t);
        }
        Ok(self.prefactor(t) * bracket)
    }

    /// `int_0^inf e^{-r^2 t} q(t) dt`.
    pub fn laplace(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r.is_finite()) {
            return domain(format!("r must be finite and > 0, got {r}"));
        }
        let r2 = r * r;
        let lo = self.log_t_floor();
        let hi = (745.0 / r2).ln();
        if hi <= lo {
            return Ok(0.0);
        }
        let splits = [(0.5 * self.params.lambda.powi(2)).ln(), self.t_switch.ln(), -r2.ln()];
        self.integrate_log_t(lo, hi, &splits, |t| (-r2 * t).exp())
    }

    /// `int_0^inf q(t) dt`.
    pub fn mass(&self) -> Result<f64> {
        self.upper_integral(self.log_t_floor())
    }

    /// `P(A(tau) > t) = int_t^inf q`.
    pub fn survival(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        self.upper_integral(t.ln().max(self.log_t_floor()))
    }

    /// `ln t` below which `q` underflows (`lambda^2/4t > 700`).
    fn log_t_floor(&self) -> f64 {
        (self.params.lambda.powi(2) / 2800.0).ln()
    }

    /// `int_{e^from}^inf q`: quadrature in `ln t` up to a cut `T`, tail law beyond.
    fn upper_integral(&self, from: f64) -> Result<f64> {
        let mu = self.params.mu;
        let (cut, tail) = if mu == 0.0 {
            let cut = LOG_TAIL_START.max(from + 5.0);
            (cut, self.log_tail_survival(cut.exp()))
        } else {
            // walk out until t q(t) / mu, the tail mass beyond t, is negligible
            let mut cut = (self.t_switch.ln() + 5.0).max(from + 5.0);
            loop {
                let t = cut.exp();
                let tail = t * self.density(t)? / mu;
                if tail < 1e-11 || cut >= 230.0 {
                    break (cut, tail);
                }
                cut += 5.0;
            }
        };
        let mut splits: Vec<f64> = vec![(0.5 * self.params.lambda.powi(2)).ln(), self.t_switch.ln()];
        let mut s = from.ceil();
        while s < cut {
            splits.push(s);
            s += 10.0;
        }
        Ok(self.integrate_log_t(from, cut, &splits, |_| 1.0)? + tail)
    }

    /// `P(A > t)` from the leading tail law, for `t` deep in the tail.
    pub(crate) fn tail_mass_beyond(&self, t: f64) -> Result<f64> {
        if self.params.mu == 0.0 {
            Ok(self.log_tail_survival(t))
        } else {
            Ok(t * self.density(t)? / self.params.mu)
        }
    }

    /// `P(A > T)` for `mu = 0` and large `T`:
    /// `2 ln x / L - pi^2 ln x / 3 L^3`, `L = ln T + 2 ln 2 - gamma`.
    fn log_tail_survival(&self, t: f64) -> f64 {
        let a = 2.0 * self.params.x.ln();
        let big_l = t.ln() + 2.0 * 2f64.ln() - EULER_GAMMA;
        a / big_l - a * PI * PI / (6.0 * big_l.powi(3))
    }

    /// `int_{e^lo}^{e^hi} q(t) weight(t) dt` as an integral over `ln t`.
    fn integrate_log_t(
        &self,
        lo: f64,
        hi: f64,
        splits: &[f64],
        weight: impl Fn(f64) -> f64,
    ) -> Result<f64> {
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let f = |sigma: f64| {
            let t = sigma.exp();
            match self.density(t) {
                Ok(q) => t * q * weight(t),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let spec = self
            .quad
            .clone()
            .with_splits(splits.iter().copied().filter(|s| *s > lo && *s < hi));
        let res = integrate_finite(f, lo, hi, &spec);
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(res?.value)
    }

    /// Limit of `t^{mu+1} q(t)` (or `(ln t)^2 t q(t)` when `mu = 0`).
    pub fn tail_constant(&self) -> Result<TailConstant> {
        let p = &self.params;
        let mu = p.mu;
        let regime = if mu == 0.0 {
            TailRegime::LogCorrected
        } else {
            TailRegime::PowerLaw
        };
        let t0 = if mu == 0.0 { 1e20 } else { 10.0 * self.t_switch };
        let mut table = Vec::with_capacity(TAIL_POINTS);
        for k in 0..TAIL_POINTS {
            let t = t0 * 4f64.powi(k as i32);
            let scale = match regime {
                TailRegime::LogCorrected => t * t.ln().powi(2),
                TailRegime::PowerLaw => t.powf(mu + 1.0),
            };
            table.push((t, scale * self.density(t)?));
        }
        let (value, error_estimate, analytic) = if let Some(n) = p.half_integer() {
            let value = if n == 0 {
                p.lambda / (2.0 * PI.sqrt())
            } else {
                let m = n as u32 + 1;
                let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
                let fact: f64 = (1..=m).map(f64::from).product();
                p.lambda * sign * w_moment(&self.w, m)? / (4f64.powi(m as i32) * fact * PI.sqrt())
            };
            (value, 0.0, true)
        } else if mu == 0.0 {
            let pts: Vec<(f64, f64)> = table.iter().map(|&(t, g)| (1.0 / t.ln(), g)).collect();
            let n = pts.len();
            let hi = neville_at_zero(&pts[n - 5..]);
            let lo = neville_at_zero(&pts[n - 4..]);
            (hi, (hi - lo).abs(), false)
        } else {
            let g: Vec<f64> = table.iter().map(|&(_, g)| g).collect();
            let (v, e) = richardson(&g, &correction_exponents(mu, 2));
            (v, e, false)
        };
        if !(value > 0.0) || error_estimate > 1e-2 * value.abs() {
            return Err(Error::NonConvergence {
                value,
                error: error_estimate,
                context: "tail constant extrapolation",
            });
        }
        Ok(TailConstant {
            mu,
            value,
            regime,
            error_estimate,
            analytic,
            table,
        })
    }
}

pub(crate) const TAIL_POINTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailRegime {
    /// `q ~ C t^{-mu-1}`
    PowerLaw,
    /// `q ~ C t^{-1} (ln t)^{-2}`
    LogCorrected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailConstant {
    pub mu: f64,
    pub value: f64,
    pub regime: TailRegime,
    pub error_estimate: f64,
    /// exact moment formula rather than extrapolation
    pub analytic: bool,
    /// `(t, t^{mu+1} q(t))` or `(t, (ln t)^2 t q(t))` on the geometric grid
    pub table: Vec<(f64, f64)>,
}

/// Relative exponents `p` of the corrections `t^{-p}` to `t^{mu+1} q(t)`:
/// sums `k mu + j` (the Laplace transform expands in `r^{2 mu k} r^{2 j}`),
/// smallest first.
pub(crate) fn correction_exponents(mu: f64, count: usize) -> Vec<f64> {
    let mut ps: Vec<f64> = (0..8)
        .flat_map(|k| (0..6).map(move |j| k as f64 * mu + j as f64))
        .filter(|&p| p > 1e-9)
        .collect();
    ps.sort_by(|a, b| a.total_cmp(b));
    ps.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    ps.truncate(count);
    ps
}

/// Repeated Richardson elimination on a ratio-4 grid; returns the last
/// extrapolant and its change from the previous one.
pub(crate) fn richardson(g: &[f64], exponents: &[f64]) -> (f64, f64) {
    let mut cur = g.to_vec();
    for &p in exponents {
        let rho = 4f64.powf(-p);
        cur = cur.windows(2).map(|w| (w[1] - rho * w[0]) / (1.0 - rho)).collect();
    }
    let n = cur.len();
    (cur[n - 1], (cur[n - 1] - cur[n - 2]).abs())
}

/// Polynomial through `pts` evaluated at 0.
pub(crate) fn neville_at_zero(pts: &[(f64, f64)]) -> f64 {
    let mut p: Vec<f64> = pts.iter().map(|&(_, y)| y).collect();
    let n = pts.len();
    for m in 1..n {
        for i in 0..n - m {
            let (xi, xj) = (pts[i].0, pts[i + m].0);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

/// `e^{-s} - sum_{j<=l} (-s)^j / j!`.
fn subtracted_exp(l: u32, s: f64) -> f64 {
    if l == 0 {
        return (-s).exp_m1();
    }
    if s <= 2.0 * (l + 1) as f64 {
        // remainder series sum_{j>l} (-s)^j / j!
        let mut term = 1.0;
        for j in 1..=l + 1 {
            term *= -s / j as f64;
        }
        let mut total: f64 = 0.0;
        let mut j = l + 1;
        while term.abs() > 1e-17 * total.abs() {
            total += term;
            j += 1;
            term *= -s / j as f64;
        }
        total
    } else {
        let mut total = (-s).exp();
        let mut term = 1.0;
        for j in 0..=l {
            total -= term;
            term *= -s / (j + 1) as f64;
        }
        total
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        domain(format!("t must be finite and > 0, got {t}"))
    }
}

pub fn q_density(ev: &DensityEvaluator, t: f64) -> Result<f64> {
    ev.density(t)
}

pub fn laplace_of_density(ev: &DensityEvaluator, r: f64) -> Result<f64> {
    ev.laplace(r)
}

pub fn tail_constant(ev: &DensityEvaluator) -> Result<TailConstant> {
    ev.tail_constant()
}

/// Density of `A(inf) = 1/4Z`, `Z ~ Gamma(mu, 1)`:
/// `2^{-2 mu} e^{-1/4t} / (Gamma(mu) t^{1+mu})`.
pub fn dufresne_density(mu: f64, t: f64) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return domain(format!("mu must be finite and > 0, got {mu}"));
    }
    check_time(t)?;
    let log_q = -2.0 * mu * 2f64.ln() - 0.25 / t - libm::lgamma(mu) - (1.0 + mu) * t.ln();
    Ok(log_q.exp())
}

/// `x^mu K_mu(x r) / K_mu(r)`, the Laplace transform of `q_mu` at `r^2`.
pub fn laplace_ratio(mu: f64, x: f64, r: f64) -> Result<f64> {
    let nu = Order::new(mu)?;
    if !(x.is_finite() && x > 1.0) {
        return domain(format!("start point must satisfy x > 1, got {x}"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return domain(format!("r must be finite and > 0, got {r}"));
    }
    let num = bessel_k_scaled(nu, x * r)?;
    let den = bessel_k_scaled(nu, r)?;
    Ok((mu * x.ln() + num.ln() - den.ln() - (x - 1.0) * r).exp())
}

/// Density of `A` for hitting level `a`: `q_{mu, x/a}(t / a^2) / a^2`.
pub fn rescale(mu: f64, a: f64, x: f64, t: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite() && x > a) {
        return domain(format!("need 0 < a < x, got a = {a}, x = {x}"));
    }
    check_time(t)?;
    let ev = DensityEvaluator::new(mu, x / a)?;
    Ok(ev.density(t / (a * a))? / (a * a))
}
