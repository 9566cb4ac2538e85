//! Poisson kernel of the half-space `{u_n > 1}` for hyperbolic Brownian
//! motion with drift, started at height `x`:
//! `P(rho) = (4 pi)^{-(n-1)/2} int_0^inf e^{-rho^2/4t} q_mu(t) t^{-(n-1)/2} dt`,
//! where `rho` is the horizontal distance to the exit point. The drift
//! `alpha` of the motion enters through `mu = (alpha + n - 1) / 2`.

use std::f64::consts::PI;

use crate::density::{
    correction_exponents, neville_at_zero, richardson, DensityEvaluator, TailConstant, TailRegime,
    TAIL_POINTS,
};
use crate::error::{domain, Error, Result};
use crate::quad::{gauss_legendre_nodes, integrate_finite, integrate_semi_infinite, QuadratureSpec};
use crate::wlambda::ModelParams;

/// Panel width in `ln t` of the subordination table.
const TABLE_PANEL: f64 = 1.0;
/// The table covers `ln t` up to this value; the rest is the tail law.
const TABLE_LOG_T_MAX: f64 = 85.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonParams {
    pub n: u32,
    pub model: ModelParams,
    pub rho: f64,
}

impl PoissonParams {
    pub fn new(n: u32, mu: f64, x: f64, rho: f64) -> Result<Self> {
        if n < 2 {
            return domain(format!("dimension must be at least 2, got {n}"));
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return domain(format!("rho must be finite and >= 0, got {rho}"));
        }
        Ok(PoissonParams {
            n,
            model: ModelParams::new(mu, x)?,
            rho,
        })
    }

    /// Drift of the hyperbolic motion, `alpha = 2 mu - n + 1`.
    pub fn alpha(&self) -> f64 {
        2.0 * self.model.mu - self.n as f64 + 1.0
    }
}

/// Mu for a given drift: `mu = (alpha + n - 1) / 2`.
pub fn mu_from_alpha(alpha: f64, n: u32) -> f64 {
    0.5 * (alpha + n as f64 - 1.0)
}

/// `(n-1)`-dimensional Cauchy density `Gamma(n/2) lambda / (pi^{n/2} (lambda^2 + rho^2)^{n/2})`.
pub fn cauchy_kernel(n: u32, lambda: f64, rho: f64) -> f64 {
    let h = 0.5 * n as f64;
    libm::tgamma(h) * lambda / (PI.powf(h) * (lambda * lambda + rho * rho).powf(h))
}

/// Kernel evaluator for fixed `(n, mu, x)`. Holds `t q(t)` on a composite
/// Gauss-Legendre grid in `ln t`, so each kernel value is a weighted sum.
#[derive(Debug, Clone)]
pub struct PoissonKernel {
    pub n: u32,
    pub density: DensityEvaluator,
    /// `(t_j, w_j t_j q(t_j))`
    table: Vec<(f64, f64)>,
    table_end: f64,
    q_end: f64,
}

impl PoissonKernel {
    pub fn new(n: u32, mu: f64, x: f64) -> Result<Self> {
        PoissonParams::new(n, mu, x, 0.0)?;
        Self::from_density(n, DensityEvaluator::new(mu, x)?)
    }

    pub fn from_density(n: u32, density: DensityEvaluator) -> Result<Self> {
        if n < 2 {
            return domain(format!("dimension must be at least 2, got {n}"));
        }
        let lo = (density.params.lambda.powi(2) / 2800.0).ln();
        let panels = ((TABLE_LOG_T_MAX - lo) / TABLE_PANEL).ceil() as usize;
        let nodes = gauss_legendre_nodes(lo, TABLE_LOG_T_MAX, panels);
        let ts: Vec<f64> = nodes.iter().map(|&(s, _)| s.exp()).collect();
        let qs = density.density_batch(&ts);
        let mut table = Vec::with_capacity(ts.len());
        for ((&(_, w), &t), q) in nodes.iter().zip(&ts).zip(qs) {
            table.push((t, w * t * q?));
        }
        let table_end = TABLE_LOG_T_MAX.exp();
        let q_end = density.density(table_end)?;
        Ok(PoissonKernel {
            n,
            density,
            table,
            table_end,
            q_end,
        })
    }

    fn half_dim(&self) -> f64 {
        0.5 * (self.n as f64 - 1.0)
    }

    /// Subordination integral.
    pub fn subordination(&self, rho: f64) -> Result<f64> {
        check_rho(rho)?;
        let h = self.half_dim();
        let c = 0.25 * rho * rho;
        let mut s: f64 = self
            .table
            .iter()
            .map(|&(t, w)| w * (-c / t - h * t.ln()).exp())
            .sum();
        // beyond the table q ~ C t^{-mu-1}; e^{-rho^2/4t} is flat there
        let t = self.table_end;
        s += t * self.q_end * t.powf(-h) * (-c / t).exp() / (self.density.params.mu + h);
        Ok(s / (4.0 * PI).powf(h))
    }

    /// Closed form through a single integral against `w`; the
    /// `(n-1)`-dimensional Cauchy density when `mu = 1/2`.
    pub fn closed(&self, rho: f64) -> Result<f64> {
        check_rho(rho)?;
        if self.n == 2 {
            return Err(Error::Branch("the closed-form kernel in dimension 2"));
        }
        let p = &self.density.params;
        if p.half_integer() == Some(0) {
            return Ok(cauchy_kernel(self.n, p.lambda, rho));
        }
        self.closed_branch(rho)
    }

    /// `Gamma(a) lambda / (2 pi^{n/2}) [ (n-2) x^{mu-1/2} B^{-n/2} + int w (A^{-a} - B^{-a}) dv ]`
    /// for `mu < 1/2`, and with `(n/2-1) kappa B^{-n/2}` moved under the
    /// integral for `mu > 1/2`; `a = n/2 - 1`, `A = (lambda+v)^2 + rho^2`,
    /// `B = lambda^2 + rho^2`.
    fn closed_branch(&self, rho: f64) -> Result<f64> {
        let p = &self.density.params;
        if p.half_integer() == Some(0) {
            return Err(Error::Branch("the subtracted closed form at mu = 1/2"));
        }
        let subtract = p.mu > 0.5;
        let n = self.n as f64;
        let a = 0.5 * n - 1.0;
        let lam = p.lambda;
        let b = lam * lam + rho * rho;
        let w = &self.density.w;
        let f = |psi: f64| {
            let v = psi.exp();
            let z = v * (2.0 * lam + v) / b;
            let g = if subtract { power_gap_subtracted(a, z) } else { power_gap(a, z) };
            let r = w.eval(v) * g * v;
            if r.is_finite() {
                r
            } else {
                0.0
            }
        };
        let spec = QuadratureSpec::new(f64::MIN_POSITIVE, 1e-10)?.with_max_subdivisions(1000);
        let lower_decay = if subtract { 2.7 } else { 1.8 };
        let upper_decay = match (w.has_continuous(), subtract) {
            (false, _) => 1.8,
            (true, true) => 0.9 * (2.0 * p.mu - 1.0),
            (true, false) => 0.9 * (2.0 * p.mu + 1.0),
        };
        let mut splits = vec![0.5 * b.ln(), 40f64.ln()];
        if w.has_continuous() {
            splits.push(w.v_max.ln());
        }
        splits.retain(|s| s.is_finite() && *s > 0.0 && *s < 340.0);
        let lower = integrate_semi_infinite(|tau| f(-tau), 0.0, lower_decay, &spec)?;
        let upper = integrate_semi_infinite(f, 0.0, upper_decay, &spec.with_splits(splits))?;
        let mut bracket = b.powf(-a) * (lower.value + upper.value);
        if !subtract {
            bracket += (n - 2.0) * p.x.powf(p.mu - 0.5) * b.powf(-0.5 * n);
        }
        Ok(libm::tgamma(a) * lam / (2.0 * PI.powf(0.5 * n)) * bracket)
    }

    /// Log-log slope of the kernel between two radii.
    pub fn tail_slope(&self, rho_lo: f64, rho_hi: f64) -> Result<f64> {
        if !(rho_lo > 0.0 && rho_hi > rho_lo) {
            return domain(format!("need 0 < rho_lo < rho_hi, got {rho_lo}, {rho_hi}"));
        }
        let (a, b) = (self.subordination(rho_lo)?, self.subordination(rho_hi)?);
        Ok((b / a).ln() / (rho_hi / rho_lo).ln())
    }

    /// Limit of `rho^{n+2mu-1} P` (or `(ln rho)^2 rho^{n-1} P` when `mu = 0`),
    /// extrapolated from a ratio-2 grid in `rho`.
    pub fn tail(&self) -> Result<TailConstant> {
        let p = &self.density.params;
        let mu = p.mu;
        let n = self.n as f64;
        let regime = if mu == 0.0 {
            TailRegime::LogCorrected
        } else {
            TailRegime::PowerLaw
        };
        let rho0 = if mu == 0.0 {
            1e10
        } else {
            2.0 * (10.0 * self.density.t_switch).sqrt()
        };
        let mut table = Vec::with_capacity(TAIL_POINTS);
        for k in 0..TAIL_POINTS {
            let rho = rho0 * 2f64.powi(k as i32);
            let scale = match regime {
                TailRegime::LogCorrected => rho.ln().powi(2) * rho.powf(n - 1.0),
                TailRegime::PowerLaw => rho.powf(n + 2.0 * mu - 1.0),
            };
            table.push((rho, scale * self.subordination(rho)?));
        }
        let (value, error_estimate, analytic) = if p.half_integer() == Some(0) {
            (libm::tgamma(0.5 * n) * p.lambda / PI.powf(0.5 * n), 0.0, true)
        } else if mu == 0.0 {
            let pts: Vec<(f64, f64)> = table.iter().map(|&(r, g)| (1.0 / r.ln(), g)).collect();
            let m = pts.len();
            let hi = neville_at_zero(&pts[m - 5..]);
            let lo = neville_at_zero(&pts[m - 4..]);
            (hi, (hi - lo).abs(), false)
        } else {
            // a step of 2 in rho is a step of 4 in t, so the t-exponents apply
            let g: Vec<f64> = table.iter().map(|&(_, g)| g).collect();
            let (v, e) = richardson(&g, &correction_exponents(mu, 2));
            (v, e, false)
        };
        if !(value > 0.0) || error_estimate > 1e-2 * value.abs() {
            return Err(Error::NonConvergence {
                value,
                error: error_estimate,
                context: "kernel tail extrapolation",
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

    /// `P(|Y| <= r)` for the exit point `Y`: `int q(t) P(chi^2_{n-1} <= r^2/2t) dt`.
    pub fn radial_cdf(&self, r: f64) -> Result<f64> {
        check_rho(r)?;
        let c = 0.25 * r * r;
        Ok(self
            .table
            .iter()
            .map(|&(t, w)| w * (1.0 - chi_square_tail(self.n - 1, c / t)))
            .sum())
    }

    /// `int_{R^{n-1}} P dy`: radial quadrature out to `R`, plus the mass
    /// beyond `R` as `int q(t) P(chi^2_{n-1} > R^2/2t) dt`.
    pub fn normalization(&self) -> Result<f64> {
        let h = self.half_dim();
        let lam = self.density.params.lambda;
        let area = 2.0 * PI.powf(h) / libm::tgamma(h);
        let (r_min, r_max) = (1e-9 * lam, 1e3 * lam.max(1.0));
        let failure = std::cell::RefCell::new(None);
        let f = |s: f64| {
            let rho = s.exp();
            match self.subordination(rho) {
                Ok(k) => area * rho.powf(2.0 * h) * k,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let spec = QuadratureSpec::new(1e-12, 1e-11)?.with_splits([lam.ln(), 0.0]);
        let inner = integrate_finite(f, r_min.ln(), r_max.ln(), &spec);
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        // P is flat near 0
        let core = area * r_min.powf(2.0 * h) * self.subordination(r_min)? / (2.0 * h);
        let c = 0.25 * r_max * r_max;
        let outer: f64 = self
            .table
            .iter()
            .map(|&(t, w)| w * chi_square_tail(self.n - 1, c / t))
            .sum();
        let beyond = self.density.tail_mass_beyond(self.table_end)?;
        Ok(inner?.value + core + outer + beyond)
    }
}

/// `P(chi^2_k > 2s) = Gamma(k/2, s) / Gamma(k/2)`.
fn chi_square_tail(k: u32, s: f64) -> f64 {
    // start from k = 1 or 2 and step up by Q(a+1, s) = Q(a, s) + s^a e^{-s} / Gamma(a+1)
    let (mut a, mut q) = if k % 2 == 1 {
        (0.5, libm::erfc(s.sqrt()))
    } else {
        (1.0, (-s).exp())
    };
    while a < 0.5 * k as f64 - 0.25 {
        q += (a * s.ln() - s - libm::lgamma(a + 1.0)).exp();
        a += 1.0;
    }
    q
}

/// `(1+z)^{-a} - 1`.
fn power_gap(a: f64, z: f64) -> f64 {
    (-a * z.ln_1p()).exp_m1()
}

/// `(1+z)^{-a} - 1 + a z`, by its binomial series for small `z`.
fn power_gap_subtracted(a: f64, z: f64) -> f64 {
    if z > 0.1 {
        return power_gap(a, z) + a * z;
    }
    let mut term = -a * z;
    let mut total: f64 = 0.0;
    let mut k = 1.0;
    loop {
        term *= (-a - k) / (k + 1.0) * z;
        k += 1.0;
        total += term;
        if term.abs() <= 1e-17 * total.abs() {
            break total;
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho >= 0.0 && rho.is_finite() {
        Ok(())
    } else {
        domain(format!("rho must be finite and >= 0, got {rho}"))
    }
}

pub fn kernel_subordination(p: &PoissonParams) -> Result<f64> {
    PoissonKernel::new(p.n, p.model.mu, p.model.x)?.subordination(p.rho)
}

pub fn kernel_closed(p: &PoissonParams) -> Result<f64> {
    PoissonKernel::new(p.n, p.model.mu, p.model.x)?.closed(p.rho)
}

pub fn kernel_tail(p: &PoissonParams) -> Result<TailConstant> {
    PoissonKernel::new(p.n, p.model.mu, p.model.x)?.tail()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn params_bookkeeping() {
        let p = PoissonParams::new(3, 1.5, 2.0, 1.0).unwrap();
        assert_eq!(p.alpha(), 1.0);
        assert_eq!(mu_from_alpha(p.alpha(), 3), 1.5);
        assert!(PoissonParams::new(1, 1.0, 2.0, 0.0).is_err());
        assert!(PoissonParams::new(3, 1.0, 2.0, -1.0).is_err());
    }

    #[test]
    fn cauchy_values() {
        assert_relative_eq!(cauchy_kernel(2, 1.0, 0.0), 1.0 / PI, max_relative = 1e-15);
        // the 2-d Cauchy density integrates to one: int 2 pi rho^2 P d(ln rho)
        let spec = QuadratureSpec::new(1e-13, 1e-12).unwrap();
        let f = |s: f64| 2.0 * PI * (2.0 * s).exp() * cauchy_kernel(3, 1.0, s.exp());
        let m = integrate_finite(f, -30.0, 40.0, &spec).unwrap();
        assert_relative_eq!(m.value, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn helper_series() {
        for &a in &[0.5, 1.0, 2.5] {
            for &z in &[1e-6, 1e-3, 0.05, 0.099, 0.2, 3.0] {
                let direct = (1.0f64 + z).powf(-a) - 1.0 + a * z;
                assert_relative_eq!(power_gap_subtracted(a, z), direct, max_relative = 1e-6);
            }
        }
        assert_relative_eq!(power_gap_subtracted(1.0, 1e-8), 1e-16, max_relative = 1e-7);
        assert_relative_eq!(chi_square_tail(1, 0.5), libm::erfc(0.5f64.sqrt()), max_relative = 1e-15);
        assert_relative_eq!(chi_square_tail(2, 0.5), (-0.5f64).exp(), max_relative = 1e-15);
        // k = 3: erfc(sqrt s) + 2 sqrt(s/pi) e^{-s}
        let s = 1.7f64;
        let q3 = libm::erfc(s.sqrt()) + 2.0 * (s / PI).sqrt() * (-s).exp();
        assert_relative_eq!(chi_square_tail(3, s), q3, max_relative = 1e-14);
    }

    #[test]
    fn stable_case_is_cauchy() {
        for n in [2, 3, 4] {
            let k = PoissonKernel::new(n, 0.5, 2.0).unwrap();
            for &rho in &[0.0, 0.3, 1.0, 7.0, 300.0] {
                assert_relative_eq!(
                    k.subordination(rho).unwrap(),
                    cauchy_kernel(n, 1.0, rho),
                    max_relative = 1e-10
                );
            }
            if n > 2 {
                assert_eq!(k.closed(1.0).unwrap(), cauchy_kernel(n, 1.0, 1.0));
                assert!(matches!(k.closed_branch(1.0), Err(Error::Branch(_))));
            }
        }
        let k = PoissonKernel::new(2, 0.5, 2.0).unwrap();
        assert!(matches!(k.closed(1.0), Err(Error::Branch(_))));
    }

    #[test]
    fn closed_matches_subordination() {
        for &(n, mu, x) in &[(3, 1.0, 2.0), (3, 0.0, 2.0), (4, 2.5, 2.0), (3, 0.3, 1.5), (4, 2.2, 3.0)] {
            let k = PoissonKernel::new(n, mu, x).unwrap();
            for &rho in &[0.0, 1.0, 2.0, 10.0] {
                let a = k.closed(rho).unwrap();
                let b = k.subordination(rho).unwrap();
                assert!((a - b).abs() <= 1e-6 * a.abs(), "n {n} mu {mu} rho {rho}: {a} {b}");
            }
        }
    }

    #[test]
    fn radial_cdf_in_stable_case() {
        for n in [2, 3] {
            let k = PoissonKernel::new(n, 0.5, 2.0).unwrap();
            for &r in &[0.1, 1.0, 3.0, 50.0] {
                let exact = crate::mc::cauchy_radial_cdf(n, 1.0, r).unwrap();
                assert!((k.radial_cdf(r).unwrap() - exact).abs() < 1e-9, "n {n} r {r}");
            }
        }
    }

    #[test]
    fn decreasing_in_rho() {
        let k = PoissonKernel::new(3, 1.0, 2.0).unwrap();
        let mut prev = f64::INFINITY;
        for j in 0..40 {
            let v = k.subordination(0.05 * 1.4f64.powi(j)).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn normalizes() {
        for &(n, mu) in &[(2, 0.0), (3, 1.0), (2, 1.5)] {
            let k = PoissonKernel::new(n, mu, 1.5).unwrap();
            assert!((k.normalization().unwrap() - 1.0).abs() < 1e-4, "n {n} mu {mu}");
        }
    }

    #[test]
    fn tail_constant_matches_density_tail() {
        // c = (4 pi)^{-h} 4^{mu+h} Gamma(mu+h) C_mu, h = (n-1)/2
        for &(n, mu) in &[(2, 1.0), (3, 1.5), (2, 0.5)] {
            let k = PoissonKernel::new(n, mu, 2.0).unwrap();
            let c = k.tail().unwrap();
            let h = 0.5 * (n as f64 - 1.0);
            let cm = k.density.tail_constant().unwrap().value;
            let expect = (4.0 * PI).powf(-h) * 4f64.powf(mu + h) * libm::tgamma(mu + h) * cm;
            assert_relative_eq!(c.value, expect, max_relative = 1e-5);
        }
    }
}
