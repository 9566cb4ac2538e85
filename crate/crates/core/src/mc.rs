//! Monte-Carlo oracles: Euler paths of `Y = ln x + B(t) - 2 mu t` (with
//! `E B(t)^2 = 2t`) up to the first hit of 0, exact samples of
//! `A(inf) = x^2 / 4Z`, `Z ~ Gamma(mu, 1)`, and radial exit points of the
//! hyperbolic motion. Every path draws from its own ChaCha stream keyed by
//! `(seed, purpose, path id)`, so results do not depend on the worker count.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{domain, Error, Result};
use crate::poisson::PoissonKernel;
use crate::specfun::Order;
use crate::wlambda::ModelParams;

/// 99% two-sided Kolmogorov quantile, `sqrt(-ln(0.005) / 2)`.
pub const KS_99: f64 = 1.627_600_218_613_39;
/// Allowance added to KS thresholds for the time discretization.
pub const DISCRETIZATION_ALLOWANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct MCConfig {
    pub seed: u64,
    pub paths: usize,
    pub dt: f64,
    pub bridge_correction: bool,
    pub workers: usize,
    /// paths still above 0 at this time are censored
    pub t_max: f64,
}

impl Default for MCConfig {
    fn default() -> Self {
        MCConfig {
            seed: 20_240_917,
            paths: 100_000,
            dt: 1e-3,
            bridge_correction: true,
            workers: 1,
            t_max: 1e4,
        }
    }
}

impl MCConfig {
    pub fn validated(&self) -> Result<&Self> {
        if self.paths == 0 || self.workers == 0 {
            return domain("paths and workers must be at least 1");
        }
        if !(self.dt > 0.0 && self.dt.is_finite() && self.t_max > self.dt) {
            return domain(format!("need 0 < dt < t_max, got dt = {}, t_max = {}", self.dt, self.t_max));
        }
        Ok(self)
    }
}

/// Sorted sample; `censored` counts paths dropped at the time cap.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    pub values: Vec<f64>,
    pub count: usize,
    pub censored: usize,
}

impl EmpiricalSample {
    pub fn from_unsorted(mut values: Vec<f64>, censored: usize) -> Self {
        values.sort_by(f64::total_cmp);
        EmpiricalSample {
            count: values.len(),
            values,
            censored,
        }
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / (self.count + self.censored).max(1) as f64
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.count as f64
    }

    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let ss: f64 = self.values.iter().map(|v| (v - m).powi(2)).sum();
        (ss / (self.count as f64 - 1.0)).sqrt()
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let k = ((p * self.count as f64).ceil() as usize).clamp(1, self.count);
        self.values[k - 1]
    }
}

/// Stream purposes; distinct so that the samples combined in one check are independent.
#[derive(Debug, Clone, Copy)]
enum Stream {
    Hit = 1,
    AInf = 2,
    AInfOther = 3,
    Exit = 4,
}

fn path_rng(seed: u64, stream: Stream, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 48) | path as u64);
    rng
}

/// Runs `f(path id)` for every path on `cfg.workers` threads; output is in
/// path order whatever the scheduling.
fn run_paths<T, F>(cfg: &MCConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if cfg.workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers)
                .build()
                .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
            return Ok(pool.install(|| (0..cfg.paths).into_par_iter().map(&f).collect()));
        }
    }
    Ok((0..cfg.paths).map(f).collect())
}

/// One path of `A(tau)`; `None` when censored.
fn hit_path(p: &ModelParams, cfg: &MCConfig, rng: &mut ChaCha8Rng) -> Option<f64> {
    let dt = cfg.dt;
    let sd = (2.0 * dt).sqrt();
    let drift = -2.0 * p.mu * dt;
    let steps = (cfg.t_max / dt).ceil() as u64;
    let mut y = p.x.ln();
    let mut e = p.x * p.x;
    let mut a = 0.0;
    for _ in 0..steps {
        let z: f64 = StandardNormal.sample(rng);
        let y_next = y + drift + sd * z;
        if y_next <= 0.0 {
            // crossing time by linear interpolation; e^{2Y} = 1 there
            let theta = y / (y - y_next);
            return Some(a + 0.5 * theta * dt * (e + 1.0));
        }
        let e_next = (2.0 * y_next).exp();
        if cfg.bridge_correction {
            let u: f64 = rng.random();
            if u < (-y * y_next / dt).exp() {
                // the bridge dipped below 0; take the crossing mid-step
                return Some(a + 0.25 * dt * (e + 1.0));
            }
        }
        a += 0.5 * dt * (e + e_next);
        y = y_next;
        e = e_next;
    }
    None
}

fn hit_values(p: &ModelParams, cfg: &MCConfig) -> Result<Vec<Option<f64>>> {
    cfg.validated()?;
    run_paths(cfg, |i| hit_path(p, cfg, &mut path_rng(cfg.seed, Stream::Hit, i)))
}

/// Samples of `A(tau)` for start `x` and hitting level 1.
pub fn simulate_hit_functional(params: &ModelParams, cfg: &MCConfig) -> Result<EmpiricalSample> {
    let raw = hit_values(params, cfg)?;
    let censored = raw.iter().filter(|v| v.is_none()).count();
    Ok(EmpiricalSample::from_unsorted(raw.into_iter().flatten().collect(), censored))
}

fn a_inf_values(mu: f64, x: f64, cfg: &MCConfig, stream: Stream) -> Result<Vec<f64>> {
    Order::new(mu)?;
    if mu <= 0.0 {
        return domain(format!("A(inf) is finite only for mu > 0, got {mu}"));
    }
    if !(x > 0.0 && x.is_finite()) {
        return domain(format!("x must be finite and > 0, got {x}"));
    }
    cfg.validated()?;
    let gamma = Gamma::new(mu, 1.0).map_err(|e| Error::Domain(format!("gamma law: {e}")))?;
    run_paths(cfg, |i| {
        let z: f64 = gamma.sample(&mut path_rng(cfg.seed, stream, i));
        x * x / (4.0 * z)
    })
}

/// Exact samples of `A_x(inf) = x^2 / 4Z`.
pub fn sample_a_inf(mu: f64, x: f64, cfg: &MCConfig) -> Result<EmpiricalSample> {
    Ok(EmpiricalSample::from_unsorted(a_inf_values(mu, x, cfg, Stream::AInf)?, 0))
}

/// Two-sample KS distance between `A_x(tau) + A'_1(inf)` (independent
/// summands) and `A_x(inf)`, plus both sample sizes.
pub fn identity_check(params: &ModelParams, cfg: &MCConfig) -> Result<(f64, usize, usize)> {
    let hits = hit_values(params, cfg)?;
    let tails = a_inf_values(params.mu, 1.0, cfg, Stream::AInf)?;
    let direct = a_inf_values(params.mu, params.x, cfg, Stream::AInfOther)?;
    let sum: Vec<f64> = hits
        .iter()
        .zip(&tails)
        .filter_map(|(h, t)| h.map(|h| h + t))
        .collect();
    let left = EmpiricalSample::from_unsorted(sum, 0);
    let right = EmpiricalSample::from_unsorted(direct, 0);
    Ok((ks_two_sample(&left, &right), left.count, right.count))
}

/// Radial exit distances `|sqrt(2 A(tau)) G|`, `G` standard normal in `R^{n-1}`.
pub fn simulate_exit_point(n: u32, params: &ModelParams, cfg: &MCConfig) -> Result<EmpiricalSample> {
    if n < 2 {
        return domain(format!("dimension must be at least 2, got {n}"));
    }
    let hits = hit_values(params, cfg)?;
    let radii = run_paths(cfg, |i| {
        let a = hits[i]?;
        let mut rng = path_rng(cfg.seed, Stream::Exit, i);
        let r2: f64 = (1..n)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g * g
            })
            .sum();
        Some((2.0 * a * r2).sqrt())
    })?;
    let censored = radii.iter().filter(|v| v.is_none()).count();
    Ok(EmpiricalSample::from_unsorted(radii.into_iter().flatten().collect(), censored))
}

/// `sup |F_n - F|`.
pub fn ks_distance(s: &EmpiricalSample, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = s.count as f64;
    s.values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// `sup |F_n - G_m|` over the pooled sample.
pub fn ks_two_sample(a: &EmpiricalSample, b: &EmpiricalSample) -> f64 {
    let (n, m) = (a.count as f64, b.count as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.count && j < b.count {
        let v = a.values[i].min(b.values[j]);
        while i < a.count && a.values[i] <= v {
            i += 1;
        }
        while j < b.count && b.values[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// 99% critical value of the two-sample KS statistic.
pub fn ks_two_sample_critical(n: usize, m: usize) -> f64 {
    KS_99 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Hill estimate of the tail index from the largest `k` values.
pub fn hill_tail_index(s: &EmpiricalSample, k: usize) -> f64 {
    let k = k.min(s.count - 1);
    let threshold = s.values[s.count - 1 - k];
    let mean_log: f64 = s.values[s.count - k..]
        .iter()
        .map(|v| (v / threshold).ln())
        .sum::<f64>()
        / k as f64;
    1.0 / mean_log
}

/// `P(A(tau) <= t)` at `mu = 1/2`: `erfc(lambda / 2 sqrt t)`.
pub fn stable_cdf(lambda: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        libm::erfc(lambda / (2.0 * t.sqrt()))
    }
}

/// Radial distribution of the `(n-1)`-dimensional Cauchy law for `n = 2, 3`.
pub fn cauchy_radial_cdf(n: u32, lambda: f64, rho: f64) -> Result<f64> {
    match n {
        2 => Ok(2.0 / PI * (rho / lambda).atan()),
        3 => Ok(1.0 - lambda / (lambda * lambda + rho * rho).sqrt()),
        _ => domain(format!("closed radial law only for n = 2, 3, got {n}")),
    }
}

/// One line of the validation report.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRecord {
    pub test: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl ValidationRecord {
    fn below(test: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        ValidationRecord {
            test: test.into(),
            statistic,
            threshold,
            pass: statistic <= threshold,
        }
    }
}

/// The full oracle suite behind `mc-validate`.
pub fn validation_suite(cfg: &MCConfig) -> Result<Vec<ValidationRecord>> {
    cfg.validated()?;
    let mut out = Vec::new();

    let stable = ModelParams::new(0.5, 2.0)?;
    let s = simulate_hit_functional(&stable, cfg)?;
    let band = KS_99 / (s.count as f64).sqrt() + DISCRETIZATION_ALLOWANCE;
    out.push(ValidationRecord::below(
        "ks_hit_functional_mu0.5_x2",
        ks_distance(&s, |t| stable_cdf(stable.lambda, t)),
        band,
    ));
    out.push(ValidationRecord::below("censored_fraction_mu0.5_x2", s.censored_fraction(), 1e-3));

    for &(mu, x) in &[(0.5, 2.0), (1.0, 2.0), (3.0, 1.5)] {
        let (d, n, m) = identity_check(&ModelParams::new(mu, x)?, cfg)?;
        out.push(ValidationRecord::below(
            format!("identity_two_sample_ks_mu{mu}_x{x}"),
            d,
            ks_two_sample_critical(n, m) + DISCRETIZATION_ALLOWANCE,
        ));
    }

    let a = sample_a_inf(2.0, 2.0, cfg)?;
    out.push(ValidationRecord::below(
        "a_inf_mean_mu2_x2",
        (a.mean() - 1.0).abs(),
        3.0 * a.std_dev() / (a.count as f64).sqrt(),
    ));

    let hit = simulate_hit_functional(&ModelParams::new(1.0, 2.0)?, cfg)?;
    let k = (hit.count / 100).max(10);
    out.push(ValidationRecord::below(
        "tail_index_mu1_x2",
        (hill_tail_index(&hit, k) - 1.0).abs(),
        0.1,
    ));

    let exit = simulate_exit_point(2, &stable, cfg)?;
    out.push(ValidationRecord::below(
        "ks_exit_cauchy_n2_mu0.5_x2",
        ks_distance(&exit, |r| 2.0 / PI * (r / stable.lambda).atan()),
        KS_99 / (exit.count as f64).sqrt() + DISCRETIZATION_ALLOWANCE,
    ));

    let kernel = PoissonKernel::new(3, 1.0, 2.0)?;
    let exit = simulate_exit_point(3, &kernel.density.params, cfg)?;
    out.push(ValidationRecord::below(
        "ks_exit_kernel_n3_mu1_x2",
        ks_distance(&exit, |r| kernel.radial_cdf(r).unwrap_or(f64::NAN)),
        KS_99 / (exit.count as f64).sqrt() + DISCRETIZATION_ALLOWANCE,
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(paths: usize) -> MCConfig {
        MCConfig {
            paths,
            ..Default::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg(0).validated().is_err());
        let mut c = cfg(10);
        c.dt = -1.0;
        assert!(c.validated().is_err());
        c.dt = 1e-3;
        c.workers = 0;
        assert!(c.validated().is_err());
    }

    #[test]
    fn ks_on_own_quantiles() {
        let n = 1000;
        let s = EmpiricalSample::from_unsorted((0..n).map(|i| (i as f64 + 0.5) / n as f64).collect(), 0);
        assert!(ks_distance(&s, |u| u.clamp(0.0, 1.0)) <= 1.0 / n as f64);
        // shifted by 0.2: at least 0.2 of the mass is misplaced
        let shifted = EmpiricalSample::from_unsorted(s.values.iter().map(|v| v + 0.2).collect(), 0);
        assert!(ks_distance(&shifted, |u| u.clamp(0.0, 1.0)) >= 0.2 - 1e-12);
    }

    #[test]
    fn ks_uniform_band() {
        // 95% Kolmogorov quantile 1.358 / sqrt(n): about 95% of seeds land inside
        let inside = (0..40u64)
            .filter(|&seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let v: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
                ks_distance(&EmpiricalSample::from_unsorted(v, 0), |u| u) <= 1.358 / 100.0
            })
            .count();
        assert!(inside >= 33, "{inside} of 40");
    }

    #[test]
    fn two_sample_ks() {
        let a = EmpiricalSample::from_unsorted(vec![1.0, 2.0, 3.0, 4.0], 0);
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        let b = EmpiricalSample::from_unsorted(vec![5.0, 6.0], 0);
        assert_eq!(ks_two_sample(&a, &b), 1.0);
        let c = EmpiricalSample::from_unsorted(vec![2.5], 0);
        assert_eq!(ks_two_sample(&a, &c), 0.5);
    }

    #[test]
    fn a_inf_against_dufresne() {
        let s = sample_a_inf(1.0, 1.0, &cfg(20_000)).unwrap();
        // P(1/4Z <= t) = e^{-1/4t} for Z ~ Exp(1)
        let d = ks_distance(&s, |t| if t > 0.0 { (-0.25 / t).exp() } else { 0.0 });
        assert!(d < KS_99 / (s.count as f64).sqrt());
        let big = sample_a_inf(400.0, 1.0, &cfg(1000)).unwrap();
        assert!(big.quantile(0.99) < 1e-3);
        assert!(sample_a_inf(0.0, 1.0, &cfg(10)).is_err());
    }

    #[test]
    fn stable_case_matches_closed_law() {
        let p = ModelParams::new(0.5, 2.0).unwrap();
        let s = simulate_hit_functional(&p, &cfg(20_000)).unwrap();
        let d = ks_distance(&s, |t| stable_cdf(1.0, t));
        assert!(d < KS_99 / (s.count as f64).sqrt() + DISCRETIZATION_ALLOWANCE, "{d}");
        assert_eq!(s.censored, 0);
    }

    #[test]
    fn bridge_reduces_hitting_bias() {
        // exact median of A(tau) at mu = 1/2, x = 2: erfc(1/2 sqrt t) = 1/2
        let exact = 1.0 / (4.0 * 0.476_936_276_204_469_9f64.powi(2));
        let p = ModelParams::new(0.5, 2.0).unwrap();
        let mut c = cfg(20_000);
        c.dt = 1e-2;
        c.bridge_correction = false;
        let raw = simulate_hit_functional(&p, &c).unwrap().quantile(0.5);
        c.bridge_correction = true;
        let bridged = simulate_hit_functional(&p, &c).unwrap().quantile(0.5);
        assert!(raw > exact, "late detection overshoots");
        assert!((bridged - exact).abs() < (raw - exact).abs());
    }

    #[test]
    fn concentrates_as_x_tends_to_one() {
        let near = simulate_hit_functional(&ModelParams::new(3.0, 1.05).unwrap(), &cfg(2000)).unwrap();
        let far = simulate_hit_functional(&ModelParams::new(3.0, 1.5).unwrap(), &cfg(2000)).unwrap();
        assert!(near.quantile(0.5) < 0.2 * far.quantile(0.5));
    }

    #[test]
    fn exit_points_in_stable_case_are_cauchy() {
        let p = ModelParams::new(0.5, 2.0).unwrap();
        for n in [2, 3] {
            let s = simulate_exit_point(n, &p, &cfg(20_000)).unwrap();
            let d = ks_distance(&s, |r| cauchy_radial_cdf(n, 1.0, r).unwrap());
            assert!(d < KS_99 / (s.count as f64).sqrt() + DISCRETIZATION_ALLOWANCE, "n {n}: {d}");
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = ModelParams::new(1.0, 2.0).unwrap();
        let mut c = cfg(3000);
        let one = simulate_hit_functional(&p, &c).unwrap();
        c.workers = 3;
        let three = simulate_hit_functional(&p, &c).unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn hill_on_pareto() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v: Vec<f64> = (0..50_000).map(|_| 1.0 / (1.0 - rng.random::<f64>())).collect();
        let s = EmpiricalSample::from_unsorted(v, 0);
        assert_relative_eq!(hill_tail_index(&s, 2000), 1.0, max_relative = 0.08);
    }
}
