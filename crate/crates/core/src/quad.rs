//! Adaptive Gauss-Kronrod integration (21-point Kronrod extension of the
//! 10-point Gauss rule) with QUADPACK-style error estimates, and a
//! semi-infinite driver that lays out geometrically growing panels until a
//! caller-declared exponential envelope closes the tail.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{domain, Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Tolerances and subdivision budget shared by every integrator here.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Interior points where the integrand changes character; the interval
    /// is split there before any adaptive work.
    pub split_points: Vec<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-9,
            rel_tol: 1e-10,
            max_subdivisions: 400,
            split_points: Vec::new(),
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Result<Self> {
        QuadratureSpec {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
        .validated()
    }

    pub fn with_splits(mut self, splits: impl IntoIterator<Item = f64>) -> Self {
        self.split_points.extend(splits);
        self
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    fn validated(self) -> Result<Self> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return domain("quadrature tolerances must be positive");
        }
        if self.max_subdivisions == 0 {
            return domain("max_subdivisions must be at least 1");
        }
        Ok(self)
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub err_est: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        // ties broken by position so the refinement order is deterministic
        self.err
            .total_cmp(&other.err)
            .then(other.a.total_cmp(&self.a))
    }
}

/// One 21-point Kronrod evaluation with the QUADPACK error heuristic.
pub fn gauss_kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = 0.0;
    let mut res_k = fc * WGK[10];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..5 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let hl = half.abs();
    let result = res_k * half;
    res_abs *= hl;
    res_asc *= hl;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err, res_abs)
}

fn segment<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let (value, err, _) = gauss_kronrod21(f, a, b);
    Segment { a, b, value, err }
}

fn check_finite(seg: &Segment) -> Result<()> {
    if seg.value.is_finite() && seg.err.is_finite() {
        Ok(())
    } else {
        Err(Error::NonConvergence {
            value: seg.value,
            error: f64::INFINITY,
            context: "integrand produced a non-finite value",
        })
    }
}

/// Global adaptive refinement: always bisect the segment with the largest
/// error until the summed error meets `target(value) - reserved`.
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    initial: Vec<Segment>,
    spec: &QuadratureSpec,
    reserved: f64,
) -> Result<Integral> {
    let mut heap: BinaryHeap<Segment> = BinaryHeap::with_capacity(initial.len() + 2);
    for s in initial {
        check_finite(&s)?;
        heap.push(s);
    }
    let mut evaluations = heap.len();
    let (mut value, mut err) = totals(&heap);
    loop {
        let goal = (spec.target(value) - reserved).max(0.5 * spec.target(value));
        if err <= goal {
            let (value, err) = totals(&heap);
            return Ok(Integral {
                value,
                err_est: err + reserved,
            });
        }
        let worst = *heap.peek().expect("at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        let resolvable = mid > worst.a && mid < worst.b;
        if evaluations >= spec.max_subdivisions || !resolvable {
            let (value, err) = totals(&heap);
            return Err(Error::NonConvergence {
                value,
                error: err + reserved,
                context: if resolvable {
                    "subdivision budget exhausted"
                } else {
                    "interval too small to bisect"
                },
            });
        }
        heap.pop();
        let left = segment(f, worst.a, mid);
        let right = segment(f, mid, worst.b);
        check_finite(&left)?;
        check_finite(&right)?;
        value += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        evaluations += 1;
        if evaluations.is_multiple_of(64) {
            // drop accumulated cancellation in the running sums
            (value, err) = totals(&heap);
        }
    }
}

fn totals(heap: &BinaryHeap<Segment>) -> (f64, f64) {
    // sum in position order so the result does not depend on heap layout
    let mut segs: Vec<&Segment> = heap.iter().collect();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    segs.iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.err))
}

fn breakpoints(a: f64, b: f64, splits: &[f64]) -> Vec<f64> {
    let mut pts = vec![a];
    let mut inner: Vec<f64> = splits
        .iter()
        .copied()
        .filter(|&s| s > a && s < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    pts.extend(inner);
    pts.push(b);
    pts
}

/// `int_a^b f`. Endpoint singularities are fine as long as they are
/// integrable; the Kronrod nodes never touch the endpoints.
pub fn integrate_finite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<Integral> {
    let spec = spec.clone().validated()?;
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return domain(format!("integration limits must satisfy a < b, got [{a}, {b}]"));
    }
    let pts = breakpoints(a, b, &spec.split_points);
    let initial = pts.windows(2).map(|w| segment(&f, w[0], w[1])).collect();
    refine(&f, initial, &spec, 0.0)
}

/// `int_a^inf f` for `|f(u)| <= M exp(-decay_rate u)` eventually.
///
/// Panels `[a + L(2^k - 1), a + L(2^{k+1} - 1)]`, `L = 1/decay_rate`, are
/// appended until the envelope bound on the remaining tail (the constant
/// `M` is measured on the last panel) drops below a quarter of the
/// tolerance. The bound is added to the error estimate.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    decay_rate: f64,
    spec: &QuadratureSpec,
) -> Result<Integral> {
    let spec = spec.clone().validated()?;
    if !a.is_finite() || a < 0.0 {
        return domain(format!("lower limit must be finite and >= 0, got {a}"));
    }
    if !(decay_rate > 0.0 && decay_rate.is_finite()) {
        return domain(format!("decay rate must be positive, got {decay_rate}"));
    }
    let len = 1.0 / decay_rate;
    // never stop before the marked structure has been covered
    let last_split = spec.split_points.iter().copied().fold(a, f64::max);
    let mut segments: Vec<Segment> = Vec::new();
    let mut running = 0.0;
    let mut lo = a;
    let mut width = len;
    let mut prev_log_m = f64::INFINITY;
    const MAX_PANELS: usize = 40;
    for _ in 0..MAX_PANELS {
        let hi = lo + width;
        for w in breakpoints(lo, hi, &spec.split_points).windows(2) {
            let s = segment(&f, w[0], w[1]);
            check_finite(&s)?;
            running += s.value;
            segments.push(s);
        }
        let log_m = envelope_log_constant(&f, lo, hi, decay_rate);
        if log_m.is_nan() || log_m == f64::INFINITY {
            return Err(Error::Envelope { at: hi });
        }
        let tail = (log_m - decay_rate * hi).exp() / decay_rate;
        // the fitted constant M must have stopped growing for the bound to hold
        let settled = log_m <= prev_log_m + 0.01;
        if settled && hi >= last_split && tail <= 0.25 * spec.target(running) {
            return refine(&f, segments, &spec, tail);
        }
        prev_log_m = log_m;
        lo = hi;
        width *= 2.0;
    }
    Err(Error::Envelope { at: lo })
}

/// `max_j ln|f(u_j)| + decay u_j` over sample points of `[lo, hi]`: the
/// log of the smallest `M` with `|f| <= M e^{-decay u}` at those points.
fn envelope_log_constant<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, decay: f64) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..=17 {
        let u = lo + (hi - lo) * (0.5 + k as f64).min(17.0) / 17.0;
        let fu = f(u).abs();
        if !fu.is_finite() {
            return f64::INFINITY;
        }
        worst = worst.max(fu.ln() + decay * u);
    }
    worst
}

/// Nodes and weights of the composite 10-point Gauss-Legendre rule on `n`
/// equal panels of `[a, b]`, for sums that are reused many times.
pub fn gauss_legendre_nodes(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / n as f64;
    let half = 0.5 * h;
    let mut nodes = Vec::with_capacity(10 * n);
    for p in 0..n {
        let c = a + (p as f64 + 0.5) * h;
        for j in 0..5 {
            let dx = half * XGK[2 * j + 1];
            nodes.push((c - dx, WG[j] * half));
            nodes.push((c + dx, WG[j] * half));
        }
    }
    nodes
}

/// Composite fixed-order Gauss-Legendre sum on `n` equal panels with the
/// 10-point rule, for inner loops that need a deterministic node count.
pub fn gauss_legendre_panels<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    gauss_legendre_nodes(a, b, n).iter().map(|&(x, w)| w * f(x)).sum()
}
