//! Browser bindings: density curves, Poisson kernel profiles and the
//! zeros of `K_mu`, returned as flat `Float64Array`s.

use hitfun::density::DensityEvaluator;
use hitfun::poisson::PoissonKernel;
use hitfun::specfun::{k_zero_set, Order};
use hitfun::wlambda::{build_w, ModelParams};
use hitfun::Error;
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 2000;

fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, Error> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Domain(format!("need 0 < lo < hi, got {lo}, {hi}")));
    }
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(Error::Domain(format!("points must lie in 2..={MAX_POINTS}, got {points}")));
    }
    let step = (hi / lo).ln() / (points - 1) as f64;
    Ok((0..points).map(|i| lo * (step * i as f64).exp()).collect())
}

/// `[t_0, q_0, t_1, q_1, ..]` on a log grid.
pub fn density_pairs(mu: f64, x: f64, t_min: f64, t_max: f64, points: usize) -> Result<Vec<f64>, Error> {
    let ev = DensityEvaluator::new(mu, x)?;
    let mut out = Vec::with_capacity(2 * points);
    for t in log_grid(t_min, t_max, points)? {
        out.extend([t, ev.density(t)?]);
    }
    Ok(out)
}

/// `[rho, P_subordination, P_closed, ..]`; `P_closed` is NaN where the
/// closed form does not apply.
pub fn kernel_triples(n: u32, mu: f64, x: f64, rho_min: f64, rho_max: f64, points: usize) -> Result<Vec<f64>, Error> {
    let k = PoissonKernel::new(n, mu, x)?;
    let mut out = Vec::with_capacity(3 * points);
    for rho in log_grid(rho_min, rho_max, points)? {
        let closed = match k.closed(rho) {
            Ok(c) => c,
            Err(Error::Branch(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        out.extend([rho, k.subordination(rho)?, closed]);
    }
    Ok(out)
}

/// `[v, w, w1, w2, ..]` on a uniform grid over `[0, v_max]`.
pub fn w_quads(mu: f64, x: f64, v_max: f64, points: usize) -> Result<Vec<f64>, Error> {
    if !(v_max > 0.0 && v_max.is_finite()) || !(2..=MAX_POINTS).contains(&points) {
        return Err(Error::Domain(format!("bad grid: v_max = {v_max}, points = {points}")));
    }
    let w = build_w(&ModelParams::new(mu, x)?)?;
    let mut out = Vec::with_capacity(4 * points);
    for i in 0..points {
        let v = v_max * i as f64 / (points - 1) as f64;
        let (w1, w2) = (w.w1(v), w.w2(v));
        out.extend([v, w1 + w2, w1, w2]);
    }
    Ok(out)
}

/// `[re_1, im_1, re_2, im_2, ..]`.
pub fn zero_pairs(mu: f64) -> Result<Vec<f64>, Error> {
    let set = k_zero_set(Order::new(mu)?)?;
    Ok(set.zeros.iter().flat_map(|z| [z.re, z.im]).collect())
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = densityCurve)]
pub fn density_curve(mu: f64, x: f64, t_min: f64, t_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    density_pairs(mu, x, t_min, t_max, points).map_err(js)
}

#[wasm_bindgen(js_name = kernelProfile)]
pub fn kernel_profile(
    n: u32,
    mu: f64,
    x: f64,
    rho_min: f64,
    rho_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    kernel_triples(n, mu, x, rho_min, rho_max, points).map_err(js)
}

#[wasm_bindgen(js_name = wLambda)]
pub fn w_lambda(mu: f64, x: f64, v_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    w_quads(mu, x, v_max, points).map_err(js)
}

#[wasm_bindgen(js_name = besselZeros)]
pub fn bessel_zeros(mu: f64) -> Result<Vec<f64>, JsError> {
    zero_pairs(mu).map_err(js)
}
