use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Euler–Mascheroni constant; `psi(1) = -EULER_GAMMA`.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Digamma at one, the constant in the small-argument form of `K_0`.
pub const PSI_ONE: f64 = -EULER_GAMMA;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Taylor coefficients of `1/Gamma(z)` about zero, `c[k]` multiplies `z^k`.
#[allow(clippy::excessive_precision)]
pub(crate) const RGAMMA_TAYLOR: [f64; 30] = [
    0.0,
    1.0,
    0.577_215_664_901_532_860_61,
    -0.655_878_071_520_253_881_08,
    -0.042_002_635_034_095_235_529,
    0.166_538_611_382_291_489_5,
    -0.042_197_734_555_544_336_748,
    -0.009_621_971_527_876_973_562_1,
    0.007_218_943_246_663_099_542_4,
    -0.001_165_167_591_859_065_112_1,
    -0.000_215_241_674_114_950_972_82,
    0.000_128_050_282_388_116_186_15,
    -0.000_020_134_854_780_788_238_656,
    -1.250_493_482_142_670_657_3e-6,
    1.133_027_231_981_695_882_4e-6,
    -2.056_338_416_977_607_103_5e-7,
    6.116_095_104_481_415_817_9e-9,
    5.002_007_644_469_222_930_1e-9,
    -1.181_274_570_487_020_144_6e-9,
    1.043_426_711_691_100_510_5e-10,
    7.782_263_439_905_071_254e-12,
    -3.696_805_618_642_205_708_2e-12,
    5.100_370_287_454_475_979e-13,
    -2.058_326_053_566_506_783_2e-14,
    -5.348_122_539_423_017_982_4e-15,
    1.226_778_628_238_260_790_2e-15,
    -1.181_259_301_697_458_769_5e-16,
    1.186_692_254_751_600_332_6e-18,
    1.412_380_655_318_031_781_6e-18,
    -2.298_745_684_435_370_206_6e-19,
];

/// Temme's auxiliary functions for `|mu| <= 1/2`:
/// `(gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu))` with
/// `gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)` and
/// `gam2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2`.
pub(crate) fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let mut gam1 = 0.0;
    let mut gam2 = 0.0;
    // even k -> gam1, odd k -> gam2; Horner in mu^2 from the top
    let mu2 = mu * mu;
    for k in (1..RGAMMA_TAYLOR.len()).rev() {
        if k % 2 == 0 {
            gam1 = gam1 * mu2 - RGAMMA_TAYLOR[k];
        } else {
            gam2 = gam2 * mu2 + RGAMMA_TAYLOR[k];
        }
    }
    let gampl = gam2 - mu * gam1;
    let gammi = gam2 + mu * gam1;
    (gam1, gam2, gampl, gammi)
}

fn lanczos(s: f64) -> f64 {
    // valid for s >= 1/2
    let z = s - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
}

/// Gamma function for positive real arguments.
pub fn gamma_fn(s: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return domain(format!("gamma requires s > 0, got {s}"));
    }
    Ok(gamma_pos(s))
}

pub(crate) fn gamma_pos(s: f64) -> f64 {
    if s < 0.5 {
        PI / ((PI * s).sin() * lanczos(1.0 - s))
    } else if s <= 20.0 && s == s.floor() {
        (1..s as u64).map(|k| k as f64).product()
    } else {
        lanczos(s)
    }
}

/// Gamma on the whole real line except the poles.
#[cfg(test)]
pub(crate) fn gamma_real(s: f64) -> f64 {
    if s > 0.0 {
        gamma_pos(s)
    } else {
        PI / ((PI * s).sin() * gamma_pos(1.0 - s))
    }
}
