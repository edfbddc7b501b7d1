//! Real-argument Airy functions `Ai`, `Bi` and their derivatives.
//!
//! Two evaluation regimes are used:
//!
//! * `|z| <= SERIES_RADIUS`: the full Maclaurin series, summed in
//!   double-double arithmetic. For positive `z` the recessive `Ai` is a
//!   difference of two series that grow like `exp(2/3 z^{3/2})`, so plain
//!   `f64` summation loses most digits well before the crossover.
//! * `|z| > SERIES_RADIUS`: the classical asymptotic expansions in
//!   `zeta = 2/3 |z|^{3/2}`, oscillatory for negative `z` and exponential for
//!   positive `z`. At the crossover `zeta = 18`, and the optimally truncated
//!   series is accurate to a few units of `1e-16`.
//!
//! For positive `z` the exponential factors are split off in
//! [`ScaledAiryQuad`], so callers that combine products of `Ai` and `Bi` at
//! different arguments can cancel the exponents before exponentiating.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use thiserror::Error;

use crate::dd::DoubleDouble;

/// Radius of the Maclaurin-series regime.
pub const SERIES_RADIUS: f64 = 9.0;

const AI0: DoubleDouble = DoubleDouble::new(0.3550280538878172, 2.05233632436212e-17);
// -Ai'(0)
const AIP0_NEG: DoubleDouble = DoubleDouble::new(0.2588194037928068, -2.522243111610832e-17);
const BI0: DoubleDouble = DoubleDouble::new(0.6149266274460007, 5.0899207794891416e-17);
const BIP0: DoubleDouble = DoubleDouble::new(0.4482883573538264, -2.5363237774417305e-17);

const SQRT_PI: f64 = 1.772_453_850_905_516;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AiryError {
    #[error("Bi({z}) overflows f64 (limit z = {limit}); use the scaled evaluation")]
    Overflow { z: f64, limit: f64 },
    #[error("non-finite Airy argument {0}")]
    NonFinite(f64),
}

/// `Ai`, `Bi` and their first derivatives at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryQuad {
    pub z: f64,
    pub ai: f64,
    pub bi: f64,
    pub ai_prime: f64,
    pub bi_prime: f64,
}

impl AiryQuad {
    /// `Ai Bi' - Ai' Bi`, which equals `1/pi` identically.
    pub fn wronskian(&self) -> f64 {
        self.ai * self.bi_prime - self.ai_prime * self.bi
    }
}

/// Airy values with the exponential factors removed for `z > 0`:
/// `Ai = ai_scaled * exp(-exponent)`, `Bi = bi_scaled * exp(+exponent)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledAiryQuad {
    pub z: f64,
    pub ai_scaled: f64,
    pub bi_scaled: f64,
    pub ai_prime_scaled: f64,
    pub bi_prime_scaled: f64,
    /// `2/3 z^{3/2}` for positive `z`, zero otherwise.
    pub exponent: f64,
}

impl ScaledAiryQuad {
    /// Restores the unscaled values. Fails when `Bi` or `Bi'` overflow.
    pub fn unscale(&self) -> Result<AiryQuad, AiryError> {
        if self.exponent == 0.0 {
            return Ok(AiryQuad {
                z: self.z,
                ai: self.ai_scaled,
                bi: self.bi_scaled,
                ai_prime: self.ai_prime_scaled,
                bi_prime: self.bi_prime_scaled,
            });
        }
        let decay = (-self.exponent).exp();
        let growth = self.exponent.exp();
        let quad = AiryQuad {
            z: self.z,
            ai: self.ai_scaled * decay,
            bi: self.bi_scaled * growth,
            ai_prime: self.ai_prime_scaled * decay,
            bi_prime: self.bi_prime_scaled * growth,
        };
        if quad.bi.is_finite() && quad.bi_prime.is_finite() {
            Ok(quad)
        } else {
            Err(AiryError::Overflow {
                z: self.z,
                limit: z_overflow(),
            })
        }
    }
}

/// Largest argument for which unscaled `Bi` and `Bi'` are representable.
///
/// Solved once from `f64::MAX` using the leading asymptotic of `Bi'`, the
/// faster-growing of the two.
pub fn z_overflow() -> f64 {
    static LIMIT: OnceLock<f64> = OnceLock::new();
    *LIMIT.get_or_init(|| {
        let target = f64::MAX.ln();
        let log_bip = |z: f64| 2.0 / 3.0 * z * z.sqrt() + 0.25 * z.ln() - SQRT_PI.ln();
        let (mut lo, mut hi) = (1.0_f64, 1.0e3_f64);
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if log_bip(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // step back a little so the reconstruction itself never rounds to inf
        lo * (1.0 - 1e-9)
    })
}

/// Unscaled `Ai`, `Bi`, `Ai'`, `Bi'` at `z`.
pub fn airy_eval(z: f64) -> Result<AiryQuad, AiryError> {
    if !z.is_finite() {
        return Err(AiryError::NonFinite(z));
    }
    if z > z_overflow() {
        return Err(AiryError::Overflow {
            z,
            limit: z_overflow(),
        });
    }
    if z.abs() <= SERIES_RADIUS {
        Ok(airy_series(z))
    } else {
        airy_asymptotic_scaled(z).unscale()
    }
}

/// Scaled Airy quadruple, finite for every finite `z`.
pub fn airy_eval_scaled(z: f64) -> ScaledAiryQuad {
    if z.abs() <= SERIES_RADIUS {
        let q = airy_series(z);
        if z <= 0.0 {
            return ScaledAiryQuad {
                z,
                ai_scaled: q.ai,
                bi_scaled: q.bi,
                ai_prime_scaled: q.ai_prime,
                bi_prime_scaled: q.bi_prime,
                exponent: 0.0,
            };
        }
        let exponent = zeta(z);
        let growth = exponent.exp();
        let decay = (-exponent).exp();
        ScaledAiryQuad {
            z,
            ai_scaled: q.ai * growth,
            bi_scaled: q.bi * decay,
            ai_prime_scaled: q.ai_prime * growth,
            bi_prime_scaled: q.bi_prime * decay,
            exponent,
        }
    } else {
        airy_asymptotic_scaled(z)
    }
}

#[inline]
fn zeta(x: f64) -> f64 {
    2.0 / 3.0 * x * x.sqrt()
}

/// Maclaurin series `Ai = c1 f - c2 g`, `Bi = sqrt(3) (c1 f + c2 g)`.
///
/// Accurate to ~1e-15 relative on `|z| <= SERIES_RADIUS`; usable somewhat
/// beyond, with accuracy degrading like `exp(2 zeta) * 1e-32`.
pub fn airy_series(z: f64) -> AiryQuad {
    let zd = DoubleDouble::from_f64(z);
    let z3 = zd.mul_f64(z).mul_f64(z);

    let mut f_term = DoubleDouble::from_f64(1.0);
    let mut g_term = zd;
    let mut fp_term = zd.mul_f64(z).div_f64(2.0);
    let mut gp_term = DoubleDouble::from_f64(1.0);

    let mut f = f_term;
    let mut g = g_term;
    let mut fp = fp_term;
    let mut gp = gp_term;

    for k in 0..400 {
        let k3 = 3.0 * k as f64;
        f_term = (f_term * z3).div_f64((k3 + 2.0) * (k3 + 3.0));
        g_term = (g_term * z3).div_f64((k3 + 3.0) * (k3 + 4.0));
        gp_term = (gp_term * z3).div_f64((k3 + 1.0) * (k3 + 3.0));
        // derivative of f starts at k = 1
        fp_term = (fp_term * z3).div_f64((k3 + 3.0) * (k3 + 5.0));

        f = f + f_term;
        g = g + g_term;
        fp = fp + fp_term;
        gp = gp + gp_term;

        let shrinking = z.abs().powi(3) < (k3 + 2.0) * (k3 + 3.0);
        let largest = f_term
            .abs_f64()
            .max(g_term.abs_f64())
            .max(fp_term.abs_f64())
            .max(gp_term.abs_f64());
        if shrinking && largest <= 1e-34 * (1.0 + f.abs_f64().min(gp.abs_f64())) {
            break;
        }
    }

    let ai = AI0 * f - AIP0_NEG * g;
    let bi = BI0 * f + BIP0 * g;
    let ai_prime = AI0 * fp - AIP0_NEG * gp;
    let bi_prime = BI0 * fp + BIP0 * gp;
    AiryQuad {
        z,
        ai: ai.to_f64(),
        bi: bi.to_f64(),
        ai_prime: ai_prime.to_f64(),
        bi_prime: bi_prime.to_f64(),
    }
}

/// Coefficients `u_k` and `v_k` of the Airy asymptotic expansions.
fn asymptotic_coefficients() -> &'static [(f64, f64)] {
    static COEFFS: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let mut out = Vec::with_capacity(80);
        let mut u = 1.0_f64;
        out.push((1.0, 1.0));
        for k in 1..80 {
            let kf = k as f64;
            u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
                / ((2.0 * kf - 1.0) * 216.0 * kf);
            let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
            out.push((u, v));
        }
        out
    })
}

/// Asymptotic expansion in `zeta = 2/3 |z|^{3/2}`, optimally truncated.
///
/// Meant for `|z| > SERIES_RADIUS`; at smaller arguments the truncation error
/// is roughly `exp(-2 zeta)`.
pub fn airy_asymptotic_scaled(z: f64) -> ScaledAiryQuad {
    let coeffs = asymptotic_coefficients();
    let x = z.abs();
    let zeta = zeta(x);
    let inv = 1.0 / zeta;
    let quarter = x.sqrt().sqrt();

    if z > 0.0 {
        // alternating sums for Ai, plain sums for Bi
        let (mut su_alt, mut sv_alt, mut su, mut sv) = (0.0, 0.0, 0.0, 0.0);
        let mut power = 1.0;
        let mut last = f64::INFINITY;
        for (k, &(u, v)) in coeffs.iter().enumerate() {
            let tu = u * power;
            let tv = v * power;
            let size = tu.abs().max(tv.abs());
            if k > 0 && (size > last || size < 1e-18) {
                break;
            }
            last = size;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            su_alt += sign * tu;
            sv_alt += sign * tv;
            su += tu;
            sv += tv;
            power *= inv;
        }
        ScaledAiryQuad {
            z,
            ai_scaled: su_alt / (2.0 * SQRT_PI * quarter),
            ai_prime_scaled: -quarter * sv_alt / (2.0 * SQRT_PI),
            bi_scaled: su / (SQRT_PI * quarter),
            bi_prime_scaled: quarter * sv / SQRT_PI,
            exponent: zeta,
        }
    } else {
        // even/odd split of the expansion around the phase zeta - pi/4
        let (mut pu, mut qu, mut pv, mut qv) = (0.0, 0.0, 0.0, 0.0);
        let mut power = 1.0;
        let mut last = f64::INFINITY;
        for (k, &(u, v)) in coeffs.iter().enumerate() {
            let tu = u * power;
            let tv = v * power;
            let size = tu.abs().max(tv.abs());
            if k > 0 && (size > last || size < 1e-18) {
                break;
            }
            last = size;
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                pu += sign * tu;
                pv += sign * tv;
            } else {
                qu += sign * tu;
                qv += sign * tv;
            }
            power *= inv;
        }
        let (s, c) = zeta.sin_cos();
        // cos(zeta - pi/4) and sin(zeta - pi/4) without forming zeta - pi/4
        let cm = (c + s) * FRAC_1_SQRT_2;
        let sm = (s - c) * FRAC_1_SQRT_2;
        let amp = 1.0 / (SQRT_PI * quarter);
        let damp = quarter / SQRT_PI;
        ScaledAiryQuad {
            z,
            ai_scaled: amp * (cm * pu + sm * qu),
            bi_scaled: amp * (-sm * pu + cm * qu),
            ai_prime_scaled: damp * (sm * pv - cm * qv),
            bi_prime_scaled: damp * (cm * pv + sm * qv),
            exponent: 0.0,
        }
    }
}

/// Summary of a Wronskian sweep over a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WronskianReport {
    pub points: usize,
    pub max_deviation: f64,
    pub worst_z: f64,
    /// `(regime label, max deviation, sample count)`
    pub by_regime: Vec<(&'static str, f64, usize)>,
}

/// Max of `|Ai Bi' - Ai' Bi - 1/pi|` over `points` uniform samples of `[lo, hi]`.
pub fn wronskian_sweep(lo: f64, hi: f64, points: usize) -> Result<WronskianReport, AiryError> {
    let labels = ["asymptotic (z < 0)", "series", "asymptotic (z > 0)"];
    let mut regimes = [(0.0_f64, 0_usize); 3];
    let mut max_deviation = 0.0_f64;
    let mut worst_z = lo;
    let n = points.max(2);
    for i in 0..n {
        let z = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let dev = (airy_eval(z)?.wronskian() - 1.0 / PI).abs();
        let slot = if z < -SERIES_RADIUS {
            0
        } else if z <= SERIES_RADIUS {
            1
        } else {
            2
        };
        regimes[slot].0 = regimes[slot].0.max(dev);
        regimes[slot].1 += 1;
        if dev > max_deviation {
            max_deviation = dev;
            worst_z = z;
        }
    }
    Ok(WronskianReport {
        points: n,
        max_deviation,
        worst_z,
        by_regime: labels
            .iter()
            .zip(regimes)
            .map(|(l, (d, c))| (*l, d, c))
            .collect(),
    })
}
