//! Resonance sets of squeezed devices.
//!
//! Two sets have closed forms (a well of fixed width next to a delta barrier,
//! and the delta-model transistor). The delta-prime sets are roots of
//! transcendental equations and are found by a uniform scan between the
//! analytic tangent poles followed by bisection.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::limits::{
    deltaprime_2layer_theta_alpha, limit_transmission_on_resonance, theta_consistency, Transistor,
    TransistorParts, THETA_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum EquationId {
    /// Delta-prime pair: barrier and well both at `(2, 1)`.
    EQ69_DELTAPRIME_2LAYER,
    /// Delta barrier at `(1, 1)` next to a well at `(2, 1)`.
    EQ73_DELTA_BARRIER_WELL,
    /// Transistor with delta barriers.
    EQ76_TRANSISTOR_DELTA,
    /// Transistor with all layers at `mu = 2`.
    EQ83_TRANSISTOR_DELTAPRIME,
}

impl EquationId {
    pub fn parse(s: &str) -> Option<EquationId> {
        match s.to_ascii_uppercase().as_str() {
            "EQ69" | "EQ71" | "EQ69_DELTAPRIME_2LAYER" => Some(EquationId::EQ69_DELTAPRIME_2LAYER),
            "EQ73" | "EQ73_DELTA_BARRIER_WELL" => Some(EquationId::EQ73_DELTA_BARRIER_WELL),
            "EQ76" | "EQ76_TRANSISTOR_DELTA" => Some(EquationId::EQ76_TRANSISTOR_DELTA),
            "EQ83" | "EQ80" | "EQ83_TRANSISTOR_DELTAPRIME" => {
                Some(EquationId::EQ83_TRANSISTOR_DELTAPRIME)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceRoot {
    pub n: u32,
    /// Tuned bias in nm⁻²: `b1` for the two-layer sets, `V_EB` for the transistor sets.
    pub value: f64,
    pub theta: Option<f64>,
    pub alpha: f64,
    /// Limit transmission at the reference energy, if one was supplied.
    pub trans_prob: Option<f64>,
    pub admissible: bool,
    /// Scaled residual of the defining equation.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSet {
    pub equation_id: EquationId,
    pub roots: Vec<ResonanceRoot>,
}

/// Barrier `a1` over `d1` followed by a well `a2` over `d2` with bias `b2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierWell {
    pub a1: f64,
    pub a2: f64,
    pub b2: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Uniform steps per pole-free subinterval.
pub const SCAN_STEPS: usize = 2048;

/// Roots of `f` on `[lo, hi]`, scanning each piece between consecutive
/// `splits` separately. `f` must be continuous inside every piece.
pub fn scan_roots<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    splits: &[f64],
    steps: usize,
) -> Vec<f64> {
    let mut edges = vec![lo];
    let mut inner: Vec<f64> = splits
        .iter()
        .copied()
        .filter(|&s| s > lo && s < hi)
        .collect();
    inner.sort_by(f64::total_cmp);
    edges.extend(inner);
    edges.push(hi);

    let mut roots = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let h = (b - a) / steps as f64;
        let mut x_prev = a;
        let mut f_prev = f(a);
        if f_prev == 0.0 && roots.last() != Some(&a) {
            roots.push(a);
        }
        for i in 1..=steps {
            let x = if i == steps { b } else { a + h * i as f64 };
            let fx = f(x);
            if fx == 0.0 {
                roots.push(x);
            } else if f_prev != 0.0
                && f_prev.is_finite()
                && fx.is_finite()
                && (f_prev < 0.0) != (fx < 0.0)
            {
                roots.push(bisect(&f, x_prev, x, f_prev));
            }
            x_prev = x;
            f_prev = fx;
        }
    }
    roots.dedup();
    roots
}

/// Bisection down to adjacent floating-point numbers.
fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    loop {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    // the endpoint with the smaller magnitude
    if f(a).abs() <= f(b).abs() {
        a
    } else {
        b
    }
}

fn trans_prob(theta: f64, alpha: f64, energy: Option<f64>, v_right: f64) -> Option<f64> {
    let e = energy?;
    if e > 0.0 && e > v_right {
        Some(limit_transmission_on_resonance(
            theta,
            alpha,
            e.sqrt(),
            (e - v_right).sqrt(),
        ))
    } else {
        None
    }
}

/// `b1` values with `a2 + b1 = -(n pi / d2)^2`, `n >= 1`, inside `b1_range`.
///
/// `alpha_n = (a1 + b1/2) d1`; the right lead sits at `b1 + b2`.
pub fn resonances_delta_barrier_well(
    p: &BarrierWell,
    b1_range: (f64, f64),
    energy: Option<f64>,
) -> ResonanceSet {
    let (lo, hi) = b1_range;
    let mut roots = Vec::new();
    if p.d2 > 0.0 && hi >= lo {
        // b1 decreases with n, so walk n upward until below the range
        let mut n = 1u32;
        loop {
            let b1 = -(n as f64 * PI / p.d2).powi(2) - p.a2;
            if b1 < lo {
                break;
            }
            if b1 <= hi {
                let alpha = (p.a1 + b1 / 2.0) * p.d1;
                roots.push(ResonanceRoot {
                    n,
                    value: b1,
                    theta: None,
                    alpha,
                    trans_prob: trans_prob(1.0, alpha, energy, b1 + p.b2),
                    admissible: -b1 < p.a1,
                    residual: 0.0,
                });
            }
            n += 1;
        }
    }
    roots.sort_by(|a, b| a.value.total_cmp(&b.value));
    ResonanceSet {
        equation_id: EquationId::EQ73_DELTA_BARRIER_WELL,
        roots,
    }
}

/// `V_EB,n = (n pi / d2)^2 <= v_eb_max`, with the delta strengths attached.
pub fn resonances_transistor_delta(
    t: &Transistor,
    v_eb_max: f64,
    energy: Option<f64>,
) -> ResonanceSet {
    let mut roots = Vec::new();
    if t.d2 > 0.0 {
        let mut n = 1u32;
        loop {
            let v = (n as f64 * PI / t.d2).powi(2);
            if v > v_eb_max {
                break;
            }
            let alpha = t.delta_alpha(v);
            roots.push(ResonanceRoot {
                n,
                value: v,
                theta: None,
                alpha,
                trans_prob: trans_prob(1.0, alpha, energy, -v - t.v_cb),
                admissible: t.admissible(v),
                residual: 0.0,
            });
            n += 1;
        }
    }
    ResonanceSet {
        equation_id: EquationId::EQ76_TRANSISTOR_DELTA,
        roots,
    }
}

/// Terms of the barrier-well delta-prime condition, multiplied through by
/// `cosh(sqrt(a1) d1) cos(K d2)` with `K = sqrt(-(a2 + b1))`.
fn deltaprime_2layer_terms(p: &BarrierWell, b1: f64) -> [f64; 2] {
    let r1 = p.a1.sqrt();
    let kk = (-(p.a2 + b1)).sqrt();
    let (s2, c2) = (kk * p.d2).sin_cos();
    [r1 * (r1 * p.d1).sinh() * c2, -kk * (r1 * p.d1).cosh() * s2]
}

/// Pole-free residual of the barrier-well delta-prime condition and its scale.
pub fn deltaprime_2layer_residual(p: &BarrierWell, b1: f64) -> (f64, f64) {
    let t = deltaprime_2layer_terms(p, b1);
    (t[0] + t[1], t[0].abs() + t[1].abs())
}

fn tan_pole_positions(d: f64, k_max: f64) -> Vec<f64> {
    // K d = (m + 1/2) pi, returned as K^2
    let mut out = Vec::new();
    let mut m = 0.0;
    loop {
        let k = (m + 0.5) * PI / d;
        if k > k_max {
            break;
        }
        out.push(k * k);
        m += 1.0;
    }
    out
}

/// Roots in `b1` of `sqrt(a1) tanh(sqrt(a1) d1) = K tan(K d2)` with
/// `K = sqrt(|a2 + b1|)`. Only the well side `a2 + b1 < 0` is scanned;
/// the barrier side has no roots.
pub fn find_resonances_deltaprime_2layer(
    p: &BarrierWell,
    b1_interval: (f64, f64),
    energy: Option<f64>,
) -> ResonanceSet {
    let boundary = -p.a2;
    let lo = b1_interval.0;
    let hi = b1_interval.1.min(boundary);
    let mut roots = Vec::new();
    if p.a1 > 0.0 && p.d2 > 0.0 && hi > lo {
        let k_max = (-(p.a2 + lo)).max(0.0).sqrt();
        let splits: Vec<f64> = tan_pole_positions(p.d2, k_max)
            .into_iter()
            .map(|k2| -k2 - p.a2)
            .collect();
        let f = |b1: f64| deltaprime_2layer_residual(p, b1).0;
        for b1 in scan_roots(f, lo, hi, &splits, SCAN_STEPS) {
            if b1 >= boundary {
                continue;
            }
            let (r, scale) = deltaprime_2layer_residual(p, b1);
            let Ok((theta, alpha)) =
                deltaprime_2layer_theta_alpha(p.a1, p.a2, b1, p.b2, p.d1, p.d2)
            else {
                continue;
            };
            roots.push(ResonanceRoot {
                n: 0,
                value: b1,
                theta: Some(theta),
                alpha,
                trans_prob: trans_prob(theta, alpha, energy, b1 + p.b2),
                admissible: -b1 < p.a1,
                residual: r.abs() / scale,
            });
        }
    }
    roots.sort_by(|a, b| a.value.total_cmp(&b.value));
    for (i, r) in roots.iter_mut().enumerate() {
        r.n = i as u32 + 1;
    }
    ResonanceSet {
        equation_id: EquationId::EQ69_DELTAPRIME_2LAYER,
        roots,
    }
}

/// Pole-free residual of the transistor delta-prime condition and its scale.
pub fn transistor_deltaprime_residual(t: &Transistor, v_eb: f64) -> Option<(f64, f64)> {
    let parts = TransistorParts::new(t, v_eb).ok()?;
    let terms = parts.condition_terms();
    Some((terms.iter().sum(), terms.iter().map(|x| x.abs()).sum()))
}

/// Margin kept from the endpoints `V_EB = 0` and `V_EB = a3`.
pub const ENDPOINT_MARGIN: f64 = 1e-8;

/// Roots in `V_EB` of the transistor delta-prime condition.
pub fn find_resonances_transistor_deltaprime(
    t: &Transistor,
    v_eb_interval: (f64, f64),
    energy: Option<f64>,
) -> ResonanceSet {
    let lo = v_eb_interval.0.max(ENDPOINT_MARGIN);
    let hi = v_eb_interval.1.min(t.a3 - ENDPOINT_MARGIN);
    let mut roots = Vec::new();
    if t.a1 > 0.0 && t.d2 > 0.0 && hi > lo {
        let splits = tan_pole_positions(t.d2, hi.sqrt());
        let f = |v: f64| transistor_deltaprime_residual(t, v).map_or(f64::NAN, |r| r.0);
        for v in scan_roots(f, lo, hi, &splits, SCAN_STEPS) {
            let Ok(parts) = TransistorParts::new(t, v) else {
                continue;
            };
            let reps = parts.theta_representations();
            let theta = reps[0];
            let alpha = parts.alpha(t, v);
            roots.push(ResonanceRoot {
                n: 0,
                value: v,
                theta: Some(theta),
                alpha,
                trans_prob: trans_prob(theta, alpha, energy, -v - t.v_cb),
                admissible: t.admissible(v) && theta_consistency(&reps) < THETA_TOL,
                residual: parts.scaled_residual(),
            });
        }
    }
    for (i, r) in roots.iter_mut().enumerate() {
        r.n = i as u32 + 1;
    }
    ResonanceSet {
        equation_id: EquationId::EQ83_TRANSISTOR_DELTAPRIME,
        roots,
    }
}
