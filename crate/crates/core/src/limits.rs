//! Closed-form asymptotics of layer matrices and their zero-thickness limits.
//!
//! The asymptotic matrices approximate a single linear layer when both Airy
//! arguments are small or both are large. The limit constructions describe
//! what a squeezed structure turns into as `eps -> 0`: nothing at all, a
//! delta interaction, a member of the delta-prime family, or an opaque
//! (Dirichlet) wall. Several of them only exist on a discrete resonance set
//! of a tunable bias.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::potential::{classify_region, realize, LayerSpec, RegionClass, StructureSpec};
use crate::transfer::{structure_matrix, TransferMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitError {
    #[error("no closed-form limit is known for (mu, nu) = ({mu}, {nu})")]
    Unsupported { mu: f64, nu: f64 },
    #[error("Airy arguments must share a sign: z0 = {z0}, z1 = {z1}")]
    MixedSign { z0: f64, z1: f64 },
    #[error("grazing energy: wave numbers must be nonzero and k0 + k1 != 0")]
    Grazing,
    #[error("wave numbers must both be real or both imaginary")]
    MixedBranch,
    #[error("layer width must be positive")]
    BadWidth,
    #[error("structure does not match the requested limit: {0}")]
    Mismatch(String),
    #[error("supplied value is not a resonance root (residual {residual:e}, consistency {consistency:e})")]
    NotARoot { residual: f64, consistency: f64 },
    #[error("parameters outside the formula's domain: {0}")]
    Domain(String),
}

/// What a squeezed structure becomes in the zero-thickness limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LimitClassification {
    Transparent,
    Delta {
        alpha: f64,
    },
    DeltaPrimeFamily {
        theta: f64,
        alpha: f64,
    },
    /// `(-1)^n [[1, 0], [alpha, 1]]`
    ResonantDelta {
        n: u32,
        alpha: f64,
    },
    /// Dirichlet conditions on both sides; no connection matrix exists.
    OpaqueWall,
}

impl LimitClassification {
    pub fn matrix(&self) -> Option<TransferMatrix> {
        match *self {
            LimitClassification::Transparent => Some(TransferMatrix::IDENTITY),
            LimitClassification::Delta { alpha } => Some(TransferMatrix::new(1.0, 0.0, alpha, 1.0)),
            LimitClassification::DeltaPrimeFamily { theta, alpha } => {
                Some(TransferMatrix::new(theta, 0.0, alpha, 1.0 / theta))
            }
            LimitClassification::ResonantDelta { n, alpha } => {
                let s = if n % 2 == 0 { 1.0 } else { -1.0 };
                Some(TransferMatrix::new(s, 0.0, s * alpha, s))
            }
            LimitClassification::OpaqueWall => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            LimitClassification::Transparent => "TRANSPARENT",
            LimitClassification::Delta { .. } => "DELTA",
            LimitClassification::DeltaPrimeFamily { .. } => "DELTA_PRIME_FAMILY",
            LimitClassification::ResonantDelta { .. } => "RESONANT_DELTA",
            LimitClassification::OpaqueWall => "OPAQUE_WALL",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AsymptoticRegime {
    SmallZ,
    LargeZOsc,
    LargeZExp,
    KForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticMatrix {
    pub matrix: TransferMatrix,
    pub regime: AsymptoticRegime,
    /// Phase of the large-argument forms; zero for the small-argument form.
    pub chi: f64,
}

/// Two-term small-argument form.
///
/// The diagonal keeps only the `z^2 z` cross term, so it is accurate to
/// `O(z^3)` in the diagonal and to `O(z^4)` off the diagonal.
pub fn lambda_small_z(z0: f64, z1: f64, sigma: f64) -> AsymptoticMatrix {
    AsymptoticMatrix {
        matrix: TransferMatrix::new(
            1.0 - z0 * z0 * z1 / 2.0,
            (z1 - z0) / sigma,
            sigma / 2.0 * (z1 * z1 - z0 * z0),
            1.0 - z0 * z1 * z1 / 2.0,
        ),
        regime: AsymptoticRegime::SmallZ,
        chi: 0.0,
    }
}

/// Leading-order large-argument form: oscillatory for negative arguments,
/// exponential for positive ones.
pub fn lambda_large_z(z0: f64, z1: f64, sigma: f64) -> Result<AsymptoticMatrix, LimitError> {
    if z0 < 0.0 && z1 < 0.0 {
        let (m0, m1) = (-z0, -z1);
        let chi = 2.0 / 3.0 * (m1 * m1.sqrt() - m0 * m0.sqrt());
        let (s, c) = chi.sin_cos();
        let q0 = m0.powf(0.25);
        let q1 = m1.powf(0.25);
        let inv_q = 1.0 / (q0 * q1);
        let t0 = m0.powf(0.75);
        let t1 = m1.powf(0.75);
        let l11 = q0 / q1 * c - inv_q * s / (4.0 * z0);
        let l12 = -inv_q * s / sigma;
        let l21 = sigma / (m0 * m1).sqrt()
            * ((t0 * t1 + 1.0 / (16.0 * t0 * t1)) * s + 0.25 * (t0 / t1 - t1 / t0) * c);
        let l22 = q1 / q0 * c + inv_q * s / (4.0 * z1);
        Ok(AsymptoticMatrix {
            matrix: TransferMatrix::new(l11, l12, l21, l22),
            regime: AsymptoticRegime::LargeZOsc,
            chi,
        })
    } else if z0 > 0.0 && z1 > 0.0 {
        let chi = 2.0 / 3.0 * (z1 * z1.sqrt() - z0 * z0.sqrt());
        let (sh, ch) = (chi.sinh(), chi.cosh());
        let p = z0 * z1;
        let q = p.powf(0.25);
        let t = p.powf(0.75);
        let l11 = (z0 / z1).powf(0.25) * ch + sh / (4.0 * z0 * q);
        let l12 = sh / (sigma * q);
        let l21 = sigma / p.sqrt()
            * ((t - 1.0 / (16.0 * t)) * sh
                + 0.25 * ((z1 / z0).powf(0.75) - (z0 / z1).powf(0.75)) * ch);
        let l22 = (z1 / z0).powf(0.25) * ch - sh / (4.0 * z1 * q);
        Ok(AsymptoticMatrix {
            matrix: TransferMatrix::new(l11, l12, l21, l22),
            regime: AsymptoticRegime::LargeZExp,
            chi,
        })
    } else {
        Err(LimitError::MixedSign { z0, z1 })
    }
}

/// The oscillatory form evaluated in complex arithmetic, with
/// `(-z)^p = e^{i pi p} z^p` for positive `z`.
///
/// For positive arguments its real part reproduces the exponential form and
/// its imaginary part vanishes.
pub fn lambda_large_z_continued(z0: f64, z1: f64, sigma: f64) -> [Complex64; 4] {
    let neg_pow = |z: f64, p: f64| -> Complex64 {
        if z <= 0.0 {
            Complex64::from((-z).powf(p))
        } else {
            Complex64::from_polar(z.powf(p), PI * p)
        }
    };
    let chi = (neg_pow(z1, 1.5) - neg_pow(z0, 1.5)) * (2.0 / 3.0);
    let (s, c) = (chi.sin(), chi.cos());
    let q0 = neg_pow(z0, 0.25);
    let q1 = neg_pow(z1, 0.25);
    let t0 = neg_pow(z0, 0.75);
    let t1 = neg_pow(z1, 0.75);
    let h0 = neg_pow(z0, 0.5);
    let h1 = neg_pow(z1, 0.5);
    let l11 = q0 / q1 * c - s / (q0 * q1 * 4.0 * z0);
    let l12 = -s / (q0 * q1 * sigma);
    let l21 = (((t0 * t1) + (t0 * t1 * 16.0).inv()) * s + (t0 / t1 - t1 / t0) * c * 0.25) * sigma
        / (h0 * h1);
    let l22 = q1 / q0 * c + s / (q0 * q1 * 4.0 * z1);
    [l11, l12, l21, l22]
}

/// `k_{1,0} = 2 (k0^2 + k1^2 + k0 k1) / (3 (k0 + k1))`.
pub fn k10(k0: Complex64, k1: Complex64) -> Complex64 {
    (k0 * k0 + k1 * k1 + k0 * k1) * 2.0 / ((k0 + k1) * 3.0)
}

/// Large-argument form written with the edge wave numbers.
///
/// Takes the signed squares `k0_sq = E - V0`, `k1_sq = E - V1`. Barriers
/// (both negative) use imaginary wave numbers; the real part of the
/// complex result is returned.
pub fn lambda_k_form(k0_sq: f64, k1_sq: f64, width: f64) -> Result<AsymptoticMatrix, LimitError> {
    if !(width > 0.0) {
        return Err(LimitError::BadWidth);
    }
    if k0_sq == 0.0 || k1_sq == 0.0 {
        return Err(LimitError::Grazing);
    }
    if (k0_sq > 0.0) != (k1_sq > 0.0) {
        return Err(LimitError::MixedBranch);
    }
    let k0 = Complex64::from(k0_sq).sqrt();
    let k1 = Complex64::from(k1_sq).sqrt();
    if (k0 + k1).norm() == 0.0 {
        return Err(LimitError::Grazing);
    }
    let kk = k10(k0, k1);
    let arg = kk * width;
    let (s, c) = (arg.sin(), arg.cos());
    let diff = Complex64::from(k0_sq - k1_sq);
    let l = width;
    let l11 = (k0 / k1).sqrt() * c - diff / (4.0 * l) * k0.powf(-2.5) * k1.powf(-0.5) * s;
    let l12 = k0.powf(-0.5) * k1.powf(-0.5) * s;
    let l21 = diff * diff * kk * 3.0 / (k0.powf(2.5) * k1.powf(2.5) * 8.0 * l) * c
        - (k0 * k1).sqrt() * (1.0 + (diff / (4.0 * l)).powi(2) * (k0 * k1).powi(-3)) * s;
    let l22 = (k1 / k0).sqrt() * c + diff / (4.0 * l) * k0.powf(-0.5) * k1.powf(-2.5) * s;
    let chi = if k0_sq > 0.0 {
        (k1_sq - k0_sq).signum() * kk.re * width
    } else {
        kk.im * width
    };
    Ok(AsymptoticMatrix {
        matrix: TransferMatrix::new(l11.re, l12.re, l21.re, l22.re),
        regime: AsymptoticRegime::KForm,
        chi,
    })
}

/// Exact matrix of a single squeezed layer at one probe value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub epsilon: f64,
    pub matrix: TransferMatrix,
    /// Largest element difference from the limit matrix, when one exists.
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleLayerLimit {
    pub region: RegionClass,
    pub classification: LimitClassification,
    pub probe: Vec<ProbePoint>,
}

/// Tolerance on `kappa d` for sitting on a `sin(kappa d) = 0` resonance.
const RESONANCE_TOL: f64 = 1e-9;

fn resonance_index(phase: f64) -> Option<u32> {
    let n = (phase / PI).round();
    if n >= 0.0 && (phase - n * PI).abs() <= RESONANCE_TOL * phase.abs().max(1.0) {
        Some(n as u32)
    } else {
        None
    }
}

/// Zero-thickness limit of one layer, with the exact matrices along
/// `epsilon_probe` (evaluated at `energy`) as numerical evidence.
pub fn single_layer_limit(
    layer: &LayerSpec,
    energy: f64,
    epsilon_probe: &[f64],
) -> Result<SingleLayerLimit, LimitError> {
    let LayerSpec { a, b, d, mu, nu } = *layer;
    let region = classify_region(mu, nu);
    let unsupported = Err(LimitError::Unsupported { mu, nu });
    let near = |x: f64, y: f64| (x - y).abs() <= crate::potential::REGION_TOL;

    let classification = match region {
        RegionClass::P11 => LimitClassification::Delta {
            alpha: (a + b / 2.0) * d,
        },
        RegionClass::S0 | RegionClass::L0_1 | RegionClass::L0_2 => {
            // the bias drops out unless it grows as fast as the level
            let alpha = if region == RegionClass::L0_2 {
                (a + b / 2.0) * d
            } else {
                a * d
            };
            if mu < 1.0 || alpha == 0.0 {
                LimitClassification::Transparent
            } else if near(mu, 1.0) {
                LimitClassification::Delta { alpha }
            } else {
                LimitClassification::OpaqueWall
            }
        }
        RegionClass::P21 => {
            if a < 0.0 {
                match resonance_index((-a).sqrt() * d) {
                    Some(n) if n >= 1 => LimitClassification::ResonantDelta { n, alpha: 0.0 },
                    _ => LimitClassification::OpaqueWall,
                }
            } else if a > 0.0 {
                LimitClassification::OpaqueWall
            } else {
                return unsupported;
            }
        }
        _ => return unsupported,
    };

    let limit = classification.matrix();
    let spec = StructureSpec::new(vec![*layer]);
    let probe = epsilon_probe
        .iter()
        .filter_map(|&eps| {
            let layers = realize(&spec, eps).ok()?;
            let matrix = structure_matrix(&layers, energy).ok()?;
            Some(ProbePoint {
                epsilon: eps,
                matrix,
                distance: limit.map(|m| m.max_abs_diff(&matrix)),
            })
        })
        .collect();
    Ok(SingleLayerLimit {
        region,
        classification,
        probe,
    })
}

/// Transmission probability of a biased delta interaction.
pub fn delta_transmission(alpha: f64, k: f64, k_right: f64) -> f64 {
    4.0 * k * k_right / ((k + k_right).powi(2) + alpha * alpha)
}

/// Transmission probability of `[[theta, 0], [alpha, 1/theta]]`.
pub fn limit_transmission_on_resonance(theta: f64, alpha: f64, k: f64, k_right: f64) -> f64 {
    4.0 * k * k_right / ((k / theta + k_right * theta).powi(2) + alpha * alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TwoLayerMode {
    /// Both layers at `(mu, nu) = (2, 1)`.
    DeltaPrime,
    /// Barrier at `(1, 1)`, well at `(2, 1)`.
    ResonantDelta,
}

/// Limit elements of a two-layer structure.
///
/// `lambda21 = finite_l21 - divergent / eps + o(1)`; the limit exists only
/// where `divergent` vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerLimit {
    pub classification: LimitClassification,
    pub lambda11: f64,
    pub lambda22: f64,
    pub finite_l21: f64,
    pub divergent: f64,
    /// `|divergent|` relative to the sum of its terms.
    pub scaled_residual: f64,
}

fn csqrt_neg(x: f64) -> Complex64 {
    Complex64::from(-x).sqrt()
}

/// Tolerance on the scaled divergent coefficient for a resonance.
pub const ROOT_TOL: f64 = 1e-9;

pub fn two_layer_limit_matrices(
    spec: &StructureSpec,
    mode: TwoLayerMode,
) -> Result<TwoLayerLimit, LimitError> {
    if spec.layers.len() != 2 {
        return Err(LimitError::Mismatch(format!(
            "expected 2 layers, got {}",
            spec.layers.len()
        )));
    }
    let (l1, l2) = (spec.layers[0], spec.layers[1]);
    let power = |l: &LayerSpec, mu: f64, nu: f64| {
        (l.mu - mu).abs() < crate::potential::REGION_TOL
            && (l.nu - nu).abs() < crate::potential::REGION_TOL
    };
    let shifted2 = l2.a + l1.b;
    match mode {
        TwoLayerMode::DeltaPrime => {
            if !(power(&l1, 2.0, 1.0) && power(&l2, 2.0, 1.0)) {
                return Err(LimitError::Mismatch(
                    "delta-prime mode needs both layers at (2, 1)".into(),
                ));
            }
            let k1 = csqrt_neg(l1.a);
            let k2 = csqrt_neg(shifted2);
            if k1.norm() == 0.0 || k2.norm() == 0.0 {
                return Err(LimitError::Domain("kappa vanishes".into()));
            }
            let (s1, c1) = ((k1 * l1.d).sin(), (k1 * l1.d).cos());
            let (s2, c2) = ((k2 * l2.d).sin(), (k2 * l2.d).cos());
            let g1 = Complex64::from(l1.b) / (k1.powi(3) * 4.0 * l1.d);
            let g2 = Complex64::from(l2.b) / (k2.powi(3) * 4.0 * l2.d);
            let lambda11 = c1 * c2 - k1 / k2 * s1 * s2;
            let lambda22 = c1 * c2 - k2 / k1 * s1 * s2;
            let alpha = (k2 * g1 - k1 * g2) * s1 * s2;
            let t1 = k1 * s1 * c2;
            let t2 = k2 * c1 * s2;
            let divergent = (t1 + t2).re;
            // both terms can vanish together, so measure against the sizes
            // of the factors rather than the products
            let scale = (k1.norm() + k2.norm()) * (s1.norm() + c1.norm()) * (s2.norm() + c2.norm());
            let scaled_residual = divergent.abs() / scale;
            let classification = if scaled_residual < ROOT_TOL {
                LimitClassification::DeltaPrimeFamily {
                    theta: (c1 / c2).re,
                    alpha: alpha.re,
                }
            } else {
                LimitClassification::OpaqueWall
            };
            Ok(TwoLayerLimit {
                classification,
                lambda11: lambda11.re,
                lambda22: lambda22.re,
                finite_l21: alpha.re,
                divergent,
                scaled_residual,
            })
        }
        TwoLayerMode::ResonantDelta => {
            if !(power(&l1, 1.0, 1.0) && power(&l2, 2.0, 1.0)) {
                return Err(LimitError::Mismatch(
                    "resonant-delta mode needs layers at (1, 1) and (2, 1)".into(),
                ));
            }
            if shifted2 >= 0.0 {
                return Ok(TwoLayerLimit {
                    classification: LimitClassification::OpaqueWall,
                    lambda11: f64::NAN,
                    lambda22: f64::NAN,
                    finite_l21: f64::NAN,
                    divergent: f64::INFINITY,
                    scaled_residual: 1.0,
                });
            }
            let kappa2 = (-shifted2).sqrt();
            let (s2, c2) = (kappa2 * l2.d).sin_cos();
            let alpha1 = (l1.a + l1.b / 2.0) * l1.d;
            let c11 = if l1.b != 0.0 {
                0.5 * l1.a * l1.a * (l1.a + l1.b) * (l1.d / l1.b).powi(2)
            } else {
                0.0
            };
            let divergent = kappa2 * s2;
            let classification = match resonance_index(kappa2 * l2.d) {
                Some(n) if n >= 1 => LimitClassification::ResonantDelta { n, alpha: alpha1 },
                _ => LimitClassification::OpaqueWall,
            };
            Ok(TwoLayerLimit {
                classification,
                lambda11: c2,
                lambda22: c2 - kappa2 * l1.d * s2,
                finite_l21: alpha1 * c2 + c11 * kappa2 * s2,
                divergent,
                scaled_residual: s2.abs(),
            })
        }
    }
}

/// Explicit barrier-well delta-prime limit data `(theta, alpha)` for a
/// barrier `a1 > 0` next to a well `a2 + b1 < 0`.
pub fn deltaprime_2layer_theta_alpha(
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
    d1: f64,
    d2: f64,
) -> Result<(f64, f64), LimitError> {
    if !(a1 > 0.0) || !(a2 + b1 < 0.0) {
        return Err(LimitError::Domain("needs a1 > 0 and a2 + b1 < 0".into()));
    }
    let r1 = a1.sqrt();
    let kk = (-(a2 + b1)).sqrt();
    let theta = (r1 * d1).cosh() / (kk * d2).cos();
    let alpha = 0.25
        * (r1 * b2 / (kk.powi(3) * d2) - kk * b1 / (a1 * r1 * d1))
        * (r1 * d1).sinh()
        * (kk * d2).sin();
    Ok((theta, alpha))
}

/// Three-layer device: barrier `a1` over `d1`, flat gap `d2` at `-V_EB`,
/// barrier `a3` over `d3`, with collector bias `v_cb`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transistor {
    pub a1: f64,
    pub a3: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub v_cb: f64,
}

impl Transistor {
    /// Layers at squeezing powers for barriers `(mu_b, nu_b)` and gap `(mu_2, 0)`.
    pub fn structure(&self, v_eb: f64, barrier: (f64, f64), gap_mu: f64) -> StructureSpec {
        StructureSpec::new(vec![
            LayerSpec {
                a: self.a1,
                b: -v_eb,
                d: self.d1,
                mu: barrier.0,
                nu: barrier.1,
            },
            LayerSpec {
                a: 0.0,
                b: 0.0,
                d: self.d2,
                mu: gap_mu,
                nu: 0.0,
            },
            LayerSpec {
                a: self.a3,
                b: -self.v_cb,
                d: self.d3,
                mu: barrier.0,
                nu: barrier.1,
            },
        ])
    }

    /// `0 < V_EB < min(a1, a3 - V_CB)`.
    pub fn admissible(&self, v_eb: f64) -> bool {
        v_eb > 0.0 && v_eb < self.a1.min(self.a3 - self.v_cb)
    }

    /// Strength of the delta limit at `v_eb`.
    pub fn delta_alpha(&self, v_eb: f64) -> f64 {
        (self.a1 - v_eb / 2.0) * self.d1 + (self.a3 - v_eb - self.v_cb / 2.0) * self.d3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransistorLimit {
    pub classification: LimitClassification,
    pub warnings: Vec<String>,
}

fn admissibility_warnings(t: &Transistor, v_eb: f64) -> Vec<String> {
    let mut warnings = Vec::new();
    if !t.admissible(v_eb) {
        warnings.push(format!(
            "V_EB = {v_eb} lies outside (0, min(a1, a3 - V_CB)) = (0, {})",
            t.a1.min(t.a3 - t.v_cb)
        ));
    }
    warnings
}

/// Delta limit of the device with both barriers at `(1, 1)`.
pub fn transistor_delta_limit(t: &Transistor, v_eb: f64) -> TransistorLimit {
    let mut warnings = admissibility_warnings(t, v_eb);
    let classification = if v_eb > 0.0 {
        match resonance_index(v_eb.sqrt() * t.d2) {
            Some(n) if n >= 1 => LimitClassification::ResonantDelta {
                n,
                alpha: t.delta_alpha(v_eb),
            },
            _ => LimitClassification::OpaqueWall,
        }
    } else {
        warnings.push("V_EB must be positive for a propagating gap".into());
        LimitClassification::OpaqueWall
    };
    TransistorLimit {
        classification,
        warnings,
    }
}

/// Hyperbolic and trigonometric pieces shared by the delta-prime device
/// formulas, in real form with `A1 = sqrt(a1)`, `A3 = sqrt(a3 - V)`, `K = sqrt(V)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TransistorParts {
    pub a1r: f64,
    pub a3r: f64,
    pub k: f64,
    pub c1: f64,
    pub s1: f64,
    pub c3: f64,
    pub s3: f64,
    pub cos2: f64,
    pub sin2: f64,
}

impl TransistorParts {
    pub(crate) fn new(t: &Transistor, v_eb: f64) -> Result<Self, LimitError> {
        if !(v_eb > 0.0) || !(t.a1 > 0.0) || !(t.a3 - v_eb > 0.0) {
            return Err(LimitError::Domain("needs a1 > 0 and 0 < V_EB < a3".into()));
        }
        let a1r = t.a1.sqrt();
        let a3r = (t.a3 - v_eb).sqrt();
        let k = v_eb.sqrt();
        let (sin2, cos2) = (k * t.d2).sin_cos();
        Ok(TransistorParts {
            a1r,
            a3r,
            k,
            c1: (a1r * t.d1).cosh(),
            s1: (a1r * t.d1).sinh(),
            c3: (a3r * t.d3).cosh(),
            s3: (a3r * t.d3).sinh(),
            cos2,
            sin2,
        })
    }

    /// The four additive terms of the cancellation condition, multiplied
    /// through by the cosines so that no poles remain. A root is where they sum to zero.
    pub(crate) fn condition_terms(&self) -> [f64; 4] {
        [
            self.k * self.c1 * self.c3 * self.sin2,
            -self.a1r * self.s1 * self.c3 * self.cos2,
            -self.a3r * self.c1 * self.s3 * self.cos2,
            -self.a1r * self.a3r / self.k * self.s1 * self.s3 * self.sin2,
        ]
    }

    pub(crate) fn scaled_residual(&self) -> f64 {
        let terms = self.condition_terms();
        let scale: f64 = terms.iter().map(|x| x.abs()).sum();
        terms.iter().sum::<f64>().abs() / scale
    }

    /// `(I1, I2, J1, J2)`; at a root `I1 = I2 = 1/J1 = 1/J2`.
    pub(crate) fn theta_representations(&self) -> [f64; 4] {
        let i1 = (self.c1 * self.cos2 + self.a1r / self.k * self.s1 * self.sin2) / self.c3;
        let i2 =
            (self.k * self.c1 * self.sin2 - self.a1r * self.s1 * self.cos2) / (self.a3r * self.s3);
        let j1 = (self.cos2 * self.c3 + self.a3r / self.k * self.sin2 * self.s3) / self.c1;
        let j2 =
            (self.k * self.sin2 * self.c3 - self.a3r * self.s3 * self.cos2) / (self.a1r * self.s1);
        [i1, i2, j1, j2]
    }

    /// Off-diagonal limit element in its expanded form.
    pub(crate) fn alpha(&self, t: &Transistor, v_eb: f64) -> f64 {
        let first = v_eb / (4.0 * t.d1 * t.a1.powf(1.5))
            * self.s1
            * (self.k * self.c3 * self.sin2 - self.a3r * self.s3 * self.cos2);
        let second = t.v_cb / (4.0 * t.d3 * (t.a3 - v_eb).powf(1.5))
            * self.s3
            * (self.k * self.c1 * self.sin2 - self.a1r * self.s1 * self.cos2);
        first - second
    }
}

/// Theta consistency measure `|I1 - I2| + |J1 - J2| + |I1 J1 - 1|`, relative
/// to the magnitudes involved.
pub(crate) fn theta_consistency(reps: &[f64; 4]) -> f64 {
    let [i1, i2, j1, j2] = *reps;
    (i1 - i2).abs() / i1.abs().max(1.0)
        + (j1 - j2).abs() / j1.abs().max(1.0)
        + (i1 * j1 - 1.0).abs()
}

/// Consistency tolerance for the four theta representations.
pub const THETA_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransistorDeltaPrimeLimit {
    pub classification: LimitClassification,
    pub theta_representations: [f64; 4],
    pub scaled_residual: f64,
    pub warnings: Vec<String>,
}

/// Delta-prime limit of the device with all three layers at `mu = 2` and
/// barriers at `nu = 1`, at a root of the cancellation condition.
pub fn transistor_deltaprime_limit(
    t: &Transistor,
    v_eb_root: f64,
) -> Result<TransistorDeltaPrimeLimit, LimitError> {
    let parts = TransistorParts::new(t, v_eb_root)?;
    let residual = parts.scaled_residual();
    let reps = parts.theta_representations();
    let consistency = theta_consistency(&reps);
    if !(residual < ROOT_TOL) || !(consistency < THETA_TOL) {
        return Err(LimitError::NotARoot {
            residual,
            consistency,
        });
    }
    Ok(TransistorDeltaPrimeLimit {
        classification: LimitClassification::DeltaPrimeFamily {
            theta: reps[0],
            alpha: parts.alpha(t, v_eb_root),
        },
        theta_representations: reps,
        scaled_residual: residual,
        warnings: admissibility_warnings(t, v_eb_root),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{ev_to_invnm2, ConcreteLayer};
    use crate::scattering::scatter;
    use crate::transfer::{layer_matrix_constant, layer_matrix_linear};

    fn linear_layer(z0: f64, z1: f64, sigma: f64, energy: f64) -> ConcreteLayer {
        let s2 = sigma * sigma;
        ConcreteLayer::new(energy + s2 * z0, energy + s2 * z1, (z1 - z0) / sigma)
    }

    #[test]
    fn small_z_examples() {
        let m = lambda_small_z(0.0, 0.0, 1.0).matrix;
        assert_eq!(m, TransferMatrix::IDENTITY);
        let m = lambda_small_z(-0.01, -0.02, 1.0).matrix;
        assert!((m.l21 - 1.5e-4).abs() < 1e-18);
        // the off-diagonal width element is exact
        let layer = linear_layer(0.05, 0.08, 0.7, 1.0);
        let m = lambda_small_z(0.05, 0.08, 0.7).matrix;
        assert!((m.l12 - layer.width).abs() < 1e-15);
    }

    #[test]
    fn small_z_tracks_exact_to_cubic_order() {
        for &(z0, z1, sigma) in &[(0.01, 0.03, 1.0), (-0.02, 0.01, 0.5), (-0.005, -0.02, -2.0)] {
            let exact = layer_matrix_linear(&linear_layer(z0, z1, sigma, 0.3), 0.3).unwrap();
            let approx = lambda_small_z(z0, z1, sigma).matrix;
            let zmax = f64::max(z0.abs(), z1.abs());
            assert!((exact.l11 - approx.l11).abs() < zmax.powi(3));
            assert!((exact.l22 - approx.l22).abs() < zmax.powi(3));
            assert!((exact.l12 - approx.l12).abs() < zmax.powi(4) / sigma.abs());
            assert!((exact.l21 - approx.l21).abs() < zmax.powi(4) * sigma.abs());
        }
    }

    #[test]
    fn large_z_equal_arguments() {
        let m = lambda_large_z(-30.0, -30.0, 1.0).unwrap();
        assert_eq!(m.chi, 0.0);
        assert!(m.matrix.max_abs_diff(&TransferMatrix::IDENTITY) < 1e-15);
        assert!(lambda_large_z(-3.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn large_z_determinants() {
        let m = lambda_large_z(50.0, 60.0, 1.0).unwrap();
        assert!((m.matrix.det() - 1.0).abs() < 1e-8 * m.matrix.l11.abs() * m.matrix.l22.abs());
        assert_eq!(m.regime, AsymptoticRegime::LargeZExp);
        let m = lambda_large_z(-100.0, -110.0, 1.0).unwrap();
        assert!((m.matrix.det() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn large_z_matches_exact_deep_well() {
        let (z0, z1, sigma) = (-100.0, -110.0, -1.0);
        let exact = layer_matrix_linear(&linear_layer(z0, z1, sigma, 0.0), 0.0).unwrap();
        let approx = lambda_large_z(z0, z1, sigma).unwrap().matrix;
        let env = [
            1.0,
            1.0 / (100f64 * 110.0).powf(0.25),
            (100f64 * 110.0).powf(0.25),
            1.0,
        ];
        for ((e, a), s) in exact.elements().iter().zip(approx.elements()).zip(env) {
            assert!((e - a).abs() / s < 5e-3, "{e} vs {a}");
        }
    }

    #[test]
    fn continuation_reproduces_exponential_form() {
        for &(z0, z1, sigma) in &[(50.0, 60.0, 1.0), (12.0, 9.5, -0.5), (3.0, 3.3, 2.0)] {
            let exp_form = lambda_large_z(z0, z1, sigma).unwrap().matrix.elements();
            let cont = lambda_large_z_continued(z0, z1, sigma);
            for (c, e) in cont.iter().zip(exp_form) {
                assert!((c.re - e).abs() <= 1e-10 * e.abs().max(1.0), "{c} vs {e}");
                assert!(c.im.abs() <= 1e-10 * e.abs().max(1.0));
            }
        }
        let osc = lambda_large_z(-40.0, -45.0, 1.0).unwrap().matrix.elements();
        let cont = lambda_large_z_continued(-40.0, -45.0, 1.0);
        for (c, o) in cont.iter().zip(osc) {
            assert!((c.re - o).abs() < 1e-12 && c.im == 0.0);
        }
    }

    #[test]
    fn k_form_reduces_to_flat_layer() {
        let m = lambda_k_form(1.0, 1.0, PI).unwrap().matrix;
        assert!(m.max_abs_diff(&TransferMatrix::new(-1.0, 0.0, 0.0, -1.0)) < 1e-14);
        let kk = k10(Complex64::from(2.0), Complex64::from(1.0));
        assert!((kk.re - 14.0 / 9.0).abs() < 1e-15);
        let bar = lambda_k_form(-0.7, -0.7, 1.3).unwrap().matrix;
        assert!(bar.max_abs_diff(&layer_matrix_constant(0.7, 1.3, 0.0)) < 1e-13);
        assert!(lambda_k_form(0.0, 1.0, 1.0).is_err());
        assert!(lambda_k_form(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn k_form_equals_oscillatory_form() {
        let (z0, z1, sigma, e) = (-60.0, -75.0, -0.8, 0.2);
        let layer = linear_layer(z0, z1, sigma, e);
        let k = lambda_k_form(e - layer.v_left_edge, e - layer.v_right_edge, layer.width)
            .unwrap()
            .matrix;
        let osc = lambda_large_z(z0, z1, sigma).unwrap().matrix;
        assert!(
            k.max_abs_diff(&osc)
                < 1e-10 * osc.elements().iter().fold(1.0f64, |m, x| m.max(x.abs()))
        );
    }

    #[test]
    fn k_form_equals_exponential_form() {
        let (z0, z1, sigma, e) = (60.0, 70.0, 0.5, 0.0);
        let layer = linear_layer(z0, z1, sigma, e);
        let k = lambda_k_form(e - layer.v_left_edge, e - layer.v_right_edge, layer.width)
            .unwrap()
            .matrix;
        let ex = lambda_large_z(z0, z1, sigma).unwrap().matrix;
        for (a, b) in k.elements().iter().zip(ex.elements()) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn limit_transmissions() {
        assert_eq!(delta_transmission(0.0, 1.3, 1.3), 1.0);
        assert!((delta_transmission(2.0, 1.0, 1.0) - 0.5).abs() < 1e-15);
        let kr = (0.25f64 + 0.524928).sqrt();
        let t = delta_transmission(2.099712, 0.5, kr);
        assert!((t - 0.278840).abs() < 1e-6, "{t}");
        let m = TransferMatrix::new(1.0, 0.0, 2.099712, 1.0);
        let s = scatter(&m, 0.0, -0.524928, 0.25).unwrap();
        assert!((s.trans_prob - t).abs() < 1e-14);

        assert_eq!(limit_transmission_on_resonance(1.0, 0.0, 0.8, 0.8), 1.0);
        assert!((limit_transmission_on_resonance(2.0, 0.0, 1.0, 1.0) - 0.64).abs() < 1e-15);
        assert_eq!(
            limit_transmission_on_resonance(1.0, 0.7, 0.5, 0.9),
            delta_transmission(0.7, 0.5, 0.9)
        );
    }

    #[test]
    fn single_layer_classifications() {
        let delta = LayerSpec {
            a: 1.31232,
            b: -0.524928,
            d: 2.0,
            mu: 1.0,
            nu: 1.0,
        };
        let r = single_layer_limit(&delta, 0.25, &[]).unwrap();
        match r.classification {
            LimitClassification::Delta { alpha } => assert!((alpha - 2.099712).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let soft = LayerSpec {
            a: 3.0,
            b: 0.0,
            d: 1.0,
            mu: 0.5,
            nu: 0.0,
        };
        assert_eq!(
            single_layer_limit(&soft, 1.0, &[]).unwrap().classification,
            LimitClassification::Transparent
        );
        let stiff = LayerSpec {
            a: 3.0,
            b: 0.5,
            d: 1.0,
            mu: 1.5,
            nu: 1.5,
        };
        assert_eq!(
            single_layer_limit(&stiff, 1.0, &[]).unwrap().classification,
            LimitClassification::OpaqueWall
        );
        let p20 = LayerSpec {
            a: -1.0,
            b: 0.5,
            d: 1.0,
            mu: 2.0,
            nu: 0.0,
        };
        assert!(matches!(
            single_layer_limit(&p20, 1.0, &[]),
            Err(LimitError::Unsupported { .. })
        ));
    }

    #[test]
    fn single_well_resonance_depths() {
        let d = 10.0;
        let sigma1 = -(PI / d).powi(2);
        assert!((sigma1 + 0.0986960).abs() < 1e-7);
        assert!((sigma1 / 2.62464 + 0.0376037).abs() < 1e-7);
        let on = LayerSpec {
            a: sigma1,
            b: 0.0,
            d,
            mu: 2.0,
            nu: 1.0,
        };
        assert_eq!(
            single_layer_limit(&on, 0.1, &[]).unwrap().classification,
            LimitClassification::ResonantDelta { n: 1, alpha: 0.0 }
        );
        let off = LayerSpec {
            a: 1.5 * sigma1,
            ..on
        };
        assert_eq!(
            single_layer_limit(&off, 0.1, &[]).unwrap().classification,
            LimitClassification::OpaqueWall
        );
        assert_eq!(
            LimitClassification::ResonantDelta { n: 1, alpha: 0.0 }.matrix(),
            Some(TransferMatrix::new(-1.0, 0.0, -0.0, -1.0))
        );
    }

    #[test]
    fn single_layer_probe_converges() {
        let layer = LayerSpec {
            a: 1.0,
            b: -0.4,
            d: 1.5,
            mu: 1.0,
            nu: 1.0,
        };
        let r = single_layer_limit(&layer, 0.3, &[0.5, 0.1, 0.02]).unwrap();
        let dist: Vec<f64> = r.probe.iter().map(|p| p.distance.unwrap()).collect();
        assert!(dist[0] > dist[1] && dist[1] > dist[2], "{dist:?}");
    }

    #[test]
    fn resonant_delta_two_layer() {
        let a2 = ev_to_invnm2(-0.1);
        let d2 = 10.0;
        let b1 = -(2.0 * PI / d2).powi(2) - a2;
        assert!((-b1 / 2.62464 - 0.050414).abs() < 1e-6);
        let spec = StructureSpec::new(vec![
            LayerSpec {
                a: ev_to_invnm2(0.5),
                b: b1,
                d: 2.0,
                mu: 1.0,
                nu: 1.0,
            },
            LayerSpec {
                a: a2,
                b: 0.0,
                d: d2,
                mu: 2.0,
                nu: 1.0,
            },
        ]);
        let lim = two_layer_limit_matrices(&spec, TwoLayerMode::ResonantDelta).unwrap();
        match lim.classification {
            LimitClassification::ResonantDelta { n, alpha } => {
                assert_eq!(n, 2);
                assert!((alpha - (ev_to_invnm2(0.5) + b1 / 2.0) * 2.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert!((lim.lambda11 - 1.0).abs() < 1e-12 && (lim.lambda22 - 1.0).abs() < 1e-12);

        let mut off = spec.clone();
        off.layers[0].b += 0.05;
        let lim = two_layer_limit_matrices(&off, TwoLayerMode::ResonantDelta).unwrap();
        assert_eq!(lim.classification, LimitClassification::OpaqueWall);
        assert!(two_layer_limit_matrices(&spec, TwoLayerMode::DeltaPrime).is_err());
    }

    #[test]
    fn resonant_delta_unbiased() {
        let d2 = 7.0;
        let spec = StructureSpec::new(vec![
            LayerSpec {
                a: 0.8,
                b: 0.0,
                d: 1.0,
                mu: 1.0,
                nu: 1.0,
            },
            LayerSpec {
                a: -(3.0 * PI / d2).powi(2),
                b: 0.0,
                d: d2,
                mu: 2.0,
                nu: 1.0,
            },
        ]);
        let lim = two_layer_limit_matrices(&spec, TwoLayerMode::ResonantDelta).unwrap();
        assert!(matches!(
            lim.classification,
            LimitClassification::ResonantDelta { n: 3, .. }
        ));
    }

    #[test]
    fn deltaprime_symmetric_unbiased() {
        // kappa d = pi in both layers, so both tangents vanish
        let d = 2.0;
        let a2 = -(PI / d).powi(2);
        let spec = StructureSpec::new(vec![
            LayerSpec {
                a: a2,
                b: 0.0,
                d,
                mu: 2.0,
                nu: 1.0,
            },
            LayerSpec {
                a: a2,
                b: 0.0,
                d,
                mu: 2.0,
                nu: 1.0,
            },
        ]);
        let lim = two_layer_limit_matrices(&spec, TwoLayerMode::DeltaPrime).unwrap();
        match lim.classification {
            LimitClassification::DeltaPrimeFamily { theta, .. } => {
                let m = lim.classification.matrix().unwrap();
                assert!((m.det() - 1.0).abs() < 1e-14);
                assert!((theta - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deltaprime_complex_and_explicit_forms_agree() {
        // pick a well depth that solves the root condition by bisection
        let (a1, a2, b2, d1, d2): (f64, f64, f64, f64, f64) = (1.3, -0.3, -0.1, 1.0, 4.0);
        let f = |b1: f64| {
            let kk = (-(a2 + b1)).sqrt();
            a1.sqrt() * (a1.sqrt() * d1).sinh() * (kk * d2).cos()
                - kk * (a1.sqrt() * d1).cosh() * (kk * d2).sin()
        };
        let (mut lo, mut hi) = (-1.08f64, -0.32f64);
        assert!(f(lo).signum() != f(hi).signum());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == f(lo).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let b1 = 0.5 * (lo + hi);
        let spec = StructureSpec::new(vec![
            LayerSpec {
                a: a1,
                b: b1,
                d: d1,
                mu: 2.0,
                nu: 1.0,
            },
            LayerSpec {
                a: a2,
                b: b2,
                d: d2,
                mu: 2.0,
                nu: 1.0,
            },
        ]);
        let lim = two_layer_limit_matrices(&spec, TwoLayerMode::DeltaPrime).unwrap();
        let (theta, alpha) = deltaprime_2layer_theta_alpha(a1, a2, b1, b2, d1, d2).unwrap();
        match lim.classification {
            LimitClassification::DeltaPrimeFamily {
                theta: t,
                alpha: al,
            } => {
                assert!((t - theta).abs() < 1e-10 * theta.abs());
                assert!((al - alpha).abs() < 1e-10 * alpha.abs().max(1.0));
            }
            other => panic!("{other:?}"),
        }
        assert!((lim.lambda11 - theta).abs() < 1e-6 * theta.abs());
        assert!((lim.lambda22 - 1.0 / theta).abs() < 1e-6 / theta.abs());
    }

    #[test]
    fn transistor_delta_roots() {
        let t = Transistor {
            a1: ev_to_invnm2(0.5),
            a3: ev_to_invnm2(0.5),
            d1: 2.0,
            d2: 10.0,
            d3: 2.0,
            v_cb: ev_to_invnm2(0.2),
        };
        let v1 = (PI / 10.0).powi(2);
        let lim = transistor_delta_limit(&t, v1);
        match lim.classification {
            LimitClassification::ResonantDelta { n: 1, alpha } => assert!(alpha > 0.0),
            other => panic!("{other:?}"),
        }
        assert!(lim.warnings.is_empty());
        let v3 = (3.0 * PI / 10.0).powi(2);
        assert!(!transistor_delta_limit(&t, v3).warnings.is_empty());
        assert_eq!(
            transistor_delta_limit(&t, 1.3 * v1).classification,
            LimitClassification::OpaqueWall
        );
    }

    #[test]
    fn transistor_deltaprime_rejects_non_roots() {
        let t = Transistor {
            a1: 1.3,
            a3: 1.3,
            d1: 2.0,
            d2: 10.0,
            d3: 2.0,
            v_cb: 0.5,
        };
        assert!(matches!(
            transistor_deltaprime_limit(&t, 0.2),
            Err(LimitError::NotARoot { .. })
        ));
        assert!(transistor_deltaprime_limit(&t, 1.5).is_err());
    }
}
