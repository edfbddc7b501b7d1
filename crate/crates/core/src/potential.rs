//! Squeezable layered potentials.
//!
//! A layer is described by its left-edge coefficient `a`, the bias `b` across
//! it, the unsqueezed width `d` and two powers: at squeezing parameter `eps`
//! the left edge sits at `(a + sum of earlier b) * eps^-mu`, the bias grows
//! like `b * eps^-nu`, and the width shrinks to `eps * d`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// nm⁻² per eV in units where ħ²/2m* = 1.
pub const INVNM2_PER_EV: f64 = 2.62464;

/// Tolerance for placing `(mu, nu)` on a boundary line or point.
pub const REGION_TOL: f64 = 1e-12;

pub fn ev_to_invnm2(e: f64) -> f64 {
    e * INVNM2_PER_EV
}

pub fn invnm2_to_ev(e: f64) -> f64 {
    e / INVNM2_PER_EV
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("squeezing parameter must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("layer {index}: width must be positive, got {d}")]
    NonPositiveWidth { index: usize, d: f64 },
    #[error("layer {index}: powers must satisfy 0 <= nu <= mu (mu = {mu}, nu = {nu})")]
    InadmissiblePowers { index: usize, mu: f64, nu: f64 },
    #[error("layer {index}: non-finite parameter")]
    NonFinite { index: usize },
    #[error("layer index {index} out of range for {len} layers")]
    BadIndex { index: usize, len: usize },
    #[error("layer {0} is bias-free; c1 and c2 carry (d/b)^2")]
    BiasFree(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub mu: f64,
    pub nu: f64,
}

impl LayerSpec {
    /// A layer that does not change with `eps` apart from its width.
    pub fn fixed(a: f64, b: f64, d: f64) -> Self {
        LayerSpec {
            a,
            b,
            d,
            mu: 0.0,
            nu: 0.0,
        }
    }

    fn check(&self, index: usize) -> Result<(), ModelError> {
        if ![self.a, self.b, self.d, self.mu, self.nu]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(ModelError::NonFinite { index });
        }
        if self.d <= 0.0 {
            return Err(ModelError::NonPositiveWidth { index, d: self.d });
        }
        if self.mu < 0.0 || self.nu < 0.0 || self.nu > self.mu + REGION_TOL {
            return Err(ModelError::InadmissiblePowers {
                index,
                mu: self.mu,
                nu: self.nu,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureSpec {
    pub layers: Vec<LayerSpec>,
    #[serde(default)]
    pub v_left: f64,
    #[serde(default)]
    pub v_right_override: Option<f64>,
}

impl StructureSpec {
    pub fn new(layers: Vec<LayerSpec>) -> Self {
        StructureSpec {
            layers,
            v_left: 0.0,
            v_right_override: None,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.v_left.is_finite() || !self.v_right_override.unwrap_or(0.0).is_finite() {
            return Err(ModelError::NonFinite { index: 0 });
        }
        self.layers
            .iter()
            .enumerate()
            .try_for_each(|(i, l)| l.check(i))
    }

    /// Shifted left-edge coefficient `a_i + sum_{j<i} b_j` of every layer.
    pub fn shifted_coefficients(&self) -> Vec<f64> {
        let mut bias = 0.0;
        self.layers
            .iter()
            .map(|l| {
                let shifted = l.a + bias;
                bias += l.b;
                shifted
            })
            .collect()
    }

    /// Right lead potential: the override if set, else `v_left + sum b_j`.
    ///
    /// The biases enter unscaled, so the right lead does not move with `eps`.
    pub fn v_right(&self) -> f64 {
        self.v_right_override
            .unwrap_or_else(|| self.v_left + self.layers.iter().map(|l| l.b).sum::<f64>())
    }
}

/// Potential of one layer at a fixed squeezing parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcreteLayer {
    pub v_left_edge: f64,
    pub v_right_edge: f64,
    pub width: f64,
    pub slope: f64,
}

impl ConcreteLayer {
    pub fn new(v_left_edge: f64, v_right_edge: f64, width: f64) -> Self {
        ConcreteLayer {
            v_left_edge,
            v_right_edge,
            width,
            slope: (v_right_edge - v_left_edge) / width,
        }
    }

    pub fn constant(v: f64, width: f64) -> Self {
        ConcreteLayer::new(v, v, width)
    }
}

pub fn realize(spec: &StructureSpec, epsilon: f64) -> Result<Vec<ConcreteLayer>, ModelError> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(ModelError::NonPositiveEpsilon(epsilon));
    }
    spec.validate()?;
    Ok(spec
        .layers
        .iter()
        .zip(spec.shifted_coefficients())
        .map(|(l, shifted)| {
            let v0 = shifted * epsilon.powf(-l.mu);
            let v1 = v0 + l.b * epsilon.powf(-l.nu);
            ConcreteLayer::new(v0, v1, epsilon * l.d)
        })
        .collect())
}

/// `kappa = sqrt(-shifted)` is real for a well and imaginary for a barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KappaBranch {
    Well(f64),
    Barrier(f64),
}

impl KappaBranch {
    pub fn well(self) -> Option<f64> {
        match self {
            KappaBranch::Well(k) => Some(k),
            KappaBranch::Barrier(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCoefficients {
    pub alpha: f64,
    pub kappa: KappaBranch,
    /// `b / (4 kappa^3 d)`; absent off the well branch or at `kappa = 0`.
    pub g: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

impl DerivedCoefficients {
    pub fn c1_c2(&self, index: usize) -> Result<(f64, f64), ModelError> {
        match (self.c1, self.c2) {
            (Some(c1), Some(c2)) => Ok((c1, c2)),
            _ => Err(ModelError::BiasFree(index)),
        }
    }
}

pub fn derived_coefficients(
    spec: &StructureSpec,
    layer_index: usize,
) -> Result<DerivedCoefficients, ModelError> {
    let layer = spec.layers.get(layer_index).ok_or(ModelError::BadIndex {
        index: layer_index,
        len: spec.layers.len(),
    })?;
    let shifted = spec.shifted_coefficients()[layer_index];
    let after = shifted + layer.b;
    let alpha = (shifted + layer.b / 2.0) * layer.d;
    let kappa = if shifted <= 0.0 {
        KappaBranch::Well((-shifted).sqrt())
    } else {
        KappaBranch::Barrier(shifted.sqrt())
    };
    let g = match kappa {
        KappaBranch::Well(k) if k > 0.0 => Some(layer.b / (4.0 * k.powi(3) * layer.d)),
        _ => None,
    };
    let (c1, c2) = if layer.b != 0.0 {
        let ratio = (layer.d / layer.b).powi(2);
        (
            Some(0.5 * shifted * shifted * after * ratio),
            Some(0.5 * shifted * after * after * ratio),
        )
    } else {
        (None, None)
    };
    Ok(DerivedCoefficients {
        alpha,
        kappa,
        g,
        c1,
        c2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum RegionClass {
    S0,
    S_INF,
    L0_INF,
    L0_1,
    L0_2,
    L_INF_1,
    L_INF_2,
    P11,
    P20,
    P21,
    OUTSIDE,
}

impl RegionClass {
    /// Whether the layer sits in the closure of the small-argument region.
    pub fn is_small_z(self) -> bool {
        matches!(
            self,
            RegionClass::S0 | RegionClass::L0_1 | RegionClass::L0_2 | RegionClass::P11
        )
    }

    pub fn is_large_z(self) -> bool {
        matches!(
            self,
            RegionClass::S_INF
                | RegionClass::L_INF_1
                | RegionClass::L_INF_2
                | RegionClass::P20
                | RegionClass::P21
        )
    }
}

pub fn classify_region(mu: f64, nu: f64) -> RegionClass {
    let eq = |x: f64, y: f64| (x - y).abs() <= REGION_TOL;
    if !(mu.is_finite() && nu.is_finite())
        || mu <= REGION_TOL
        || mu > 2.0 + REGION_TOL
        || nu < -REGION_TOL
        || nu > mu + REGION_TOL
    {
        return RegionClass::OUTSIDE;
    }
    if eq(mu, 1.0) && eq(nu, 1.0) {
        return RegionClass::P11;
    }
    if eq(mu, 2.0) && eq(nu, 0.0) {
        return RegionClass::P20;
    }
    if eq(mu, 2.0) && eq(nu, 1.0) {
        return RegionClass::P21;
    }
    let separator = 1.5 * mu - 1.0;
    if eq(nu, separator) {
        return RegionClass::L0_INF;
    }
    if eq(nu, 0.0) {
        return if mu < 2.0 / 3.0 {
            RegionClass::L0_1
        } else {
            RegionClass::L_INF_1
        };
    }
    if eq(mu, 2.0) {
        return RegionClass::L_INF_2;
    }
    if eq(nu, mu) {
        return RegionClass::L0_2;
    }
    if nu > separator {
        RegionClass::S0
    } else {
        RegionClass::S_INF
    }
}
