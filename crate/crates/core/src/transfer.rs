//! Layer transfer matrices.
//!
//! A transfer matrix maps `(psi, psi')` at the left edge of a region to the
//! same pair at its right edge. For a layer it is built from the two
//! solutions `u`, `v` with `u(x0) = 1, u'(x0) = 0` and `v(x0) = 0, v'(x0) = 1`:
//!
//! ```text
//! [[u(x1),  v(x1) ],
//!  [u'(x1), v'(x1)]]
//! ```
//!
//! Constant layers use trigonometric or hyperbolic functions, linear layers
//! use Airy functions of `z = (V(x) - E) / sigma^2` with `sigma = eta^(1/3)`.

use std::f64::consts::PI;
use std::ops::Mul;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::airy::airy_eval_scaled;
use crate::potential::ConcreteLayer;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransferError {
    #[error("degenerate slope: |V1 - V0| = {delta_v:e} is below {threshold:e}")]
    DegenerateSlope { delta_v: f64, threshold: f64 },
    #[error("layer width must be positive and finite, got {0}")]
    BadWidth(f64),
    #[error("non-finite potential or energy")]
    NonFinite,
    #[error("structure has no layers")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub l11: f64,
    pub l12: f64,
    pub l21: f64,
    pub l22: f64,
}

impl TransferMatrix {
    pub const IDENTITY: TransferMatrix = TransferMatrix {
        l11: 1.0,
        l12: 0.0,
        l21: 0.0,
        l22: 1.0,
    };

    pub fn new(l11: f64, l12: f64, l21: f64, l22: f64) -> Self {
        TransferMatrix { l11, l12, l21, l22 }
    }

    pub fn det(&self) -> f64 {
        self.l11 * self.l22 - self.l12 * self.l21
    }

    /// Determinant deviation relative to the size of the two products.
    pub fn det_error(&self) -> f64 {
        let scale = (self.l11 * self.l22)
            .abs()
            .max((self.l12 * self.l21).abs())
            .max(1.0);
        (self.det() - 1.0).abs() / scale
    }

    pub fn to_array(&self) -> [[f64; 2]; 2] {
        [[self.l11, self.l12], [self.l21, self.l22]]
    }

    pub fn elements(&self) -> [f64; 4] {
        [self.l11, self.l12, self.l21, self.l22]
    }

    pub fn is_finite(&self) -> bool {
        self.elements().iter().all(|x| x.is_finite())
    }

    /// Largest element-wise absolute difference.
    pub fn max_abs_diff(&self, other: &TransferMatrix) -> f64 {
        self.elements()
            .iter()
            .zip(other.elements())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, r: TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            l11: self.l11 * r.l11 + self.l12 * r.l21,
            l12: self.l11 * r.l12 + self.l12 * r.l22,
            l21: self.l21 * r.l11 + self.l22 * r.l21,
            l22: self.l21 * r.l12 + self.l22 * r.l22,
        }
    }
}

/// Airy-variable description of a linear layer.
///
/// `z(x) = sigma (x - s)` with `x` measured from the layer's left edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AiryLayerParams {
    pub sigma: f64,
    pub s: f64,
    pub z_left: f64,
    pub z_right: f64,
    pub k2_left: f64,
    pub k2_right: f64,
}

/// `|V1 - V0|` below which a layer counts as flat.
pub fn degeneracy_threshold(v_left_edge: f64, energy: f64) -> f64 {
    1e-9 * 1f64.max(v_left_edge.abs()).max(energy.abs())
}

fn check_layer(layer: &ConcreteLayer, energy: f64) -> Result<(), TransferError> {
    if !(layer.width > 0.0) || !layer.width.is_finite() {
        return Err(TransferError::BadWidth(layer.width));
    }
    if !(layer.v_left_edge.is_finite() && layer.v_right_edge.is_finite() && energy.is_finite()) {
        return Err(TransferError::NonFinite);
    }
    Ok(())
}

fn check_slope(layer: &ConcreteLayer, energy: f64) -> Result<(), TransferError> {
    let delta_v = layer.v_right_edge - layer.v_left_edge;
    let threshold = degeneracy_threshold(layer.v_left_edge, energy);
    if delta_v.abs() < threshold {
        return Err(TransferError::DegenerateSlope { delta_v, threshold });
    }
    Ok(())
}

pub fn layer_matrix_constant(v: f64, width: f64, energy: f64) -> TransferMatrix {
    let k2 = energy - v;
    if k2 > 0.0 {
        let k = k2.sqrt();
        let (s, c) = (k * width).sin_cos();
        TransferMatrix::new(c, s / k, -k * s, c)
    } else if k2 < 0.0 {
        let kappa = (-k2).sqrt();
        let x = kappa * width;
        let (sh, ch) = (x.sinh(), x.cosh());
        TransferMatrix::new(ch, sh / kappa, kappa * sh, ch)
    } else {
        TransferMatrix::new(1.0, width, 0.0, 1.0)
    }
}

pub fn airy_layer_params(
    layer: &ConcreteLayer,
    energy: f64,
) -> Result<AiryLayerParams, TransferError> {
    check_layer(layer, energy)?;
    check_slope(layer, energy)?;
    let eta = (layer.v_right_edge - layer.v_left_edge) / layer.width;
    let sigma = eta.cbrt();
    let sigma2 = sigma * sigma;
    let k2_left = energy - layer.v_left_edge;
    let k2_right = energy - layer.v_right_edge;
    let z_left = -k2_left / sigma2;
    let z_right = -k2_right / sigma2;
    Ok(AiryLayerParams {
        sigma,
        s: -z_left / sigma,
        z_left,
        z_right,
        k2_left,
        k2_right,
    })
}

/// `e(z1) - e(z0)` with `e(z) = 2/3 z^{3/2}` for `z > 0` and zero otherwise.
///
/// When both arguments are positive the difference is formed from
/// `z1 - z0 = sigma l` directly, which avoids cancelling two large numbers.
fn exponent_difference(z0: f64, z1: f64, dz: f64) -> f64 {
    if z0 > 0.0 && z1 > 0.0 {
        let (r0, r1) = (z0.sqrt(), z1.sqrt());
        2.0 / 3.0 * dz * (z1 + r0 * r1 + z0) / (r0 + r1)
    } else {
        let e = |z: f64| {
            if z > 0.0 {
                2.0 / 3.0 * z * z.sqrt()
            } else {
                0.0
            }
        };
        e(z1) - e(z0)
    }
}

pub fn layer_matrix_linear(
    layer: &ConcreteLayer,
    energy: f64,
) -> Result<TransferMatrix, TransferError> {
    let p = airy_layer_params(layer, energy)?;
    let sigma = p.sigma;
    let a0 = airy_eval_scaled(p.z_left);
    let a1 = airy_eval_scaled(p.z_right);
    let delta = exponent_difference(p.z_left, p.z_right, sigma * layer.width);
    let down = (-delta).exp();
    let up = delta.exp();

    // every element is A e^{-delta} - B e^{+delta}; a zero coefficient must
    // not meet an infinite exponential
    let combine = |a: f64, b: f64| {
        let first = if a == 0.0 { 0.0 } else { a * down };
        let second = if b == 0.0 { 0.0 } else { b * up };
        first - second
    };

    let l11 = PI
        * combine(
            a1.ai_scaled * a0.bi_prime_scaled,
            a0.ai_prime_scaled * a1.bi_scaled,
        );
    let l12 = PI / sigma * combine(-a1.ai_scaled * a0.bi_scaled, -a0.ai_scaled * a1.bi_scaled);
    let l21 = sigma
        * PI
        * combine(
            a1.ai_prime_scaled * a0.bi_prime_scaled,
            a0.ai_prime_scaled * a1.bi_prime_scaled,
        );
    let l22 = PI
        * combine(
            -a1.ai_prime_scaled * a0.bi_scaled,
            -a0.ai_scaled * a1.bi_prime_scaled,
        );
    Ok(TransferMatrix::new(l11, l12, l21, l22))
}

/// Transfer matrix of one layer, falling back to the flat formula (at the
/// mean potential) when the slope is below the degeneracy threshold.
pub fn layer_matrix(layer: &ConcreteLayer, energy: f64) -> Result<TransferMatrix, TransferError> {
    check_layer(layer, energy)?;
    match layer_matrix_linear(layer, energy) {
        Err(TransferError::DegenerateSlope { .. }) => Ok(layer_matrix_constant(
            0.5 * (layer.v_left_edge + layer.v_right_edge),
            layer.width,
            energy,
        )),
        other => other,
    }
}

/// `Lambda_N ... Lambda_1` for layers listed left to right.
pub fn structure_matrix(
    layers: &[ConcreteLayer],
    energy: f64,
) -> Result<TransferMatrix, TransferError> {
    if layers.is_empty() {
        return Err(TransferError::Empty);
    }
    layers
        .iter()
        .try_fold(TransferMatrix::IDENTITY, |acc, layer| {
            Ok(layer_matrix(layer, energy)? * acc)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &TransferMatrix, b: &TransferMatrix, tol: f64) -> bool {
        a.max_abs_diff(b) < tol
    }

    #[test]
    fn constant_half_period() {
        let m = layer_matrix_constant(0.0, PI, 1.0);
        assert!(close(&m, &TransferMatrix::new(-1.0, 0.0, 0.0, -1.0), 1e-15));
    }

    #[test]
    fn constant_zero_width_is_identity() {
        let m = layer_matrix_constant(0.0, 0.0, 1.0);
        assert_eq!(m, TransferMatrix::IDENTITY);
    }

    #[test]
    fn constant_barrier_branch() {
        let m = layer_matrix_constant(1.0, 1.0, 0.5);
        assert!((m.l11 - 1.260592).abs() < 1e-6);
        assert!((m.l21 - 0.542721).abs() < 1e-6);
        assert!((m.det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_at_band_edge() {
        let m = layer_matrix_constant(2.0, 0.7, 2.0);
        assert_eq!(m, TransferMatrix::new(1.0, 0.7, 0.0, 1.0));
    }

    #[test]
    fn airy_params_basic() {
        let layer = ConcreteLayer::new(0.0, 1.0, 1.0);
        let p = airy_layer_params(&layer, 0.0).unwrap();
        assert!((p.sigma - 1.0).abs() < 1e-15);
        assert_eq!(p.z_left, 0.0);
        assert!((p.z_right - 1.0).abs() < 1e-15);

        let down = ConcreteLayer::new(1.0, -7.0, 1.0);
        let p = airy_layer_params(&down, 0.5).unwrap();
        assert!((p.sigma + 2.0).abs() < 1e-15);
        // z(x) = sigma (x - s) at both edges
        assert!((p.sigma * (0.0 - p.s) - p.z_left).abs() < 1e-14);
        assert!((p.sigma * (down.width - p.s) - p.z_right).abs() < 1e-14);
    }

    #[test]
    fn airy_params_scaled_bias_form() {
        // V1 - V0 = b over l = d: z0 = -(d/b)^{2/3} k0^2
        let (a, b, d, e) = (1.3, -0.5, 2.0, 0.26);
        let layer = ConcreteLayer::new(a, a + b, d);
        let p = airy_layer_params(&layer, e).unwrap();
        let expected = -(d / b).abs().powf(2.0 / 3.0) * (e - a);
        assert!((p.z_left - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn degenerate_slope_is_reported() {
        let layer = ConcreteLayer::new(0.5, 0.5 + 1e-12, 1.0);
        assert!(matches!(
            layer_matrix_linear(&layer, 1.0),
            Err(TransferError::DegenerateSlope { .. })
        ));
        let m = layer_matrix(&layer, 1.0).unwrap();
        assert!(close(&m, &layer_matrix_constant(0.5, 1.0, 1.0), 1e-10));
    }

    #[test]
    fn weak_slope_matches_flat_layer() {
        let layer = ConcreteLayer::new(0.5, 0.5 + 1e-8, 1.0);
        let m = layer_matrix_linear(&layer, 1.0).unwrap();
        assert!(
            close(&m, &layer_matrix_constant(0.5, 1.0, 1.0), 1e-6),
            "{m:?}"
        );
    }

    #[test]
    fn continuity_across_threshold() {
        for &(v, e, l) in &[(0.5, 1.0, 1.0), (2.0, 1.0, 0.7), (-1.0, 0.3, 2.0)] {
            let t = degeneracy_threshold(v, e) * 1.0001;
            let flat = layer_matrix_constant(v, l, e);
            for sign in [1.0, -1.0] {
                let m = layer_matrix(&ConcreteLayer::new(v, v + sign * t, l), e).unwrap();
                assert!(close(&m, &flat, 1e-6), "v = {v}, sign = {sign}");
            }
        }
    }

    #[test]
    fn tall_barrier_does_not_overflow() {
        // z reaches several hundred at both edges
        let layer = ConcreteLayer::new(400.0, 300.0, 0.5);
        let m = layer_matrix_linear(&layer, 0.1).unwrap();
        assert!(m.is_finite());
        assert!(m.det_error() < 1e-9, "{}", m.det_error());
    }

    #[test]
    fn free_layers_compose() {
        let l1 = ConcreteLayer::constant(0.0, 0.8);
        let l2 = ConcreteLayer::constant(0.0, 1.7);
        let joined = structure_matrix(&[l1, l2], 2.0).unwrap();
        assert!(close(&joined, &layer_matrix_constant(0.0, 2.5, 2.0), 1e-14));
        let single = structure_matrix(&[l1], 2.0).unwrap();
        assert_eq!(single, layer_matrix(&l1, 2.0).unwrap());
        assert!(matches!(
            structure_matrix(&[], 1.0),
            Err(TransferError::Empty)
        ));
    }

    fn layer_strategy() -> impl Strategy<Value = ConcreteLayer> {
        (-5.0..5.0f64, -5.0..5.0f64, 0.05..4.0f64, prop::bool::ANY).prop_map(|(v0, v1, l, flat)| {
            if flat {
                ConcreteLayer::constant(v0, l)
            } else {
                ConcreteLayer::new(v0, v1, l)
            }
        })
    }

    proptest! {
        #[test]
        fn unit_determinant(layer in layer_strategy(), e in -3.0..6.0f64) {
            let m = layer_matrix(&layer, e).unwrap();
            prop_assert!(m.det_error() < 1e-9, "{:?} det err {}", m, m.det_error());
        }

        #[test]
        fn product_is_associative(
            a in prop::collection::vec(layer_strategy(), 1..5),
            b in prop::collection::vec(layer_strategy(), 1..5),
            e in 0.1..4.0f64,
        ) {
            let all: Vec<_> = a.iter().chain(&b).copied().collect();
            let whole = structure_matrix(&all, e).unwrap();
            let split = structure_matrix(&b, e).unwrap() * structure_matrix(&a, e).unwrap();
            let scale = whole.elements().iter().fold(1.0f64, |m, x| m.max(x.abs()));
            prop_assert!(whole.max_abs_diff(&split) < 1e-10 * scale);
        }
    }
}
