//! Reflection and transmission from a total transfer matrix.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transfer::TransferMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScatteringError {
    #[error("evanescent lead: energy {energy} does not exceed lead potential {lead}")]
    EvanescentLead { energy: f64, lead: f64 },
    #[error("non-finite transfer matrix")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringResult {
    pub r_left: Complex64,
    pub t_left: Complex64,
    pub r_right: Complex64,
    pub t_right: Complex64,
    pub refl_prob: f64,
    pub trans_prob: f64,
    pub p: f64,
    pub q: f64,
    pub d_denom: Complex64,
    pub k_left: f64,
    pub k_right: f64,
}

impl ScatteringResult {
    /// Transmission probability recomputed from the left-incidence amplitude.
    pub fn trans_prob_left(&self) -> f64 {
        self.k_right / self.k_left * self.t_left.norm_sqr()
    }

    pub fn trans_prob_right(&self) -> f64 {
        self.k_left / self.k_right * self.t_right.norm_sqr()
    }
}

pub fn scatter(
    matrix: &TransferMatrix,
    v_left: f64,
    v_right: f64,
    energy: f64,
) -> Result<ScatteringResult, ScatteringError> {
    for lead in [v_left, v_right] {
        if !(energy > lead) {
            return Err(ScatteringError::EvanescentLead { energy, lead });
        }
    }
    if !matrix.is_finite() {
        return Err(ScatteringError::NonFinite);
    }
    let k_left = (energy - v_left).sqrt();
    let k_right = (energy - v_right).sqrt();
    let ratio = k_left / k_right;
    let TransferMatrix { l11, l12, l21, l22 } = *matrix;

    let p = l11 - ratio * l22;
    let q = k_left * l12 + l21 / k_right;
    let d_denom = Complex64::new(l11 + ratio * l22, -(k_left * l12 - l21 / k_right));

    let i = Complex64::i();
    let r_left = -(p + i * q) / d_denom;
    let t_left = Complex64::from(2.0 * ratio) / d_denom;
    let r_right = (p - i * q) / d_denom;
    let t_right = Complex64::from(2.0) / d_denom;

    let four = 4.0 * ratio;
    let norm = four + p * p + q * q;
    Ok(ScatteringResult {
        r_left,
        t_left,
        r_right,
        t_right,
        refl_prob: (p * p + q * q) / norm,
        trans_prob: four / norm,
        p,
        q,
        d_denom,
        k_left,
        k_right,
    })
}

/// Flux-normalized scattering matrix `[[R_L, t'], [t, R_R]]`.
pub fn s_matrix(result: &ScatteringResult) -> [[Complex64; 2]; 2] {
    let ratio = result.k_left / result.k_right;
    [
        [result.r_left, result.t_right * ratio.sqrt()],
        [result.t_left / ratio.sqrt(), result.r_right],
    ]
}

/// `max |(S^dagger S - I)_{ij}|`.
pub fn unitarity_defect(s: &[[Complex64; 2]; 2]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = Complex64::new(0.0, 0.0);
            for row in s {
                acc += row[i].conj() * row[j];
            }
            if i == j {
                acc -= 1.0;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}
