//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use biasedpoint::potential::ConcreteLayer;
use biasedpoint::transfer::TransferMatrix;
use ode_solvers::{Dopri5, System, Vector4};

struct Schrodinger {
    v0: f64,
    slope: f64,
    energy: f64,
}

impl System<f64, Vector4<f64>> for Schrodinger {
    fn system(&self, x: f64, y: &Vector4<f64>, dy: &mut Vector4<f64>) {
        let w = self.v0 + self.slope * x - self.energy;
        dy[0] = y[1];
        dy[1] = w * y[0];
        dy[2] = y[3];
        dy[3] = w * y[2];
    }
}

/// Transfer matrix of one layer by adaptive integration of
/// `psi'' = (V(x) - E) psi` from the unit initial data.
pub fn ode_transfer_matrix(layer: &ConcreteLayer, energy: f64) -> TransferMatrix {
    let sys = Schrodinger {
        v0: layer.v_left_edge,
        slope: (layer.v_right_edge - layer.v_left_edge) / layer.width,
        energy,
    };
    let y0 = Vector4::new(1.0, 0.0, 0.0, 1.0);
    let mut stepper = Dopri5::new(sys, 0.0, layer.width, layer.width, y0, 1e-12, 1e-12);
    stepper.integrate().expect("integration failed");
    let y = stepper.y_out().last().unwrap();
    TransferMatrix::new(y[0], y[2], y[1], y[3])
}

/// Brackets of sign changes of `f` from a uniform scan of each piece
/// between consecutive `splits`.
pub fn sign_change_brackets<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    splits: &[f64],
    samples_per_piece: usize,
) -> Vec<(f64, f64)> {
    let mut edges = vec![lo];
    let mut inner: Vec<f64> = splits
        .iter()
        .copied()
        .filter(|&s| s > lo && s < hi)
        .collect();
    inner.sort_by(f64::total_cmp);
    edges.extend(inner);
    edges.push(hi);
    let mut out = Vec::new();
    for w in edges.windows(2) {
        let h = (w[1] - w[0]) / samples_per_piece as f64;
        let mut prev = (w[0], f(w[0]));
        for i in 1..=samples_per_piece {
            let x = if i == samples_per_piece {
                w[1]
            } else {
                w[0] + h * i as f64
            };
            let fx = f(x);
            if prev.1 != 0.0 && fx != 0.0 && (prev.1 < 0.0) != (fx < 0.0) {
                out.push((prev.0, x));
            }
            prev = (x, fx);
        }
    }
    out
}
