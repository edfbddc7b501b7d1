//! Squeezing sweeps: exact transmission over a grid of one bias, for a
//! schedule of squeezing parameters, with peak detection and comparison
//! against the analytic resonance sets.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::limits::Transistor;
use crate::potential::{invnm2_to_ev, realize, ModelError, StructureSpec};
use crate::resonance::{
    resonances_delta_barrier_well, resonances_transistor_delta, BarrierWell, EquationId,
    ResonanceSet,
};
use crate::scattering::scatter;
use crate::transfer::structure_matrix;

pub const DEFAULT_FLOOR: f64 = 0.01;
pub const DEFAULT_POINTS: usize = 2001;
/// Squeezing parameters below this are flagged.
pub const SMALL_EPSILON: f64 = 0.02;
/// Relative position tolerance of peak refinement.
pub const PEAK_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("grid needs at least 2 points and lo < hi, got {points} points on [{lo}, {hi}]")]
    BadGrid { lo: f64, hi: f64, points: usize },
    #[error("epsilons must be positive and strictly descending")]
    BadEpsilons,
    #[error("tuned layer {0} does not exist")]
    BadLayer(usize),
    #[error("floor must lie in (0, 1), got {0}")]
    BadFloor(f64),
    #[error("energy must be finite, got {0}")]
    BadEnergy(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The swept parameter, as a bias of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TunedParameter {
    /// The tuned value is the layer's `b`.
    Bias { layer: usize },
    /// The tuned value is `-b` (e.g. `-b1`, or `V_EB` for an emitter barrier).
    NegatedBias { layer: usize },
}

impl TunedParameter {
    pub fn layer(self) -> usize {
        match self {
            TunedParameter::Bias { layer } | TunedParameter::NegatedBias { layer } => layer,
        }
    }

    pub fn to_bias(self, value: f64) -> f64 {
        match self {
            TunedParameter::Bias { .. } => value,
            TunedParameter::NegatedBias { .. } => -value,
        }
    }

    pub fn from_bias(self, b: f64) -> f64 {
        self.to_bias(b)
    }

    /// `structure` with the tuned bias set to `value`.
    pub fn apply(self, structure: &StructureSpec, value: f64) -> StructureSpec {
        let mut s = structure.clone();
        s.layers[self.layer()].b = self.to_bias(value);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.hi
                } else {
                    self.lo + step * i as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRequest {
    pub structure: StructureSpec,
    pub tuned: TunedParameter,
    pub grid: Grid,
    pub epsilons: Vec<f64>,
    pub energy: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn default_floor() -> f64 {
    DEFAULT_FLOOR
}

impl SweepRequest {
    pub fn validate(&self) -> Result<(), SweepError> {
        let g = self.grid;
        if g.points < 2 || !(g.lo < g.hi) || !g.lo.is_finite() || !g.hi.is_finite() {
            return Err(SweepError::BadGrid {
                lo: g.lo,
                hi: g.hi,
                points: g.points,
            });
        }
        if self.epsilons.is_empty()
            || self.epsilons.iter().any(|e| !(*e > 0.0) || !e.is_finite())
            || self.epsilons.windows(2).any(|w| !(w[0] > w[1]))
        {
            return Err(SweepError::BadEpsilons);
        }
        if self.tuned.layer() >= self.structure.layers.len() {
            return Err(SweepError::BadLayer(self.tuned.layer()));
        }
        if !(self.floor > 0.0 && self.floor < 1.0) {
            return Err(SweepError::BadFloor(self.floor));
        }
        if !self.energy.is_finite() {
            return Err(SweepError::BadEnergy(self.energy));
        }
        self.structure.validate()?;
        Ok(())
    }

    /// Exact `(T, R)` at one squeezing parameter and tuned value; `None`
    /// where a lead is evanescent or the evaluation fails.
    pub fn evaluate(&self, epsilon: f64, value: f64) -> Option<(f64, f64)> {
        let spec = self.tuned.apply(&self.structure, value);
        let layers = realize(&spec, epsilon).ok()?;
        let m = if layers.is_empty() {
            crate::transfer::TransferMatrix::IDENTITY
        } else {
            structure_matrix(&layers, self.energy).ok()?
        };
        let r = scatter(&m, spec.v_left, spec.v_right(), self.energy).ok()?;
        Some((r.trans_prob, r.refl_prob))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub value: f64,
    /// `None` marks a gap (evanescent lead).
    pub trans: Option<f64>,
    pub refl: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub epsilon: f64,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRoot {
    pub n: u32,
    /// In tuned coordinates (nm⁻²).
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSet {
    pub equation_id: EquationId,
    pub roots: Vec<ReferenceRoot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub n: u32,
    pub root: f64,
    pub epsilon: f64,
    /// Nearest detected peak, if any.
    pub peak: Option<f64>,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub curves: Vec<Curve>,
    /// Per epsilon, ascending.
    pub peaks: Vec<Vec<f64>>,
    pub reference: Option<ReferenceSet>,
    pub convergence: Vec<ConvergenceEntry>,
    pub flags: Vec<String>,
}

impl SweepResult {
    /// Convergence errors for one root, in epsilon order.
    pub fn errors_for_root(&self, n: u32) -> Vec<Option<f64>> {
        self.convergence
            .iter()
            .filter(|c| c.n == n)
            .map(|c| c.error)
            .collect()
    }

    /// Largest peak error at each epsilon; `None` if a root has no peak.
    pub fn max_error_per_epsilon(&self) -> Vec<Option<f64>> {
        self.curves
            .iter()
            .map(|c| {
                self.convergence
                    .iter()
                    .filter(|e| e.epsilon == c.epsilon)
                    .try_fold(0.0f64, |acc, e| e.error.map(|x| acc.max(x)))
            })
            .collect()
    }
}

/// Analytic resonance set when the device matches the barrier-well or the
/// transistor template and the tuned bias is the first layer's.
pub fn reference_for(req: &SweepRequest) -> Option<ReferenceSet> {
    let layers = &req.structure.layers;
    if req.tuned.layer() != 0 {
        return None;
    }
    let (x0, x1) = (req.grid.lo, req.grid.hi);
    let b_lo = req.tuned.to_bias(x0).min(req.tuned.to_bias(x1));
    let b_hi = req.tuned.to_bias(x0).max(req.tuned.to_bias(x1));
    let powers: Vec<(f64, f64)> = layers.iter().map(|l| (l.mu, l.nu)).collect();

    let set: ResonanceSet = if powers == [(1.0, 1.0), (2.0, 1.0)] {
        let p = BarrierWell {
            a1: layers[0].a,
            a2: layers[1].a,
            b2: layers[1].b,
            d1: layers[0].d,
            d2: layers[1].d,
        };
        resonances_delta_barrier_well(&p, (b_lo, b_hi), Some(req.energy))
    } else if powers == [(1.0, 1.0), (2.0, 0.0), (1.0, 1.0)]
        && layers[1].a == 0.0
        && layers[1].b == 0.0
    {
        let t = Transistor {
            a1: layers[0].a,
            a3: layers[2].a,
            d1: layers[0].d,
            d2: layers[1].d,
            d3: layers[2].d,
            v_cb: -layers[2].b,
        };
        // V_EB = -b1
        let (v_lo, v_hi) = (-b_hi, -b_lo);
        let mut s = resonances_transistor_delta(&t, v_hi, Some(req.energy));
        s.roots.retain(|r| r.value >= v_lo);
        for r in &mut s.roots {
            r.value = -r.value;
        }
        s
    } else {
        return None;
    };

    let mut roots: Vec<ReferenceRoot> = set
        .roots
        .iter()
        .map(|r| ReferenceRoot {
            n: r.n,
            value: req.tuned.from_bias(r.value),
        })
        .collect();
    roots.sort_by(|a, b| a.value.total_cmp(&b.value));
    Some(ReferenceSet {
        equation_id: set.equation_id,
        roots,
    })
}

/// Strict interior local maxima above `floor`, refined on `evaluator` by
/// golden-section search between the neighbouring samples.
pub fn detect_peaks<F: Fn(f64) -> Option<f64>>(
    curve: &[CurvePoint],
    floor: f64,
    evaluator: F,
) -> Vec<f64> {
    let mut peaks = Vec::new();
    for w in curve.windows(3) {
        let (Some(l), Some(m), Some(r)) = (w[0].trans, w[1].trans, w[2].trans) else {
            continue;
        };
        if m > floor && m > l && m > r {
            let f = |x: f64| evaluator(x).unwrap_or(f64::NEG_INFINITY);
            peaks.push(golden_max(&f, w[0].value, w[1].value, w[2].value, m));
        }
    }
    peaks.sort_by(f64::total_cmp);
    peaks
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mid: f64, mut b: f64, f_mid: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let floor = 1e-15 * (b - a).abs();
    let mut best = (mid, f_mid);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= PEAK_RTOL * (0.5 * (a + b)).abs() + floor {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        for (x, fx) in [(c, fc), (d, fd)] {
            if fx > best.1 {
                best = (x, fx);
            }
        }
    }
    let x = 0.5 * (a + b);
    if f(x) >= best.1 {
        x
    } else {
        best.0
    }
}

pub fn run_sweep(req: &SweepRequest) -> Result<SweepResult, SweepError> {
    req.validate()?;
    let xs = req.grid.values();
    let mut flags = Vec::new();

    let curves: Vec<Curve> = req
        .epsilons
        .par_iter()
        .map(|&eps| Curve {
            epsilon: eps,
            points: xs
                .par_iter()
                .map(|&x| {
                    let tr = req.evaluate(eps, x);
                    CurvePoint {
                        value: x,
                        trans: tr.map(|t| t.0),
                        refl: tr.map(|t| t.1),
                    }
                })
                .collect(),
        })
        .collect();

    for c in &curves {
        if c.epsilon < SMALL_EPSILON {
            flags.push(format!(
                "epsilon {} is below {SMALL_EPSILON}: Airy arguments are large and only the scaled path is valid",
                c.epsilon
            ));
        }
        let gaps = c.points.iter().filter(|p| p.trans.is_none()).count();
        if gaps > 0 {
            flags.push(format!(
                "epsilon {}: {gaps} grid points with an evanescent lead left as gaps",
                c.epsilon
            ));
        }
    }

    let peaks: Vec<Vec<f64>> = curves
        .par_iter()
        .map(|c| {
            detect_peaks(&c.points, req.floor, |x| {
                req.evaluate(c.epsilon, x).map(|t| t.0)
            })
        })
        .collect();

    let reference = reference_for(req);
    let mut convergence = Vec::new();
    if let Some(set) = &reference {
        for root in &set.roots {
            for (c, ps) in curves.iter().zip(&peaks) {
                let peak = ps
                    .iter()
                    .copied()
                    .min_by(|a, b| (a - root.value).abs().total_cmp(&(b - root.value).abs()));
                convergence.push(ConvergenceEntry {
                    n: root.n,
                    root: root.value,
                    epsilon: c.epsilon,
                    peak,
                    error: peak.map(|p| (p - root.value).abs()),
                });
            }
        }
    }

    Ok(SweepResult {
        curves,
        peaks,
        reference,
        convergence,
        flags,
    })
}

/// CSV with columns `epsilon, tuned_value_eV, tuned_value_invnm2, T, R`;
/// gaps leave `T` and `R` empty.
pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epsilon", "tuned_value_eV", "tuned_value_invnm2", "T", "R"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for c in &result.curves {
        for p in &c.points {
            w.write_record([
                c.epsilon.to_string(),
                invnm2_to_ev(p.value).to_string(),
                p.value.to_string(),
                opt(p.trans),
                opt(p.refl),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    epsilons: Vec<f64>,
    peaks_invnm2: &'a [Vec<f64>],
    peaks_ev: Vec<Vec<f64>>,
    reference: &'a Option<ReferenceSet>,
    convergence: &'a [ConvergenceEntry],
    flags: &'a [String],
}

/// JSON document with the peaks and convergence blocks.
pub fn write_json<W: Write>(result: &SweepResult, out: W) -> serde_json::Result<()> {
    let summary = Summary {
        epsilons: result.curves.iter().map(|c| c.epsilon).collect(),
        peaks_invnm2: &result.peaks,
        peaks_ev: result
            .peaks
            .iter()
            .map(|ps| ps.iter().map(|&p| invnm2_to_ev(p)).collect())
            .collect(),
        reference: &result.reference,
        convergence: &result.convergence,
        flags: &result.flags,
    };
    serde_json::to_writer_pretty(out, &summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{ev_to_invnm2, LayerSpec};

    fn fig4_request(epsilons: Vec<f64>) -> SweepRequest {
        SweepRequest {
            structure: StructureSpec::new(vec![
                LayerSpec {
                    a: ev_to_invnm2(0.5),
                    b: 0.0,
                    d: 2.0,
                    mu: 1.0,
                    nu: 1.0,
                },
                LayerSpec {
                    a: ev_to_invnm2(-0.1),
                    b: 0.0,
                    d: 10.0,
                    mu: 2.0,
                    nu: 1.0,
                },
            ]),
            tuned: TunedParameter::NegatedBias { layer: 0 },
            grid: Grid {
                lo: 0.0,
                hi: ev_to_invnm2(0.6),
                points: 401,
            },
            epsilons,
            energy: ev_to_invnm2(0.1),
            floor: DEFAULT_FLOOR,
        }
    }

    fn pts(values: &[(f64, f64)]) -> Vec<CurvePoint> {
        values
            .iter()
            .map(|&(x, t)| CurvePoint {
                value: x,
                trans: Some(t),
                refl: Some(1.0 - t),
            })
            .collect()
    }

    #[test]
    fn monotone_curve_has_no_peaks() {
        let c = pts(&[(0.0, 0.1), (1.0, 0.2), (2.0, 0.3), (3.0, 0.4)]);
        assert!(detect_peaks(&c, 0.01, |x| Some(0.1 + 0.1 * x)).is_empty());
    }

    #[test]
    fn triangular_bump_refined_within_a_step() {
        let tri = |x: f64| Some((1.0 - (x - 2.3).abs()).max(0.0));
        let c: Vec<CurvePoint> = (0..6)
            .map(|i| {
                let x = i as f64;
                CurvePoint {
                    value: x,
                    trans: tri(x),
                    refl: None,
                }
            })
            .collect();
        let peaks = detect_peaks(&c, 0.01, tri);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0] - 2.0).abs() <= 1.0);
        assert!((peaks[0] - 2.3).abs() < 1e-5);
    }

    #[test]
    fn peaks_below_floor_ignored() {
        let c = pts(&[(0.0, 0.001), (1.0, 0.005), (2.0, 0.001)]);
        assert!(detect_peaks(&c, 0.01, |_| Some(0.0)).is_empty());
    }

    #[test]
    fn zero_potential_gives_unit_transmission_and_no_peaks() {
        // grid collapsed onto b = 0
        let req = SweepRequest {
            structure: StructureSpec::new(vec![LayerSpec::fixed(0.0, 0.0, 3.0)]),
            tuned: TunedParameter::Bias { layer: 0 },
            grid: Grid {
                lo: 0.0,
                hi: 1e-300,
                points: 5,
            },
            epsilons: vec![1.0, 0.5, 0.1],
            energy: 0.5,
            floor: DEFAULT_FLOOR,
        };
        let res = run_sweep(&req).unwrap();
        for c in &res.curves {
            for p in &c.points {
                assert!((p.trans.unwrap() - 1.0).abs() < 1e-12);
            }
        }
        assert!(res.peaks.iter().all(|p| p.is_empty()));
        assert!(res.reference.is_none());
    }

    #[test]
    fn validation() {
        let mut req = fig4_request(vec![0.5, 0.5]);
        assert_eq!(req.validate(), Err(SweepError::BadEpsilons));
        req.epsilons = vec![0.1, 0.5];
        assert_eq!(req.validate(), Err(SweepError::BadEpsilons));
        req.epsilons = vec![0.5, -0.1];
        assert_eq!(req.validate(), Err(SweepError::BadEpsilons));
        req.epsilons = vec![0.5];
        req.tuned = TunedParameter::Bias { layer: 7 };
        assert_eq!(req.validate(), Err(SweepError::BadLayer(7)));
        req.tuned = TunedParameter::Bias { layer: 0 };
        req.floor = 1.5;
        assert_eq!(req.validate(), Err(SweepError::BadFloor(1.5)));
    }

    #[test]
    fn fig4_reference_roots() {
        let req = fig4_request(vec![0.5]);
        let set = reference_for(&req).unwrap();
        assert_eq!(set.equation_id, EquationId::EQ73_DELTA_BARRIER_WELL);
        let ev: Vec<f64> = set.roots.iter().map(|r| invnm2_to_ev(r.value)).collect();
        assert_eq!(
            set.roots.iter().map(|r| r.n).collect::<Vec<_>>(),
            vec![2, 3, 4]
        );
        for (g, w) in ev.iter().zip([0.050414, 0.238433, 0.501658]) {
            assert!((g - w).abs() < 1e-6);
        }
    }

    #[test]
    fn curve_sanity_and_determinism() {
        let req = fig4_request(vec![0.5, 0.25]);
        let a = run_sweep(&req).unwrap();
        let b = run_sweep(&req).unwrap();
        assert_eq!(
            serde_json::to_vec(&a).unwrap(),
            serde_json::to_vec(&b).unwrap()
        );
        for c in &a.curves {
            for p in &c.points {
                let (t, r) = (p.trans.unwrap(), p.refl.unwrap());
                assert!((0.0..=1.0).contains(&t));
                assert!((t + r - 1.0).abs() < 1e-9);
            }
        }
        for ps in &a.peaks {
            assert!(ps.windows(2).all(|w| w[0] <= w[1]));
        }
        assert!(a
            .convergence
            .iter()
            .all(|c| c.error.is_none_or(|e| e >= 0.0)));
    }

    #[test]
    fn csv_and_json_writers() {
        let req = SweepRequest {
            grid: Grid {
                lo: 0.0,
                hi: ev_to_invnm2(0.6),
                points: 5,
            },
            ..fig4_request(vec![1.0])
        };
        let res = run_sweep(&req).unwrap();
        let mut buf = Vec::new();
        write_csv(&res, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("epsilon,tuned_value_eV,tuned_value_invnm2,T,R")
        );
        let row: Vec<&str> = lines.nth(4).unwrap().split(',').collect();
        assert_eq!(row[0], "1");
        assert!((row[1].parse::<f64>().unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(text.lines().count(), 6);

        let mut buf = Vec::new();
        write_json(&res, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert!(v["convergence"].is_array());
        assert_eq!(v["reference"]["equation_id"], "EQ73_DELTA_BARRIER_WELL");
    }

    #[test]
    fn small_epsilon_flagged() {
        let req = SweepRequest {
            grid: Grid {
                lo: 0.1,
                hi: 0.2,
                points: 3,
            },
            ..fig4_request(vec![0.015])
        };
        let res = run_sweep(&req).unwrap();
        assert!(res.flags.iter().any(|f| f.contains("below")));
    }
}
