//! Device configuration files.

use std::path::Path;

use biasedpoint::limits::Transistor;
use biasedpoint::potential::{ev_to_invnm2, invnm2_to_ev, LayerSpec, StructureSpec};
use biasedpoint::resonance::BarrierWell;
use biasedpoint::sweep::{Grid, SweepRequest, TunedParameter, DEFAULT_FLOOR, DEFAULT_POINTS};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    #[serde(rename = "eV")]
    Ev,
    #[serde(rename = "invnm2")]
    InvNm2,
}

impl Units {
    pub fn to_internal(self, x: f64) -> f64 {
        match self {
            Units::Ev => ev_to_invnm2(x),
            Units::InvNm2 => x,
        }
    }

    pub fn to_config(self, x: f64) -> f64 {
        match self {
            Units::Ev => invnm2_to_ev(x),
            Units::InvNm2 => x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Fig3BarrierWell,
    Fig5Transistor,
    Custom,
}

/// Which squeezing powers a template uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Barriers at `(1, 1)`.
    #[default]
    Delta,
    /// Barriers at `(2, 1)`.
    DeltaPrime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Leads {
    #[serde(default)]
    pub v_left: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_right: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Defaults to the first layer's negated bias for the templates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuned: Option<TunedParameter>,
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn default_points() -> usize {
    DEFAULT_POINTS
}

fn default_epsilons() -> Vec<f64> {
    vec![0.5, 0.25, 0.1]
}

fn default_floor() -> f64 {
    DEFAULT_FLOOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub units: Units,
    #[serde(default)]
    pub layers: Vec<LayerConfig>,
    #[serde(default)]
    pub leads: Leads,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    pub energy: f64,
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl DeviceConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let cfg =
            Self::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: DeviceConfig =
            serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario.unwrap_or(Scenario::Custom)
    }

    /// Powers per layer fixed by the template, if any.
    fn template_powers(&self) -> Option<Vec<(f64, f64)>> {
        let barrier = match self.model.unwrap_or_default() {
            Model::Delta => (1.0, 1.0),
            Model::DeltaPrime => (2.0, 1.0),
        };
        match self.scenario() {
            Scenario::Fig3BarrierWell => Some(vec![barrier, (2.0, 1.0)]),
            Scenario::Fig5Transistor => Some(vec![barrier, (2.0, 0.0), barrier]),
            Scenario::Custom => None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let template = self.template_powers();
        if let Some(powers) = &template {
            if self.layers.len() != powers.len() {
                return err(format!(
                    "scenario {:?} needs {} layers, found {}",
                    self.scenario(),
                    powers.len(),
                    self.layers.len()
                ));
            }
        }
        if self.model.is_some() && template.is_none() {
            return err("field `model` applies only to the fig3/fig5 scenarios");
        }
        if self.scenario() == Scenario::Fig5Transistor
            && (self.layers[1].a != 0.0 || self.layers[1].b != 0.0)
        {
            return err("layers[1]: the transistor gap needs a = 0 and b = 0");
        }
        for (i, l) in self.layers.iter().enumerate() {
            match (&template, l.mu, l.nu) {
                (None, None, _) | (None, _, None) => {
                    return err(format!(
                        "layers[{i}]: `mu` and `nu` are required for custom devices"
                    ))
                }
                (Some(p), mu, nu)
                    if mu.is_some_and(|m| m != p[i].0) || nu.is_some_and(|n| n != p[i].1) =>
                {
                    return err(format!(
                        "layers[{i}]: powers conflict with the template ({}, {})",
                        p[i].0, p[i].1
                    ));
                }
                _ => {}
            }
        }
        self.structure()
            .validate()
            .map_err(|e| ConfigError(format!("layers: {e}")))?;
        if !self.energy.is_finite() {
            return err("energy must be finite");
        }
        if let Some(s) = &self.sweep {
            if s.tuned.is_none() && template.is_none() {
                return err("sweep.tuned is required for custom devices");
            }
        }
        Ok(())
    }

    /// Structure in internal units with template powers filled in.
    pub fn structure(&self) -> StructureSpec {
        let u = self.units;
        let template = self.template_powers();
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let (tm, tn) = template
                    .as_ref()
                    .and_then(|p| p.get(i).copied())
                    .unwrap_or((0.0, 0.0));
                LayerSpec {
                    a: u.to_internal(l.a),
                    b: u.to_internal(l.b),
                    d: l.d,
                    mu: l.mu.unwrap_or(tm),
                    nu: l.nu.unwrap_or(tn),
                }
            })
            .collect();
        StructureSpec {
            layers,
            v_left: u.to_internal(self.leads.v_left),
            v_right_override: self.leads.v_right.map(|v| u.to_internal(v)),
        }
    }

    pub fn energy(&self) -> f64 {
        self.units.to_internal(self.energy)
    }

    pub fn tuned(&self) -> TunedParameter {
        self.sweep
            .as_ref()
            .and_then(|s| s.tuned)
            .unwrap_or(TunedParameter::NegatedBias { layer: 0 })
    }

    pub fn sweep_request(&self, epsilons: Option<Vec<f64>>) -> Result<SweepRequest, ConfigError> {
        let Some(s) = &self.sweep else {
            return err("config has no `sweep` block");
        };
        Ok(SweepRequest {
            structure: self.structure(),
            tuned: self.tuned(),
            grid: Grid {
                lo: self.units.to_internal(s.lo),
                hi: self.units.to_internal(s.hi),
                points: s.points,
            },
            epsilons: epsilons.unwrap_or_else(|| s.epsilons.clone()),
            energy: self.energy(),
            floor: s.floor,
        })
    }

    pub fn barrier_well(&self) -> Option<BarrierWell> {
        if self.scenario() != Scenario::Fig3BarrierWell {
            return None;
        }
        let s = self.structure();
        let (l1, l2) = (&s.layers[0], &s.layers[1]);
        Some(BarrierWell {
            a1: l1.a,
            a2: l2.a,
            b2: l2.b,
            d1: l1.d,
            d2: l2.d,
        })
    }

    pub fn transistor(&self) -> Option<Transistor> {
        if self.scenario() != Scenario::Fig5Transistor {
            return None;
        }
        let s = self.structure();
        Some(Transistor {
            a1: s.layers[0].a,
            a3: s.layers[2].a,
            d1: s.layers[0].d,
            d2: s.layers[1].d,
            d3: s.layers[2].d,
            v_cb: -s.layers[2].b,
        })
    }
}
