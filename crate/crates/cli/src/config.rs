//! Run configuration: one JSON document with a section per command.

use std::collections::BTreeMap;
use std::path::Path;

use cokdv_core::contraction::ContractionConfig;
use cokdv_core::dynamics::{InitialData, SimulationConfig};
use cokdv_core::rng;
use cokdv_core::verify::T_VALUES;
use cokdv_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub simulate: Option<SimulationConfig>,
    #[serde(default)]
    pub verify: Option<VerifySection>,
    #[serde(default)]
    pub contract: Option<ContractSection>,
    #[serde(default)]
    pub bounds: Option<BoundsSection>,
    #[serde(default)]
    pub converge: Option<ConvergeSection>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

pub fn section<T: Clone>(s: &Option<T>, name: &str) -> Result<T> {
    s.clone().ok_or_else(|| Error::Config(format!("config has no \"{name}\" section")))
}

/// Replaces the seed of random initial data by a sub-seed of `seed`.
pub fn reseed(initial: &mut InitialData, seed: u64) {
    if let InitialData::Random { seed: s, .. } = initial {
        *s = rng::split(seed, 0x1D);
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub n_max: usize,
    pub n_cut: usize,
    pub t_values: Vec<f64>,
    pub samples: usize,
    pub equivalence_samples: usize,
    pub control_samples: usize,
    pub residuals: SimulationConfig,
    pub residual_n_cut: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            n_max: 16,
            n_cut: 8,
            t_values: T_VALUES.to_vec(),
            samples: 20,
            equivalence_samples: 50,
            control_samples: 5,
            residuals: SimulationConfig {
                n_max: 16,
                dt: Some(5e-4),
                t_end: 1e-2,
                initial: InitialData::Random { seed: 4, s: 1.0, amplitude: 0.3, support: Some(4), v_zero: false },
                diagnostic_every: 1,
                record_every: 1,
                stability_factor: 0.5,
            },
            residual_n_cut: 4,
        }
    }
}

fn default_lipschitz_samples() -> usize {
    4
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractSection {
    pub solver: ContractionConfig,
    pub initial: InitialData,
    #[serde(default = "default_lipschitz_samples")]
    pub lipschitz_samples: usize,
    #[serde(default = "default_true")]
    pub agreement: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundRequest {
    pub op: String,
    pub s: f64,
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub estimates: Vec<BoundRequest>,
    pub n_values: Vec<usize>,
    pub samples: usize,
}

impl BoundsSection {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.len() < 4 {
            return Err(Error::Config(format!(
                "n_values needs at least 4 cutoffs for a scaling fit, got {}",
                self.n_values.len()
            )));
        }
        if self.estimates.is_empty() {
            return Err(Error::Config("no estimates requested".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSection {
    pub base: SimulationConfig,
    pub n_list: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_parse_with_defaults() {
        let c: RunConfig = serde_json::from_str(
            r#"{"seed": 4, "simulate": {"n_max": 8, "t_end": 1.0,
                "initial": {"kind": "random", "seed": 1, "s": 0.0, "amplitude": 0.1}}}"#,
        )
        .unwrap();
        let sim = section(&c.simulate, "simulate").unwrap();
        assert_eq!((sim.dt, sim.record_every), (None, 1));
        assert!(section(&c.contract, "contract").is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"simulat": {}}"#).is_err());
    }

    #[test]
    fn reseeding_only_touches_random_data() {
        let mut d = InitialData::Random { seed: 1, s: 0.0, amplitude: 1.0, support: None, v_zero: false };
        reseed(&mut d, 7);
        assert!(matches!(d, InitialData::Random { seed, .. } if seed == rng::split(7, 0x1D)));
    }

    #[test]
    fn bounds_need_enough_cutoffs() {
        let mut b = BoundsSection {
            estimates: vec![BoundRequest { op: "B2".into(), s: 0.0, extra: BTreeMap::new() }],
            n_values: vec![8, 16, 32],
            samples: 1,
        };
        assert!(b.validate().is_err());
        b.n_values.push(64);
        assert!(b.validate().is_ok());
    }
}
