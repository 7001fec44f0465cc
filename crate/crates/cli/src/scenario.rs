//! JSON scenario files.

use std::fs;
use std::path::Path;

use aloha_corr_core::deployment::{derive_radio_params, shape_from_f64, wavelength_from_carrier, Node, BOLTZMANN};
use aloha_corr_core::{Deployment, Network, SlotConfig};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    nodes: Option<Vec<NodeSpec>>,
    grid: Option<GridSpec>,
    radio: RadioSpec,
    slots: SlotsSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeSpec {
    pos: Vec<f64>,
    q: f64,
    shape: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    rows: usize,
    cols: usize,
    spacing: f64,
    q: f64,
    shape: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RadioSpec {
    carrier_hz: Option<f64>,
    wavelength_m: Option<f64>,
    path_loss_exponent: f64,
    bandwidth_hz: f64,
    ref_bitrate_bps: f64,
    temperature_k: f64,
    theta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(u32),
    Many(Vec<u32>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SlotsSpec {
    m: OneOrMany,
}

/// Radio inputs in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radio {
    pub wavelength: f64,
    pub path_loss_exponent: f64,
    pub bandwidth_hz: f64,
    pub ref_bitrate_bps: f64,
    pub temperature_k: f64,
    pub theta: Option<f64>,
}

impl Radio {
    pub fn noise(&self) -> f64 {
        self.bandwidth_hz * BOLTZMANN * self.temperature_k
    }
}

/// A validated scenario: deployment, radio inputs and slot counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub deployment: Deployment,
    pub radio: Radio,
    pub slot_counts: Vec<u32>,
}

impl Scenario {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError { message: format!("{}: {}", path.display(), e.message), ..e })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        let r = &file.radio;
        let wavelength = match (r.carrier_hz, r.wavelength_m) {
            (Some(f), None) => wavelength_from_carrier(f)?,
            (None, Some(w)) => w,
            _ => return Err(CliError::usage("radio: exactly one of carrier_hz and wavelength_m is required")),
        };
        let radio = Radio {
            wavelength,
            path_loss_exponent: r.path_loss_exponent,
            bandwidth_hz: r.bandwidth_hz,
            ref_bitrate_bps: r.ref_bitrate_bps,
            temperature_k: r.temperature_k,
            theta: r.theta,
        };
        let deployment = match (&file.nodes, &file.grid) {
            (Some(nodes), None) => {
                let nodes = nodes
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let position = match s.pos[..] {
                            [x, y] => [x, y, 0.0],
                            [x, y, z] => [x, y, z],
                            _ => {
                                return Err(CliError::usage(format!(
                                    "nodes[{i}].pos: expected 2 or 3 coordinates, got {}",
                                    s.pos.len()
                                )))
                            }
                        };
                        Ok(Node { position, tx_power: s.q, shape: shape_from_f64(s.shape)? })
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                Deployment::new(nodes, wavelength, radio.path_loss_exponent)?
            }
            (None, Some(g)) => Deployment::grid(
                g.rows,
                g.cols,
                g.spacing,
                g.q,
                shape_from_f64(g.shape)?,
                wavelength,
                radio.path_loss_exponent,
            )?,
            _ => return Err(CliError::usage("exactly one of `nodes` and `grid` is required")),
        };
        let slot_counts = match file.slots.m {
            OneOrMany::One(m) => vec![m],
            OneOrMany::Many(v) => v,
        };
        if slot_counts.is_empty() || slot_counts.contains(&0) {
            return Err(CliError::usage("slots.m: slot counts must be >= 1 and non-empty"));
        }
        Ok(Self { deployment, radio, slot_counts })
    }

    /// Deployment with every shape replaced when `shape` is given.
    pub fn deployment(&self, shape: Option<u32>) -> CliResult<Deployment> {
        Ok(match shape {
            Some(s) => self.deployment.with_shape(s)?,
            None => self.deployment.clone(),
        })
    }

    /// Threshold for `m` slots: the explicit override, else the scenario's
    /// fixed value, else the derived one.
    pub fn theta(&self, m: u32, theta: Option<f64>) -> CliResult<f64> {
        match theta.or(self.radio.theta) {
            Some(t) => Ok(t),
            None => {
                let r = &self.radio;
                Ok(derive_radio_params(r.bandwidth_hz, r.ref_bitrate_bps, m, r.temperature_k)?.theta)
            }
        }
    }

    pub fn network(&self, m: u32, shape: Option<u32>, theta: Option<f64>) -> CliResult<Network> {
        let slots = SlotConfig::new(m, self.theta(m, theta)?, self.radio.noise())?;
        Ok(Network::new(self.deployment(shape)?, slots))
    }
}
