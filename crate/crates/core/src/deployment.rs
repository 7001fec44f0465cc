//! Node deployment, radio configuration and the mean received power matrix.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;


use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Carrier wavelength for a carrier frequency in Hz.
pub fn wavelength_from_carrier(carrier_hz: f64) -> Result<f64> {
    if !(carrier_hz > 0.0 && carrier_hz.is_finite()) {
        return Err(Error::Config(format!("carrier frequency must be positive, got {carrier_hz}")));
    }
    Ok(SPEED_OF_LIGHT / carrier_hz)
}

/// Converts a shape parameter given as a real number into the integer shapes
/// supported by the success probability formulas.
pub fn shape_from_f64(shape: f64) -> Result<u32> {
    if !(shape >= 1.0) || !shape.is_finite() {
        return Err(Error::Config(format!("Nakagami shape must be >= 1, got {shape}")));
    }
    if shape.fract() != 0.0 || shape > f64::from(u32::MAX) {
        return Err(Error::UnsupportedModel(format!(
            "only integer Nakagami shapes are supported, got {shape}"
        )));
    }
    Ok(shape as u32)
}

/// A single node: position (m), transmit power (W) and Nakagami shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub position: [f64; 3],
    pub tx_power: f64,
    pub shape: u32,
}

/// Fixed node deployment together with the propagation constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    nodes: Vec<Node>,
    wavelength: f64,
    path_loss_exponent: f64,
}

impl Deployment {
    pub fn new(nodes: Vec<Node>, wavelength: f64, path_loss_exponent: f64) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::Config(format!("at least 3 nodes are required, got {}", nodes.len())));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::Config(format!("wavelength must be positive, got {wavelength}")));
        }
        if !(path_loss_exponent >= 2.0 && path_loss_exponent.is_finite()) {
            return Err(Error::Config(format!(
                "path loss exponent must be >= 2, got {path_loss_exponent}"
            )));
        }
        for (i, node) in nodes.iter().enumerate() {
            if !(node.tx_power > 0.0 && node.tx_power.is_finite()) {
                return Err(Error::Config(format!(
                    "node {}: transmit power must be positive, got {}",
                    i + 1,
                    node.tx_power
                )));
            }
            if node.shape == 0 {
                return Err(Error::Config(format!("node {}: shape must be >= 1", i + 1)));
            }
            if node.position.iter().any(|c| !c.is_finite()) {
                return Err(Error::Config(format!("node {}: non-finite position", i + 1)));
            }
        }
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if distance(&nodes[i].position, &nodes[j].position) <= 0.0 {
                    return Err(Error::Config(format!("nodes {} and {} are co-located", i + 1, j + 1)));
                }
            }
        }
        Ok(Self { nodes, wavelength, path_loss_exponent })
    }

    /// Planar `rows x cols` grid with points at `(r * spacing, c * spacing, 0)`,
    /// numbered row by row.
    pub fn grid(
        rows: usize,
        cols: usize,
        spacing: f64,
        tx_power: f64,
        shape: u32,
        wavelength: f64,
        path_loss_exponent: f64,
    ) -> Result<Self> {
        if rows * cols < 3 {
            return Err(Error::Config(format!(
                "a {rows}x{cols} grid has fewer than 3 nodes"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Config(format!("grid spacing must be positive, got {spacing}")));
        }
        let mut nodes = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                nodes.push(Node {
                    position: [r as f64 * spacing, c as f64 * spacing, 0.0],
                    tx_power,
                    shape,
                });
            }
        }
        Self::new(nodes, wavelength, path_loss_exponent)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn shape(&self, i: usize) -> u32 {
        self.nodes[i].shape
    }

    pub fn tx_power(&self, i: usize) -> f64 {
        self.nodes[i].tx_power
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn path_loss_exponent(&self) -> f64 {
        self.path_loss_exponent
    }

    /// Reference distance `λ / 4π`; with exponent 2 this yields Friis' equation.
    pub fn reference_distance(&self) -> f64 {
        self.wavelength / (4.0 * PI)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        distance(&self.nodes[i].position, &self.nodes[j].position)
    }

    /// Replaces every node's shape.
    pub fn with_shape(&self, shape: u32) -> Result<Self> {
        let nodes = self.nodes.iter().map(|n| Node { shape, ..*n }).collect();
        Self::new(nodes, self.wavelength, self.path_loss_exponent)
    }

    /// Inverse mean received powers `μ_ij = (1/q_i) (d_ij / r0)^α`.
    pub fn mean_power_matrix(&self) -> Channel {
        let n = self.len();
        let r0 = self.reference_distance();
        let mut mu = alloc::vec![f64::INFINITY; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    mu[i * n + j] =
                        (self.distance(i, j) / r0).powf(self.path_loss_exponent) / self.tx_power(i);
                }
            }
        }
        Channel { n, mu }
    }
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Matrix of inverse mean received powers (1/W). `mu(i, j)` belongs to the
/// link from `i` to `j`; the diagonal is unused and stored as infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    n: usize,
    mu: Vec<f64>,
}

impl Channel {
    /// Builds a channel from a row-major `n x n` matrix. Diagonal entries are
    /// ignored.
    pub fn from_row_major(n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {n}x{n} channel, got {}",
                n * n,
                values.len()
            )));
        }
        let mut mu = values.to_vec();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    mu[i * n + j] = f64::INFINITY;
                } else if !(mu[i * n + j] > 0.0) {
                    return Err(Error::Config(format!(
                        "mu({}, {}) must be positive, got {}",
                        i + 1,
                        j + 1,
                        mu[i * n + j]
                    )));
                }
            }
        }
        Ok(Self { n, mu })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn mu(&self, i: usize, j: usize) -> f64 {
        self.mu[i * self.n + j]
    }

    /// Mean received power of the link `i -> j` (W).
    pub fn mean_power(&self, i: usize, j: usize) -> f64 {
        1.0 / self.mu(i, j)
    }

    /// Copy with a single entry multiplied by `factor`.
    pub fn perturbed(&self, i: usize, j: usize, factor: f64) -> Self {
        let mut out = self.clone();
        out.mu[i * self.n + j] *= factor;
        out
    }
}

/// Slot and receiver configuration of the frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotConfig {
    /// Number of slots per frame.
    pub slots: u32,
    /// SINR threshold.
    pub theta: f64,
    /// Thermal noise power (W).
    pub noise: f64,
    /// Frame duration in seconds; metadata only.
    pub frame_duration: Option<f64>,
}

impl SlotConfig {
    pub fn new(slots: u32, theta: f64, noise: f64) -> Result<Self> {
        if slots == 0 {
            return Err(Error::Parameter("slot count must be >= 1".into()));
        }
        // theta >= 1 makes two simultaneous receptions at one node impossible,
        // which the covariance formulas rely on.
        if !(theta >= 1.0 && theta.is_finite()) {
            return Err(Error::Parameter(format!("SINR threshold must be >= 1, got {theta}")));
        }
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(Error::Parameter(format!("noise power must be positive, got {noise}")));
        }
        Ok(Self { slots, theta, noise, frame_duration: None })
    }
}

/// SINR threshold and thermal noise derived from bandwidth and bit rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub theta: f64,
    pub noise: f64,
}

/// `θ = 2^{m R0 / B} - 1` (Shannon capacity at bit rate `m R0`) and
/// `N = B k_B T`.
pub fn derive_radio_params(
    bandwidth_hz: f64,
    ref_bitrate_bps: f64,
    slots: u32,
    temperature_k: f64,
) -> Result<RadioParams> {
    for (name, v) in [
        ("bandwidth", bandwidth_hz),
        ("reference bit rate", ref_bitrate_bps),
        ("temperature", temperature_k),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
        }
    }
    if slots == 0 {
        return Err(Error::Parameter("slot count must be >= 1".into()));
    }
    let rate = f64::from(slots) * ref_bitrate_bps;
    let theta = (rate / bandwidth_hz).exp2() - 1.0;
    if theta < 1.0 {
        return Err(Error::Parameter(format!(
            "derived SINR threshold {theta} is below 1 for m = {slots}"
        )));
    }
    Ok(RadioParams { theta, noise: bandwidth_hz * BOLTZMANN * temperature_k })
}

/// Everything the success and covariance formulas need: deployment, mean
/// power matrix and slot configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    deployment: Deployment,
    channel: Channel,
    slots: SlotConfig,
}

impl Network {
    pub fn new(deployment: Deployment, slots: SlotConfig) -> Self {
        let channel = deployment.mean_power_matrix();
        Self { deployment, channel, slots }
    }

    /// Uses an explicit channel instead of the one implied by the deployment.
    pub fn with_channel(deployment: Deployment, channel: Channel, slots: SlotConfig) -> Result<Self> {
        if channel.len() != deployment.len() {
            return Err(Error::Dimension(format!(
                "channel has {} nodes, deployment {}",
                channel.len(),
                deployment.len()
            )));
        }
        Ok(Self { deployment, channel, slots })
    }

    pub fn len(&self) -> usize {
        self.deployment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deployment.is_empty()
    }

    pub fn deployment(&self) -> &Deployment {
        &self.deployment
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn slots(&self) -> &SlotConfig {
        &self.slots
    }

    pub fn shape(&self, i: usize) -> u32 {
        self.deployment.shape(i)
    }
}
