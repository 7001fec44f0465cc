#![allow(dead_code)]

use aloha_corr_core::deployment::{derive_radio_params, wavelength_from_carrier, Node};
use aloha_corr_core::{Deployment, Network, SlotConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CARRIER_HZ: f64 = 5.9e9;
pub const BANDWIDTH_HZ: f64 = 1e7;
pub const REF_BITRATE_BPS: f64 = 0.4 * 27e6;
pub const TEMPERATURE_K: f64 = 293.0;

/// 2x3 grid, 1500 m spacing, 0.5 W, free space; θ and N derived per `m`.
pub fn reference_grid(m: u32, shape: u32) -> Network {
    let lambda = wavelength_from_carrier(CARRIER_HZ).unwrap();
    let dep = Deployment::grid(2, 3, 1500.0, 0.5, shape, lambda, 2.0).unwrap();
    let radio = derive_radio_params(BANDWIDTH_HZ, REF_BITRATE_BPS, m, TEMPERATURE_K).unwrap();
    Network::new(dep, SlotConfig::new(m, radio.theta, radio.noise).unwrap())
}

/// Random planar network in a 2 km square with nodes at least 100 m apart.
pub fn random_network(rng: &mut ChaCha8Rng, n: usize, m: u32, shapes: &[u32], theta: f64) -> Network {
    let mut pos: Vec<[f64; 3]> = Vec::new();
    while pos.len() < n {
        let p = [rng.random_range(0.0..2000.0), rng.random_range(0.0..2000.0), 0.0];
        if pos.iter().all(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() > 100.0) {
            pos.push(p);
        }
    }
    let nodes = pos
        .into_iter()
        .map(|position| Node { position, tx_power: 0.5, shape: shapes[rng.random_range(0..shapes.len())] })
        .collect();
    let lambda = wavelength_from_carrier(CARRIER_HZ).unwrap();
    let dep = Deployment::new(nodes, lambda, 2.0).unwrap();
    Network::new(dep, SlotConfig::new(m, theta, 4.045e-14).unwrap())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
