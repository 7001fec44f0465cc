//! Parallel drivers against the sequential core routines.

mod common;

use aloha_corr::parallel;
use aloha_corr::Scenario;
use aloha_corr_core::consensus::{basis_vector, simulate_consensus, Sampler};
use aloha_corr_core::oracle::{exact_stats, mc_stats, FrameSampler, EXACT_BUDGET};
use aloha_corr_core::slotmodel::{link_stats, Duplex, DEFAULT_MAX_NODES};
use aloha_corr_core::Network;

fn network(name: &str, m: u32) -> Network {
    Scenario::load(&common::scenario(name)).unwrap().network(m, None, None).unwrap()
}

#[test]
fn analytic_stats_are_bit_identical() {
    for (name, m) in [("grid_2x3.json", 2), ("line_4.json", 3)] {
        let net = network(name, m);
        for duplex in [Duplex::Half, Duplex::Full] {
            let seq = link_stats(&net, duplex, DEFAULT_MAX_NODES).unwrap();
            let par = parallel::link_stats(&net, duplex, DEFAULT_MAX_NODES).unwrap();
            assert_eq!(seq, par);
        }
    }
}

#[test]
fn exact_oracle_is_bit_identical() {
    let net = network("grid_2x3.json", 6);
    let seq = exact_stats(&net, Duplex::Half).unwrap();
    let par = parallel::exact_stats(&net, Duplex::Half, EXACT_BUDGET).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn monte_carlo_is_bit_identical() {
    let net = network("line_4.json", 2);
    let seq = mc_stats(&net, Duplex::Full, 40_000, 3).unwrap();
    let par = parallel::mc_stats(&net, Duplex::Full, 40_000, 3).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn simulation_is_bit_identical() {
    let net = network("grid_2x3.json", 2);
    let sampler = Sampler::Physical(FrameSampler::new(&net, Duplex::Half).unwrap());
    let x0 = basis_vector(6, 2);
    let seq = simulate_consensus(&sampler, 0.4, 6, 1000, &x0, 11).unwrap();
    let par = parallel::simulate_consensus(&sampler, 0.4, 6, 1000, &x0, 11).unwrap();
    assert_eq!(seq, par);
}
