//! Rayon drivers over the core work units. Each produces bit-identical
//! results to its sequential counterpart in the core crate: entries are
//! computed independently and partial sums are merged in index order.

use aloha_corr_core::consensus::{
    block_trials, simulate_block, trial_blocks, Sampler, Trajectory, TrajectorySums,
};
use aloha_corr_core::oracle::{
    block_count, block_frames, mc_block, ExactPartial, ExactPlan, FrameSampler, McCounts, McReport,
};
use aloha_corr_core::slotmodel::{Duplex, Link, LinkStats, SlotModel};
use aloha_corr_core::{Error, Network, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Analytic expectations and covariances, one work item per link pair.
pub fn link_stats(net: &Network, duplex: Duplex, max_nodes: usize) -> Result<LinkStats> {
    let model = SlotModel::with_cap(net, max_nodes)?;
    let n = net.len();
    let size = n * (n - 1);
    let p = (0..size)
        .into_par_iter()
        .map(|a| model.expected_success(duplex, Link::from_index(a, n)))
        .collect::<Result<Vec<f64>>>()?;
    let pairs: Vec<(usize, usize)> = (0..size).flat_map(|a| (a..size).map(move |b| (a, b))).collect();
    let values: Vec<f64> = pairs.par_iter().map(|&(a, b)| model.covariance_entry(duplex, &p, a, b)).collect();
    let mut cov = DMatrix::zeros(size, size);
    for (&(a, b), &c) in pairs.iter().zip(&values) {
        cov[(a, b)] = c;
        cov[(b, a)] = c;
    }
    LinkStats::from_parts(n, p, cov, duplex.into())
}

/// Exact oracle over all slot assignments, one work item per chunk.
pub fn exact_stats(net: &Network, duplex: Duplex, budget: u64) -> Result<LinkStats> {
    let plan = ExactPlan::new(net, duplex, budget)?;
    let partials: Vec<ExactPartial> = (0..plan.chunks()).into_par_iter().map(|c| plan.run_chunk(c)).collect();
    let mut sums = ExactPartial::zero(net.len() * (net.len() - 1));
    for part in &partials {
        sums.merge(part);
    }
    Ok(plan.finish(sums))
}

/// Monte Carlo estimates, one work item per block of frames.
pub fn mc_stats(net: &Network, duplex: Duplex, frames: u64, seed: u64) -> Result<McReport> {
    if frames < 2 {
        return Err(Error::Parameter("Monte Carlo needs at least two frames".into()));
    }
    let sampler = FrameSampler::new(net, duplex)?;
    let n = net.len();
    let blocks: Vec<McCounts> = (0..block_count(frames))
        .into_par_iter()
        .map(|b| mc_block(&sampler, seed, b, block_frames(frames, b)))
        .collect();
    let mut counts = McCounts::zero(n * (n - 1));
    for block in &blocks {
        counts.merge(block);
    }
    McReport::from_counts(n, duplex.into(), seed, &counts)
}

/// Consensus trajectories, one work item per block of trials.
pub fn simulate_consensus(
    sampler: &Sampler,
    eps: f64,
    k: u32,
    trials: u64,
    x0: &[f64],
    seed: u64,
) -> Result<Trajectory> {
    if x0.len() != sampler.len() {
        return Err(Error::Dimension(format!(
            "initial state has {} entries, expected {}",
            x0.len(),
            sampler.len()
        )));
    }
    if trials == 0 {
        return Err(Error::Parameter("need at least one trial".into()));
    }
    let blocks: Vec<TrajectorySums> = (0..trial_blocks(trials))
        .into_par_iter()
        .map(|b| simulate_block(sampler, eps, k, x0, seed, b, block_trials(trials, b)))
        .collect();
    let mut sums = TrajectorySums::zero(k);
    for block in &blocks {
        sums.merge(block);
    }
    Ok(Trajectory::from_sums(&sums))
}
