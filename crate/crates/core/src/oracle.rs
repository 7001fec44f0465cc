//! Ground truth for the analytic moments.
//!
//! * [`exact_stats`] enumerates all `m^n` slot assignments and multiplies
//!   conditional success probabilities, bypassing the macro-state bookkeeping.
//! * [`mc_stats`] samples slots and Gamma fading and counts successes; it does
//!   not use the γ formula at all.
//!
//! Both work in fixed-size chunks whose partial results are merged in chunk
//! order, so a parallel driver reproduces the sequential result bit for bit.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::deployment::Network;
use crate::error::{Error, Result};
use crate::nakagami::GammaTable;
use crate::slotmodel::{classify_link_pair, Duplex, Link, LinkStats, PairCase, StatsModel};

/// Largest number of slot assignments [`exact_stats`] enumerates.
pub const EXACT_BUDGET: u64 = 10_000_000;
/// Slot assignments per chunk of the exact oracle.
pub const EXACT_CHUNK: u64 = 4096;
/// Frames per RNG stream in the Monte Carlo oracle.
pub const MC_BLOCK: u64 = 1 << 14;

/// Slot index of every node, `b_ν ∈ 0..m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotAssignment {
    pub slots: Vec<u32>,
}

impl SlotAssignment {
    /// Decodes `index ∈ 0..m^n`, node 0 being the least significant digit.
    pub fn from_index(mut index: u64, n: usize, m: u32) -> Self {
        let slots = (0..n)
            .map(|_| {
                let b = (index % u64::from(m)) as u32;
                index /= u64::from(m);
                b
            })
            .collect();
        Self { slots }
    }

    fn slot_mask(&self, slot: u32) -> u64 {
        self.slots.iter().enumerate().filter(|&(_, &b)| b == slot).fold(0, |acc, (v, _)| acc | 1 << v)
    }

    /// Conditional success probability of `link` given the assignment.
    pub fn success(&self, table: &GammaTable, duplex: Duplex, link: Link) -> f64 {
        let (bi, bj) = (self.slots[link.tx], self.slots[link.rx]);
        if duplex == Duplex::Half && bi == bj {
            return 0.0;
        }
        table.get(link.tx, link.rx, self.slot_mask(bi))
    }

    /// Conditional joint success probability of two links given the
    /// assignment. Two senders in one slot cannot both reach the same
    /// receiver when θ >= 1; otherwise the two events depend on disjoint sets
    /// of received powers.
    pub fn joint_success(&self, table: &GammaTable, duplex: Duplex, a: Link, b: Link) -> f64 {
        if a == b {
            return self.success(table, duplex, a);
        }
        if a.rx == b.rx && self.slots[a.tx] == self.slots[b.tx] {
            return 0.0;
        }
        self.success(table, duplex, a) * self.success(table, duplex, b)
    }
}

fn assignment_count(n: usize, m: u32, budget: u64) -> Result<u64> {
    let mut total = 1u64;
    for _ in 0..n {
        total = match total.checked_mul(u64::from(m)) {
            Some(t) if t <= budget => t,
            _ => {
                return Err(Error::Complexity(format!(
                    "exact enumeration of {m}^{n} slot assignments exceeds the budget of {budget}"
                )))
            }
        };
    }
    Ok(total)
}

/// Unnormalised sums of the exact oracle over a range of assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPartial {
    links: usize,
    p: Vec<f64>,
    /// Row-major upper triangle (including the diagonal) of `E[W_a W_b]`.
    joint: Vec<f64>,
}

impl ExactPartial {
    pub fn zero(links: usize) -> Self {
        Self { links, p: vec![0.0; links], joint: vec![0.0; links * links] }
    }

    pub fn merge(&mut self, other: &ExactPartial) {
        self.p.iter_mut().zip(&other.p).for_each(|(a, b)| *a += b);
        self.joint.iter_mut().zip(&other.joint).for_each(|(a, b)| *a += b);
    }
}

/// Set-up shared by all chunks of one exact run.
#[derive(Debug, Clone)]
pub struct ExactPlan {
    n: usize,
    m: u32,
    duplex: Duplex,
    total: u64,
    table: GammaTable,
}

impl ExactPlan {
    pub fn new(net: &Network, duplex: Duplex, budget: u64) -> Result<Self> {
        let n = net.len();
        let m = net.slots().slots;
        let total = assignment_count(n, m, budget)?;
        Ok(Self { n, m, duplex, total, table: GammaTable::new(net)? })
    }

    pub fn chunks(&self) -> u64 {
        self.total.div_ceil(EXACT_CHUNK)
    }

    pub fn chunk_range(&self, chunk: u64) -> Range<u64> {
        let start = chunk * EXACT_CHUNK;
        start..(start + EXACT_CHUNK).min(self.total)
    }

    /// Sums over the assignments of one chunk.
    pub fn run_chunk(&self, chunk: u64) -> ExactPartial {
        let links = Link::all(self.n);
        let size = links.len();
        let mut acc = ExactPartial::zero(size);
        let mut g = vec![0.0; size];
        let mut nonzero = Vec::with_capacity(size);
        for index in self.chunk_range(chunk) {
            let b = SlotAssignment::from_index(index, self.n, self.m);
            nonzero.clear();
            for (a, &link) in links.iter().enumerate() {
                g[a] = b.success(&self.table, self.duplex, link);
                if g[a] != 0.0 {
                    nonzero.push(a);
                }
            }
            for (s, &a) in nonzero.iter().enumerate() {
                acc.p[a] += g[a];
                acc.joint[a * size + a] += g[a];
                for &c in &nonzero[s + 1..] {
                    let (la, lc) = (links[a], links[c]);
                    if la.rx == lc.rx && b.slots[la.tx] == b.slots[lc.tx] {
                        continue;
                    }
                    acc.joint[a * size + c] += g[a] * g[c];
                }
            }
        }
        acc
    }

    /// Normalises merged sums into expectations and covariances.
    pub fn finish(&self, sums: ExactPartial) -> LinkStats {
        let size = sums.links;
        let norm = self.total as f64;
        let p: Vec<f64> = sums.p.iter().map(|v| v / norm).collect();
        let mut cov = DMatrix::zeros(size, size);
        for a in 0..size {
            cov[(a, a)] = p[a] * (1.0 - p[a]);
            for c in a + 1..size {
                let v = sums.joint[a * size + c] / norm - p[a] * p[c];
                cov[(a, c)] = v;
                cov[(c, a)] = v;
            }
        }
        LinkStats::from_parts(self.n, p, cov, self.duplex.into()).expect("consistent dimensions")
    }
}

/// Exact expectations and covariances by slot enumeration.
pub fn exact_stats(net: &Network, duplex: Duplex) -> Result<LinkStats> {
    exact_stats_with_budget(net, duplex, EXACT_BUDGET)
}

pub fn exact_stats_with_budget(net: &Network, duplex: Duplex, budget: u64) -> Result<LinkStats> {
    let plan = ExactPlan::new(net, duplex, budget)?;
    let mut sums = ExactPartial::zero(net.len() * (net.len() - 1));
    for chunk in 0..plan.chunks() {
        sums.merge(&plan.run_chunk(chunk));
    }
    Ok(plan.finish(sums))
}

/// One frame's randomness: slot choices and the received power of every
/// directed pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub slots: Vec<u32>,
    /// `power[i * n + j]` is the power of node `i` received at `j`.
    pub power: Vec<f64>,
}

/// Draws frames of the slot model with Nakagami fading.
///
/// Per frame the generator is consumed in a fixed order: the `n` slot indices,
/// then the powers of all pairs `i != j` in row-major order. Powers are
/// `Gamma(m_i, 1 / (m_i μ_ij))`, sampled by `rand_distr` (Marsaglia–Tsang).
#[derive(Debug, Clone)]
pub struct FrameSampler {
    n: usize,
    m: u32,
    duplex: Duplex,
    theta: f64,
    noise: f64,
    fading: Vec<Option<Gamma<f64>>>,
}

impl FrameSampler {
    pub fn new(net: &Network, duplex: Duplex) -> Result<Self> {
        let n = net.len();
        let mut fading = Vec::with_capacity(n * n);
        for i in 0..n {
            let shape = f64::from(net.shape(i));
            for j in 0..n {
                fading.push(if i == j {
                    None
                } else {
                    let scale = 1.0 / (shape * net.channel().mu(i, j));
                    Some(Gamma::new(shape, scale).map_err(|e| {
                        Error::Numeric(format!("fading distribution of link {}: {e}", Link::new(i, j)))
                    })?)
                });
            }
        }
        let slots = net.slots();
        Ok(Self { n, m: slots.slots, duplex, theta: slots.theta, noise: slots.noise, fading })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn new_frame(&self) -> Frame {
        Frame { slots: vec![0; self.n], power: vec![0.0; self.n * self.n] }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, frame: &mut Frame) {
        for b in frame.slots.iter_mut() {
            *b = rng.random_range(0..self.m);
        }
        for (p, dist) in frame.power.iter_mut().zip(&self.fading) {
            *p = match dist {
                Some(d) => d.sample(rng),
                None => 0.0,
            };
        }
    }

    /// SINR of `link` in `frame`, counting every other node of the sender's
    /// slot as interference.
    pub fn sinr(&self, frame: &Frame, link: Link) -> f64 {
        let Link { tx: i, rx: j } = link;
        let slot = frame.slots[i];
        let interference: f64 = (0..self.n)
            .filter(|&v| v != i && v != j && frame.slots[v] == slot)
            .map(|v| frame.power[v * self.n + j])
            .sum();
        frame.power[i * self.n + j] / (self.noise + interference)
    }

    pub fn success(&self, frame: &Frame, link: Link) -> bool {
        if self.duplex == Duplex::Half && frame.slots[link.tx] == frame.slots[link.rx] {
            return false;
        }
        self.sinr(frame, link) >= self.theta
    }

    /// Success indicators of all links in link order.
    pub fn successes(&self, frame: &Frame, out: &mut [bool]) {
        let mut a = 0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    out[a] = self.success(frame, Link::new(i, j));
                    a += 1;
                }
            }
        }
    }
}

/// Generator for block `block` of a run seeded with `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Success counts of a batch of frames. Counts are integers, so merging is
/// exact in any order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McCounts {
    pub frames: u64,
    pub success: Vec<u64>,
    /// Row-major upper triangle (including the diagonal) of joint counts.
    pub joint: Vec<u64>,
}

impl McCounts {
    pub fn zero(links: usize) -> Self {
        Self { frames: 0, success: vec![0; links], joint: vec![0; links * links] }
    }

    pub fn merge(&mut self, other: &McCounts) {
        self.frames += other.frames;
        self.success.iter_mut().zip(&other.success).for_each(|(a, b)| *a += b);
        self.joint.iter_mut().zip(&other.joint).for_each(|(a, b)| *a += b);
    }
}

/// Number of blocks and frames in block `block` for a run of `frames`.
pub fn block_frames(frames: u64, block: u64) -> u64 {
    frames.saturating_sub(block * MC_BLOCK).min(MC_BLOCK)
}

pub fn block_count(frames: u64) -> u64 {
    frames.div_ceil(MC_BLOCK)
}

/// Counts successes over one block of frames.
pub fn mc_block(sampler: &FrameSampler, seed: u64, block: u64, frames: u64) -> McCounts {
    let size = sampler.n * (sampler.n - 1);
    let mut counts = McCounts::zero(size);
    let mut rng = block_rng(seed, block);
    let mut frame = sampler.new_frame();
    let mut ok = vec![false; size];
    let mut hits = Vec::with_capacity(size);
    for _ in 0..frames {
        sampler.draw(&mut rng, &mut frame);
        sampler.successes(&frame, &mut ok);
        hits.clear();
        hits.extend((0..size).filter(|&a| ok[a]));
        for (s, &a) in hits.iter().enumerate() {
            counts.success[a] += 1;
            for &c in &hits[s..] {
                counts.joint[a * size + c] += 1;
            }
        }
    }
    counts.frames = frames;
    counts
}

/// Monte Carlo estimates with CLT standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub n: usize,
    pub model: StatsModel,
    pub frames: u64,
    pub seed: u64,
    pub p_hat: Vec<f64>,
    pub cov_hat: DMatrix<f64>,
    pub se_p: Vec<f64>,
    pub se_cov: DMatrix<f64>,
}

/// `E[(W_a - p_a)^2 (W_b - p_b)^2]` of two Bernoulli variables with joint
/// success probability `joint`.
fn fourth_moment(pa: f64, pb: f64, joint: f64) -> f64 {
    joint * (1.0 - 2.0 * pa) * (1.0 - 2.0 * pb)
        + pa * (1.0 - 2.0 * pa) * pb * pb
        + pb * (1.0 - 2.0 * pb) * pa * pa
        + pa * pa * pb * pb
}

/// Standard errors of the sample mean and sample covariance of two Bernoulli
/// variables over `frames` draws.
fn standard_errors(pa: f64, pb: f64, joint: f64, frames: f64) -> (f64, f64) {
    let cov = joint - pa * pb;
    let spread = (fourth_moment(pa, pb, joint) - cov * cov).max(0.0);
    ((pa * (1.0 - pa)).max(0.0).sqrt() / frames.sqrt(), (spread / frames).sqrt())
}

impl McReport {
    pub fn from_counts(n: usize, model: StatsModel, seed: u64, counts: &McCounts) -> Result<Self> {
        let size = n * (n - 1);
        if counts.success.len() != size {
            return Err(Error::Dimension(format!("{} link counts for {n} nodes", counts.success.len())));
        }
        if counts.frames < 2 {
            return Err(Error::Parameter("Monte Carlo needs at least two frames".into()));
        }
        let f = counts.frames as f64;
        let p_hat: Vec<f64> = counts.success.iter().map(|&c| c as f64 / f).collect();
        let mut cov_hat = DMatrix::zeros(size, size);
        let mut se_cov = DMatrix::zeros(size, size);
        for a in 0..size {
            for c in a..size {
                let joint = counts.joint[a * size + c] as f64 / f;
                let cov = joint - p_hat[a] * p_hat[c];
                let (_, se) = standard_errors(p_hat[a], p_hat[c], joint, f - 1.0);
                cov_hat[(a, c)] = cov;
                cov_hat[(c, a)] = cov;
                se_cov[(a, c)] = se;
                se_cov[(c, a)] = se;
            }
        }
        let se_p = p_hat.iter().map(|&p| (p * (1.0 - p) / (f - 1.0)).sqrt()).collect();
        Ok(Self { n, model, frames: counts.frames, seed, p_hat, cov_hat, se_p, se_cov })
    }
}

/// Runs `frames` frames in blocks of [`MC_BLOCK`], block `b` drawing from
/// stream `b` of the seeded generator.
pub fn mc_stats(net: &Network, duplex: Duplex, frames: u64, seed: u64) -> Result<McReport> {
    if frames < 2 {
        return Err(Error::Parameter("Monte Carlo needs at least two frames".into()));
    }
    let sampler = FrameSampler::new(net, duplex)?;
    let n = net.len();
    let mut counts = McCounts::zero(n * (n - 1));
    for block in 0..block_count(frames) {
        counts.merge(&mc_block(&sampler, seed, block, block_frames(frames, block)));
    }
    McReport::from_counts(n, duplex.into(), seed, &counts)
}

/// How deviations are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    AbsDev,
    ZScore,
}

/// Which moment an entry refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    Expectation,
    Covariance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub kind: EntryKind,
    pub a: Link,
    pub b: Link,
    pub value: f64,
}

/// Outcome of comparing analytic moments with an oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub metric: Metric,
    pub threshold: f64,
    pub max: f64,
    pub pass: bool,
    pub worst: Option<Entry>,
    /// Largest deviation per group: `expectation`, `variance` and one entry
    /// per link pair case.
    pub per_case: Vec<(String, f64)>,
}

fn case_groups() -> Vec<(String, f64)> {
    let mut groups = vec![(String::from("expectation"), 0.0), (String::from("variance"), 0.0)];
    groups.extend(PairCase::ALL.iter().map(|c| (String::from(c.name()), 0.0)));
    groups
}

fn group_index(a: Link, b: Link) -> usize {
    if a == b {
        return 1;
    }
    let case = classify_link_pair(a, b).expect("distinct links").case;
    2 + PairCase::ALL.iter().position(|&c| c == case).expect("known case")
}

struct Tally {
    report: CompareReport,
}

impl Tally {
    fn new(metric: Metric, threshold: f64) -> Self {
        Self {
            report: CompareReport {
                metric,
                threshold,
                max: 0.0,
                pass: true,
                worst: None,
                per_case: case_groups(),
            },
        }
    }

    fn record(&mut self, group: usize, entry: Entry) {
        let r = &mut self.report;
        let v = entry.value;
        let slot = &mut r.per_case[group].1;
        // NaN deviations stick.
        if !(v <= *slot) {
            *slot = v;
        }
        if r.worst.is_none() || (!(v <= r.max) && !r.max.is_nan()) {
            r.max = v;
            r.worst = Some(entry);
        }
    }

    fn finish(mut self) -> CompareReport {
        self.report.pass = self.report.max <= self.report.threshold;
        self.report
    }
}

fn check_dims(n: usize, other: usize) -> Result<()> {
    if n != other {
        return Err(Error::Dimension(format!("comparing a {n}-node and a {other}-node network")));
    }
    Ok(())
}

/// Entrywise absolute deviation; passes when the maximum is at most `tol`.
pub fn compare_exact(a: &LinkStats, b: &LinkStats, tol: f64) -> Result<CompareReport> {
    check_dims(a.n(), b.n())?;
    let links = a.links();
    let mut tally = Tally::new(Metric::AbsDev, tol);
    for (x, &la) in links.iter().enumerate() {
        let value = (a.p()[x] - b.p()[x]).abs();
        tally.record(0, Entry { kind: EntryKind::Expectation, a: la, b: la, value });
        for (y, &lb) in links.iter().enumerate().skip(x) {
            let value = (a.cov()[(x, y)] - b.cov()[(x, y)]).abs();
            tally.record(group_index(la, lb), Entry { kind: EntryKind::Covariance, a: la, b: lb, value });
        }
    }
    Ok(tally.finish())
}

fn z_score(dev: f64, se: f64) -> f64 {
    if se > 0.0 {
        dev.abs() / se
    } else if dev == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// z-scores of the Monte Carlo estimates against analytic moments; passes
/// when the maximum is at most `z_max`.
///
/// Standard errors are evaluated at the analytic moments (the null
/// hypothesis), so a link that never succeeded in the sample still gets a
/// meaningful score.
pub fn compare_mc(analytic: &LinkStats, mc: &McReport, z_max: f64) -> Result<CompareReport> {
    check_dims(analytic.n(), mc.n)?;
    let links = analytic.links();
    let p = analytic.p();
    let f = mc.frames as f64;
    let mut tally = Tally::new(Metric::ZScore, z_max);
    for (x, &la) in links.iter().enumerate() {
        let (se, _) = standard_errors(p[x], p[x], p[x], f);
        let value = z_score(mc.p_hat[x] - p[x], se);
        tally.record(0, Entry { kind: EntryKind::Expectation, a: la, b: la, value });
        for (y, &lb) in links.iter().enumerate().skip(x) {
            let cov = analytic.cov()[(x, y)];
            let joint = if x == y { p[x] } else { cov + p[x] * p[y] };
            let (_, se) = standard_errors(p[x], p[y], joint, f);
            let value = z_score(mc.cov_hat[(x, y)] - cov, se);
            tally.record(group_index(la, lb), Entry { kind: EntryKind::Covariance, a: la, b: lb, value });
        }
    }
    Ok(tally.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deployment::{Deployment, Node, SlotConfig};
    use crate::nakagami::rayleigh_success_closed_form;

    fn net(m: u32, shapes: &[u32]) -> Network {
        let pts = [(0.0, 0.0), (1.0, 0.3), (0.2, 1.1), (1.3, 1.2), (2.0, 0.4)];
        let nodes = shapes
            .iter()
            .zip(pts)
            .map(|(&shape, (x, y))| Node { position: [x, y, 0.0], tx_power: 1.0, shape })
            .collect();
        let dep = Deployment::new(nodes, 4.0 * core::f64::consts::PI, 2.0).unwrap();
        Network::new(dep, SlotConfig::new(m, 1.5, 0.05).unwrap())
    }

    #[test]
    fn assignment_decoding() {
        let b = SlotAssignment::from_index(5, 3, 2);
        assert_eq!(b.slots, vec![1, 0, 1]);
        assert_eq!(b.slot_mask(1), 0b101);
    }

    #[test]
    fn single_slot_half_duplex_is_silent() {
        let s = exact_stats(&net(1, &[1, 2, 1, 2]), Duplex::Half).unwrap();
        assert!(s.p().iter().all(|&p| p == 0.0));
        assert!(s.cov().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn single_slot_full_duplex_shared_receivers_exclude() {
        let s = exact_stats(&net(1, &[1, 2, 1, 2]), Duplex::Full).unwrap();
        let links = s.links().to_vec();
        for (a, &la) in links.iter().enumerate() {
            for (b, &lb) in links.iter().enumerate() {
                if a == b {
                    continue;
                }
                let expected = if la.rx == lb.rx { -s.p()[a] * s.p()[b] } else { 0.0 };
                assert!((s.cov()[(a, b)] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exact_matches_rayleigh_closed_form() {
        for m in 1..4 {
            let nw = net(m, &[1, 1, 1, 1]);
            let s = exact_stats(&nw, Duplex::Half).unwrap();
            for (a, &l) in s.links().iter().enumerate() {
                let closed = rayleigh_success_closed_form(&nw, l.tx, l.rx).unwrap();
                assert!((s.p()[a] - closed).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn budget_refusal() {
        assert!(matches!(
            exact_stats_with_budget(&net(3, &[1, 1, 1, 1, 1]), Duplex::Half, 100),
            Err(Error::Complexity(_))
        ));
    }

    #[test]
    fn chunked_sum_is_sequential_sum() {
        let nw = net(2, &[1, 2, 1, 2, 1]);
        let plan = ExactPlan::new(&nw, Duplex::Full, EXACT_BUDGET).unwrap();
        assert_eq!(plan.chunks(), 1);
        assert_eq!(plan.chunk_range(0), 0..32);
    }

    #[test]
    fn mc_is_deterministic() {
        let nw = net(2, &[1, 2, 1, 2]);
        let a = mc_stats(&nw, Duplex::Half, 3000, 7).unwrap();
        let b = mc_stats(&nw, Duplex::Half, 3000, 7).unwrap();
        assert_eq!(a, b);
        let c = mc_stats(&nw, Duplex::Half, 3000, 8).unwrap();
        assert_ne!(a.p_hat, c.p_hat);
    }

    #[test]
    fn counts_merge_in_any_order() {
        let nw = net(3, &[1, 2, 1, 2]);
        let sampler = FrameSampler::new(&nw, Duplex::Full).unwrap();
        let (a, b) = (mc_block(&sampler, 3, 1, 50), mc_block(&sampler, 3, 2, 70));
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab, ba);
        assert_eq!(ab.frames, 120);
        assert_eq!(block_frames(MC_BLOCK + 5, 1), 5);
        assert_eq!(block_count(MC_BLOCK + 5), 2);
    }

    #[test]
    fn gamma_power_mean() {
        let nw = net(2, &[3, 1, 2, 1]);
        let sampler = FrameSampler::new(&nw, Duplex::Half).unwrap();
        let mut rng = block_rng(11, 0);
        let mut frame = sampler.new_frame();
        let draws = 200_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..draws {
            sampler.draw(&mut rng, &mut frame);
            let p = frame.power[1];
            sum += p;
            sum2 += p * p;
        }
        let mean = sum / draws as f64;
        let var = sum2 / draws as f64 - mean * mean;
        let target = nw.channel().mean_power(0, 1);
        assert!((mean - target).abs() < 4.0 * (var / draws as f64).sqrt());
        // Gamma(3, μ/3) has variance mean^2 / 3
        assert!((var / (target * target) - 1.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn compare_identical_passes() {
        let s = exact_stats(&net(2, &[1, 2, 1, 2]), Duplex::Half).unwrap();
        let r = compare_exact(&s, &s, 1e-10).unwrap();
        assert!(r.pass);
        assert_eq!(r.max, 0.0);
        assert_eq!(r.per_case.len(), 8);
    }

    #[test]
    fn compare_detects_mismatch_and_dimension_errors() {
        let s = exact_stats(&net(2, &[1, 2, 1, 2]), Duplex::Half).unwrap();
        let t = exact_stats(&net(3, &[1, 2, 1, 2]), Duplex::Half).unwrap();
        let r = compare_exact(&s, &t, 1e-10).unwrap();
        assert!(!r.pass);
        assert!(r.worst.is_some());
        let u = exact_stats(&net(2, &[1, 2, 1]), Duplex::Half).unwrap();
        assert!(matches!(compare_exact(&s, &u, 1e-10), Err(Error::Dimension(_))));
    }

    #[test]
    fn standard_errors_shrink_with_frames() {
        let nw = net(2, &[1, 2, 1, 2]);
        let small = mc_stats(&nw, Duplex::Half, 4_000, 1).unwrap();
        let large = mc_stats(&nw, Duplex::Half, 64_000, 1).unwrap();
        for a in 0..small.p_hat.len() {
            if small.se_p[a] > 0.0 {
                let ratio = small.se_p[a] / large.se_p[a];
                assert!((ratio - 4.0).abs() < 1.0, "ratio {ratio}");
            }
        }
    }

    #[test]
    fn z_score_edge_cases() {
        assert_eq!(z_score(0.0, 0.0), 0.0);
        assert_eq!(z_score(1e-9, 0.0), f64::INFINITY);
        assert_eq!(z_score(-0.2, 0.1), 2.0);
    }
}
