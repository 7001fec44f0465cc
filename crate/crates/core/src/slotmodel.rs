//! Slotted random access model: expectations and covariances of the link
//! success indicators.
//!
//! Every node picks one of `m` slots uniformly at random and broadcasts in it.
//! A link `i -> j` succeeds in the full-duplex reading (`X_ij`) when its SINR,
//! with all other nodes of `i`'s slot interfering at `j`, reaches θ. The
//! half-duplex indicator additionally requires the receiver to be silent:
//! `Y_ij = 1[S_i != S_j] X_ij`.
//!
//! Mixed moments are computed by conditioning on whether the two senders share
//! a slot and summarising the remaining slot choices by macro states:
//!
//! * same slot: `c_ν ∈ {0, 1}` (`1` = in the senders' slot, weight `m-1` for `0`),
//!   summed in [`phi_sum`];
//! * different slots: `c_ν ∈ {0, 1, 2}` (`1` = with sender one, `2` = with
//!   sender two, weight `m-2` for `0`), summed in [`psi_sum`].
//!
//! Each macro state contributes a product of two conditional success
//! probabilities taken from a [`GammaTable`]: once the slots are fixed the two
//! events involve disjoint sets of received powers, except when both links
//! share a receiver and both senders share a slot, which is impossible for
//! θ >= 1.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::deployment::Network;
use crate::error::{Error, Result};
use crate::nakagami::{gamma_kernel, GammaTable};

/// Default limit on the network size for analytic covariance matrices; the
/// different-slot sums have `3^(n-2)` terms per link pair.
pub const DEFAULT_MAX_NODES: usize = 12;

/// Whether a receiver can decode while it transmits itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Duplex {
    /// `Y_ij`: a transmitting node cannot receive.
    Half,
    /// `X_ij`: the receiver's own slot is ignored.
    Full,
}

/// Origin of the moments stored in a [`LinkStats`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatsModel {
    HalfDuplex,
    FullDuplex,
    /// Independent Bernoulli links with the half-duplex success probabilities.
    Uncorrelated,
}

impl From<Duplex> for StatsModel {
    fn from(d: Duplex) -> Self {
        match d {
            Duplex::Half => StatsModel::HalfDuplex,
            Duplex::Full => StatsModel::FullDuplex,
        }
    }
}

/// Directed link `tx -> rx` (0-based node indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub tx: usize,
    pub rx: usize,
}

impl Link {
    pub fn new(tx: usize, rx: usize) -> Self {
        Self { tx, rx }
    }

    /// Position in the lexicographic enumeration of the `n(n-1)` links.
    pub fn index(self, n: usize) -> usize {
        self.tx * (n - 1) + if self.rx < self.tx { self.rx } else { self.rx - 1 }
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        let tx = index / (n - 1);
        let r = index % (n - 1);
        Self { tx, rx: if r < tx { r } else { r + 1 } }
    }

    /// All links in lexicographic order.
    pub fn all(n: usize) -> Vec<Link> {
        (0..n)
            .flat_map(|tx| (0..n).filter(move |&rx| rx != tx).map(move |rx| Link { tx, rx }))
            .collect()
    }
}

impl fmt::Display for Link {
    /// 1-based `i->j` label.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.tx + 1, self.rx + 1)
    }
}

/// How two distinct links `(i, j)` and `(k, l)` share nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PairCase {
    /// `i = k`
    SameSender,
    /// `k = j` and `l = i`
    Reversed,
    /// `l = i`: the first sender receives the second link.
    SenderIsOthersReceiver,
    /// `k = j`: the first receiver sends the second link.
    ReceiverIsOthersSender,
    /// `l = j`
    SharedReceiver,
    /// four distinct nodes
    Disjoint,
}

impl PairCase {
    pub const ALL: [PairCase; 6] = [
        PairCase::SameSender,
        PairCase::Reversed,
        PairCase::SenderIsOthersReceiver,
        PairCase::ReceiverIsOthersSender,
        PairCase::SharedReceiver,
        PairCase::Disjoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PairCase::SameSender => "same_sender",
            PairCase::Reversed => "reversed",
            PairCase::SenderIsOthersReceiver => "sender_is_others_receiver",
            PairCase::ReceiverIsOthersSender => "receiver_is_others_sender",
            PairCase::SharedReceiver => "shared_receiver",
            PairCase::Disjoint => "disjoint",
        }
    }
}

impl fmt::Display for PairCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Classification of a link pair with the index sets of the half-duplex
/// covariance bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkPairCase {
    pub case: PairCase,
    /// `{i, j, k, l}`, sorted.
    pub nodes: Vec<usize>,
    /// `{i, k}` when all four nodes differ, otherwise `nodes`.
    pub fixed_diff_slot: Vec<usize>,
    /// `{i, j, k}` when all four nodes differ, otherwise `nodes`.
    pub fixed_weight: Vec<usize>,
    /// `2 - δ_kj δ_li`
    pub prefactor_exponent: u32,
}

impl LinkPairCase {
    /// `m^(n-|J'|)` for two or three distinct nodes, `m^(n-3) (m-1)` for four.
    pub fn normalizer(&self, n: usize, m: u32) -> f64 {
        let m = f64::from(m);
        match self.nodes.len() {
            4 => m.powi(n as i32 - 3) * (m - 1.0),
            k => m.powi((n - k) as i32),
        }
    }
}

pub fn classify_link_pair(a: Link, b: Link) -> Result<LinkPairCase> {
    if a.tx == a.rx || b.tx == b.rx {
        return Err(Error::Domain("self loops are not links".into()));
    }
    if a == b {
        return Err(Error::Domain(format!("link {a} paired with itself")));
    }
    let Link { tx: i, rx: j } = a;
    let Link { tx: k, rx: l } = b;
    let case = if i == k {
        PairCase::SameSender
    } else if k == j && l == i {
        PairCase::Reversed
    } else if l == i {
        PairCase::SenderIsOthersReceiver
    } else if k == j {
        PairCase::ReceiverIsOthersSender
    } else if l == j {
        PairCase::SharedReceiver
    } else {
        PairCase::Disjoint
    };
    let mut nodes = vec![i, j, k, l];
    nodes.sort_unstable();
    nodes.dedup();
    let (fixed_diff_slot, fixed_weight) = if nodes.len() == 4 {
        let mut ik = vec![i, k];
        ik.sort_unstable();
        let mut ijk = vec![i, j, k];
        ijk.sort_unstable();
        (ik, ijk)
    } else {
        (nodes.clone(), nodes.clone())
    };
    let prefactor_exponent = if k == j && l == i { 1 } else { 2 };
    Ok(LinkPairCase { case, nodes, fixed_diff_slot, fixed_weight, prefactor_exponent })
}

/// Total macro state `[c_ν]_{ν∈J}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacroState {
    pub nodes: Vec<usize>,
    pub values: Vec<u8>,
}

impl MacroState {
    /// Decodes `index` in base `radix`, least significant digit first, over
    /// the index set `nodes` (ascending).
    pub fn from_index(mut index: u64, radix: u8, nodes: &[usize]) -> Self {
        let values = nodes
            .iter()
            .map(|_| {
                let d = (index % u64::from(radix)) as u8;
                index /= u64::from(radix);
                d
            })
            .collect();
        Self { nodes: nodes.to_vec(), values }
    }

    /// Bit mask of the nodes whose value equals `value`.
    pub fn mask_of(&self, value: u8) -> u64 {
        self.nodes
            .iter()
            .zip(&self.values)
            .filter(|&(_, &c)| c == value)
            .fold(0, |acc, (&v, _)| acc | 1 << v)
    }
}

/// Enumerates admissible macro states over a set of nodes in increasing
/// index order (least significant digit first) and sums
/// `base^(#zeros) * f(mask of 1s, mask of 2s)`.
struct StateSpace {
    nodes: Vec<usize>,
    allowed: Vec<[bool; 3]>,
}

impl StateSpace {
    fn new(nodes: Vec<usize>, radix: usize) -> Self {
        let mut all = [false; 3];
        all[..radix].fill(true);
        let allowed = vec![all; nodes.len()];
        Self { nodes, allowed }
    }

    fn forbid(&mut self, node: usize, value: usize) {
        if let Some(p) = self.nodes.iter().position(|&v| v == node) {
            self.allowed[p][value] = false;
        }
    }

    fn sum(&self, base: f64, mut f: impl FnMut(u64, u64) -> f64) -> f64 {
        let k = self.nodes.len();
        let first = |p: usize, from: usize| (from..3).find(|&d| self.allowed[p][d]);
        let mut digits = Vec::with_capacity(k);
        for p in 0..k {
            match first(p, 0) {
                Some(d) => digits.push(d),
                None => return 0.0,
            }
        }
        let powers: Vec<f64> = (0..=k as i32).map(|z| base.powi(z)).collect();
        let bit = |p: usize| 1u64 << self.nodes[p];
        let (mut ones, mut twos, mut zeros) = (0u64, 0u64, 0usize);
        for (p, &d) in digits.iter().enumerate() {
            match d {
                0 => zeros += 1,
                1 => ones |= bit(p),
                _ => twos |= bit(p),
            }
        }
        let mut total = 0.0;
        loop {
            total += powers[zeros] * f(ones, twos);
            // odometer step
            let mut p = 0;
            loop {
                if p == k {
                    return total;
                }
                let old = digits[p];
                let (new, wrapped) = match first(p, old + 1) {
                    Some(d) => (d, false),
                    None => (first(p, 0).unwrap_or(old), true),
                };
                match old {
                    0 => zeros -= 1,
                    1 => ones &= !bit(p),
                    _ => twos &= !bit(p),
                }
                match new {
                    0 => zeros += 1,
                    1 => ones |= bit(p),
                    _ => twos |= bit(p),
                }
                digits[p] = new;
                if !wrapped {
                    break;
                }
                p += 1;
            }
        }
    }
}

/// Analytic moments of one network, with the binary success probabilities
/// tabulated once.
#[derive(Debug, Clone)]
pub struct SlotModel {
    net: Network,
    table: GammaTable,
}

impl SlotModel {
    pub fn new(net: &Network) -> Result<Self> {
        Self::with_cap(net, DEFAULT_MAX_NODES)
    }

    pub fn with_cap(net: &Network, max_nodes: usize) -> Result<Self> {
        if net.len() > max_nodes {
            return Err(Error::Complexity(format!(
                "analytic covariances are limited to {max_nodes} nodes (3^(n-2) macro states per \
                 link pair); got {} nodes",
                net.len()
            )));
        }
        Ok(Self { net: net.clone(), table: GammaTable::new(net)? })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn table(&self) -> &GammaTable {
        &self.table
    }

    fn m(&self) -> f64 {
        f64::from(self.net.slots().slots)
    }

    fn check(&self, link: Link) -> Result<()> {
        let n = self.net.len();
        if link.tx >= n || link.rx >= n || link.tx == link.rx {
            return Err(Error::Domain(format!("invalid link {link} in a {n}-node network")));
        }
        Ok(())
    }

    /// `E[Y_ij] = (1 - 1/m) γ_ij(1/m)` or `E[X_ij] = γ_ij(1/m)`.
    pub fn expected_success(&self, duplex: Duplex, link: Link) -> Result<f64> {
        self.check(link)?;
        let m = self.m();
        let n = self.net.len();
        let interferers =
            (0..n).filter(|&v| v != link.tx && v != link.rx).map(|v| (v, 1.0 / m));
        let gamma = gamma_kernel(&self.net, link.tx, link.rx, interferers);
        Ok(match duplex {
            Duplex::Half => (1.0 - 1.0 / m) * gamma,
            Duplex::Full => gamma,
        })
    }

    /// Same-slot macro state sum `Φ = Σ_c φ(c) α_ijk(c) α_kli(c)` with
    /// `φ(c) = Π (m-1)^{1-c_ν}`.
    ///
    /// Half duplex: `c` ranges over all nodes except `i, j, k, l` (both
    /// receivers must sit outside the common slot). Full duplex: over all
    /// nodes except the senders. In both cases the other link's sender is a
    /// forced interferer whenever the senders differ.
    pub fn phi_sum(&self, duplex: Duplex, a: Link, b: Link) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        let n = self.net.len();
        let Link { tx: i, rx: j } = a;
        let Link { tx: k, rx: l } = b;
        let excluded: &[usize] = match duplex {
            Duplex::Half => &[i, j, k, l],
            Duplex::Full => &[i, k],
        };
        let nodes: Vec<usize> = (0..n).filter(|v| !excluded.contains(v)).collect();
        let space = StateSpace::new(nodes, 2);
        let forced_k = if k != i { 1u64 << k } else { 0 };
        let forced_i = if k != i { 1u64 << i } else { 0 };
        let t = &self.table;
        Ok(space.sum(self.m() - 1.0, |ones, _| t.get(i, j, ones | forced_k) * t.get(k, l, ones | forced_i)))
    }

    /// Different-slot macro state sum `Ψ = Σ_c ψ(c) β⁽¹⁾_ijk(c) β⁽²⁾_kli(c)` over
    /// `c ∈ {0,1,2}` for all nodes except the two senders, with
    /// `ψ(c) = Π (m-2)^{δ_{c_ν 0}}`.
    ///
    /// In the half-duplex model the receiver `j` cannot share sender `i`'s
    /// slot (`c_j != 1`) and `l` cannot share `k`'s (`c_l != 2`).
    pub fn psi_sum(&self, duplex: Duplex, a: Link, b: Link) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        let Link { tx: i, rx: j } = a;
        let Link { tx: k, rx: l } = b;
        if i == k {
            return Err(Error::Domain(format!("links {a} and {b} share their sender")));
        }
        let n = self.net.len();
        let nodes: Vec<usize> = (0..n).filter(|&v| v != i && v != k).collect();
        let mut space = StateSpace::new(nodes, 3);
        if duplex == Duplex::Half {
            space.forbid(j, 1);
            space.forbid(l, 2);
        }
        let t = &self.table;
        Ok(space.sum(self.m() - 2.0, |ones, twos| t.get(i, j, ones) * t.get(k, l, twos)))
    }

    /// `E[W_a W_b]` for two distinct links.
    pub fn joint_success(&self, duplex: Duplex, a: Link, b: Link) -> Result<f64> {
        let pair = classify_link_pair(a, b)?;
        let n = self.net.len() as i32;
        let m = self.m();
        let scale = m.powi(1 - n);
        let same_sender = pair.case == PairCase::SameSender;
        let joint = match duplex {
            Duplex::Half => {
                let hd = (1.0 - 1.0 / m).powi(2) * m.powi(3 - n);
                let same_slot = if same_sender || pair.case == PairCase::Disjoint {
                    hd * self.phi_sum(duplex, a, b)?
                } else {
                    0.0
                };
                let diff_slot =
                    if same_sender { 0.0 } else { (m - 1.0) * scale * self.psi_sum(duplex, a, b)? };
                same_slot + diff_slot
            }
            Duplex::Full => {
                let same_slot = if pair.case == PairCase::SharedReceiver {
                    0.0
                } else {
                    scale * self.phi_sum(duplex, a, b)?
                };
                let diff_slot =
                    if same_sender { 0.0 } else { (m - 1.0) * scale * self.psi_sum(duplex, a, b)? };
                same_slot + diff_slot
            }
        };
        Ok(joint)
    }

    /// `cov(W_a, W_b)`; equal links give the Bernoulli variance.
    pub fn covariance(&self, duplex: Duplex, a: Link, b: Link) -> Result<f64> {
        let pa = self.expected_success(duplex, a)?;
        if a == b {
            return Ok(pa * (1.0 - pa));
        }
        let pb = self.expected_success(duplex, b)?;
        Ok(self.joint_success(duplex, a, b)? - pa * pb)
    }

    /// All success probabilities in link order.
    pub fn expectations(&self, duplex: Duplex) -> Vec<f64> {
        Link::all(self.net.len())
            .into_iter()
            .map(|l| self.expected_success(duplex, l).expect("valid link"))
            .collect()
    }

    /// Covariance entry for link indices `a <= b` given the expectations.
    pub fn covariance_entry(&self, duplex: Duplex, p: &[f64], a: usize, b: usize) -> f64 {
        let n = self.net.len();
        if a == b {
            return p[a] * (1.0 - p[a]);
        }
        let joint = self
            .joint_success(duplex, Link::from_index(a, n), Link::from_index(b, n))
            .expect("valid link pair");
        joint - p[a] * p[b]
    }

    /// Full statistics, computed sequentially over the upper triangle.
    pub fn link_stats(&self, duplex: Duplex) -> LinkStats {
        let n = self.net.len();
        let p = self.expectations(duplex);
        let size = p.len();
        let mut cov = DMatrix::zeros(size, size);
        for a in 0..size {
            for b in a..size {
                let c = self.covariance_entry(duplex, &p, a, b);
                cov[(a, b)] = c;
                cov[(b, a)] = c;
            }
        }
        LinkStats::from_parts(n, p, cov, duplex.into()).expect("consistent dimensions")
    }
}

/// `E[Y_ij]` of the half-duplex model.
pub fn expected_success(net: &Network, link: Link) -> Result<f64> {
    SlotModel::new(net)?.expected_success(Duplex::Half, link)
}

/// Half-duplex covariance of two link indicators.
pub fn cov_hd(net: &Network, a: Link, b: Link) -> Result<f64> {
    SlotModel::new(net)?.covariance(Duplex::Half, a, b)
}

/// Full-duplex covariance of two link indicators.
pub fn cov_fd(net: &Network, a: Link, b: Link) -> Result<f64> {
    SlotModel::new(net)?.covariance(Duplex::Full, a, b)
}

/// Expectations and covariance matrix of all links, refusing networks larger
/// than `max_nodes`.
pub fn link_stats(net: &Network, duplex: Duplex, max_nodes: usize) -> Result<LinkStats> {
    Ok(SlotModel::with_cap(net, max_nodes)?.link_stats(duplex))
}

/// Success probabilities and covariance matrix of all `n(n-1)` links.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStats {
    n: usize,
    links: Vec<Link>,
    p: Vec<f64>,
    cov: DMatrix<f64>,
    model: StatsModel,
}

impl LinkStats {
    pub fn from_parts(n: usize, p: Vec<f64>, cov: DMatrix<f64>, model: StatsModel) -> Result<Self> {
        let size = n * n.saturating_sub(1);
        if p.len() != size || cov.nrows() != size || cov.ncols() != size {
            return Err(Error::Dimension(format!(
                "{n} nodes need {size} links, got {} probabilities and a {}x{} covariance",
                p.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        Ok(Self { n, links: Link::all(n), p, cov, model })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn model(&self) -> StatsModel {
        self.model
    }

    pub fn success(&self, link: Link) -> f64 {
        self.p[link.index(self.n)]
    }

    pub fn covariance(&self, a: Link, b: Link) -> f64 {
        self.cov[(a.index(self.n), b.index(self.n))]
    }

    pub fn labels(&self) -> Vec<String> {
        self.links.iter().map(|l| format!("{l}")).collect()
    }
}

/// Correlation matrix with zero-variance links masked out.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    /// Correlations; rows and columns of masked links are zero.
    pub corr: DMatrix<f64>,
    /// `true` where the link has positive variance and is included.
    pub included: Vec<bool>,
}

pub fn correlation_matrix(stats: &LinkStats) -> Correlation {
    let size = stats.p.len();
    let sd: Vec<f64> = (0..size).map(|a| stats.cov[(a, a)].max(0.0).sqrt()).collect();
    let included: Vec<bool> = sd.iter().map(|&s| s > 0.0).collect();
    let corr = DMatrix::from_fn(size, size, |a, b| {
        if !included[a] || !included[b] {
            0.0
        } else if a == b {
            1.0
        } else {
            stats.cov[(a, b)] / (sd[a] * sd[b])
        }
    });
    Correlation { corr, included }
}

/// Uncorrelated Bernoulli links with the same success probabilities.
pub fn uhbm_from(stats: &LinkStats) -> LinkStats {
    let size = stats.p.len();
    let cov = DMatrix::from_fn(size, size, |a, b| if a == b { stats.p[a] * (1.0 - stats.p[a]) } else { 0.0 });
    LinkStats {
        n: stats.n,
        links: stats.links.clone(),
        p: stats.p.clone(),
        cov,
        model: StatsModel::Uncorrelated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deployment::{Deployment, Node, SlotConfig};
    use crate::nakagami::rayleigh_success_closed_form;
    use approx::assert_relative_eq;

    fn network(points: &[(f64, f64)], shapes: &[u32], m: u32, theta: f64, noise: f64) -> Network {
        let nodes = points
            .iter()
            .zip(shapes)
            .map(|(&(x, y), &shape)| Node { position: [x, y, 0.0], tx_power: 1.0, shape })
            .collect();
        let dep = Deployment::new(nodes, 4.0 * core::f64::consts::PI, 2.0).unwrap();
        Network::new(dep, SlotConfig::new(m, theta, noise).unwrap())
    }

    fn five(m: u32) -> Network {
        network(
            &[(0.0, 0.0), (1.0, 0.2), (2.1, -0.4), (0.7, 1.3), (1.6, 1.1)],
            &[1, 2, 1, 2, 1],
            m,
            1.4,
            0.02,
        )
    }

    #[test]
    fn link_indexing_roundtrip() {
        for n in 3..7 {
            let links = Link::all(n);
            assert_eq!(links.len(), n * (n - 1));
            for (idx, l) in links.iter().enumerate() {
                assert_eq!(l.index(n), idx);
                assert_eq!(Link::from_index(idx, n), *l);
            }
        }
        assert_eq!(format!("{}", Link::new(0, 2)), "1->3");
    }

    #[test]
    fn classification_examples() {
        let c = classify_link_pair(Link::new(0, 1), Link::new(0, 2)).unwrap();
        assert_eq!(c.case, PairCase::SameSender);
        assert_eq!(c.nodes.len(), 3);
        let c = classify_link_pair(Link::new(0, 1), Link::new(1, 0)).unwrap();
        assert_eq!(c.case, PairCase::Reversed);
        assert_eq!(c.nodes.len(), 2);
        assert_eq!(c.prefactor_exponent, 1);
        let c = classify_link_pair(Link::new(0, 1), Link::new(2, 3)).unwrap();
        assert_eq!(c.case, PairCase::Disjoint);
        assert_eq!(c.fixed_diff_slot, vec![0, 2]);
        assert_eq!(c.fixed_weight, vec![0, 1, 2]);
        assert_eq!(c.normalizer(6, 3), 27.0 * 2.0);
        assert_eq!(c.prefactor_exponent, 2);
        let c = classify_link_pair(Link::new(0, 1), Link::new(2, 0)).unwrap();
        assert_eq!(c.case, PairCase::SenderIsOthersReceiver);
        assert_eq!(c.normalizer(6, 3), 27.0);
        let c = classify_link_pair(Link::new(0, 1), Link::new(1, 2)).unwrap();
        assert_eq!(c.case, PairCase::ReceiverIsOthersSender);
        let c = classify_link_pair(Link::new(0, 1), Link::new(2, 1)).unwrap();
        assert_eq!(c.case, PairCase::SharedReceiver);
        assert_eq!(c.fixed_diff_slot, vec![0, 1, 2]);
        assert!(matches!(classify_link_pair(Link::new(0, 1), Link::new(0, 1)), Err(Error::Domain(_))));
    }

    #[test]
    fn odometer_matches_integer_decoding() {
        let nodes = vec![1, 3, 4];
        let mut space = StateSpace::new(nodes.clone(), 3);
        space.forbid(3, 1);
        let mut seen = Vec::new();
        space.sum(1.0, |ones, twos| {
            seen.push((ones, twos));
            0.0
        });
        let expected: Vec<_> = (0..27)
            .map(|idx| MacroState::from_index(idx, 3, &nodes))
            .filter(|s| s.values[1] != 1)
            .map(|s| (s.mask_of(1), s.mask_of(2)))
            .collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn state_weights_use_zero_to_the_zero_as_one() {
        let space = StateSpace::new(vec![0, 1], 3);
        // base m-2 = 0: only states without zeros count.
        assert_eq!(space.sum(0.0, |_, _| 1.0), 4.0);
        assert_eq!(StateSpace::new(vec![], 3).sum(0.0, |_, _| 2.5), 2.5);
    }

    #[test]
    fn empty_phi_sum_is_single_term() {
        let nw = network(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.3)], &[1; 4], 3, 1.2, 0.01);
        let model = SlotModel::new(&nw).unwrap();
        let (a, b) = (Link::new(0, 1), Link::new(2, 3));
        let phi = model.phi_sum(Duplex::Half, a, b).unwrap();
        let t = model.table();
        assert_eq!(phi, t.get(0, 1, 1 << 2) * t.get(2, 3, 1 << 0));
    }

    #[test]
    fn single_slot_weights() {
        // m = 1: only the all-ones state carries weight in Φ.
        let nw = five(1);
        let model = SlotModel::new(&nw).unwrap();
        let (a, b) = (Link::new(0, 1), Link::new(2, 3));
        let phi = model.phi_sum(Duplex::Full, a, b).unwrap();
        let all = 0b11111;
        let t = model.table();
        assert_eq!(phi, t.get(0, 1, all) * t.get(2, 3, all));
    }

    #[test]
    fn psi_all_ones_counts_micro_states() {
        // Links of length one whose interferers are all 1e6 away: every
        // coefficient is one up to 1e-11 and Ψ counts slot assignments with
        // S_i, S_k fixed and distinct.
        for m in 2..5u32 {
            let mf = f64::from(m);
            let pts = [(0.0, 0.0), (1.0, 0.0), (1e6, 0.0), (1e6 + 1.0, 0.0), (0.0, 1e6)];
            let model = SlotModel::new(&network(&pts, &[1; 5], m, 1.0, 1e-30)).unwrap();
            let (a, b) = (Link::new(0, 1), Link::new(2, 3));
            // full duplex: every other node free
            let psi = model.psi_sum(Duplex::Full, a, b).unwrap();
            assert_relative_eq!(psi, mf.powi(3), max_relative = 1e-9);
            // half duplex: j avoids S_i, l avoids S_k
            let psi = model.psi_sum(Duplex::Half, a, b).unwrap();
            assert_relative_eq!(psi, (mf - 1.0).powi(2) * mf, max_relative = 1e-9);

            // shared receiver: j avoids both sender slots
            let pts = [(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0), (1e6, 0.0), (0.0, 1e6)];
            let model = SlotModel::new(&network(&pts, &[1; 5], m, 1.0, 1e-30)).unwrap();
            let psi = model.psi_sum(Duplex::Half, Link::new(0, 1), Link::new(2, 1)).unwrap();
            assert_relative_eq!(psi, (mf - 2.0) * mf * mf, epsilon = 1e-9);
        }
    }

    #[test]
    fn two_slots_kill_free_states() {
        let nw = five(2);
        let model = SlotModel::new(&nw).unwrap();
        let t = model.table().clone();
        let (a, b) = (Link::new(0, 1), Link::new(2, 3));
        let psi = model.psi_sum(Duplex::Full, a, b).unwrap();
        // with m = 2 every other node sits with one of the senders
        let mut expected = 0.0;
        for idx in 0..8u64 {
            let s = MacroState::from_index(idx, 2, &[1, 3, 4]);
            let ones = s.mask_of(0);
            let twos = s.mask_of(1);
            expected += t.get(0, 1, ones) * t.get(2, 3, twos);
        }
        assert_relative_eq!(psi, expected, max_relative = 1e-14);
    }

    #[test]
    fn single_slot_half_duplex_is_degenerate() {
        let nw = five(1);
        let stats = link_stats(&nw, Duplex::Half, DEFAULT_MAX_NODES).unwrap();
        assert!(stats.p().iter().all(|&p| p == 0.0));
        assert!(stats.cov().iter().all(|&c| c == 0.0));
        let corr = correlation_matrix(&stats);
        assert!(corr.included.iter().all(|&x| !x));
        assert!(corr.corr.iter().all(|c| c.is_finite()));
    }

    #[test]
    fn single_slot_full_duplex_correlates_only_shared_receivers() {
        // One slot: all powers at different receivers are independent, while
        // two senders can never both reach the same receiver.
        let nw = five(1);
        let stats = link_stats(&nw, Duplex::Full, DEFAULT_MAX_NODES).unwrap();
        let links = stats.links().to_vec();
        for (a, &la) in links.iter().enumerate() {
            for (b, &lb) in links.iter().enumerate() {
                let c = stats.cov()[(a, b)];
                let (pa, pb) = (stats.p()[a], stats.p()[b]);
                if a == b {
                    assert_relative_eq!(c, pa * (1.0 - pa), max_relative = 1e-15);
                } else if la.rx == lb.rx {
                    assert!((c + pa * pb).abs() < 1e-12, "cov[{a},{b}] = {c}");
                } else {
                    assert!(c.abs() < 1e-12, "cov[{a},{b}] = {c}");
                }
            }
        }
    }

    #[test]
    fn rayleigh_expectation_matches_closed_form() {
        let nw = network(&[(0.0, 0.0), (1.0, 0.2), (2.1, -0.4), (0.7, 1.3)], &[1; 4], 3, 2.0, 0.05);
        let model = SlotModel::new(&nw).unwrap();
        for link in Link::all(4) {
            let p = model.expected_success(Duplex::Half, link).unwrap();
            let closed = rayleigh_success_closed_form(&nw, link.tx, link.rx).unwrap();
            assert!((p - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn covariance_of_link_with_itself_is_variance() {
        let nw = five(3);
        let model = SlotModel::new(&nw).unwrap();
        let l = Link::new(1, 4);
        let p = model.expected_success(Duplex::Half, l).unwrap();
        assert_eq!(model.covariance(Duplex::Half, l, l).unwrap(), p * (1.0 - p));
        assert_eq!(cov_hd(&nw, l, l).unwrap(), p * (1.0 - p));
    }

    #[test]
    fn stats_are_symmetric_with_valid_correlations() {
        let nw = five(3);
        for duplex in [Duplex::Half, Duplex::Full] {
            let stats = link_stats(&nw, duplex, DEFAULT_MAX_NODES).unwrap();
            assert_eq!(stats.cov(), &stats.cov().transpose());
            let corr = correlation_matrix(&stats);
            for a in 0..stats.p().len() {
                assert_eq!(corr.corr[(a, a)], 1.0);
            }
            assert!(corr.corr.iter().all(|c| c.abs() <= 1.0 + 1e-12));
            let min_eig = stats.cov().clone().symmetric_eigenvalues().min();
            assert!(min_eig >= -1e-9 * stats.cov().trace(), "min eigenvalue {min_eig}");
        }
    }

    #[test]
    fn uhbm_keeps_expectations() {
        let nw = five(2);
        let stats = link_stats(&nw, Duplex::Half, DEFAULT_MAX_NODES).unwrap();
        let z = uhbm_from(&stats);
        assert_eq!(z.p(), stats.p());
        assert_eq!(z.model(), StatsModel::Uncorrelated);
        for a in 0..z.p().len() {
            for b in 0..z.p().len() {
                if a != b {
                    assert_eq!(z.cov()[(a, b)], 0.0);
                } else {
                    assert_eq!(z.cov()[(a, a)], stats.cov()[(a, a)]);
                }
            }
        }
        assert_eq!(uhbm_from(&z), z);
    }

    #[test]
    fn complexity_cap_refuses() {
        let nw = five(2);
        assert!(matches!(link_stats(&nw, Duplex::Half, 4), Err(Error::Complexity(_))));
    }

    #[test]
    fn wrong_dimensions_rejected() {
        assert!(LinkStats::from_parts(3, vec![0.0; 6], DMatrix::zeros(5, 5), StatsModel::HalfDuplex).is_err());
    }
}
