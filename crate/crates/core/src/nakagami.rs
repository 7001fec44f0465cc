//! Conditional link success probabilities under Nakagami-m fading.
//!
//! [`gamma_success`] evaluates
//!
//! ```text
//! γ_xy^J(ξ) = Pr( P_xy / (N + Σ_{ν∈J} Ξ_ν P_νy) ≥ θ )
//! ```
//!
//! where `P_νy ~ Gamma(m_ν, 1/(m_ν μ_νy))` are independent and the activity
//! indicators `Ξ_ν ~ Bernoulli(ξ_ν)` are independent of the powers. For an
//! integer transmitter shape the tail of `P_xy` is a finite Poisson sum, which
//! turns the probability into
//!
//! ```text
//! e^{-aN} Σ_{s<m_x} (aN)^s Σ_{t≤s} 1/(s-t)! Σ_{|ℓ|=t} Π_ν f_ν(ℓ_ν),   a = θ m_x μ_xy
//! f_ν(ℓ) = (1-ξ_ν) δ_{ℓ0} + ξ_ν C(ℓ+m_ν-1, ℓ) (b_ν/N)^ℓ / (1 + a b_ν)^{m_ν+ℓ},   b_ν = 1/(m_ν μ_νy)
//! ```
//!
//! The inner sum runs over the weak compositions `ℓ` of `t` into `|J|` parts.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;


use crate::deployment::Network;
use crate::error::{Error, Result};

/// Weak compositions of `total` into `parts` non-negative parts, in ascending
/// lexicographic order.
///
/// Use [`WeakCompositions::advance`] in hot loops to avoid allocating.
#[derive(Debug, Clone)]
pub struct WeakCompositions {
    current: Vec<u32>,
    started: bool,
    done: bool,
}

impl WeakCompositions {
    /// `parts` must be at least 1 unless `total` is 0.
    pub fn new(total: u32, parts: usize) -> Self {
        let mut current = vec![0; parts];
        let done = if parts == 0 {
            total != 0
        } else {
            current[parts - 1] = total;
            false
        };
        Self { current, started: false, done }
    }

    /// Moves to the next composition and returns it.
    pub fn advance(&mut self) -> Option<&[u32]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.current);
        }
        let k = self.current.len();
        // The last nonzero part at index >= 1 moves one unit to its left
        // neighbour; the remainder goes to the final slot.
        let Some(j) = (1..k).rev().find(|&j| self.current[j] > 0) else {
            self.done = true;
            return None;
        };
        let rest = self.current[j] - 1;
        self.current[j - 1] += 1;
        self.current[j] = 0;
        self.current[k - 1] = rest;
        Some(&self.current)
    }
}

impl Iterator for WeakCompositions {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        self.advance().map(<[u32]>::to_vec)
    }
}

/// Convenience constructor mirroring the `(t, k)` argument order.
pub fn weak_compositions(total: u32, parts: usize) -> WeakCompositions {
    WeakCompositions::new(total, parts)
}

/// Binomial coefficient by the multiplicative formula.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * f64::from(i))
}

/// Interference activity probabilities `ξ_ν` for a set of potential
/// interferers `J`, kept sorted by node index.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityVector {
    entries: Vec<(usize, f64)>,
}

impl ActivityVector {
    pub fn new(mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Domain(format!("node {} listed twice", w[0].0 + 1)));
            }
        }
        if let Some(&(nu, xi)) = entries.iter().find(|e| !(0.0..=1.0).contains(&e.1)) {
            return Err(Error::Domain(format!("activity of node {} is {xi}, not in [0, 1]", nu + 1)));
        }
        Ok(Self { entries })
    }

    /// Every node except `x` and `y` active with the same probability.
    pub fn uniform(n: usize, x: usize, y: usize, xi: f64) -> Result<Self> {
        Self::new((0..n).filter(|&v| v != x && v != y).map(|v| (v, xi)).collect())
    }

    /// Nodes in `mask` active with probability one, the others in `0..n`
    /// except `x`, `y` silent.
    pub fn binary(n: usize, x: usize, y: usize, mask: u64) -> Self {
        let entries = (0..n)
            .filter(|&v| v != x && v != y)
            .map(|v| (v, if mask >> v & 1 == 1 { 1.0 } else { 0.0 }))
            .collect();
        Self { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// Copy with the activity of `node` replaced (inserted if absent).
    pub fn with(&self, node: usize, xi: f64) -> Result<Self> {
        let mut entries: Vec<_> = self.entries.iter().copied().filter(|e| e.0 != node).collect();
        entries.push((node, xi));
        Self::new(entries)
    }
}

/// Per-interferer quantities in the γ sum.
struct Interferer {
    xi: f64,
    shape: u32,
    /// `b_ν / N`
    scale_over_noise: f64,
    /// `1 / (1 + a b_ν)`
    attenuation: f64,
}

impl Interferer {
    /// `f_ν(ℓ)` of the module docs.
    fn factor(&self, l: u32) -> f64 {
        let active = self.xi
            * binomial(l + self.shape - 1, l)
            * self.scale_over_noise.powi(l as i32)
            * self.attenuation.powi((self.shape + l) as i32);
        if l == 0 {
            (1.0 - self.xi) + active
        } else {
            active
        }
    }
}

fn check_link(net: &Network, x: usize, y: usize) -> Result<()> {
    let n = net.len();
    if x >= n || y >= n {
        return Err(Error::Domain(format!("link ({}, {}) outside a {n}-node network", x + 1, y + 1)));
    }
    if x == y {
        return Err(Error::Domain(format!("link ({0}, {0}) is a self loop", x + 1)));
    }
    Ok(())
}

/// Success probability of the link `x -> y` when every node `ν` of the
/// activity vector interferes independently with probability `ξ_ν`.
pub fn gamma_success(net: &Network, x: usize, y: usize, activity: &ActivityVector) -> Result<f64> {
    check_link(net, x, y)?;
    if let Some(&(nu, _)) = activity.entries().iter().find(|e| e.0 == x || e.0 == y || e.0 >= net.len()) {
        return Err(Error::Domain(format!(
            "node {} cannot interfere with link ({}, {})",
            nu + 1,
            x + 1,
            y + 1
        )));
    }
    Ok(gamma_kernel(net, x, y, activity.entries().iter().copied()))
}

/// γ without argument checks; `interferers` must exclude `x` and `y`.
pub(crate) fn gamma_kernel(
    net: &Network,
    x: usize,
    y: usize,
    interferers: impl Iterator<Item = (usize, f64)>,
) -> f64 {
    let ch = net.channel();
    let slots = net.slots();
    let noise = slots.noise;
    let shape_x = net.shape(x);
    let a = slots.theta * f64::from(shape_x) * ch.mu(x, y);
    let a_noise = a * noise;

    // Silent nodes contribute a factor of one and are dropped.
    let terms: Vec<Interferer> = interferers
        .filter(|&(_, xi)| xi > 0.0)
        .map(|(nu, xi)| {
            let shape = net.shape(nu);
            let scale = 1.0 / (f64::from(shape) * ch.mu(nu, y));
            Interferer {
                xi,
                shape,
                scale_over_noise: scale / noise,
                attenuation: 1.0 / (1.0 + a * scale),
            }
        })
        .collect();

    let mut total = 0.0;
    for s in 0..shape_x {
        let mut inner = 0.0;
        for t in 0..=s {
            let mut compositions = WeakCompositions::new(t, terms.len());
            let mut sum = 0.0;
            while let Some(parts) = compositions.advance() {
                sum += terms.iter().zip(parts).map(|(term, &l)| term.factor(l)).product::<f64>();
            }
            inner += sum / factorial(s - t);
        }
        total += a_noise.powi(s as i32) * inner;
    }
    (-a_noise).exp() * total
}

/// Rayleigh closed form of the half-duplex success probability,
/// `(1 - 1/m) e^{-μ_ij θ N} Π_{l≠i,j} (1 - (1/m) θ / (θ + μ_lj/μ_ij))`.
pub fn rayleigh_success_closed_form(net: &Network, i: usize, j: usize) -> Result<f64> {
    check_link(net, i, j)?;
    if let Some(v) = (0..net.len()).find(|&v| net.shape(v) != 1) {
        return Err(Error::ModelMismatch(format!(
            "Rayleigh closed form needs unit shapes, node {} has shape {}",
            v + 1,
            net.shape(v)
        )));
    }
    let ch = net.channel();
    let slots = net.slots();
    let m = f64::from(slots.slots);
    let theta = slots.theta;
    let mu_ij = ch.mu(i, j);
    let product: f64 = (0..net.len())
        .filter(|&l| l != i && l != j)
        .map(|l| 1.0 - theta / (theta + ch.mu(l, j) / mu_ij) / m)
        .product();
    Ok((1.0 - 1.0 / m) * (-mu_ij * theta * slots.noise).exp() * product)
}

/// Memo of γ for binary activity patterns, the only kind the slot model's
/// state coefficients need.
///
/// Entry `(x, y, mask)` holds γ_xy with exactly the nodes in `mask` active;
/// masks never contain `x` or `y`.
#[derive(Debug, Clone)]
pub struct GammaTable {
    n: usize,
    values: Vec<f64>,
}

impl GammaTable {
    /// Largest network the table is built for (`n^2 2^n` entries).
    pub const MAX_NODES: usize = 20;

    pub fn new(net: &Network) -> Result<Self> {
        let n = net.len();
        if n > Self::MAX_NODES {
            return Err(Error::Complexity(format!(
                "success probability table limited to {} nodes, got {n}",
                Self::MAX_NODES
            )));
        }
        let size = 1usize << n;
        let mut values = vec![f64::NAN; n * n * size];
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                let base = (x * n + y) * size;
                let excluded = (1u64 << x) | (1u64 << y);
                for mask in 0..size as u64 {
                    if mask & excluded != 0 {
                        continue;
                    }
                    let active = (0..n).filter(|&v| mask >> v & 1 == 1).map(|v| (v, 1.0));
                    values[base + mask as usize] = gamma_kernel(net, x, y, active);
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// γ_xy with the nodes in `mask` active; bits of `x` and `y` are ignored.
    #[inline]
    pub fn get(&self, x: usize, y: usize, mask: u64) -> f64 {
        let mask = mask & !((1u64 << x) | (1u64 << y));
        self.values[((x * self.n + y) << self.n) + mask as usize]
    }
}
