//! Average consensus over random link successes.
//!
//! Every frame node `i` updates `x_i <- x_i - ε Σ_k W_ki (x_i - x_k)`, i.e.
//! `x <- (I - ε L) x` with `L_ii = Σ_{k≠i} W_ki` and `L_ij = -W_ji`.
//! The second moment of the disagreement `Π x_k` evolves linearly under
//! `R(ε) = (Π ⊗ Π) [(I - ε E L) ⊗ (I - ε E L) + ε² C]`, where
//! `C[(i, k), (j, l)] = cov(L_ij, L_kl)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{kron, numerical_radius, projector, spectral_radius, symmetric_norm};
use crate::oracle::{block_rng, Frame, FrameSampler};
use crate::slotmodel::{Link, LinkStats};

/// Tolerance of the numerical radius evaluations.
pub const NUMERICAL_RADIUS_TOL: f64 = 1e-8;
/// Trials per RNG stream in [`simulate_consensus`].
pub const TRIAL_BLOCK: u64 = 256;

/// Expected Laplacian and Laplacian covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusMoments {
    pub n: usize,
    pub el: DMatrix<f64>,
    /// `n² x n²`, row `n i + k`, column `n j + l` holds `cov(L_ij, L_kl)`.
    /// In this layout `C` is not symmetric; see [`Self::laplacian_covariance`].
    pub c: DMatrix<f64>,
}

/// `L_ij` as a signed sum of link indicators (link index, coefficient).
fn laplacian_entry(n: usize, i: usize, j: usize) -> Vec<(usize, f64)> {
    if i == j {
        (0..n).filter(|&k| k != i).map(|k| (Link::new(k, i).index(n), 1.0)).collect()
    } else {
        vec![(Link::new(j, i).index(n), -1.0)]
    }
}

pub fn laplacian_moments(stats: &LinkStats) -> ConsensusMoments {
    let n = stats.n();
    let p = stats.p();
    let cov = stats.cov();
    let entries: Vec<Vec<(usize, f64)>> =
        (0..n * n).map(|e| laplacian_entry(n, e / n, e % n)).collect();
    let el = DMatrix::from_fn(n, n, |i, j| entries[i * n + j].iter().map(|&(a, s)| s * p[a]).sum());
    // cov(L_e, L_f) for flattened entries e = (i, j), f = (k, l)
    let mut lcov = DMatrix::zeros(n * n, n * n);
    for e in 0..n * n {
        for f in e..n * n {
            let mut v = 0.0;
            for &(a, s) in &entries[e] {
                for &(b, t) in &entries[f] {
                    v += s * t * cov[(a, b)];
                }
            }
            lcov[(e, f)] = v;
            lcov[(f, e)] = v;
        }
    }
    let c = DMatrix::from_fn(n * n, n * n, |r, q| {
        let (i, k) = (r / n, r % n);
        let (j, l) = (q / n, q % n);
        lcov[(i * n + j, k * n + l)]
    });
    ConsensusMoments { n, el, c }
}

impl ConsensusMoments {
    /// Covariance matrix of the row-major flattening of `L`: entry
    /// `(n i + j, n k + l)` is `cov(L_ij, L_kl)`. Symmetric and PSD.
    pub fn laplacian_covariance(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n * n, n * n, |e, f| {
            let (i, j) = (e / n, e % n);
            let (k, l) = (f / n, f % n);
            self.c[(n * i + k, n * j + l)]
        })
    }

    /// `I - ε E L`
    pub fn mean_map(&self, eps: f64) -> DMatrix<f64> {
        DMatrix::identity(self.n, self.n) - &self.el * eps
    }
}

/// `R(ε)`, evaluated as `(Π P̄) ⊗ (Π P̄) + ε² (Π ⊗ Π) C` so that a vanishing
/// `Π P̄` stays exactly representable.
pub fn r_matrix(mom: &ConsensusMoments, eps: f64) -> DMatrix<f64> {
    let pi = projector(mom.n);
    let pp = &pi * mom.mean_map(eps);
    kron(&pp, &pp) + kron(&pi, &pi) * &mom.c * (eps * eps)
}

/// Radii of the second-moment map at one gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSummary {
    pub eps: f64,
    /// `sqrt(ρ(R))`
    pub r2: f64,
    /// `sqrt(w(R))`
    pub w2: f64,
    /// `ρ(Π - ε E L)`
    pub rho_ess: f64,
    pub n: usize,
}

pub fn essential_spectral_radius(el: &DMatrix<f64>, eps: f64) -> Result<f64> {
    spectral_radius(&(projector(el.nrows()) - el * eps))
}

pub fn radii(mom: &ConsensusMoments, eps: f64) -> Result<SpectralSummary> {
    let r = r_matrix(mom, eps);
    Ok(SpectralSummary {
        eps,
        r2: spectral_radius(&r)?.sqrt(),
        w2: numerical_radius(&r, NUMERICAL_RADIUS_TOL)?.sqrt(),
        rho_ess: essential_spectral_radius(&mom.el, eps)?,
        n: mom.n,
    })
}

/// Minimiser of the essential spectral radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsOptimum {
    pub eps: f64,
    pub rho_ess: f64,
    /// The objective was flat over the grid; `eps` is the grid minimiser.
    pub degenerate: bool,
}

/// Minimises `ρ(Π - ε E L)` over `(0, eps_max]`: a 256-point grid scan, then
/// golden-section search between the neighbours of the best grid point.
/// `eps_max` defaults to `2 / ρ(E L)`.
pub fn minimize_eps_rho(el: &DMatrix<f64>, eps_max: Option<f64>, tol: f64) -> Result<EpsOptimum> {
    let hi = match eps_max {
        Some(e) if e > 0.0 => e,
        Some(e) => return Err(Error::Parameter(format!("gain bracket must be positive, got {e}"))),
        None => {
            let rho = spectral_radius(el)?;
            if rho > 0.0 {
                2.0 / rho
            } else {
                1.0
            }
        }
    };
    const GRID: usize = 256;
    let f = |e: f64| essential_spectral_radius(el, e);
    let grid: Vec<f64> = (1..=GRID).map(|k| hi * k as f64 / GRID as f64).collect();
    let values = grid.iter().map(|&e| f(e)).collect::<Result<Vec<_>>>()?;
    let (best, &best_value) =
        values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty grid");
    let worst = values.iter().copied().fold(f64::MIN, f64::max);
    if worst - best_value < 1e-12 {
        return Ok(EpsOptimum { eps: grid[best], rho_ess: best_value, degenerate: true });
    }
    let mut lo = if best == 0 { 0.0 } else { grid[best - 1] };
    let mut up = if best + 1 == GRID { hi } else { grid[best + 1] };
    let ratio = (5.0.sqrt() - 1.0) / 2.0;
    let mut x1 = up - ratio * (up - lo);
    let mut x2 = lo + ratio * (up - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while up - lo > tol {
        if f1 <= f2 {
            up = x2;
            x2 = x1;
            f2 = f1;
            x1 = up - ratio * (up - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (up - lo);
            f2 = f(x2)?;
        }
    }
    let (eps, rho) = [(x1, f1), (x2, f2), (grid[best], best_value)]
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("three candidates");
    Ok(EpsOptimum { eps, rho_ess: rho, degenerate: false })
}

/// Lower and upper rate bounds on the mRMS disagreement after `k` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceBounds {
    pub eps: f64,
    pub k: u32,
    pub r2: f64,
    pub w2: f64,
    /// `r2 / n^(1/2k)`
    pub lb: f64,
    /// `(2 sqrt(n-1))^(1/2k) w2`
    pub ub: f64,
}

impl PerformanceBounds {
    pub fn from_radii(summary: &SpectralSummary, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::Parameter("step count must be >= 1".into()));
        }
        let n = summary.n as f64;
        let root = 1.0 / (2.0 * f64::from(k));
        Ok(Self {
            eps: summary.eps,
            k,
            r2: summary.r2,
            w2: summary.w2,
            lb: summary.r2 / n.powf(root),
            ub: (2.0 * (n - 1.0).sqrt()).powf(root) * summary.w2,
        })
    }
}

pub fn per_step_bounds(mom: &ConsensusMoments, eps: f64, k: u32) -> Result<PerformanceBounds> {
    PerformanceBounds::from_radii(&radii(mom, eps)?, k)
}

/// `E[Pᵀ Π P]` for `P = I - ε L`.
pub fn one_step_matrix(mom: &ConsensusMoments, eps: f64) -> DMatrix<f64> {
    let n = mom.n;
    let pbar = mom.mean_map(eps);
    let pi = projector(n);
    let mut m = pbar.transpose() * &pi * &pbar;
    for j in 0..n {
        for l in 0..n {
            let mut v = 0.0;
            for i in 0..n {
                for k in 0..n {
                    v += pi[(i, k)] * mom.c[(n * i + k, n * j + l)];
                }
            }
            m[(j, l)] += eps * eps * v;
        }
    }
    m
}

/// `max_{|x|<=1} E δ_1²(x)`, the spectral norm of [`one_step_matrix`].
pub fn one_step_bound(mom: &ConsensusMoments, eps: f64) -> Result<f64> {
    let m = one_step_matrix(mom, eps);
    symmetric_norm(&((&m + m.transpose()) * 0.5))
}

/// `E δ_t²(x0) = vec(I)ᵀ R^t (x0 ⊗ x0)` for `t = 1..=k`.
pub fn expected_disagreement(mom: &ConsensusMoments, eps: f64, k: u32, x0: &[f64]) -> Result<Vec<f64>> {
    let n = mom.n;
    if x0.len() != n {
        return Err(Error::Dimension(format!("initial state has {} entries, expected {n}", x0.len())));
    }
    let r = r_matrix(mom, eps);
    let x = DVector::from_column_slice(x0);
    let mut v = x.kronecker(&x);
    let mut out = Vec::with_capacity(k as usize);
    for _ in 0..k {
        v = &r * v;
        out.push((0..n).map(|a| v[a * n + a]).sum());
    }
    Ok(out)
}

/// Source of the link success matrix of each frame.
#[derive(Debug, Clone)]
pub enum Sampler {
    /// Fresh slots and fading every frame (correlated links).
    Physical(FrameSampler),
    /// Independent Bernoulli links with the given success probabilities.
    Bernoulli { n: usize, p: Vec<f64> },
}

impl Sampler {
    pub fn bernoulli(stats: &LinkStats) -> Self {
        Sampler::Bernoulli { n: stats.n(), p: stats.p().to_vec() }
    }

    pub fn len(&self) -> usize {
        match self {
            Sampler::Physical(s) => s.len(),
            Sampler::Bernoulli { n, .. } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-trial scratch space of the simulation.
struct Scratch {
    frame: Option<Frame>,
    ok: Vec<bool>,
    x: Vec<f64>,
    next: Vec<f64>,
}

fn draw_links<R: Rng + ?Sized>(sampler: &Sampler, rng: &mut R, scratch: &mut Scratch) {
    match sampler {
        Sampler::Physical(s) => {
            let frame = scratch.frame.get_or_insert_with(|| s.new_frame());
            s.draw(rng, frame);
            s.successes(frame, &mut scratch.ok);
        }
        Sampler::Bernoulli { p, .. } => {
            for (ok, &q) in scratch.ok.iter_mut().zip(p) {
                *ok = rng.random::<f64>() < q;
            }
        }
    }
}

/// Sums of `δ_t²` and `δ_t⁴` over a batch of trials.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySums {
    pub trials: u64,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl TrajectorySums {
    pub fn zero(k: u32) -> Self {
        Self { trials: 0, sum: vec![0.0; k as usize], sum_sq: vec![0.0; k as usize] }
    }

    pub fn merge(&mut self, other: &TrajectorySums) {
        self.trials += other.trials;
        self.sum.iter_mut().zip(&other.sum).for_each(|(a, b)| *a += b);
        self.sum_sq.iter_mut().zip(&other.sum_sq).for_each(|(a, b)| *a += b);
    }
}

fn disagreement(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean) * (v - mean)).sum()
}

/// Runs `trials` trajectories of block `block`.
pub fn simulate_block(
    sampler: &Sampler,
    eps: f64,
    k: u32,
    x0: &[f64],
    seed: u64,
    block: u64,
    trials: u64,
) -> TrajectorySums {
    let n = sampler.len();
    let mut rng = block_rng(seed, block);
    let mut sums = TrajectorySums::zero(k);
    let mut s = Scratch { frame: None, ok: vec![false; n * (n - 1)], x: x0.to_vec(), next: vec![0.0; n] };
    for _ in 0..trials {
        s.x.copy_from_slice(x0);
        for t in 0..k as usize {
            draw_links(sampler, &mut rng, &mut s);
            for i in 0..n {
                let mut flow = 0.0;
                for j in (0..n).filter(|&j| j != i) {
                    if s.ok[Link::new(j, i).index(n)] {
                        flow += s.x[i] - s.x[j];
                    }
                }
                s.next[i] = s.x[i] - eps * flow;
            }
            core::mem::swap(&mut s.x, &mut s.next);
            let d = disagreement(&s.x);
            sums.sum[t] += d;
            sums.sum_sq[t] += d * d;
        }
    }
    sums.trials = trials;
    sums
}

/// Empirical `E δ_t²(x0)` for `t = 1..=k` with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub trials: u64,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

impl Trajectory {
    pub fn from_sums(sums: &TrajectorySums) -> Self {
        let t = sums.trials as f64;
        let mean: Vec<f64> = sums.sum.iter().map(|s| s / t).collect();
        let se = sums
            .sum_sq
            .iter()
            .zip(&mean)
            .map(|(&sq, &m)| {
                if sums.trials < 2 {
                    f64::INFINITY
                } else {
                    ((sq / t - m * m).max(0.0) / (t - 1.0)).sqrt()
                }
            })
            .collect();
        Self { trials: sums.trials, mean, se }
    }
}

pub fn trial_blocks(trials: u64) -> u64 {
    trials.div_ceil(TRIAL_BLOCK)
}

pub fn block_trials(trials: u64, block: u64) -> u64 {
    trials.saturating_sub(block * TRIAL_BLOCK).min(TRIAL_BLOCK)
}

/// Simulates `x_{t+1} = (I - ε L(t)) x_t` over `trials` independent runs of
/// `k` steps. Trials are grouped in blocks of [`TRIAL_BLOCK`], each with its
/// own RNG stream, and merged in block order.
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
    let mut sums = TrajectorySums::zero(k);
    for block in 0..trial_blocks(trials) {
        sums.merge(&simulate_block(sampler, eps, k, x0, seed, block, block_trials(trials, block)));
    }
    Ok(Trajectory::from_sums(&sums))
}

/// Unit vector `e_i`.
pub fn basis_vector(n: usize, i: usize) -> Vec<f64> {
    (0..n).map(|v| if v == i { 1.0 } else { 0.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slotmodel::StatsModel;
    use approx::assert_relative_eq;

    fn perfect(n: usize) -> LinkStats {
        let size = n * (n - 1);
        LinkStats::from_parts(n, vec![1.0; size], DMatrix::zeros(size, size), StatsModel::Uncorrelated).unwrap()
    }

    fn bernoulli(n: usize, p: f64) -> LinkStats {
        let size = n * (n - 1);
        let cov = DMatrix::from_diagonal_element(size, size, p * (1.0 - p));
        LinkStats::from_parts(n, vec![p; size], cov, StatsModel::Uncorrelated).unwrap()
    }

    #[test]
    fn laplacian_of_equal_links() {
        let mom = laplacian_moments(&bernoulli(3, 0.4));
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 0.8 } else { -0.4 };
                assert_relative_eq!(mom.el[(i, j)], expected, epsilon = 1e-15);
            }
        }
        assert!(mom.el.row_sum().iter().all(|v| v.abs() < 1e-15));
        // cov(L_ii, L_ii) = Σ_k var(W_ki)
        let v = 0.4 * 0.6;
        assert_relative_eq!(mom.c[(0, 0)], 2.0 * v, epsilon = 1e-15);
        // cov(L_01, L_01) = var(W_10); row (0, 0), column (1, 1)
        assert_relative_eq!(mom.c[(0, 4)], v, epsilon = 1e-15);
        // cov(L_00, L_01) = -cov(W_10 + W_20, W_10)
        assert_relative_eq!(mom.c[(0, 1)], -v, epsilon = 1e-15);
        let lc = mom.laplacian_covariance();
        assert_eq!(lc, lc.transpose());
        // swapping both factors of the Kronecker layout is a symmetry
        for r in 0..9 {
            for q in 0..9 {
                let swap = |x: usize| (x % 3) * 3 + x / 3;
                assert_eq!(mom.c[(r, q)], mom.c[(swap(r), swap(q))]);
            }
        }
    }

    #[test]
    fn covariance_is_bilinear() {
        let s = bernoulli(4, 0.3);
        let doubled = LinkStats::from_parts(4, s.p().to_vec(), s.cov() * 2.0, s.model()).unwrap();
        assert_eq!(laplacian_moments(&doubled).c, laplacian_moments(&s).c * 2.0);
    }

    #[test]
    fn complete_graph_rates() {
        let n = 5;
        let mom = laplacian_moments(&perfect(n));
        for eps in [0.05, 0.1, 0.3] {
            let rho = spectral_radius(&r_matrix(&mom, eps)).unwrap();
            assert_relative_eq!(rho, (1.0 - eps * n as f64).powi(2), epsilon = 1e-12);
        }
        let s = radii(&mom, 1.0 / n as f64).unwrap();
        assert!(s.r2 < 1e-10);
        assert!(s.rho_ess < 1e-10);
        let opt = minimize_eps_rho(&mom.el, None, 1e-10).unwrap();
        assert!((opt.eps - 0.2).abs() < 1e-8);
        assert!(opt.rho_ess < 1e-7);
        assert!(one_step_bound(&mom, 0.2).unwrap() < 1e-12);
    }

    #[test]
    fn small_gain_limit() {
        let mom = laplacian_moments(&bernoulli(4, 0.5));
        let r = r_matrix(&mom, 1e-9);
        assert_relative_eq!(spectral_radius(&r).unwrap(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn projector_absorbs() {
        let mom = laplacian_moments(&bernoulli(4, 0.6));
        let r = r_matrix(&mom, 0.2);
        let pi = projector(4);
        assert!((kron(&pi, &pi) * &r - &r).abs().max() < 1e-12);
    }

    #[test]
    fn bound_formulas() {
        let s = SpectralSummary { eps: 0.1, r2: 0.9, w2: 0.95, rho_ess: 0.8, n: 6 };
        let b = PerformanceBounds::from_radii(&s, 250).unwrap();
        assert!((b.lb - 0.8968).abs() < 5e-5);
        assert!((b.ub - 0.9529).abs() < 5e-5);
        let far = PerformanceBounds::from_radii(&s, 1_000_000_000).unwrap();
        assert!((far.lb - 0.9).abs() < 1e-8 && (far.ub - 0.95).abs() < 1e-8);
        assert!(PerformanceBounds::from_radii(&s, 0).is_err());
    }

    #[test]
    fn one_step_without_covariance() {
        let stats = bernoulli(4, 0.7);
        let mom = ConsensusMoments { c: DMatrix::zeros(16, 16), ..laplacian_moments(&stats) };
        let pbar = mom.mean_map(0.2);
        let expected = pbar.transpose() * projector(4) * &pbar;
        assert!((one_step_matrix(&mom, 0.2) - expected).abs().max() < 1e-15);
    }

    #[test]
    fn one_step_matches_second_moment_recursion() {
        let mom = laplacian_moments(&bernoulli(4, 0.55));
        let m = one_step_matrix(&mom, 0.3);
        let x = [0.3, -0.9, 0.1, 0.4];
        let xv = DVector::from_column_slice(&x);
        let direct = (xv.transpose() * &m * &xv)[(0, 0)];
        let via_r = expected_disagreement(&mom, 0.3, 1, &x).unwrap()[0];
        assert_relative_eq!(direct, via_r, max_relative = 1e-12);
    }

    #[test]
    fn simulation_matches_exact_moments_for_bernoulli_links() {
        let stats = bernoulli(4, 0.5);
        let mom = laplacian_moments(&stats);
        let x0 = [0.6, -0.2, 0.7, -0.3];
        let traj = simulate_consensus(&Sampler::bernoulli(&stats), 0.2, 5, 20_000, &x0, 4).unwrap();
        let exact = expected_disagreement(&mom, 0.2, 5, &x0).unwrap();
        for (t, e) in exact.iter().enumerate() {
            assert!((traj.mean[t] - e).abs() < 4.0 * traj.se[t], "step {t}");
        }
    }

    #[test]
    fn trivial_trajectories() {
        let x0 = [1.0, 0.0, 0.0, 0.0];
        let frozen = simulate_consensus(&Sampler::bernoulli(&bernoulli(4, 0.5)), 0.0, 4, 10, &x0, 1).unwrap();
        assert!(frozen.mean.iter().all(|&d| (d - 0.75).abs() < 1e-15));
        let perfect = simulate_consensus(&Sampler::bernoulli(&perfect(4)), 0.25, 3, 10, &x0, 1).unwrap();
        assert!(perfect.mean.iter().all(|&d| d < 1e-30));
        let a = simulate_consensus(&Sampler::bernoulli(&bernoulli(4, 0.5)), 0.1, 4, 600, &x0, 9).unwrap();
        let b = simulate_consensus(&Sampler::bernoulli(&bernoulli(4, 0.5)), 0.1, 4, 600, &x0, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_bracket() {
        let n = 3;
        let size = n * (n - 1);
        let dead = LinkStats::from_parts(n, vec![0.0; size], DMatrix::zeros(size, size), StatsModel::Uncorrelated)
            .unwrap();
        let opt = minimize_eps_rho(&laplacian_moments(&dead).el, None, 1e-9).unwrap();
        assert!(opt.degenerate);
        assert_relative_eq!(opt.rho_ess, 1.0, epsilon = 1e-12);
    }
}
