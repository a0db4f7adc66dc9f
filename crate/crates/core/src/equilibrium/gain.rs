//! Opponent performance distribution, rank probabilities and contest gain.
//!
//! With `I − 1` symmetric opponents whose performances are i.i.d. draws from
//! the mixture `G(s) = ∫ H_{μ*(θ)}(s) dF(θ)`, a player performing at `s`
//! beats exactly `j` of them with probability `B_{j,I−1}(G(s))`, the
//! Bernstein basis polynomial. Integrating against the player's own
//! performance law gives rank probabilities; weighting by prizes gives the
//! contest gain
//!
//! `g(μ) = ∫ φ(G(s)) dH_μ(s)`, with `φ(x) = Σ_j R_{I−j} B_{j,I−1}(x)`.
//!
//! `G` and `φ∘G` are tabulated once per profile with cubic Hermite
//! interpolation (exact derivatives at the knots), and `g` is tabulated over a
//! fitness grid for the best-response search.

use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use crate::model::{NoiseFamily, PrizeVector, TypeDistribution};
use crate::quad::{adaptive_simpson, gauss_legendre, QuadError};

const TAIL: f64 = 1e-14;
const SIMPSON_DEPTH: u32 = 40;

/// Cubic Hermite interpolant on a uniform grid, constant beyond its ends.
#[derive(Debug, Clone)]
pub(crate) struct HermiteTable {
    lo: f64,
    step: f64,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl HermiteTable {
    pub(crate) fn tabulate(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> (f64, f64)) -> Self {
        let n = n.max(2);
        let step = (hi - lo) / (n - 1) as f64;
        let (y, dy) = (0..n).map(|i| f(lo + step * i as f64)).unzip();
        Self { lo, step, y, dy }
    }

    pub(crate) fn try_tabulate<E>(
        lo: f64,
        hi: f64,
        n: usize,
        f: impl Fn(f64) -> Result<(f64, f64), E>,
    ) -> Result<Self, E> {
        let n = n.max(2);
        let step = (hi - lo) / (n - 1) as f64;
        let mut y = Vec::with_capacity(n);
        let mut dy = Vec::with_capacity(n);
        for i in 0..n {
            let (v, d) = f(lo + step * i as f64)?;
            y.push(v);
            dy.push(d);
        }
        Ok(Self { lo, step, y, dy })
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let last = self.y.len() - 1;
        let t = (x - self.lo) / self.step;
        if !(t > 0.0) {
            return None;
        }
        if t >= last as f64 {
            return None;
        }
        let i = (t as usize).min(last - 1);
        Some((i, t - i as f64))
    }

    pub(crate) fn value(&self, x: f64) -> f64 {
        match self.locate(x) {
            None => {
                if x <= self.lo || x.is_nan() {
                    self.y[0]
                } else {
                    self.y[self.y.len() - 1]
                }
            }
            Some((i, t)) => {
                let t2 = t * t;
                let t3 = t2 * t;
                let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                let h10 = t3 - 2.0 * t2 + t;
                let h01 = -2.0 * t3 + 3.0 * t2;
                let h11 = t3 - t2;
                h00 * self.y[i]
                    + h10 * self.step * self.dy[i]
                    + h01 * self.y[i + 1]
                    + h11 * self.step * self.dy[i + 1]
            }
        }
    }

    pub(crate) fn derivative(&self, x: f64) -> f64 {
        match self.locate(x) {
            None => 0.0,
            Some((i, t)) => {
                let t2 = t * t;
                let d00 = 6.0 * t2 - 6.0 * t;
                let d10 = 3.0 * t2 - 4.0 * t + 1.0;
                let d01 = -6.0 * t2 + 6.0 * t;
                let d11 = 3.0 * t2 - 2.0 * t;
                (d00 * self.y[i] + d01 * self.y[i + 1]) / self.step
                    + d10 * self.dy[i]
                    + d11 * self.dy[i + 1]
            }
        }
    }

    pub(crate) fn upper(&self) -> f64 {
        self.lo + self.step * (self.y.len() - 1) as f64
    }
}

/// Bernstein basis `B_{j,n}(x)`, `j = 0..=n`, evaluated in log space.
#[derive(Debug, Clone)]
pub(crate) struct Bernstein {
    ln_binom: Vec<f64>,
}

impl Bernstein {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            ln_binom: (0..=n).map(|j| ln_binomial(n as u64, j as u64)).collect(),
        }
    }

    fn degree(&self) -> usize {
        self.ln_binom.len() - 1
    }

    pub(crate) fn fill(&self, x: f64, out: &mut [f64]) {
        let n = self.degree();
        out.iter_mut().for_each(|v| *v = 0.0);
        if x <= 0.0 {
            out[0] = 1.0;
            return;
        }
        if x >= 1.0 {
            out[n] = 1.0;
            return;
        }
        let lx = x.ln();
        let l1x = (-x).ln_1p();
        for (j, slot) in out.iter_mut().enumerate().take(n + 1) {
            *slot = (self.ln_binom[j] + j as f64 * lx + (n - j) as f64 * l1x).exp();
        }
    }

    fn dot(&self, x: f64, coeffs: &[f64]) -> f64 {
        let n = self.degree();
        if x <= 0.0 {
            return coeffs[0];
        }
        if x >= 1.0 {
            return coeffs[n];
        }
        let lx = x.ln();
        let l1x = (-x).ln_1p();
        coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| c * (self.ln_binom[j] + j as f64 * lx + (n - j) as f64 * l1x).exp())
            .sum()
    }
}

/// `φ(x)` and `φ'(x)` for a prize vector.
#[derive(Debug, Clone)]
pub(crate) struct PrizeKernel {
    /// `R_{I−j}` indexed by the number `j` of opponents beaten.
    by_beaten: Vec<f64>,
    /// `(I − 1)(R_{I−j−1} − R_{I−j})`, `j = 0..I−1`.
    gap_coeffs: Vec<f64>,
    basis: Bernstein,
    basis_lower: Option<Bernstein>,
}

impl PrizeKernel {
    pub(crate) fn new(prizes: &PrizeVector) -> Self {
        let r = prizes.as_slice();
        let players = r.len();
        let n = players - 1;
        let by_beaten: Vec<f64> = (0..players).map(|j| r[players - 1 - j]).collect();
        let gap_coeffs = (0..n)
            .map(|j| n as f64 * (by_beaten[j + 1] - by_beaten[j]))
            .collect();
        Self {
            by_beaten,
            gap_coeffs,
            basis: Bernstein::new(n),
            basis_lower: (n > 0).then(|| Bernstein::new(n - 1)),
        }
    }

    pub(crate) fn is_flat(&self) -> bool {
        self.gap_coeffs.iter().all(|&g| g == 0.0)
    }

    pub(crate) fn phi(&self, x: f64) -> f64 {
        self.basis.dot(x, &self.by_beaten)
    }

    pub(crate) fn phi_prime(&self, x: f64) -> f64 {
        match &self.basis_lower {
            Some(b) => b.dot(x, &self.gap_coeffs),
            None => 0.0,
        }
    }

    pub(crate) fn basis(&self) -> &Bernstein {
        &self.basis
    }
}

/// Quadrature nodes over the type distribution, tied to a profile grid so
/// that fitness at each node interpolates the grid values.
#[derive(Debug, Clone)]
pub(crate) struct TypeNodes {
    weights: Vec<f64>,
    /// Grid cell and position within it for each node.
    cells: Vec<(usize, f64)>,
}

impl TypeNodes {
    /// Composite Gauss-Legendre with `per_cell` nodes in every grid cell, or
    /// the atoms themselves for a discrete distribution.
    pub(crate) fn new(types: &dyn TypeDistribution, grid: &[f64], per_cell: usize) -> Self {
        if let Some(atoms) = types.atoms() {
            let mut weights = Vec::with_capacity(atoms.len());
            let mut cells = Vec::with_capacity(atoms.len());
            for &(t, p) in atoms {
                let j = grid.partition_point(|&g| g < t).min(grid.len() - 1);
                weights.push(p);
                cells.push((j, 0.0));
            }
            return Self { weights, cells };
        }
        let (x, w) = gauss_legendre(per_cell.max(1));
        let mut weights = Vec::new();
        let mut cells = Vec::new();
        for j in 0..grid.len().saturating_sub(1) {
            let (lo, hi) = (grid[j], grid[j + 1]);
            let half = 0.5 * (hi - lo);
            for (xi, wi) in x.iter().zip(&w) {
                let t = 0.5 * (xi + 1.0);
                let theta = lo + (hi - lo) * t;
                let mass = wi * half * types.pdf(theta);
                if mass > 0.0 {
                    weights.push(mass);
                    cells.push((j, t));
                }
            }
        }
        if weights.is_empty() {
            weights.push(1.0);
            cells.push((0, 0.0));
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self { weights, cells }
    }

    pub(crate) fn fitness(&self, mu: &[f64]) -> Vec<f64> {
        self.cells
            .iter()
            .map(|&(j, t)| {
                if t == 0.0 {
                    mu[j]
                } else {
                    (1.0 - t) * mu[j] + t * mu[j + 1]
                }
            })
            .collect()
    }

    pub(crate) fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Probabilities of finishing at each rank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankDistribution {
    /// `p[k − 1]` is the probability of finishing `k`-th.
    pub p: Vec<f64>,
    /// `cumulative[k − 1]` is the probability of finishing `k`-th or better.
    pub cumulative: Vec<f64>,
}

impl RankDistribution {
    fn from_p(p: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = p
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        Self { p, cumulative }
    }

    pub fn expected_prize(&self, prizes: &PrizeVector) -> f64 {
        self.p.iter().zip(prizes.as_slice()).map(|(p, r)| p * r).sum()
    }
}

/// Tuning knobs for the gain computations.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GainSettings {
    pub s_points: usize,
    pub gain_points: usize,
    pub quad_tol: f64,
}

/// Everything a player needs to evaluate fitness choices against a fixed
/// opponent profile.
pub(crate) struct ContestEnvironment<'a> {
    noise: &'a dyn NoiseFamily,
    prizes: PrizeVector,
    kernel: PrizeKernel,
    mus: Vec<f64>,
    weights: Vec<f64>,
    cdf_table: Option<HermiteTable>,
    phi_table: Option<HermiteTable>,
    gain_curve: Option<HermiteTable>,
    settings: GainSettings,
}

impl<'a> ContestEnvironment<'a> {
    pub(crate) fn new(
        noise: &'a dyn NoiseFamily,
        prizes: &PrizeVector,
        nodes: &TypeNodes,
        profile_mu: &[f64],
        settings: GainSettings,
    ) -> Self {
        let kernel = PrizeKernel::new(prizes);
        let mus = nodes.fitness(profile_mu);
        let weights = nodes.weights().to_vec();
        let mut env = Self {
            noise,
            prizes: prizes.clone(),
            kernel,
            mus,
            weights,
            cdf_table: None,
            phi_table: None,
            gain_curve: None,
            settings,
        };
        if prizes.len() > 1 {
            let (lo, hi) = env.performance_range();
            let table = HermiteTable::tabulate(lo, hi, settings.s_points, |s| (env.mixture_cdf(s), env.mixture_pdf(s)));
            let phi = HermiteTable::tabulate(lo, hi, settings.s_points, |s| {
                let x = table.value(s);
                let g = env.mixture_pdf(s);
                (env.kernel.phi(x), env.kernel.phi_prime(x) * g)
            });
            env.cdf_table = Some(table);
            env.phi_table = Some(phi);
        }
        env
    }

    fn performance_range(&self) -> (f64, f64) {
        let lo = self
            .mus
            .iter()
            .map(|&m| self.noise.quantile(TAIL, m))
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .mus
            .iter()
            .map(|&m| self.noise.quantile(1.0 - TAIL, m))
            .fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 1.0, lo + 1.0)
        }
    }

    /// `G(s)` from the quadrature nodes directly.
    pub(crate) fn mixture_cdf(&self, s: f64) -> f64 {
        self.mus
            .iter()
            .zip(&self.weights)
            .map(|(&m, &w)| w * self.noise.cdf(s, m))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    pub(crate) fn mixture_pdf(&self, s: f64) -> f64 {
        self.mus
            .iter()
            .zip(&self.weights)
            .map(|(&m, &w)| w * self.noise.pdf(s, m))
            .sum()
    }

    fn tabulated_cdf(&self, s: f64) -> f64 {
        match &self.cdf_table {
            Some(t) => t.value(s).clamp(0.0, 1.0),
            None => self.mixture_cdf(s),
        }
    }

    fn own_quantile(&self, u: f64, mu: f64) -> f64 {
        self.noise.quantile(u.clamp(TAIL, 1.0 - TAIL), mu)
    }

    /// Rank probabilities for a player with fitness `mu`.
    pub(crate) fn rank_probabilities(&self, mu: f64) -> Result<RankDistribution, QuadError> {
        let players = self.prizes.len();
        if players == 1 {
            return Ok(RankDistribution::from_p(vec![1.0]));
        }
        let basis = self.kernel.basis();
        let beaten = adaptive_simpson(
            |u| {
                let mut out = vec![0.0; players];
                basis.fill(self.tabulated_cdf(self.own_quantile(u, mu)), &mut out);
                out
            },
            0.0,
            1.0,
            self.settings.quad_tol,
            SIMPSON_DEPTH,
        )?;
        // Finishing k-th means beating I − k opponents.
        let p = (1..=players).map(|k| beaten[players - k].max(0.0)).collect();
        Ok(RankDistribution::from_p(p))
    }

    fn phi_at(&self, s: f64) -> (f64, f64) {
        match &self.phi_table {
            Some(t) => (t.value(s), t.derivative(s)),
            None => (self.kernel.phi(0.0), 0.0),
        }
    }

    /// `g(μ)` and `g'(μ)` by quadrature over the own-performance quantile.
    pub(crate) fn gain_and_slope(&self, mu: f64) -> Result<(f64, f64), QuadError> {
        if self.kernel.is_flat() || self.phi_table.is_none() {
            return Ok((self.kernel.phi(0.0), 0.0));
        }
        let tol = self.settings.quad_tol * self.prizes.top().max(1.0);
        let v = adaptive_simpson(
            |u| {
                let uc = u.clamp(TAIL, 1.0 - TAIL);
                let s = self.noise.quantile(uc, mu);
                let (phi, dphi) = self.phi_at(s);
                let slope = if dphi == 0.0 {
                    0.0
                } else {
                    dphi * self.noise.quantile_mean_derivative(uc, mu)
                };
                [phi, slope]
            },
            0.0,
            1.0,
            tol,
            SIMPSON_DEPTH,
        )?;
        Ok((v[0], v[1]))
    }

    /// Tabulates `g` on `[0, top]` for fast repeated evaluation.
    pub(crate) fn prepare_gain_curve(&mut self, top: f64) -> Result<(), QuadError> {
        if self.kernel.is_flat() {
            return Ok(());
        }
        let curve = HermiteTable::try_tabulate(0.0, top, self.settings.gain_points, |m| self.gain_and_slope(m))?;
        self.gain_curve = Some(curve);
        Ok(())
    }

    /// `g(μ)`, from the tabulated curve when it covers `mu`.
    pub(crate) fn gain(&self, mu: f64) -> Result<f64, QuadError> {
        if self.kernel.is_flat() {
            return Ok(self.kernel.phi(0.0));
        }
        match &self.gain_curve {
            Some(c) if mu <= c.upper() => Ok(c.value(mu)),
            _ => self.gain_and_slope(mu).map(|v| v.0),
        }
    }

    pub(crate) fn gain_is_flat(&self) -> bool {
        self.kernel.is_flat()
    }
}
