//! Path simulation on time grids: Brownian motion, Bessel processes as
//! Euclidean norms, Kingman–Lévy processes driven by a [`LevyPair`], and
//! one-dimensional symmetric Lévy processes given by their exponent.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::convolution::{combine_with, fill_rows, SampleBatch};
use crate::distributions::RayleighLaw;
use crate::error::{domain, Error, Result};
use crate::kernel::{KingmanOrder, ThetaSampler};
use crate::par;
use crate::radchf::LevyPair;
use crate::rng::StreamSeed;
use crate::stats;

/// Relative tolerance used to match a requested time against grid points.
const GRID_MATCH_TOL: f64 = 1e-9;

/// A sampled path: `states` holds `dim` values per grid time, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PathGrid {
    times: Vec<f64>,
    dim: usize,
    states: Vec<f64>,
    seed: u64,
}

pub fn validate_times(times: &[f64]) -> Result<()> {
    match times.first() {
        None => return Err(Error::InvalidGrid("empty time grid".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(Error::InvalidGrid(format!("grid must start at 0, got {t0}")))
        }
        _ => {}
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("grid times must be finite".into()));
    }
    if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!(
            "grid times must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// `0, dt, 2dt, ..., horizon` with the last point pinned to `horizon`.
pub fn uniform_times(horizon: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() || !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "need positive finite horizon and step, got {horizon} and {dt}"
        )));
    }
    let steps = (horizon / dt).round().max(1.0) as usize;
    let mut times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    times[steps] = horizon;
    validate_times(&times)?;
    Ok(times)
}

/// Index of the grid point equal to `t` (up to a relative 1e-9).
pub fn grid_index(times: &[f64], t: f64) -> Result<usize> {
    times
        .iter()
        .position(|&g| (g - t).abs() <= GRID_MATCH_TOL * t.abs().max(1.0))
        .ok_or_else(|| Error::InvalidGrid(format!("time {t} is not on the grid")))
}

impl PathGrid {
    pub fn new(times: Vec<f64>, dim: usize, states: Vec<f64>, seed: u64) -> Result<Self> {
        validate_times(&times)?;
        if dim == 0 {
            return domain("path dimension must be at least 1");
        }
        if states.len() != times.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: times.len() * dim,
                got: states.len(),
            });
        }
        Ok(PathGrid {
            times,
            dim,
            states,
            seed,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    /// State at grid time `t`.
    pub fn state_at(&self, t: f64) -> Result<&[f64]> {
        Ok(self.state(grid_index(&self.times, t)?))
    }

    pub fn component(&self, j: usize) -> Vec<f64> {
        self.states.chunks_exact(self.dim).map(|s| s[j]).collect()
    }

    /// Pointwise Euclidean norm of the states.
    pub fn norms(&self) -> PathGrid {
        PathGrid {
            times: self.times.clone(),
            dim: 1,
            states: self
                .states
                .chunks_exact(self.dim)
                .map(|s| s.iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect(),
            seed: self.seed,
        }
    }
}

/// `d`-dimensional Brownian motion with independent components of variance
/// `component_variance` per unit time.
pub fn simulate_brownian<R: Rng + ?Sized>(
    d: usize,
    times: &[f64],
    component_variance: f64,
    rng: &mut R,
) -> Result<PathGrid> {
    validate_times(times)?;
    if d == 0 {
        return domain("Brownian dimension must be at least 1");
    }
    if !(component_variance > 0.0) || !component_variance.is_finite() {
        return domain(format!("variance must be positive, got {component_variance}"));
    }
    let mut states = vec![0.0; times.len() * d];
    for i in 1..times.len() {
        let sd = (component_variance * (times[i] - times[i - 1])).sqrt();
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            states[i * d + j] = states[(i - 1) * d + j] + sd * z;
        }
    }
    PathGrid::new(times.to_vec(), d, states, 0)
}

/// Time normalization of the Brownian motion underlying a Bessel path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BesselScaling {
    /// Component variance `1/(2(s+1))`: `B_1` has the Rayleigh law and
    /// `B_t` has radial characteristic function `exp(-t x²/(4(s+1)))`.
    #[default]
    Kingman,
    /// Unit-variance components: radial transform `exp(-t x²/2)`.
    Standard,
}

impl BesselScaling {
    pub fn component_variance(self, order: KingmanOrder) -> f64 {
        match self {
            BesselScaling::Kingman => 1.0 / (2.0 * (order.s() + 1.0)),
            BesselScaling::Standard => 1.0,
        }
    }
}

fn bessel_dimension(order: KingmanOrder) -> Result<usize> {
    order.integer_dimension().map(|d| d as usize).ok_or_else(|| {
        Error::Unsupported(format!(
            "pathwise Bessel simulation needs an integer dimension 2(s+1), got {}",
            order.delta()
        ))
    })
}

/// The Brownian motion whose norm is the Bessel path of the given order.
pub fn bessel_brownian<R: Rng + ?Sized>(
    order: KingmanOrder,
    times: &[f64],
    scaling: BesselScaling,
    rng: &mut R,
) -> Result<PathGrid> {
    let d = bessel_dimension(order)?;
    simulate_brownian(d, times, scaling.component_variance(order), rng)
}

/// Scalar Bessel path `‖W_t‖` of dimension `2(s+1)`.
pub fn bessel_path<R: Rng + ?Sized>(
    order: KingmanOrder,
    times: &[f64],
    scaling: BesselScaling,
    rng: &mut R,
) -> Result<PathGrid> {
    Ok(bessel_brownian(order, times, scaling, rng)?.norms())
}

/// `‖W_s - W_u‖` for grid times `u < s`.
pub fn bessel_increment(path: &PathGrid, u: f64, s: f64) -> Result<f64> {
    if !(u < s) {
        return domain(format!("increment needs u < s, got u = {u}, s = {s}"));
    }
    let a = path.state_at(u)?;
    let b = path.state_at(s)?;
    Ok(a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>().sqrt())
}

/// Draws increments from `μ_dt` for a fixed pair.
#[derive(Clone, Debug)]
pub struct KlIncrementSampler {
    pair: LevyPair,
    theta: ThetaSampler,
    rayleigh: RayleighLaw,
    gauss_root: f64,
    cumulative: Vec<f64>,
    total_rate: f64,
}

impl KlIncrementSampler {
    pub fn new(pair: &LevyPair) -> Result<Self> {
        pair.validate()?;
        let rates = pair.jump_rates();
        let mut acc = 0.0;
        let cumulative = rates
            .iter()
            .map(|r| {
                acc += r;
                acc
            })
            .collect();
        Ok(KlIncrementSampler {
            theta: ThetaSampler::new(pair.order),
            rayleigh: RayleighLaw::new(pair.order),
            gauss_root: (2.0 * (pair.order.s() + 1.0)).sqrt(),
            cumulative,
            total_rate: acc,
            pair: pair.clone(),
        })
    }

    pub fn pair(&self) -> &LevyPair {
        &self.pair
    }

    /// Total compound-Poisson intensity.
    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    /// Writes a draw from `μ_dt` into `out`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R, out: &mut [f64]) {
        let sdt = dt.sqrt();
        for (o, l) in out.iter_mut().zip(&self.pair.lambda) {
            *o = if *l > 0.0 {
                l * sdt * self.gauss_root * self.rayleigh.sample(rng)
            } else {
                0.0
            };
        }
        if self.total_rate > 0.0 && dt > 0.0 {
            let jumps = Poisson::new(self.total_rate * dt)
                .expect("positive finite intensity")
                .sample(rng) as u64;
            for _ in 0..jumps {
                let u = rng.random::<f64>() * self.total_rate;
                let i = self
                    .cumulative
                    .partition_point(|&c| c <= u)
                    .min(self.cumulative.len() - 1);
                for (o, x) in out.iter_mut().zip(&self.pair.atoms[i].x) {
                    *o = combine_with(*o, *x, self.theta.sample(rng));
                }
            }
        }
    }

    /// Moves `state` by one transition of length `dt`; `scratch` holds the
    /// increment.
    pub fn step<R: Rng + ?Sized>(
        &self,
        state: &mut [f64],
        dt: f64,
        rng: &mut R,
        scratch: &mut [f64],
    ) {
        self.sample_increment(dt, rng, scratch);
        for (x, y) in state.iter_mut().zip(scratch.iter()) {
            *x = combine_with(*x, *y, self.theta.sample(rng));
        }
    }
}

/// Kingman–Lévy path started at 0.
pub fn simulate_kl_path<R: Rng + ?Sized>(
    pair: &LevyPair,
    times: &[f64],
    rng: &mut R,
) -> Result<PathGrid> {
    validate_times(times)?;
    let sampler = KlIncrementSampler::new(pair)?;
    let k = pair.dim;
    let mut states = vec![0.0; times.len() * k];
    let mut scratch = vec![0.0; k];
    for i in 1..times.len() {
        let (prev, next) = states.split_at_mut(i * k);
        let cur = &mut next[..k];
        cur.copy_from_slice(&prev[(i - 1) * k..]);
        sampler.step(cur, times[i] - times[i - 1], rng, &mut scratch);
    }
    PathGrid::new(times.to_vec(), k, states, 0)
}

/// One draw from `P(t, ·, x) = μ_t ⊙ δ_x`.
pub fn transition_sample<R: Rng + ?Sized>(
    pair: &LevyPair,
    t: f64,
    x: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("transition time must be positive, got {t}"));
    }
    if x.len() != pair.dim {
        return Err(Error::DimensionMismatch {
            expected: pair.dim,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return domain("transition start must lie in the nonnegative orthant");
    }
    let sampler = KlIncrementSampler::new(pair)?;
    let mut out = x.to_vec();
    let mut scratch = vec![0.0; pair.dim];
    sampler.step(&mut out, t, rng, &mut scratch);
    Ok(out)
}

/// Applies one transition of length `t` to every row of `from`.
pub fn transition_batch(
    pair: &LevyPair,
    t: f64,
    from: &SampleBatch,
    seed: u64,
) -> Result<SampleBatch> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("transition time must be positive, got {t}"));
    }
    if from.order() != pair.order {
        return Err(Error::OrderMismatch {
            left: from.order().s(),
            right: pair.order.s(),
        });
    }
    if from.dim() != pair.dim {
        return Err(Error::DimensionMismatch {
            expected: pair.dim,
            got: from.dim(),
        });
    }
    let sampler = KlIncrementSampler::new(pair)?;
    let k = pair.dim;
    let streams = StreamSeed::new(seed).derive("transition");
    let mut data = from.data().to_vec();
    par::for_each_chunk_mut(&mut data, par::ROW_CHUNK * k, |ci, chunk| {
        let mut rng = streams.stream(ci as u64);
        let mut scratch = vec![0.0; k];
        for row in chunk.chunks_exact_mut(k) {
            sampler.step(row, t, &mut rng, &mut scratch);
        }
    });
    SampleBatch::new(pair.order, k, data, seed)
}

/// Simulates `n_paths` independent paths and keeps the states at the grid
/// times listed in `record`. Path chunks use their own substreams.
fn path_marginals<F>(
    n_paths: usize,
    dim: usize,
    times: &[f64],
    record: &[f64],
    streams: StreamSeed,
    simulate: F,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&mut crate::rng::StreamRng) -> Result<PathGrid> + Sync + Send,
{
    validate_times(times)?;
    if n_paths == 0 {
        return domain("need at least one path");
    }
    let idx: Vec<usize> = record
        .iter()
        .map(|&t| grid_index(times, t))
        .collect::<Result<_>>()?;
    let chunks = par::map_chunks(n_paths, par::PATH_CHUNK, |ci, range| -> Result<Vec<Vec<f64>>> {
        let mut rng = streams.stream(ci as u64);
        let mut out = vec![Vec::with_capacity(range.len() * dim); idx.len()];
        for _ in range {
            let path = simulate(&mut rng)?;
            for (o, &i) in out.iter_mut().zip(&idx) {
                o.extend_from_slice(path.state(i));
            }
        }
        Ok(out)
    });
    let mut merged = vec![Vec::with_capacity(n_paths * dim); idx.len()];
    for chunk in chunks {
        for (m, c) in merged.iter_mut().zip(chunk?) {
            m.extend(c);
        }
    }
    Ok(merged)
}

/// Marginal samples of a Kingman–Lévy process at the grid times `record`.
pub fn kl_marginals(
    pair: &LevyPair,
    times: &[f64],
    record: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<SampleBatch>> {
    pair.validate()?;
    let streams = StreamSeed::new(seed).derive("kl-paths");
    path_marginals(n_paths, pair.dim, times, record, streams, |rng| {
        simulate_kl_path(pair, times, rng)
    })?
    .into_iter()
    .map(|data| SampleBatch::new(pair.order, pair.dim, data, seed))
    .collect()
}

/// Marginal samples of a Bessel process at the grid times `record`.
pub fn bessel_marginals(
    order: KingmanOrder,
    times: &[f64],
    record: &[f64],
    scaling: BesselScaling,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<SampleBatch>> {
    bessel_dimension(order)?;
    let streams = StreamSeed::new(seed).derive("bessel-paths");
    path_marginals(n_paths, 1, times, record, streams, |rng| {
        bessel_path(order, times, scaling, rng)
    })?
    .into_iter()
    .map(|data| SampleBatch::new(order, 1, data, seed))
    .collect()
}

/// Symmetric jump atom: jumps of size `±v` at total rate `rate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpAtom {
    pub v: f64,
    pub rate: f64,
}

/// Symmetric Lévy process on `R` with exponent
/// `ψ(x) = ½σ²x² + Σ rate·(1 - cos(x v))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricLevySpec {
    pub sigma: f64,
    #[serde(default)]
    pub jump_atoms: Vec<JumpAtom>,
}

impl SymmetricLevySpec {
    pub fn new(sigma: f64, jump_atoms: Vec<JumpAtom>) -> Result<Self> {
        let spec = SymmetricLevySpec { sigma, jump_atoms };
        spec.validate()?;
        Ok(spec)
    }

    pub fn brownian(sigma: f64) -> Result<Self> {
        Self::new(sigma, Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return domain(format!("sigma must be finite and >= 0, got {}", self.sigma));
        }
        for (i, a) in self.jump_atoms.iter().enumerate() {
            if !(a.v > 0.0) || !a.v.is_finite() || !(a.rate > 0.0) || !a.rate.is_finite() {
                return domain(format!(
                    "jump atom {i} needs finite v > 0 and rate > 0, got ({}, {})",
                    a.v, a.rate
                ));
            }
        }
        let mass: f64 = self
            .jump_atoms
            .iter()
            .map(|a| a.rate * a.v.powi(2).min(1.0))
            .sum();
        if !mass.is_finite() {
            return domain("jump measure does not integrate min(1, v²)");
        }
        Ok(())
    }

    /// Characteristic exponent.
    pub fn psi(&self, x: f64) -> f64 {
        0.5 * self.sigma * self.sigma * x * x
            + self
                .jump_atoms
                .iter()
                .map(|a| a.rate * (1.0 - (x * a.v).cos()))
                .sum::<f64>()
    }

    /// `E exp(i x X_t) = exp(-t ψ(x))`.
    pub fn chf(&self, x: f64, t: f64) -> f64 {
        (-t * self.psi(x)).exp()
    }

    /// Gaussian part of an increment of length `dt`.
    pub(crate) fn gaussian_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        let z: f64 = rng.sample(StandardNormal);
        self.sigma * dt.sqrt() * z
    }

    /// Jump part of an increment of length `dt`.
    pub(crate) fn jump_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        let mut sum = 0.0;
        for a in &self.jump_atoms {
            let count = Poisson::new(a.rate * dt)
                .expect("positive finite intensity")
                .sample(rng) as u64;
            for _ in 0..count {
                sum += if rng.random::<bool>() { a.v } else { -a.v };
            }
        }
        sum
    }
}

pub fn simulate_symmetric_levy_1d<R: Rng + ?Sized>(
    spec: &SymmetricLevySpec,
    times: &[f64],
    rng: &mut R,
) -> Result<PathGrid> {
    validate_times(times)?;
    spec.validate()?;
    let mut states = vec![0.0; times.len()];
    for i in 1..times.len() {
        let dt = times[i] - times[i - 1];
        states[i] = states[i - 1] + spec.gaussian_increment(dt, rng) + spec.jump_increment(dt, rng);
    }
    PathGrid::new(times.to_vec(), 1, states, 0)
}

/// Comparison of the Gaussian-plus-jumps construction against `exp(-tψ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionReport {
    /// `(x, empirical ch.f., exp(-tψ(x)))` per grid point.
    pub points: Vec<(f64, f64, f64)>,
    pub max_deviation: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Simulates the Gaussian and the compound-Poisson parts at time `t` on
/// independent streams, adds them, and compares the empirical ch.f. of the
/// sum with `exp(-tψ)` on the default grid. Passes at `4/√n`.
pub fn levy_ito_decompose_check(
    spec: &SymmetricLevySpec,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<DecompositionReport> {
    spec.validate()?;
    if !(t > 0.0) || !t.is_finite() || n == 0 {
        return domain("decomposition check needs t > 0 and n >= 1");
    }
    let root = StreamSeed::new(seed);
    let gaussian = fill_rows(n, 1, root.derive("gaussian-part"), |rng, row| {
        row[0] = spec.gaussian_increment(t, rng)
    });
    let jumps = fill_rows(n, 1, root.derive("jump-part"), |rng, row| {
        row[0] = spec.jump_increment(t, rng)
    });
    let sum: Vec<f64> = gaussian.iter().zip(&jumps).map(|(a, b)| a + b).collect();
    let points: Vec<(f64, f64, f64)> = crate::radchf::T_GRID
        .iter()
        .map(|&x| {
            // the law is symmetric so the real part carries the ch.f.
            let emp = stats::estimate(n, |i| (x * sum[i]).cos()).mean;
            (x, emp, spec.chf(x, t))
        })
        .collect();
    let max_deviation = points.iter().map(|p| (p.1 - p.2).abs()).fold(0.0, f64::max);
    let threshold = 4.0 / (n as f64).sqrt();
    Ok(DecompositionReport {
        points,
        max_deviation,
        threshold,
        pass: max_deviation <= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::RayleighianLaw;
    use crate::radchf::{default_t_grid, levy_khinchine_radchf, radchf_estimate, LevyAtom};
    use crate::rng::StreamSeed;
    use crate::stats::{ks_critical_one_sample, ks_critical_two_sample, ks_one_sample, ks_two_sample};

    fn order(s: f64) -> KingmanOrder {
        KingmanOrder::new(s).unwrap()
    }

    fn rng(i: u64) -> crate::rng::StreamRng {
        StreamSeed::new(99).stream(i)
    }

    #[test]
    fn grid_validation() {
        assert!(validate_times(&[]).is_err());
        assert!(validate_times(&[0.1, 0.2]).is_err());
        assert!(validate_times(&[0.0, 0.2, 0.2]).is_err());
        assert!(validate_times(&[0.0, 0.3, 0.2]).is_err());
        assert!(validate_times(&[0.0]).is_ok());
        let g = uniform_times(1.0, 0.01).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(grid_index(&g, 0.5).unwrap(), 50);
        assert!(grid_index(&g, 0.505).is_err());
        assert!(simulate_brownian(2, &[0.0, 1.0, 0.5], 1.0, &mut rng(0)).is_err());
    }

    #[test]
    fn brownian_moments() {
        let times = [0.0, 0.5, 1.5];
        let n = 20_000;
        let mut r = rng(1);
        let (mut sq, mut cross) = (0.0, 0.0);
        for _ in 0..n {
            let p = simulate_brownian(3, &times, 0.7, &mut r).unwrap();
            assert!(p.state(0).iter().all(|&x| x == 0.0));
            sq += p.state(2).iter().map(|x| x * x).sum::<f64>();
            let inc1 = p.state(1)[0];
            let inc2 = p.state(2)[0] - p.state(1)[0];
            cross += inc1 * inc2;
        }
        let want = 3.0 * 0.7 * 1.5;
        // Var ‖W‖² = 2 d v² t² for Gaussian components.
        let se = (2.0 * 3.0 * (0.7f64 * 1.5).powi(2) / n as f64).sqrt();
        assert!((sq / n as f64 - want).abs() < 4.0 * se);
        let se_cross = (0.7 * 0.5 * 0.7 * 1.0 / n as f64).sqrt();
        assert!((cross / n as f64).abs() < 4.0 * se_cross);
    }

    #[test]
    fn bessel_marginal_is_rayleigh() {
        const SEED: u64 = 6;
        for d in [2u32, 3, 4] {
            let o = KingmanOrder::from_dimension(d).unwrap();
            let law = RayleighLaw::new(o);
            let times = uniform_times(1.0, 0.25).unwrap();
            let m = bessel_marginals(o, &times, &[1.0], BesselScaling::Kingman, 20_000, SEED).unwrap();
            let ks = ks_one_sample(m[0].data(), |x| law.cdf(x));
            assert!(ks < ks_critical_one_sample(m[0].n(), 0.01), "d={d} ks={ks}");
            assert!(m[0].data().iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn bessel_radchf_and_scaling() {
        let o = KingmanOrder::from_dimension(3).unwrap();
        let times = [0.0, 0.7, 2.0];
        for scaling in [BesselScaling::Kingman, BesselScaling::Standard] {
            let m = bessel_marginals(o, &times, &[2.0], scaling, 40_000, 6).unwrap();
            let rate = match scaling {
                BesselScaling::Kingman => 1.0 / (4.0 * (o.s() + 1.0)),
                BesselScaling::Standard => 0.5,
            };
            for x in [0.5, 1.0, 2.0] {
                let e = radchf_estimate(&m[0], &[x]).unwrap();
                let want = (-2.0 * rate * x * x).exp();
                assert!((e.mean - want).abs() < 4.0 / (e.n as f64).sqrt(), "{scaling:?} {x}");
            }
        }
    }

    #[test]
    fn bessel_rejects_fractional_dimension() {
        let o = order(0.3);
        assert!(matches!(
            bessel_path(o, &[0.0, 1.0], BesselScaling::Kingman, &mut rng(0)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn bessel_increments() {
        let o = KingmanOrder::from_dimension(2).unwrap();
        let times = [0.0, 0.5, 1.0, 1.6];
        let w = bessel_brownian(o, &times, BesselScaling::Kingman, &mut rng(2)).unwrap();
        assert!(bessel_increment(&w, 1.0, 1.0).is_err());
        assert!(bessel_increment(&w, 1.0, 0.5).is_err());
        assert!(bessel_increment(&w, 0.3, 1.0).is_err());
        let b = w.norms();
        assert!((bessel_increment(&w, 0.0, 1.0).unwrap() - b.state(2)[0]).abs() < 1e-15);

        // |W_1.6 - W_0.5| has the law of B_1.1.
        let n = 20_000;
        let mut r = rng(3);
        let mut incs = Vec::with_capacity(n);
        let mut direct = Vec::with_capacity(n);
        for _ in 0..n {
            let w = bessel_brownian(o, &times, BesselScaling::Kingman, &mut r).unwrap();
            incs.push(bessel_increment(&w, 0.5, 1.6).unwrap());
            let v = bessel_path(o, &[0.0, 1.1], BesselScaling::Kingman, &mut r).unwrap();
            direct.push(v.state(1)[0]);
        }
        let ks = ks_two_sample(&incs, &direct);
        assert!(ks < ks_critical_two_sample(n, n, 0.01));
        let batch = SampleBatch::new(o, 1, incs, 0).unwrap();
        let e = radchf_estimate(&batch, &[1.0]).unwrap();
        let want = (-1.1 / (4.0 * (o.s() + 1.0))).exp();
        assert!((e.mean - want).abs() < 4.0 * e.std_err.max(1.0 / (n as f64).sqrt()));
    }

    fn test_pairs() -> Vec<LevyPair> {
        let o = order(0.5);
        vec![
            LevyPair::rayleighian(o, vec![0.8]).unwrap(),
            LevyPair::new(o, vec![0.0], vec![LevyAtom { x: vec![1.0], m: 1.0 }]).unwrap(),
            LevyPair::new(
                o,
                vec![0.5, 0.3],
                vec![LevyAtom { x: vec![1.0, 0.5], m: 0.6 }],
            )
            .unwrap(),
        ]
    }

    #[test]
    fn trivial_pair_gives_zero_path() {
        let pair = LevyPair::rayleighian(order(1.0), vec![0.0, 0.0]).unwrap();
        let p = simulate_kl_path(&pair, &uniform_times(1.0, 0.1).unwrap(), &mut rng(4)).unwrap();
        assert!(p.states().iter().all(|&x| x == 0.0));
        let x = transition_sample(&pair, 0.4, &[1.5, 2.0], &mut rng(4)).unwrap();
        assert_eq!(x, vec![1.5, 2.0]);
    }

    #[test]
    fn kl_paths_stay_in_orthant() {
        for pair in test_pairs() {
            let p = simulate_kl_path(&pair, &uniform_times(2.0, 0.01).unwrap(), &mut rng(5)).unwrap();
            assert!(p.states().iter().all(|&x| x >= 0.0 && x.is_finite()));
            assert!(p.state(0).iter().all(|&x| x == 0.0));
        }
        let bad = LevyPair {
            order: order(0.5),
            dim: 1,
            lambda: vec![0.0],
            atoms: vec![LevyAtom { x: vec![0.0], m: 1.0 }],
        };
        assert!(simulate_kl_path(&bad, &[0.0, 1.0], &mut rng(0)).is_err());
    }

    #[test]
    fn kl_marginals_match_levy_khinchine() {
        let times = uniform_times(1.0, 0.05).unwrap();
        for pair in test_pairs() {
            let m = kl_marginals(&pair, &times, &[0.5, 1.0], 20_000, 7).unwrap();
            for (batch, t) in m.iter().zip([0.5, 1.0]) {
                let scaled = pair.at_time(t).unwrap();
                for x in default_t_grid(pair.dim) {
                    let e = radchf_estimate(batch, &x).unwrap();
                    let want = levy_khinchine_radchf(&scaled, &x).unwrap();
                    assert!(
                        (e.mean - want).abs() < 4.0 / (e.n as f64).sqrt(),
                        "pair {pair:?} t={t} x={x:?}: {} vs {want}",
                        e.mean
                    );
                }
            }
        }
    }

    #[test]
    fn gaussian_marginals_are_grid_invariant() {
        let pair = LevyPair::rayleighian(order(0.5), vec![0.8]).unwrap();
        let coarse = kl_marginals(&pair, &uniform_times(1.0, 0.1).unwrap(), &[1.0], 20_000, 8).unwrap();
        let fine = kl_marginals(&pair, &uniform_times(1.0, 0.05).unwrap(), &[1.0], 20_000, 9).unwrap();
        let ks = ks_two_sample(coarse[0].data(), fine[0].data());
        assert!(ks < ks_critical_two_sample(20_000, 20_000, 0.01));
        let law = RayleighianLaw::new(order(0.5), vec![0.8]).unwrap();
        let exact = law.sample_batch(20_000, 10).unwrap();
        let ks = ks_two_sample(coarse[0].data(), exact.data());
        assert!(ks < ks_critical_two_sample(20_000, 20_000, 0.01));
    }

    #[test]
    fn chapman_kolmogorov() {
        for pair in test_pairs() {
            let start = SampleBatch::point_mass(pair.order, &vec![0.7; pair.dim], 20_000).unwrap();
            let two = transition_batch(&pair, 0.4, &transition_batch(&pair, 0.6, &start, 1).unwrap(), 2).unwrap();
            let one = transition_batch(&pair, 1.0, &start, 3).unwrap();
            for x in default_t_grid(pair.dim) {
                let a = radchf_estimate(&two, &x).unwrap();
                let b = radchf_estimate(&one, &x).unwrap();
                let se = stats::combined_std_err(a.std_err, b.std_err).max(1e-3);
                assert!((a.mean - b.mean).abs() <= 4.0 * se, "{pair:?} {x:?}");
            }
        }
    }

    #[test]
    fn transition_from_origin_is_mu_t() {
        let pair = test_pairs().remove(1);
        let start = SampleBatch::zeros(pair.order, 1, 20_000).unwrap();
        let b = transition_batch(&pair, 0.8, &start, 4).unwrap();
        let target = pair.at_time(0.8).unwrap();
        for x in default_t_grid(1) {
            let e = radchf_estimate(&b, &x).unwrap();
            assert!((e.mean - levy_khinchine_radchf(&target, &x).unwrap()).abs() < 4.0 / (e.n as f64).sqrt());
        }
        assert!(transition_sample(&pair, 0.0, &[1.0], &mut rng(0)).is_err());
        assert!(transition_sample(&pair, 1.0, &[1.0, 2.0], &mut rng(0)).is_err());
    }

    #[test]
    fn symmetric_levy_spec_validation_and_exponent() {
        assert!(SymmetricLevySpec::new(-1.0, vec![]).is_err());
        assert!(SymmetricLevySpec::new(1.0, vec![JumpAtom { v: 0.0, rate: 1.0 }]).is_err());
        let spec = SymmetricLevySpec::new(1.0, vec![JumpAtom { v: 1.0, rate: 1.0 }]).unwrap();
        assert!((spec.psi(1.0) - (0.5 + 1.0 - 1f64.cos())).abs() < 1e-15);
        let cp = SymmetricLevySpec::new(0.0, vec![JumpAtom { v: 1.0, rate: 1.0 }]).unwrap();
        assert!((cp.psi(std::f64::consts::PI) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_levy_marginals() {
        let n = 20_000;
        let times = uniform_times(1.5, 0.1).unwrap();
        let specs = [
            SymmetricLevySpec::brownian(1.0).unwrap(),
            SymmetricLevySpec::new(0.0, vec![JumpAtom { v: 1.0, rate: 2.0 }]).unwrap(),
        ];
        for spec in specs {
            let mut r = rng(11);
            let ends: Vec<f64> = (0..n)
                .map(|_| {
                    let p = simulate_symmetric_levy_1d(&spec, &times, &mut r).unwrap();
                    assert_eq!(p.state(0)[0], 0.0);
                    p.state(times.len() - 1)[0]
                })
                .collect();
            for x in [0.25, 0.5, 1.0, 2.0, 4.0] {
                let e = stats::estimate(n, |i| (x * ends[i]).cos()).mean;
                assert!((e - spec.chf(x, 1.5)).abs() < 4.0 / (n as f64).sqrt(), "{spec:?} {x}");
            }
        }
    }

    #[test]
    fn decomposition_check() {
        let specs = [
            SymmetricLevySpec::brownian(1.0).unwrap(),
            SymmetricLevySpec::new(0.0, vec![JumpAtom { v: 1.0, rate: 2.0 }]).unwrap(),
            SymmetricLevySpec::new(1.0, vec![JumpAtom { v: 1.0, rate: 1.0 }]).unwrap(),
        ];
        for spec in specs {
            let r = levy_ito_decompose_check(&spec, 1.0, 50_000, 12).unwrap();
            assert!(r.pass, "{r:?}");
            assert_eq!(r.points.len(), 5);
        }
    }
}
