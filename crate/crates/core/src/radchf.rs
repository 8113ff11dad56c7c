//! Radial characteristic functions, the embedding of the Kingman algebra
//! into ordinary convolution on `R^k`, and the Lévy–Khinchine representation
//! of infinitely divisible laws.
//!
//! The radial characteristic function of a law `G` on `R^{+k}` is
//! `t ↦ ∫ Π_j Λ_s(t_j x_j) G(dx)`. It turns `⊙_{s,k}` into pointwise
//! multiplication and coincides with the ordinary Fourier transform of
//! `F_{s,k}(G)`, the law of `(θ_1 X_1, ..., θ_k X_k)` with independent
//! mixing variates `θ_j`.
//!
//! The Gaussian image of the Rayleigh law under this embedding has variance
//! `1/(2(s+1))` per coordinate (its Fourier transform is
//! `exp(-t²/(4(s+1)))`); that is the normalization used throughout.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::convolution::{convolve_batches, signed_image, SampleBatch, SignedBatch};
use crate::distributions::check_radial_arg;
use crate::error::{domain, Error, Result};
use crate::kernel::{KingmanOrder, ThetaSampler};
use crate::rng::StreamSeed;
use crate::stats::{self, ComplexEstimate, Estimate};

/// Per-coordinate values of the default comparison grid.
pub const T_GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// Tensor grid `T_GRID^k`.
pub fn default_t_grid(k: usize) -> Vec<Vec<f64>> {
    (0..k).fold(vec![Vec::new()], |acc, _| {
        acc.into_iter()
            .flat_map(|prefix| {
                T_GRID.iter().map(move |&t| {
                    let mut p = prefix.clone();
                    p.push(t);
                    p
                })
            })
            .collect()
    })
}

/// A point mass of the (atomic) Lévy measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevyAtom {
    pub x: Vec<f64>,
    pub m: f64,
}

/// The pair `[M, λ]` determining a `⊙_{s,k}`-infinitely divisible law:
/// an atomic Lévy measure `M` on `R^{+k} \ {0}` and a Rayleighian scale
/// vector `λ`.
///
/// The radial characteristic function is `exp(-ψ(t))` with
/// `ψ(t) = ½ Σ λ_j² t_j² + Σ_i m_i (1 - Π_j Λ_s(t_j x_ij)) (1+‖x_i‖²)/‖x_i‖²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "PairRepr", try_from = "PairRepr")]
pub struct LevyPair {
    pub order: KingmanOrder,
    pub dim: usize,
    pub lambda: Vec<f64>,
    pub atoms: Vec<LevyAtom>,
}

#[derive(Serialize, Deserialize)]
struct PairRepr {
    s: f64,
    k: usize,
    lambda: Vec<f64>,
    #[serde(default)]
    atoms: Vec<LevyAtom>,
}

impl From<LevyPair> for PairRepr {
    fn from(p: LevyPair) -> Self {
        PairRepr {
            s: p.order.s(),
            k: p.dim,
            lambda: p.lambda,
            atoms: p.atoms,
        }
    }
}

impl TryFrom<PairRepr> for LevyPair {
    type Error = Error;
    fn try_from(r: PairRepr) -> Result<Self> {
        Ok(LevyPair {
            order: KingmanOrder::new(r.s)?,
            dim: r.k,
            lambda: r.lambda,
            atoms: r.atoms,
        })
    }
}

/// Outcome of [`check_levy_measure`].
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureCheck {
    pub valid: bool,
    pub diagnostics: Vec<String>,
    /// `Σ m_i ‖x_i‖² / (1 + ‖x_i‖²)`.
    pub weighted_mass: f64,
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

impl LevyPair {
    pub fn new(order: KingmanOrder, lambda: Vec<f64>, atoms: Vec<LevyAtom>) -> Result<Self> {
        let pair = LevyPair {
            order,
            dim: lambda.len(),
            lambda,
            atoms,
        };
        pair.validate()?;
        Ok(pair)
    }

    /// `[0, λ]`: a Rayleighian law.
    pub fn rayleighian(order: KingmanOrder, lambda: Vec<f64>) -> Result<Self> {
        Self::new(order, lambda, Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        let check = check_levy_measure(self);
        if check.valid {
            Ok(())
        } else {
            Err(Error::InvalidPair(check.diagnostics.join("; ")))
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.atoms.is_empty() && self.lambda.iter().all(|&l| l == 0.0)
    }

    /// Compound-Poisson intensities `m_i (1+‖x_i‖²)/‖x_i‖²`.
    pub fn jump_rates(&self) -> Vec<f64> {
        self.atoms
            .iter()
            .map(|a| {
                let r2 = norm_sq(&a.x);
                a.m * (1.0 + r2) / r2
            })
            .collect()
    }

    /// The pair of `μ_t`: masses times `t`, scales times `√t`.
    pub fn at_time(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return domain(format!("time must be finite and >= 0, got {t}"));
        }
        Ok(LevyPair {
            order: self.order,
            dim: self.dim,
            lambda: self.lambda.iter().map(|l| l * t.sqrt()).collect(),
            atoms: self
                .atoms
                .iter()
                .filter(|_| t > 0.0)
                .map(|a| LevyAtom {
                    x: a.x.clone(),
                    m: a.m * t,
                })
                .collect(),
        })
    }

    /// `ψ(t) = -log μ̂(t)` without argument checks.
    pub fn exponent(&self, t: &[f64]) -> f64 {
        let gaussian: f64 = 0.5
            * self
                .lambda
                .iter()
                .zip(t)
                .map(|(l, t)| l * l * t * t)
                .sum::<f64>();
        let jumps: f64 = self
            .atoms
            .iter()
            .zip(self.jump_rates())
            .map(|(a, rate)| {
                let prod: f64 = a
                    .x
                    .iter()
                    .zip(t)
                    .map(|(x, t)| self.order.lambda(t * x))
                    .product();
                rate * (1.0 - prod)
            })
            .sum();
        gaussian + jumps
    }
}

/// Validates a pair: consistent dimensions, nonnegative finite scales,
/// positive finite masses at nonnegative locations, no atom at the origin,
/// and a finite `∫ ‖x‖²/(1+‖x‖²) dM`.
pub fn check_levy_measure(pair: &LevyPair) -> MeasureCheck {
    let mut diagnostics = Vec::new();
    if pair.dim == 0 {
        diagnostics.push("dimension k must be at least 1".to_string());
    }
    if pair.lambda.len() != pair.dim {
        diagnostics.push(format!(
            "lambda has {} entries, expected {}",
            pair.lambda.len(),
            pair.dim
        ));
    }
    for (j, l) in pair.lambda.iter().enumerate() {
        if !(*l >= 0.0) || !l.is_finite() {
            diagnostics.push(format!("lambda[{j}] = {l} is not a finite nonnegative number"));
        }
    }
    let mut weighted_mass = 0.0;
    for (i, a) in pair.atoms.iter().enumerate() {
        if a.x.len() != pair.dim {
            diagnostics.push(format!("atom {i} has {} coordinates, expected {}", a.x.len(), pair.dim));
        }
        if a.x.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            diagnostics.push(format!("atom {i} is not a finite point of the nonnegative orthant"));
        }
        if !(a.m > 0.0) || !a.m.is_finite() {
            diagnostics.push(format!("atom {i} has mass {} (must be finite and > 0)", a.m));
        }
        let r2 = norm_sq(&a.x);
        if r2 == 0.0 {
            diagnostics.push(format!("atom {i} sits at the origin; M must not charge 0"));
        } else {
            weighted_mass += a.m * r2 / (1.0 + r2);
        }
    }
    if !weighted_mass.is_finite() {
        diagnostics.push("weighted mass of M is not finite".to_string());
    }
    MeasureCheck {
        valid: diagnostics.is_empty(),
        diagnostics,
        weighted_mass,
    }
}

/// `exp(-ψ(t))` for the pair.
pub fn levy_khinchine_radchf(pair: &LevyPair, t: &[f64]) -> Result<f64> {
    pair.validate()?;
    check_radial_arg(t, pair.dim)?;
    Ok((-pair.exponent(t)).exp())
}

/// Empirical radial characteristic function with its standard error.
pub fn radchf_estimate(batch: &SampleBatch, t: &[f64]) -> Result<Estimate> {
    check_radial_arg(t, batch.dim())?;
    let order = batch.order();
    Ok(stats::estimate(batch.n(), |i| {
        batch
            .row(i)
            .iter()
            .zip(t)
            .map(|(x, t)| order.lambda(t * x))
            .product()
    }))
}

/// `(1/N) Σ_rows Π_j Λ_s(t_j x_j)`.
pub fn radchf_empirical(batch: &SampleBatch, t: &[f64]) -> Result<f64> {
    Ok(radchf_estimate(batch, t)?.mean)
}

/// Samples `F_{s,k}(G)` by multiplying each coordinate with an independent
/// `θ_s` draw.
pub fn embed_fsk(batch: &SampleBatch, seed: u64) -> SignedBatch {
    let theta = ThetaSampler::new(batch.order());
    signed_image(batch.dim(), batch.data(), seed, "embed", move |rng, x| {
        x * theta.sample(rng)
    })
}

/// Empirical Fourier transform `(1/N) Σ exp(i⟨t, row⟩)` with its standard
/// error.
pub fn chf_estimate(batch: &SignedBatch, t: &[f64]) -> Result<ComplexEstimate> {
    if t.len() != batch.dim() {
        return Err(Error::DimensionMismatch {
            expected: batch.dim(),
            got: t.len(),
        });
    }
    if t.iter().any(|v| !v.is_finite()) {
        return domain("Fourier arguments must be finite");
    }
    Ok(stats::complex_estimate(batch.n(), |i| {
        let phase: f64 = batch.row(i).iter().zip(t).map(|(x, t)| x * t).sum();
        Complex64::from_polar(1.0, phase)
    }))
}

pub fn chf_empirical(batch: &SignedBatch, t: &[f64]) -> Result<Complex64> {
    Ok(chf_estimate(batch, t)?.mean)
}

/// Result of [`is_stable_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    /// Scale `c` minimizing the sup-distance on the grid.
    pub c: f64,
    /// `max_t |R_{T_a G ⊙ T_b G}(t) - R_{T_c G}(t)|` at the optimal `c`.
    pub residual: f64,
    pub tolerance: f64,
    pub stable: bool,
}

const STABILITY_SCAN_POINTS: usize = 31;
const STABILITY_GOLDEN_STEPS: usize = 24;

/// Looks for `c` with `T_a G ⊙ T_b G = T_c G`, comparing empirical radial
/// characteristic functions on the default grid. The two factors use
/// independent copies of `G` (the batch and a random row permutation).
pub fn is_stable_check(
    batch: &SampleBatch,
    a: f64,
    b: f64,
    tol: f64,
    seed: u64,
) -> Result<StabilityReport> {
    for v in [a, b] {
        if !(v >= 0.0) || !v.is_finite() {
            return domain(format!("scales must be finite and >= 0, got {v}"));
        }
    }
    if a + b == 0.0 {
        return domain("at least one of a, b must be positive");
    }
    let root = StreamSeed::new(seed);
    let mut perm: Vec<usize> = (0..batch.n()).collect();
    perm.shuffle(&mut root.derive("partner").stream(0));
    let partner = batch.permuted(&perm);
    let conv = convolve_batches(
        &batch.scaled(a)?,
        &partner.scaled(b)?,
        root.derive("convolve").seed_value(),
    )?;

    let grid = default_t_grid(batch.dim());
    let target: Vec<f64> = grid
        .iter()
        .map(|t| radchf_empirical(&conv, t))
        .collect::<Result<_>>()?;
    let residual = |c: f64| -> f64 {
        grid.iter()
            .zip(&target)
            .map(|(t, want)| {
                let ct: Vec<f64> = t.iter().map(|v| c * v).collect();
                let got = radchf_empirical(batch, &ct).expect("grid matches batch dimension");
                (got - want).abs()
            })
            .fold(0.0, f64::max)
    };

    let hi = 1.5 * (a + b);
    let step = hi / (STABILITY_SCAN_POINTS - 1) as f64;
    let (mut best_c, mut best_r) = (0.0, f64::INFINITY);
    for i in 0..STABILITY_SCAN_POINTS {
        let c = step * i as f64;
        let r = residual(c);
        if r < best_r {
            best_c = c;
            best_r = r;
        }
    }
    // Golden-section refinement inside the bracketing scan cells.
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut up) = ((best_c - step).max(0.0), best_c + step);
    let mut x1 = up - inv_phi * (up - lo);
    let mut x2 = lo + inv_phi * (up - lo);
    let (mut f1, mut f2) = (residual(x1), residual(x2));
    for _ in 0..STABILITY_GOLDEN_STEPS {
        if f1 <= f2 {
            up = x2;
            x2 = x1;
            f2 = f1;
            x1 = up - inv_phi * (up - lo);
            f1 = residual(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (up - lo);
            f2 = residual(x2);
        }
    }
    for (c, r) in [(x1, f1), (x2, f2)] {
        if r < best_r {
            best_c = c;
            best_r = r;
        }
    }
    Ok(StabilityReport {
        c: best_c,
        residual: best_r,
        tolerance: tol,
        stable: best_r <= tol,
    })
}
