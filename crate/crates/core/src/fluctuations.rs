//! Running suprema, exponential killing and the empirical Wiener–Hopf
//! factorization for symmetric Lévy processes.
//!
//! For an independent exponential time `e_p` the pairs `(Ḡ, X̄)` (last time
//! of the maximum, maximum) and `(e_p - Ḡ, X̄ - X_{e_p})` are independent, and
//! since `X_{e_p} = X̄ - (X̄ - X_{e_p})`,
//!
//! `E exp(iν e_p + iθ X_{e_p}) = Ψ⁺(ν, θ) Ψ⁻(ν, -θ) = p / (p - iν + ψ(θ))`
//!
//! where `Ψ⁺` and `Ψ⁻` are the joint characteristic functions of the two
//! pairs.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::par;
use crate::processes::{PathGrid, SymmetricLevySpec};
use crate::rng::StreamSeed;
use crate::stats::{self, ComplexEstimate};

/// Absolute tolerance for treating a state as equal to the running maximum.
pub const TIE_TOL: f64 = 1e-12;

/// Online maximum tracking the last time it is attained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunningSup {
    pub value: f64,
    pub time: f64,
}

impl RunningSup {
    pub fn new(t0: f64, x0: f64) -> Self {
        RunningSup { value: x0, time: t0 }
    }

    pub fn update(&mut self, t: f64, x: f64) {
        if x > self.value + TIE_TOL {
            self.value = x;
            self.time = t;
        } else if x >= self.value - TIE_TOL {
            self.value = self.value.max(x);
            self.time = t;
        }
    }
}

/// `(max state, last grid time attaining it)` of a scalar path.
pub fn running_sup(path: &PathGrid) -> Result<(f64, f64)> {
    if path.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: path.dim(),
        });
    }
    let times = path.times();
    let states = path.states();
    let (&t0, &x0) = times
        .first()
        .zip(states.first())
        .ok_or_else(|| Error::InvalidGrid("empty path".into()))?;
    let mut sup = RunningSup::new(t0, x0);
    for (&t, &x) in times.iter().zip(states).skip(1) {
        sup.update(t, x);
    }
    Ok((sup.value, sup.time))
}

/// Exponential time with rate `p`.
pub fn sample_exponential_time<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return domain(format!("killing rate must be positive and finite, got {p}"));
    }
    Ok(Exp::new(p).expect("positive rate").sample(rng))
}

/// One harvested path: the ascending pair `(g_bar, x_bar)` and the
/// descending pair `(g_comp, x_comp)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhRow {
    pub g_bar: f64,
    pub x_bar: f64,
    pub g_comp: f64,
    pub x_comp: f64,
}

impl WhRow {
    /// The killing time `e_p`.
    pub fn killing_time(&self) -> f64 {
        self.g_bar + self.g_comp
    }

    /// The endpoint `X_{e_p}`.
    pub fn endpoint(&self) -> f64 {
        self.x_bar - self.x_comp
    }
}

/// Harvested Wiener–Hopf samples with their provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct WhSamplePairs {
    pub p: f64,
    pub dt: f64,
    pub seed: u64,
    pub spec: Option<SymmetricLevySpec>,
    pub rows: Vec<WhRow>,
}

impl WhSamplePairs {
    pub fn new(p: f64, rows: Vec<WhRow>) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return domain(format!("killing rate must be positive, got {p}"));
        }
        Ok(WhSamplePairs {
            p,
            dt: 0.0,
            seed: 0,
            spec: None,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Negative control: the descending columns replaced by copies of the
    /// ascending ones, so the two pairs are perfectly dependent.
    pub fn duplicated(&self) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| WhRow {
                g_comp: r.g_bar,
                x_comp: r.x_bar,
                ..*r
            })
            .collect();
        WhSamplePairs { rows, ..self.clone() }
    }

    /// Positive control: descending pairs randomly re-paired with ascending
    /// ones, which forces independence.
    pub fn shuffled(&self, seed: u64) -> Self {
        use rand::seq::SliceRandom;
        let mut desc: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.g_comp, r.x_comp)).collect();
        desc.shuffle(&mut StreamSeed::new(seed).derive("shuffle").stream(0));
        let rows = self
            .rows
            .iter()
            .zip(desc)
            .map(|(r, (g, x))| WhRow {
                g_comp: g,
                x_comp: x,
                ..*r
            })
            .collect();
        WhSamplePairs { rows, ..self.clone() }
    }
}

/// Simulates one path up to `e_p` on the grid `{k·dt} ∪ {e_p}` and returns
/// its row. Jumps use exact exponential waiting times and are attributed to
/// the grid cell that contains them.
fn harvest_one<R: Rng + ?Sized>(
    spec: &SymmetricLevySpec,
    e_p: f64,
    dt: f64,
    rng: &mut R,
    next_jump: &mut [f64],
) -> WhRow {
    for (n, a) in next_jump.iter_mut().zip(&spec.jump_atoms) {
        *n = Exp::new(a.rate).expect("positive rate").sample(rng);
    }
    let mut sup = RunningSup::new(0.0, 0.0);
    let (mut t, mut x) = (0.0, 0.0);
    let mut step = 0u64;
    while t < e_p {
        step += 1;
        let t_next = (step as f64 * dt).min(e_p);
        let h = t_next - t;
        if spec.sigma > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            x += spec.sigma * h.sqrt() * z;
        }
        for (n, a) in next_jump.iter_mut().zip(&spec.jump_atoms) {
            while *n <= t_next {
                x += if rng.random::<bool>() { a.v } else { -a.v };
                *n += Exp::new(a.rate).expect("positive rate").sample(rng);
            }
        }
        t = t_next;
        sup.update(t, x);
    }
    WhRow {
        g_bar: sup.time,
        x_bar: sup.value,
        g_comp: e_p - sup.time,
        x_comp: sup.value - x,
    }
}

/// Simulates `n_paths` independent paths killed at independent `e_p`.
/// Killing times come from their own stream so they do not depend on the
/// path randomness.
pub fn harvest_wh_pairs(
    spec: &SymmetricLevySpec,
    p: f64,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<WhSamplePairs> {
    spec.validate()?;
    if !(p > 0.0) || !p.is_finite() {
        return domain(format!("killing rate must be positive, got {p}"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidGrid(format!("step must be positive, got {dt}")));
    }
    if n_paths == 0 {
        return domain("need at least one path");
    }
    let root = StreamSeed::new(seed);
    let killing = root.derive("killing");
    let paths = root.derive("wh-paths");
    let chunks = par::map_chunks(n_paths, par::PATH_CHUNK, |ci, range| {
        let mut krng = killing.stream(ci as u64);
        let mut prng = paths.stream(ci as u64);
        let mut next_jump = vec![0.0; spec.jump_atoms.len()];
        range
            .map(|_| {
                let e_p = sample_exponential_time(p, &mut krng).expect("validated rate");
                harvest_one(spec, e_p, dt, &mut prng, &mut next_jump)
            })
            .collect::<Vec<_>>()
    });
    Ok(WhSamplePairs {
        p,
        dt,
        seed,
        spec: Some(spec.clone()),
        rows: chunks.into_iter().flatten().collect(),
    })
}

/// Which pair of columns a factor is computed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WhSide {
    /// `(Ḡ, X̄)`
    Ascending,
    /// `(e_p - Ḡ, X̄ - X_{e_p})`
    Descending,
}

fn side_values(row: &WhRow, side: WhSide) -> (f64, f64) {
    match side {
        WhSide::Ascending => (row.g_bar, row.x_bar),
        WhSide::Descending => (row.g_comp, row.x_comp),
    }
}

/// Empirical `E exp(iνG + iθH)` over the chosen columns, with its standard
/// error.
pub fn wh_factor_estimate(
    pairs: &WhSamplePairs,
    side: WhSide,
    nu: f64,
    theta: f64,
) -> Result<ComplexEstimate> {
    if pairs.is_empty() {
        return domain("no Wiener-Hopf samples");
    }
    Ok(stats::complex_estimate(pairs.len(), |i| {
        let (g, h) = side_values(&pairs.rows[i], side);
        Complex64::from_polar(1.0, nu * g + theta * h)
    }))
}

pub fn wh_factor(pairs: &WhSamplePairs, side: WhSide, nu: f64, theta: f64) -> Result<Complex64> {
    Ok(wh_factor_estimate(pairs, side, nu, theta)?.mean)
}

/// `p / (p - iν + ψ(θ))`.
pub fn wh_target(spec: &SymmetricLevySpec, p: f64, nu: f64, theta: f64) -> Complex64 {
    Complex64::new(p, 0.0) / Complex64::new(p + spec.psi(theta), -nu)
}

/// `|Ψ⁺(ν, θ) Ψ⁻(ν, -θ) - p/(p - iν + ψ(θ))|` from empirical factors.
pub fn wh_identity_residual(
    spec: &SymmetricLevySpec,
    p: f64,
    nu: f64,
    theta: f64,
    pairs: &WhSamplePairs,
) -> Result<f64> {
    let up = wh_factor(pairs, WhSide::Ascending, nu, theta)?;
    let down = wh_factor(pairs, WhSide::Descending, nu, -theta)?;
    Ok((up * down - wh_target(spec, p, nu, theta)).norm())
}

/// Grid of `(ν, θ)` used for each side of the independence check.
pub const INDEPENDENCE_GRID: [(f64, f64); 4] = [(0.0, 0.5), (0.0, 1.0), (0.5, 0.5), (1.0, 1.0)];

#[derive(Clone, Debug, PartialEq)]
pub struct IndependencePoint {
    pub ascending: (f64, f64),
    pub descending: (f64, f64),
    pub deviation: f64,
    pub std_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceReport {
    pub points: Vec<IndependencePoint>,
    pub max_deviation: f64,
    /// Largest deviation in units of its standard error.
    pub max_z: f64,
    pub pass: bool,
}

/// Compares the joint ch.f. of the two pairs with the product of the
/// marginal ch.f.s on a 16-point grid. Standard errors come from the
/// influence function of `mean(AB) - mean(A) mean(B)`; the check passes when
/// every deviation is within 4 of them.
pub fn independence_check(pairs: &WhSamplePairs) -> Result<IndependenceReport> {
    if pairs.len() < 2 {
        return domain("independence check needs at least two samples");
    }
    let mut points = Vec::with_capacity(INDEPENDENCE_GRID.len().pow(2));
    for &(nu, th) in &INDEPENDENCE_GRID {
        let a_mean = wh_factor(pairs, WhSide::Ascending, nu, th)?;
        for &(nu2, th2) in &INDEPENDENCE_GRID {
            let b_mean = wh_factor(pairs, WhSide::Descending, nu2, th2)?;
            let influence = stats::complex_estimate(pairs.len(), |i| {
                let r = &pairs.rows[i];
                let a = Complex64::from_polar(1.0, nu * r.g_bar + th * r.x_bar);
                let b = Complex64::from_polar(1.0, nu2 * r.g_comp + th2 * r.x_comp);
                a * b - a_mean * b - b_mean * a
            });
            let deviation = (influence.mean + a_mean * b_mean).norm();
            points.push(IndependencePoint {
                ascending: (nu, th),
                descending: (nu2, th2),
                deviation,
                std_err: influence.std_err,
            });
        }
    }
    let max_deviation = points.iter().map(|p| p.deviation).fold(0.0, f64::max);
    let max_z = points
        .iter()
        .map(|p| p.deviation / p.std_err.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(IndependenceReport {
        points,
        max_deviation,
        max_z,
        pass: max_z <= 4.0,
    })
}
