//! Rayleigh law `σ_s` (the characteristic measure of the Kingman algebra) and
//! Rayleighian laws, its componentwise-scaled products on `R^{+k}`.
//!
//! Parameterization: a Rayleighian law with scale vector `λ` is the law
//! whose radial characteristic function is `exp(-½ Σ λ_j² t_j²)`. Its j-th
//! component is `T_c σ_s` with `c = λ_j √(2(s+1))`, because `T_c σ_s` has
//! radial characteristic function `exp(-c² t² / (4(s+1)))`. The
//! k-dimensional Rayleigh law `σ_s × ... × σ_s` is therefore the Rayleighian
//! law with every `λ_j = 1/√(2(s+1))`.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::gamma_lr;

use crate::convolution::SampleBatch;
use crate::error::{domain, Error, Result};
use crate::kernel::KingmanOrder;

/// The Rayleigh law `σ_s` with density
/// `2 (s+1)^{s+1} / Γ(s+1) · x^{2s+1} exp(-(s+1) x²)` on `(0, ∞)`.
#[derive(Clone, Debug)]
pub struct RayleighLaw {
    order: KingmanOrder,
    ln_norm: f64,
    squared: Gamma<f64>,
}

impl RayleighLaw {
    pub fn new(order: KingmanOrder) -> Self {
        let a = order.s() + 1.0;
        let ln_norm = std::f64::consts::LN_2 + a * a.ln() - statrs::function::gamma::ln_gamma(a);
        // X² ~ Gamma(shape s+1, rate s+1).
        let squared = Gamma::new(a, 1.0 / a).expect("positive Gamma parameters");
        Self {
            order,
            ln_norm,
            squared,
        }
    }

    pub fn order(&self) -> KingmanOrder {
        self.order
    }

    /// Density at `x ≥ 0` (no argument checks).
    pub fn density(&self, x: f64) -> f64 {
        let s = self.order.s();
        self.ln_norm.exp() * x.powf(2.0 * s + 1.0) * (-(s + 1.0) * x * x).exp()
    }

    /// `P(X ≤ x)`, the regularized incomplete gamma `P(s+1, (s+1)x²)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let a = self.order.s() + 1.0;
        gamma_lr(a, a * x * x)
    }

    /// `exp(-t² / (4(s+1)))`.
    pub fn radchf(&self, t: f64) -> f64 {
        (-t * t / (4.0 * (self.order.s() + 1.0))).exp()
    }

    /// `n` independent draws as a one-dimensional batch.
    pub fn sample_batch(&self, n: usize, seed: u64) -> Result<SampleBatch> {
        SampleBatch::generate(self.order, 1, n, seed, "rayleigh", |rng, row| {
            row[0] = self.sample(rng);
        })
    }
}

impl Distribution<f64> for RayleighLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.squared.sample(rng).sqrt()
    }
}

pub fn rayleigh_density(law: &RayleighLaw, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return domain(format!("Rayleigh density needs a finite x >= 0, got {x}"));
    }
    Ok(law.density(x))
}

pub fn sample_rayleigh<R: Rng + ?Sized>(law: &RayleighLaw, rng: &mut R) -> f64 {
    law.sample(rng)
}

pub fn rayleigh_radchf(law: &RayleighLaw, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("radial argument must be finite and >= 0, got {t}"));
    }
    Ok(law.radchf(t))
}

/// Product law `T_{c_1}σ_s × ... × T_{c_k}σ_s` described by its scale vector
/// `λ` (see the module docs for the relation between `c_j` and `λ_j`).
#[derive(Clone, Debug)]
pub struct RayleighianLaw {
    base: RayleighLaw,
    scales: Vec<f64>,
}

impl RayleighianLaw {
    pub fn new(order: KingmanOrder, scales: Vec<f64>) -> Result<Self> {
        if scales.is_empty() {
            return domain("Rayleighian law needs at least one component");
        }
        if let Some(bad) = scales.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
            return domain(format!("scales must be finite and >= 0, got {bad}"));
        }
        Ok(Self {
            base: RayleighLaw::new(order),
            scales,
        })
    }

    /// The k-dimensional Rayleigh law `σ_s × ... × σ_s`.
    pub fn rayleigh(order: KingmanOrder, k: usize) -> Result<Self> {
        let l = 1.0 / (2.0 * (order.s() + 1.0)).sqrt();
        Self::new(order, vec![l; k])
    }

    pub fn order(&self) -> KingmanOrder {
        self.base.order
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Multiplier applied to a `σ_s` draw in component `j`.
    pub fn component_scale(&self, j: usize) -> f64 {
        self.scales[j] * (2.0 * (self.base.order.s() + 1.0)).sqrt()
    }

    /// `exp(-½ Σ λ_j² t_j²)`.
    pub fn radchf(&self, t: &[f64]) -> Result<f64> {
        check_radial_arg(t, self.dim())?;
        Ok(self.log_radchf_unchecked(t).exp())
    }

    fn log_radchf_unchecked(&self, t: &[f64]) -> f64 {
        -0.5 * self
            .scales
            .iter()
            .zip(t)
            .map(|(l, t)| l * l * t * t)
            .sum::<f64>()
    }

    /// Fills `out` with one draw.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let root = (2.0 * (self.base.order.s() + 1.0)).sqrt();
        for (o, l) in out.iter_mut().zip(&self.scales) {
            *o = l * root * self.base.sample(rng);
        }
    }

    pub fn sample_batch(&self, n: usize, seed: u64) -> Result<SampleBatch> {
        SampleBatch::generate(self.order(), self.dim(), n, seed, "rayleighian", |rng, row| {
            self.sample_into(rng, row)
        })
    }
}

pub(crate) fn check_radial_arg(t: &[f64], dim: usize) -> Result<()> {
    if t.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: t.len(),
        });
    }
    if let Some(bad) = t.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return domain(format!("radial arguments must be finite and >= 0, got {bad}"));
    }
    Ok(())
}

pub fn rayleighian_radchf(law: &RayleighianLaw, t: &[f64]) -> Result<f64> {
    law.radchf(t)
}

pub fn sample_rayleighian<R: Rng + ?Sized>(law: &RayleighianLaw, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; law.dim()];
    law.sample_into(rng, &mut out);
    out
}

/// Density of the k-dimensional Rayleigh law, the product of one-dimensional
/// Rayleigh densities.
pub fn kdim_rayleigh_density(order: KingmanOrder, x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return domain("point must have at least one component");
    }
    let law = RayleighLaw::new(order);
    x.iter().try_fold(1.0, |acc, &xj| Ok(acc * rayleigh_density(&law, xj)?))
}
