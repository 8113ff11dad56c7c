//! The Kingman convolution `δ_x ∘_s δ_y`, its k-fold Cartesian product on
//! `R^{+k}`, and k-symmetrization.
//!
//! Measures are carried empirically as [`SampleBatch`]es. The point-mass
//! convolution `δ_x ∘_s δ_y` is the law of `sqrt(x² + 2uxy + y²)` with
//! `u ~ θ_s`; the product operation acts independently in each coordinate.

use rand::Rng;
use rand_distr::Distribution;

use crate::error::{domain, Error, Result};
use crate::kernel::{KingmanOrder, QuadratureRule, ThetaSampler};
use crate::par;
use crate::rng::{StreamRng, StreamSeed};

/// N draws of a k-dimensional nonnegative random vector, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    order: KingmanOrder,
    dim: usize,
    data: Vec<f64>,
    seed: u64,
    resampled: bool,
}

impl SampleBatch {
    pub fn new(order: KingmanOrder, dim: usize, data: Vec<f64>, seed: u64) -> Result<Self> {
        if dim == 0 {
            return domain("batch dimension must be at least 1");
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return domain(format!(
                "batch data length {} is not a positive multiple of dim {dim}",
                data.len()
            ));
        }
        if let Some(bad) = data.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return domain(format!("batch entries must be finite and >= 0, got {bad}"));
        }
        Ok(Self {
            order,
            dim,
            data,
            seed,
            resampled: false,
        })
    }

    /// Builds `n` rows by calling `fill(rng, row)`; rows are grouped into
    /// fixed chunks, each with its own substream of `seed` under `label`.
    pub fn generate<F>(
        order: KingmanOrder,
        dim: usize,
        n: usize,
        seed: u64,
        label: &str,
        fill: F,
    ) -> Result<Self>
    where
        F: Fn(&mut StreamRng, &mut [f64]) + Sync + Send,
    {
        if dim == 0 || n == 0 {
            return domain("batch needs dim >= 1 and n >= 1");
        }
        let data = fill_rows(n, dim, StreamSeed::new(seed).derive(label), fill);
        Self::new(order, dim, data, seed)
    }

    /// `n` copies of the point `x`.
    pub fn point_mass(order: KingmanOrder, x: &[f64], n: usize) -> Result<Self> {
        if n == 0 {
            return domain("batch needs n >= 1");
        }
        let data = x.iter().copied().cycle().take(x.len() * n).collect();
        Self::new(order, x.len(), data, 0)
    }

    pub fn zeros(order: KingmanOrder, dim: usize, n: usize) -> Result<Self> {
        Self::point_mass(order, &vec![0.0; dim], n)
    }

    pub fn order(&self) -> KingmanOrder {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Whether this batch came from a convolution that had to resample
    /// its smaller input.
    pub fn is_resampled(&self) -> bool {
        self.resampled
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Image under `x ↦ c x` (the operator `T_c`).
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return domain(format!("scale must be finite and >= 0, got {c}"));
        }
        Ok(Self {
            data: self.data.iter().map(|x| c * x).collect(),
            ..self.clone()
        })
    }

    /// Rows reordered by `perm` (used to decouple a batch from itself).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let data = perm.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        Self {
            data,
            ..self.clone()
        }
    }
}

/// Samples on `R^k` with arbitrary signs (images of batches under
/// symmetrization or the `F_{s,k}` embedding).
#[derive(Clone, Debug, PartialEq)]
pub struct SignedBatch {
    dim: usize,
    data: Vec<f64>,
    seed: u64,
}

impl SignedBatch {
    pub fn new(dim: usize, data: Vec<f64>, seed: u64) -> Result<Self> {
        if dim == 0 || data.is_empty() || !data.len().is_multiple_of(dim) {
            return domain("signed batch needs dim >= 1 and a nonempty multiple of dim entries");
        }
        if data.iter().any(|v| !v.is_finite()) {
            return domain("signed batch entries must be finite");
        }
        Ok(Self { dim, data, seed })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    /// Row-wise sum with another batch of the same shape.
    pub fn add(&self, other: &SignedBatch) -> Result<SignedBatch> {
        if self.dim != other.dim || self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.data.len(),
                got: other.data.len(),
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(SignedBatch {
            dim: self.dim,
            data,
            seed: self.seed,
        })
    }
}

pub(crate) fn fill_rows<F>(n: usize, dim: usize, streams: StreamSeed, fill: F) -> Vec<f64>
where
    F: Fn(&mut StreamRng, &mut [f64]) + Sync + Send,
{
    let mut data = vec![0.0; n * dim];
    par::for_each_chunk_mut(&mut data, par::ROW_CHUNK * dim, |ci, chunk| {
        let mut rng = streams.stream(ci as u64);
        for row in chunk.chunks_exact_mut(dim) {
            fill(&mut rng, row);
        }
    });
    data
}

/// `sqrt(x² + 2uxy + y²)`, clamped to the support `[|x-y|, x+y]`.
#[inline]
pub fn combine_with(x: f64, y: f64, u: f64) -> f64 {
    let z2 = x * x + 2.0 * u * x * y + y * y;
    z2.max(0.0).sqrt().clamp((x - y).abs(), x + y)
}

/// One draw from `δ_x ∘_s δ_y`.
pub fn combine_scalar<R: Rng + ?Sized>(
    order: KingmanOrder,
    x: f64,
    y: f64,
    rng: &mut R,
) -> Result<f64> {
    for v in [x, y] {
        if !(v >= 0.0) || !v.is_finite() {
            return domain(format!("convolution arguments must be finite and >= 0, got {v}"));
        }
    }
    let u = ThetaSampler::new(order).sample(rng);
    Ok(combine_with(x, y, u))
}

/// `∫ f d(δ_x ∘_s δ_y)` by Gauss–Jacobi quadrature over the mixing variable.
pub fn point_convolution_expectation<F>(
    order: KingmanOrder,
    x: f64,
    y: f64,
    f: F,
    rule: &QuadratureRule,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if rule.order() != order {
        return Err(Error::OrderMismatch {
            left: order.s(),
            right: rule.order().s(),
        });
    }
    for v in [x, y] {
        if !(v >= 0.0) || !v.is_finite() {
            return domain(format!("convolution arguments must be finite and >= 0, got {v}"));
        }
    }
    Ok(rule.integrate(|u| f(combine_with(x, y, u))))
}

fn check_compatible(a: &SampleBatch, b: &SampleBatch) -> Result<()> {
    if a.order() != b.order() {
        return Err(Error::OrderMismatch {
            left: a.order().s(),
            right: b.order().s(),
        });
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Resamples `batch` with replacement up to `n` rows.
fn resample(batch: &SampleBatch, n: usize, streams: StreamSeed) -> SampleBatch {
    let dim = batch.dim();
    let src_n = batch.n();
    let data = fill_rows(n, dim, streams, |rng, row| {
        let i = rng.random_range(0..src_n);
        row.copy_from_slice(batch.row(i));
    });
    SampleBatch {
        data,
        resampled: true,
        ..batch.clone()
    }
}

/// Empirical `a ⊙_{s,k} b`: rows are paired and each coordinate is combined
/// with its own independent mixing draw. When the sizes differ the smaller
/// batch is resampled with replacement and the result is flagged.
pub fn convolve_batches(a: &SampleBatch, b: &SampleBatch, seed: u64) -> Result<SampleBatch> {
    check_compatible(a, b)?;
    let root = StreamSeed::new(seed);
    let (a, b, resampled) = match a.n().cmp(&b.n()) {
        std::cmp::Ordering::Equal => (a.clone(), b.clone(), false),
        std::cmp::Ordering::Less => (resample(a, b.n(), root.derive("resample")), b.clone(), true),
        std::cmp::Ordering::Greater => (a.clone(), resample(b, a.n(), root.derive("resample")), true),
    };
    let dim = a.dim();
    let theta = ThetaSampler::new(a.order());
    let streams = root.derive("convolve");
    let mut data = vec![0.0; a.data.len()];
    par::for_each_chunk_mut(&mut data, par::ROW_CHUNK * dim, |ci, chunk| {
        let mut rng = streams.stream(ci as u64);
        let offset = ci * par::ROW_CHUNK * dim;
        for (k, z) in chunk.iter_mut().enumerate() {
            let idx = offset + k;
            *z = combine_with(a.data[idx], b.data[idx], theta.sample(&mut rng));
        }
    });
    Ok(SampleBatch {
        order: a.order(),
        dim,
        data,
        seed,
        resampled,
    })
}

/// Multiplies every coordinate by an independent uniform sign, sampling the
/// k-symmetrization `2^{-k} Σ_e S_e G`.
pub fn k_symmetrize(batch: &SampleBatch, seed: u64) -> SignedBatch {
    signed_image(batch.dim(), batch.data(), seed, "symmetrize", |rng, x| {
        if rng.random::<bool>() {
            x
        } else {
            -x
        }
    })
}

pub(crate) fn signed_image<F>(dim: usize, src: &[f64], seed: u64, label: &str, f: F) -> SignedBatch
where
    F: Fn(&mut StreamRng, f64) -> f64 + Sync + Send,
{
    let streams = StreamSeed::new(seed).derive(label);
    let mut data = src.to_vec();
    par::for_each_chunk_mut(&mut data, par::ROW_CHUNK * dim, |ci, chunk| {
        let mut rng = streams.stream(ci as u64);
        for x in chunk.iter_mut() {
            *x = f(&mut rng, *x);
        }
    });
    SignedBatch { dim, data, seed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::RayleighLaw;
    use crate::kernel::gauss_jacobi_rule;
    use crate::stats;
    use proptest::prelude::*;

    fn order(s: f64) -> KingmanOrder {
        KingmanOrder::new(s).unwrap()
    }

    #[test]
    fn batch_validation() {
        let o = order(0.0);
        assert!(SampleBatch::new(o, 0, vec![1.0], 0).is_err());
        assert!(SampleBatch::new(o, 2, vec![1.0, 2.0, 3.0], 0).is_err());
        assert!(SampleBatch::new(o, 1, vec![], 0).is_err());
        assert!(SampleBatch::new(o, 1, vec![-1.0], 0).is_err());
        let b = SampleBatch::new(o, 2, vec![1.0, 2.0, 3.0, 4.0], 9).unwrap();
        assert_eq!(b.n(), 2);
        assert_eq!(b.row(1), &[3.0, 4.0]);
        assert_eq!(b.column(0), vec![1.0, 3.0]);
        assert_eq!(b.scaled(2.0).unwrap().row(0), &[2.0, 4.0]);
        assert!(b.scaled(-1.0).is_err());
    }

    #[test]
    fn combine_with_zero_is_identity() {
        let mut rng = StreamSeed::new(1).stream(0);
        for x in [0.0, 0.5, 3.0, 17.25] {
            for _ in 0..100 {
                assert_eq!(combine_scalar(order(0.3), x, 0.0, &mut rng).unwrap(), x);
                assert_eq!(combine_scalar(order(0.3), 0.0, x, &mut rng).unwrap(), x);
            }
        }
    }

    #[test]
    fn combine_rejects_negative_inputs() {
        let mut rng = StreamSeed::new(1).stream(0);
        assert!(combine_scalar(order(0.0), -1.0, 1.0, &mut rng).is_err());
        assert!(combine_scalar(order(0.0), 1.0, f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn combine_second_moment() {
        let o = order(1.0);
        let theta = ThetaSampler::new(o);
        let mut rng = StreamSeed::new(2).stream(0);
        let zs: Vec<f64> = (0..200_000)
            .map(|_| combine_with(3.0, 4.0, theta.sample(&mut rng)))
            .collect();
        assert!(zs.iter().all(|z| (1.0..=7.0).contains(z)));
        let e = stats::estimate(zs.len(), |i| zs[i] * zs[i]);
        assert!((e.mean - 25.0).abs() < 4.0 * e.std_err);
    }

    proptest! {
        #[test]
        fn combine_stays_in_support(s in -0.5f64..5.0, x in 0.0f64..100.0, y in 0.0f64..100.0, seed in any::<u64>()) {
            let mut rng = StreamSeed::new(seed).stream(0);
            let z = combine_scalar(order(s), x, y, &mut rng).unwrap();
            prop_assert!(z >= (x - y).abs() && z <= x + y);
        }
    }

    #[test]
    fn point_expectation_basics() {
        for s in [0.0, 0.5, 2.0] {
            let o = order(s);
            let rule = gauss_jacobi_rule(o, 8).unwrap();
            let one = point_convolution_expectation(o, 3.0, 4.0, |_| 1.0, &rule).unwrap();
            assert!((one - 1.0).abs() < 1e-14);
            let sq = point_convolution_expectation(o, 3.0, 4.0, |z| z * z, &rule).unwrap();
            assert!((sq - 25.0).abs() < 1e-12);
        }
        let two = gauss_jacobi_rule(order(0.5), 2).unwrap();
        let sq = point_convolution_expectation(order(0.5), 3.0, 4.0, |z| z * z, &two).unwrap();
        assert!((sq - 25.0).abs() < 1e-12);
        assert!(point_convolution_expectation(order(1.0), 1.0, 1.0, |z| z, &two).is_err());
    }

    #[test]
    fn point_expectation_multiplies_kernels() {
        // Product formula: ∫ Λ(tz) d(δ_x ∘ δ_y)(z) = Λ(tx) Λ(ty).
        for s in [0.0, 0.5, 1.5] {
            let o = order(s);
            let rule = gauss_jacobi_rule(o, 64).unwrap();
            for (x, y, t) in [(1.0, 2.0, 0.7), (0.3, 0.9, 2.5), (2.0, 2.0, 1.1)] {
                let got =
                    point_convolution_expectation(o, x, y, |z| o.lambda(t * z), &rule).unwrap();
                let want = o.lambda(t * x) * o.lambda(t * y);
                assert!((got - want).abs() < 1e-8, "s={s} x={x} y={y} t={t}");
            }
        }
    }

    #[test]
    fn point_convolution_is_associative() {
        let o = order(0.5);
        let rule = gauss_jacobi_rule(o, 40).unwrap();
        let f = |z: f64| (-0.3 * z * z).exp() * (1.0 + z).ln();
        let (x, y, z) = (0.7, 1.3, 0.4);
        // ((δx ∘ δy) ∘ δz) versus (δx ∘ (δy ∘ δz)), each as a double integral.
        let left = rule.integrate(|u| {
            let r = combine_with(x, y, u);
            point_convolution_expectation(o, r, z, f, &rule).unwrap()
        });
        let right = rule.integrate(|u| {
            let r = combine_with(y, z, u);
            point_convolution_expectation(o, x, r, f, &rule).unwrap()
        });
        assert!((left - right).abs() < 1e-6, "{left} vs {right}");
    }

    #[test]
    fn convolve_with_zeros_is_identity() {
        let o = order(0.0);
        let a = RayleighLaw::new(o).sample_batch(5000, 3).unwrap();
        let z = SampleBatch::zeros(o, 1, 5000).unwrap();
        let c = convolve_batches(&a, &z, 4).unwrap();
        assert_eq!(c.data(), a.data());
        assert!(!c.is_resampled());
    }

    #[test]
    fn convolve_checks_compatibility() {
        let a = SampleBatch::zeros(order(0.0), 1, 10).unwrap();
        let b = SampleBatch::zeros(order(1.0), 1, 10).unwrap();
        let c = SampleBatch::zeros(order(0.0), 2, 10).unwrap();
        assert!(matches!(convolve_batches(&a, &b, 0), Err(Error::OrderMismatch { .. })));
        assert!(matches!(convolve_batches(&a, &c, 0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn convolve_resamples_smaller_batch() {
        let o = order(0.0);
        let a = SampleBatch::point_mass(o, &[1.0, 2.0], 100).unwrap();
        let b = SampleBatch::point_mass(o, &[0.0, 0.0], 7).unwrap();
        let c = convolve_batches(&a, &b, 1).unwrap();
        assert_eq!(c.n(), 100);
        assert!(c.is_resampled());
        assert_eq!(c.row(42), &[1.0, 2.0]);
    }

    #[test]
    fn convolve_is_reproducible() {
        let o = order(0.5);
        let a = RayleighLaw::new(o).sample_batch(10_000, 1).unwrap();
        let b = RayleighLaw::new(o).sample_batch(10_000, 2).unwrap();
        assert_eq!(convolve_batches(&a, &b, 3).unwrap(), convolve_batches(&a, &b, 3).unwrap());
        assert_ne!(convolve_batches(&a, &b, 3).unwrap(), convolve_batches(&a, &b, 4).unwrap());
    }

    #[test]
    fn symmetrize_keeps_magnitudes_and_centers() {
        let o = order(0.5);
        let a = RayleighLaw::new(o).sample_batch(100_000, 1).unwrap();
        let sym = k_symmetrize(&a, 5);
        for (x, y) in a.data().iter().zip(sym.data()) {
            assert_eq!(x.abs(), y.abs());
        }
        let e = stats::estimate(sym.n(), |i| sym.data()[i]);
        assert!(e.mean.abs() < 4.0 * e.std_err);
    }
}
