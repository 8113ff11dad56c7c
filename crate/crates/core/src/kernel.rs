//! Bessel functions of the first kind, the normalized kernel
//! `Λ_s(x) = Γ(s+1) J_s(x) / (x/2)^s`, the symmetric mixing law on `[-1, 1]`
//! whose characteristic function is `Λ_s`, and Gauss quadrature against it.
//!
//! `Λ_s` is evaluated in three regimes:
//!
//! * small `x`: the power series `Σ (-x²/4)^k / (k! (s+1)_k)`, i.e. the
//!   Bessel series with `(x/2)^s` divided out term by term, so `x = 0` needs
//!   no special casing;
//! * moderate `x`: Miller's backward recurrence on `J_{s+m}`, normalized by
//!   the Neumann sum `(x/2)^s = Σ_k (s+2k) Γ(s+k)/k! · J_{s+2k}(x)`;
//! * large `x` (beyond `25 + s²`): Hankel's asymptotic expansion.
//!
//! The mixing law has density proportional to `(1-u²)^(s-1/2)`. It is the
//! image of a symmetric `Beta(s+1/2, s+1/2)` variate under `u = 2b - 1`.
//! At `s = -1/2` the density degenerates and the law is the two-point law on
//! `{-1, 1}` (and `Λ_{-1/2} = cos`).

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};

const SERIES_MAX_TERMS: usize = 200;
const SERIES_REL_TOL: f64 = 1e-16;
const SERIES_MAX_X: f64 = 8.0;
const HANKEL_MIN_X: f64 = 25.0;

/// The index `s ≥ -1/2` of a Kingman convolution, with `δ = 2(s+1) ≥ 1`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(try_from = "OrderRepr", into = "OrderRepr")]
pub struct KingmanOrder {
    s: f64,
    ln_gamma_s1: f64,
}

#[derive(Serialize, Deserialize)]
struct OrderRepr {
    s: f64,
}

impl TryFrom<OrderRepr> for KingmanOrder {
    type Error = Error;
    fn try_from(r: OrderRepr) -> Result<Self> {
        KingmanOrder::new(r.s)
    }
}

impl From<KingmanOrder> for OrderRepr {
    fn from(o: KingmanOrder) -> Self {
        OrderRepr { s: o.s }
    }
}

impl PartialEq for KingmanOrder {
    fn eq(&self, other: &Self) -> bool {
        self.s == other.s
    }
}

impl KingmanOrder {
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() || s < -0.5 {
            return domain(format!("order s must be finite and >= -1/2, got {s}"));
        }
        Ok(Self {
            s,
            ln_gamma_s1: ln_gamma(s + 1.0),
        })
    }

    pub fn from_delta(delta: f64) -> Result<Self> {
        Self::new(delta / 2.0 - 1.0)
    }

    /// Order whose `δ` equals a Euclidean dimension `d ≥ 1`.
    pub fn from_dimension(d: u32) -> Result<Self> {
        if d == 0 {
            return domain("dimension must be at least 1");
        }
        Self::new(f64::from(d) / 2.0 - 1.0)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn delta(&self) -> f64 {
        2.0 * (self.s + 1.0)
    }

    /// `δ` when it is a positive integer.
    pub fn integer_dimension(&self) -> Option<u32> {
        let d = self.delta();
        (d.fract() == 0.0 && d <= f64::from(u32::MAX)).then_some(d as u32)
    }

    /// `Λ_s(|x|)`; NaN for non-finite input.
    pub fn lambda(&self, x: f64) -> f64 {
        let x = x.abs();
        if !x.is_finite() {
            return f64::NAN;
        }
        if x == 0.0 {
            return 1.0;
        }
        let s = self.s;
        if x <= SERIES_MAX_X {
            lambda_series(s, x)
        } else if x <= hankel_limit(s) {
            lambda_miller(s, x)
        } else {
            (self.ln_gamma_s1 + s * (2.0 / x).ln()).exp() * bessel_hankel(s, x)
        }
    }

    /// `J_s(x)` for `x ≥ 0`; NaN for negative or non-finite input.
    pub fn bessel_j(&self, x: f64) -> f64 {
        if !x.is_finite() || x < 0.0 {
            return f64::NAN;
        }
        let s = self.s;
        if x == 0.0 {
            return match s.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Equal) => 1.0,
                Some(std::cmp::Ordering::Greater) => 0.0,
                _ => f64::INFINITY,
            };
        }
        if x > hankel_limit(s) {
            bessel_hankel(s, x)
        } else {
            self.lambda(x) * (s * (x / 2.0).ln() - self.ln_gamma_s1).exp()
        }
    }
}

fn hankel_limit(s: f64) -> f64 {
    HANKEL_MIN_X + s * s
}

/// `Σ_k (-x²/4)^k / (k! (s+1)_k)`.
fn lambda_series(s: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..SERIES_MAX_TERMS {
        let k = k as f64;
        term *= q / (k * (s + k));
        sum += term;
        if term.abs() < SERIES_REL_TOL * sum.abs() {
            break;
        }
    }
    sum
}

/// Miller's algorithm: recur `f_{m-1} = 2(s+m)/x · f_m - f_{m+1}` downward
/// from an arbitrary seed and normalize with the Neumann sum, which yields
/// `Λ_s(x) = f_0 / Σ_k c_k f_{2k}` where `c_k = (s+2k) Γ(s+k) / (Γ(s+1) k!)`.
fn lambda_miller(s: f64, x: f64) -> f64 {
    let half = (0.6 * x).ceil() as usize + 30;
    let top = 2 * half;

    let mut c = Vec::with_capacity(half + 1);
    c.push(1.0);
    let mut d = 1.0;
    for k in 1..=half {
        if k > 1 {
            d *= (s + (k - 1) as f64) / k as f64;
        }
        c.push((s + 2.0 * k as f64) * d);
    }

    let two_over_x = 2.0 / x;
    let mut f_next = 0.0;
    let mut f = 1e-300;
    let mut norm = c[half] * f;
    for m in (1..=top).rev() {
        let f_prev = two_over_x * (s + m as f64) * f - f_next;
        f_next = f;
        f = f_prev;
        let idx = m - 1;
        if idx % 2 == 0 {
            norm += c[idx / 2] * f;
        }
        if f.abs() > 1e250 {
            f *= 1e-250;
            f_next *= 1e-250;
            norm *= 1e-250;
        }
    }
    f / norm
}

/// Hankel's expansion `J_s(x) ≈ sqrt(2/(πx)) (P cos ω - Q sin ω)`,
/// `ω = x - (s/2 + 1/4)π`, summed up to its smallest term.
fn bessel_hankel(s: f64, x: f64) -> f64 {
    let mu = 4.0 * s * s;
    let (mut p, mut q) = (1.0, 0.0);
    let mut term = 1.0f64;
    let mut prev = f64::INFINITY;
    for k in 1..=80usize {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        let a = term.abs();
        if a == 0.0 || (a > prev && k as f64 > s) {
            break;
        }
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        prev = a;
        if a < 1e-17 {
            break;
        }
    }
    let omega = x - (0.5 * s + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * omega.cos() - q * omega.sin())
}

fn check_arg(x: f64) -> Result<()> {
    if !x.is_finite() {
        return domain(format!("argument must be finite, got {x}"));
    }
    if x < 0.0 {
        return domain(format!("argument must be nonnegative, got {x}"));
    }
    Ok(())
}

/// `J_s(x)`, Bessel function of the first kind.
pub fn bessel_j(order: KingmanOrder, x: f64) -> Result<f64> {
    check_arg(x)?;
    Ok(order.bessel_j(x))
}

/// `Λ_s(x) = Γ(s+1) J_s(x) / (x/2)^s`, with `Λ_s(0) = 1`.
pub fn lambda_kernel(order: KingmanOrder, x: f64) -> Result<f64> {
    check_arg(x)?;
    Ok(order.lambda(x))
}

/// Sampler for `θ_s`, the symmetric law on `[-1, 1]` with characteristic
/// function `Λ_s`.
#[derive(Clone, Debug)]
pub struct ThetaSampler {
    beta: Option<Beta<f64>>,
}

impl ThetaSampler {
    pub fn new(order: KingmanOrder) -> Self {
        let a = order.s() + 0.5;
        let beta = (a > 0.0).then(|| Beta::new(a, a).expect("positive Beta shape"));
        Self { beta }
    }
}

impl Distribution<f64> for ThetaSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.beta {
            Some(b) => 2.0 * b.sample(rng) - 1.0,
            None => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// One draw of `θ_s`. Builds a sampler per call; hot loops should keep a
/// [`ThetaSampler`].
pub fn sample_theta<R: Rng + ?Sized>(order: KingmanOrder, rng: &mut R) -> f64 {
    ThetaSampler::new(order).sample(rng)
}

/// Gauss rule for the normalized weight `(1-u²)^(s-1/2)` on `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    order: KingmanOrder,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> KingmanOrder {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(u_i)`, the rule's estimate of `E f(θ_s)`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&u, &w)| w * f(u))
            .sum()
    }
}

/// `n`-point Gauss–Jacobi rule (Golub–Welsch) with `α = β = s - 1/2`,
/// exact for polynomials of degree `≤ 2n - 1` against the law of `θ_s`.
pub fn gauss_jacobi_rule(order: KingmanOrder, n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return domain("quadrature rule needs at least one node");
    }
    let s = order.s();
    if s == -0.5 {
        // Two-point law: its Gauss rules stop growing after two nodes.
        let (nodes, weights) = if n == 1 {
            (vec![0.0], vec![1.0])
        } else {
            (vec![-1.0, 1.0], vec![0.5, 0.5])
        };
        return Ok(QuadratureRule {
            order,
            nodes,
            weights,
        });
    }

    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let beta = if k == 1 {
            1.0 / (2.0 * (s + 1.0))
        } else {
            kf * (kf + 2.0 * s - 1.0) / (4.0 * (kf + s) * (kf + s - 1.0))
        };
        let b = beta.sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| (eig.eigenvalues[j], eig.eigenvectors[(0, j)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let (nodes, weights) = pairs.into_iter().map(|(x, w)| (x, w / total)).unzip();
    Ok(QuadratureRule {
        order,
        nodes,
        weights,
    })
}
