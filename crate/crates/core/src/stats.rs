//! Monte Carlo summaries and Kolmogorov–Smirnov distances.

use num_complex::Complex64;

use crate::par;

/// A sample mean together with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

/// A complex sample mean; `std_err` is the standard error of the modulus of
/// the estimation error, sqrt(E|Z - EZ|^2 / n).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexEstimate {
    pub mean: Complex64,
    pub std_err: f64,
    pub n: usize,
}

/// Standard error of the difference of two independent estimates.
pub fn combined_std_err(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if other.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return other;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
        }
    }
}

/// Mean and standard error of `f(0), ..., f(n-1)`, reduced in a fixed order.
pub fn estimate<F>(n: usize, f: F) -> Estimate
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let m = par::map_chunks(n, par::ROW_CHUNK, |_, rows| {
        let mut m = Moments::default();
        rows.for_each(|i| m.push(f(i)));
        m
    })
    .into_iter()
    .fold(Moments::default(), Moments::merge);
    finish(m, n)
}

fn finish(m: Moments, n: usize) -> Estimate {
    let std_err = if n > 1 {
        (m.m2 / (m.n - 1.0) / m.n).sqrt()
    } else {
        0.0
    };
    Estimate {
        mean: m.mean,
        std_err,
        n,
    }
}

/// Complex analogue of [`estimate`].
pub fn complex_estimate<F>(n: usize, f: F) -> ComplexEstimate
where
    F: Fn(usize) -> Complex64 + Sync + Send,
{
    let parts = par::map_chunks(n, par::ROW_CHUNK, |_, rows| {
        let (mut re, mut im) = (Moments::default(), Moments::default());
        for i in rows {
            let z = f(i);
            re.push(z.re);
            im.push(z.im);
        }
        (re, im)
    });
    let (re, im) = parts.into_iter().fold(
        (Moments::default(), Moments::default()),
        |(a, b), (c, d)| (a.merge(c), b.merge(d)),
    );
    let (re, im) = (finish(re, n), finish(im, n));
    ComplexEstimate {
        mean: Complex64::new(re.mean, im.mean),
        std_err: re.std_err.hypot(im.std_err),
        n,
    }
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample KS distance sup |F_n - F|.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let v = sorted(xs);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0, |acc: f64, (i, &x)| {
        let c = cdf(x);
        let above = (i as f64 + 1.0) / n - c;
        let below = c - i as f64 / n;
        acc.max(above).max(below)
    })
}

/// Two-sample KS distance sup |F_n - G_m|.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> f64 {
    let (a, b) = (sorted(xs), sorted(ys));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic KS coefficient c(alpha) = sqrt(-ln(alpha / 2) / 2).
pub fn ks_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// Asymptotic one-sample critical value at level `alpha`.
pub fn ks_critical_one_sample(n: usize, alpha: f64) -> f64 {
    ks_coefficient(alpha) / (n as f64).sqrt()
}

/// Asymptotic two-sample critical value at level `alpha`.
pub fn ks_critical_two_sample(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    ks_coefficient(alpha) * ((n + m) / (n * m)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_matches_textbook_formulas() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let e = estimate(xs.len(), |i| xs[i]);
        assert!((e.mean - 3.5).abs() < 1e-15);
        // sample variance 7, se = sqrt(7/4)
        assert!((e.std_err - (7.0f64 / 4.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn estimate_is_stable_across_chunks() {
        let n = 3 * par::ROW_CHUNK + 17;
        let e = estimate(n, |i| (i % 5) as f64);
        let direct = (0..n).map(|i| (i % 5) as f64).sum::<f64>() / n as f64;
        assert!((e.mean - direct).abs() < 1e-12);
    }

    #[test]
    fn ks_two_sample_known_values() {
        assert_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        let d = ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[2.5, 3.5]);
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_one_sample_uniform_grid() {
        let xs: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        let d = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.05).abs() < 1e-12);
    }

    #[test]
    fn one_percent_coefficient() {
        assert!((ks_coefficient(0.01) - 1.627_6).abs() < 1e-3);
    }
}
