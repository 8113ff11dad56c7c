//! The verification suite: property checks of every identity the library
//! implements, evaluated by Monte Carlo against closed forms.
//!
//! The rendered report depends only on the seed and the mode; timings are
//! kept on the results but never rendered.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::convolution::{convolve_batches, fill_rows, SampleBatch};
use crate::distributions::{RayleighLaw, RayleighianLaw};
use crate::error::Result;
use crate::fluctuations::{harvest_wh_pairs, independence_check, wh_identity_residual};
use crate::kernel::{KingmanOrder, ThetaSampler};
use crate::processes::{
    bessel_marginals, kl_marginals, transition_batch, uniform_times, BesselScaling, JumpAtom,
    SymmetricLevySpec,
};
use crate::radchf::{
    chf_estimate, default_t_grid, embed_fsk, is_stable_check, levy_khinchine_radchf,
    radchf_estimate, LevyAtom, LevyPair, T_GRID,
};
use crate::rng::StreamSeed;
use crate::stats::{self, combined_std_err, ks_critical_two_sample, ks_two_sample};
use rand_distr::Distribution;

pub const DEFAULT_SEED: u64 = 1729;
pub const CRITERIA: std::ops::RangeInclusive<u8> = 1..=11;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Smaller sample sizes with unchanged thresholds.
    pub quick: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: DEFAULT_SEED,
            quick: false,
        }
    }
}

impl VerifyConfig {
    fn size(&self, full: usize, quick: usize) -> usize {
        if self.quick {
            quick
        } else {
            full
        }
    }

    fn seed_for(&self, label: &str) -> u64 {
        StreamSeed::new(self.seed).derive(label).seed_value()
    }
}

/// One measured quantity and its acceptance bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure {
    pub label: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Measure {
    pub fn at_most(label: impl Into<String>, value: f64, threshold: f64) -> Self {
        Measure {
            label: label.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    pub fn above(label: impl Into<String>, value: f64, threshold: f64) -> Self {
        Measure {
            label: label.into(),
            value,
            threshold,
            pass: value > threshold,
        }
    }

    fn relation(&self) -> &'static str {
        if self.value <= self.threshold {
            "<="
        } else {
            ">"
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub measures: Vec<Measure>,
    pub detail: String,
    pub elapsed: Duration,
}

impl CheckResult {
    pub fn pass(&self) -> bool {
        !self.measures.is_empty() && self.measures.iter().all(|m| m.pass)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub config: VerifyConfig,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(CheckResult::pass)
    }

    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.pass()).count()
    }

    /// Canonical text form.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mode = if self.config.quick { "quick" } else { "full" };
        let _ = writeln!(out, "kingman verification report (seed {}, {mode})", self.config.seed);
        for c in &self.checks {
            out.push_str(&render_check(c));
        }
        let _ = writeln!(out, "{}/{} checks passed", self.passed(), self.checks.len());
        out
    }
}

pub fn render_check(c: &CheckResult) -> String {
    let mut out = String::new();
    let status = if c.pass() { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "[{status}] {:>2} {}", c.id, c.name);
    for m in &c.measures {
        let _ = writeln!(
            out,
            "       {}: {:.6e} {} {:.6e}{}",
            m.label,
            m.value,
            m.relation(),
            m.threshold,
            if m.pass { "" } else { "  <-- fails" }
        );
    }
    if !c.detail.is_empty() {
        let _ = writeln!(out, "       {}", c.detail);
    }
    out
}

pub fn criterion_name(id: u8) -> &'static str {
    match id {
        1 => "kernel closed form at s = 1/2",
        2 => "kernel as characteristic function of the mixing law",
        3 => "Rayleigh radial characteristic function",
        4 => "convolution becomes multiplication of transforms",
        5 => "embedding into ordinary convolution",
        6 => "stability exponent of the Rayleigh law",
        7 => "Levy-Khinchine formula against simulated paths",
        8 => "Bessel marginal at t = 1 is Rayleigh",
        9 => "Chapman-Kolmogorov for transitions",
        10 => "Wiener-Hopf identity and independence",
        11 => "determinism of the report",
        _ => "unknown",
    }
}

fn order(s: f64) -> KingmanOrder {
    KingmanOrder::new(s).expect("valid order")
}

fn c1() -> Result<(Vec<Measure>, String)> {
    let o = order(0.5);
    let dev = (1..=5000)
        .map(|i| {
            let x = 0.01 * i as f64;
            (o.lambda(x) - x.sin() / x).abs()
        })
        .fold(0.0, f64::max);
    Ok((
        vec![Measure::at_most("max |kernel(x) - sin(x)/x| over x = 0.01..50", dev, 1e-10)],
        String::new(),
    ))
}

fn c2(cfg: &VerifyConfig) -> Result<(Vec<Measure>, String)> {
    let n = cfg.size(1_000_000, 1_000_000);
    let mut worst = 0.0f64;
    let mut at = (0.0, 0.0);
    for s in [0.0, 0.5, 1.0, 2.0] {
        let o = order(s);
        let theta = ThetaSampler::new(o);
        let draws = fill_rows(n, 1, StreamSeed::new(cfg.seed_for("c2")).derive_index(s.to_bits()), |rng, row| {
            row[0] = theta.sample(rng)
        });
        for t in [0.5, 1.0, 2.5] {
            let mean = stats::estimate(n, |i| (t * draws[i]).cos()).mean;
            let dev = (mean - o.lambda(t)).abs();
            if dev > worst {
                worst = dev;
                at = (s, t);
            }
        }
    }
    Ok((
        vec![Measure::at_most(format!("max |mean cos(t theta) - kernel(t)|, N = {n}"), worst, 4e-3)],
        format!("worst at s = {}, t = {}", at.0, at.1),
    ))
}

fn c3(cfg: &VerifyConfig) -> Result<(Vec<Measure>, String)> {
    let n = cfg.size(1_000_000, 200_000);
    let mut worst = 0.0f64;
    for s in [0.0, 0.5, 1.0] {
        let law = RayleighLaw::new(order(s));
        let b = law.sample_batch(n, StreamSeed::new(cfg.seed_for("c3")).derive_index(s.to_bits()).seed_value())?;
        for t in [0.5, 1.0, 2.0, 4.0] {
            let e = radchf_estimate(&b, &[t])?;
            worst = worst.max((e.mean - (-t * t / (4.0 * (s + 1.0))).exp()).abs());
        }
    }
    Ok((
        vec![Measure::at_most(format!("max deviation from exp(-t^2/(4(s+1))), N = {n}"), worst, 4.0 / (n as f64).sqrt())],
        String::new(),
    ))
}

fn c4(cfg: &VerifyConfig) -> Result<(Vec<Measure>, String)> {
    let n = cfg.size(100_000, 20_000);
    let root = StreamSeed::new(cfg.seed_for("c4"));
    let mut worst = 0.0f64;
    for (i, s) in [0.0, 0.5, 1.0].into_iter().enumerate() {
        let law = RayleighLaw::new(order(s));
        let seeds = root.derive_index(i as u64);
        let a = law.sample_batch(n, seeds.derive("a").seed_value())?;
        let b = law.sample_batch(n, seeds.derive("b").seed_value())?;
        let ab = convolve_batches(&a, &b, seeds.derive("ab").seed_value())?;
        for t in T_GRID {
            let (ea, eb, eab) = (radchf_estimate(&a, &[t])?, radchf_estimate(&b, &[t])?, radchf_estimate(&ab, &[t])?);
            let se_prod = combined_std_err(eb.mean * ea.std_err, ea.mean * eb.std_err);
            let se = combined_std_err(eab.std_err, se_prod);
            worst = worst.max((eab.mean - ea.mean * eb.mean).abs() / se);
        }
    }
    Ok((
        vec![Measure::at_most(format!("max deviation in combined standard errors, N = {n}"), worst, 4.0)],
        "s in {0, 0.5, 1}".to_string(),
    ))
}

fn c5(cfg: &VerifyConfig) -> Result<(Vec<Measure>, String)> {
    let n = cfg.size(100_000, 20_000);
    let o = order(0.5);
    let root = StreamSeed::new(cfg.seed_for("c5"));
    let mut worst = 0.0f64;
    for k in [1usize, 2] {
        let law = RayleighianLaw::rayleigh(o, k)?;
        let sigma = law.sample_batch(n, root.derive_index(k as u64).derive("sigma").seed_value())?;
        let laws = [
            sigma.clone(),
            sigma.scaled(2.0)?,
            SampleBatch::point_mass(o, &vec![1.3; k], n)?,
        ];
        for (g, batch) in laws.iter().enumerate() {
            let emb = embed_fsk(batch, root.derive_index(k as u64).derive_index(g as u64).seed_value());
            for t in default_t_grid(k) {
                let rad = radchf_estimate(batch, &t)?.mean;
                // Both signs of the first coordinate: the embedded law is
                // symmetric in each coordinate.
                for sign in [1.0, -1.0] {
                    let mut st = t.clone();
                    st[0] *= sign;
                    let c = chf_estimate(&emb, &st)?.mean;
                    worst = worst.max((c - rad).norm());
                }
            }
        }
    }
    Ok((
        vec![Measure::at_most(format!("max |chf(embedded) - radchf|, N = {n}"), worst, 4.0 / (n as f64).sqrt())],
        "laws: Rayleigh, Rayleigh scaled by 2, point mass; k in {1, 2}".to_string(),
    ))
}

fn c6(cfg: &VerifyConfig) -> Result<(Vec<Measure>, String)> {
    let n = cfg.size(100_000, 50_000);
    let b = RayleighLaw::new(order(0.5)).sample_batch(n, cfg.seed_for("c6-batch"))?;
    let r = is_stable_check(&b, 3.0, 4.0, 0.01, cfg.seed_for("c6"))?;
    Ok((
        vec![
            Measure::at_most("|c - 5|", (r.c - 5.0).abs(), 0.05),
            Measure::at_most("sup residual at c", r.residual, 0.01),
        ],
        format!("c = {:.6}, N = {n}", r.c),
    ))
}

/// Pairs used by the process checks.
pub fn test_pairs() -> Vec<LevyPair> {
    let o = order(0.5);
    vec![
        LevyPair::rayleighian(o, vec![0.8]).expect("valid pair"),
        LevyPair::new(o, vec![0.0], vec![LevyAtom { x: vec![1.0], m: 1.0 }]).expect("valid pair"),
        LevyPair::new(o, vec![0.5, 0.3], vec![LevyAtom { x: vec![1.0, 0.5], m: 0.6 }]).expect("valid pair"),
    ]
}

fn c7(cfg: &VerifyConfig) -> Result<(Vec<Measure>, String)> {
    let n = cfg.size(100_000, 20_000);
    let times = uniform_times(1.0, 1e-2)?;
    let mut worst = 0.0f64;
    for (i, pair) in test_pairs().iter().enumerate() {
        let m = kl_marginals(pair, &times, &[0.5, 1.0], n, StreamSeed::new(cfg.seed_for("c7")).derive_index(i as u64).seed_value())?;
        for (batch, t) in m.iter().zip([0.5, 1.0]) {
            let target = pair.at_time(t)?;
            for x in default_t_grid(pair.dim) {
                let e = radchf_estimate(batch, &x)?.mean;
                worst = worst.max((e - levy_khinchine_radchf(&target, &x)?).abs());
            }
        }
    }
    Ok((
        vec![Measure::at_most(format!("max |path radchf - formula|, N = {n}, dt = 0.01"), worst, 4.0 / (n as f64).sqrt())],
        "pairs: Gaussian only; single atom; atom plus Gaussian (k = 2)".to_string(),
    ))
}

fn c8(cfg: &VerifyConfig) -> Result<(Vec<Measure>, String)> {
    let n = cfg.size(100_000, 20_000);
    let times = uniform_times(1.0, 1e-2)?;
    let mut worst = 0.0f64;
    for d in [2u32, 3, 4] {
        let o = KingmanOrder::from_dimension(d)?;
        let seeds = StreamSeed::new(cfg.seed_for("c8")).derive_index(d as u64);
        let paths = bessel_marginals(o, &times, &[1.0], BesselScaling::Kingman, n, seeds.derive("paths").seed_value())?;
        let direct = RayleighLaw::new(o).sample_batch(n, seeds.derive("direct").seed_value())?;
        worst = worst.max(ks_two_sample(paths[0].data(), direct.data()));
    }
    Ok((
        vec![Measure::at_most(format!("max two-sample KS distance, N = {n}"), worst, ks_critical_two_sample(n, n, 0.01))],
        "d in {2, 3, 4}, threshold is the 1% critical value".to_string(),
    ))
}

fn c9(cfg: &VerifyConfig) -> Result<(Vec<Measure>, String)> {
    let n = cfg.size(100_000, 20_000);
    let mut worst = 0.0f64;
    for (i, pair) in test_pairs().iter().enumerate() {
        let seeds = StreamSeed::new(cfg.seed_for("c9")).derive_index(i as u64);
        let start = SampleBatch::point_mass(pair.order, &vec![0.7; pair.dim], n)?;
        let mid = transition_batch(pair, 0.6, &start, seeds.derive("first").seed_value())?;
        let two = transition_batch(pair, 0.4, &mid, seeds.derive("second").seed_value())?;
        let one = transition_batch(pair, 1.0, &start, seeds.derive("direct").seed_value())?;
        for x in default_t_grid(pair.dim) {
            let (a, b) = (radchf_estimate(&two, &x)?, radchf_estimate(&one, &x)?);
            worst = worst.max((a.mean - b.mean).abs() / combined_std_err(a.std_err, b.std_err));
        }
    }
    Ok((
        vec![Measure::at_most(format!("max deviation in combined standard errors, N = {n}"), worst, 4.0)],
        "two steps 0.6 + 0.4 against one step 1.0 from x = 0.7".to_string(),
    ))
}

fn c10(cfg: &VerifyConfig) -> Result<(Vec<Measure>, String)> {
    let n = cfg.size(100_000, 20_000);
    let dt = 1e-3;
    let p = 1.0;
    let brownian = SymmetricLevySpec::brownian(1.0)?;
    let compound = SymmetricLevySpec::new(0.0, vec![JumpAtom { v: 1.0, rate: 1.0 }])?;
    let b = harvest_wh_pairs(&brownian, p, n, dt, cfg.seed_for("c10-brownian"))?;
    let c = harvest_wh_pairs(&compound, p, n, dt, cfg.seed_for("c10-compound"))?;
    let rb = wh_identity_residual(&brownian, p, 0.0, 1.0, &b)?;
    let rc = wh_identity_residual(&compound, p, 0.0, std::f64::consts::PI, &c)?;
    let ind = independence_check(&b)?;
    let dup = independence_check(&b.duplicated())?;
    Ok((
        vec![
            Measure::at_most("Brownian residual at (0, 1)", rb, 0.02),
            Measure::at_most("compound Poisson residual at (0, pi)", rc, 0.03),
            Measure::at_most("independence, max deviation / std err", ind.max_z, 4.0),
            Measure::above("dependent control, max deviation / std err", dup.max_z, 4.0),
        ],
        format!("p = {p}, dt = {dt}, paths = {n}"),
    ))
}

fn timed(id: u8, f: impl FnOnce() -> Result<(Vec<Measure>, String)>) -> CheckResult {
    let start = Instant::now();
    let (measures, detail) = match f() {
        Ok(v) => v,
        Err(e) => (Vec::new(), format!("error: {e}")),
    };
    CheckResult {
        id,
        name: criterion_name(id),
        measures,
        detail,
        elapsed: start.elapsed(),
    }
}

/// Runs a single criterion. Criterion 11 reruns 1 to 10 twice.
pub fn run_check(id: u8, cfg: &VerifyConfig) -> CheckResult {
    match id {
        1 => timed(1, c1),
        2 => timed(2, || c2(cfg)),
        3 => timed(3, || c3(cfg)),
        4 => timed(4, || c4(cfg)),
        5 => timed(5, || c5(cfg)),
        6 => timed(6, || c6(cfg)),
        7 => timed(7, || c7(cfg)),
        8 => timed(8, || c8(cfg)),
        9 => timed(9, || c9(cfg)),
        10 => timed(10, || c10(cfg)),
        11 => timed(11, || {
            let a = run_numeric(cfg).render();
            let b = run_numeric(cfg).render();
            Ok(determinism_measures(&a, &b))
        }),
        _ => timed(id, || Ok((Vec::new(), format!("no criterion {id}")))),
    }
}

fn determinism_measures(a: &str, b: &str) -> (Vec<Measure>, String) {
    let differing = a.lines().zip(b.lines()).filter(|(x, y)| x != y).count()
        + a.lines().count().abs_diff(b.lines().count());
    (
        vec![Measure::at_most("differing report lines between two runs", differing as f64, 0.0)],
        format!("{} bytes compared", a.len()),
    )
}

/// Runs criteria 1 to 10.
pub fn run_numeric(cfg: &VerifyConfig) -> Report {
    Report {
        config: *cfg,
        checks: (1..=10).map(|id| run_check(id, cfg)).collect(),
    }
}

/// Runs all criteria. The determinism check compares this run's report
/// for criteria 1 to 10 against an independent second run.
pub fn run_all(cfg: &VerifyConfig) -> Report {
    let mut report = run_numeric(cfg);
    let first = report.render();
    let start = Instant::now();
    let second = run_numeric(cfg).render();
    let (measures, detail) = determinism_measures(&first, &second);
    report.checks.push(CheckResult {
        id: 11,
        name: criterion_name(11),
        measures,
        detail,
        elapsed: start.elapsed(),
    });
    report
}
