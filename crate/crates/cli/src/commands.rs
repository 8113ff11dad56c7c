use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use kingman_core::convolution::{convolve_batches, SampleBatch};
use kingman_core::distributions::{RayleighLaw, RayleighianLaw};
use kingman_core::fluctuations::{
    harvest_wh_pairs, independence_check, wh_factor, wh_identity_residual, wh_target, WhSide,
};
use kingman_core::io;
use kingman_core::kernel::KingmanOrder;
use kingman_core::processes::{
    bessel_path, simulate_brownian, simulate_kl_path, simulate_symmetric_levy_1d,
    transition_batch, uniform_times, SymmetricLevySpec,
};
use kingman_core::radchf::{default_t_grid, levy_khinchine_radchf, radchf_estimate, LevyPair};
use kingman_core::rng::StreamSeed;
use kingman_core::verify::{run_all, VerifyConfig};
use serde_json::json;

use crate::config::{at_least_one, need, positive, CommandKind, Format, Law, Process, RunConfig};

/// Executes a run. `Ok(false)` means a verification check failed.
pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    let Some(command) = cfg.command else {
        bail!("no command given (use a subcommand or set `command` in the config file)");
    };
    if cfg.emit_plot_data.is_some()
        && !matches!(command, CommandKind::Kernel | CommandKind::Sample | CommandKind::Radchf)
    {
        bail!("--emit-plot-data is available for kernel, sample and radchf");
    }
    match command {
        CommandKind::Kernel => kernel(cfg, out),
        CommandKind::Sample => sample(cfg, out),
        CommandKind::Convolve => convolve(cfg, out),
        CommandKind::Radchf => radchf(cfg, out),
        CommandKind::Simulate => simulate(cfg, out),
        CommandKind::Whf => whf(cfg, out),
        CommandKind::Verify => return verify(cfg, out),
    }?;
    Ok(true)
}

fn order(cfg: &RunConfig, command: &str) -> Result<KingmanOrder> {
    Ok(KingmanOrder::new(need(&cfg.s, "s", command)?)?)
}

/// Prints a table as CSV or as a JSON array of objects.
fn print_table(out: &mut dyn Write, format: Format, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "{}", header.join(","))?;
            for r in rows {
                let cells: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        Format::Json => {
            let objs: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    header
                        .iter()
                        .zip(r)
                        .map(|(h, v)| (h.clone(), json!(v)))
                        .collect::<serde_json::Map<_, _>>()
                        .into()
                })
                .collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&objs)?)?;
        }
    }
    Ok(())
}

fn write_plot(cfg: &RunConfig, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let Some(path) = &cfg.emit_plot_data else {
        return Ok(());
    };
    let path = cfg.resolve_out(path)?;
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| format!("{v}")))?;
    }
    w.flush()?;
    Ok(())
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn kernel(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let o = order(cfg, "kernel")?;
    let xs = need(&cfg.x, "x", "kernel")?;
    let rows: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| Ok(vec![x, kingman_core::kernel::lambda_kernel(o, x)?, kingman_core::kernel::bessel_j(o, x)?]))
        .collect::<Result<_>>()?;
    print_table(out, cfg.format(), &strings(&["x", "lambda", "bessel_j"]), &rows)?;
    let x_max = xs.iter().fold(20.0f64, |m, x| m.max(x.abs()));
    let curve: Vec<Vec<f64>> = (0..=500)
        .map(|i| {
            let x = x_max * i as f64 / 500.0;
            vec![x, o.lambda(x)]
        })
        .collect();
    write_plot(cfg, &["x", "lambda"], &curve)
}

fn load_pair(cfg: &RunConfig, command: &str) -> Result<LevyPair> {
    let path = need(&cfg.pair, "pair", command)?;
    io::load_pair(&path).with_context(|| format!("reading pair {}", path.display()))
}

fn emit_batch(cfg: &RunConfig, batch: &SampleBatch, out: &mut dyn Write) -> Result<()> {
    match &cfg.out {
        Some(p) => {
            let path = cfg.resolve_out(p)?;
            io::save_batch(batch, &path)?;
            writeln!(out, "wrote {} rows to {}", batch.n(), path.display())?;
        }
        None => io::write_batch_csv(batch, &mut *out)?,
    }
    Ok(())
}

/// `(t, empirical, std_err, analytic)` along the diagonal `t·(1,...,1)`.
fn overlay_rows(batch: &SampleBatch, analytic: impl Fn(&[f64]) -> Result<f64>) -> Result<Vec<Vec<f64>>> {
    (0..=80)
        .map(|i| {
            let t = 4.0 * i as f64 / 80.0;
            let tv = vec![t; batch.dim()];
            let e = radchf_estimate(batch, &tv)?;
            Ok(vec![t, e.mean, e.std_err, analytic(&tv)?])
        })
        .collect()
}

type Analytic = Box<dyn Fn(&[f64]) -> Result<f64>>;

fn sample(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let n = at_least_one(cfg.n.unwrap_or(1000), "n")?;
    let seed = cfg.seed();
    let (batch, analytic): (SampleBatch, Analytic) =
        match need(&cfg.law, "law", "sample")? {
            Law::Rayleigh => {
                let law = RayleighLaw::new(order(cfg, "sample")?);
                (law.sample_batch(n, seed)?, Box::new(move |t| Ok(law.radchf(t[0]))))
            }
            Law::Rayleighian => {
                let law = RayleighianLaw::new(order(cfg, "sample")?, need(&cfg.lambda, "lambda", "sample")?)?;
                let b = law.sample_batch(n, seed)?;
                (b, Box::new(move |t| Ok(law.radchf(t)?)))
            }
            Law::Levy => {
                let pair = load_pair(cfg, "sample")?;
                let time = positive(cfg.time.unwrap_or(1.0), "time")?;
                let start = SampleBatch::zeros(pair.order, pair.dim, n)?;
                let b = transition_batch(&pair, time, &start, seed)?;
                let target = pair.at_time(time)?;
                (b, Box::new(move |t| Ok(levy_khinchine_radchf(&target, t)?)))
            }
        };
    emit_batch(cfg, &batch, out)?;
    if cfg.emit_plot_data.is_some() {
        write_plot(cfg, &["t", "empirical", "std_err", "analytic"], &overlay_rows(&batch, analytic)?)?;
    }
    Ok(())
}

fn load_batch(path: &Path) -> Result<SampleBatch> {
    io::load_batch(path).with_context(|| format!("reading batch {}", path.display()))
}

fn convolve(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let a = load_batch(&need(&cfg.input, "input", "convolve")?)?;
    let b = load_batch(&need(&cfg.other, "other", "convolve")?)?;
    let c = convolve_batches(&a, &b, cfg.seed())?;
    if c.is_resampled() {
        eprintln!("note: batch sizes differ; the smaller batch was resampled with replacement");
    }
    emit_batch(cfg, &c, out)
}

fn radchf(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let batch = cfg.input.as_deref().map(load_batch).transpose()?;
    let pair = cfg.pair.as_ref().map(|_| load_pair(cfg, "radchf")).transpose()?;
    let target = pair
        .map(|p| p.at_time(cfg.time.unwrap_or(1.0)))
        .transpose()?;
    let dim = match (&batch, &target) {
        (Some(b), Some(p)) if b.dim() != p.dim => {
            bail!("batch has dimension {} but the pair has {}", b.dim(), p.dim)
        }
        (Some(b), _) => b.dim(),
        (None, Some(p)) => p.dim,
        (None, None) => bail!("`radchf` needs `input` (a batch) or `pair`"),
    };
    let grid = match &cfg.t {
        Some(t) => vec![t.clone()],
        None => default_t_grid(dim),
    };
    let mut header: Vec<String> = (1..=dim).map(|j| format!("t{j}")).collect();
    if batch.is_some() {
        header.extend(strings(&["empirical", "std_err"]));
    }
    if target.is_some() {
        header.push("analytic".into());
    }
    let mut rows = Vec::with_capacity(grid.len());
    for t in &grid {
        let mut row = t.clone();
        if let Some(b) = &batch {
            let e = radchf_estimate(b, t)?;
            row.extend([e.mean, e.std_err]);
        }
        if let Some(p) = &target {
            row.push(levy_khinchine_radchf(p, t)?);
        }
        rows.push(row);
    }
    print_table(out, cfg.format(), &header, &rows)?;
    if cfg.emit_plot_data.is_some() {
        let b = batch.context("--emit-plot-data for radchf needs `input`")?;
        let analytic = |t: &[f64]| -> Result<f64> {
            match &target {
                Some(p) => Ok(levy_khinchine_radchf(p, t)?),
                None => Ok(f64::NAN),
            }
        };
        write_plot(cfg, &["t", "empirical", "std_err", "analytic"], &overlay_rows(&b, analytic)?)?;
    }
    Ok(())
}

fn levy_spec(cfg: &RunConfig, command: &str) -> Result<SymmetricLevySpec> {
    if let Some(path) = &cfg.spec {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read spec {}", path.display()))?;
        let spec: SymmetricLevySpec = serde_json::from_str(&text)
            .with_context(|| format!("spec {}", path.display()))?;
        spec.validate()?;
        return Ok(spec);
    }
    if cfg.sigma.is_none() && cfg.jumps.is_none() {
        bail!("`{command}` needs `spec`, or `sigma` and/or `jump` atoms");
    }
    Ok(SymmetricLevySpec::new(
        cfg.sigma.unwrap_or(0.0),
        cfg.jumps.clone().unwrap_or_default(),
    )?)
}

fn simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let horizon = positive(cfg.horizon.unwrap_or(1.0), "horizon")?;
    let dt = positive(cfg.dt.unwrap_or(1e-2), "dt")?;
    let times = uniform_times(horizon, dt)?;
    let seed = cfg.seed();
    let mut rng = StreamSeed::new(seed).derive("simulate").stream(0);
    let (path, source) = match need(&cfg.process, "process", "simulate")? {
        Process::Brownian => {
            let d = at_least_one(cfg.d.unwrap_or(1), "d")?;
            let var = positive(cfg.variance.unwrap_or(1.0), "variance")?;
            (
                simulate_brownian(d, &times, var, &mut rng)?,
                json!({"process": "brownian", "d": d, "variance": var}),
            )
        }
        Process::Bessel => {
            let o = order(cfg, "simulate")?;
            let scaling = cfg.scaling.unwrap_or_default();
            (
                bessel_path(o, &times, scaling, &mut rng)?,
                json!({"process": "bessel", "order": o, "scaling": scaling}),
            )
        }
        Process::Kl => {
            let pair = load_pair(cfg, "simulate")?;
            (
                simulate_kl_path(&pair, &times, &mut rng)?,
                json!({"process": "kl", "pair": pair}),
            )
        }
        Process::Levy1d => {
            let spec = levy_spec(cfg, "simulate")?;
            (
                simulate_symmetric_levy_1d(&spec, &times, &mut rng)?,
                json!({"process": "levy1d", "spec": spec}),
            )
        }
    };
    let path = path.with_seed(seed);
    match &cfg.out {
        Some(p) => {
            let file = cfg.resolve_out(p)?;
            io::save_path(&path, source, &file)?;
            writeln!(out, "wrote {} grid points to {}", path.len(), file.display())?;
        }
        None => io::write_path_csv(&path, &mut *out)?,
    }
    Ok(())
}

fn whf(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let spec = levy_spec(cfg, "whf")?;
    let p = positive(cfg.p.unwrap_or(1.0), "p")?;
    let n_paths = at_least_one(cfg.n_paths.unwrap_or(10_000), "n_paths")?;
    let dt = positive(cfg.dt.unwrap_or(1e-3), "dt")?;
    let nu = cfg.nu.unwrap_or(0.0);
    let theta = cfg.theta.unwrap_or(1.0);
    let pairs = harvest_wh_pairs(&spec, p, n_paths, dt, cfg.seed())?;
    let up = wh_factor(&pairs, WhSide::Ascending, nu, theta)?;
    let down = wh_factor(&pairs, WhSide::Descending, nu, -theta)?;
    let target = wh_target(&spec, p, nu, theta);
    let residual = wh_identity_residual(&spec, p, nu, theta, &pairs)?;
    let ind = independence_check(&pairs)?;
    if let Some(path) = &cfg.out {
        io::save_wh_pairs(&pairs, &cfg.resolve_out(path)?)?;
    }
    let summary = json!({
        "p": p, "dt": dt, "n_paths": n_paths, "nu": nu, "theta": theta,
        "ascending": [up.re, up.im],
        "descending_at_minus_theta": [down.re, down.im],
        "target": [target.re, target.im],
        "residual": residual,
        "independence_max_deviation": ind.max_deviation,
        "independence_max_z": ind.max_z,
        "independence_pass": ind.pass,
    });
    match cfg.format() {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?,
        Format::Csv => {
            writeln!(out, "key,value")?;
            for (k, v) in summary.as_object().expect("object") {
                let v = match v {
                    serde_json::Value::Array(a) => a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "),
                    other => other.to_string(),
                };
                writeln!(out, "{k},{v}")?;
            }
        }
    }
    Ok(())
}

fn verify(cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    let vc = VerifyConfig {
        seed: cfg.seed(),
        quick: cfg.quick.unwrap_or(false),
    };
    let report = run_all(&vc);
    let text = report.render();
    out.write_all(text.as_bytes())?;
    if let Some(p) = &cfg.out {
        std::fs::write(cfg.resolve_out(p)?, &text)?;
    }
    for c in &report.checks {
        eprintln!("check {:>2} took {:.2?}", c.id, c.elapsed);
    }
    Ok(report.all_pass())
}
