use std::fs::File;
use std::io::{BufWriter, Write};

use ordered_cif::{
    analysis_grid, analytic_test, cif_for, compute_band, ingest_csv, pvalue_resampled, restrict_cifs, run_study,
    sequential_stats, BandOptions, BandResult, Cause, Error, MultiGroupDataset, ScenarioSpec,
    SequentialTestReport, StepFunction,
};
use serde::Serialize;

use crate::config::{Cli, Command, Format, Method, RunConfig};

pub enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    result: T,
}

#[derive(Serialize)]
struct CifEntry {
    group: String,
    cause: Cause,
    n: usize,
    restricted: bool,
    f_hat: StepFunction,
}

#[derive(Serialize)]
struct EstimateOutput {
    horizon: f64,
    weights: Vec<f64>,
    unrestricted: Vec<CifEntry>,
    restricted: Vec<CifEntry>,
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let config = RunConfig::resolve(cli).map_err(Failure::Usage)?;
    match config.command {
        Command::Estimate => {
            let out = estimate(&load(&config)?, &config)?;
            emit(&config, &out, |w| estimate_csv(&out, w))
        }
        Command::Test => {
            let out = test(&load(&config)?, &config)?;
            emit(&config, &out, |w| test_csv(&out, w))
        }
        Command::Band => {
            let out = band(&load(&config)?, &config)?;
            emit(&config, &out, |w| band_csv(&out, w))
        }
        Command::Simulate => {
            let path = cli.config.as_ref().expect("checked by resolve");
            let spec = ScenarioSpec::from_path(path)?;
            let out = run_study(&spec)?;
            emit(&config, &out, |w| out.write_csv(w).map_err(Failure::from))
        }
    }
}

fn load(config: &RunConfig) -> Result<MultiGroupDataset, Failure> {
    let path = config.input.as_ref().expect("checked by resolve");
    let file = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open input `{path}`: {e}")))?;
    Ok(ingest_csv(std::io::BufReader::new(file), &config.groups)?)
}

fn estimate(ds: &MultiGroupDataset, config: &RunConfig) -> Result<EstimateOutput, Failure> {
    let (horizon, grid) = analysis_grid(ds, config.horizon)?;
    let cifs = ds
        .groups()
        .iter()
        .map(|g| {
            cif_for(g, Cause::Primary).map(|mut c| {
                c.f_hat = c.f_hat.truncate(horizon);
                c
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let weights: Vec<f64> = ds.sizes().iter().map(|&n| n as f64).collect();
    let restricted = restrict_cifs(&cifs, &weights, &grid)?;
    let unrestricted = cifs
        .iter()
        .map(|c| CifEntry {
            group: c.group.clone(),
            cause: c.cause,
            n: c.n,
            restricted: false,
            f_hat: c.f_hat.on_grid(&grid),
        })
        .collect();
    let restricted = cifs
        .iter()
        .zip(restricted.estimates)
        .map(|(c, f_hat)| CifEntry { group: c.group.clone(), cause: c.cause, n: c.n, restricted: true, f_hat })
        .collect();
    Ok(EstimateOutput { horizon, weights, unrestricted, restricted })
}

fn test(ds: &MultiGroupDataset, config: &RunConfig) -> Result<SequentialTestReport, Failure> {
    let resample = match config.method {
        Method::Analytic => false,
        Method::Resampled => true,
        Method::Auto => ds.is_censored(),
    };
    if resample {
        let report = sequential_stats(ds, config.horizon)?;
        Ok(pvalue_resampled(ds, &report, config.reps, config.seed)?)
    } else {
        Ok(analytic_test(ds, config.horizon)?)
    }
}

fn band(ds: &MultiGroupDataset, config: &RunConfig) -> Result<Vec<BandResult>, Failure> {
    let options = BandOptions {
        alpha: config.alpha,
        interval: config.interval,
        transform: config.transform,
        weight: config.weight,
        center: config.center,
        replicates: config.reps,
        seed: config.seed,
    };
    let targets: Vec<usize> = match &config.band_group {
        Some(label) => vec![ds
            .position(label)
            .ok_or_else(|| Failure::Usage(format!("--band-group `{label}` is not one of --groups")))?],
        None => (0..ds.k()).collect(),
    };
    let mut out = Vec::with_capacity(targets.len());
    for i in targets {
        out.push(compute_band(ds, i, &options)?);
    }
    Ok(out)
}

fn emit<T: Serialize>(
    config: &RunConfig,
    result: &T,
    csv: impl FnOnce(&mut dyn Write) -> Result<(), Failure>,
) -> Result<(), Failure> {
    let mut sink: Box<dyn Write> = match &config.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    match config.format {
        Format::Json => {
            let envelope = Envelope { tool: "ordered-cif", version: ordered_cif::VERSION, config, result };
            serde_json::to_writer_pretty(&mut sink, &envelope)
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            writeln!(sink)?;
        }
        Format::Csv => {
            let header = serde_json::to_string(config).map_err(|e| Error::Io(std::io::Error::other(e)))?;
            writeln!(sink, "# ordered-cif {} config={header}", ordered_cif::VERSION)?;
            csv(&mut sink)?;
        }
    }
    sink.flush()?;
    Ok(())
}

fn estimate_csv(out: &EstimateOutput, w: &mut dyn Write) -> Result<(), Failure> {
    writeln!(w, "group,estimator,t,value")?;
    for (kind, entries) in [("unrestricted", &out.unrestricted), ("restricted", &out.restricted)] {
        for e in entries {
            for (t, v) in e.f_hat.iter() {
                writeln!(w, "{},{kind},{t},{v}", e.group)?;
            }
        }
    }
    Ok(())
}

fn test_csv(out: &SequentialTestReport, w: &mut dyn Write) -> Result<(), Failure> {
    writeln!(w, "j,group,t,value")?;
    for p in &out.pairs {
        for (t, v) in p.process.iter() {
            writeln!(w, "{},{},{t},{v}", p.j, p.group)?;
        }
    }
    Ok(())
}

fn band_csv(out: &[BandResult], w: &mut dyn Write) -> Result<(), Failure> {
    writeln!(w, "group,t,lower,center,upper")?;
    for b in out {
        for m in 0..b.center.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                b.group,
                b.center.knots()[m],
                b.lower.values()[m],
                b.center.values()[m],
                b.upper.values()[m]
            )?;
        }
    }
    Ok(())
}

