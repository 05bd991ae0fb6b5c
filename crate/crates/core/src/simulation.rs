//! Constant-hazard competing-risks generator and Monte Carlo studies.
//!
//! Under cause-specific hazards `l1`, `l2` the cause-1 CIF is
//! `F_1(t) = l1 / (l1 + l2) * (1 - exp(-(l1 + l2) t))`, which serves as the
//! ground truth for every study.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bands::{compute_bands, BandCenter, BandOptions, BandWeight, Transform};
use crate::data::{Cause, FailureRecord, GroupSample, MultiGroupDataset};
use crate::error::{Error, Result};
use crate::estimators::{cif_for, PluginCovariance};
use crate::isotonic::restrict_cifs;
use crate::ordered_test::{pvalue_analytic, pvalue_resampled, sequential_stats};
use crate::resampling::ReplicateEngine;
use crate::rng::{substream, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupScenario {
    pub n: usize,
    pub cause1_rate: f64,
    pub cause2_rate: f64,
    #[serde(default)]
    pub censoring_rate: f64,
}

impl GroupScenario {
    pub fn validate(&self) -> Result<()> {
        let rates = [self.cause1_rate, self.cause2_rate, self.censoring_rate];
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::Config(format!("rates must be finite and non-negative: {self:?}")));
        }
        if self.cause1_rate + self.cause2_rate <= 0.0 {
            return Err(Error::Config("cause1_rate + cause2_rate must be positive".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("group size must be at least 1".into()));
        }
        Ok(())
    }

    /// True cause-1 cumulative incidence.
    pub fn cif1(&self, t: f64) -> f64 {
        let total = self.cause1_rate + self.cause2_rate;
        self.cause1_rate / total * -(-total * t).exp_m1()
    }

    /// Time at which the true cause-1 CIF reaches fraction `q` of its total mass.
    pub fn mass_quantile(&self, q: f64) -> f64 {
        -(-q).ln_1p() / (self.cause1_rate + self.cause2_rate)
    }

    pub fn generate<R: Rng>(&self, label: impl Into<String>, rng: &mut R) -> Result<GroupSample> {
        self.validate()?;
        let total = self.cause1_rate + self.cause2_rate;
        let failure = Exp::new(total).map_err(|e| Error::Config(e.to_string()))?;
        let censoring = if self.censoring_rate > 0.0 {
            Some(Exp::new(self.censoring_rate).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };
        let p1 = self.cause1_rate / total;
        let records = (0..self.n)
            .map(|_| {
                let t: f64 = failure.sample(rng);
                let cause = if rng.random::<f64>() < p1 { Cause::Primary } else { Cause::Competing };
                let c = censoring.map_or(f64::INFINITY, |d| d.sample(rng));
                let (time, cause) = if c < t { (c, Cause::Censored) } else { (t, cause) };
                FailureRecord { time: time.max(f64::MIN_POSITIVE), cause }
            })
            .collect();
        GroupSample::new(label, records)
    }
}

/// One group of `n` constant-hazard subjects drawn from `seed`.
pub fn gen_competing(n: usize, cause1_rate: f64, cause2_rate: f64, censoring_rate: f64, seed: u64) -> Result<GroupSample> {
    let scenario = GroupScenario { n, cause1_rate, cause2_rate, censoring_rate };
    scenario.generate("g1", &mut substream(seed, Domain::Simulation, 0, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    /// Rejection rate of the ordered test.
    Size,
    /// Ordered test against the two-sided test at equal level.
    Power,
    /// Mean squared error of restricted against unrestricted estimators.
    Mse,
    /// Simultaneous band coverage.
    Coverage,
    /// Multiplier-process covariance against the plug-in kernel.
    Covmatch,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_replicates() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub study: StudyKind,
    pub groups: Vec<GroupScenario>,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Multiplier replicates per dataset (resampled tests, bands, covmatch).
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub horizon: Option<f64>,
    /// Use multiplier resampling even without censoring (size study).
    #[serde(default)]
    pub force_resampling: bool,
    /// Group whose band or covariance is studied.
    #[serde(default)]
    pub band_group: usize,
    #[serde(default)]
    pub interval: Option<(f64, f64)>,
    #[serde(default)]
    pub transform: Transform,
    #[serde(default)]
    pub weight: BandWeight,
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario JSON: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(format!("scenario TOML: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a `.toml` file as TOML and anything else as JSON.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Self::from_toml(&text),
            _ => Self::from_json(&text),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.len() < 2 {
            return Err(Error::Config("a scenario needs at least 2 groups".into()));
        }
        for g in &self.groups {
            g.validate()?;
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.band_group >= self.groups.len() {
            return Err(Error::Config(format!("band_group {} out of range", self.band_group)));
        }
        let needs_resampling = matches!(self.study, StudyKind::Coverage | StudyKind::Covmatch)
            || (self.study == StudyKind::Size && (self.force_resampling || self.is_censored()));
        if needs_resampling && self.replicates < 100 {
            return Err(Error::Config(format!("need at least 100 replicates, got {}", self.replicates)));
        }
        if self.study == StudyKind::Power && self.is_censored() {
            return Err(Error::Config("the power study compares analytic tests and needs uncensored groups".into()));
        }
        Ok(())
    }

    pub fn is_censored(&self) -> bool {
        self.groups.iter().any(|g| g.censoring_rate > 0.0)
    }

    /// Dataset for replication `r`; group `i` draws from substream `(seed, r, i)`.
    pub fn dataset(&self, r: usize) -> Result<MultiGroupDataset> {
        let groups = self
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let mut rng = substream(self.seed, Domain::Simulation, r as u64, i as u64);
                g.generate(format!("g{}", i + 1), &mut rng)
            })
            .collect::<Result<_>>()?;
        MultiGroupDataset::new(groups)
    }

    fn inner_seed(&self, r: usize) -> u64 {
        substream(self.seed, Domain::Simulation, r as u64, u64::MAX).random()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub metric: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_se: Option<f64>,
}

impl Cell {
    fn new(metric: &str, value: f64) -> Self {
        Cell { metric: metric.into(), group: None, s: None, t: None, value, mc_se: None }
    }

    fn se(mut self, se: f64) -> Self {
        self.mc_se = Some(se);
        self
    }

    fn group(mut self, g: usize) -> Self {
        self.group = Some(g);
        self
    }

    fn at(mut self, s: Option<f64>, t: f64) -> Self {
        self.s = s;
        self.t = Some(t);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub study: StudyKind,
    pub version: String,
    pub spec: ScenarioSpec,
    pub cells: Vec<Cell>,
}

impl StudyReport {
    /// First cell with this metric name (and group, when given).
    pub fn cell(&self, metric: &str, group: Option<usize>) -> Option<&Cell> {
        self.cells.iter().find(|c| c.metric == metric && (group.is_none() || c.group == group))
    }

    pub fn cells_named<'a>(&'a self, metric: &'a str) -> impl Iterator<Item = &'a Cell> + 'a {
        self.cells.iter().filter(move |c| c.metric == metric)
    }

    /// Flat `metric,group,s,t,value,mc_se` table.
    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "metric,group,s,t,value,mc_se")?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            writeln!(
                sink,
                "{},{},{},{},{},{}",
                c.metric,
                c.group.map(|g| g.to_string()).unwrap_or_default(),
                opt(c.s),
                opt(c.t),
                c.value,
                opt(c.mc_se)
            )?;
        }
        Ok(())
    }
}

fn rate_cell(metric: &str, hits: usize, total: usize) -> Cell {
    let p = hits as f64 / total as f64;
    Cell::new(metric, p).se((p * (1.0 - p) / total as f64).sqrt())
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every replication of `spec` (in parallel) and aggregates the metrics.
pub fn run_study(spec: &ScenarioSpec) -> Result<StudyReport> {
    spec.validate()?;
    let cells = match spec.study {
        StudyKind::Size => size_study(spec)?,
        StudyKind::Power => power_study(spec)?,
        StudyKind::Mse => mse_study(spec)?,
        StudyKind::Coverage => coverage_study(spec)?,
        StudyKind::Covmatch => covmatch_study(spec)?,
    };
    Ok(StudyReport { study: spec.study, version: crate::VERSION.into(), spec: spec.clone(), cells })
}

fn per_replication<T: Send>(spec: &ScenarioSpec, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..spec.replications)
        .into_par_iter()
        .map(|r| f(r).map_err(|e| Error::Replicate { index: r, source: Box::new(e) }))
        .collect()
}

fn size_study(spec: &ScenarioSpec) -> Result<Vec<Cell>> {
    let resample = spec.force_resampling || spec.is_censored();
    let k = spec.groups.len();
    let outcomes = per_replication(spec, |r| {
        let ds = spec.dataset(r)?;
        let report = sequential_stats(&ds, spec.horizon)?;
        if resample {
            let report = pvalue_resampled(&ds, &report, spec.replicates, spec.inner_seed(r))?;
            Ok((report.statistic, report.p_value.unwrap_or(1.0), None))
        } else {
            let p = pvalue_analytic(report.statistic, k)?;
            Ok((report.statistic, p.product, Some(p.bonferroni)))
        }
    })?;
    let total = outcomes.len();
    let mut cells = vec![rate_cell(
        "rejection_rate",
        outcomes.iter().filter(|o| o.1 <= spec.alpha).count(),
        total,
    )];
    if !resample {
        cells.push(rate_cell(
            "rejection_rate_bonferroni",
            outcomes.iter().filter(|o| o.2.is_some_and(|p| p <= spec.alpha)).count(),
            total,
        ));
    }
    let stats: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let (mean, se) = mean_se(&stats);
    cells.push(Cell::new("mean_statistic", mean).se(se));
    Ok(cells)
}

/// Kolmogorov tail `P(sup |B| > x)` of a standard Brownian bridge.
pub fn two_sided_bridge_tail(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for m in 1..=100 {
        let term = (-2.0 * (m * m) as f64 * x * x).exp();
        sum += if m % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn power_study(spec: &ScenarioSpec) -> Result<Vec<Cell>> {
    let k = spec.groups.len();
    let outcomes = per_replication(spec, |r| {
        let ds = spec.dataset(r)?;
        let report = sequential_stats(&ds, spec.horizon)?;
        let ordered = pvalue_analytic(report.statistic, k)?.product;
        let abs_sup = report
            .pairs
            .iter()
            .flat_map(|p| p.process.values().iter().map(|v| v.abs()))
            .fold(0.0, f64::max);
        let two_sided = -((k - 1) as f64 * (-two_sided_bridge_tail(abs_sup)).ln_1p()).exp_m1();
        Ok((ordered <= spec.alpha, two_sided <= spec.alpha))
    })?;
    let total = outcomes.len();
    let ordered = outcomes.iter().filter(|o| o.0).count();
    let two_sided = outcomes.iter().filter(|o| o.1).count();
    let diffs: Vec<f64> = outcomes.iter().map(|o| o.0 as u8 as f64 - o.1 as u8 as f64).collect();
    let (d, se) = mean_se(&diffs);
    Ok(vec![
        rate_cell("ordered_rejection_rate", ordered, total),
        rate_cell("two_sided_rejection_rate", two_sided, total),
        Cell::new("power_difference", d).se(se),
    ])
}

const MSE_QUANTILES: [f64; 3] = [0.25, 0.5, 0.75];

fn mse_study(spec: &ScenarioSpec) -> Result<Vec<Cell>> {
    let times: Vec<f64> = MSE_QUANTILES.iter().map(|&q| spec.groups[0].mass_quantile(q)).collect();
    let weights: Vec<f64> = spec.groups.iter().map(|g| g.n as f64).collect();
    // errors[r][i][q] = (unrestricted error, restricted error)
    let errors = per_replication(spec, |r| {
        let ds = spec.dataset(r)?;
        let cifs = ds
            .groups()
            .iter()
            .map(|g| cif_for(g, Cause::Primary))
            .collect::<Result<Vec<_>>>()?;
        let restricted = restrict_cifs(&cifs, &weights, &ds.pooled_event_grid())?;
        Ok(spec
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| {
                times
                    .iter()
                    .map(|&t| {
                        let truth = g.cif1(t);
                        (cifs[i].evaluate(t) - truth, restricted.estimates[i].evaluate(t) - truth)
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>())
    })?;

    let mut cells = Vec::new();
    for i in 0..spec.groups.len() {
        for (qi, &t) in times.iter().enumerate() {
            let sq_u: Vec<f64> = errors.iter().map(|e| e[i][qi].0.powi(2)).collect();
            let sq_r: Vec<f64> = errors.iter().map(|e| e[i][qi].1.powi(2)).collect();
            let diff: Vec<f64> = sq_u.iter().zip(&sq_r).map(|(u, r)| u - r).collect();
            let (mu, su) = mean_se(&sq_u);
            let (mr, sr) = mean_se(&sq_r);
            let (md, sd) = mean_se(&diff);
            cells.push(Cell::new("mse_unrestricted", mu).se(su).group(i).at(None, t));
            cells.push(Cell::new("mse_restricted", mr).se(sr).group(i).at(None, t));
            cells.push(Cell::new("mse_ratio", mr / mu).group(i).at(None, t));
            cells.push(Cell::new("mse_difference", md).se(sd).group(i).at(None, t));
        }
    }
    Ok(cells)
}

fn coverage_study(spec: &ScenarioSpec) -> Result<Vec<Cell>> {
    let group = spec.band_group;
    let truth = spec.groups[group];
    let centers = [BandCenter::Unrestricted, BandCenter::Restricted];
    let covered = per_replication(spec, |r| {
        let ds = spec.dataset(r)?;
        let options = BandOptions {
            alpha: spec.alpha,
            interval: spec.interval,
            transform: spec.transform,
            weight: spec.weight,
            center: BandCenter::Unrestricted,
            replicates: spec.replicates,
            seed: spec.inner_seed(r),
        };
        let bands = compute_bands(&ds, group, &options, &centers)?;
        Ok(bands.iter().map(|b| b.covers_monotone(|t| truth.cif1(t))).collect::<Vec<_>>())
    })?;
    let total = covered.len();
    Ok(vec![
        rate_cell("coverage_unrestricted", covered.iter().filter(|c| c[0]).count(), total).group(group),
        rate_cell("coverage_restricted", covered.iter().filter(|c| c[1]).count(), total).group(group),
    ])
}

const COVMATCH_QUANTILES: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

fn covmatch_study(spec: &ScenarioSpec) -> Result<Vec<Cell>> {
    let group = spec.band_group;
    let ds = spec.dataset(0)?;
    let sample = ds.group(group);
    let max_time = sample.max_time();
    let mut points: Vec<f64> = COVMATCH_QUANTILES
        .iter()
        .map(|&q| spec.groups[group].mass_quantile(q).min(max_time))
        .collect();
    points.dedup();

    let engine = ReplicateEngine::new(&ds, points.clone())?;
    let seed = spec.inner_seed(0);
    let draws: Vec<Vec<f64>> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| engine.processes(seed, r, |i| i == group).swap_remove(group))
        .collect();
    let cov = PluginCovariance::new(sample)?;

    let mut cells = Vec::new();
    for (a, &t) in points.iter().enumerate() {
        let xs: Vec<f64> = draws.iter().map(|z| z[a]).collect();
        let (m, se) = mean_se(&xs);
        cells.push(Cell::new("zhat_mean", m).se(se).group(group).at(None, t));
    }
    for a in 0..points.len() {
        for b in a..points.len() {
            let (s, t) = (points[a], points[b]);
            let prods: Vec<f64> = draws.iter().map(|z| z[a] * z[b]).collect();
            let (mc, se) = mean_se(&prods);
            let plugin = cov.at(s, t)?;
            let tolerance = (0.1 * plugin.abs()).max(0.01);
            cells.push(Cell::new("covariance_mc", mc).se(se).group(group).at(Some(s), t));
            cells.push(Cell::new("covariance_plugin", plugin).group(group).at(Some(s), t));
            cells.push(Cell::new("covariance_abs_diff", (mc - plugin).abs()).group(group).at(Some(s), t));
            cells.push(Cell::new("covariance_tolerance", tolerance).group(group).at(Some(s), t));
        }
    }
    Ok(cells)
}
