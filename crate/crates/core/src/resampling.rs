//! Gaussian-multiplier simulation of the cause-1 CIF processes.
//!
//! Conditional on the observed data, each uncensored event receives an
//! independent standard-normal multiplier `V` and
//!
//! ```text
//! Z(t) = sqrt(n) * [ sum_{cause-1 events u <= t} (1 - F2(u-)) V / Y(u)
//!                  + sum_{cause-2 events u <= t}  F1(u-)      V / Y(u)
//!                  - F1(t) * sum_{events u <= t}              V / Y(u) ]
//! ```
//!
//! whose conditional covariance is the plug-in kernel of
//! [`crate::estimators::PluginCovariance`].

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Cause, GroupSample, MultiGroupDataset};
use crate::error::{Error, Result};
use crate::estimators::{cif_for, CifEstimate};
use crate::rng::{substream, Domain};
use crate::step::StepFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub cause: Cause,
    /// Index of the subject within its group's records.
    pub subject: usize,
    /// `#{L >= time}` in the group.
    pub at_risk: usize,
}

/// Counting-process view of one group: its uncensored events in canonical
/// `(time, subject)` order, each carrying the at-risk count at its time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountingProcessData {
    pub group: String,
    pub n: usize,
    pub events: Vec<Event>,
}

impl CountingProcessData {
    pub fn events_of(&self, cause: Cause) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.cause == cause)
    }
}

pub fn build_counting(group: &GroupSample) -> CountingProcessData {
    let mut times: Vec<f64> = group.records.iter().map(|r| r.time).collect();
    times.sort_by(f64::total_cmp);
    let n = times.len();
    let mut events: Vec<Event> = group
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.cause.is_failure())
        .map(|(subject, r)| Event {
            time: r.time,
            cause: r.cause,
            subject,
            at_risk: n - times.partition_point(|&t| t < r.time),
        })
        .collect();
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.subject.cmp(&b.subject)));
    CountingProcessData { group: group.label.clone(), n, events }
}

/// Precomputed per-event coefficients for one group on a fixed grid.
#[derive(Debug, Clone)]
struct GroupKernel {
    sqrt_n: f64,
    times: Vec<f64>,
    /// Coefficient of `V` in the first two sums.
    lead: Vec<f64>,
    /// `1 / Y(u)`, coefficient of `V` in the compensating sum.
    inv_risk: Vec<f64>,
    cif1_on_grid: Vec<f64>,
}

impl GroupKernel {
    fn new(data: &CountingProcessData, cif1: &StepFunction, cif2: &StepFunction, grid: &[f64]) -> Self {
        let mut times = Vec::with_capacity(data.events.len());
        let mut lead = Vec::with_capacity(data.events.len());
        let mut inv_risk = Vec::with_capacity(data.events.len());
        for e in &data.events {
            let inv = 1.0 / e.at_risk as f64;
            let coef = match e.cause {
                Cause::Primary => 1.0 - cif2.left_limit(e.time),
                _ => cif1.left_limit(e.time),
            };
            times.push(e.time);
            lead.push(coef * inv);
            inv_risk.push(inv);
        }
        Self {
            sqrt_n: (data.n as f64).sqrt(),
            times,
            lead,
            inv_risk,
            cif1_on_grid: cif1.evaluate_sorted(grid),
        }
    }

    fn process(&self, normals: &[f64], grid: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let (mut lead_sum, mut comp_sum) = (0.0, 0.0);
        let mut e = 0;
        for (m, &t) in grid.iter().enumerate() {
            while e < self.times.len() && self.times[e] <= t {
                lead_sum += normals[e] * self.lead[e];
                comp_sum += normals[e] * self.inv_risk[e];
                e += 1;
            }
            out.push(self.sqrt_n * (lead_sum - self.cif1_on_grid[m] * comp_sum));
        }
    }
}

/// One multiplier realisation of the process, evaluated on `grid`.
///
/// `normals[e]` multiplies the `e`-th event of `data.events`.
pub fn zhat_replicate(
    data: &CountingProcessData,
    cif1: &CifEstimate,
    cif2: &CifEstimate,
    normals: &[f64],
    grid: &[f64],
) -> Result<StepFunction> {
    if normals.len() != data.events.len() {
        return Err(Error::Precondition(format!(
            "group `{}` has {} uncensored events but {} multipliers were supplied",
            data.group,
            data.events.len(),
            normals.len()
        )));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("grid must be strictly increasing".into()));
    }
    let kernel = GroupKernel::new(data, &cif1.f_hat, &cif2.f_hat, grid);
    let mut values = Vec::with_capacity(grid.len());
    kernel.process(normals, grid, &mut values);
    Ok(StepFunction::from_sorted(grid.to_vec(), values, 0.0))
}

/// A map from one replicate's processes to one or more suprema.
pub trait SupFunctional: Sync {
    /// Number of suprema returned by [`SupFunctional::sups`].
    fn components(&self) -> usize;

    /// Whether the functional reads group `i`'s process.
    fn uses_group(&self, i: usize) -> bool;

    /// `processes[i]` holds group `i`'s values on the engine grid (empty
    /// when the group is unused).
    fn sups(&self, processes: &[Vec<f64>]) -> Vec<f64>;
}

/// `sup_t |weights(t) * Z_i(t)|` over the grid.
#[derive(Debug, Clone)]
pub struct WeightedAbsSup {
    pub group: usize,
    pub weights: Vec<f64>,
}

impl SupFunctional for WeightedAbsSup {
    fn components(&self) -> usize {
        1
    }

    fn uses_group(&self, i: usize) -> bool {
        i == self.group
    }

    fn sups(&self, processes: &[Vec<f64>]) -> Vec<f64> {
        let sup = processes[self.group]
            .iter()
            .zip(&self.weights)
            .map(|(z, w)| (z * w).abs())
            .fold(0.0, f64::max);
        vec![sup]
    }
}

/// Per-group kernels for a whole dataset on one evaluation grid.
#[derive(Debug, Clone)]
pub struct ReplicateEngine {
    grid: Vec<f64>,
    kernels: Vec<GroupKernel>,
    event_counts: Vec<usize>,
}

impl ReplicateEngine {
    /// Uses the unrestricted cause-1/cause-2 estimates of every group.
    pub fn new(dataset: &MultiGroupDataset, grid: Vec<f64>) -> Result<Self> {
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition("grid must be strictly increasing".into()));
        }
        let mut kernels = Vec::with_capacity(dataset.k());
        let mut event_counts = Vec::with_capacity(dataset.k());
        for g in dataset.groups() {
            let data = build_counting(g);
            let cif1 = cif_for(g, Cause::Primary)?;
            let cif2 = cif_for(g, Cause::Competing)?;
            event_counts.push(data.events.len());
            kernels.push(GroupKernel::new(&data, &cif1.f_hat, &cif2.f_hat, &grid));
        }
        Ok(Self { grid, kernels, event_counts })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn event_counts(&self) -> &[usize] {
        &self.event_counts
    }

    /// The processes of replicate `r`; multipliers for group `i` come from
    /// substream `(seed, r, i)`.
    pub fn processes(&self, seed: u64, r: usize, wanted: impl Fn(usize) -> bool) -> Vec<Vec<f64>> {
        let mut normals = Vec::new();
        self.kernels
            .iter()
            .enumerate()
            .map(|(i, kernel)| {
                let mut out = Vec::new();
                if wanted(i) {
                    let mut rng = substream(seed, Domain::Multipliers, r as u64, i as u64);
                    normals.clear();
                    normals.extend(
                        (0..self.event_counts[i]).map(|_| -> f64 { StandardNormal.sample(&mut rng) }),
                    );
                    kernel.process(&normals, &self.grid, &mut out);
                }
                out
            })
            .collect()
    }
}

/// Suprema of one functional component across `B` replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateBatch {
    #[serde(rename = "B")]
    pub replicates: usize,
    pub seed: u64,
    pub sups: Vec<f64>,
}

/// Runs `replicates` multiplier replicates on the current rayon pool.
///
/// Returns one batch per functional component; the result is identical for
/// any thread count.
pub fn replicate_sups(
    engine: &ReplicateEngine,
    functional: &dyn SupFunctional,
    replicates: usize,
    seed: u64,
) -> Result<Vec<ReplicateBatch>> {
    if replicates == 0 {
        return Err(Error::Config("replicate count must be positive".into()));
    }
    let per_replicate: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| functional.sups(&engine.processes(seed, r, |i| functional.uses_group(i))))
        .collect();
    Ok((0..functional.components())
        .map(|c| ReplicateBatch {
            replicates,
            seed,
            sups: per_replicate.iter().map(|s| s[c]).collect(),
        })
        .collect())
}

/// The `ceil((1 - alpha) B)`-th order statistic of the replicate suprema.
pub fn sup_quantile(batch: &ReplicateBatch, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if batch.sups.is_empty() {
        return Err(Error::Precondition("replicate batch is empty".into()));
    }
    let b = batch.sups.len();
    // guard against (1 - alpha) * B landing a hair above an integer
    let rank = (((1.0 - alpha) * b as f64) - 1e-9).ceil().clamp(1.0, b as f64) as usize;
    let mut sorted = batch.sups.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[rank - 1])
}
