//! Unrestricted estimators for a single group: empirical and censored-data
//! cumulative incidence, left-continuous Kaplan–Meier, Nelson–Aalen, and the
//! plug-in covariance of the cause-1 CIF process.

use serde::{Deserialize, Serialize};

use crate::data::{Cause, GroupSample};
use crate::error::{Error, Result};
use crate::step::StepFunction;

/// Per-distinct-time counts for one group.
///
/// `at_risk[m]` is `#{L >= times[m]}`, so failures and censorings tied at a
/// time both count as at risk there.
#[derive(Debug, Clone)]
pub(crate) struct RiskTable {
    pub n: usize,
    pub times: Vec<f64>,
    pub at_risk: Vec<usize>,
    pub primary: Vec<usize>,
    pub competing: Vec<usize>,
    pub censored: Vec<usize>,
}

impl RiskTable {
    pub fn new(group: &GroupSample) -> Self {
        let mut recs: Vec<_> = group.records.iter().map(|r| (r.time, r.cause)).collect();
        recs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = recs.len();
        let mut table = RiskTable {
            n,
            times: Vec::new(),
            at_risk: Vec::new(),
            primary: Vec::new(),
            competing: Vec::new(),
            censored: Vec::new(),
        };
        let mut i = 0;
        while i < n {
            let t = recs[i].0;
            let (mut d1, mut d2, mut c) = (0, 0, 0);
            let start = i;
            while i < n && recs[i].0 == t {
                match recs[i].1 {
                    Cause::Primary => d1 += 1,
                    Cause::Competing => d2 += 1,
                    Cause::Censored => c += 1,
                }
                i += 1;
            }
            table.times.push(t);
            table.at_risk.push(n - start);
            table.primary.push(d1);
            table.competing.push(d2);
            table.censored.push(c);
        }
        table
    }

    pub fn events(&self, cause: Cause, m: usize) -> usize {
        match cause {
            Cause::Primary => self.primary[m],
            Cause::Competing => self.competing[m],
            Cause::Censored => self.censored[m],
        }
    }

    pub fn failures(&self, m: usize) -> usize {
        self.primary[m] + self.competing[m]
    }

    /// Kaplan–Meier left limits `S(times[m]-)` scaled by `n / at_risk[m]`.
    ///
    /// The product-limit estimator telescopes to
    /// `S(u_m-) = C_m * Y(u_m) / n` with `C_m = prod_{l<m} (Y_l - d_l) / Y_{l+1}`;
    /// every factor of `C_m` is exactly 1 unless censoring occurred at `u_l`,
    /// so uncensored samples reproduce empirical counts bit for bit.
    pub fn censoring_corrections(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.times.len());
        let mut correction = 1.0;
        for m in 0..self.times.len() {
            out.push(correction);
            let survivors = self.at_risk[m] - self.failures(m);
            let next = survivors - self.censored[m];
            if self.censored[m] > 0 && next > 0 {
                correction *= survivors as f64 / next as f64;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    pub group: String,
    /// Right-continuous store: `s_hat.evaluate(t)` is `S(t+)`.
    pub s_hat: StepFunction,
}

impl SurvivalEstimate {
    /// `S(t-)`, the product over failure times strictly before `t`.
    pub fn left_limit(&self, t: f64) -> f64 {
        self.s_hat.left_limit(t)
    }

    pub fn right_value(&self, t: f64) -> f64 {
        self.s_hat.evaluate(t)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HazardEstimate {
    pub group: String,
    pub cause: Cause,
    pub lambda_hat: StepFunction,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CifEstimate {
    pub group: String,
    pub cause: Cause,
    pub n: usize,
    pub f_hat: StepFunction,
}

impl CifEstimate {
    pub fn evaluate(&self, t: f64) -> f64 {
        self.f_hat.evaluate(t)
    }
}

fn check_cause(cause: Cause) -> Result<()> {
    if cause == Cause::Censored {
        return Err(Error::Precondition("cause must be 1 or 2".into()));
    }
    Ok(())
}

/// Empirical cumulative incidence for an uncensored sample.
pub fn empirical_cif(group: &GroupSample, cause: Cause) -> Result<CifEstimate> {
    check_cause(cause)?;
    if group.is_censored() {
        return Err(Error::Precondition(format!(
            "group `{}` contains censored records; use cif_censored",
            group.label
        )));
    }
    let table = RiskTable::new(group);
    let n = table.n as f64;
    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut acc = 0.0;
    for m in 0..table.times.len() {
        let d = table.events(cause, m);
        if d > 0 {
            acc += d as f64 / n;
            knots.push(table.times[m]);
            values.push(acc);
        }
    }
    Ok(CifEstimate {
        group: group.label.clone(),
        cause,
        n: table.n,
        f_hat: StepFunction::from_sorted(knots, values, 0.0),
    })
}

/// Kaplan–Meier estimate of the all-cause survival function.
pub fn km_left(group: &GroupSample) -> SurvivalEstimate {
    let table = RiskTable::new(group);
    let corrections = table.censoring_corrections();
    let n = table.n as f64;
    let mut knots = Vec::new();
    let mut values = Vec::new();
    for m in 0..table.times.len() {
        let d = table.failures(m);
        if d > 0 {
            knots.push(table.times[m]);
            values.push(corrections[m] * (table.at_risk[m] - d) as f64 / n);
        }
    }
    SurvivalEstimate { group: group.label.clone(), s_hat: StepFunction::from_sorted(knots, values, 1.0) }
}

/// Nelson–Aalen cumulative cause-specific hazard.
pub fn nelson_aalen(group: &GroupSample, cause: Cause) -> Result<HazardEstimate> {
    check_cause(cause)?;
    let table = RiskTable::new(group);
    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut acc = 0.0;
    for m in 0..table.times.len() {
        let d = table.events(cause, m);
        if d > 0 {
            acc += d as f64 / table.at_risk[m] as f64;
            knots.push(table.times[m]);
            values.push(acc);
        }
    }
    Ok(HazardEstimate {
        group: group.label.clone(),
        cause,
        lambda_hat: StepFunction::from_sorted(knots, values, 0.0),
    })
}

/// Cumulative incidence `sum_{u <= t} S(u-) dLambda(u)` with `S` the
/// left-continuous Kaplan–Meier and `Lambda` the Nelson–Aalen hazard.
pub fn cif_censored(group: &GroupSample, cause: Cause) -> Result<CifEstimate> {
    check_cause(cause)?;
    let table = RiskTable::new(group);
    let corrections = table.censoring_corrections();
    let n = table.n as f64;
    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut acc = 0.0;
    for m in 0..table.times.len() {
        let d = table.events(cause, m);
        if d > 0 {
            // S(u-) * d / Y(u) == C_m * d / n
            acc += corrections[m] * (d as f64 / n);
            knots.push(table.times[m]);
            values.push(acc);
        }
    }
    Ok(CifEstimate {
        group: group.label.clone(),
        cause,
        n: table.n,
        f_hat: StepFunction::from_sorted(knots, values, 0.0),
    })
}

/// The empirical estimator for uncensored groups, the censored-data one otherwise.
pub fn cif_for(group: &GroupSample, cause: Cause) -> Result<CifEstimate> {
    if group.is_censored() {
        cif_censored(group, cause)
    } else {
        empirical_cif(group, cause)
    }
}

/// Plug-in estimate of `Cov(Z_1(s), Z_1(t))` for the scaled cause-1 CIF process.
#[derive(Debug, Clone)]
pub struct PluginCovariance {
    table: RiskTable,
    cif1: StepFunction,
    cif2: StepFunction,
    max_time: f64,
}

impl PluginCovariance {
    pub fn new(group: &GroupSample) -> Result<Self> {
        Ok(Self {
            table: RiskTable::new(group),
            cif1: cif_for(group, Cause::Primary)?.f_hat,
            cif2: cif_for(group, Cause::Competing)?.f_hat,
            max_time: group.max_time(),
        })
    }

    pub fn at(&self, s: f64, t: f64) -> Result<f64> {
        if s > t {
            return Err(Error::Precondition(format!("covariance needs s <= t, got s={s}, t={t}")));
        }
        if t > self.max_time {
            return Err(Error::Range(format!(
                "t={t} lies beyond the last observed time {}; the at-risk set is empty there, truncate the horizon",
                self.max_time
            )));
        }
        let n = self.table.n as f64;
        let (f1s, f1t) = (self.cif1.evaluate(s), self.cif1.evaluate(t));
        let mut total = 0.0;
        for m in 0..self.table.times.len() {
            let u = self.table.times[m];
            if u > s {
                break;
            }
            let y = self.table.at_risk[m] as f64;
            // dLambda / pi with pi(u) = Y(u) / n
            let scale = n / (y * y);
            let d1 = self.table.primary[m];
            if d1 > 0 {
                let f2u = self.cif2.left_limit(u);
                total += (1.0 - f1s - f2u) * (1.0 - f1t - f2u) * d1 as f64 * scale;
            }
            let d2 = self.table.competing[m];
            if d2 > 0 {
                let f1u = self.cif1.left_limit(u);
                total += (f1s - f1u) * (f1t - f1u) * d2 as f64 * scale;
            }
        }
        Ok(total)
    }
}

/// Plug-in covariance of `sqrt(n)(F_1(s) - F_1(t))` at `s <= t`.
pub fn plugin_covariance(group: &GroupSample, s: f64, t: f64) -> Result<f64> {
    PluginCovariance::new(group)?.at(s, t)
}
