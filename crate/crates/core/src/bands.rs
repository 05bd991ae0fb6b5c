//! Transformed simultaneous confidence bands for a single group's cause-1 CIF.
//!
//! With `D(t) = g(t) phi'(F(t)) Z(t)` and `q` the `(1 - alpha)` quantile of
//! `sup |D|` over the interval, the band is
//! `phi^-1(phi(center(t)) +- q / (sqrt(n_i) g(t)))`, clipped to `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::data::{Cause, MultiGroupDataset};
use crate::error::{Error, Result};
use crate::estimators::{cif_for, PluginCovariance};
use crate::isotonic::restrict_cifs;
use crate::ordered_test::resolve_horizon;
use crate::resampling::{replicate_sups, sup_quantile, ReplicateEngine, WeightedAbsSup};
use crate::step::StepFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    #[default]
    Identity,
    Log,
    /// `log(-log(1 - x))`
    Cloglog,
    Logit,
}

impl Transform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Log => x.ln(),
            Transform::Cloglog => (-(-x).ln_1p()).ln(),
            Transform::Logit => (x / (1.0 - x)).ln(),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Transform::Identity => 1.0,
            Transform::Log => 1.0 / x,
            Transform::Cloglog => -1.0 / ((1.0 - x) * (-x).ln_1p()),
            Transform::Logit => 1.0 / (x * (1.0 - x)),
        }
    }

    pub fn inverse(self, y: f64) -> f64 {
        match self {
            Transform::Identity => y,
            Transform::Log => y.exp(),
            Transform::Cloglog => -(-y.exp()).exp_m1(),
            Transform::Logit => 1.0 / (1.0 + (-y).exp()),
        }
    }

    /// Whether `x` lies where both `phi` and `phi'` are finite.
    pub fn admits(self, x: f64) -> bool {
        match self {
            Transform::Identity => x.is_finite(),
            Transform::Log => x > 0.0,
            Transform::Cloglog | Transform::Logit => x > 0.0 && x < 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Transform::Identity => "identity",
            Transform::Log => "log",
            Transform::Cloglog => "cloglog",
            Transform::Logit => "logit",
        }
    }
}

impl std::str::FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Transform::Identity),
            "log" => Ok(Transform::Log),
            "cloglog" => Ok(Transform::Cloglog),
            "logit" => Ok(Transform::Logit),
            other => Err(Error::Config(format!(
                "unknown transform `{other}` (expected identity, log, cloglog or logit)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandWeight {
    /// `g = 1`
    #[default]
    Unit,
    /// `g(t) = 1 / sqrt(plug-in variance at t)`
    InverseSd,
}

impl std::str::FromStr for BandWeight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(BandWeight::Unit),
            "inverse-sd" => Ok(BandWeight::InverseSd),
            other => Err(Error::Config(format!("unknown weight `{other}` (expected unit or inverse-sd)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandCenter {
    #[default]
    Unrestricted,
    Restricted,
}

impl std::str::FromStr for BandCenter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unrestricted" => Ok(BandCenter::Unrestricted),
            "restricted" => Ok(BandCenter::Restricted),
            other => Err(Error::Config(format!(
                "unknown center `{other}` (expected unrestricted or restricted)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandOptions {
    pub alpha: f64,
    /// Defaults to `[first cause-1 event of the group, common horizon]`.
    pub interval: Option<(f64, f64)>,
    pub transform: Transform,
    pub weight: BandWeight,
    pub center: BandCenter,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for BandOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            interval: None,
            transform: Transform::Identity,
            weight: BandWeight::Unit,
            center: BandCenter::Unrestricted,
            replicates: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandResult {
    pub group: String,
    pub interval: (f64, f64),
    pub center_kind: BandCenter,
    pub alpha: f64,
    pub transform: Transform,
    pub weight: BandWeight,
    #[serde(rename = "B")]
    pub replicates: usize,
    pub seed: u64,
    pub q_alpha: f64,
    /// All three functions share knots: the interval start followed by the
    /// pooled grid points inside the interval.
    pub lower: StepFunction,
    pub center: StepFunction,
    pub upper: StepFunction,
}

impl BandResult {
    /// Whether `truth` stays inside the band on the whole interval, given
    /// that `truth` is nondecreasing and continuous.
    pub fn covers_monotone(&self, truth: impl Fn(f64) -> f64) -> bool {
        let knots = self.lower.knots();
        let end = self.interval.1;
        knots.iter().enumerate().all(|(m, &t)| {
            let right = knots.get(m + 1).copied().unwrap_or(end);
            truth(t) >= self.lower.values()[m] && truth(right) <= self.upper.values()[m]
        })
    }
}

pub fn compute_band(dataset: &MultiGroupDataset, group: usize, options: &BandOptions) -> Result<BandResult> {
    let mut bands = compute_bands(dataset, group, options, &[options.center])?;
    Ok(bands.pop().expect("one center requested"))
}

/// Bands for several centers sharing one set of replicates and one `q_alpha`.
pub fn compute_bands(
    dataset: &MultiGroupDataset,
    group: usize,
    options: &BandOptions,
    centers: &[BandCenter],
) -> Result<Vec<BandResult>> {
    if group >= dataset.k() {
        return Err(Error::Config(format!("group index {group} out of range for k = {}", dataset.k())));
    }
    if !(options.alpha > 0.0 && options.alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", options.alpha)));
    }
    if options.replicates < 100 {
        return Err(Error::Config(format!("need at least 100 replicates, got {}", options.replicates)));
    }
    let sample = dataset.group(group);
    let transform = options.transform;
    let cif = cif_for(sample, Cause::Primary)?;

    let (t1, t2) = match options.interval {
        Some(iv) => iv,
        None => {
            let first = cif.f_hat.knots().first().copied().ok_or_else(|| {
                Error::Domain(format!("group `{}` has no cause-1 events; no band can be formed", sample.label))
            })?;
            (first, resolve_horizon(dataset, None)?)
        }
    };
    if !(t1.is_finite() && t2.is_finite() && t1 >= 0.0 && t1 <= t2) {
        return Err(Error::Range(format!("invalid band interval [{t1}, {t2}]")));
    }
    if t2 > sample.max_time() {
        return Err(Error::Range(format!(
            "band interval ends at {t2}, beyond group `{}`'s last observed time {}",
            sample.label,
            sample.max_time()
        )));
    }

    let pooled = dataset.pooled_event_grid();
    let mut points = vec![t1];
    points.extend(pooled.iter().copied().filter(|&t| t > t1 && t <= t2));

    let estimate = cif.f_hat.evaluate_sorted(&points);
    let mut center_values = Vec::with_capacity(centers.len());
    for &kind in centers {
        let values = match kind {
            BandCenter::Unrestricted => estimate.clone(),
            BandCenter::Restricted => {
                let all = dataset
                    .groups()
                    .iter()
                    .map(|g| cif_for(g, Cause::Primary))
                    .collect::<Result<Vec<_>>>()?;
                let weights: Vec<f64> = dataset.sizes().iter().map(|&n| n as f64).collect();
                let restricted = restrict_cifs(&all, &weights, &pooled)?;
                restricted.estimates[group].evaluate_sorted(&points)
            }
        };
        for (&t, (&f, &c)) in points.iter().zip(estimate.iter().zip(&values)) {
            if !transform.admits(f) || !transform.admits(c) {
                return Err(Error::Domain(format!(
                    "{} transform undefined at t = {t} (estimate {f}, center {c}); choose a later interval start",
                    transform.name()
                )));
            }
        }
        center_values.push((kind, values));
    }

    let g: Vec<f64> = match options.weight {
        BandWeight::Unit => vec![1.0; points.len()],
        BandWeight::InverseSd => {
            let cov = PluginCovariance::new(sample)?;
            points
                .iter()
                .map(|&t| {
                    let v = cov.at(t, t)?;
                    if v > 0.0 {
                        Ok(1.0 / v.sqrt())
                    } else {
                        Err(Error::Domain(format!(
                            "plug-in variance is zero at t = {t}; inverse-sd weight undefined, choose a later interval start"
                        )))
                    }
                })
                .collect::<Result<_>>()?
        }
    };

    let functional = WeightedAbsSup {
        group,
        weights: g.iter().zip(&estimate).map(|(gt, &f)| gt * transform.derivative(f)).collect(),
    };
    let engine = ReplicateEngine::new(dataset, points.clone())?;
    let batch = replicate_sups(&engine, &functional, options.replicates, options.seed)?
        .pop()
        .expect("one component");
    let q_alpha = sup_quantile(&batch, options.alpha)?;

    let root_n = (sample.size() as f64).sqrt();
    Ok(center_values
        .into_iter()
        .map(|(kind, center)| {
            let (lower, upper): (Vec<f64>, Vec<f64>) = center
                .iter()
                .zip(&g)
                .map(|(&c, &gt)| {
                    let half = q_alpha / (root_n * gt);
                    let mid = transform.apply(c);
                    let lo = transform.inverse(mid - half).clamp(0.0, 1.0);
                    let hi = transform.inverse(mid + half).clamp(0.0, 1.0);
                    (lo, hi)
                })
                .unzip();
            BandResult {
                group: sample.label.clone(),
                interval: (t1, t2),
                center_kind: kind,
                alpha: options.alpha,
                transform,
                weight: options.weight,
                replicates: options.replicates,
                seed: options.seed,
                q_alpha,
                lower: StepFunction::from_sorted(points.clone(), lower, 0.0),
                center: StepFunction::from_sorted(points.clone(), center, 0.0),
                upper: StepFunction::from_sorted(points.clone(), upper, 1.0),
            }
        })
        .collect())
}
