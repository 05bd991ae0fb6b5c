//! Weighted isotonic regression onto the cone `u_1 <= ... <= u_k` and its
//! pointwise application across groups.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::CifEstimate;
use crate::step::StepFunction;

#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicProblem {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl IsotonicProblem {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::Precondition(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Precondition("isotonic weights must be positive and finite".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("isotonic values must be finite".into()));
        }
        Ok(Self { values, weights })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Pool-adjacent-violators solution of the weighted projection.
pub fn isoreg_weighted(p: &IsotonicProblem) -> Vec<f64> {
    pava(&p.values, &p.weights)
}

struct Block {
    mean: f64,
    weight: f64,
    len: usize,
    // range of the pooled inputs; the exact mean always lies inside it
    lo: f64,
    hi: f64,
}

impl Block {
    fn merge(&self, next: &Block) -> Block {
        let weight = self.weight + next.weight;
        let (lo, hi) = (self.lo.min(next.lo), self.hi.max(next.hi));
        let mean = ((self.mean * self.weight + next.mean * next.weight) / weight).clamp(lo, hi);
        Block { mean, weight, len: self.len + next.len, lo, hi }
    }
}

pub(crate) fn pava(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<Block> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        let mut cur = Block { mean: v, weight: w, len: 1, lo: v, hi: v };
        while let Some(prev) = blocks.last() {
            if prev.mean <= cur.mean {
                break;
            }
            cur = prev.merge(&cur);
            blocks.pop();
        }
        blocks.push(cur);
    }
    blocks.into_iter().flat_map(|b| std::iter::repeat_n(b.mean, b.len)).collect()
}

/// The max-min characterisation
/// `x*_i = max_{r <= i} min_{s >= i} Av[x; r, s]`, evaluated directly in O(k^3).
///
/// Kept as an independent reference for [`isoreg_weighted`].
pub fn isoreg_maxmin(p: &IsotonicProblem) -> Vec<f64> {
    let k = p.values.len();
    let avg = |r: usize, s: usize| {
        let (num, den) = (r..=s).fold((0.0, 0.0), |(a, b), l| {
            (a + p.weights[l] * p.values[l], b + p.weights[l])
        });
        num / den
    };
    (0..k)
        .map(|i| {
            (0..=i)
                .map(|r| (i..k).map(|s| avg(r, s)).fold(f64::INFINITY, f64::min))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Order-restricted cause-1 CIF estimates on a shared grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestrictedCifSet {
    pub groups: Vec<String>,
    pub weights: Vec<f64>,
    pub estimates: Vec<StepFunction>,
    pub restricted: bool,
}

/// Replaces the k-vector of estimates at each grid point by its weighted
/// isotonic regression.
///
/// Every estimate's knots must lie on `grid`; the estimates are constant
/// between grid points, so the projection is exact everywhere.
pub fn restrict_cifs(estimates: &[CifEstimate], weights: &[f64], grid: &[f64]) -> Result<RestrictedCifSet> {
    if estimates.len() != weights.len() {
        return Err(Error::Precondition(format!(
            "{} estimates but {} weights",
            estimates.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::Precondition("isotonic weights must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("grid must be strictly increasing".into()));
    }
    for e in estimates {
        let on_grid = e
            .f_hat
            .knots()
            .iter()
            .all(|k| grid.binary_search_by(|g| g.total_cmp(k)).is_ok());
        if !on_grid {
            return Err(Error::Precondition(format!(
                "estimate for group `{}` has knots off the shared grid",
                e.group
            )));
        }
    }

    let columns: Vec<Vec<f64>> = estimates.iter().map(|e| e.f_hat.evaluate_sorted(grid)).collect();
    let initial: Vec<f64> = estimates.iter().map(|e| e.f_hat.initial_value()).collect();
    let initial = pava(&initial, weights);

    let k = estimates.len();
    let mut out = vec![Vec::with_capacity(grid.len()); k];
    let mut point = vec![0.0; k];
    for m in 0..grid.len() {
        for (slot, col) in point.iter_mut().zip(&columns) {
            *slot = col[m];
        }
        for (dst, v) in out.iter_mut().zip(pava(&point, weights)) {
            dst.push(v);
        }
    }

    Ok(RestrictedCifSet {
        groups: estimates.iter().map(|e| e.group.clone()).collect(),
        weights: weights.to_vec(),
        estimates: out
            .into_iter()
            .zip(initial)
            .map(|(values, init)| StepFunction::from_sorted(grid.to_vec(), values, init))
            .collect(),
        restricted: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Cause;
    use proptest::prelude::*;

    fn problem(v: &[f64], w: &[f64]) -> IsotonicProblem {
        IsotonicProblem::new(v.to_vec(), w.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn isotonic_input_unchanged() {
        let p = problem(&[0.1, 0.2, 0.3], &[5.0, 0.5, 2.0]);
        assert_eq!(isoreg_weighted(&p), vec![0.1, 0.2, 0.3]);
        assert!(close(&isoreg_maxmin(&p), &[0.1, 0.2, 0.3], 1e-12));
    }

    #[test]
    fn violating_pair_pools_to_weighted_mean() {
        let p = problem(&[0.6, 0.2], &[1.0, 3.0]);
        assert!(close(&isoreg_weighted(&p), &[0.3, 0.3], 1e-15));
        assert!(close(&isoreg_maxmin(&p), &[0.3, 0.3], 1e-12));
    }

    #[test]
    fn interior_violation() {
        let p = problem(&[0.1, 0.2, 0.15, 0.3], &[1.0; 4]);
        let expected = [0.1, 0.175, 0.175, 0.3];
        assert!(close(&isoreg_maxmin(&p), &expected, 1e-12));
        assert!(close(&isoreg_weighted(&p), &expected, 1e-12));
    }

    #[test]
    fn single_element() {
        let p = problem(&[0.7], &[2.0]);
        assert_eq!(isoreg_weighted(&p), vec![0.7]);
        assert_eq!(isoreg_maxmin(&p), vec![0.7]);
    }

    #[test]
    fn invalid_problems() {
        assert!(IsotonicProblem::new(vec![0.1], vec![0.0]).is_err());
        assert!(IsotonicProblem::new(vec![0.1, 0.2], vec![1.0]).is_err());
        assert!(IsotonicProblem::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    fn cif(label: &str, knots: &[f64], values: &[f64]) -> CifEstimate {
        CifEstimate {
            group: label.into(),
            cause: Cause::Primary,
            n: 10,
            f_hat: StepFunction::new(knots.to_vec(), values.to_vec(), 0.0).unwrap(),
        }
    }

    #[test]
    fn restrict_pools_crossing_pair() {
        let grid = [1.0, 2.0, 3.0];
        let a = cif("a", &[1.0, 3.0], &[0.4, 0.6]);
        let b = cif("b", &[2.0, 3.0], &[0.2, 0.8]);
        let set = restrict_cifs(&[a, b], &[10.0, 10.0], &grid).unwrap();
        assert_eq!(set.estimates[0].evaluate_sorted(&grid), vec![0.2, 0.3, 0.6]);
        assert_eq!(set.estimates[1].evaluate_sorted(&grid), vec![0.2, 0.3, 0.8]);
    }

    #[test]
    fn restrict_noop_when_ordered() {
        let grid = [1.0, 2.0, 3.0];
        let a = cif("a", &[1.0], &[0.1]);
        let b = cif("b", &[1.0, 2.0], &[0.1, 0.5]);
        let set = restrict_cifs(&[a.clone(), b.clone()], &[3.0, 7.0], &grid).unwrap();
        assert_eq!(set.estimates[0], a.f_hat.on_grid(&grid));
        assert_eq!(set.estimates[1], b.f_hat.on_grid(&grid));
    }

    #[test]
    fn restrict_grid_mismatch() {
        let a = cif("a", &[1.5], &[0.1]);
        let b = cif("b", &[1.0], &[0.1]);
        assert!(matches!(restrict_cifs(&[a, b], &[1.0, 1.0], &[1.0, 2.0]), Err(Error::Precondition(_))));
    }

    fn arb_problem() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..9).prop_flat_map(|k| {
            (prop::collection::vec(-1.0f64..1.0, k), prop::collection::vec(0.1f64..10.0, k))
        })
    }

    proptest! {
        #[test]
        fn pava_matches_maxmin((v, w) in arb_problem()) {
            let p = IsotonicProblem::new(v, w).unwrap();
            prop_assert!(close(&isoreg_weighted(&p), &isoreg_maxmin(&p), 1e-12));
        }

        #[test]
        fn output_is_monotone_and_idempotent((v, w) in arb_problem()) {
            let p = IsotonicProblem::new(v, w.clone()).unwrap();
            let once = isoreg_weighted(&p);
            prop_assert!(once.windows(2).all(|x| x[0] <= x[1]));
            let twice = isoreg_weighted(&IsotonicProblem::new(once.clone(), w).unwrap());
            prop_assert!(close(&once, &twice, 1e-12));
        }

        #[test]
        fn weighted_mean_preserved((v, w) in arb_problem()) {
            let p = IsotonicProblem::new(v.clone(), w.clone()).unwrap();
            let out = isoreg_weighted(&p);
            let before: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            let after: f64 = out.iter().zip(&w).map(|(a, b)| a * b).sum();
            prop_assert!((before - after).abs() <= 1e-12 * (1.0 + before.abs()));
        }

        #[test]
        fn projection_never_increases_sup_error((v, w) in arb_problem(), seed in prop::collection::vec(0.0f64..0.3, 8)) {
            let k = v.len();
            let theta: Vec<f64> = seed[..k].iter().scan(0.0, |acc, s| { *acc += s; Some(*acc) }).collect();
            let out = isoreg_weighted(&IsotonicProblem::new(v.clone(), w).unwrap());
            let err = |x: &[f64]| x.iter().zip(&theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(err(&out) <= err(&v) + 1e-15);
        }
    }
}
