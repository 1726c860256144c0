use serde::{Deserialize, Serialize};

use super::Field;
use crate::nfunc::NFunction;
use crate::quad::pairwise_sum;

/// Decreasing rearrangement of `|f|` as a right-continuous step function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RearrangedProfile {
    /// Non-increasing sample magnitudes.
    pub thresholds: Vec<f64>,
    /// Measure carried by each threshold.
    pub measures: Vec<f64>,
    /// Right end `s_k` of the interval on which `u*` equals `thresholds[k]`.
    pub s_right: Vec<f64>,
}

pub fn rearrangement(f: &Field) -> RearrangedProfile {
    let weights = f.grid().quadrature_weights();
    let mut pairs: Vec<(f64, f64)> = f.pointwise_norms().into_iter().zip(weights).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (thresholds, measures): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let mut acc = 0.0;
    let s_right = measures
        .iter()
        .map(|m| {
            acc += m;
            acc
        })
        .collect();
    RearrangedProfile { thresholds, measures, s_right }
}

impl RearrangedProfile {
    pub fn total_measure(&self) -> f64 {
        pairwise_sum(&self.measures)
    }

    /// `u*(s)`; zero beyond the total measure.
    pub fn eval(&self, s: f64) -> f64 {
        let k = self.s_right.partition_point(|&r| r <= s);
        self.thresholds.get(k).copied().unwrap_or(0.0)
    }

    /// `sum_k phi(threshold_k) measure_k`.
    pub fn integrate_phi(&self, phi: &NFunction) -> f64 {
        let terms: Vec<f64> = self.thresholds.iter().zip(&self.measures).map(|(&t, &m)| m * phi.value(t)).collect();
        pairwise_sum(&terms)
    }

    /// Left end of interval `k`.
    pub fn s_left(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.s_right[k - 1]
        }
    }
}
