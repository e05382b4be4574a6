//! Normalization, clamping, imputation and temporal bagging.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Z-scores beyond this many standard deviations are clamped.
pub const CLAMP_SIGMA: f64 = 10.0;

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Statistics over observed values only. `rows` yields one value per
    /// feature with `None` for missing entries. Features never observed get
    /// mean 0 and std 0.
    pub fn fit<'a>(features: usize, rows: impl Iterator<Item = &'a [Option<f64>]>) -> Self {
        let mut n = vec![0usize; features];
        let mut mean = vec![0.0; features];
        let mut m2 = vec![0.0; features];
        for row in rows {
            for (f, v) in row.iter().enumerate() {
                if let Some(x) = *v {
                    // Welford
                    n[f] += 1;
                    let d = x - mean[f];
                    mean[f] += d / n[f] as f64;
                    m2[f] += d * (x - mean[f]);
                }
            }
        }
        let std = m2.iter().zip(&n).map(|(&s, &k)| if k > 0 { (s / k as f64).sqrt() } else { 0.0 }).collect();
        NormStats { mean, std }
    }
}

/// `(x - mean) / std` clipped to `[-10, 10]`; zero-variance features map to 0.
pub fn zscore_clamp(values: &[f64], stats: &NormStats) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .map(|(f, &x)| {
            let s = stats.std[f];
            if s > 0.0 {
                ((x - stats.mean[f]) / s).clamp(-CLAMP_SIGMA, CLAMP_SIGMA)
            } else {
                0.0
            }
        })
        .collect()
}

/// Last observation carried forward; entries before the first observation
/// become 0.
pub fn locf_impute(series: &[Option<f64>]) -> Vec<f64> {
    let mut last = 0.0;
    series
        .iter()
        .map(|v| {
            if let Some(x) = *v {
                last = x;
            }
            last
        })
        .collect()
}

/// A time-stamped observation. Times are in hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Event {
    Code { time: f64, code: usize },
    Note { time: f64, token: usize },
    Value { time: f64, feature: usize, value: f64 },
}

impl Event {
    pub fn time(&self) -> f64 {
        match *self {
            Event::Code { time, .. } | Event::Note { time, .. } | Event::Value { time, .. } => time,
        }
    }
}

/// Aggregated contents of one non-empty bag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bag {
    pub index: i64,
    pub codes: Vec<usize>,
    pub notes: Vec<usize>,
    /// Mean of each feature's values inside the bag; `None` if unobserved.
    pub values: Vec<Option<f64>>,
}

/// Groups events into bags of `bag_length` hours. Codes and note tokens
/// are unioned (sorted, duplicates kept once), continuous values averaged
/// per feature. Bags without events are dropped.
pub fn bag_aggregate(events: &[Event], bag_length: f64, features: usize) -> Vec<Bag> {
    assert!(bag_length > 0.0, "bag length must be positive");
    let mut bags = BTreeMap::<i64, (Vec<usize>, Vec<usize>)>::new();
    let mut sums = BTreeMap::<i64, Vec<(f64, usize)>>::new();
    for e in events {
        let idx = (e.time() / bag_length).floor() as i64;
        let entry = bags.entry(idx).or_default();
        match *e {
            Event::Code { code, .. } => entry.0.push(code),
            Event::Note { token, .. } => entry.1.push(token),
            Event::Value { feature, value, .. } => {
                let acc = sums.entry(idx).or_insert_with(|| vec![(0.0, 0); features]);
                acc[feature].0 += value;
                acc[feature].1 += 1;
            }
        }
    }
    bags.into_iter()
        .map(|(index, (mut codes, mut notes))| {
            codes.sort_unstable();
            codes.dedup();
            notes.sort_unstable();
            notes.dedup();
            let values = match sums.get(&index) {
                Some(acc) => acc.iter().map(|&(s, n)| (n > 0).then(|| s / n as f64)).collect(),
                None => vec![None; features],
            };
            Bag { index, codes, notes, values }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zscore_examples() {
        let stats = NormStats { mean: vec![5.0, 1.0], std: vec![2.0, 0.0] };
        assert_eq!(zscore_clamp(&[5.0, 3.0], &stats), vec![0.0, 0.0]);
        assert_eq!(zscore_clamp(&[5.0 + 12.0 * 2.0, 0.0], &stats)[0], 10.0);
        assert_eq!(zscore_clamp(&[5.0 - 30.0 * 2.0, 0.0], &stats)[0], -10.0);
    }

    #[test]
    fn locf_examples() {
        assert_eq!(locf_impute(&[Some(1.0), None, None]), vec![1.0, 1.0, 1.0]);
        assert_eq!(locf_impute(&[None, Some(2.0)]), vec![0.0, 2.0]);
        assert_eq!(locf_impute(&[Some(1.0), Some(3.0)]), vec![1.0, 3.0]);
    }

    #[test]
    fn bag_examples() {
        let ev = [
            Event::Value { time: 1.0, feature: 0, value: 2.0 },
            Event::Value { time: 5.0, feature: 0, value: 4.0 },
        ];
        let bags = bag_aggregate(&ev, 24.0, 1);
        assert_eq!(bags.len(), 1);
        assert_eq!(bags[0].values, vec![Some(3.0)]);

        let ev = [
            Event::Code { time: 2.0, code: 1 },
            Event::Code { time: 50.0, code: 2 },
        ];
        let bags = bag_aggregate(&ev, 24.0, 1);
        assert_eq!(bags.iter().map(|b| b.index).collect::<Vec<_>>(), vec![0, 2]);

        let bags = bag_aggregate(&[Event::Note { time: 3.0, token: 7 }], 24.0, 2);
        assert_eq!(bags.len(), 1);
        assert_eq!(bags[0].notes, vec![7]);
        assert_eq!(bags[0].values, vec![None, None]);
    }
}
