//! Synthetic multimodal sequences with a planted cross-modal label rule.
//!
//! Each example is an admission of `seq_len` days drawn from a span of
//! `2 * seq_len` days. Events are generated with hour time stamps, bagged
//! per day, and days without events vanish in bagging, leaving exactly
//! `seq_len` bags.
//!
//! Label rule, with `K = num_classes`:
//!
//! * two hidden factors `a, b` are uniform on `0..K`; `label = (a + b) mod K`
//! * the categorical modality always carries code `a`, on one random day
//! * with probability `1 - lambda` the same day also carries code `K + b`;
//!   otherwise `b` is carried only by note token `b`, on that same day
//! * when `b` is in the categorical modality, the notes instead carry a
//!   decoy token uniform on `0..K` on the following day, independent of the
//!   label
//! * every day adds distractor codes `2K..cat_vocab` and distractor tokens
//!   `K..notes_vocab`
//! * the continuous features and the context vector carry no label
//!   information
//!
//! At `lambda = 0` the categorical modality alone determines the label; at
//! `lambda = 1` the label needs the categorical and note modalities jointly.
//! The modular sum makes the two factors interact: neither factor alone
//! changes the label distribution. Both factors share a day, so a model
//! mixing modalities before pooling over time can read the label, while one
//! that pools each modality separately and combines linearly cannot.

use crate::data::preprocess::{bag_aggregate, locf_impute, zscore_clamp, Event, NormStats};
use crate::error::{Error, Result};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Hours per bag.
pub const BAG_HOURS: f64 = 24.0;

/// Length of the context vector: scaled age and a binary sex flag.
pub const CONTEXT_DIM: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSpec {
    pub num_examples: usize,
    pub num_classes: usize,
    pub seq_len: usize,
    pub cat_vocab: usize,
    pub notes_vocab: usize,
    pub continuous_features: usize,
    pub missing_rate: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            num_examples: 3000,
            num_classes: 10,
            seq_len: 6,
            cat_vocab: 28,
            notes_vocab: 18,
            continuous_features: 4,
            missing_rate: 0.3,
            lambda: 1.0,
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn check(&self) -> Result<()> {
        let k = self.num_classes;
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.num_examples < 10 {
            return bad("need at least 10 examples so that every split is non-empty");
        }
        if k < 2 {
            return bad("need at least two classes");
        }
        if self.seq_len == 0 {
            return bad("sequence length must be positive");
        }
        if self.cat_vocab <= 2 * k {
            return bad("categorical vocabulary must exceed twice the class count");
        }
        if self.notes_vocab <= k {
            return bad("note vocabulary must exceed the class count");
        }
        if self.continuous_features == 0 {
            return bad("need at least one continuous feature");
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return bad("missing rate must be in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must be in [0, 1]");
        }
        Ok(())
    }

    /// Split sizes in 8:1:1 proportion; rounding goes to the training split.
    pub fn split_sizes(&self) -> [usize; 3] {
        let n = self.num_examples;
        let val = n / 10;
        let test = n / 10;
        [n - val - test, val, test]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: usize,
    /// Categorical codes per bag.
    pub codes: Vec<Vec<usize>>,
    /// Note tokens per bag.
    pub notes: Vec<Vec<usize>>,
    /// Bag means before normalization; `None` where unobserved.
    pub raw_values: Vec<Vec<Option<f64>>>,
    /// Normalized, clamped and imputed values per bag.
    pub values: Vec<Vec<f64>>,
    pub context: Vec<f64>,
    pub label: usize,
}

impl Example {
    pub fn seq_len(&self) -> usize {
        self.codes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: DatasetSpec,
    pub stats: NormStats,
    pub train: Vec<Example>,
    pub validation: Vec<Example>,
    pub test: Vec<Example>,
}

impl Dataset {
    pub fn splits(&self) -> [&[Example]; 3] {
        [&self.train, &self.validation, &self.test]
    }
}

struct Raw {
    events: Vec<Event>,
    context: Vec<f64>,
    label: usize,
}

fn raw_example(spec: &DatasetSpec, rng: &mut ChaCha8Rng) -> Raw {
    let k = spec.num_classes;
    let l = spec.seq_len;
    let f = spec.continuous_features;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    let mut days: Vec<usize> = (0..2 * l).collect::<Vec<_>>().choose_multiple(rng, l).copied().collect();
    days.sort_unstable();

    let a = rng.random_range(0..k);
    let b = rng.random_range(0..k);
    let cross = rng.random::<f64>() < spec.lambda;
    let a_bag = rng.random_range(0..l);
    let decoy = rng.random_range(0..k);

    let mut latent: Vec<f64> = (0..f).map(|_| unit.sample(rng)).collect();
    let mut events = Vec::new();
    for (j, &day) in days.iter().enumerate() {
        let at = |rng: &mut ChaCha8Rng| day as f64 * BAG_HOURS + rng.random::<f64>() * BAG_HOURS;
        for _ in 0..1 + rng.random_range(0..2) {
            events.push(Event::Code { time: at(rng), code: rng.random_range(2 * k..spec.cat_vocab) });
        }
        if rng.random::<f64>() < 0.7 {
            events.push(Event::Note { time: at(rng), token: rng.random_range(k..spec.notes_vocab) });
        }
        if j == a_bag {
            events.push(Event::Code { time: at(rng), code: a });
        }
        if j == a_bag {
            if cross {
                events.push(Event::Note { time: at(rng), token: b });
            } else {
                events.push(Event::Code { time: at(rng), code: k + b });
            }
        }
        if !cross && j == (a_bag + 1) % l {
            events.push(Event::Note { time: at(rng), token: decoy });
        }
        for (feat, z) in latent.iter_mut().enumerate() {
            *z = 0.8 * *z + 0.6 * unit.sample(rng);
            if rng.random::<f64>() < spec.missing_rate {
                continue;
            }
            let (mu, sd) = (10.0 * (feat + 1) as f64, (feat + 1) as f64);
            for _ in 0..1 + rng.random_range(0..2) {
                let value = mu + sd * (*z + 0.3 * unit.sample(rng));
                events.push(Event::Value { time: at(rng), feature: feat, value });
            }
        }
    }
    events.shuffle(rng);
    let age = rng.random_range(18.0..90.0);
    let sex = if rng.random::<bool>() { 1.0 } else { 0.0 };
    Raw { events, context: vec![(age - 54.0) / 21.0, sex], label: (a + b) % k }
}

/// Generates, splits 8:1:1 by a seeded shuffle, and normalizes with
/// training-split statistics.
pub fn generate(spec: &DatasetSpec) -> Result<Dataset> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let f = spec.continuous_features;
    let mut examples: Vec<Example> = (0..spec.num_examples)
        .map(|id| {
            let raw = raw_example(spec, &mut rng);
            let bags = bag_aggregate(&raw.events, BAG_HOURS, f);
            debug_assert_eq!(bags.len(), spec.seq_len);
            Example {
                id,
                codes: bags.iter().map(|b| b.codes.clone()).collect(),
                notes: bags.iter().map(|b| b.notes.clone()).collect(),
                raw_values: bags.iter().map(|b| b.values.clone()).collect(),
                values: Vec::new(),
                context: raw.context,
                label: raw.label,
            }
        })
        .collect();
    examples.shuffle(&mut rng);
    let [n_train, n_val, _] = spec.split_sizes();
    let test = examples.split_off(n_train + n_val);
    let validation = examples.split_off(n_train);
    let train = examples;

    let stats = NormStats::fit(f, train.iter().flat_map(|e| e.raw_values.iter().map(Vec::as_slice)));
    let mut ds = Dataset { spec: spec.clone(), stats, train, validation, test };
    let stats = ds.stats.clone();
    for split in [&mut ds.train, &mut ds.validation, &mut ds.test] {
        for e in split.iter_mut() {
            normalize(e, &stats);
        }
    }
    Ok(ds)
}

/// Fills `values` from `raw_values`: z-score and clamp observed entries,
/// then carry the last observation forward per feature.
pub fn normalize(e: &mut Example, stats: &NormStats) {
    let f = stats.mean.len();
    let z: Vec<Vec<Option<f64>>> = e
        .raw_values
        .iter()
        .map(|row| {
            let filled: Vec<f64> = row.iter().map(|v| v.unwrap_or(0.0)).collect();
            let zs = zscore_clamp(&filled, stats);
            row.iter().zip(zs).map(|(v, z)| v.map(|_| z)).collect()
        })
        .collect();
    let mut values = vec![vec![0.0; f]; z.len()];
    for feat in 0..f {
        let series: Vec<Option<f64>> = z.iter().map(|row| row[feat]).collect();
        for (t, v) in locf_impute(&series).into_iter().enumerate() {
            values[t][feat] = v;
        }
    }
    e.values = values;
}
