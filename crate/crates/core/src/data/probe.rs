//! Multinomial logistic probes over hand-built example features.
//!
//! Each modality contributes presence indicators (codes, note tokens) or
//! time means and last values (continuous features), plus indicators of
//! every unordered pair of its own present items. The joint probe also adds
//! indicators of every (code, note token) pair, so it can represent any
//! label rule over one item from each modality.

use crate::data::generate::{Dataset, Example, CONTEXT_DIM};
use crate::tensor::optim::{ADAM_BETA1, ADAM_BETA2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeInput {
    Categorical,
    Continuous,
    Notes,
    /// All modalities with cross-modal pair indicators.
    Joint,
}

impl ProbeInput {
    pub const SINGLE: [ProbeInput; 3] = [ProbeInput::Categorical, ProbeInput::Continuous, ProbeInput::Notes];
}

type Sparse = Vec<(usize, f64)>;

fn present(bags: &[Vec<usize>], vocab: usize) -> Vec<usize> {
    let mut seen = vec![false; vocab];
    for &t in bags.iter().flatten() {
        seen[t] = true;
    }
    (0..vocab).filter(|&t| seen[t]).collect()
}

fn pair_index(u: usize, v: usize, n: usize) -> usize {
    // u < v, upper triangle without the diagonal
    u * n - u * (u + 1) / 2 + (v - u - 1)
}

struct Layout {
    cat: usize,
    notes: usize,
    cont: usize,
}

impl Layout {
    fn pairs(n: usize) -> usize {
        n * (n - 1) / 2
    }
}

fn features(e: &Example, l: &Layout, which: ProbeInput) -> (Sparse, usize) {
    let mut out: Sparse = Vec::new();
    let mut off = 0;
    for (i, &c) in e.context.iter().enumerate() {
        out.push((i, c));
    }
    off += CONTEXT_DIM;
    let tokens = |out: &mut Sparse, off: &mut usize, items: &[usize], n: usize| {
        for &t in items {
            out.push((*off + t, 1.0));
        }
        *off += n;
        for (i, &u) in items.iter().enumerate() {
            for &v in &items[i + 1..] {
                out.push((*off + pair_index(u, v, n), 1.0));
            }
        }
        *off += Layout::pairs(n);
    };
    let cat = present(&e.codes, l.cat);
    let notes = present(&e.notes, l.notes);
    let use_cat = matches!(which, ProbeInput::Categorical | ProbeInput::Joint);
    let use_notes = matches!(which, ProbeInput::Notes | ProbeInput::Joint);
    let use_cont = matches!(which, ProbeInput::Continuous | ProbeInput::Joint);
    if use_cat {
        tokens(&mut out, &mut off, &cat, l.cat);
    }
    if use_notes {
        tokens(&mut out, &mut off, &notes, l.notes);
    }
    if use_cont {
        let t = e.values.len() as f64;
        for f in 0..l.cont {
            let mean = e.values.iter().map(|row| row[f]).sum::<f64>() / t;
            out.push((off + f, mean));
            out.push((off + l.cont + f, e.values.last().map(|r| r[f]).unwrap_or(0.0)));
        }
        off += 2 * l.cont;
    }
    if which == ProbeInput::Joint {
        for &u in &cat {
            for &v in &notes {
                out.push((off + u * l.notes + v, 1.0));
            }
        }
        off += l.cat * l.notes;
    }
    (out, off)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
}

/// Fits a softmax regression with Adam on the training split and reports
/// argmax accuracy.
pub fn fit_probe(ds: &Dataset, which: ProbeInput, seed: u64) -> ProbeResult {
    let l = Layout { cat: ds.spec.cat_vocab, notes: ds.spec.notes_vocab, cont: ds.spec.continuous_features };
    let k = ds.spec.num_classes;
    let encode = |xs: &[Example]| -> (Vec<Sparse>, usize) {
        let mut dim = 0;
        let rows = xs
            .iter()
            .map(|e| {
                let (f, d) = features(e, &l, which);
                dim = d;
                f
            })
            .collect();
        (rows, dim)
    };
    let (train, dim) = encode(&ds.train);
    let (val, _) = encode(&ds.validation);
    let mut w = vec![0.0; (dim + 1) * k];
    let mut m = vec![0.0; w.len()];
    let mut v = vec![0.0; w.len()];
    let mut g = vec![0.0; w.len()];
    let (lr, l2, epochs, batch) = (0.05, 1e-4, 60, 64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut t = 0;
    let logits = |w: &[f64], x: &Sparse| -> Vec<f64> {
        (0..k)
            .map(|c| w[dim * k + c] + x.iter().map(|&(i, val)| w[i * k + c] * val).sum::<f64>())
            .collect()
    };
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            g.iter_mut().for_each(|x| *x = 0.0);
            for &idx in chunk {
                let x = &train[idx];
                let mut p = logits(&w, x);
                let mx = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = p.iter_mut().map(|z| {
                    *z = (*z - mx).exp();
                    *z
                }).sum();
                p.iter_mut().for_each(|z| *z /= s);
                p[ds.train[idx].label] -= 1.0;
                for c in 0..k {
                    let d = p[c] / chunk.len() as f64;
                    g[dim * k + c] += d;
                    for &(i, val) in x {
                        g[i * k + c] += d * val;
                    }
                }
            }
            t += 1;
            let (c1, c2) = (1.0 - ADAM_BETA1.powi(t), 1.0 - ADAM_BETA2.powi(t));
            for i in 0..w.len() {
                let gi = g[i] + l2 * w[i];
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * gi;
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * gi * gi;
                w[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + 1e-8);
            }
        }
    }
    let accuracy = |rows: &[Sparse], xs: &[Example]| -> f64 {
        let hits = rows
            .iter()
            .zip(xs)
            .filter(|(x, e)| {
                let z = logits(&w, x);
                let best = (0..k).fold(0, |b, c| if z[c] > z[b] { c } else { b });
                best == e.label
            })
            .count();
        hits as f64 / xs.len().max(1) as f64
    };
    ProbeResult { train_accuracy: accuracy(&train, &ds.train), validation_accuracy: accuracy(&val, &ds.validation) }
}
