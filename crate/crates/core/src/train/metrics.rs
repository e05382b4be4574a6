use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Whether `label` is among the `k` largest entries of `row`, ranking
/// equal values by lower index first.
pub fn in_top_k<T: Scalar>(row: &[T], label: usize, k: usize) -> bool {
    let target = row[label];
    let ahead = row
        .iter()
        .enumerate()
        .filter(|&(c, &v)| v > target || (v == target && c < label))
        .count();
    ahead < k
}

/// Fraction of rows whose label is among the `k` largest logits.
pub fn recall_at_k<T: Scalar>(logits: &Tensor<T>, labels: &[usize], k: usize) -> Result<f64> {
    let rows = logits.rows();
    if rows == 0 {
        return Err(Error::contract("recall of an empty batch"));
    }
    if labels.len() != rows {
        return Err(Error::contract(format!("{} labels for {rows} rows", labels.len())));
    }
    if k > logits.width() {
        return Err(Error::contract(format!("k = {k} exceeds {} classes", logits.width())));
    }
    let hits = (0..rows).filter(|&r| in_top_k(logits.row(r), labels[r], k)).count();
    Ok(hits as f64 / rows as f64)
}
