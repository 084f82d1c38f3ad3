use rand::Rng;

use crate::metrics::diversity;
use crate::{Error, Result};

/// Mean of the `j` largest values.
pub fn calibrate_info_threshold(values: &[f64], j: usize) -> Result<f64> {
    if j == 0 || j > values.len() {
        return Err(Error::InvalidParameter(format!(
            "j = {j} must lie in 1..={}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("calibration value"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted[..j].iter().sum::<f64>() / j as f64)
}

/// `q` distinct indices from `0..l`, drawn by a partial Fisher–Yates shuffle.
pub fn draw_subset<R: Rng + ?Sized>(l: usize, q: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..l).collect();
    for i in 0..q {
        let pick = rng.gen_range(i..l);
        idx.swap(i, pick);
    }
    idx.truncate(q);
    idx
}

/// Draws `r` random `q`-subsets of `features`, scores each with
/// [`diversity`], and returns the mean of the `j` best scores.
pub fn calibrate_div_threshold<R: Rng + ?Sized>(
    features: &[Vec<f64>],
    q: usize,
    r: usize,
    j: usize,
    rng: &mut R,
) -> Result<f64> {
    let l = features.len();
    if q < 2 || q > l {
        return Err(Error::InvalidParameter(format!(
            "subset size q = {q} must satisfy 2 <= q <= l = {l}"
        )));
    }
    if j == 0 || j > r {
        return Err(Error::InvalidParameter(format!(
            "j = {j} must lie in 1..={r}"
        )));
    }
    let mut scores = Vec::with_capacity(r);
    for _ in 0..r {
        let subset: Vec<&[f64]> = draw_subset(l, q, rng)
            .into_iter()
            .map(|i| features[i].as_slice())
            .collect();
        scores.push(diversity(&subset)?);
    }
    calibrate_info_threshold(&scores, j)
}
