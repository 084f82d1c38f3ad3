//! Informativeness and diversity measures.
//!
//! All logarithms are natural. Functions are pure and safe to call from any
//! thread.

use crate::{Error, Result};

const PROB_TOLERANCE: f64 = 1e-6;

/// Scaling of the preemption objective `λi·gi + λd·gd`, plus the `α` of `gd`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveWeights {
    pub lambda_i: f64,
    pub lambda_d: f64,
    pub alpha: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            lambda_i: 1.0,
            lambda_d: 1.0,
            alpha: 1.0,
        }
    }
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda_i.is_finite()
            && self.lambda_d.is_finite()
            && self.alpha.is_finite()
            && self.lambda_i >= 0.0
            && self.lambda_d >= 0.0
            && self.alpha > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "objective weights must be finite, lambdas >= 0 and alpha > 0: {self:?}"
            )))
        }
    }
}

fn check_probabilities(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidProbability("empty vector".into()));
    }
    if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidProbability(format!("entry {v}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOLERANCE {
        return Err(Error::InvalidProbability(format!("sums to {sum}")));
    }
    Ok(())
}

/// Shannon entropy `-Σ p ln p` in nats, with `0 ln 0 = 0`.
pub fn entropy(p: &[f64]) -> Result<f64> {
    check_probabilities(p)?;
    let h: f64 = p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
    Ok(h.max(0.0))
}

/// `1 - (p(1) - p(2))` for the two largest entries; 1 means a coin flip.
pub fn margin_informativeness(p: &[f64]) -> Result<f64> {
    check_probabilities(p)?;
    if p.len() < 2 {
        return Err(Error::InvalidProbability(
            "margin needs at least two classes".into(),
        ));
    }
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &v in p {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    Ok(1.0 - (first - second))
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `1 - cos(u, v)`, clamped to `[0, 2]`. A zero vector is at distance 1 from
/// everything.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Ok(1.0);
    }
    Ok((1.0 - dot(u, v) / (nu * nv)).clamp(0.0, 2.0))
}

/// Mean pairwise cosine distance; 0 when fewer than two vectors are given.
pub fn diversity<V: AsRef<[f64]>>(vs: &[V]) -> Result<f64> {
    if let Some(first) = vs.first() {
        let d = first.as_ref().len();
        if let Some(bad) = vs.iter().find(|v| v.as_ref().len() != d) {
            return Err(Error::LengthMismatch {
                left: d,
                right: bad.as_ref().len(),
            });
        }
    }
    let n = vs.len();
    if n < 2 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += cosine_distance(vs[i].as_ref(), vs[j].as_ref())?;
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

/// Sum of entropies over a batch.
pub fn info_objective<P: AsRef<[f64]>>(ps: &[P]) -> Result<f64> {
    ps.iter().map(|p| entropy(p.as_ref())).sum()
}

/// `½ ln det(I + α A)` where `A` is the Gram matrix of the unit-normalized
/// vectors.
pub fn logdet_diversity<V: AsRef<[f64]>>(vs: &[V], alpha: f64) -> Result<f64> {
    let n = vs.len();
    if n == 0 {
        return Ok(0.0);
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be > 0, got {alpha}"
        )));
    }
    let d = vs[0].as_ref().len();
    let mut unit = Vec::with_capacity(n);
    for v in vs {
        let v = v.as_ref();
        if v.len() != d {
            return Err(Error::LengthMismatch {
                left: d,
                right: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("feature vector"));
        }
        let norm = dot(v, v).sqrt();
        unit.push(if norm > 0.0 {
            v.iter().map(|x| x / norm).collect::<Vec<_>>()
        } else {
            vec![0.0; d]
        });
    }

    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let a = alpha * dot(&unit[i], &unit[j]);
            m[i * n + j] = a;
            m[j * n + i] = a;
        }
        m[i * n + i] += 1.0;
    }

    match cholesky_logdet(&m, n, 0.0) {
        Some(ld) => Ok(0.5 * ld),
        None => cholesky_logdet(&m, n, 1e-6)
            .map(|ld| 0.5 * ld)
            .ok_or(Error::Factorization),
    }
}

/// ln det of a symmetric positive definite `n×n` row-major matrix via
/// Cholesky, with `jitter` added to the diagonal. `None` if not SPD.
fn cholesky_logdet(m: &[f64], n: usize, jitter: f64) -> Option<f64> {
    let mut l = vec![0.0; n * n];
    let mut logdet = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i * n + j];
            if i == j {
                s += jitter;
            }
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                let r = s.sqrt();
                l[i * n + i] = r;
                logdet += 2.0 * r.ln();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(logdet)
}

/// The preemption objective `λi · Σ H(p) + λd · ½ ln det(I + αA)`.
pub fn combined_objective<P: AsRef<[f64]>, V: AsRef<[f64]>>(
    ps: &[P],
    vs: &[V],
    w: &ObjectiveWeights,
) -> Result<f64> {
    if ps.len() != vs.len() {
        return Err(Error::LengthMismatch {
            left: ps.len(),
            right: vs.len(),
        });
    }
    let info = if w.lambda_i == 0.0 {
        0.0
    } else {
        info_objective(ps)?
    };
    let div = if w.lambda_d == 0.0 {
        0.0
    } else {
        logdet_diversity(vs, w.alpha)?
    };
    Ok(w.lambda_i * info + w.lambda_d * div)
}
