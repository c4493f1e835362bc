//! Histogram comparison, empirical mixing time, log-log fits and the
//! closed-form edge-probability comparators.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// Empirical distribution over integer triangle counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleHistogram {
    counts: BTreeMap<u64, u64>,
    total: u64,
}

impl TriangleHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: u64) {
        self.add_many(value, 1);
    }

    pub fn add_many(&mut self, value: u64, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry(value).or_insert(0) += count;
        self.total += count;
    }

    /// Adds all of `other`'s counts. Commutative and associative.
    pub fn merge(&mut self, other: &TriangleHistogram) {
        for (&v, &c) in &other.counts {
            self.add_many(v, c);
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn count(&self, value: u64) -> u64 {
        self.counts.get(&value).copied().unwrap_or(0)
    }

    /// `(value, count)` pairs in increasing value order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&v, &c)| (v, c))
    }

    pub fn frequency(&self, value: u64) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(value) as f64 / self.total as f64
        }
    }

    pub fn mean(&self) -> Option<f64> {
        if self.total == 0 {
            return None;
        }
        let sum: f64 = self.iter().map(|(v, c)| v as f64 * c as f64).sum();
        Some(sum / self.total as f64)
    }

    pub fn variance(&self) -> Option<f64> {
        let mean = self.mean()?;
        let ss: f64 = self
            .iter()
            .map(|(v, c)| c as f64 * (v as f64 - mean).powi(2))
            .sum();
        Some(ss / self.total as f64)
    }

    /// CSV with a `value,count` header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "value,count")?;
        for (v, c) in self.iter() {
            writeln!(w, "{v},{c}")?;
        }
        Ok(())
    }

    /// Reads `value,count` rows; a non-numeric first line is taken as a header.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut h = Self::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || (idx == 0 && t.starts_with(|c: char| c.is_ascii_alphabetic())) {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            let (v, c) = t
                .split_once(',')
                .ok_or_else(|| err("expected value,count".into()))?;
            let v = v.trim().parse::<u64>().map_err(|e| err(e.to_string()))?;
            let c = c.trim().parse::<u64>().map_err(|e| err(e.to_string()))?;
            h.add_many(v, c);
        }
        Ok(h)
    }
}

impl FromIterator<u64> for TriangleHistogram {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        let mut h = Self::new();
        for v in iter {
            h.add(v);
        }
        h
    }
}

/// Total variation distance between the normalised histograms,
/// `(1/2) Σ_k |p(k) - q(k)|` over the union of supports.
pub fn tv_distance(p: &TriangleHistogram, q: &TriangleHistogram) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::Contract(
            "tv_distance needs non-empty histograms".into(),
        ));
    }
    let (np, nq) = (p.total as f64, q.total as f64);
    let mut sum = 0.0;
    let mut a = p.counts.iter().peekable();
    let mut b = q.counts.iter().peekable();
    loop {
        let term = match (a.peek(), b.peek()) {
            (None, None) => break,
            (Some(&(&k, &c)), None) => {
                a.next();
                let _ = k;
                c as f64 / np
            }
            (None, Some(&(_, &c))) => {
                b.next();
                c as f64 / nq
            }
            (Some(&(&ka, &ca)), Some(&(&kb, &cb))) => {
                if ka < kb {
                    a.next();
                    ca as f64 / np
                } else if kb < ka {
                    b.next();
                    cb as f64 / nq
                } else {
                    a.next();
                    b.next();
                    (ca as f64 / np - cb as f64 / nq).abs()
                }
            }
        };
        sum += term;
    }
    Ok((0.5 * sum).min(1.0))
}

/// First checkpoint whose histogram is within `threshold` (strictly) of the
/// reference in total variation.
pub fn empirical_mixing_time(
    series: &[(u64, TriangleHistogram)],
    reference: &TriangleHistogram,
    threshold: f64,
) -> Result<Option<u64>> {
    if series.is_empty() {
        return Err(Error::Contract(
            "empirical_mixing_time needs a non-empty series".into(),
        ));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold {threshold} outside (0, 1)"
        )));
    }
    if series.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::Contract(
            "checkpoints must be strictly increasing".into(),
        ));
    }
    for (t, h) in series {
        if tv_distance(h, reference)? < threshold {
            return Ok(Some(*t));
        }
    }
    Ok(None)
}

/// Least-squares fit of `log(y) = a log(n) + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub rss: f64,
    /// Standard OLS error of the slope; NaN (serialised as `null`) with only two points.
    #[serde(deserialize_with = "null_as_nan")]
    pub stderr_a: f64,
}

fn null_as_nan<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Ordinary least squares of `ln(mean)` on `ln(n)`, natural logarithms.
/// Data points carry no uncertainty in the slope error.
pub fn loglog_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    for &(n, y) in points {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Domain(format!("abscissa {n} must be positive")));
        }
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::Domain(format!(
                "mean triangle count {y} at n = {n} must be positive"
            )));
        }
    }
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 2 distinct n values, got {}",
            distinct.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - a * x - b).powi(2))
        .sum::<f64>()
        .max(0.0);
    let stderr_a = if xs.len() > 2 {
        (rss / (k - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(FitResult {
        a,
        b,
        rss,
        stderr_a,
    })
}

/// Triangle-count scaling exponent `(3/2)(3 - tau)` of the erased configuration model.
pub fn predicted_exponent(tau: f64) -> f64 {
    1.5 * (3.0 - tau)
}

/// Edge probability in the erased configuration model, `1 - exp(-di dj / Ln)`.
pub fn edge_prob_ecm(di: u64, dj: u64, ln: u64) -> Result<f64> {
    check_ln(ln)?;
    let x = di as f64 * dj as f64 / ln as f64;
    Ok(-(-x).exp_m1())
}

/// Edge probability in the uniform random graph, `di dj / (Ln + di dj)`.
pub fn edge_prob_urg(di: u64, dj: u64, ln: u64) -> Result<f64> {
    check_ln(ln)?;
    let w = di as f64 * dj as f64;
    Ok(w / (ln as f64 + w))
}

fn check_ln(ln: u64) -> Result<()> {
    if ln == 0 {
        Err(Error::Contract("total degree Ln must be positive".into()))
    } else {
        Ok(())
    }
}

/// Sample Pearson correlation; `None` with fewer than two points or zero variance.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
