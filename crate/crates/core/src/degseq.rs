//! Degree sequences: power-law sampling, the canonical sequence, and the
//! Erdős–Gallai graphicality test.
//!
//! Power-law draws use the continuous distribution with `P(X <= x) = 1 - x^-(tau-1)`
//! for `x >= 1`, rounded to the nearest integer. The discrete zeta-normalised
//! law is never evaluated.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of whole-sequence draws before i.i.d. sampling gives up.
pub const DEFAULT_MAX_ATTEMPTS: usize = 10_000;

/// An ordered list of prescribed vertex degrees. Vertex `i` has degree `degrees[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DegreeSequence {
    degrees: Vec<u32>,
    total: u64,
    /// Set when the canonical construction bumped one degree to make the sum even.
    #[serde(default)]
    parity_adjusted: bool,
}

impl DegreeSequence {
    /// Builds a sequence, rejecting zero degrees.
    pub fn new(degrees: Vec<u32>) -> Result<Self> {
        if let Some(pos) = degrees.iter().position(|&d| d == 0) {
            return Err(Error::InvalidParameter(format!(
                "degree of vertex {pos} is zero; degrees must be positive"
            )));
        }
        let total = degrees.iter().map(|&d| u64::from(d)).sum();
        Ok(Self {
            degrees,
            total,
            parity_adjusted: false,
        })
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// Sum of all degrees (`L_n`).
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_even(&self) -> bool {
        self.total % 2 == 0
    }

    pub fn max_degree(&self) -> u32 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn parity_adjusted(&self) -> bool {
        self.parity_adjusted
    }

    pub fn is_graphical(&self) -> bool {
        is_graphical(&self.degrees)
    }

    /// Fails with [`Error::NotGraphical`] unless the sequence is graphical.
    pub fn ensure_graphical(&self) -> Result<()> {
        if self.is_graphical() {
            Ok(())
        } else {
            Err(Error::NotGraphical {
                degrees: self.degrees.clone(),
            })
        }
    }

    /// Copy with degrees in non-increasing order.
    pub fn sorted_desc(&self) -> Self {
        let mut degrees = self.degrees.clone();
        degrees.sort_unstable_by(|a, b| b.cmp(a));
        Self {
            degrees,
            total: self.total,
            parity_adjusted: self.parity_adjusted,
        }
    }

    /// Reads the plain-text format: one integer per line, blank lines skipped.
    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut degrees = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let d = trimmed.parse::<u32>().map_err(|e| Error::Parse {
                line: idx + 1,
                message: format!("{trimmed:?}: {e}"),
            })?;
            degrees.push(d);
        }
        Self::new(degrees)
    }

    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<()> {
        for d in &self.degrees {
            writeln!(writer, "{d}")?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for DegreeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, d) in self.degrees.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "}}")
    }
}

/// Exponent and size of a power-law degree sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawParams {
    pub tau: f64,
    pub n: usize,
}

impl PowerLawParams {
    pub fn new(tau: f64, n: usize) -> Result<Self> {
        check_tau(tau)?;
        if n < 2 {
            return Err(Error::InvalidParameter(format!("n = {n}, need n >= 2")));
        }
        Ok(Self { tau, n })
    }

    /// `2 < tau < 3`, the infinite-variance regime. Any `tau > 2` is accepted.
    pub fn in_studied_regime(&self) -> bool {
        self.tau > 2.0 && self.tau < 3.0
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "tau = {tau}, need a finite tau > 2"
        )))
    }
}

/// Inverse-CDF draw from the continuous power law, rounded to the nearest
/// integer: `round((1 - u)^(-1 / (tau - 1)))`.
///
/// Accepts `tau >= 2` here so the `tau = 2` boundary can be evaluated
/// directly; sequence constructors require `tau > 2`.
pub fn inverse_cdf_sample(u: f64, tau: f64) -> Result<u64> {
    if !(tau.is_finite() && tau >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "tau = {tau}, need tau >= 2"
        )));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(Error::InvalidParameter(format!("u = {u} outside [0, 1)")));
    }
    let x = (1.0 - u).powf(-1.0 / (tau - 1.0)).round();
    // Saturate: anything this large is far beyond any realisable degree.
    Ok(if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x as u64
    })
}

/// Whole-sequence rejection sampler for i.i.d. power-law degree sequences.
#[derive(Debug, Clone, Copy)]
pub struct IidSampler {
    pub params: PowerLawParams,
    pub max_attempts: usize,
}

impl IidSampler {
    pub fn new(params: PowerLawParams) -> Self {
        Self {
            params,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    pub fn with_max_attempts(mut self, max_attempts: usize) -> Self {
        self.max_attempts = max_attempts;
        self
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DegreeSequence> {
        self.sample_with(|| rng.random::<f64>())
    }

    /// Same as [`IidSampler::sample`] but with an explicit source of uniforms.
    pub fn sample_with(&self, mut uniform: impl FnMut() -> f64) -> Result<DegreeSequence> {
        let PowerLawParams { tau, n } = self.params;
        check_tau(tau)?;
        let cap = u64::from(u32::MAX);
        let mut degrees = vec![0u32; n];
        for _ in 0..self.max_attempts {
            for d in degrees.iter_mut() {
                *d = inverse_cdf_sample(uniform(), tau)?.min(cap) as u32;
            }
            if is_graphical(&degrees) {
                return DegreeSequence::new(degrees);
            }
        }
        Err(Error::SamplingBudgetExceeded {
            attempts: self.max_attempts,
        })
    }
}

/// Samples `n` i.i.d. power-law degrees, redrawing the whole sequence until
/// it is graphical.
pub fn sample_iid_sequence<R: Rng + ?Sized>(
    params: PowerLawParams,
    rng: &mut R,
) -> Result<DegreeSequence> {
    IidSampler::new(params).sample(rng)
}

/// The deterministic sequence `d_i = round((i/n)^(-1/(tau-1)))`, `i = 1..=n`,
/// non-increasing. An odd sum is repaired by adding one to the last
/// (smallest) degree and re-sorting.
pub fn canonical_sequence(params: PowerLawParams) -> Result<DegreeSequence> {
    let PowerLawParams { tau, n } = params;
    check_tau(tau)?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n = {n}, need n >= 2")));
    }
    let nf = n as f64;
    let exponent = -1.0 / (tau - 1.0);
    let mut degrees: Vec<u32> = (1..=n)
        .map(|i| (i as f64 / nf).powf(exponent).round() as u32)
        .collect();
    let mut parity_adjusted = false;
    let total: u64 = degrees.iter().map(|&d| u64::from(d)).sum();
    if total % 2 == 1 {
        *degrees.last_mut().expect("n >= 2") += 1;
        degrees.sort_unstable_by(|a, b| b.cmp(a));
        parity_adjusted = true;
    }
    let mut seq = DegreeSequence::new(degrees)?;
    seq.parity_adjusted = parity_adjusted;
    seq.ensure_graphical()?;
    Ok(seq)
}

/// Erdős–Gallai test. Accepts any order and zero entries; `O(n log n)`.
pub fn is_graphical(degrees: &[u32]) -> bool {
    let n = degrees.len();
    let total: u64 = degrees.iter().map(|&d| u64::from(d)).sum();
    if total % 2 == 1 {
        return false;
    }
    if degrees.iter().any(|&d| d as usize >= n.max(1)) && n > 0 {
        return false;
    }
    let mut d: Vec<u64> = degrees.iter().map(|&x| u64::from(x)).collect();
    d.sort_unstable_by(|a, b| b.cmp(a));

    // suffix[i] = d[i] + ... + d[n-1]
    let mut suffix = vec![0u64; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + d[i];
    }
    // `ge` is the number of entries >= k; it only shrinks as k grows.
    let mut ge = n;
    let mut prefix = 0u64;
    for k in 1..=n {
        prefix += d[k - 1];
        let kk = k as u64;
        while ge > 0 && d[ge - 1] < kk {
            ge -= 1;
        }
        // Entries after position k: those >= k contribute k, the rest themselves.
        let split = ge.max(k);
        let rhs = kk * (kk - 1) + kk * (split - k) as u64 + suffix[split];
        if prefix > rhs {
            return false;
        }
    }
    true
}
