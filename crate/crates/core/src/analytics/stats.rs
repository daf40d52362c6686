//! Paired significance tests over per-seed metric values.

use std::fmt;

use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;
use thiserror::Error;

pub const ALPHA: f64 = 0.05;

/// Largest sample size tested by exact sign enumeration.
pub const EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatError {
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 pairs, got {0}")]
    TooFew(usize),
    #[error("differences have zero variance")]
    ZeroVariance,
    #[error("all differences are zero")]
    AllZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMethod {
    PairedT,
    Wilcoxon,
}

impl TestMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TestMethod::PairedT => "paired_t",
            TestMethod::Wilcoxon => "wilcoxon",
        }
    }
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatTestResult {
    pub method: TestMethod,
    pub statistic: f64,
    pub p_value: f64,
    /// Pairs actually used (Wilcoxon drops zero differences).
    pub n: usize,
    pub significant: bool,
}

impl StatTestResult {
    fn new(method: TestMethod, statistic: f64, p_value: f64, n: usize) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            method,
            statistic,
            p_value,
            n,
            significant: p_value < ALPHA,
        }
    }
}

fn differences(xs: &[f64], ys: &[f64]) -> Result<Vec<f64>, StatError> {
    if xs.len() != ys.len() {
        return Err(StatError::LengthMismatch(xs.len(), ys.len()));
    }
    Ok(xs.iter().zip(ys).map(|(x, y)| x - y).collect())
}

/// Two-sided tail probability of Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    // P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)
    beta_reg(df / 2.0, 0.5, df / (df + t * t))
}

pub fn paired_t_test(xs: &[f64], ys: &[f64]) -> Result<StatTestResult, StatError> {
    let d = differences(xs, ys)?;
    let n = d.len();
    if n < 2 {
        return Err(StatError::TooFew(n));
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd == 0.0 || sd <= 1e-12 * mean.abs() {
        return Err(StatError::ZeroVariance);
    }
    let t = mean / (sd / (n as f64).sqrt());
    Ok(StatTestResult::new(
        TestMethod::PairedT,
        t,
        student_t_two_sided(t, (n - 1) as f64),
        n,
    ))
}

/// Midranks of `|d|`, doubled so ties stay integral.
fn doubled_ranks(abs: &[f64]) -> Vec<u64> {
    let mut idx: Vec<usize> = (0..abs.len()).collect();
    idx.sort_by(|&a, &b| abs[a].total_cmp(&abs[b]));
    let mut ranks = vec![0u64; abs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && abs[idx[j + 1]] == abs[idx[i]] {
            j += 1;
        }
        // Ranks i+1..=j+1 share their mean; doubled that is i+j+2.
        for &k in &idx[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

/// Fraction of the 2^n sign patterns whose smaller rank sum is at most
/// `w_obs` (all quantities doubled). Walks the patterns in Gray-code order
/// so each step flips one sign.
fn exact_p(ranks2: &[u64], w_obs2: u64) -> f64 {
    let n = ranks2.len();
    let total: u64 = ranks2.iter().sum();
    let mut plus = 0u64;
    let mut hits = 0u64;
    let mut signs = vec![false; n];
    let patterns = 1u64 << n;
    for k in 0..patterns {
        if k > 0 {
            let bit = k.trailing_zeros() as usize;
            signs[bit] = !signs[bit];
            if signs[bit] {
                plus += ranks2[bit];
            } else {
                plus -= ranks2[bit];
            }
        }
        if plus.min(total - plus) <= w_obs2 {
            hits += 1;
        }
    }
    hits as f64 / patterns as f64
}

pub fn wilcoxon_signed_rank(xs: &[f64], ys: &[f64]) -> Result<StatTestResult, StatError> {
    let d: Vec<f64> = differences(xs, ys)?
        .into_iter()
        .filter(|x| *x != 0.0)
        .collect();
    if d.is_empty() {
        return Err(StatError::AllZero);
    }
    let n = d.len();
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let ranks2 = doubled_ranks(&abs);
    let total2: u64 = ranks2.iter().sum();
    let plus2: u64 = d
        .iter()
        .zip(&ranks2)
        .filter(|(x, _)| **x > 0.0)
        .map(|(_, r)| r)
        .sum();
    let w2 = plus2.min(total2 - plus2);
    let w = w2 as f64 / 2.0;

    let p = if n <= EXACT_MAX_N {
        exact_p(&ranks2, w2)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut tie_term = 0.0;
        let mut sorted = ranks2.clone();
        sorted.sort_unstable();
        for group in sorted.chunk_by(|a, b| a == b) {
            let t = group.len() as f64;
            tie_term += t * t * t - t;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        let z = ((w - mean + 0.5) / var.sqrt()).min(0.0);
        // Two-sided: 2 * Phi(z) = erfc(-z / sqrt 2)
        erfc(-z / std::f64::consts::SQRT_2)
    };
    Ok(StatTestResult::new(TestMethod::Wilcoxon, w, p, n))
}
