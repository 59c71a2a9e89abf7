//! Sub-ensemble error estimates and the modified chi-squared comparison.
//!
//! Every Monte Carlo quantity is averaged per sub-ensemble first. The block
//! means are close to Gaussian, so their scatter gives the standard error of
//! the grand mean, `σ̄ = σ_s / √N_s`. Comparisons against a reference (an
//! experiment, an exact oracle or a second simulation) add the two variances
//! bin by bin.

use alloc::vec;
use alloc::vec::Vec;

use crate::clicks::GroupedDistribution;
use crate::error::{Error, Result};

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64) -> Self {
        Estimate { value, std_error }
    }

    /// `|value − target| ≤ k·σ`.
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.value - target).abs() <= sigmas * self.std_error
    }
}

/// Grand mean and standard error of the mean from sub-ensemble means.
pub fn subensemble_stats(means: &[f64]) -> Result<Estimate> {
    if means.len() < 2 {
        return Err(Error::TooFewSubensembles(means.len()));
    }
    let mut acc = SubensembleAccumulator::new(1);
    for &m in means {
        acc.push(&[m]);
    }
    Ok(acc.estimate(0))
}

/// Running mean and variance (Welford) of vector-valued block means.
#[derive(Debug, Clone)]
pub struct SubensembleAccumulator {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl SubensembleAccumulator {
    pub fn new(len: usize) -> Self {
        SubensembleAccumulator {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    pub fn push(&mut self, block_means: &[f64]) {
        debug_assert_eq!(block_means.len(), self.mean.len());
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(block_means) {
            let delta = x - *mean;
            *mean += delta / n;
            *m2 += delta * (x - *mean);
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn means(&self) -> &[f64] {
        &self.mean
    }

    /// Standard errors of the means; zero when fewer than two blocks were
    /// pushed (no scatter to estimate from).
    pub fn std_errors(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.mean.len()];
        }
        let n = self.count as f64;
        self.m2
            .iter()
            .map(|m2| libm::sqrt((m2 / (n - 1.0)).max(0.0) / n))
            .collect()
    }

    pub fn estimate(&self, i: usize) -> Estimate {
        let se = if self.count < 2 {
            0.0
        } else {
            let n = self.count as f64;
            libm::sqrt((self.m2[i] / (n - 1.0)).max(0.0) / n)
        };
        Estimate::new(self.mean[i], se)
    }

    pub fn into_estimates(self) -> Vec<Estimate> {
        let se = self.std_errors();
        self.mean
            .into_iter()
            .zip(se)
            .map(|(m, s)| Estimate::new(m, s))
            .collect()
    }
}

/// Covariance of the grand means of two block series.
pub fn block_covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let ma = a.iter().sum::<f64>() / nf;
    let mb = b.iter().sum::<f64>() / nf;
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (nf - 1.0);
    cov / nf
}

/// Default minimum count per bin for measured data.
pub const DEFAULT_MIN_COUNT: u64 = 10;

/// One bin of a theory-versus-reference comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    /// Multi-index of the bin, e.g. the grouped counts `m`.
    pub label: Vec<usize>,
    pub theory: f64,
    pub theory_error: f64,
    pub reference: f64,
    pub reference_error: f64,
    /// Raw counts behind `reference`, when it comes from measured data.
    pub count: Option<u64>,
}

/// Paired theory and reference probabilities with their errors.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedComparison {
    bins: Vec<Bin>,
    min_count: u64,
    probability_cutoff: Option<f64>,
}

/// Chi-squared summary over retained bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub chi2: f64,
    pub k: usize,
    pub ratio: f64,
}

impl BinnedComparison {
    pub fn new(bins: Vec<Bin>) -> Result<Self> {
        for (i, bin) in bins.iter().enumerate() {
            if !(bin.theory_error >= 0.0 && bin.reference_error >= 0.0) {
                return Err(Error::param(
                    "bin errors",
                    alloc::format!("bin {i} has a negative or NaN error"),
                ));
            }
        }
        Ok(BinnedComparison {
            bins,
            min_count: DEFAULT_MIN_COUNT,
            probability_cutoff: None,
        })
    }

    /// Pairs two grouped distributions of the same shape bin by bin. Counts
    /// are taken from `reference` when it holds measured data.
    pub fn from_distributions(theory: &GroupedDistribution, reference: &GroupedDistribution) -> Result<Self> {
        if theory.shape() != reference.shape() {
            return Err(Error::DimensionMismatch {
                what: "compared tensor entries",
                expected: theory.len(),
                found: reference.len(),
            });
        }
        let bins = (0..theory.len())
            .map(|i| Bin {
                label: theory.multi_index(i),
                theory: theory.probabilities()[i],
                theory_error: theory.std_errors()[i],
                reference: reference.probabilities()[i],
                reference_error: reference.std_errors()[i],
                count: reference.counts().map(|c| c[i]),
            })
            .collect();
        BinnedComparison::new(bins)
    }

    /// Bins whose count is below `min_count` are excluded. Bins without a
    /// count are unaffected.
    pub fn with_min_count(mut self, min_count: u64) -> Self {
        self.min_count = min_count;
        self
    }

    /// Excludes bins whose reference probability is below `cutoff`.
    pub fn with_probability_cutoff(mut self, cutoff: f64) -> Self {
        self.probability_cutoff = Some(cutoff);
        self
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn probability_cutoff(&self) -> Option<f64> {
        self.probability_cutoff
    }

    pub fn is_retained(&self, i: usize) -> bool {
        let bin = &self.bins[i];
        if let Some(count) = bin.count {
            if count < self.min_count {
                return false;
            }
        }
        match self.probability_cutoff {
            Some(cutoff) => bin.reference >= cutoff,
            None => true,
        }
    }

    pub fn retained_count(&self) -> usize {
        (0..self.bins.len()).filter(|&i| self.is_retained(i)).count()
    }
}

/// Normalized deviations `(P̄ − Pᵉ)/σ` with `σ² = σ_e² + σ̄_s²`; `None`
/// for excluded bins.
pub fn z_scores(cmp: &BinnedComparison) -> Result<Vec<Option<f64>>> {
    cmp.bins
        .iter()
        .enumerate()
        .map(|(i, bin)| {
            if !cmp.is_retained(i) {
                return Ok(None);
            }
            let diff = bin.theory - bin.reference;
            let var = bin.theory_error * bin.theory_error + bin.reference_error * bin.reference_error;
            if var == 0.0 {
                if diff == 0.0 {
                    return Ok(Some(0.0));
                }
                return Err(Error::ZeroVariance { bin: i, difference: diff });
            }
            Ok(Some(diff / libm::sqrt(var)))
        })
        .collect()
}

/// `χ_s² = Σ z_i²` over retained bins, with `k` and `χ_s²/k`.
pub fn chi_square(cmp: &BinnedComparison) -> Result<ChiSquare> {
    let z = z_scores(cmp)?;
    let mut chi2 = 0.0;
    let mut k = 0;
    for zi in z.into_iter().flatten() {
        chi2 += zi * zi;
        k += 1;
    }
    if k == 0 {
        return Err(Error::NoRetainedBins);
    }
    Ok(ChiSquare {
        chi2,
        k,
        ratio: chi2 / k as f64,
    })
}
