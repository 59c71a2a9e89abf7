//! On-off click observables in the positive-P representation.
//!
//! A saturating detector projects onto `π(0) = :e^{−n̂}:` or
//! `π(1) = 1 − π(0)`. With normal ordering the phase-space replacement
//! `n̂ → αβ` is exact, so every click probability is an average of products
//! of complex weights `π_j(c) = e^{−α_jβ_j}…`.
//!
//! Grouped count distributions use a Fourier observable per group `S_j` of
//! size `M_j`: `G̃(k) = ⟨∏_j ∏_{i∈S_j} (π_i(0) + π_i(1) e^{−ik_jθ_j})⟩` with
//! `θ_j = 2π/(M_j+1)`. Its inverse DFT is the joint distribution of the
//! group click totals. The tensor has `∏(M_j+1)` entries, evaluated by direct
//! accumulation over `k` so group sizes need no particular radix.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;

use crate::ensemble::{fold_blocks, BlockView, EnsembleSource};
use crate::error::{Error, Result};
use crate::linalg::{ONE, ZERO};
use crate::phase_space::{Ordering, PhaseSpaceEnsemble};
use crate::stats::{Estimate, SubensembleAccumulator};

/// Default cap on the number of grouped tensor entries.
pub const DEFAULT_MAX_ENTRIES: usize = 100_000_000;

/// Disjoint detector groups `S_1 … S_d` over `M` output modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPartition {
    groups: Vec<Vec<usize>>,
    mode_count: usize,
}

impl GroupPartition {
    pub fn new(groups: Vec<Vec<usize>>, mode_count: usize) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidPartition("at least one group is required".into()));
        }
        let mut seen = vec![false; mode_count];
        for (g, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::InvalidPartition(alloc::format!("group {g} is empty")));
            }
            for &i in group {
                if i >= mode_count {
                    return Err(Error::InvalidPartition(alloc::format!(
                        "group {g}: mode {i} is outside 0..{mode_count}"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidPartition(alloc::format!(
                        "mode {i} appears in more than one group"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(GroupPartition { groups, mode_count })
    }

    /// Consecutive groups of the given sizes starting at mode 0.
    pub fn sequential(sizes: &[usize], mode_count: usize) -> Result<Self> {
        let mut start = 0;
        let mut groups = Vec::with_capacity(sizes.len());
        for &size in sizes {
            groups.push((start..start + size).collect());
            start += size;
        }
        GroupPartition::new(groups, mode_count)
    }

    /// One group holding every mode: the total-count distribution.
    pub fn total(mode_count: usize) -> Result<Self> {
        GroupPartition::sequential(&[mode_count], mode_count)
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn dimension(&self) -> usize {
        self.groups.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    /// Total correlation order `n = Σ M_j`.
    pub fn order(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Tensor shape `(M_1+1, …, M_d+1)`.
    pub fn shape(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len() + 1).collect()
    }

    /// `∏(M_j+1)`, or `None` on overflow.
    pub fn entries(&self) -> Option<usize> {
        self.shape().iter().try_fold(1usize, |acc, &l| acc.checked_mul(l))
    }
}

/// A `d`-dimensional grouped count distribution with per-bin errors.
///
/// Stored row-major over `(m_1, …, m_d)`, `m_1` slowest. Estimates are not
/// clipped and may be slightly negative within their errors.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDistribution {
    partition: GroupPartition,
    shape: Vec<usize>,
    probabilities: Vec<f64>,
    std_errors: Vec<f64>,
    imaginary: Vec<f64>,
    imaginary_errors: Vec<f64>,
    counts: Option<Vec<u64>>,
    sample_count: u64,
}

impl GroupedDistribution {
    /// Builds a distribution from known probabilities (oracles, analytic
    /// laws). Errors default to zero.
    pub fn from_probabilities(partition: GroupPartition, probabilities: Vec<f64>) -> Result<Self> {
        let shape = partition.shape();
        let len: usize = shape.iter().product();
        if probabilities.len() != len {
            return Err(Error::DimensionMismatch {
                what: "grouped probabilities",
                expected: len,
                found: probabilities.len(),
            });
        }
        Ok(GroupedDistribution {
            partition,
            shape,
            std_errors: vec![0.0; len],
            imaginary: vec![0.0; len],
            imaginary_errors: vec![0.0; len],
            probabilities,
            counts: None,
            sample_count: 0,
        })
    }

    pub fn partition(&self) -> &GroupPartition {
        &self.partition
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn std_errors(&self) -> &[f64] {
        &self.std_errors
    }

    /// Imaginary parts of the estimator (zero for exact or counted data).
    pub fn imaginary(&self) -> &[f64] {
        &self.imaginary
    }

    pub fn imaginary_errors(&self) -> &[f64] {
        &self.imaginary_errors
    }

    /// Raw bin counts when built from measured patterns.
    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn flat_index(&self, m: &[usize]) -> Option<usize> {
        if m.len() != self.shape.len() {
            return None;
        }
        let mut idx = 0;
        for (&mi, &l) in m.iter().zip(&self.shape) {
            if mi >= l {
                return None;
            }
            idx = idx * l + mi;
        }
        Some(idx)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut m = vec![0; self.shape.len()];
        for (mi, &l) in m.iter_mut().zip(&self.shape).rev() {
            *mi = flat % l;
            flat /= l;
        }
        m
    }

    pub fn get(&self, m: &[usize]) -> Option<f64> {
        self.flat_index(m).map(|i| self.probabilities[i])
    }

    /// Sums out every axis not listed in `keep`; the result is row-major
    /// over the kept axes in the given order.
    pub fn marginal(&self, keep: &[usize]) -> Result<Vec<f64>> {
        for &axis in keep {
            if axis >= self.shape.len() {
                return Err(Error::IndexOutOfRange {
                    what: "axis",
                    index: axis,
                    len: self.shape.len(),
                });
            }
        }
        let kept_shape: Vec<usize> = keep.iter().map(|&a| self.shape[a]).collect();
        let mut out = vec![0.0; kept_shape.iter().product()];
        for (flat, &p) in self.probabilities.iter().enumerate() {
            let m = self.multi_index(flat);
            let mut idx = 0;
            for (&axis, &l) in keep.iter().zip(&kept_shape) {
                idx = idx * l + m[axis];
            }
            out[idx] += p;
        }
        Ok(out)
    }
}

/// Per-sample click weights `(π(0), π(1))`, row-major `samples × modes`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickWeights {
    modes: usize,
    no_click: Vec<Complex64>,
}

impl ClickWeights {
    pub fn samples(&self) -> usize {
        self.no_click.len() / self.modes.max(1)
    }

    pub fn pair(&self, sample: usize, mode: usize) -> (Complex64, Complex64) {
        let p0 = self.no_click[sample * self.modes + mode];
        (p0, ONE - p0)
    }
}

fn require_positive_p(operation: &'static str, ordering: Ordering) -> Result<()> {
    if ordering == Ordering::PositiveP {
        Ok(())
    } else {
        Err(Error::Representation {
            operation,
            expected: "positive-P",
            found: ordering,
        })
    }
}

#[inline]
fn no_click(alpha: Complex64, beta: Complex64) -> Complex64 {
    (-(alpha * beta)).exp()
}

/// `π_j(0) = e^{−α_jβ_j}`, `π_j(1) = 1 − π_j(0)` for every sample and mode.
pub fn click_weights(ens: &PhaseSpaceEnsemble) -> Result<ClickWeights> {
    require_positive_p("click_weights", ens.ordering())?;
    let no_click = ens
        .alpha()
        .iter()
        .zip(ens.beta())
        .map(|(&a, &b)| no_click(a, b))
        .collect();
    Ok(ClickWeights {
        modes: ens.mode_count(),
        no_click,
    })
}

fn check_modes<S: EnsembleSource + ?Sized>(source: &S, partition: &GroupPartition) -> Result<()> {
    if partition.mode_count() != source.mode_count() {
        return Err(Error::DimensionMismatch {
            what: "partition modes",
            expected: source.mode_count(),
            found: partition.mode_count(),
        });
    }
    Ok(())
}

/// `e^{2πi t/L}` for `t = 0..L`.
fn roots_of_unity(len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|t| {
            let phase = TAU * t as f64 / len as f64;
            Complex64::new(libm::cos(phase), libm::sin(phase))
        })
        .collect()
}

struct FourierPlan {
    groups: Vec<Vec<usize>>,
    shape: Vec<usize>,
    entries: usize,
    /// Per group, `e^{+2πi t/L}`; forward weights use the conjugate.
    roots: Vec<Vec<Complex64>>,
}

impl FourierPlan {
    fn new(partition: &GroupPartition) -> Self {
        let shape = partition.shape();
        FourierPlan {
            groups: partition.groups().to_vec(),
            entries: shape.iter().product(),
            roots: shape.iter().map(|&l| roots_of_unity(l)).collect(),
            shape,
        }
    }

    /// Block mean of `G̃(k)`, inverse transformed to `G(m)`.
    fn block(&self, view: BlockView<'_>) -> Vec<Complex64> {
        let d = self.shape.len();
        let samples = view.samples();
        let mut acc = vec![ZERO; self.entries];
        let mut group_vals: Vec<Vec<Complex64>> = self.shape.iter().map(|&l| vec![ZERO; l]).collect();
        let tail_len = self.entries / self.shape[0];
        let mut tail = vec![ZERO; tail_len];
        let mut scratch = vec![ZERO; tail_len];
        let mut weights: Vec<Vec<(Complex64, Complex64)>> =
            self.groups.iter().map(|g| Vec::with_capacity(g.len())).collect();

        for s in 0..samples {
            let (alpha, beta) = view.sample(s);
            for ((group, vals), (w, roots)) in self
                .groups
                .iter()
                .zip(group_vals.iter_mut())
                .zip(weights.iter_mut().zip(&self.roots))
            {
                w.clear();
                w.extend(group.iter().map(|&i| {
                    let p0 = no_click(alpha[i], beta[i]);
                    (p0, ONE - p0)
                }));
                let len = vals.len();
                for (k, v) in vals.iter_mut().enumerate() {
                    // e^{−ikθ} = conj(root[k])
                    let phase = roots[k % len].conj();
                    *v = w.iter().fold(ONE, |prod, &(p0, p1)| prod * (p0 + p1 * phase));
                }
            }
            // tail = g_2 ⊗ … ⊗ g_d, row-major
            let mut filled = 1;
            tail[0] = ONE;
            for vals in group_vals[1..].iter().rev() {
                let l = vals.len();
                for (k, &g) in vals.iter().enumerate() {
                    for t in 0..filled {
                        scratch[k * filled + t] = g * tail[t];
                    }
                }
                filled *= l;
                tail[..filled].copy_from_slice(&scratch[..filled]);
            }
            for (k, &g) in group_vals[0].iter().enumerate() {
                let row = &mut acc[k * tail_len..(k + 1) * tail_len];
                for (a, &t) in row.iter_mut().zip(&tail[..]) {
                    a.re += g.re * t.re - g.im * t.im;
                    a.im += g.re * t.im + g.im * t.re;
                }
            }
        }
        let inv = 1.0 / samples as f64;
        for a in acc.iter_mut() {
            *a *= inv;
        }
        for axis in 0..d {
            self.inverse_along(&mut acc, axis);
        }
        acc
    }

    fn inverse_along(&self, data: &mut [Complex64], axis: usize) {
        let l = self.shape[axis];
        let stride: usize = self.shape[axis + 1..].iter().product();
        let outer = self.entries / (l * stride);
        let roots = &self.roots[axis];
        let scale = 1.0 / l as f64;
        let mut line = vec![ZERO; l];
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * l * stride + inner;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + k * stride];
                }
                for m in 0..l {
                    let mut sum = ZERO;
                    for (k, &v) in line.iter().enumerate() {
                        sum += v * roots[(k * m) % l];
                    }
                    data[base + m * stride] = sum * scale;
                }
            }
        }
    }
}

/// Grouped count distribution `G_S(m)` with the default tensor cap.
pub fn grouped_probability<S: EnsembleSource + ?Sized>(
    source: &S,
    partition: &GroupPartition,
) -> Result<GroupedDistribution> {
    grouped_probability_capped(source, partition, DEFAULT_MAX_ENTRIES)
}

/// Grouped count distribution, failing when `∏(M_j+1)` exceeds `max_entries`.
pub fn grouped_probability_capped<S: EnsembleSource + ?Sized>(
    source: &S,
    partition: &GroupPartition,
    max_entries: usize,
) -> Result<GroupedDistribution> {
    require_positive_p("grouped_probability", source.ordering())?;
    check_modes(source, partition)?;
    let entries = partition.entries().unwrap_or(usize::MAX);
    if entries > max_entries {
        return Err(Error::TensorTooLarge {
            entries,
            cap: max_entries,
        });
    }
    let plan = FourierPlan::new(partition);
    let mut re = SubensembleAccumulator::new(entries);
    let mut im = SubensembleAccumulator::new(entries);
    let mut re_buf = vec![0.0; entries];
    let mut im_buf = vec![0.0; entries];
    fold_blocks(
        source,
        |view| plan.block(view),
        |block| {
            for ((r, i), z) in re_buf.iter_mut().zip(im_buf.iter_mut()).zip(&block) {
                *r = z.re;
                *i = z.im;
            }
            re.push(&re_buf);
            im.push(&im_buf);
        },
    );
    Ok(GroupedDistribution {
        partition: partition.clone(),
        shape: plan.shape,
        std_errors: re.std_errors(),
        probabilities: re.means().to_vec(),
        imaginary_errors: im.std_errors(),
        imaginary: im.means().to_vec(),
        counts: None,
        sample_count: source.layout().samples() as u64,
    })
}

/// Click probability of output mode `mode`, `⟨π_j(1)⟩`.
pub fn marginal_click_probability<S: EnsembleSource + ?Sized>(
    source: &S,
    mode: usize,
) -> Result<Estimate> {
    require_positive_p("marginal_click_probability", source.ordering())?;
    if mode >= source.mode_count() {
        return Err(Error::IndexOutOfRange {
            what: "mode",
            index: mode,
            len: source.mode_count(),
        });
    }
    let mut acc = SubensembleAccumulator::new(1);
    fold_blocks(
        source,
        |view| {
            let n = view.samples();
            let sum: f64 = (0..n)
                .map(|s| {
                    let (a, b) = view.sample(s);
                    (ONE - no_click(a[mode], b[mode])).re
                })
                .sum();
            sum / n as f64
        },
        |mean| acc.push(&[mean]),
    );
    Ok(acc.estimate(0))
}

/// Complex moment estimate; the imaginary part should vanish within error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimate {
    pub re: Estimate,
    pub im: Estimate,
}

/// Normally ordered moment `⟨:∏ n̂_j^{c_j}:⟩ = ⟨∏ (α_jβ_j)^{c_j}⟩`.
pub fn glauber_moment<S: EnsembleSource + ?Sized>(
    source: &S,
    exponents: &[u32],
) -> Result<ComplexEstimate> {
    require_positive_p("glauber_moment", source.ordering())?;
    if exponents.len() > source.mode_count() {
        return Err(Error::DimensionMismatch {
            what: "exponent vector",
            expected: source.mode_count(),
            found: exponents.len(),
        });
    }
    if exponents.iter().all(|&c| c == 0) {
        return Err(Error::param("exponents", "at least one exponent must be positive"));
    }
    let terms: Vec<(usize, i32)> = exponents
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(j, &c)| (j, c as i32))
        .collect();
    let mut acc = SubensembleAccumulator::new(2);
    fold_blocks(
        source,
        |view| {
            let n = view.samples();
            let sum: Complex64 = (0..n)
                .map(|s| {
                    let (a, b) = view.sample(s);
                    terms
                        .iter()
                        .fold(ONE, |prod, &(j, c)| prod * (a[j] * b[j]).powi(c))
                })
                .sum();
            sum / n as f64
        },
        |mean| acc.push(&[mean.re, mean.im]),
    );
    Ok(ComplexEstimate {
        re: acc.estimate(0),
        im: acc.estimate(1),
    })
}

/// Incremental binning of measured click patterns, one line at a time.
#[derive(Debug, Clone)]
pub struct PatternBinner {
    partition: GroupPartition,
    shape: Vec<usize>,
    counts: Vec<u64>,
    bits: Vec<bool>,
    lines: usize,
    total: u64,
}

impl PatternBinner {
    pub fn new(partition: &GroupPartition) -> Self {
        let shape = partition.shape();
        PatternBinner {
            counts: vec![0; shape.iter().product()],
            bits: vec![false; partition.mode_count()],
            partition: partition.clone(),
            shape,
            lines: 0,
            total: 0,
        }
    }

    /// Adds one line: an `M`-character `0`/`1` string. Blank lines are
    /// skipped but still counted for error positions (1-based).
    pub fn push_line(&mut self, raw: &str) -> Result<()> {
        self.lines += 1;
        let line = raw.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            return Ok(());
        }
        let modes = self.partition.mode_count();
        if line.len() != modes {
            return Err(Error::MalformedPattern {
                line: self.lines,
                reason: alloc::format!("expected {modes} characters, found {}", line.chars().count()),
            });
        }
        for (slot, ch) in self.bits.iter_mut().zip(line.bytes()) {
            *slot = match ch {
                b'0' => false,
                b'1' => true,
                other => {
                    return Err(Error::MalformedPattern {
                        line: self.lines,
                        reason: alloc::format!("unexpected character {:?}", other as char),
                    })
                }
            };
        }
        let mut idx = 0;
        for (group, &l) in self.partition.groups().iter().zip(&self.shape) {
            let clicks = group.iter().filter(|&&i| self.bits[i]).count();
            idx = idx * l + clicks;
        }
        self.counts[idx] += 1;
        self.total += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Relative frequencies `f/N` with Poisson errors `√f/N`.
    pub fn finish(self) -> Result<GroupedDistribution> {
        if self.total == 0 {
            return Err(Error::param("patterns", "no click patterns supplied"));
        }
        let norm = self.total as f64;
        let entries = self.counts.len();
        Ok(GroupedDistribution {
            probabilities: self.counts.iter().map(|&f| f as f64 / norm).collect(),
            std_errors: self.counts.iter().map(|&f| libm::sqrt(f as f64) / norm).collect(),
            imaginary: vec![0.0; entries],
            imaginary_errors: vec![0.0; entries],
            partition: self.partition,
            shape: self.shape,
            counts: Some(self.counts),
            sample_count: self.total,
        })
    }
}

/// Bins a whole collection of click patterns; see [`PatternBinner`].
pub fn bin_experimental_patterns<'a, I>(patterns: I, partition: &GroupPartition) -> Result<GroupedDistribution>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut binner = PatternBinner::new(partition);
    for line in patterns {
        binner.push_line(line)?;
    }
    binner.finish()
}
