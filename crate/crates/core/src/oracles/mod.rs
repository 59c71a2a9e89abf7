//! Exact references for small systems.
//!
//! Gaussian second moments are propagated exactly through `T`. Click
//! probabilities follow from vacuum overlaps of reduced states,
//! `P(no click on Z) = 1/√det Σ_Q(Z)`, combined by inclusion–exclusion.
//! [`fock`] cross-checks the block convention by brute force in Fock space.

pub mod fock;

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand_distr::{Distribution, Open01};

use crate::clicks::{GroupPartition, GroupedDistribution};
use crate::ensemble::map_indices;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::network::TransmissionMatrix;
use crate::phase_space::SqueezerSpec;
use crate::rng::{self, Domain};

pub use fock::{fock_truncation_oracle, FockOracle};

/// Largest click set for a single Torontonian term.
pub const MAX_CLICK_SET: usize = 20;
/// Largest mode set for exhaustive distributions.
pub const MAX_EXACT_MODES: usize = 16;

/// `A_ij = ⟨a_i† a_j⟩` and `C_ij = ⟨a_i a_j⟩` of a zero-mean Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMoments {
    a: CMatrix,
    c: CMatrix,
}

impl GaussianMoments {
    pub fn new(a: CMatrix, c: CMatrix) -> Result<Self> {
        let m = a.nrows();
        if a.ncols() != m || c.nrows() != m || c.ncols() != m {
            return Err(Error::DimensionMismatch {
                what: "moment matrices",
                expected: m,
                found: if a.ncols() != m { a.ncols() } else { c.nrows().max(c.ncols()) },
            });
        }
        if a.iter().chain(c.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("moment matrices"));
        }
        let scale = a.iter().chain(c.iter()).map(|z| z.norm()).fold(1.0, f64::max);
        let tol = 1e-12 * scale;
        if linalg::max_abs_diff(&a, &a.adjoint()) > tol {
            return Err(Error::Unphysical("A is not Hermitian".into()));
        }
        if linalg::max_abs_diff(&c, &c.transpose()) > tol {
            return Err(Error::Unphysical("C is not symmetric".into()));
        }
        Ok(GaussianMoments { a, c })
    }

    /// `n·I`, `C = 0`: identical thermal modes.
    pub fn thermal(modes: usize, n: f64) -> Result<Self> {
        GaussianMoments::new(
            CMatrix::identity(modes, modes) * Complex64::new(n, 0.0),
            CMatrix::zeros(modes, modes),
        )
    }

    pub fn mode_count(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn c(&self) -> &CMatrix {
        &self.c
    }

    /// Husimi covariance `[[I + Aᵀ, C], [C*, I + A]]` restricted to `modes`.
    pub fn husimi_covariance(&self, modes: &[usize]) -> CMatrix {
        let k = modes.len();
        let mut sigma = CMatrix::zeros(2 * k, 2 * k);
        for (p, &i) in modes.iter().enumerate() {
            for (q, &j) in modes.iter().enumerate() {
                let delta = if p == q { ONE } else { ZERO };
                sigma[(p, q)] = delta + self.a[(j, i)];
                sigma[(p, k + q)] = self.c[(i, j)];
                sigma[(k + p, q)] = self.c[(i, j)].conj();
                sigma[(k + p, k + q)] = delta + self.a[(i, j)];
            }
        }
        sigma
    }
}

/// `A' = T* diag(n) Tᵀ`, `C' = T diag(m̃) Tᵀ`. Inputs narrower than `T`
/// are vacuum-padded.
pub fn output_gaussian_moments(spec: &SqueezerSpec, t: &TransmissionMatrix) -> Result<GaussianMoments> {
    if spec.mode_count() > t.cols() {
        return Err(Error::DimensionMismatch {
            what: "network input modes",
            expected: t.cols(),
            found: spec.mode_count(),
        });
    }
    let moments = spec.moments();
    let rows = t.rows();
    let mut a = CMatrix::zeros(rows, rows);
    let mut c = CMatrix::zeros(rows, rows);
    for (k, (&n, &m)) in moments.photon_numbers.iter().zip(&moments.coherences).enumerate() {
        if n == 0.0 && m == 0.0 {
            continue;
        }
        for i in 0..rows {
            let tik = t.get(i, k);
            for j in 0..rows {
                let tjk = t.get(j, k);
                a[(i, j)] += tik.conj() * tjk * n;
                c[(i, j)] += tik * tjk * m;
            }
        }
    }
    GaussianMoments::new(a, c)
}

/// Probability that no mode in `modes` registers a photon.
pub fn vacuum_probability(gm: &GaussianMoments, modes: &[usize]) -> Result<f64> {
    for &i in modes {
        if i >= gm.mode_count() {
            return Err(Error::IndexOutOfRange {
                what: "mode",
                index: i,
                len: gm.mode_count(),
            });
        }
    }
    if modes.is_empty() {
        return Ok(1.0);
    }
    let det = linalg::hermitian_pd_det(gm.husimi_covariance(modes))
        .ok_or_else(|| Error::Unphysical("Husimi covariance is not positive definite".into()))?;
    Ok(1.0 / libm::sqrt(det))
}

/// `P(clicks exactly on C within S)` by inclusion–exclusion over `Z ⊆ C`.
pub fn torontonian_probability(gm: &GaussianMoments, clicks: &[usize], measured: &[usize]) -> Result<f64> {
    if clicks.len() > MAX_CLICK_SET {
        return Err(Error::OracleLimit {
            what: "click set size",
            limit: MAX_CLICK_SET,
            requested: clicks.len(),
        });
    }
    if let Some(&i) = clicks.iter().find(|i| !measured.contains(i)) {
        return Err(Error::param("click set", alloc::format!("mode {i} is not in the measured set")));
    }
    let dark: Vec<usize> = measured.iter().copied().filter(|i| !clicks.contains(i)).collect();
    let mut total = 0.0;
    let mut subset = Vec::with_capacity(measured.len());
    for mask in 0u32..(1u32 << clicks.len()) {
        subset.clear();
        subset.extend_from_slice(&dark);
        subset.extend(clicks.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i));
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * vacuum_probability(gm, &subset)?;
    }
    Ok(total)
}

fn check_exact_size(n: usize) -> Result<()> {
    if n > MAX_EXACT_MODES {
        return Err(Error::OracleLimit {
            what: "exact distribution modes",
            limit: MAX_EXACT_MODES,
            requested: n,
        });
    }
    Ok(())
}

/// `vac(V)` for every subset `V` of `modes`, indexed by bit mask.
fn subset_vacuum_table(gm: &GaussianMoments, modes: &[usize]) -> Result<Vec<f64>> {
    let results = map_indices(1usize << modes.len(), |mask| {
        let subset: Vec<usize> = modes
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .map(|(_, &i)| i)
            .collect();
        vacuum_probability(gm, &subset)
    });
    results.into_iter().collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact grouped count distribution. Modes outside the partition are traced
/// out. Uses `2^n` vacuum overlaps for `n = Σ M_j ≤ 16`.
///
/// With `v_j = |V ∩ S_j|` and `z_j = M_j − m_j` dark detectors,
/// `G(m) = Σ_V vac(V) ∏_j (−1)^{v_j − z_j} C(v_j, z_j)`.
pub fn exact_grouped_distribution(gm: &GaussianMoments, partition: &GroupPartition) -> Result<GroupedDistribution> {
    if partition.mode_count() != gm.mode_count() {
        return Err(Error::DimensionMismatch {
            what: "partition modes",
            expected: gm.mode_count(),
            found: partition.mode_count(),
        });
    }
    let n = partition.order();
    check_exact_size(n)?;
    let modes: Vec<usize> = partition.groups().iter().flatten().copied().collect();
    let owner: Vec<usize> = partition
        .groups()
        .iter()
        .enumerate()
        .flat_map(|(g, group)| core::iter::repeat_n(g, group.len()))
        .collect();
    let vac = subset_vacuum_table(gm, &modes)?;

    let shape = partition.shape();
    let entries: usize = shape.iter().product();
    let flat = |v: &[usize]| v.iter().zip(&shape).fold(0, |acc, (&x, &l)| acc * l + x);
    let mut aggregated = vec![0.0; entries];
    let mut counts = vec![0usize; shape.len()];
    for (mask, &p) in vac.iter().enumerate() {
        counts.fill(0);
        for (b, &g) in owner.iter().enumerate() {
            if mask >> b & 1 == 1 {
                counts[g] += 1;
            }
        }
        aggregated[flat(&counts)] += p;
    }

    let sizes = partition.sizes();
    let mut probabilities = vec![0.0; entries];
    let mut m = vec![0usize; shape.len()];
    let mut v = vec![0usize; shape.len()];
    for (out, prob) in probabilities.iter_mut().enumerate() {
        unflatten(out, &shape, &mut m);
        let mut total = 0.0;
        for (idx, &h) in aggregated.iter().enumerate() {
            if h == 0.0 {
                continue;
            }
            unflatten(idx, &shape, &mut v);
            let mut weight = 1.0;
            for j in 0..shape.len() {
                let z = sizes[j] - m[j];
                if v[j] < z {
                    weight = 0.0;
                    break;
                }
                let sign = if (v[j] - z).is_multiple_of(2) { 1.0 } else { -1.0 };
                weight *= sign * binomial(v[j], z);
            }
            total += weight * h;
        }
        *prob = total;
    }
    GroupedDistribution::from_probabilities(partition.clone(), probabilities)
}

fn unflatten(mut flat: usize, shape: &[usize], out: &mut [usize]) {
    for (o, &l) in out.iter_mut().zip(shape).rev() {
        *o = flat % l;
        flat /= l;
    }
}

/// Exact total-click distribution over all modes.
pub fn exact_total_count_distribution(gm: &GaussianMoments) -> Result<Vec<f64>> {
    let partition = GroupPartition::total(gm.mode_count())?;
    Ok(exact_grouped_distribution(gm, &partition)?.probabilities().to_vec())
}

/// Probability of every click pattern on `modes`; index bit `b` set means
/// `modes[b]` clicked. Other modes are traced out.
pub fn exact_pattern_distribution(gm: &GaussianMoments, modes: &[usize]) -> Result<Vec<f64>> {
    check_exact_size(modes.len())?;
    let n = modes.len();
    // superset Möbius transform: f(Z) = Σ_{V ⊇ Z} (−1)^{|V∖Z|} vac(V)
    let mut f = subset_vacuum_table(gm, modes)?;
    for b in 0..n {
        let bit = 1usize << b;
        for mask in 0..f.len() {
            if mask & bit == 0 {
                f[mask] -= f[mask | bit];
            }
        }
    }
    let full = (1usize << n) - 1;
    Ok((0..f.len()).map(|clicks| f[full ^ clicks]).collect())
}

/// Draws `count` patterns from a pattern distribution. Small negative
/// entries from rounding are treated as zero.
pub fn sample_patterns(probabilities: &[f64], count: usize, seed: u64) -> Result<Vec<usize>> {
    let mut cumulative = Vec::with_capacity(probabilities.len());
    let mut running = 0.0;
    for &p in probabilities {
        if !p.is_finite() {
            return Err(Error::NonFinite("pattern probability"));
        }
        running += p.max(0.0);
        cumulative.push(running);
    }
    if running <= 0.0 {
        return Err(Error::param("probabilities", "total weight must be positive"));
    }
    let mut rng = rng::substream(seed, Domain::Patterns, 0);
    let last = cumulative.len() - 1;
    Ok((0..count)
        .map(|_| {
            let u: f64 = Open01.sample(&mut rng);
            cumulative.partition_point(|&c| c < u * running).min(last)
        })
        .collect())
}

/// Product of independent `Binomial(M_j, p)` laws on consecutive groups.
pub fn analytic_iid_distribution(p_click: f64, sizes: &[usize]) -> Result<GroupedDistribution> {
    if !(0.0..=1.0).contains(&p_click) {
        return Err(Error::param("p_click", alloc::format!("{p_click} is outside [0, 1]")));
    }
    let partition = GroupPartition::sequential(sizes, sizes.iter().sum())?;
    let laws: Vec<Vec<f64>> = sizes
        .iter()
        .map(|&m| {
            (0..=m)
                .map(|k| binomial(m, k) * libm::pow(p_click, k as f64) * libm::pow(1.0 - p_click, (m - k) as f64))
                .collect()
        })
        .collect();
    let shape = partition.shape();
    let entries: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    let probabilities = (0..entries)
        .map(|flat| {
            unflatten(flat, &shape, &mut idx);
            idx.iter().zip(&laws).map(|(&k, law)| law[k]).product()
        })
        .collect();
    GroupedDistribution::from_probabilities(partition, probabilities)
}
