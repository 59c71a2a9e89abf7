//! Squeezed and thermalized inputs, and their stochastic phase-space samples.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::ensemble::{BlockView, EnsembleSource, Layout};
use crate::error::{Error, Result};
use crate::rng::{self, Domain};

/// Input squeezing per mode plus the thermalized fraction `ε`.
///
/// A positive entry squeezes the `p` quadrature (`Δ²x = e^{2r}`,
/// `Δ²p = e^{-2r}`); a negative entry squeezes `x`. Zero entries are vacuum.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezerSpec {
    squeezing: Vec<f64>,
    decoherence: f64,
}

/// Per-mode photon numbers `n_j = ⟨a†a⟩` and coherences `m̃_j = ⟨a²⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMoments {
    pub photon_numbers: Vec<f64>,
    pub coherences: Vec<f64>,
}

impl SqueezerSpec {
    pub fn new(squeezing: Vec<f64>, decoherence: f64) -> Result<Self> {
        if squeezing.is_empty() {
            return Err(Error::param("squeezing", "at least one mode is required"));
        }
        if let Some(r) = squeezing.iter().find(|r| !r.is_finite()) {
            return Err(Error::param("squeezing", alloc::format!("entry {r} is not finite")));
        }
        if !(0.0..=1.0).contains(&decoherence) {
            return Err(Error::param(
                "decoherence",
                alloc::format!("{decoherence} is outside [0, 1]"),
            ));
        }
        Ok(SqueezerSpec {
            squeezing,
            decoherence,
        })
    }

    /// `squeezed` leading modes with squeezing `r`, the rest vacuum.
    pub fn uniform(modes: usize, squeezed: usize, r: f64, decoherence: f64) -> Result<Self> {
        if squeezed > modes {
            return Err(Error::param(
                "squeezed",
                alloc::format!("{squeezed} squeezed inputs exceed {modes} modes"),
            ));
        }
        let mut squeezing = vec![0.0; modes];
        squeezing[..squeezed].fill(r);
        SqueezerSpec::new(squeezing, decoherence)
    }

    pub fn vacuum(modes: usize) -> Result<Self> {
        SqueezerSpec::new(vec![0.0; modes], 0.0)
    }

    pub fn mode_count(&self) -> usize {
        self.squeezing.len()
    }

    pub fn squeezing(&self) -> &[f64] {
        &self.squeezing
    }

    pub fn decoherence(&self) -> f64 {
        self.decoherence
    }

    /// `n_j = sinh²(r_j)` and `m̃_j = (1 − ε) sinh(r_j) cosh(r_j)`.
    pub fn moments(&self) -> ModeMoments {
        let (photon_numbers, coherences) = self
            .squeezing
            .iter()
            .map(|&r| {
                let s = libm::sinh(r);
                (s * s, (1.0 - self.decoherence) * s * libm::cosh(r))
            })
            .unzip();
        ModeMoments {
            photon_numbers,
            coherences,
        }
    }
}

/// Operator ordering of a phase-space representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ordering {
    /// Positive-P, normal ordering (`σ = 0`), independent `β`.
    PositiveP,
    /// Wigner, symmetric ordering (`σ = 1/2`).
    Wigner,
    /// Husimi Q, antinormal ordering (`σ = 1`).
    Husimi,
}

impl Ordering {
    pub fn sigma(self) -> f64 {
        match self {
            Ordering::PositiveP => 0.0,
            Ordering::Wigner => 0.5,
            Ordering::Husimi => 1.0,
        }
    }

    pub fn from_sigma(sigma: f64) -> Result<Self> {
        if sigma == 0.0 {
            Ok(Ordering::PositiveP)
        } else if sigma == 0.5 {
            Ok(Ordering::Wigner)
        } else if sigma == 1.0 {
            Ok(Ordering::Husimi)
        } else {
            Err(Error::param("sigma", alloc::format!("{sigma} is not one of 0, 1/2, 1")))
        }
    }

    /// Classical orderings tie `β` to `conj(α)`.
    pub fn is_classical(self) -> bool {
        self != Ordering::PositiveP
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ordering::PositiveP => "positive-P",
            Ordering::Wigner => "Wigner",
            Ordering::Husimi => "Q-function",
        })
    }
}

const VARIANCE_TOLERANCE: f64 = 1e-12;

/// Noise coefficients of the Gaussian input model:
/// `α_j = δ₊ w_j + iδ₋ w_{j+M}`, `β_j = δ₊ w_j − iδ₋ w_{j+M}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSampler {
    ordering: Ordering,
    modes: usize,
    /// `(δ₊, iδ₋)` for each mode that carries noise.
    active: Vec<(usize, Complex64, Complex64)>,
}

fn principal_sqrt(x: f64) -> Complex64 {
    if x >= 0.0 {
        Complex64::new(libm::sqrt(x), 0.0)
    } else {
        Complex64::new(0.0, libm::sqrt(-x))
    }
}

impl InputSampler {
    pub fn new(spec: &SqueezerSpec, ordering: Ordering) -> Result<Self> {
        let moments = spec.moments();
        let sigma = ordering.sigma();
        let mut active = Vec::new();
        for (j, (&n, &m)) in moments
            .photon_numbers
            .iter()
            .zip(&moments.coherences)
            .enumerate()
        {
            if !n.is_finite() {
                return Err(Error::NonFinite("photon number"));
            }
            if !m.is_finite() {
                return Err(Error::NonFinite("coherence"));
            }
            if ordering == Ordering::PositiveP {
                if n == 0.0 && m == 0.0 {
                    continue;
                }
                let plus = principal_sqrt((n + m) / 2.0);
                let minus = Complex64::i() * principal_sqrt((n - m) / 2.0);
                active.push((j, plus, minus));
            } else {
                let plus = n + sigma + m;
                let minus = n + sigma - m;
                let worst = plus.min(minus);
                if worst < -VARIANCE_TOLERANCE {
                    return Err(Error::param(
                        "sigma",
                        alloc::format!(
                            "mode {j}: n + σ − |m̃| = {worst:e} is negative, no classical sample exists"
                        ),
                    ));
                }
                let plus = libm::sqrt(plus.max(0.0) / 2.0);
                let minus = libm::sqrt(minus.max(0.0) / 2.0);
                active.push((j, Complex64::new(plus, 0.0), Complex64::new(0.0, minus)));
            }
        }
        Ok(InputSampler {
            ordering,
            modes: spec.mode_count(),
            active,
        })
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering
    }

    pub fn mode_count(&self) -> usize {
        self.modes
    }

    /// Modes with nonzero amplitudes. In positive-P, vacuum inputs are
    /// exactly zero and are skipped.
    pub fn active_modes(&self) -> impl Iterator<Item = usize> + '_ {
        self.active.iter().map(|a| a.0)
    }

    /// Fills one sub-ensemble. `alpha` and `beta` must hold
    /// `samples × modes` entries and are overwritten.
    pub fn fill_block(
        &self,
        seed: u64,
        block: usize,
        alpha: &mut [Complex64],
        beta: &mut [Complex64],
    ) {
        debug_assert_eq!(alpha.len(), beta.len());
        debug_assert_eq!(alpha.len() % self.modes, 0);
        alpha.fill(Complex64::new(0.0, 0.0));
        beta.fill(Complex64::new(0.0, 0.0));
        let mut rng = rng::substream(seed, Domain::Input, block as u64);
        let mut first = vec![0.0; self.active.len()];
        let classical = self.ordering.is_classical();
        for (a_row, b_row) in alpha
            .chunks_exact_mut(self.modes)
            .zip(beta.chunks_exact_mut(self.modes))
        {
            for w in first.iter_mut() {
                *w = rng::normal(&mut rng);
            }
            for (&(j, plus, minus), &w) in self.active.iter().zip(&first) {
                let w2 = rng::normal(&mut rng);
                let a = plus * w;
                let b = minus * w2;
                a_row[j] = a + b;
                b_row[j] = if classical { (a + b).conj() } else { a - b };
            }
        }
    }
}

/// A stored phase-space ensemble: `S × M` arrays of `α` and `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceEnsemble {
    ordering: Ordering,
    modes: usize,
    layout: Layout,
    seed: u64,
    alpha: Vec<Complex64>,
    beta: Vec<Complex64>,
}

impl PhaseSpaceEnsemble {
    /// Wraps existing arrays. For classical orderings `beta` must equal
    /// `conj(alpha)` exactly.
    pub fn from_parts(
        ordering: Ordering,
        modes: usize,
        layout: Layout,
        seed: u64,
        alpha: Vec<Complex64>,
        beta: Vec<Complex64>,
    ) -> Result<Self> {
        let expected = layout.samples() * modes;
        for (what, len) in [("alpha", alpha.len()), ("beta", beta.len())] {
            if len != expected {
                return Err(Error::DimensionMismatch {
                    what,
                    expected,
                    found: len,
                });
            }
        }
        if ordering.is_classical() && alpha.iter().zip(&beta).any(|(a, b)| a.conj() != *b) {
            return Err(Error::param("beta", "classical orderings need beta = conj(alpha)"));
        }
        Ok(PhaseSpaceEnsemble {
            ordering,
            modes,
            layout,
            seed,
            alpha,
            beta,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn samples(&self) -> usize {
        self.layout.samples()
    }

    pub fn alpha(&self) -> &[Complex64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[Complex64] {
        &self.beta
    }

    pub fn sample(&self, s: usize) -> (&[Complex64], &[Complex64]) {
        let range = s * self.modes..(s + 1) * self.modes;
        (&self.alpha[range.clone()], &self.beta[range])
    }

    pub fn into_parts(self) -> (Vec<Complex64>, Vec<Complex64>) {
        (self.alpha, self.beta)
    }
}

impl EnsembleSource for PhaseSpaceEnsemble {
    fn ordering(&self) -> Ordering {
        self.ordering
    }

    fn mode_count(&self) -> usize {
        self.modes
    }

    fn layout(&self) -> Layout {
        self.layout
    }

    fn visit_block<R, F>(&self, index: usize, f: F) -> R
    where
        F: FnOnce(BlockView<'_>) -> R,
    {
        let width = self.layout.subensemble_size() * self.modes;
        let range = index * width..(index + 1) * width;
        f(BlockView {
            modes: self.modes,
            alpha: &self.alpha[range.clone()],
            beta: &self.beta[range],
        })
    }
}

pub(crate) fn sample_with(
    spec: &SqueezerSpec,
    ordering: Ordering,
    seed: u64,
    layout: Layout,
) -> Result<PhaseSpaceEnsemble> {
    let sampler = InputSampler::new(spec, ordering)?;
    let modes = spec.mode_count();
    let width = layout.subensemble_size() * modes;
    let blocks = crate::ensemble::map_indices(layout.subensembles(), |i| {
        let mut alpha = vec![Complex64::new(0.0, 0.0); width];
        let mut beta = alpha.clone();
        sampler.fill_block(seed, i, &mut alpha, &mut beta);
        (alpha, beta)
    });
    let mut alpha = Vec::with_capacity(width * layout.subensembles());
    let mut beta = Vec::with_capacity(width * layout.subensembles());
    for (a, b) in blocks {
        alpha.extend_from_slice(&a);
        beta.extend_from_slice(&b);
    }
    Ok(PhaseSpaceEnsemble {
        ordering,
        modes,
        layout,
        seed,
        alpha,
        beta,
    })
}

/// Positive-P samples of the squeezed/thermalized input state.
///
/// `δ₋` uses the principal square root, so when `n_j < m̃_j` the term
/// `iδ₋ w` is real and every amplitude is real.
pub fn sample_positive_p(
    spec: &SqueezerSpec,
    seed: u64,
    subensembles: usize,
    subensemble_size: usize,
) -> Result<PhaseSpaceEnsemble> {
    let layout = Layout::new(subensembles, subensemble_size)?;
    sample_with(spec, Ordering::PositiveP, seed, layout)
}

/// σ-ordered classical samples (`σ > 0`), with `β = conj(α)`.
pub fn sample_sigma_ordered(
    spec: &SqueezerSpec,
    ordering: Ordering,
    seed: u64,
    subensembles: usize,
    subensemble_size: usize,
) -> Result<PhaseSpaceEnsemble> {
    if ordering == Ordering::PositiveP {
        return Err(Error::param(
            "sigma",
            "σ = 0 has no classical sample, use sample_positive_p",
        ));
    }
    let layout = Layout::new(subensembles, subensemble_size)?;
    sample_with(spec, ordering, seed, layout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mean_var(xs: impl Iterator<Item = f64>) -> (f64, f64, usize) {
        let v: Vec<f64> = xs.collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, var, v.len())
    }

    #[test]
    fn moments_of_vacuum_and_r1() {
        let spec = SqueezerSpec::new(vec![0.0, 1.0], 0.3).unwrap();
        let m = spec.moments();
        assert_eq!((m.photon_numbers[0], m.coherences[0]), (0.0, 0.0));

        let pure = SqueezerSpec::new(vec![1.0], 0.0).unwrap().moments();
        // sinh²(1), sinh(1)cosh(1)
        assert_abs_diff_eq!(pure.photon_numbers[0], 1.381_097_845_541_816, epsilon = 1e-12);
        assert_abs_diff_eq!(pure.coherences[0], 1.813_430_203_923_509, epsilon = 1e-12);

        let thermal = SqueezerSpec::new(vec![1.0], 1.0).unwrap().moments();
        assert_abs_diff_eq!(thermal.photon_numbers[0], 1.381_097_845_541_816, epsilon = 1e-12);
        assert_eq!(thermal.coherences[0], 0.0);
    }

    #[test]
    fn spec_validation() {
        assert!(SqueezerSpec::new(vec![], 0.0).is_err());
        assert!(SqueezerSpec::new(vec![1.0], 1.5).is_err());
        assert!(SqueezerSpec::new(vec![1.0], -0.1).is_err());
        assert!(SqueezerSpec::new(vec![f64::NAN], 0.0).is_err());
        assert!(SqueezerSpec::uniform(3, 4, 1.0, 0.0).is_err());
        assert!(Ordering::from_sigma(0.25).is_err());
        assert_eq!(Ordering::from_sigma(0.5).unwrap(), Ordering::Wigner);
    }

    #[test]
    fn overflowing_squeezing_is_rejected() {
        let spec = SqueezerSpec::new(vec![800.0], 0.0).unwrap();
        assert_eq!(
            sample_positive_p(&spec, 1, 1, 4).unwrap_err(),
            Error::NonFinite("photon number")
        );
    }

    #[test]
    fn vacuum_positive_p_is_exactly_zero() {
        let spec = SqueezerSpec::vacuum(3).unwrap();
        let ens = sample_positive_p(&spec, 5, 2, 10).unwrap();
        assert!(ens.alpha().iter().chain(ens.beta()).all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn pure_squeezing_gives_real_amplitudes() {
        let spec = SqueezerSpec::new(vec![1.0, 0.5], 0.0).unwrap();
        let ens = sample_positive_p(&spec, 11, 4, 250).unwrap();
        assert!(ens.alpha().iter().chain(ens.beta()).all(|z| z.im == 0.0));
    }

    #[test]
    fn positive_p_moments_converge() {
        let spec = SqueezerSpec::new(vec![1.0], 0.0).unwrap();
        let ens = sample_positive_p(&spec, 2024, 100, 10_000).unwrap();
        let (n, var, s) = mean_var((0..ens.samples()).map(|i| {
            let (a, b) = ens.sample(i);
            (a[0] * b[0]).re
        }));
        let se = libm::sqrt(var / s as f64);
        assert!((n - 1.381_097_845_541_816).abs() < 5.0 * se, "{n} ± {se}");
        let (m, var, s) = mean_var((0..ens.samples()).map(|i| (ens.sample(i).0[0].powi(2)).re));
        let se = libm::sqrt(var / s as f64);
        assert!((m - 1.813_430_203_923_509).abs() < 5.0 * se, "{m} ± {se}");
    }

    #[test]
    fn photon_number_is_invariant_under_thermalization() {
        for eps in [0.0, 0.4, 1.0] {
            let spec = SqueezerSpec::new(vec![1.0], eps).unwrap();
            let ens = sample_positive_p(&spec, 99, 50, 4000).unwrap();
            let (n, var, s) = mean_var((0..ens.samples()).map(|i| {
                let (a, b) = ens.sample(i);
                (a[0] * b[0]).re
            }));
            let se = libm::sqrt(var / s as f64);
            assert!((n - 1.381_097_845_541_816).abs() < 5.0 * se, "ε={eps}: {n} ± {se}");
        }
    }

    #[test]
    fn sigma_ordered_rejects_positive_p() {
        let spec = SqueezerSpec::vacuum(1).unwrap();
        assert!(sample_sigma_ordered(&spec, Ordering::PositiveP, 0, 1, 1).is_err());
    }

    #[test]
    fn wigner_is_conjugate_and_has_vacuum_noise() {
        let spec = SqueezerSpec::vacuum(2).unwrap();
        let ens = sample_sigma_ordered(&spec, Ordering::Wigner, 3, 20, 5000).unwrap();
        assert!(ens.alpha().iter().zip(ens.beta()).all(|(a, b)| a.conj() == *b));
        let (n, var, s) = mean_var((0..ens.samples()).map(|i| ens.sample(i).0[1].norm_sqr()));
        let se = libm::sqrt(var / s as f64);
        assert!((n - 0.5).abs() < 5.0 * se);
    }

    #[test]
    fn signed_squeezing_selects_quadrature() {
        let e2 = libm::exp(2.0);
        for (r, vx, vp) in [(1.0, e2, 1.0 / e2), (-1.0, 1.0 / e2, e2)] {
            let spec = SqueezerSpec::new(vec![r], 0.0).unwrap();
            let ens = sample_sigma_ordered(&spec, Ordering::Wigner, 17, 100, 10_000).unwrap();
            let x = (0..ens.samples()).map(|i| 2.0 * ens.sample(i).0[0].re);
            let (_, var_x, s) = mean_var(x);
            let p = (0..ens.samples()).map(|i| 2.0 * ens.sample(i).0[0].im);
            let (_, var_p, _) = mean_var(p);
            // standard error of a Gaussian sample variance: σ² √(2/(S−1))
            let se = |v: f64| v * libm::sqrt(2.0 / (s as f64 - 1.0));
            assert!((var_x - vx).abs() < 5.0 * se(vx), "r={r}: {var_x} vs {vx}");
            assert!((var_p - vp).abs() < 5.0 * se(vp), "r={r}: {var_p} vs {vp}");
        }
    }

    #[test]
    fn block_generation_does_not_depend_on_layout_order() {
        let spec = SqueezerSpec::new(vec![0.7, 0.0, -0.2], 0.25).unwrap();
        let a = sample_positive_p(&spec, 42, 6, 7).unwrap();
        let b = sample_positive_p(&spec, 42, 6, 7).unwrap();
        assert_eq!(a, b);
        let sampler = InputSampler::new(&spec, Ordering::PositiveP).unwrap();
        let mut alpha = vec![Complex64::new(0.0, 0.0); 21];
        let mut beta = alpha.clone();
        sampler.fill_block(42, 4, &mut alpha, &mut beta);
        assert_eq!(&a.alpha()[4 * 21..5 * 21], &alpha[..]);
    }
}
