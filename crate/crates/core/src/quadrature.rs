//! Quadrature moments and multipartite entanglement witnesses.
//!
//! Quadratures are `x^θ = a e^{−iθ} + a† e^{iθ}` with vacuum variance 1, so
//! `x = x^0` and `p = x^{π/2}`. The phase-space variable is
//! `α e^{−iθ} + β e^{iθ}`. Sample moments are σ-ordered; symmetric moments
//! of order two differ by `(1 − 2σ) cos(θ − θ')` per pair of factors on the
//! same mode, which is the only correction implemented.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::ensemble::{fold_blocks, EnsembleSource};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ONE, ZERO};
use crate::network::TransmissionMatrix;
use crate::phase_space::SqueezerSpec;
use crate::stats::{block_covariance, subensemble_stats, Estimate};

/// Powers `m_j` of `x^{θ_j}` on modes `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    angles: Vec<f64>,
    powers: Vec<u32>,
}

impl QuadratureSpec {
    pub fn new(angles: Vec<f64>, powers: Vec<u32>) -> Result<Self> {
        if angles.len() != powers.len() {
            return Err(Error::DimensionMismatch {
                what: "quadrature powers",
                expected: angles.len(),
                found: powers.len(),
            });
        }
        if powers.iter().all(|&m| m == 0) {
            return Err(Error::param("powers", "at least one power must be positive"));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("quadrature angle"));
        }
        Ok(QuadratureSpec { angles, powers })
    }

    /// `x^θ` of a single mode raised to `power`.
    pub fn single(mode: usize, angle: f64, power: u32) -> Result<Self> {
        let mut angles = vec![0.0; mode + 1];
        let mut powers = vec![0; mode + 1];
        angles[mode] = angle;
        powers[mode] = power;
        QuadratureSpec::new(angles, powers)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn powers(&self) -> &[u32] {
        &self.powers
    }

    pub fn order(&self) -> u32 {
        self.powers.iter().sum()
    }
}

#[inline]
fn phase(angle: f64) -> Complex64 {
    Complex64::new(libm::cos(angle), -libm::sin(angle))
}

#[inline]
fn quadrature(alpha: Complex64, beta: Complex64, rot: Complex64) -> Complex64 {
    alpha * rot + beta * rot.conj()
}

/// Symmetrically ordered correlation `⟨∏ (x_j^{θ_j})^{m_j}⟩`.
pub fn quadrature_correlation<S: EnsembleSource + ?Sized>(
    source: &S,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    let sigma = source.ordering().sigma();
    let order = spec.order();
    if order > 2 && sigma != 0.5 {
        return Err(Error::OrderTooHigh(order));
    }
    if spec.powers.len() > source.mode_count() {
        return Err(Error::DimensionMismatch {
            what: "quadrature modes",
            expected: source.mode_count(),
            found: spec.powers.len(),
        });
    }
    let terms: Vec<(usize, Complex64, i32)> = spec
        .powers
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > 0)
        .map(|(j, &m)| (j, phase(spec.angles[j]), m as i32))
        .collect();
    let correction = if terms.len() == 1 && terms[0].2 == 2 {
        1.0 - 2.0 * sigma
    } else {
        0.0
    };
    let mut means = Vec::with_capacity(source.layout().subensembles());
    fold_blocks(
        source,
        |view| {
            let n = view.samples();
            let sum: Complex64 = (0..n)
                .map(|s| {
                    let (a, b) = view.sample(s);
                    terms
                        .iter()
                        .fold(ONE, |acc, &(j, rot, m)| acc * quadrature(a[j], b[j], rot).powi(m))
                })
                .sum();
            (sum / n as f64).re
        },
        |mean| means.push(mean),
    );
    let e = subensemble_stats(&means)?;
    Ok(Estimate::new(e.value + correction, e.std_error))
}

/// One term `w · x_j^θ` of a linear quadrature combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureTerm {
    pub mode: usize,
    pub angle: f64,
    pub weight: f64,
}

impl QuadratureTerm {
    pub fn x(mode: usize, weight: f64) -> Self {
        QuadratureTerm { mode, angle: 0.0, weight }
    }

    pub fn p(mode: usize, weight: f64) -> Self {
        QuadratureTerm {
            mode,
            angle: FRAC_PI_2,
            weight,
        }
    }
}

fn ordering_correction(terms: &[QuadratureTerm], sigma: f64) -> f64 {
    let mut total = 0.0;
    for a in terms {
        for b in terms.iter().filter(|b| b.mode == a.mode) {
            total += a.weight * b.weight * libm::cos(a.angle - b.angle);
        }
    }
    (1.0 - 2.0 * sigma) * total
}

/// Per-block symmetric-order variances of several linear combinations.
fn block_variances<S: EnsembleSource + ?Sized>(
    source: &S,
    combos: &[&[QuadratureTerm]],
) -> Result<Vec<Vec<f64>>> {
    let layout = source.layout();
    if layout.subensemble_size() < 2 {
        return Err(Error::param("subensemble size", "variances need at least 2 samples per sub-ensemble"));
    }
    for term in combos.iter().flat_map(|c| c.iter()) {
        if term.mode >= source.mode_count() {
            return Err(Error::IndexOutOfRange {
                what: "mode",
                index: term.mode,
                len: source.mode_count(),
            });
        }
    }
    let sigma = source.ordering().sigma();
    let corrections: Vec<f64> = combos.iter().map(|c| ordering_correction(c, sigma)).collect();
    let prepared: Vec<Vec<(usize, Complex64, f64)>> = combos
        .iter()
        .map(|c| c.iter().map(|t| (t.mode, phase(t.angle), t.weight)).collect())
        .collect();
    let mut series = vec![Vec::with_capacity(layout.subensembles()); combos.len()];
    fold_blocks(
        source,
        |view| {
            let n = view.samples();
            let mut sums = vec![(ZERO, ZERO); prepared.len()];
            for s in 0..n {
                let (a, b) = view.sample(s);
                for (acc, terms) in sums.iter_mut().zip(&prepared) {
                    let u: Complex64 = terms
                        .iter()
                        .map(|&(j, rot, w)| quadrature(a[j], b[j], rot) * w)
                        .sum();
                    acc.0 += u;
                    acc.1 += u * u;
                }
            }
            let nf = n as f64;
            sums.iter()
                .zip(&corrections)
                .map(|(&(s1, s2), c)| ((s2 - s1 * s1 / nf) / (nf - 1.0)).re + c)
                .collect::<Vec<f64>>()
        },
        |vars| {
            for (out, v) in series.iter_mut().zip(vars) {
                out.push(v);
            }
        },
    );
    Ok(series)
}

/// Symmetric-order variance of `Σ w · x_j^θ`.
pub fn quadrature_variance<S: EnsembleSource + ?Sized>(
    source: &S,
    terms: &[QuadratureTerm],
) -> Result<Estimate> {
    let series = block_variances(source, &[terms])?;
    subensemble_stats(&series[0])
}

/// Beam-splitter chain mixing two EPR inputs into `M` modes.
///
/// `U_kj = −R_k (∏_{l=j}^{k−1} T_l) R_{j−1}` for `j ≤ k`, `U_{k,k+1} = T_k`,
/// zero otherwise (1-based), with `R_0 = −1`, `R_1 = 1/√2`,
/// `R_j = 1/√(M−j+1)` and `T_j = √(1 − R_j²)`.
pub fn build_entanglement_unitary(modes: usize) -> Result<TransmissionMatrix> {
    if modes < 2 {
        return Err(Error::param("modes", "the chain needs at least 2 modes"));
    }
    let m = modes;
    let r = |j: usize| -> f64 {
        match j {
            0 => -1.0,
            1 => libm::sqrt(0.5),
            _ => libm::sqrt(1.0 / (m - j + 1) as f64),
        }
    };
    let t = |j: usize| -> f64 {
        let rj = r(j);
        libm::sqrt((1.0 - rj * rj).max(0.0))
    };
    let mut u = DMatrix::from_element(m, m, ZERO);
    for k in 1..=m {
        // chain = ∏_{l=j}^{k−1} T_l, grown as j decreases
        let mut chain = 1.0;
        for j in (1..=k).rev() {
            u[(k - 1, j - 1)] = Complex64::new(-r(k) * chain * r(j - 1), 0.0);
            chain *= t(j - 1);
        }
        if k < m {
            u[(k - 1, k)] = Complex64::new(t(k), 0.0);
        }
    }
    TransmissionMatrix::new(u)
}

/// `r_1 = +r` (p-squeezed), `r_2 = −r` (x-squeezed), vacuum elsewhere.
pub fn epr_chain_input_spec(modes: usize, r: f64) -> Result<SqueezerSpec> {
    if modes < 2 {
        return Err(Error::param("modes", "the chain needs at least 2 modes"));
    }
    let mut squeezing = vec![0.0; modes];
    squeezing[0] = r;
    squeezing[1] = -r;
    SqueezerSpec::new(squeezing, 0.0)
}

/// Witness variances for `u = x_1 − cΣ_{i>1} x_i`, `v = p_1 + cΣ_{i>1} p_i`,
/// `c = 1/√(M−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub modes: usize,
    pub var_u: Estimate,
    pub var_v: Estimate,
    /// `√var_u · √var_v`.
    pub product: Estimate,
    pub sum: Estimate,
    pub threshold_product: f64,
    pub threshold_sum: f64,
    pub pass_product: bool,
    pub pass_sum: bool,
}

pub fn witness_terms(modes: usize) -> (Vec<QuadratureTerm>, Vec<QuadratureTerm>) {
    let c = 1.0 / libm::sqrt((modes - 1) as f64);
    let mut u = vec![QuadratureTerm::x(0, 1.0)];
    let mut v = vec![QuadratureTerm::p(0, 1.0)];
    for i in 1..modes {
        u.push(QuadratureTerm::x(i, -c));
        v.push(QuadratureTerm::p(i, c));
    }
    (u, v)
}

pub fn evaluate_witness<S: EnsembleSource + ?Sized>(source: &S, modes: usize) -> Result<WitnessReport> {
    if modes < 2 {
        return Err(Error::param("modes", "the witness needs at least 2 modes"));
    }
    if source.mode_count() != modes {
        return Err(Error::DimensionMismatch {
            what: "witness modes",
            expected: modes,
            found: source.mode_count(),
        });
    }
    let (u, v) = witness_terms(modes);
    let series = block_variances(source, &[&u, &v])?;
    let var_u = subensemble_stats(&series[0])?;
    let var_v = subensemble_stats(&series[1])?;
    let cov = block_covariance(&series[0], &series[1]);

    let (a, b) = (var_u.value.max(0.0), var_v.value.max(0.0));
    let product_value = libm::sqrt(a) * libm::sqrt(b);
    let product_error = if a > 0.0 && b > 0.0 {
        let ga = 0.5 * libm::sqrt(b / a);
        let gb = 0.5 * libm::sqrt(a / b);
        let var = ga * ga * var_u.std_error * var_u.std_error + gb * gb * var_v.std_error * var_v.std_error + 2.0 * ga * gb * cov;
        libm::sqrt(var.max(0.0))
    } else {
        0.0
    };
    let sum_error = libm::sqrt(
        (var_u.std_error * var_u.std_error + var_v.std_error * var_v.std_error + 2.0 * cov).max(0.0),
    );
    let threshold_product = 2.0 / (modes - 1) as f64;
    let threshold_sum = 4.0 / (modes - 1) as f64;
    let product = Estimate::new(product_value, product_error);
    let sum = Estimate::new(var_u.value + var_v.value, sum_error);
    Ok(WitnessReport {
        modes,
        var_u,
        var_v,
        pass_product: product.value < threshold_product,
        pass_sum: sum.value < threshold_sum,
        product,
        sum,
        threshold_product,
        threshold_sum,
    })
}

/// Same chain built as a product of beam splitters; used as a cross-check.
pub fn beam_splitter_cascade(modes: usize) -> Result<CMatrix> {
    if modes < 2 {
        return Err(Error::param("modes", "the chain needs at least 2 modes"));
    }
    let r = |j: usize| -> f64 {
        if j == 1 {
            libm::sqrt(0.5)
        } else {
            libm::sqrt(1.0 / (modes - j + 1) as f64)
        }
    };
    let mut u = CMatrix::identity(modes, modes);
    for k in 1..modes {
        let rk = r(k);
        let tk = libm::sqrt(1.0 - rk * rk);
        let mut bs = CMatrix::identity(modes, modes);
        bs[(k - 1, k - 1)] = Complex64::new(rk, 0.0);
        bs[(k - 1, k)] = Complex64::new(tk, 0.0);
        bs[(k, k - 1)] = Complex64::new(tk, 0.0);
        bs[(k, k)] = Complex64::new(-rk, 0.0);
        u = bs * u;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Layout;
    use crate::linalg::{isometry_residual, max_abs_diff};
    use crate::phase_space::Ordering;
    use crate::simulation::Simulation;

    fn run(spec: &SqueezerSpec, ordering: Ordering, t: Option<&TransmissionMatrix>, seed: u64) -> Simulation {
        Simulation::new(spec, ordering, t, Layout::new(100, 2000).unwrap(), seed).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(vec![0.0], vec![0]).is_err());
        assert!(QuadratureSpec::new(vec![0.0, 1.0], vec![1]).is_err());
        assert!(QuadratureSpec::new(vec![f64::NAN], vec![1]).is_err());
        assert_eq!(QuadratureSpec::single(2, 0.5, 2).unwrap().order(), 2);
    }

    #[test]
    fn two_mode_chain_is_a_balanced_beam_splitter() {
        let u = build_entanglement_unitary(2).unwrap();
        let h = libm::sqrt(0.5);
        let expected = [[h, h], [h, -h]];
        for (i, row) in expected.iter().enumerate() {
            for (j, &want) in row.iter().enumerate() {
                assert!((u.get(i, j) - Complex64::new(want, 0.0)).norm() < 1e-15);
            }
        }
        assert!(build_entanglement_unitary(1).is_err());
    }

    #[test]
    fn chain_is_unitary_and_matches_cascade() {
        for m in [2, 3, 4, 10, 100] {
            let u = build_entanglement_unitary(m).unwrap();
            assert!(u.is_unitary());
            assert!(isometry_residual(u.matrix()) <= 1e-10);
            let cascade = beam_splitter_cascade(m).unwrap();
            assert!(max_abs_diff(u.matrix(), &cascade) < 1e-12, "M = {m}");
        }
    }

    #[test]
    fn epr_spec() {
        let s = epr_chain_input_spec(4, 3.0).unwrap();
        assert_eq!(s.squeezing(), &[3.0, -3.0, 0.0, 0.0]);
        assert!(epr_chain_input_spec(4, 0.0).unwrap().squeezing().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn single_mode_variances() {
        let vac = SqueezerSpec::vacuum(1).unwrap();
        let e = quadrature_correlation(&run(&vac, Ordering::Wigner, None, 1), &QuadratureSpec::single(0, 0.0, 2).unwrap()).unwrap();
        assert!(e.within(1.0, 5.0), "{e:?}");
        let e = quadrature_correlation(&run(&vac, Ordering::PositiveP, None, 1), &QuadratureSpec::single(0, 0.0, 2).unwrap()).unwrap();
        assert_eq!(e.value, 1.0);

        let sq = SqueezerSpec::new(vec![1.0], 0.0).unwrap();
        let p2 = QuadratureSpec::single(0, FRAC_PI_2, 2).unwrap();
        let target = libm::exp(-2.0);
        let w = quadrature_correlation(&run(&sq, Ordering::Wigner, None, 2), &p2).unwrap();
        let p = quadrature_correlation(&run(&sq, Ordering::PositiveP, None, 3), &p2).unwrap();
        let q = quadrature_correlation(&run(&sq, Ordering::Husimi, None, 4), &p2).unwrap();
        assert!(w.within(target, 5.0), "{w:?}");
        assert!(p.within(target, 5.0), "{p:?}");
        assert!(q.within(target, 5.0), "{q:?}");
        assert!(p.std_error > w.std_error);
        let v = quadrature_variance(&run(&sq, Ordering::PositiveP, None, 5), &[QuadratureTerm::p(0, 1.0)]).unwrap();
        assert!(v.within(target, 5.0), "{v:?}");
    }

    #[test]
    fn higher_orders_need_wigner() {
        let sq = SqueezerSpec::new(vec![0.5], 0.0).unwrap();
        let x4 = QuadratureSpec::single(0, 0.0, 4).unwrap();
        assert_eq!(
            quadrature_correlation(&run(&sq, Ordering::PositiveP, None, 1), &x4),
            Err(Error::OrderTooHigh(4))
        );
        // ⟨x⁴⟩ = 3 Var² for a Gaussian
        let e = quadrature_correlation(&run(&sq, Ordering::Wigner, None, 1), &x4).unwrap();
        assert!(e.within(3.0 * libm::exp(2.0), 5.0), "{e:?}");
    }

    #[test]
    fn vacuum_through_chain_gives_variance_two() {
        for m in [3, 10] {
            let spec = epr_chain_input_spec(m, 0.0).unwrap();
            let u = build_entanglement_unitary(m).unwrap();
            let rep = evaluate_witness(&run(&spec, Ordering::Wigner, Some(&u), 7), m).unwrap();
            assert!(rep.var_u.within(2.0, 5.0), "{rep:?}");
            assert!(rep.var_v.within(2.0, 5.0), "{rep:?}");
            assert!(!rep.pass_product && !rep.pass_sum);
            let rep = evaluate_witness(&run(&spec, Ordering::PositiveP, Some(&u), 7), m).unwrap();
            assert!((rep.var_u.value - 2.0).abs() < 1e-12 && (rep.var_v.value - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_mode_epr_correlations() {
        let r = 1.0;
        let target = 2.0 * libm::exp(-2.0 * r);
        let spec = epr_chain_input_spec(2, r).unwrap();
        let u = build_entanglement_unitary(2).unwrap();
        let rep = evaluate_witness(&run(&spec, Ordering::Wigner, Some(&u), 8), 2).unwrap();
        assert!(rep.var_u.within(target, 5.0), "{rep:?}");
        assert!(rep.var_v.within(target, 5.0), "{rep:?}");
        assert!(rep.pass_product && rep.pass_sum);
        assert!((rep.product.value - libm::sqrt(rep.var_u.value * rep.var_v.value)).abs() < 1e-15);

        // one squeezed input: only v is squeezed
        let one = SqueezerSpec::new(vec![r, 0.0], 0.0).unwrap();
        let rep = evaluate_witness(&run(&one, Ordering::Wigner, Some(&u), 9), 2).unwrap();
        assert!(rep.var_u.within(2.0, 5.0), "{rep:?}");
        assert!(rep.var_v.within(target, 5.0), "{rep:?}");
    }

    #[test]
    fn representations_agree_on_witness() {
        let m = 10;
        let spec = epr_chain_input_spec(m, 1.0).unwrap();
        let u = build_entanglement_unitary(m).unwrap();
        let target = 2.0 * libm::exp(-2.0);
        let w = evaluate_witness(&run(&spec, Ordering::Wigner, Some(&u), 11), m).unwrap();
        let p = evaluate_witness(&run(&spec, Ordering::PositiveP, Some(&u), 12), m).unwrap();
        for (a, b) in [(w.var_u, p.var_u), (w.var_v, p.var_v)] {
            assert!(a.within(target, 5.0) && b.within(target, 5.0), "{a:?} {b:?}");
            let combined = libm::sqrt(a.std_error.powi(2) + b.std_error.powi(2));
            assert!((a.value - b.value).abs() < 5.0 * combined);
            assert!(b.std_error > a.std_error);
        }
    }

    #[test]
    fn sign_flip_exchanges_quadratures() {
        let m = 5;
        let u = build_entanglement_unitary(m).unwrap();
        let c = 1.0 / libm::sqrt((m - 1) as f64);
        let spec = epr_chain_input_spec(m, 0.7).unwrap();
        let flipped = epr_chain_input_spec(m, -0.7).unwrap();
        let rep = evaluate_witness(&run(&spec, Ordering::Wigner, Some(&u), 13), m).unwrap();
        let sim = run(&flipped, Ordering::Wigner, Some(&u), 14);
        let pu: Vec<_> = (0..m).map(|i| QuadratureTerm::p(i, if i == 0 { 1.0 } else { -c })).collect();
        let xv: Vec<_> = (0..m).map(|i| QuadratureTerm::x(i, if i == 0 { 1.0 } else { c })).collect();
        let a = quadrature_variance(&sim, &pu).unwrap();
        let b = quadrature_variance(&sim, &xv).unwrap();
        for (x, y) in [(rep.var_u, a), (rep.var_v, b)] {
            let combined = libm::sqrt(x.std_error.powi(2) + y.std_error.powi(2));
            assert!((x.value - y.value).abs() < 5.0 * combined, "{x:?} {y:?}");
        }
    }

    #[test]
    fn witness_checks_mode_count() {
        let spec = SqueezerSpec::vacuum(3).unwrap();
        let sim = run(&spec, Ordering::Wigner, None, 1);
        assert!(matches!(evaluate_witness(&sim, 4), Err(Error::DimensionMismatch { .. })));
        let tiny = Simulation::new(&spec, Ordering::Wigner, None, Layout::new(4, 1).unwrap(), 1).unwrap();
        assert!(evaluate_witness(&tiny, 3).is_err());
    }
}
