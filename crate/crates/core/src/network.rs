//! Linear-network transmission of phase-space amplitudes.
//!
//! In positive-P the amplitudes transform deterministically, `α' = Tα`,
//! `β' = T*β`, and losses need nothing beyond a non-unitary `T`. Classical
//! orderings carry vacuum noise, so a lossy `T` must be complemented by
//! injected noise with covariance `σ(I − TT†)` to keep the vacuum a fixed
//! point.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::ensemble::{EnsembleSource, Layout};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ZERO};
use crate::phase_space::{Ordering, PhaseSpaceEnsemble};
use crate::rng::{self, Domain};

/// `‖T†T − I‖_max` at or below this marks a matrix as unitary (an isometry).
pub const UNITARY_TOLERANCE: f64 = 1e-10;
/// Decoherence eigenvalues in `[−tol, 0)` are rounding and clamp to zero;
/// anything lower means the matrix amplifies.
pub const EIGENVALUE_CLAMP: f64 = 1e-12;

/// A non-amplifying `rows × cols` transmission matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionMatrix {
    matrix: CMatrix,
    unitary: bool,
}

impl TransmissionMatrix {
    /// Validates `matrix`: every singular value must be at most one.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::param("transmission matrix", "must be non-empty"));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("transmission matrix entry"));
        }
        let unitary = linalg::isometry_residual(&matrix) <= UNITARY_TOLERANCE;
        if !unitary {
            let (values, _) = linalg::hermitian_eigen(&decoherence(&matrix));
            let lowest = values.iter().copied().fold(f64::INFINITY, f64::min);
            if lowest < -EIGENVALUE_CLAMP {
                return Err(Error::Amplifying {
                    eigenvalue: lowest,
                    tolerance: EIGENVALUE_CLAMP,
                });
            }
        }
        Ok(TransmissionMatrix { matrix, unitary })
    }

    /// Row-major `rows × cols` entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "matrix entries",
                expected: rows * cols,
                found: entries.len(),
            });
        }
        TransmissionMatrix::new(CMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn identity(modes: usize) -> Self {
        TransmissionMatrix {
            matrix: CMatrix::identity(modes, modes),
            unitary: true,
        }
    }

    /// Uniform amplitude transmission `t·I`.
    pub fn uniform_loss(modes: usize, t: f64) -> Result<Self> {
        TransmissionMatrix::new(CMatrix::identity(modes, modes) * Complex64::new(t, 0.0))
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// `T₂ T₁`: `self` applied after `first`.
    pub fn compose(&self, first: &TransmissionMatrix) -> Result<Self> {
        if self.cols() != first.rows() {
            return Err(Error::DimensionMismatch {
                what: "composed transmission",
                expected: self.cols(),
                found: first.rows(),
            });
        }
        TransmissionMatrix::new(&self.matrix * &first.matrix)
    }
}

fn decoherence(t: &CMatrix) -> CMatrix {
    CMatrix::identity(t.ncols(), t.ncols()) - t.adjoint() * t
}

/// Hermitian PSD square root `B` of the decoherence matrix `D = I − T†T`.
pub fn decoherence_matrix_sqrt(t: &TransmissionMatrix) -> Result<CMatrix> {
    let n = t.cols();
    if t.is_unitary() {
        return Ok(CMatrix::zeros(n, n));
    }
    hermitian_sqrt(&decoherence(t.matrix()))
}

fn hermitian_sqrt(d: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = linalg::hermitian_eigen(d);
    if let Some(&lowest) = values.iter().find(|&&v| v < -EIGENVALUE_CLAMP) {
        return Err(Error::Amplifying {
            eigenvalue: lowest,
            tolerance: EIGENVALUE_CLAMP,
        });
    }
    Ok(linalg::hermitian_function(&values, &vectors, |v| libm::sqrt(v.max(0.0))))
}

/// Noise matrix for classical orderings: the square root of `I − TT†`,
/// acting in output space.
pub fn output_noise_matrix(t: &TransmissionMatrix) -> Result<CMatrix> {
    let n = t.rows();
    let coisometry = linalg::max_abs_diff(
        &(t.matrix() * t.matrix().adjoint()),
        &CMatrix::identity(n, n),
    ) <= UNITARY_TOLERANCE;
    if coisometry {
        return Ok(CMatrix::zeros(n, n));
    }
    hermitian_sqrt(&(CMatrix::identity(n, n) - t.matrix() * t.matrix().adjoint()))
}

/// Multiplies every entry by `factor` and re-validates.
pub fn scale_transmission(t: &TransmissionMatrix, factor: f64) -> Result<TransmissionMatrix> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::param("scale factor", alloc::format!("{factor} must be positive")));
    }
    TransmissionMatrix::new(t.matrix() * Complex64::new(factor, 0.0))
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of
/// `diag(R)` folded back into `Q`.
pub fn haar_unitary(modes: usize, seed: u64) -> Result<TransmissionMatrix> {
    if modes == 0 {
        return Err(Error::param("modes", "must be positive"));
    }
    let mut rng = rng::substream(seed, Domain::HaarUnitary, modes as u64);
    let scale = core::f64::consts::FRAC_1_SQRT_2;
    let z = CMatrix::from_fn(modes, modes, |_, _| {
        let re = rng::normal(&mut rng);
        let im = rng::normal(&mut rng);
        Complex64::new(re * scale, im * scale)
    });
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..modes {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..modes {
            q[(i, j)] *= phase;
        }
    }
    TransmissionMatrix::new(q)
}

/// Precomputed data for transforming blocks of samples.
#[derive(Debug, Clone)]
pub(crate) struct NetworkStage {
    rows: usize,
    /// `Tᵀ` row-major: row `k` is column `k` of `T`.
    columns: Vec<Complex64>,
    /// `T*ᵀ`, used for `β` in positive-P.
    conj_columns: Vec<Complex64>,
    /// `√(σ/2) B`, row-major, when noise is needed.
    noise: Option<Vec<Complex64>>,
    ordering: Ordering,
}

impl NetworkStage {
    pub(crate) fn new(t: &TransmissionMatrix, ordering: Ordering, input_modes: usize) -> Result<Self> {
        let (rows, cols) = (t.rows(), t.cols());
        let fits = if ordering.is_classical() {
            input_modes == cols
        } else {
            input_modes <= cols
        };
        if !fits {
            return Err(Error::DimensionMismatch {
                what: "network input modes",
                expected: cols,
                found: input_modes,
            });
        }
        let mut columns = vec![ZERO; rows * cols];
        for k in 0..cols {
            for i in 0..rows {
                columns[k * rows + i] = t.get(i, k);
            }
        }
        let conj_columns = columns.iter().map(|z| z.conj()).collect();
        let noise = if ordering.is_classical() {
            let b = output_noise_matrix(t)?;
            if b.iter().all(|z| *z == ZERO) {
                None
            } else {
                let amp = libm::sqrt(ordering.sigma() / 2.0);
                let mut rm = vec![ZERO; rows * rows];
                for i in 0..rows {
                    for j in 0..rows {
                        rm[i * rows + j] = b[(i, j)] * amp;
                    }
                }
                Some(rm)
            }
        } else {
            None
        };
        Ok(NetworkStage {
            rows,
            columns,
            conj_columns,
            noise,
            ordering,
        })
    }

    pub(crate) fn rows(&self) -> usize {
        self.rows
    }

    /// Transforms a block of `samples × input_modes` amplitudes into
    /// `samples × rows` outputs.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn apply_block(
        &self,
        seed: u64,
        block: usize,
        input_modes: usize,
        alpha: &[Complex64],
        beta: &[Complex64],
        out_alpha: &mut [Complex64],
        out_beta: &mut [Complex64],
    ) {
        let rows = self.rows;
        out_alpha.fill(ZERO);
        out_beta.fill(ZERO);
        let samples = alpha.len() / input_modes;
        let mut rng = self
            .noise
            .as_ref()
            .map(|_| rng::substream(seed, Domain::NetworkNoise, block as u64));
        let mut draws = vec![ZERO; rows];
        for s in 0..samples {
            let a_in = &alpha[s * input_modes..(s + 1) * input_modes];
            let b_in = &beta[s * input_modes..(s + 1) * input_modes];
            let a_out = &mut out_alpha[s * rows..(s + 1) * rows];
            for (k, &a) in a_in.iter().enumerate() {
                if a != ZERO {
                    axpy(a, &self.columns[k * rows..(k + 1) * rows], a_out);
                }
            }
            if let (Some(noise), Some(rng)) = (&self.noise, rng.as_mut()) {
                for d in draws.iter_mut() {
                    d.re = rng::normal(rng);
                }
                for d in draws.iter_mut() {
                    d.im = rng::normal(rng);
                }
                for (i, out) in a_out.iter_mut().enumerate() {
                    let row = &noise[i * rows..(i + 1) * rows];
                    *out += row.iter().zip(&draws).map(|(b, d)| b * d).sum::<Complex64>();
                }
            }
            let b_out = &mut out_beta[s * rows..(s + 1) * rows];
            if self.ordering.is_classical() {
                for (b, a) in b_out.iter_mut().zip(a_out.iter()) {
                    *b = a.conj();
                }
            } else {
                for (k, &b) in b_in.iter().enumerate() {
                    if b != ZERO {
                        axpy(b, &self.conj_columns[k * rows..(k + 1) * rows], b_out);
                    }
                }
            }
        }
    }
}

#[inline]
fn axpy(a: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        yi.re += a.re * xi.re - a.im * xi.im;
        yi.im += a.re * xi.im + a.im * xi.re;
    }
}

fn transform(
    ens: &PhaseSpaceEnsemble,
    t: &TransmissionMatrix,
    seed: u64,
) -> Result<PhaseSpaceEnsemble> {
    let ordering = ens.ordering();
    let stage = NetworkStage::new(t, ordering, ens.mode_count())?;
    let layout: Layout = ens.layout();
    let rows = stage.rows();
    let modes = ens.mode_count();
    let blocks = crate::ensemble::map_indices(layout.subensembles(), |i| {
        ens.visit_block(i, |view| {
            let mut a = vec![ZERO; layout.subensemble_size() * rows];
            let mut b = a.clone();
            stage.apply_block(seed, i, modes, view.alpha, view.beta, &mut a, &mut b);
            (a, b)
        })
    });
    let mut alpha = Vec::with_capacity(layout.samples() * rows);
    let mut beta = Vec::with_capacity(layout.samples() * rows);
    for (a, b) in blocks {
        alpha.extend_from_slice(&a);
        beta.extend_from_slice(&b);
    }
    PhaseSpaceEnsemble::from_parts(ordering, rows, layout, ens.seed(), alpha, beta)
}

/// `α' = Tα`, `β' = T*β` for a positive-P ensemble. Inputs narrower than
/// `T` are zero-padded (vacuum is exactly zero in positive-P).
pub fn transform_positive_p(
    ens: &PhaseSpaceEnsemble,
    t: &TransmissionMatrix,
) -> Result<PhaseSpaceEnsemble> {
    if ens.ordering() != Ordering::PositiveP {
        return Err(Error::Representation {
            operation: "transform_positive_p",
            expected: "positive-P",
            found: ens.ordering(),
        });
    }
    transform(ens, t, ens.seed())
}

/// `α' = Tα + √(σ/2) B (u + iv)`, `β' = conj(α')`, with `B² = I − TT†`
/// so the vacuum stays a fixed point.
pub fn transform_sigma_ordered(
    ens: &PhaseSpaceEnsemble,
    t: &TransmissionMatrix,
    seed: u64,
) -> Result<PhaseSpaceEnsemble> {
    if !ens.ordering().is_classical() {
        return Err(Error::Representation {
            operation: "transform_sigma_ordered",
            expected: "a classical (σ > 0)",
            found: ens.ordering(),
        });
    }
    transform(ens, t, seed)
}
