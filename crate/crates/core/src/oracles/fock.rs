//! Brute-force click probabilities in a photon-number-truncated Fock space.
//!
//! Each input mode is built as a squeezed thermal state
//! `S(s) ρ_th(n') S(s)†` with the same `n`, `m̃` as the phase-space input.
//! `T = W Σ V†` is applied as the passive unitary `V†`, single-mode pure
//! loss `σ_k²`, then `W`. Click statistics only see the diagonal of the final
//! state, and passive unitaries and loss never move coherences between
//! total-photon sectors back onto the diagonal, so only the diagonal blocks
//! `ρ^{(N,N)}` for `N ≤ cutoff` are propagated.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ZERO};
use crate::network::TransmissionMatrix;
use crate::phase_space::SqueezerSpec;

pub const MAX_FOCK_MODES: usize = 3;
/// Largest accepted trace lost to truncation.
pub const MAX_NORM_DEFICIT: f64 = 1e-8;

/// Click-pattern probabilities; bit `k` of the index is set when mode `k`
/// clicked.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOracle {
    pub modes: usize,
    pub cutoff: usize,
    pub probabilities: Vec<f64>,
    pub norm_deficit: f64,
}

impl FockOracle {
    pub fn no_click(&self) -> f64 {
        self.probabilities[0]
    }
}

struct Sectors {
    modes: usize,
    cutoff: usize,
    states: Vec<Vec<[usize; MAX_FOCK_MODES]>>,
    index: Vec<u32>,
}

impl Sectors {
    fn new(modes: usize, cutoff: usize) -> Self {
        let side = cutoff + 1;
        let total = side.pow(modes as u32);
        let mut states = vec![Vec::new(); cutoff + 1];
        let mut index = vec![u32::MAX; total];
        for (flat, slot_index) in index.iter_mut().enumerate() {
            let mut n = [0usize; MAX_FOCK_MODES];
            let mut rest = flat;
            for slot in n.iter_mut().take(modes) {
                *slot = rest % side;
                rest /= side;
            }
            let sum: usize = n.iter().sum();
            if sum <= cutoff {
                *slot_index = states[sum].len() as u32;
                states[sum].push(n);
            }
        }
        Sectors {
            modes,
            cutoff,
            states,
            index,
        }
    }

    fn position(&self, n: &[usize; MAX_FOCK_MODES]) -> usize {
        let side = self.cutoff + 1;
        let flat = n[..self.modes].iter().rev().fold(0, |acc, &x| acc * side + x);
        self.index[flat] as usize
    }
}

/// Truncated single-mode density matrix with `⟨a†a⟩ = n`, `⟨aa⟩ = m`.
fn single_mode_state(n: f64, m: f64, cutoff: usize) -> Vec<f64> {
    let dim = cutoff + 1;
    let mut rho = vec![0.0; dim * dim];
    let half = n + 0.5;
    let thermal = (libm::sqrt((half * half - m * m).max(0.0)) - 0.5).max(0.0);
    let s = 0.5 * libm::atanh((m.abs() / half).min(1.0 - 1e-16));
    let mu = libm::cosh(s);
    let nu = if m < 0.0 { -libm::sinh(s) } else { libm::sinh(s) };

    let ratio = thermal / (1.0 + thermal);
    let levels = if thermal < 1e-14 {
        0
    } else {
        // q^{j+1} < 1e-17
        (libm::ceil(-17.0 * core::f64::consts::LN_10 / libm::log(ratio)) as usize).min(5000)
    };
    // |j⟩_b = b†^j |ψ0⟩ / √j!, b† = μa† − νa; truncation error moves down one
    // level per application, so the buffer carries `levels` spare entries.
    let len = dim + levels + 2;
    let mut psi = vec![0.0; len];
    psi[0] = 1.0 / libm::sqrt(mu);
    let t = nu / mu;
    for k in (2..len).step_by(2) {
        psi[k] = t * libm::sqrt((k - 1) as f64 / k as f64) * psi[k - 2];
    }
    let mut next = vec![0.0; len];
    let mut weight = 1.0 / (1.0 + thermal);
    for j in 0..=levels {
        if weight > 0.0 {
            for a in 0..dim {
                let pa = weight * psi[a];
                if pa == 0.0 {
                    continue;
                }
                for b in 0..dim {
                    rho[a * dim + b] += pa * psi[b];
                }
            }
        }
        if j == levels {
            break;
        }
        let norm = 1.0 / libm::sqrt((j + 1) as f64);
        for k in 0..len {
            let up = if k > 0 { mu * libm::sqrt(k as f64) * psi[k - 1] } else { 0.0 };
            let down = if k + 1 < len { nu * libm::sqrt((k + 1) as f64) * psi[k + 1] } else { 0.0 };
            next[k] = (up - down) * norm;
        }
        core::mem::swap(&mut psi, &mut next);
        weight *= ratio;
    }
    rho
}

fn input_blocks(spec: &SqueezerSpec, sectors: &Sectors) -> Vec<CMatrix> {
    let moments = spec.moments();
    let dim = sectors.cutoff + 1;
    let singles: Vec<Vec<f64>> = moments
        .photon_numbers
        .iter()
        .zip(&moments.coherences)
        .map(|(&n, &m)| single_mode_state(n, m, sectors.cutoff))
        .collect();
    sectors
        .states
        .iter()
        .map(|basis| {
            let d = basis.len();
            CMatrix::from_fn(d, d, |a, b| {
                let v: f64 = singles
                    .iter()
                    .enumerate()
                    .map(|(k, rho)| rho[basis[a][k] * dim + basis[b][k]])
                    .product();
                Complex64::new(v, 0.0)
            })
        })
        .collect()
}

/// `⟨p|𝒰|n⟩` per sector for `𝒰 a_j† 𝒰† = Σ_i U_ij a_i†`.
fn unitary_blocks(u: &CMatrix, sectors: &Sectors) -> Vec<CMatrix> {
    let mut blocks: Vec<CMatrix> = Vec::with_capacity(sectors.cutoff + 1);
    blocks.push(CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)));
    for total in 1..=sectors.cutoff {
        let basis = &sectors.states[total];
        let lower = &sectors.states[total - 1];
        let prev = &blocks[total - 1];
        let mut block = CMatrix::zeros(basis.len(), basis.len());
        for (col, n) in basis.iter().enumerate() {
            let j = n.iter().position(|&x| x > 0).unwrap();
            let mut m = *n;
            m[j] -= 1;
            let source = sectors.position(&m);
            let scale = 1.0 / libm::sqrt(n[j] as f64);
            for (row, p) in lower.iter().enumerate() {
                let c = prev[(row, source)];
                if c == ZERO {
                    continue;
                }
                for i in 0..sectors.modes {
                    let mut q = *p;
                    q[i] += 1;
                    let target = sectors.position(&q);
                    block[(target, col)] += c * u[(i, j)] * (libm::sqrt(q[i] as f64) * scale);
                }
            }
        }
        blocks.push(block);
    }
    blocks
}

fn apply_unitary(rho: &mut [CMatrix], u: &CMatrix, sectors: &Sectors) {
    let blocks = unitary_blocks(u, sectors);
    for (r, b) in rho.iter_mut().zip(&blocks) {
        *r = b * &*r * b.adjoint();
    }
}

fn apply_loss(rho: &[CMatrix], mode: usize, eta: f64, sectors: &Sectors) -> Vec<CMatrix> {
    let mut out: Vec<CMatrix> = sectors
        .states
        .iter()
        .map(|b| CMatrix::zeros(b.len(), b.len()))
        .collect();
    // K(n, l) = √(C(n, l) η^{n−l} (1−η)^l)
    let kraus = |n: usize, l: usize| -> f64 {
        let mut c = 1.0;
        for i in 0..l {
            c *= (n - i) as f64 / (i + 1) as f64;
        }
        libm::sqrt(c * libm::pow(eta, (n - l) as f64) * libm::pow(1.0 - eta, l as f64))
    };
    for (total, block) in rho.iter().enumerate() {
        let basis = &sectors.states[total];
        for (a, na) in basis.iter().enumerate() {
            for (b, nb) in basis.iter().enumerate() {
                let v = block[(a, b)];
                if v == ZERO {
                    continue;
                }
                for l in 0..=na[mode].min(nb[mode]) {
                    let w = kraus(na[mode], l) * kraus(nb[mode], l);
                    if w == 0.0 {
                        continue;
                    }
                    let (mut pa, mut pb) = (*na, *nb);
                    pa[mode] -= l;
                    pb[mode] -= l;
                    out[total - l][(sectors.position(&pa), sectors.position(&pb))] += v * w;
                }
            }
        }
    }
    out
}

/// Exact click-pattern probabilities for up to three modes.
pub fn fock_truncation_oracle(spec: &SqueezerSpec, t: &TransmissionMatrix, cutoff: usize) -> Result<FockOracle> {
    let modes = spec.mode_count();
    if modes > MAX_FOCK_MODES {
        return Err(Error::OracleLimit {
            what: "Fock oracle modes",
            limit: MAX_FOCK_MODES,
            requested: modes,
        });
    }
    if t.rows() != modes || t.cols() != modes {
        return Err(Error::DimensionMismatch {
            what: "Fock oracle network",
            expected: modes,
            found: if t.rows() != modes { t.rows() } else { t.cols() },
        });
    }
    if cutoff == 0 {
        return Err(Error::param("cutoff", "must be positive"));
    }
    let sectors = Sectors::new(modes, cutoff);
    let mut rho = input_blocks(spec, &sectors);
    let trace: f64 = rho.iter().map(|b| b.trace().re).sum();
    let norm_deficit = 1.0 - trace;
    if norm_deficit.abs() >= MAX_NORM_DEFICIT {
        return Err(Error::InsufficientCutoff {
            cutoff,
            deficit: norm_deficit,
        });
    }

    if t.is_unitary() {
        apply_unitary(&mut rho, t.matrix(), &sectors);
    } else {
        let svd = t.matrix().clone().svd(true, true);
        let (w, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        apply_unitary(&mut rho, &v_t, &sectors);
        for (k, &sigma) in svd.singular_values.iter().enumerate() {
            let eta = (sigma * sigma).min(1.0);
            if eta < 1.0 {
                rho = apply_loss(&rho, k, eta, &sectors);
            }
        }
        apply_unitary(&mut rho, &w, &sectors);
    }

    let mut probabilities = vec![0.0; 1 << modes];
    for (block, basis) in rho.iter().zip(&sectors.states) {
        for (a, n) in basis.iter().enumerate() {
            let mask = (0..modes).filter(|&k| n[k] > 0).fold(0, |acc, k| acc | 1 << k);
            probabilities[mask] += block[(a, a)].re;
        }
    }
    Ok(FockOracle {
        modes,
        cutoff,
        probabilities,
        norm_deficit,
    })
}
