//! Block-structured access to phase-space samples.
//!
//! Estimators never need the whole ensemble at once: they reduce each
//! sub-ensemble to a block mean and combine block means afterwards. An
//! [`EnsembleSource`] hands out one sub-ensemble at a time, either from stored
//! arrays ([`crate::PhaseSpaceEnsemble`]) or generated on demand
//! ([`crate::Simulation`]), so million-sample runs on wide networks stay
//! within memory.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phase_space::Ordering;

/// Sub-ensemble structure: `subensembles` blocks of `subensemble_size`
/// samples each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Layout {
    subensembles: usize,
    subensemble_size: usize,
}

impl Layout {
    pub fn new(subensembles: usize, subensemble_size: usize) -> Result<Self> {
        if subensembles == 0 {
            return Err(Error::param("subensembles", "must be positive"));
        }
        if subensemble_size == 0 {
            return Err(Error::param("subensemble_size", "must be positive"));
        }
        subensembles
            .checked_mul(subensemble_size)
            .ok_or_else(|| Error::param("layout", "sample count overflows"))?;
        Ok(Layout {
            subensembles,
            subensemble_size,
        })
    }

    /// Splits `samples` into `subensembles` equal blocks.
    pub fn split(samples: usize, subensembles: usize) -> Result<Self> {
        if subensembles == 0 || !samples.is_multiple_of(subensembles) {
            return Err(Error::param(
                "samples",
                alloc::format!("{samples} is not divisible into {subensembles} sub-ensembles"),
            ));
        }
        Layout::new(subensembles, samples / subensembles)
    }

    pub fn subensembles(&self) -> usize {
        self.subensembles
    }

    pub fn subensemble_size(&self) -> usize {
        self.subensemble_size
    }

    pub fn samples(&self) -> usize {
        self.subensembles * self.subensemble_size
    }
}

/// One sub-ensemble: `samples × modes` row-major amplitude arrays.
#[derive(Debug, Clone, Copy)]
pub struct BlockView<'a> {
    pub modes: usize,
    pub alpha: &'a [Complex64],
    pub beta: &'a [Complex64],
}

impl<'a> BlockView<'a> {
    pub fn samples(&self) -> usize {
        self.alpha.len().checked_div(self.modes).unwrap_or(0)
    }

    #[inline]
    pub fn sample(&self, s: usize) -> (&'a [Complex64], &'a [Complex64]) {
        let range = s * self.modes..(s + 1) * self.modes;
        (&self.alpha[range.clone()], &self.beta[range])
    }
}

/// Anything that can produce sub-ensembles of phase-space samples.
pub trait EnsembleSource: Sync {
    fn ordering(&self) -> Ordering;
    fn mode_count(&self) -> usize;
    fn layout(&self) -> Layout;

    /// Runs `f` on sub-ensemble `index`. Must be a pure function of `index`.
    fn visit_block<R, F>(&self, index: usize, f: F) -> R
    where
        F: FnOnce(BlockView<'_>) -> R;
}

#[cfg(feature = "parallel")]
const CHUNK: usize = 64;

/// Maps every sub-ensemble and feeds the results to `consume` in index order.
///
/// With the `parallel` feature the map runs on the rayon pool; the fold order
/// is still the sub-ensemble index order, so results do not depend on the
/// thread count.
pub(crate) fn fold_blocks<S, T, F, G>(source: &S, map: F, mut consume: G)
where
    S: EnsembleSource + ?Sized,
    T: Send,
    F: Fn(BlockView<'_>) -> T + Sync,
    G: FnMut(T),
{
    let blocks = source.layout().subensembles();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let mut start = 0;
        while start < blocks {
            let end = (start + CHUNK).min(blocks);
            let results: Vec<T> = (start..end)
                .into_par_iter()
                .map(|i| source.visit_block(i, &map))
                .collect();
            results.into_iter().for_each(&mut consume);
            start = end;
        }
    }
    #[cfg(not(feature = "parallel"))]
    for i in 0..blocks {
        consume(source.visit_block(i, &map));
    }
}

/// Index-ordered parallel map over `0..n`.
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(&f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
