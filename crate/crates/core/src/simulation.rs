use alloc::vec;

use num_complex::Complex64;

use crate::ensemble::{BlockView, EnsembleSource, Layout};
use crate::error::Result;
use crate::linalg::ZERO;
use crate::network::{NetworkStage, TransmissionMatrix};
use crate::phase_space::{self, InputSampler, Ordering, PhaseSpaceEnsemble, SqueezerSpec};

/// An ensemble that is generated one sub-ensemble at a time.
///
/// Block `i` is bit-identical to block `i` of
/// `transform_*(sample_*(spec, seed, ..), T, seed)`, but only one block per
/// worker is ever held in memory.
#[derive(Debug, Clone)]
pub struct Simulation {
    sampler: InputSampler,
    network: Option<NetworkStage>,
    layout: Layout,
    seed: u64,
    output_modes: usize,
}

impl Simulation {
    pub fn new(
        spec: &SqueezerSpec,
        ordering: Ordering,
        network: Option<&TransmissionMatrix>,
        layout: Layout,
        seed: u64,
    ) -> Result<Self> {
        let sampler = InputSampler::new(spec, ordering)?;
        let network = network
            .map(|t| NetworkStage::new(t, ordering, spec.mode_count()))
            .transpose()?;
        let output_modes = network.as_ref().map_or(spec.mode_count(), |n| n.rows());
        Ok(Simulation {
            sampler,
            network,
            layout,
            seed,
            output_modes,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stores every block. Memory is `2 × samples × modes` complex numbers.
    pub fn materialize(&self) -> Result<PhaseSpaceEnsemble> {
        let width = self.layout.subensemble_size() * self.output_modes;
        let blocks = crate::ensemble::map_indices(self.layout.subensembles(), |i| {
            self.visit_block(i, |view| (view.alpha.to_vec(), view.beta.to_vec()))
        });
        let mut alpha = alloc::vec::Vec::with_capacity(width * self.layout.subensembles());
        let mut beta = alloc::vec::Vec::with_capacity(width * self.layout.subensembles());
        for (a, b) in blocks {
            alpha.extend_from_slice(&a);
            beta.extend_from_slice(&b);
        }
        PhaseSpaceEnsemble::from_parts(
            self.sampler.ordering(),
            self.output_modes,
            self.layout,
            self.seed,
            alpha,
            beta,
        )
    }
}

impl EnsembleSource for Simulation {
    fn ordering(&self) -> Ordering {
        self.sampler.ordering()
    }

    fn mode_count(&self) -> usize {
        self.output_modes
    }

    fn layout(&self) -> Layout {
        self.layout
    }

    fn visit_block<R, F>(&self, index: usize, f: F) -> R
    where
        F: FnOnce(BlockView<'_>) -> R,
    {
        let samples = self.layout.subensemble_size();
        let in_modes = self.sampler.mode_count();
        let mut alpha = vec![ZERO; samples * in_modes];
        let mut beta = alpha.clone();
        self.sampler
            .fill_block(self.seed, index, &mut alpha, &mut beta);
        match &self.network {
            None => f(BlockView {
                modes: in_modes,
                alpha: &alpha,
                beta: &beta,
            }),
            Some(stage) => {
                let mut out_a = vec![Complex64::new(0.0, 0.0); samples * self.output_modes];
                let mut out_b = out_a.clone();
                stage.apply_block(
                    self.seed, index, in_modes, &alpha, &beta, &mut out_a, &mut out_b,
                );
                f(BlockView {
                    modes: self.output_modes,
                    alpha: &out_a,
                    beta: &out_b,
                })
            }
        }
    }
}

/// Convenience: stored input samples in any ordering.
pub fn sample(
    spec: &SqueezerSpec,
    ordering: Ordering,
    seed: u64,
    layout: Layout,
) -> Result<PhaseSpaceEnsemble> {
    phase_space::sample_with(spec, ordering, seed, layout)
}
