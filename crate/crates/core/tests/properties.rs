use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use phasegbs_core::clicks::{grouped_probability, GroupPartition};
use phasegbs_core::linalg::{isometry_residual, max_abs_diff, CMatrix};
use phasegbs_core::network::{
    decoherence_matrix_sqrt, haar_unitary, transform_positive_p, transform_sigma_ordered,
};
use phasegbs_core::oracles::{output_gaussian_moments, torontonian_probability, GaussianMoments};
use phasegbs_core::phase_space::{sample_positive_p, sample_sigma_ordered};
use phasegbs_core::quadrature::build_entanglement_unitary;
use phasegbs_core::{Layout, Ordering, Simulation, SqueezerSpec, TransmissionMatrix};

fn contraction(m: usize, seed: u64, gains: &[f64]) -> TransmissionMatrix {
    let u = haar_unitary(m, seed).unwrap();
    let v = haar_unitary(m, seed.wrapping_add(1)).unwrap();
    let d = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            Complex64::new(gains[i % gains.len()], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    TransmissionMatrix::new(u.matrix() * d * v.matrix()).unwrap()
}

fn spec_strategy(max_modes: usize) -> impl Strategy<Value = SqueezerSpec> {
    (prop::collection::vec(-1.5f64..1.5, 1..=max_modes), 0.0f64..=1.0)
        .prop_map(|(r, eps)| SqueezerSpec::new(r, eps).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn classical_orderings_are_conjugate(spec in spec_strategy(5), seed in any::<u64>(), husimi in any::<bool>()) {
        let ordering = if husimi { Ordering::Husimi } else { Ordering::Wigner };
        let ens = sample_sigma_ordered(&spec, ordering, seed, 2, 16).unwrap();
        for (a, b) in ens.alpha().iter().zip(ens.beta()) {
            prop_assert_eq!(*b, a.conj());
        }
        let m = spec.mode_count();
        let t = contraction(m, seed, &[0.9, 0.6, 1.0]);
        let out = transform_sigma_ordered(&ens, &t, seed ^ 1).unwrap();
        for (a, b) in out.alpha().iter().zip(out.beta()) {
            prop_assert_eq!(*b, a.conj());
        }
    }

    #[test]
    fn same_seed_same_ensemble(spec in spec_strategy(4), seed in any::<u64>()) {
        let layout = Layout::new(3, 7).unwrap();
        for ordering in [Ordering::PositiveP, Ordering::Wigner, Ordering::Husimi] {
            let t = contraction(spec.mode_count(), seed, &[0.8]);
            let a = Simulation::new(&spec, ordering, Some(&t), layout, seed).unwrap().materialize().unwrap();
            let b = Simulation::new(&spec, ordering, Some(&t), layout, seed).unwrap().materialize().unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn unitary_conserves_flux(spec in spec_strategy(6), seed in any::<u64>()) {
        let m = spec.mode_count();
        let ens = sample_positive_p(&spec, seed, 1, 50).unwrap();
        let out = transform_positive_p(&ens, &haar_unitary(m, seed).unwrap()).unwrap();
        for s in 0..ens.samples() {
            let (a, b) = ens.sample(s);
            let (a2, b2) = out.sample(s);
            let before: Complex64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let after: Complex64 = a2.iter().zip(b2).map(|(x, y)| x * y).sum();
            let scale = a.iter().zip(b).map(|(x, y)| (x * y).norm()).sum::<f64>().max(1e-300);
            prop_assert!((before - after).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn decoherence_root_squares_back(m in 1usize..6, seed in any::<u64>(), gains in prop::collection::vec(0.0f64..=1.0, 1..6)) {
        let t = contraction(m, seed, &gains);
        let b = decoherence_matrix_sqrt(&t).unwrap();
        prop_assert!(max_abs_diff(&b, &b.adjoint()) <= 1e-12);
        let d = CMatrix::identity(m, m) - t.matrix().adjoint() * t.matrix();
        prop_assert!(max_abs_diff(&(&b * &b), &d) <= 1e-8);
        let eig = nalgebra::SymmetricEigen::new((&b + b.adjoint()) * Complex64::new(0.5, 0.0));
        prop_assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10));
    }

    #[test]
    fn grouped_tensor_normalized_for_any_partition(
        seed in any::<u64>(),
        sizes in prop::collection::vec(1usize..4, 1..4),
        samples in 1usize..6,
    ) {
        let m: usize = sizes.iter().sum();
        let spec = SqueezerSpec::uniform(m, m.div_ceil(2), 1.0, 0.3).unwrap();
        let t = contraction(m, seed, &[0.95, 0.7]);
        let sim = Simulation::new(&spec, Ordering::PositiveP, Some(&t), Layout::new(2, samples).unwrap(), seed).unwrap();
        let g = grouped_probability(&sim, &GroupPartition::sequential(&sizes, m).unwrap()).unwrap();
        prop_assert!((g.total() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn grouped_marginals_are_consistent(seed in any::<u64>(), a in 1usize..4, b in 1usize..4) {
        let m = a + b;
        let spec = SqueezerSpec::uniform(m, m, 0.8, 0.0).unwrap();
        let sim = Simulation::new(&spec, Ordering::PositiveP, Some(&haar_unitary(m, seed).unwrap()), Layout::new(2, 20).unwrap(), seed).unwrap();
        let joint = grouped_probability(&sim, &GroupPartition::sequential(&[a, b], m).unwrap()).unwrap();
        let first = grouped_probability(&sim, &GroupPartition::new(vec![(0..a).collect()], m).unwrap()).unwrap();
        for (x, y) in joint.marginal(&[0]).unwrap().iter().zip(first.probabilities()) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn thermal_moments_are_unitary_invariant(m in 1usize..8, seed in any::<u64>(), r in 0.0f64..2.0) {
        let spec = SqueezerSpec::new(vec![r; m], 1.0).unwrap();
        let gm = output_gaussian_moments(&spec, &haar_unitary(m, seed).unwrap()).unwrap();
        let thermal = GaussianMoments::thermal(m, libm::sinh(r).powi(2)).unwrap();
        prop_assert!(max_abs_diff(gm.a(), thermal.a()) <= 1e-12 * (1.0 + libm::sinh(r).powi(2)));
        prop_assert!(gm.c().iter().all(|z| z.norm() <= 1e-12 * (1.0 + libm::sinh(r).powi(2))));
    }

    #[test]
    fn torontonian_sums_to_one(spec in spec_strategy(6), seed in any::<u64>()) {
        let m = spec.mode_count();
        let gm = output_gaussian_moments(&spec, &contraction(m, seed, &[1.0, 0.7])).unwrap();
        let modes: Vec<usize> = (0..m).collect();
        let mut total = 0.0;
        for mask in 0..1usize << m {
            let clicks: Vec<usize> = modes.iter().copied().filter(|&i| mask >> i & 1 == 1).collect();
            total += torontonian_probability(&gm, &clicks, &modes).unwrap();
        }
        prop_assert!((total - 1.0).abs() <= 1e-8);
    }
}

#[test]
fn chain_unitary_for_many_sizes() {
    for m in 2..=200 {
        let u = build_entanglement_unitary(m).unwrap();
        assert!(isometry_residual(u.matrix()) <= 1e-10, "M = {m}");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let spec = SqueezerSpec::uniform(6, 3, 1.0, 0.2).unwrap();
    let t = contraction(6, 4, &[0.9, 0.5]);
    let layout = Layout::new(150, 10).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let sim = Simulation::new(&spec, Ordering::Wigner, Some(&t), layout, 42).unwrap();
            let ens = sim.materialize().unwrap();
            let psim = Simulation::new(&spec, Ordering::PositiveP, Some(&t), layout, 42).unwrap();
            let g = grouped_probability(&psim, &GroupPartition::sequential(&[2, 4], 6).unwrap()).unwrap();
            (ens, g)
        })
    };
    let (e1, g1) = run(1);
    let (e3, g3) = run(3);
    assert_eq!(e1, e3);
    assert_eq!(g1, g3);
}
