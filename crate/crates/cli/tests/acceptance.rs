//! Acceptance criteria A1 to A9. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;

use phasegbs::commands;
use phasegbs::config::{resolve, Partition, RunConfig, Squeezing, Task, Theory, Transmission};
use phasegbs::formats;
use phasegbs_core::clicks::{grouped_probability, marginal_click_probability, GroupPartition, GroupedDistribution};
use phasegbs_core::network::haar_unitary;
use phasegbs_core::oracles::{analytic_iid_distribution, fock_truncation_oracle};
use phasegbs_core::quadrature::{quadrature_variance, QuadratureTerm};
use phasegbs_core::stats::{chi_square, ChiSquare};
use phasegbs_core::{BinnedComparison, Layout, Ordering, Simulation, SqueezerSpec, TransmissionMatrix};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

/// The M = 16, N = 8, r = 1 network with a fixed Haar unitary.
fn sixteen_mode(seed: u64, partition: Partition) -> RunConfig {
    RunConfig {
        task: Task::Simulate,
        mode_count: 16,
        squeezing: Squeezing::Uniform { squeezed_modes: 8, r: 1.0 },
        transmission: Transmission::RandomUnitary { seed: 16 },
        partition,
        samples: 1_000_000,
        subensembles: 1000,
        seed: Some(seed),
        ..RunConfig::default()
    }
}

fn chi(theory: &GroupedDistribution, reference: &GroupedDistribution, cutoff: Option<f64>) -> Result<ChiSquare> {
    let mut cmp = BinnedComparison::from_distributions(theory, reference)?;
    if let Some(c) = cutoff {
        cmp = cmp.with_probability_cutoff(c);
    }
    Ok(chi_square(&cmp)?)
}

fn normalized(d: &GroupedDistribution) -> bool {
    (d.total() - 1.0).abs() <= 1e-10
}

fn a1() -> Result<Outcome> {
    let res = resolve(&sixteen_mode(101, Partition::Total))?;
    let mc = commands::simulate(&res)?;
    let exact = commands::exact(&res)?;
    let c = chi(&mc, &exact, Some(1e-5))?;
    outcome(c.ratio <= 2.0, format!("chi2/k = {:.3}, k = {}", c.ratio, c.k))
}

fn a2() -> Result<Outcome> {
    let layout = Layout::new(1000, 1000)?;
    let click = |r: f64| -> Result<_> {
        let spec = SqueezerSpec::new(vec![r], 0.0)?;
        let sim = Simulation::new(&spec, Ordering::PositiveP, None, layout, 7)?;
        Ok(marginal_click_probability(&sim, 0)?)
    };
    let spec = SqueezerSpec::new(vec![1.0], 0.0)?;
    let fock = fock_truncation_oracle(&spec, &TransmissionMatrix::identity(1), 120)?;
    let oracle = 1.0 - fock.no_click();
    let closed = 1.0 - 1.0 / 1f64.cosh();
    let p1 = click(1.0)?;
    let p0 = click(0.0)?;
    outcome(
        p1.within(oracle, 5.0) && (oracle - closed).abs() < 1e-9 && p0.value == 0.0,
        format!(
            "r=1: {:.5} +- {:.5} vs {oracle:.5}; r=0: {}",
            p1.value, p1.std_error, p0.value
        ),
    )
}

fn a3() -> Result<Outcome> {
    let m = 40;
    let spec = SqueezerSpec::uniform(m, m, 1.0, 1.0)?;
    let t = haar_unitary(m, 40)?;
    let partition = GroupPartition::sequential(&[10, 10, 10, 10], m)?;
    let sim = Simulation::new(&spec, Ordering::PositiveP, Some(&t), Layout::new(1200, 1000)?, 303)?;
    let mc = grouped_probability(&sim, &partition)?;
    let n = 1f64.sinh().powi(2);
    let p = n / (1.0 + n);
    let analytic = analytic_iid_distribution(p, &[10, 10, 10, 10])?;
    // Strictly above 1e-7.
    let c = chi(&mc, &analytic, Some(f64::from_bits(1e-7f64.to_bits() + 1)))?;
    outcome(
        (0.7..=1.5).contains(&c.ratio),
        format!("p = {p:.5}, chi2/k = {:.3}, k = {}", c.ratio, c.k),
    )
}

fn a4() -> Result<Outcome> {
    let spec = SqueezerSpec::uniform(6, 3, 1.0, 0.2)?;
    let t = haar_unitary(6, 5)?;
    let partitions = [
        GroupPartition::total(6)?,
        GroupPartition::sequential(&[3, 3], 6)?,
        GroupPartition::sequential(&[1, 2, 3], 6)?,
        GroupPartition::new(vec![vec![5, 0], vec![3], vec![1, 4, 2]], 6)?,
    ];
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for layout in [Layout::new(1, 1)?, Layout::new(1, 2)?, Layout::new(3, 7)?, Layout::new(20, 500)?] {
        for seed in 0..5 {
            let sim = Simulation::new(&spec, Ordering::PositiveP, Some(&t), layout, seed)?;
            for part in &partitions {
                let d = grouped_probability(&sim, part)?;
                worst = worst.max((d.total() - 1.0).abs());
                ok &= normalized(&d);
            }
        }
    }
    outcome(ok, format!("max |sum - 1| = {worst:.1e}"))
}

fn a5() -> Result<Outcome> {
    let cfg = RunConfig {
        samples: 1_200_000,
        subensembles: 1200,
        seed: Some(505),
        ..RunConfig::preset(Task::Entangle)
    };
    let w = commands::entangle(&resolve(&cfg)?)?;
    let target = 2.0 * (-6f64).exp();
    let errors_ok = [&w.var_u, &w.var_v]
        .iter()
        .all(|e| (1e-6..1e-4).contains(&e.std_error));
    let lossy = RunConfig {
        mode_count: 40,
        squeezing: Squeezing::Epr { r: 2.0 },
        transmission: Transmission::Scaled {
            factor: 0.95,
            inner: Box::new(Transmission::EntanglementChain),
        },
        samples: 200_000,
        subensembles: 200,
        seed: Some(506),
        ..RunConfig::preset(Task::Entangle)
    };
    let l = commands::entangle(&resolve(&lossy)?)?;
    outcome(
        w.var_u.within(target, 5.0)
            && w.var_v.within(target, 5.0)
            && errors_ok
            && w.pass_product
            && w.pass_sum
            && !l.pass_product
            && !l.pass_sum,
        format!(
            "xi_x = {:.6} +- {:.1e}, xi_p = {:.6} +- {:.1e} (target {target:.6}); product {:.5} < {:.5}, sum {:.5} < {:.5}; lossy M=40 product {:.4}, sum {:.4}",
            w.var_u.value,
            w.var_u.std_error,
            w.var_v.value,
            w.var_v.std_error,
            w.product.value,
            w.threshold_product,
            w.sum.value,
            w.threshold_sum,
            l.product.value,
            l.sum.value
        ),
    )
}

fn a6() -> Result<Outcome> {
    let spec = SqueezerSpec::new(vec![1.0], 0.0)?;
    let layout = Layout::new(200, 1000)?;
    let var = |ordering| -> Result<_> {
        let sim = Simulation::new(&spec, ordering, None, layout, 606)?;
        Ok(quadrature_variance(&sim, &[QuadratureTerm::p(0, 1.0)])?)
    };
    let pp = var(Ordering::PositiveP)?;
    let wg = var(Ordering::Wigner)?;
    let combined = (pp.std_error.powi(2) + wg.std_error.powi(2)).sqrt();
    outcome(
        (pp.value - wg.value).abs() <= 5.0 * combined && pp.std_error > wg.std_error,
        format!(
            "positive-P {:.5} +- {:.5}, Wigner {:.5} +- {:.5}",
            pp.value, pp.std_error, wg.value, wg.std_error
        ),
    )
}

fn a7() -> Result<Outcome> {
    let part = || Partition::Sizes(vec![8, 8]);
    let a = commands::simulate(&resolve(&sixteen_mode(701, part()))?)?;
    let b = commands::simulate(&resolve(&sixteen_mode(702, part()))?)?;
    let c = chi(&a, &b, None)?;
    outcome(
        (0.5..=2.0).contains(&c.ratio) && c.k >= 30,
        format!("chi2/k = {:.3}, k = {}", c.ratio, c.k),
    )
}

fn a8() -> Result<Outcome> {
    let large = |m: usize, samples: usize, subensembles: usize| -> Result<(f64, GroupedDistribution)> {
        let spec = SqueezerSpec::uniform(m, m / 2, 1.0, 0.0)?;
        let t = haar_unitary(m, 8)?;
        let start = Instant::now();
        let sim = Simulation::new(&spec, Ordering::PositiveP, Some(&t), Layout::split(samples, subensembles)?, 808)?;
        let d = grouped_probability(&sim, &GroupPartition::total(m)?)?;
        Ok((start.elapsed().as_secs_f64(), d))
    };
    let (t100, d100) = large(100, 1_000_000, 1000)?;
    let (t1024, d1024) = large(1024, 10_000, 100)?;
    outcome(
        t100 <= 600.0 && normalized(&d100) && normalized(&d1024),
        format!(
            "M=100: {t100:.1} s; M=1024: {t1024:.1} s, |sum - 1| = {:.1e}",
            (d1024.total() - 1.0).abs()
        ),
    )
}

fn a9() -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let eps = 0.5;
    let oracle_cfg = RunConfig {
        task: Task::Oracle,
        epsilon: eps,
        synthetic_patterns: Some(1_000_000),
        output_dir: dir.path().to_path_buf(),
        ..sixteen_mode(901, Partition::Sizes(vec![8, 8]))
    };
    let oracle = resolve(&oracle_cfg)?;
    let (_, masks) = commands::oracle(&oracle)?;
    let path = dir.path().join("patterns.txt");
    formats::write_patterns(&path, &masks.expect("patterns requested"), 16)?;

    let compare = |epsilon: f64| -> Result<ChiSquare> {
        let cfg = RunConfig {
            task: Task::Compare,
            epsilon,
            theory: Theory::Simulation,
            patterns: Some(path.clone()),
            ..sixteen_mode(902, Partition::Sizes(vec![8, 8]))
        };
        Ok(commands::compare(&resolve(&cfg)?)?.chi)
    };
    let pure = compare(0.0)?;
    let matched = compare(eps)?;
    outcome(
        pure.ratio > 100.0 && (0.5..=2.0).contains(&matched.ratio),
        format!(
            "pure model chi2/k = {:.1} (k = {}), matched chi2/k = {:.3} (k = {})",
            pure.ratio, pure.k, matched.ratio, matched.k
        ),
    )
}

type Criterion = (&'static str, fn() -> Result<Outcome>);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("A1 grouped estimator against exact total counts", a1),
        ("A2 single-mode click probability", a2),
        ("A3 four-fold thermal partition", a3),
        ("A4 normalization", a4),
        ("A5 entanglement witness", a5),
        ("A6 positive-P and Wigner quadrature variance", a6),
        ("A7 two-seed chi-square", a7),
        ("A8 large-network runtime", a8),
        ("A9 discrimination of thermalized data", a9),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e:#}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} {name}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of 9 passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
