//! Quick end-to-end checks against closed forms and the exact oracle.

use anyhow::Result;

use phasegbs_core::clicks::{glauber_moment, grouped_probability, GroupPartition};
use phasegbs_core::network::haar_unitary;
use phasegbs_core::oracles::{exact_grouped_distribution, output_gaussian_moments};
use phasegbs_core::quadrature::{build_entanglement_unitary, evaluate_witness};
use phasegbs_core::stats::chi_square;
use phasegbs_core::{BinnedComparison, Layout, Ordering, Simulation, SqueezerSpec, TransmissionMatrix};

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn photon_number() -> Result<Check> {
    let r: f64 = 1.0;
    let spec = SqueezerSpec::new(vec![r], 0.0)?;
    let sim = Simulation::new(&spec, Ordering::PositiveP, None, Layout::new(100, 2000)?, 11)?;
    let n = glauber_moment(&sim, &[1])?;
    let want = r.sinh().powi(2);
    Ok(Check {
        name: "single-mode photon number",
        pass: n.re.within(want, 5.0),
        detail: format!("{:.5} ± {:.5}, expected {want:.5}", n.re.value, n.re.std_error),
    })
}

fn grouped_against_exact() -> Result<Check> {
    let spec = SqueezerSpec::uniform(4, 2, 0.8, 0.0)?;
    let t = haar_unitary(4, 3)?;
    let part = GroupPartition::sequential(&[2, 2], 4)?;
    let sim = Simulation::new(&spec, Ordering::PositiveP, Some(&t), Layout::new(100, 2000)?, 5)?;
    let mc = grouped_probability(&sim, &part)?;
    let exact = exact_grouped_distribution(&output_gaussian_moments(&spec, &t)?, &part)?;
    let chi = chi_square(&BinnedComparison::from_distributions(&mc, &exact)?)?;
    let norm = (mc.total() - 1.0).abs();
    Ok(Check {
        name: "grouped counts against exact",
        pass: chi.ratio < 3.0 && norm < 1e-10,
        detail: format!("chi2/k = {:.3} over {} bins, |sum - 1| = {norm:.1e}", chi.ratio, chi.k),
    })
}

fn vacuum_witness() -> Result<Check> {
    let m = 4;
    let spec = SqueezerSpec::vacuum(m)?;
    let t = build_entanglement_unitary(m)?;
    let sim = Simulation::new(&spec, Ordering::Wigner, Some(&t), Layout::new(50, 2000)?, 2)?;
    let w = evaluate_witness(&sim, m)?;
    Ok(Check {
        name: "vacuum witness variances",
        pass: w.var_u.within(2.0, 5.0) && w.var_v.within(2.0, 5.0) && !w.pass_product,
        detail: format!(
            "var_u = {:.4} ± {:.4}, var_v = {:.4} ± {:.4}",
            w.var_u.value, w.var_u.std_error, w.var_v.value, w.var_v.std_error
        ),
    })
}

fn identity_network() -> Result<Check> {
    let spec = SqueezerSpec::uniform(3, 3, 0.5, 0.0)?;
    let a = Simulation::new(&spec, Ordering::PositiveP, None, Layout::new(4, 50)?, 9)?.materialize()?;
    let b = Simulation::new(&spec, Ordering::PositiveP, Some(&TransmissionMatrix::identity(3)), Layout::new(4, 50)?, 9)?
        .materialize()?;
    Ok(Check {
        name: "identity network is a no-op",
        pass: a.alpha() == b.alpha() && a.beta() == b.beta(),
        detail: String::new(),
    })
}

pub fn run_checks() -> Vec<(&'static str, Result<Check>)> {
    vec![
        ("photon", photon_number()),
        ("grouped", grouped_against_exact()),
        ("witness", vacuum_witness()),
        ("identity", identity_network()),
    ]
}

/// Prints one line per check; returns whether all passed.
pub fn run() -> bool {
    let mut ok = true;
    for (key, result) in run_checks() {
        match result {
            Ok(c) => {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.pass;
            }
            Err(e) => {
                println!("FAIL {key}: {e:#}");
                ok = false;
            }
        }
    }
    ok
}
