//! The computations behind each subcommand, and their output files.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use phasegbs_core::clicks::{grouped_probability_capped, GroupedDistribution};
use phasegbs_core::oracles::{
    exact_grouped_distribution, exact_pattern_distribution, output_gaussian_moments, sample_patterns,
    MAX_CLICK_SET,
};
use phasegbs_core::quadrature::{evaluate_witness, WitnessReport};
use phasegbs_core::stats::{chi_square, z_scores, ChiSquare};
use phasegbs_core::{BinnedComparison, Estimate, Simulation};

use crate::config::{Resolved, Task, Theory};
use crate::formats::{self, float};

pub fn simulation(res: &Resolved) -> Result<Simulation> {
    Ok(Simulation::new(
        &res.spec,
        res.ordering,
        Some(&res.transmission),
        res.layout,
        res.seed,
    )?)
}

/// Monte Carlo grouped count distribution.
pub fn simulate(res: &Resolved) -> Result<GroupedDistribution> {
    let sim = simulation(res)?;
    Ok(grouped_probability_capped(&sim, &res.partition, res.config.max_entries)?)
}

/// Exact grouped count distribution of the configured Gaussian state.
pub fn exact(res: &Resolved) -> Result<GroupedDistribution> {
    let gm = output_gaussian_moments(&res.spec, &res.transmission)?;
    Ok(exact_grouped_distribution(&gm, &res.partition)?)
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub theory: GroupedDistribution,
    pub bins: BinnedComparison,
    pub z: Vec<Option<f64>>,
    pub chi: ChiSquare,
}

/// Theory against the binned reference patterns.
pub fn compare(res: &Resolved) -> Result<Comparison> {
    let reference = res.reference.as_ref().context("no reference patterns were loaded")?;
    let theory = match res.config.theory {
        Theory::Simulation => simulate(res)?,
        Theory::Exact => exact(res)?,
    };
    let mut bins = BinnedComparison::from_distributions(&theory, reference)?.with_min_count(res.config.min_count);
    if let Some(c) = res.config.probability_cutoff {
        bins = bins.with_probability_cutoff(c);
    }
    let z = z_scores(&bins)?;
    let chi = chi_square(&bins)?;
    Ok(Comparison { theory, bins, z, chi })
}

pub fn entangle(res: &Resolved) -> Result<WitnessReport> {
    let sim = simulation(res)?;
    Ok(evaluate_witness(&sim, res.output_modes())?)
}

/// Exact grouped distribution plus, optionally, click masks drawn from the
/// exact pattern law.
pub fn oracle(res: &Resolved) -> Result<(GroupedDistribution, Option<Vec<usize>>)> {
    let gm = output_gaussian_moments(&res.spec, &res.transmission)?;
    let dist = exact_grouped_distribution(&gm, &res.partition)?;
    let patterns = match res.config.synthetic_patterns {
        Some(n) => {
            let m = gm.mode_count();
            if m > MAX_CLICK_SET {
                bail!("pattern sampling is limited to {MAX_CLICK_SET} output modes, found {m}");
            }
            let modes: Vec<usize> = (0..m).collect();
            let probs = exact_pattern_distribution(&gm, &modes)?;
            Some(sample_patterns(&probs, n, res.seed)?)
        }
        None => None,
    };
    Ok((dist, patterns))
}

fn comments(res: &Resolved) -> Vec<String> {
    // The output directory is left out so reruns elsewhere compare equal.
    let mut cfg = serde_json::to_value(&res.config).expect("config serializes");
    if let Value::Object(map) = &mut cfg {
        map.remove("output_dir");
    }
    let compact = cfg.to_string();
    vec![
        format!("phasegbs {}", env!("CARGO_PKG_VERSION")),
        format!("config: {compact}"),
    ]
}

fn estimate(e: &Estimate) -> Value {
    json!({ "value": e.value, "std_error": e.std_error })
}

fn summary(res: &Resolved, started: Instant, extra: Value) -> Value {
    let mut v = json!({
        "config": res.config,
        "seed": res.seed,
        "input_modes": res.spec.mode_count(),
        "output_modes": res.output_modes(),
        "elapsed_seconds": started.elapsed().as_secs_f64(),
    });
    if let (Value::Object(base), Value::Object(more)) = (&mut v, extra) {
        base.extend(more);
    }
    v
}

fn distribution_summary(d: &GroupedDistribution) -> Value {
    json!({
        "shape": d.shape(),
        "sample_count": d.sample_count(),
        "total": d.total(),
    })
}

/// Runs the configured task and writes its files into `output_dir`.
pub fn run(res: &Resolved) -> Result<()> {
    let out = &res.config.output_dir;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let started = Instant::now();
    match res.config.task {
        Task::Simulate => {
            let dist = simulate(res)?;
            formats::write_distribution(&out.join("distribution.csv"), &dist, &comments(res))?;
            let s = summary(res, started, distribution_summary(&dist));
            formats::write_json(&out.join("distribution.json"), &s)?;
        }
        Task::Compare => {
            let cmp = compare(res)?;
            write_comparison(&out.join("comparison.csv"), &cmp, &comments(res))?;
            let s = summary(
                res,
                started,
                json!({
                    "bins": cmp.bins.bins().len(),
                    "z": cmp.z,
                    "chi2": cmp.chi.chi2,
                    "k": cmp.chi.k,
                    "ratio": cmp.chi.ratio,
                    "min_count": cmp.bins.min_count(),
                    "probability_cutoff": cmp.bins.probability_cutoff(),
                    "excluded_bins": (0..cmp.bins.bins().len())
                        .filter(|&i| !cmp.bins.is_retained(i))
                        .map(|i| &cmp.bins.bins()[i].label)
                        .collect::<Vec<_>>(),
                    "theory": distribution_summary(&cmp.theory),
                    "reference_patterns": res.reference.as_ref().map(|r| r.sample_count()),
                }),
            );
            formats::write_json(&out.join("comparison.json"), &s)?;
        }
        Task::Entangle => {
            let w = entangle(res)?;
            write_witness(&out.join("witness.csv"), &w, &comments(res))?;
            let s = summary(
                res,
                started,
                json!({
                    "var_u": estimate(&w.var_u),
                    "var_v": estimate(&w.var_v),
                    "product": estimate(&w.product),
                    "sum": estimate(&w.sum),
                    "threshold_product": w.threshold_product,
                    "threshold_sum": w.threshold_sum,
                    "pass_product": w.pass_product,
                    "pass_sum": w.pass_sum,
                }),
            );
            formats::write_json(&out.join("witness.json"), &s)?;
        }
        Task::Oracle => {
            let (dist, patterns) = oracle(res)?;
            formats::write_distribution(&out.join("oracle.csv"), &dist, &comments(res))?;
            if let Some(masks) = &patterns {
                formats::write_patterns(&out.join("patterns.txt"), masks, res.output_modes())?;
            }
            let mut extra = distribution_summary(&dist);
            extra["synthetic_patterns"] = json!(patterns.as_ref().map(Vec::len));
            let s = summary(res, started, extra);
            formats::write_json(&out.join("oracle.json"), &s)?;
        }
        Task::Selftest => bail!("selftest has no config-driven run"),
    }
    Ok(())
}

fn write_comparison(path: &Path, cmp: &Comparison, comments: &[String]) -> Result<()> {
    let mut w = formats::csv_writer(path, comments)?;
    let d = cmp.theory.shape().len();
    let mut header: Vec<String> = (1..=d).map(|j| format!("m_{j}")).collect();
    header.extend(
        ["theory", "theory_error", "reference", "reference_error", "count", "z", "retained"].map(String::from),
    );
    w.write_record(&header)?;
    for (i, bin) in cmp.bins.bins().iter().enumerate() {
        let mut row: Vec<String> = bin.label.iter().map(|m| m.to_string()).collect();
        row.push(float(bin.theory));
        row.push(float(bin.theory_error));
        row.push(float(bin.reference));
        row.push(float(bin.reference_error));
        row.push(bin.count.map(|c| c.to_string()).unwrap_or_default());
        row.push(cmp.z[i].map(float).unwrap_or_default());
        row.push(cmp.bins.is_retained(i).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_witness(path: &Path, r: &WitnessReport, comments: &[String]) -> Result<()> {
    let mut w = formats::csv_writer(path, comments)?;
    w.write_record(["quantity", "value", "std_error", "threshold", "pass"])?;
    type Row<'a> = (&'a str, &'a Estimate, Option<(f64, bool)>);
    let rows: [Row; 4] = [
        ("var_u", &r.var_u, None),
        ("var_v", &r.var_v, None),
        ("product", &r.product, Some((r.threshold_product, r.pass_product))),
        ("sum", &r.sum, Some((r.threshold_sum, r.pass_sum))),
    ];
    for (name, e, test) in rows {
        w.write_record([
            name.to_string(),
            float(e.value),
            float(e.std_error),
            test.map(|t| float(t.0)).unwrap_or_default(),
            test.map(|t| t.1.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
