//! Run configuration: a JSON document, optionally overridden by flags, then
//! resolved into validated simulation inputs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use phasegbs_core::clicks::{GroupPartition, GroupedDistribution};
use phasegbs_core::network::{haar_unitary, scale_transmission};
use phasegbs_core::quadrature::{build_entanglement_unitary, epr_chain_input_spec};
use phasegbs_core::{Layout, Ordering, SqueezerSpec, TransmissionMatrix};

use crate::formats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Simulate,
    Compare,
    Entangle,
    Oracle,
    Selftest,
}

/// Per-mode squeezing parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Squeezing {
    /// The first `squeezed_modes` inputs get `r`, the rest are vacuum.
    Uniform { squeezed_modes: usize, r: f64 },
    Values(Vec<f64>),
    /// Whitespace-separated values, one per input mode.
    File(PathBuf),
    /// Two orthogonally squeezed inputs (`+r`, `−r`), vacuum elsewhere.
    Epr { r: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transmission {
    Identity,
    File(PathBuf),
    RandomUnitary { seed: u64 },
    EntanglementChain,
    /// Every entry of `inner` multiplied by `factor`.
    Scaled { factor: f64, inner: Box<Transmission> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    /// One group with every output mode.
    Total,
    /// Consecutive groups of these sizes.
    Sizes(Vec<usize>),
    /// Explicit 0-based output mode indices per group.
    Groups(Vec<Vec<usize>>),
}

/// Where `compare` takes its theory distribution from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theory {
    Simulation,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    /// Number of input modes.
    pub mode_count: usize,
    pub squeezing: Squeezing,
    pub epsilon: f64,
    /// Phase-space ordering: 0 positive-P, 0.5 Wigner, 1 Q-function.
    pub sigma: f64,
    pub transmission: Transmission,
    pub partition: Partition,
    pub samples: usize,
    pub subensembles: usize,
    /// Master seed; a time-derived seed is recorded when absent.
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub patterns: Option<PathBuf>,
    pub theory: Theory,
    pub min_count: u64,
    pub probability_cutoff: Option<f64>,
    pub max_entries: usize,
    /// `oracle` only: also draw this many click patterns from the exact law.
    pub synthetic_patterns: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: Task::Simulate,
            mode_count: 16,
            squeezing: Squeezing::Uniform {
                squeezed_modes: 8,
                r: 1.0,
            },
            epsilon: 0.0,
            sigma: 0.0,
            transmission: Transmission::RandomUnitary { seed: 1 },
            partition: Partition::Total,
            samples: 1_200_000,
            subensembles: 1200,
            seed: None,
            output_dir: PathBuf::from("out"),
            patterns: None,
            theory: Theory::Simulation,
            min_count: phasegbs_core::stats::DEFAULT_MIN_COUNT,
            probability_cutoff: None,
            max_entries: phasegbs_core::clicks::DEFAULT_MAX_ENTRIES,
            synthetic_patterns: None,
        }
    }
}

impl RunConfig {
    /// Defaults used when a subcommand runs without `--config`.
    pub fn preset(task: Task) -> Self {
        match task {
            Task::Entangle => RunConfig {
                task,
                mode_count: 100,
                squeezing: Squeezing::Epr { r: 3.0 },
                sigma: 0.5,
                transmission: Transmission::EntanglementChain,
                ..RunConfig::default()
            },
            _ => RunConfig {
                task,
                ..RunConfig::default()
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("invalid run configuration")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = RunConfig::from_json(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Squeezing::File(p) = &mut self.squeezing {
            fix(p);
        }
        let mut t = &mut self.transmission;
        loop {
            match t {
                Transmission::File(p) => {
                    fix(p);
                    break;
                }
                Transmission::Scaled { inner, .. } => t = inner,
                _ => break,
            }
        }
        if let Some(p) = &mut self.patterns {
            fix(p);
        }
        fix(&mut self.output_dir);
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = Some(seed);
        }
        if let Some(samples) = o.samples {
            self.samples = samples;
        }
        if let Some(n) = o.subensembles {
            self.subensembles = n;
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if let Some(p) = &o.patterns {
            self.patterns = Some(p.clone());
        }
        if let Some(m) = &o.matrix {
            self.transmission = Transmission::File(m.clone());
        }
        if let Some(eps) = o.epsilon {
            self.epsilon = eps;
        }
        if let Some(factor) = o.scale {
            let inner = std::mem::replace(&mut self.transmission, Transmission::Identity);
            self.transmission = Transmission::Scaled {
                factor,
                inner: Box::new(inner),
            };
        }
    }
}

/// Command-line overrides of config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub subensembles: Option<usize>,
    pub out: Option<PathBuf>,
    pub patterns: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub epsilon: Option<f64>,
    pub scale: Option<f64>,
}

/// Validated inputs for one run.
#[derive(Debug, Clone)]
pub struct Resolved {
    /// The config as run, with the seed filled in.
    pub config: RunConfig,
    pub seed: u64,
    pub spec: SqueezerSpec,
    pub ordering: Ordering,
    pub transmission: TransmissionMatrix,
    pub partition: GroupPartition,
    pub layout: Layout,
    /// Binned measured patterns, for `compare`.
    pub reference: Option<GroupedDistribution>,
}

impl Resolved {
    pub fn output_modes(&self) -> usize {
        self.transmission.rows()
    }
}

fn fresh_seed() -> u64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

fn build_transmission(t: &Transmission, modes: usize) -> Result<TransmissionMatrix> {
    Ok(match t {
        Transmission::Identity => TransmissionMatrix::identity(modes),
        Transmission::File(path) => formats::read_matrix(path)?,
        Transmission::RandomUnitary { seed } => haar_unitary(modes, *seed)?,
        Transmission::EntanglementChain => build_entanglement_unitary(modes)?,
        Transmission::Scaled { factor, inner } => {
            scale_transmission(&build_transmission(inner, modes)?, *factor)
                .with_context(|| format!("scaling the transmission matrix by {factor}"))?
        }
    })
}

fn build_spec(cfg: &RunConfig) -> Result<SqueezerSpec> {
    let m = cfg.mode_count;
    let spec = match &cfg.squeezing {
        Squeezing::Uniform { squeezed_modes, r } => {
            if *squeezed_modes > m {
                bail!("squeezed_modes = {squeezed_modes} exceeds mode_count = {m}");
            }
            SqueezerSpec::uniform(m, *squeezed_modes, *r, cfg.epsilon)?
        }
        Squeezing::Values(values) => SqueezerSpec::new(values.clone(), cfg.epsilon)?,
        Squeezing::File(path) => SqueezerSpec::new(formats::read_squeezing(path)?, cfg.epsilon)?,
        Squeezing::Epr { r } => {
            let base = epr_chain_input_spec(m, *r)?;
            SqueezerSpec::new(base.squeezing().to_vec(), cfg.epsilon)?
        }
    };
    if spec.mode_count() != m {
        bail!("squeezing has {} values but mode_count = {m}", spec.mode_count());
    }
    Ok(spec)
}

/// Checks every field and builds the core inputs. Errors here are
/// configuration errors.
pub fn resolve(cfg: &RunConfig) -> Result<Resolved> {
    if cfg.mode_count == 0 {
        bail!("mode_count must be positive");
    }
    let ordering = Ordering::from_sigma(cfg.sigma)?;
    let spec = build_spec(cfg).context("squeezing")?;
    let transmission = build_transmission(&cfg.transmission, cfg.mode_count).context("transmission")?;
    if transmission.cols() < cfg.mode_count || (ordering != Ordering::PositiveP && transmission.cols() != cfg.mode_count) {
        bail!(
            "transmission matrix is {}x{} but there are {} input modes",
            transmission.rows(),
            transmission.cols(),
            cfg.mode_count
        );
    }
    let outputs = transmission.rows();
    let partition = match &cfg.partition {
        Partition::Total => GroupPartition::total(outputs)?,
        Partition::Sizes(sizes) => GroupPartition::sequential(sizes, outputs)?,
        Partition::Groups(groups) => GroupPartition::new(groups.clone(), outputs)?,
    };
    let layout = Layout::split(cfg.samples, cfg.subensembles)?;
    if let Some(c) = cfg.probability_cutoff {
        if c.is_nan() || c < 0.0 {
            bail!("probability_cutoff must be nonnegative");
        }
    }
    let needs_clicks = matches!(cfg.task, Task::Simulate | Task::Compare);
    if needs_clicks && ordering != Ordering::PositiveP && cfg.theory == Theory::Simulation {
        bail!("click distributions need the positive-P representation (sigma = 0)");
    }
    let reference = if cfg.task == Task::Compare {
        let path = cfg
            .patterns
            .as_ref()
            .context("compare needs a click-pattern file (--patterns)")?;
        Some(formats::read_patterns(path, &partition)?)
    } else {
        None
    };
    let seed = cfg.seed.unwrap_or_else(fresh_seed);
    let mut config = cfg.clone();
    config.seed = Some(seed);
    Ok(Resolved {
        config,
        seed,
        spec,
        ordering,
        transmission,
        partition,
        layout,
        reference,
    })
}
