//! Experiment driver: configuration parsing and validation, simulated-time
//! accounting, multi-trial runs, trace CSV emission, and run comparison.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::dataset::{
    load_dense, load_libsvm, normalize, partition_by_fractions, Dataset, NormalizeMode, Partition,
};
use crate::engine::{derive_stream, Solver, TraceRecord};
use crate::error::{Error, Result};
use crate::losses::{LossFamily, LossSpec};
use crate::topology::{
    compute_betas, schedule_iterations, DelayedScope, IterationMode, IterationSchedule, Topology,
    WeightMode, WeightSchedule,
};

/// Per-layer timing constants, all in abstract time units.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeModel {
    /// Local processing time per inner iteration, indexed by layer.
    pub t_lp: Vec<f64>,
    /// Round-trip link delay between a node and its parent, indexed by the
    /// child's layer.
    pub t_delay: Vec<f64>,
    /// Aggregation time at a parent, indexed by the parent's layer.
    pub t_cp: Vec<f64>,
}

impl TimeModel {
    fn validate(&self, depth: usize) -> Result<()> {
        for (name, v) in [
            ("t_lp", &self.t_lp),
            ("t_delay", &self.t_delay),
            ("t_cp", &self.t_cp),
        ] {
            if v.len() != depth + 1 {
                return Err(Error::Config(format!(
                    "time.{name} must have one entry per layer 0..={depth}, got {}",
                    v.len()
                )));
            }
            if v.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                return Err(Error::Config(format!(
                    "time.{name} entries must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }

    /// Delay severity `r = (t_delay + t_cp) / t_lp` at the leaf layer,
    /// relative to the leaves' parents.
    pub fn delay_severity(&self, depth: usize) -> f64 {
        (self.t_delay[depth] + self.t_cp[depth - 1]) / self.t_lp[depth]
    }
}

/// Simulated duration of one root aggregation round. A leaf costs
/// `t_lp * T_leaf`; an internal node costs `T_i * (max over children +
/// round-trip delay + aggregation)`; the root's own round count is not
/// included since the trace accumulates per root round.
pub fn simulated_time_per_outer_iteration(
    topology: &Topology,
    iterations: &IterationSchedule,
    time_model: &TimeModel,
) -> f64 {
    fn subtree_time(
        topology: &Topology,
        iterations: &IterationSchedule,
        tm: &TimeModel,
        node: usize,
    ) -> f64 {
        let n = &topology.nodes[node];
        if n.children.is_empty() {
            return tm.t_lp[n.layer] * iterations.t[node] as f64;
        }
        iterations.t[node] as f64 * round_time(topology, iterations, tm, node)
    }
    fn round_time(
        topology: &Topology,
        iterations: &IterationSchedule,
        tm: &TimeModel,
        node: usize,
    ) -> f64 {
        let n = &topology.nodes[node];
        let slowest = n
            .children
            .iter()
            .map(|&c| {
                subtree_time(topology, iterations, tm, c) + tm.t_delay[topology.nodes[c].layer]
            })
            .fold(0.0, f64::max);
        slowest + tm.t_cp[n.layer]
    }
    round_time(topology, iterations, time_model, topology.root())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    Dense,
    Libsvm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeConfig {
    PerInstanceUnit,
    CapAtOne,
    Off,
}

fn default_delimiter() -> String {
    ",".into()
}

fn default_normalize() -> NormalizeConfig {
    NormalizeConfig::PerInstanceUnit
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: String,
    pub format: DataFormat,
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    #[serde(default)]
    pub label_column: usize,
    #[serde(default)]
    pub has_header: bool,
    /// Raw label token -> numeric label, required for libsvm input.
    #[serde(default)]
    pub label_map: BTreeMap<String, f64>,
    #[serde(default = "default_normalize")]
    pub normalize: NormalizeConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub loss: LossFamily,
    pub lambda: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    /// Complete tree: children per node at each layer.
    #[serde(default)]
    pub fanout: Option<Vec<usize>>,
    /// General tree: child ids per node id (node 0 is the root).
    #[serde(default)]
    pub children: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub fractions: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub mode: WeightMode,
}

fn default_scope() -> DelayedScope {
    DelayedScope::AllLeaves
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationsConfig {
    /// Base iteration count per layer, root first.
    pub base: Vec<usize>,
    pub mode: IterationMode,
    #[serde(default = "default_scope")]
    pub scope: DelayedScope,
    /// Explicit per-leaf counts (keys are node ids), overriding the schedule.
    #[serde(default)]
    pub pins: BTreeMap<String, usize>,
}

fn default_parallel() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_parallel")]
    pub parallel: bool,
    pub output_dir: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub problem: ProblemConfig,
    pub topology: TopologyConfig,
    pub partition: PartitionConfig,
    pub weights: WeightsConfig,
    pub iterations: IterationsConfig,
    pub time: TimeModel,
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    pub fn build_topology(&self) -> Result<Topology> {
        match (&self.topology.fanout, &self.topology.children) {
            (Some(f), None) => Topology::from_fanout(f),
            (None, Some(c)) => Topology::from_children(c),
            _ => Err(Error::Config(
                "topology needs exactly one of `fanout` or `children`".into(),
            )),
        }
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        let ds = match self.dataset.format {
            DataFormat::Dense => {
                let mut chars = self.dataset.delimiter.chars();
                let delim = chars.next().ok_or_else(|| {
                    Error::Config("dataset.delimiter must be a single character".into())
                })?;
                if chars.next().is_some() {
                    return Err(Error::Config(
                        "dataset.delimiter must be a single character".into(),
                    ));
                }
                load_dense(
                    &self.dataset.path,
                    delim,
                    self.dataset.label_column,
                    self.dataset.has_header,
                )?
            }
            DataFormat::Libsvm => {
                if self.dataset.label_map.is_empty() {
                    return Err(Error::Config(
                        "libsvm input requires dataset.label_map".into(),
                    ));
                }
                load_libsvm(&self.dataset.path, &self.dataset.label_map)?
            }
        };
        Ok(match self.dataset.normalize {
            NormalizeConfig::PerInstanceUnit => normalize(ds, NormalizeMode::PerInstanceUnit),
            NormalizeConfig::CapAtOne => normalize(ds, NormalizeMode::CapAtOne),
            NormalizeConfig::Off => ds,
        })
    }

    fn pins(&self) -> Result<BTreeMap<usize, usize>> {
        self.iterations
            .pins
            .iter()
            .map(|(k, &v)| {
                k.parse::<usize>()
                    .map(|id| (id, v))
                    .map_err(|_| Error::Config(format!("pin key {k:?} is not a node id")))
            })
            .collect()
    }

    /// Validate everything that does not require reading the dataset.
    pub fn validate(&self) -> Result<()> {
        let topology = self.build_topology()?;
        let leaves = topology.leaves();
        if self.partition.fractions.len() != leaves.len() {
            return Err(Error::Config(format!(
                "partition.fractions has {} entries but the tree has {} leaves",
                self.partition.fractions.len(),
                leaves.len()
            )));
        }
        if self.problem.lambda <= 0.0 {
            return Err(Error::Config("problem.lambda must be positive".into()));
        }
        if self.run.trials == 0 {
            return Err(Error::Config("run.trials must be >= 1".into()));
        }
        self.time.validate(topology.depth)?;
        if self.iterations.base.len() != topology.depth + 1 {
            return Err(Error::Config(format!(
                "iterations.base must have one entry per layer 0..={}",
                topology.depth
            )));
        }
        self.pins()?;
        Ok(())
    }
}

/// Everything assembled from a config, ready to run.
pub struct Experiment {
    pub dataset: Dataset,
    pub topology: Topology,
    pub partition: Partition,
    pub betas: WeightSchedule,
    pub iterations: IterationSchedule,
    pub spec: LossSpec,
    pub lambda: f64,
    pub time_per_outer: f64,
}

impl Experiment {
    pub fn assemble(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let dataset = config.load_dataset()?;
        let topology = config.build_topology()?;
        let leaves = topology.leaves();
        let partition = partition_by_fractions(
            dataset.m(),
            &config.partition.fractions,
            &leaves,
            config.run.seed,
        )?;
        let betas = compute_betas(&topology, &partition, config.weights.mode)?;
        let iterations = schedule_iterations(
            &topology,
            &partition,
            &config.iterations.base,
            config.iterations.mode,
            config.iterations.scope,
            &config.pins()?,
        )?;
        let time_per_outer =
            simulated_time_per_outer_iteration(&topology, &iterations, &config.time);
        Ok(Experiment {
            dataset,
            topology,
            partition,
            betas,
            iterations,
            spec: LossSpec::from_family(config.problem.loss),
            lambda: config.problem.lambda,
            time_per_outer,
        })
    }

    /// Run `trials` independently seeded traces.
    pub fn run_trials(
        &self,
        trials: usize,
        seed: u64,
        parallel: bool,
    ) -> Result<Vec<Vec<TraceRecord>>> {
        let solver = Solver::new(
            &self.dataset,
            self.spec,
            self.lambda,
            &self.topology,
            &self.partition,
            &self.betas,
            &self.iterations,
            parallel,
        )?;
        let seeds: Vec<u64> = (0..trials)
            .map(|k| derive_stream(seed, 0x7472_6961, k as u64))
            .collect();
        if parallel {
            seeds
                .par_iter()
                .map(|&s| solver.run(s, self.time_per_outer))
                .collect()
        } else {
            seeds
                .iter()
                .map(|&s| solver.run(s, self.time_per_outer))
                .collect()
        }
    }
}

/// Output locations of a finished experiment.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub trial_paths: Vec<PathBuf>,
    pub mean_path: PathBuf,
}

fn fmt(v: f64) -> String {
    // 17 significant digits: lossless f64 round trip
    format!("{v:.16e}")
}

fn write_trial_csv(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut out = String::from("outer_iter,sim_time,primal,dual,gap\n");
    for r in trace {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.outer_iteration,
            fmt(r.simulated_time),
            fmt(r.primal),
            fmt(r.dual),
            fmt(r.gap)
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_mean_csv(path: &Path, traces: &[Vec<TraceRecord>]) -> Result<()> {
    let n = traces.len() as f64;
    let rows = traces[0].len();
    let mut out = String::from("outer_iter,mean_sim_time,mean_primal,mean_dual,mean_gap,std_gap\n");
    for i in 0..rows {
        let mean_of = |f: &dyn Fn(&TraceRecord) -> f64| -> f64 {
            traces.iter().map(|t| f(&t[i])).sum::<f64>() / n
        };
        let time = mean_of(&|r| r.simulated_time);
        let primal = mean_of(&|r| r.primal);
        let dual = mean_of(&|r| r.dual);
        let gap = mean_of(&|r| r.gap);
        let var = if traces.len() > 1 {
            traces
                .iter()
                .map(|t| (t[i].gap - gap) * (t[i].gap - gap))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            traces[0][i].outer_iteration,
            fmt(time),
            fmt(primal),
            fmt(dual),
            fmt(gap),
            fmt(var.sqrt())
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Run the configured trials and write one CSV per trial plus the averaged
/// trace. Nothing is written until every trial has finished.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let experiment = Experiment::assemble(config)?;
    let traces = experiment.run_trials(config.run.trials, config.run.seed, config.run.parallel)?;

    let dir = PathBuf::from(&config.run.output_dir);
    fs::create_dir_all(&dir)?;
    let mut trial_paths = Vec::with_capacity(traces.len());
    for (k, trace) in traces.iter().enumerate() {
        let path = dir.join(format!("trial_{k:04}.csv"));
        write_trial_csv(&path, trace)?;
        trial_paths.push(path);
    }
    let mean_path = dir.join("mean.csv");
    write_mean_csv(&mean_path, &traces)?;
    Ok(ExperimentOutput {
        trial_paths,
        mean_path,
    })
}

/// A parsed (time, gap) trace.
#[derive(Clone, Debug)]
pub struct GapTrace {
    pub times: Vec<f64>,
    pub gaps: Vec<f64>,
}

/// Read a trace CSV (per-trial or averaged), keyed by column names.
pub fn read_gap_trace<P: AsRef<Path>>(path: P) -> Result<GapTrace> {
    let text = fs::read_to_string(path.as_ref())?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty trace file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let find = |names: &[&str]| -> Result<usize> {
        cols.iter()
            .position(|c| names.contains(c))
            .ok_or_else(|| Error::Format(format!("missing column, expected one of {names:?}")))
    };
    let time_col = find(&["sim_time", "mean_sim_time"])?;
    let gap_col = find(&["gap", "mean_gap"])?;
    let mut times = Vec::new();
    let mut gaps = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Format(format!(
                "row {} has {} fields, header has {}",
                lineno + 2,
                fields.len(),
                cols.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Format(format!("bad float {s:?} in row {}", lineno + 2)))
        };
        times.push(parse(fields[time_col])?);
        gaps.push(parse(fields[gap_col])?);
    }
    if times.is_empty() {
        return Err(Error::Format("trace has no data rows".into()));
    }
    Ok(GapTrace { times, gaps })
}

/// First simulated time at which the gap drops to `target`, linearly
/// interpolated between records; `None` if never reached.
pub fn time_to_gap(trace: &GapTrace, target: f64) -> Option<f64> {
    for i in 0..trace.gaps.len() {
        if trace.gaps[i] <= target {
            if i == 0 {
                return Some(trace.times[0]);
            }
            let (g0, g1) = (trace.gaps[i - 1], trace.gaps[i]);
            let (t0, t1) = (trace.times[i - 1], trace.times[i]);
            if g0 <= g1 {
                return Some(t1);
            }
            return Some(t0 + (t1 - t0) * (g0 - target) / (g0 - g1));
        }
    }
    None
}

#[derive(Clone, Debug)]
pub struct CompareReport {
    pub initial_gap: f64,
    pub target_gap: f64,
    pub time_a: Option<f64>,
    pub time_b: Option<f64>,
    /// `time_a / time_b`: how much faster trace B reaches the target.
    pub speedup: Option<f64>,
}

/// Compare two traces of the same problem: time for each to reach
/// `target_fraction` of the shared initial gap.
pub fn compare_runs<P: AsRef<Path>>(
    trace_a: P,
    trace_b: P,
    target_fraction: f64,
) -> Result<CompareReport> {
    if !(0.0..1.0).contains(&target_fraction) || target_fraction <= 0.0 {
        return Err(Error::Config("target fraction must lie in (0, 1)".into()));
    }
    let a = read_gap_trace(trace_a)?;
    let b = read_gap_trace(trace_b)?;
    let g0 = a.gaps[0];
    if (b.gaps[0] - g0).abs() > 1e-6 * (1.0 + g0.abs()) {
        return Err(Error::Format(format!(
            "traces do not share an initial gap: {} vs {}",
            g0, b.gaps[0]
        )));
    }
    let target = target_fraction * g0;
    let time_a = time_to_gap(&a, target);
    let time_b = time_to_gap(&b, target);
    let speedup = match (time_a, time_b) {
        (Some(ta), Some(tb)) if tb > 0.0 => Some(ta / tb),
        _ => None,
    };
    Ok(CompareReport {
        initial_gap: g0,
        target_gap: target,
        time_a,
        time_b,
        speedup,
    })
}
