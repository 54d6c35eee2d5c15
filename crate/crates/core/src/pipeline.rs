//! End-to-end runs: the full learner-plus-aggregation pipeline, its ablated
//! variants, the baselines, JSON reporting and the timing harness.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::came::{run_came, CameConfig, CodeMatrix};
use crate::data::{generate_synthetic, Dataset, SynthSpec};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, Scores};
use crate::mgcpl::{run_mgcpl, run_single_granularity, Dynamics, MgcplConfig, Reseed, StopRule};

pub const REPORT_SCHEMA: &str = "mcdc-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Multi-granular learning followed by weighted aggregation.
    Full,
    /// Iterative max-similarity reassignment at a given `k`, no competition.
    Mcdc1,
    /// Single-granularity competitive learning from `k + 2` seeds.
    Mcdc2,
    /// The coarsest multi-granular partition, no aggregation.
    Mcdc3,
    /// Aggregation with uniform, frozen level weights.
    Mcdc4,
    /// k-modes on the raw data.
    Kmodes,
}

impl Variant {
    pub const ALL: [Variant; 6] =
        [Variant::Full, Variant::Mcdc1, Variant::Mcdc2, Variant::Mcdc3, Variant::Mcdc4, Variant::Kmodes];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Mcdc1 => "mcdc1",
            Variant::Mcdc2 => "mcdc2",
            Variant::Mcdc3 => "mcdc3",
            Variant::Mcdc4 => "mcdc4",
            Variant::Kmodes => "kmodes",
        }
    }

    /// Variants that cannot infer the number of clusters themselves.
    pub fn requires_k(self) -> bool {
        matches!(self, Variant::Mcdc1 | Variant::Mcdc2 | Variant::Kmodes)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}`")))
    }
}

/// Switches that restore literal readings of the published algorithm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatFlags {
    /// Keep the `1/d` prefactor on weighted similarity.
    pub literal_similarity: bool,
    /// Start each epoch after the first from the previous partition instead
    /// of fresh random seeds.
    pub carry_members: bool,
    /// Count an object in its own cluster while scoring it.
    pub include_self: bool,
    /// Keep aggregation modes fixed at their seed rows.
    pub frozen_modes: bool,
    /// Stop the epoch loop on an unchanged partition instead of an unchanged count.
    pub partition_stop: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub eta: f64,
    /// Initial cluster count; `⌊√n⌋` when absent.
    pub k0: Option<usize>,
    /// Sought cluster count; the learned `k_σ` when absent.
    pub k: Option<usize>,
    pub seed: u64,
    pub max_passes: usize,
    pub max_epochs: usize,
    pub max_iter: usize,
    /// Aggregation seedings per run; the lowest-objective one is kept.
    pub came_restarts: usize,
    pub variant: Variant,
    pub compat: CompatFlags,
    pub repeats: usize,
    /// Include every granularity level's labels in the report.
    pub emit_levels: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eta: 0.03,
            k0: None,
            k: None,
            seed: 0,
            max_passes: 100,
            max_epochs: 50,
            max_iter: 100,
            came_restarts: 10,
            variant: Variant::Full,
            compat: CompatFlags::default(),
            repeats: 1,
            emit_levels: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::Config(format!("eta must be positive, got {}", self.eta)));
        }
        if self.k0 == Some(0) {
            return Err(Error::Config("k0 must be at least 1".into()));
        }
        if self.k == Some(0) {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.max_passes == 0 || self.max_epochs == 0 || self.max_iter == 0 || self.came_restarts == 0 {
            return Err(Error::Config("iteration caps must be at least 1".into()));
        }
        if self.variant.requires_k() && self.k.is_none() {
            return Err(Error::Config(format!("variant {} requires --k", self.variant)));
        }
        Ok(())
    }

    pub fn mgcpl_config(&self, seed: u64) -> MgcplConfig<f64> {
        MgcplConfig {
            eta: self.eta,
            k0: self.k0,
            seed,
            max_passes: self.max_passes,
            max_epochs: self.max_epochs,
            fixed_passes: false,
            literal_similarity: self.compat.literal_similarity,
            reseed: if self.compat.carry_members { Reseed::Carry } else { Reseed::Random },
            stop: if self.compat.partition_stop { StopRule::Partition } else { StopRule::ClusterCount },
            dynamics: Dynamics { exclude_self: !self.compat.include_self, ..Dynamics::default() },
        }
    }

    fn came_config(&self, k: usize, seed: u64, weighting: bool) -> CameConfig {
        CameConfig {
            k,
            seed,
            max_iter: self.max_iter,
            weighting,
            update_modes: !self.compat.frozen_modes,
            fixed_iterations: false,
            restarts: self.came_restarts,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub mgcpl_s: f64,
    pub came_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergence {
    /// Learner stopped by its stop rule (or its single epoch converged).
    pub mgcpl: Option<bool>,
    /// Aggregation partition stabilized before the iteration cap.
    pub came: Option<bool>,
}

/// Result of one seeded run of a variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleRun {
    pub seed: u64,
    pub labels: Vec<usize>,
    pub k: usize,
    pub kappa: Option<Vec<usize>>,
    pub levels: Option<Vec<Vec<usize>>>,
    pub theta: Option<Vec<f64>>,
    pub converged: Convergence,
    pub timings: StageTimings,
}

fn required_k(config: &RunConfig) -> Result<usize> {
    config.k.ok_or_else(|| Error::Config(format!("variant {} requires --k", config.variant)))
}

/// Runs one variant once with the given seed.
pub fn run_once(ds: &Dataset, config: &RunConfig, seed: u64) -> Result<SingleRun> {
    config.validate()?;
    let start = Instant::now();
    let mut run = SingleRun {
        seed,
        labels: Vec::new(),
        k: 0,
        kappa: None,
        levels: None,
        theta: None,
        converged: Convergence::default(),
        timings: StageTimings::default(),
    };
    match config.variant {
        Variant::Full | Variant::Mcdc3 | Variant::Mcdc4 => {
            let t = Instant::now();
            let mg = run_mgcpl(ds, &config.mgcpl_config(seed))?;
            run.timings.mgcpl_s = t.elapsed().as_secs_f64();
            run.converged.mgcpl = Some(mg.converged);
            run.kappa = Some(mg.kappa.clone());
            if config.variant == Variant::Mcdc3 {
                run.labels = mg.final_labels().to_vec();
                run.k = mg.final_k();
            } else {
                let k = config.k.unwrap_or(mg.final_k());
                let t = Instant::now();
                let res = run_came::<f64>(&mg.gamma(), &config.came_config(k, seed, config.variant == Variant::Full))?;
                run.timings.came_s = t.elapsed().as_secs_f64();
                run.converged.came = Some(res.converged);
                run.labels = res.labels;
                run.theta = Some(res.theta);
                run.k = k;
            }
            if config.emit_levels {
                run.levels = Some(mg.levels);
            }
        }
        Variant::Mcdc1 | Variant::Mcdc2 => {
            let k = required_k(config)?;
            let (k_initial, dynamics) = if config.variant == Variant::Mcdc2 {
                (
                    (k + 2).min(ds.n()),
                    Dynamics {
                        competition: true,
                        rival_penalty: false,
                        feature_weighting: false,
                        ..Dynamics::default()
                    },
                )
            } else {
                (
                    k,
                    Dynamics {
                        competition: false,
                        rival_penalty: false,
                        feature_weighting: false,
                        ..Dynamics::default()
                    },
                )
            };
            let base = config.mgcpl_config(seed);
            let mg_config =
                MgcplConfig { dynamics: Dynamics { exclude_self: base.dynamics.exclude_self, ..dynamics }, ..base };
            let t = Instant::now();
            let single = run_single_granularity(ds, k_initial, &mg_config)?;
            run.timings.mgcpl_s = t.elapsed().as_secs_f64();
            run.converged.mgcpl = Some(single.outcome.converged);
            run.labels = single.labels;
            run.k = single.k;
        }
        Variant::Kmodes => {
            let k = required_k(config)?;
            let t = Instant::now();
            let res = run_came::<f64>(&CodeMatrix::from_dataset(ds), &config.came_config(k, seed, false))?;
            run.timings.came_s = t.elapsed().as_secs_f64();
            run.converged.came = Some(res.converged);
            run.labels = res.labels;
            run.k = k;
        }
    }
    run.timings.total_s = start.elapsed().as_secs_f64();
    Ok(run)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexSummary {
    pub mean: Scores,
    pub std: Scores,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn summarize(scores: &[Scores]) -> IndexSummary {
    let col = |f: fn(&Scores) -> f64| mean_std(&scores.iter().map(f).collect::<Vec<_>>());
    let (acc, ari, ami, fm) = (col(|s| s.acc), col(|s| s.ari), col(|s| s.ami), col(|s| s.fm));
    IndexSummary {
        mean: Scores { acc: acc.0, ari: ari.0, ami: ami.0, fm: fm.0 },
        std: Scores { acc: acc.1, ari: ari.1, ami: ami.1, fm: fm.1 },
    }
}

/// JSON report of a `cluster` invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub config: RunConfig,
    pub n: usize,
    pub d: usize,
    /// Granularity ladder of the first run, for variants that learn one.
    pub kappa: Option<Vec<usize>>,
    pub sigma: Option<usize>,
    pub levels: Option<Vec<Vec<usize>>>,
    /// Final labels of the first run.
    pub labels: Vec<usize>,
    pub k: usize,
    pub theta: Option<Vec<f64>>,
    /// Present iff the data set carries ground-truth classes.
    pub indices: Option<IndexSummary>,
    pub per_run: Vec<RunSummary>,
    pub converged: Convergence,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub k: usize,
    pub kappa: Option<Vec<usize>>,
    pub scores: Option<Scores>,
    pub converged: Convergence,
}

/// Runs `repeats` independent seeds (`seed`, `seed + 1`, ...) in parallel and
/// aggregates them into a report.
pub fn run_cluster(ds: &Dataset, config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let runs: Vec<SingleRun> = (0..config.repeats as u64)
        .into_par_iter()
        .map(|r| run_once(ds, config, config.seed.wrapping_add(r)))
        .collect::<Result<_>>()?;
    let truth = ds.labels().map(|l| l.codes.as_slice());
    let scores: Option<Vec<Scores>> =
        truth.map(|t| runs.iter().map(|r| evaluate(&r.labels, t)).collect::<Result<_>>()).transpose()?;

    let per_run = runs
        .iter()
        .enumerate()
        .map(|(j, r)| RunSummary {
            seed: r.seed,
            k: r.k,
            kappa: r.kappa.clone(),
            scores: scores.as_ref().map(|s| s[j]),
            converged: r.converged,
        })
        .collect();
    let first = runs.into_iter().next().expect("at least one repeat");
    Ok(RunReport {
        schema: REPORT_SCHEMA.to_string(),
        config: config.clone(),
        n: ds.n(),
        d: ds.d(),
        sigma: first.kappa.as_ref().map(Vec::len),
        kappa: first.kappa,
        levels: first.levels,
        labels: first.labels,
        k: first.k,
        theta: first.theta,
        indices: scores.as_deref().map(summarize),
        per_run,
        converged: first.converged,
        timings: first.timings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchAxis {
    N,
    K,
    D,
}

impl FromStr for BenchAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(BenchAxis::N),
            "k" => Ok(BenchAxis::K),
            "d" => Ok(BenchAxis::D),
            _ => Err(Error::Config(format!("unknown bench axis `{s}` (expected n, k or d)"))),
        }
    }
}

/// Timing sweep along one axis with every other parameter held fixed.
///
/// The `n` and `d` axes time the full pipeline from a fixed `k0`, every
/// learning epoch running exactly `max_passes` passes. The `k` axis times
/// aggregation alone at a fixed iteration count. Either way every point
/// does the same number of sweeps over the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub axis: BenchAxis,
    pub grid: Vec<usize>,
    pub repeats: usize,
    pub n: usize,
    pub d: usize,
    pub k_true: usize,
    pub m: usize,
    pub purity: f64,
    pub k0: usize,
    pub k: usize,
    pub came_iterations: usize,
    /// Passes per learning epoch on the `n` and `d` axes, always run in full.
    pub max_passes: usize,
    /// Epoch cap on the `n` and `d` axes.
    pub max_epochs: usize,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(axis: BenchAxis, grid: Vec<usize>) -> Self {
        let (n, d) = match axis {
            BenchAxis::D => (20_000, 1000),
            _ => (200_000, 10),
        };
        Self {
            axis,
            grid,
            repeats: 3,
            n,
            d,
            k_true: 3,
            m: 5,
            purity: 0.9,
            k0: 20,
            k: 3,
            came_iterations: 10,
            max_passes: 10,
            max_epochs: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("empty grid".into()));
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("grid must be strictly increasing".into()));
        }
        if self.grid[0] == 0
            || self.repeats == 0
            || self.came_iterations == 0
            || self.max_passes == 0
            || self.max_epochs == 0
        {
            return Err(Error::Config("grid points, repeats and iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub point: usize,
    pub mean_s: f64,
    pub std_s: f64,
}

struct BenchPoint {
    ds: Dataset,
    n: usize,
    k: usize,
}

fn bench_point(cfg: &BenchConfig, point: usize) -> Result<BenchPoint> {
    let (n, d, k) = match cfg.axis {
        BenchAxis::N => (point, cfg.d, cfg.k),
        BenchAxis::D => (cfg.n, point, cfg.k),
        BenchAxis::K => (cfg.n, cfg.d, point),
    };
    let spec = SynthSpec { n, d, k_true: cfg.k_true, purity: cfg.purity, m: cfg.m, seed: cfg.seed };
    let (ds, _) = generate_synthetic(&spec)?;
    Ok(BenchPoint { ds, n, k })
}

fn time_run(cfg: &BenchConfig, p: &BenchPoint, seed: u64) -> Result<f64> {
    Ok(match cfg.axis {
        BenchAxis::N | BenchAxis::D => {
            let config = RunConfig {
                k0: Some(cfg.k0.min(p.n)),
                k: Some(p.k),
                seed,
                max_passes: cfg.max_passes,
                max_epochs: cfg.max_epochs,
                ..RunConfig::default()
            };
            let mg_config = MgcplConfig { fixed_passes: true, ..config.mgcpl_config(seed) };
            let t = Instant::now();
            let mg = run_mgcpl(&p.ds, &mg_config)?;
            run_came::<f64>(&mg.gamma(), &config.came_config(p.k, seed, true))?;
            t.elapsed().as_secs_f64()
        }
        BenchAxis::K => {
            let data = CodeMatrix::from_dataset(&p.ds);
            let came =
                CameConfig { max_iter: cfg.came_iterations, fixed_iterations: true, ..CameConfig::new(p.k, seed) };
            let t = Instant::now();
            run_came::<f64>(&data, &came)?;
            t.elapsed().as_secs_f64()
        }
    })
}

/// Runs the sweep on this thread and returns one row per grid point.
///
/// Every point is first run once untimed. The timed repeats then walk the
/// grid back and forth, so neighbouring points are always measured close
/// together in time.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let points = cfg.grid.iter().map(|&x| bench_point(cfg, x)).collect::<Result<Vec<_>>>()?;
    for p in &points {
        time_run(cfg, p, cfg.seed)?;
    }
    let mut times = vec![Vec::with_capacity(cfg.repeats); points.len()];
    for r in 0..cfg.repeats {
        let seed = cfg.seed.wrapping_add(r as u64);
        let order: Vec<usize> =
            if r % 2 == 0 { (0..points.len()).collect() } else { (0..points.len()).rev().collect() };
        for j in order {
            times[j].push(time_run(cfg, &points[j], seed)?);
        }
    }
    Ok(cfg
        .grid
        .iter()
        .zip(&times)
        .map(|(&point, t)| {
            let (mean_s, std_s) = mean_std(t);
            BenchRow { point, mean_s, std_s }
        })
        .collect())
}

pub fn write_bench_csv<W: Write>(mut w: W, axis: BenchAxis, rows: &[BenchRow]) -> std::io::Result<()> {
    let name = match axis {
        BenchAxis::N => "n",
        BenchAxis::K => "k",
        BenchAxis::D => "d",
    };
    writeln!(w, "{name},mean_time_s,std_time_s")?;
    for r in rows {
        writeln!(w, "{},{:.6},{:.6}", r.point, r.mean_s, r.std_s)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(purity: f64, seed: u64) -> (Dataset, Vec<usize>) {
        generate_synthetic(&SynthSpec { n: 120, d: 6, k_true: 3, purity, m: 4, seed }).unwrap()
    }

    #[test]
    fn variant_names_parse() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("mcdc5".parse::<Variant>().is_err());
    }

    #[test]
    fn variants_needing_k_are_rejected_without_it() {
        let (ds, _) = synth(0.9, 1);
        for v in [Variant::Mcdc1, Variant::Mcdc2, Variant::Kmodes] {
            let cfg = RunConfig { variant: v, ..RunConfig::default() };
            assert!(matches!(run_cluster(&ds, &cfg), Err(Error::Config(_))), "{v}");
        }
    }

    #[test]
    fn kmodes_with_one_cluster_is_all_zero() {
        let (ds, _) = synth(0.8, 2);
        let cfg = RunConfig { variant: Variant::Kmodes, k: Some(1), ..RunConfig::default() };
        let report = run_cluster(&ds, &cfg).unwrap();
        assert!(report.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn every_variant_produces_a_full_labeling() {
        let (ds, truth) = synth(0.95, 3);
        let ds = ds.with_labels(crate::data::ClassLabels { codes: truth, names: vec![] }).unwrap();
        for v in Variant::ALL {
            let cfg = RunConfig { variant: v, k: Some(3), k0: Some(10), ..RunConfig::default() };
            let report = run_cluster(&ds, &cfg).unwrap();
            assert_eq!(report.labels.len(), ds.n(), "{v}");
            assert!(report.indices.is_some());
            assert_eq!(report.schema, REPORT_SCHEMA);
        }
    }

    #[test]
    fn repeats_summarize_indices() {
        let (ds, truth) = synth(0.9, 4);
        let ds = ds.with_labels(crate::data::ClassLabels { codes: truth, names: vec![] }).unwrap();
        let cfg = RunConfig { repeats: 4, k0: Some(10), ..RunConfig::default() };
        let report = run_cluster(&ds, &cfg).unwrap();
        assert_eq!(report.per_run.len(), 4);
        let seeds: Vec<u64> = report.per_run.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![0, 1, 2, 3]);
        let idx = report.indices.unwrap();
        let mean_acc = report.per_run.iter().map(|r| r.scores.unwrap().acc).sum::<f64>() / 4.0;
        assert!((idx.mean.acc - mean_acc).abs() < 1e-12);
    }

    #[test]
    fn no_indices_without_truth() {
        let (ds, _) = synth(0.9, 5);
        let report = run_cluster(&ds, &RunConfig { k0: Some(10), ..RunConfig::default() }).unwrap();
        assert!(report.indices.is_none());
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["schema"], "mcdc-report/1");
        assert!(json["indices"].is_null());
    }

    #[test]
    fn bench_grid_shape() {
        let mut cfg = BenchConfig::new(BenchAxis::N, vec![200, 400, 800]);
        cfg.repeats = 1;
        cfg.k0 = 5;
        let rows = run_bench(&cfg).unwrap();
        assert_eq!(rows.iter().map(|r| r.point).collect::<Vec<_>>(), vec![200, 400, 800]);
        let mut buf = Vec::new();
        write_bench_csv(&mut buf, cfg.axis, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }

    #[test]
    fn bench_rejects_unsorted_grid() {
        let cfg = BenchConfig::new(BenchAxis::K, vec![4, 2]);
        assert!(run_bench(&cfg).is_err());
    }
}
