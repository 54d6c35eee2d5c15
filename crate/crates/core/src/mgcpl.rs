//! Multi-granular competitive penalization learning.
//!
//! Each epoch starts from a set of seed clusters and visits every object in
//! data-set order. The best-scoring cluster (the winner) absorbs the object
//! and is awarded; the runner-up (the rival) is penalized in proportion to
//! how strongly it contested the object. Penalized clusters lose weight,
//! stop winning and eventually empty out. Once an epoch's assignment is
//! stable the empty clusters are dropped, the competition statistics are
//! reset, and the survivors compete again at a coarser granularity. The
//! sequence of surviving cluster counts is the granularity ladder.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::came::CodeMatrix;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::{argmax_first, Scalar};
use crate::similarity::{
    lane_sum, update_feature_weights, weighted_similarity_unchecked, ClusterModel, FeatureWeights,
};
use crate::MISSING;

/// Sigmoid cluster weight `1 / (1 + e^(−10δ + 5))`.
pub fn cluster_weight<T: Scalar>(delta: T) -> T {
    T::one() / (T::one() + (T::lit(5.0) - T::lit(10.0) * delta).exp())
}

/// How an epoch after the first is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reseed {
    /// Survivors keep their members; only the statistics are reset.
    Carry,
    /// Fresh singleton seeds drawn at random, one per surviving cluster.
    Random,
}

/// When the outer epoch loop terminates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// An epoch ends with as many clusters as it started with.
    ClusterCount,
    /// An epoch reproduces the previous epoch's partition.
    Partition,
}

/// Which parts of the learning dynamics are active. The defaults give the
/// full learner; the others exist for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dynamics {
    /// Weight clusters by `(1 − ρ)·u` and update the award accumulators.
    pub competition: bool,
    /// Penalize the rival of every winner.
    pub rival_penalty: bool,
    /// Learn per-cluster feature weights after each pass.
    pub feature_weighting: bool,
    /// Score an object against its own cluster with the object taken out.
    pub exclude_self: bool,
}

impl Default for Dynamics {
    fn default() -> Self {
        Self { competition: true, rival_penalty: true, feature_weighting: true, exclude_self: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgcplConfig<T> {
    pub eta: T,
    /// Initial number of clusters; `⌊√n⌋` when `None`.
    pub k0: Option<usize>,
    pub seed: u64,
    pub max_passes: usize,
    pub max_epochs: usize,
    /// Run every epoch for exactly `max_passes` passes even once stable.
    pub fixed_passes: bool,
    /// Keep the `1/d` prefactor on weighted similarity. Only the size of the
    /// rival penalty changes; all argmax decisions are identical.
    pub literal_similarity: bool,
    pub reseed: Reseed,
    pub stop: StopRule,
    pub dynamics: Dynamics,
}

impl<T: Scalar> Default for MgcplConfig<T> {
    fn default() -> Self {
        Self {
            eta: T::lit(0.03),
            k0: None,
            seed: 0,
            max_passes: 100,
            max_epochs: 50,
            fixed_passes: false,
            literal_similarity: false,
            reseed: Reseed::Random,
            stop: StopRule::ClusterCount,
            dynamics: Dynamics::default(),
        }
    }
}

/// `⌊√n⌋`, at least 1.
pub fn default_k0(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).max(1)
}

/// Mutable learning statistics of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState<T> {
    wins: Vec<u64>,
    total_wins: u64,
    delta: Vec<T>,
    u: Vec<T>,
    weights: FeatureWeights<T>,
    eta: T,
    similarity_scale: T,
    dynamics: Dynamics,
    assignment: Vec<Option<usize>>,
    epoch: usize,
}

impl<T: Scalar> LearnerState<T> {
    /// Fresh statistics for `k` cluster slots: no wins, `δ = 1`, uniform
    /// feature weights.
    pub fn new(k: usize, d: usize, eta: T, assignment: Vec<Option<usize>>) -> Self {
        let delta = vec![T::one(); k];
        let u = delta.iter().map(|&x| cluster_weight(x)).collect();
        Self {
            wins: vec![0; k],
            total_wins: 0,
            delta,
            u,
            weights: FeatureWeights::uniform(k, d),
            eta,
            similarity_scale: T::one(),
            dynamics: Dynamics::default(),
            assignment,
            epoch: 0,
        }
    }

    pub fn with_dynamics(mut self, dynamics: Dynamics) -> Self {
        self.dynamics = dynamics;
        self
    }

    /// Multiplies every similarity by `1/d` (the literal prefactor).
    pub fn with_literal_similarity(mut self, literal: bool) -> Self {
        let d = self.weights.d();
        self.similarity_scale = if literal { T::one() / T::from_count(d) } else { T::one() };
        self
    }

    pub fn k(&self) -> usize {
        self.delta.len()
    }

    pub fn wins(&self, l: usize) -> u64 {
        self.wins[l]
    }

    pub fn delta(&self, l: usize) -> T {
        self.delta[l]
    }

    pub fn set_delta(&mut self, l: usize, value: T) {
        self.delta[l] = value;
        self.u[l] = cluster_weight(value);
    }

    /// Sigmoid weight `u_l` derived from `δ_l`.
    pub fn cluster_weight(&self, l: usize) -> T {
        self.u[l]
    }

    /// Share of wins since the epoch began; 0 for everyone before the first win.
    pub fn winning_ratio(&self, l: usize) -> T {
        if self.total_wins == 0 {
            T::zero()
        } else {
            T::from_f64(self.wins[l] as f64 / self.total_wins as f64).unwrap()
        }
    }

    pub fn weights(&self) -> &FeatureWeights<T> {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: FeatureWeights<T>) {
        assert_eq!(weights.k(), self.k());
        self.weights = weights;
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Record a win for `l` without touching `δ`.
    pub fn record_win(&mut self, l: usize) {
        self.wins[l] += 1;
        self.total_wins += 1;
    }

    /// Similarity of `x` to live cluster `l` under the current feature weights.
    pub fn similarity(&self, x: &[u32], model: &ClusterModel, l: usize) -> T {
        weighted_similarity_unchecked(x, model.table(l), self.weights.cluster(l)) * self.similarity_scale
    }

    /// Competition score `(1 − ρ_l)·u_l·s(x, C_l)`; the bare similarity when
    /// competition is disabled.
    pub fn score(&self, x: &[u32], model: &ClusterModel, l: usize) -> T {
        self.compete(l, self.similarity(x, model, l))
    }

    fn compete(&self, l: usize, s: T) -> T {
        if self.dynamics.competition {
            (T::one() - self.winning_ratio(l)) * self.u[l] * s
        } else {
            s
        }
    }
}

/// Best live cluster for `x`; lowest id on ties.
pub fn select_winner<T: Scalar>(x: &[u32], state: &LearnerState<T>, model: &ClusterModel) -> Result<usize> {
    best_two(x, state, model).map(|(v, _)| v).ok_or(Error::NoLiveClusters)
}

/// Best live cluster other than the winner `v`; `None` with a single live cluster.
pub fn select_rival<T: Scalar>(x: &[u32], v: usize, state: &LearnerState<T>, model: &ClusterModel) -> Option<usize> {
    argmax_first(model.live_ids().filter(|&l| l != v).map(|l| (l, state.score(x, model, l))))
}

/// Winner and rival in one scan.
fn best_two<T: Scalar>(x: &[u32], state: &LearnerState<T>, model: &ClusterModel) -> Option<(usize, Option<usize>)> {
    top_two(model.live_ids().map(|l| (l, state.score(x, model, l))))
}

fn top_two<T: Scalar>(scores: impl Iterator<Item = (usize, T)>) -> Option<(usize, Option<usize>)> {
    let mut first: Option<(usize, T)> = None;
    let mut second: Option<(usize, T)> = None;
    for (l, s) in scores {
        match first {
            Some((_, b)) if !(s > b) => match second {
                Some((_, c)) if !(s > c) => {}
                _ => second = Some((l, s)),
            },
            _ => {
                second = first;
                first = Some((l, s));
            }
        }
    }
    first.map(|(v, _)| (v, second.map(|(h, _)| h)))
}

const NO_CELL: u32 = u32::MAX;

/// Products `ω_lr · count` stored cell-major (`cell · k + l`), plus every
/// row's flat cell indices, so one sweep over a row's cells scores all
/// clusters at once. Entries touched by a move must be refreshed.
struct Kernel<T> {
    k: usize,
    d: usize,
    cells: Vec<u32>,
    weighted: Vec<T>,
    lanes: Vec<T>,
    sums: Vec<T>,
}

impl<T: Scalar> Kernel<T> {
    fn new(ds: &Dataset, model: &ClusterModel, weights: &FeatureWeights<T>) -> Self {
        let (k, d) = (model.k(), ds.d());
        let offsets = model.table(0).offsets().to_vec();
        let cells = ds
            .values()
            .iter()
            .enumerate()
            .map(|(idx, &c)| if c == MISSING { NO_CELL } else { (offsets[idx % d] + c as usize) as u32 })
            .collect();
        let mut kernel = Self {
            k,
            d,
            cells,
            weighted: vec![T::zero(); offsets[d] * k],
            lanes: vec![T::zero(); 4 * k],
            sums: vec![T::zero(); k],
        };
        kernel.rebuild(model, weights);
        kernel
    }

    fn rebuild(&mut self, model: &ClusterModel, weights: &FeatureWeights<T>) {
        for l in 0..self.k {
            let table = model.table(l);
            let offsets = table.offsets();
            for r in 0..self.d {
                let w = weights.omega(r, l);
                for cell in offsets[r]..offsets[r + 1] {
                    self.weighted[cell * self.k + l] = w * T::from_count(table.count_at(cell) as usize);
                }
            }
        }
    }

    fn refresh(&mut self, l: usize, i: usize, model: &ClusterModel, weights: &FeatureWeights<T>) {
        let table = model.table(l);
        for (r, &cell) in self.cells[i * self.d..(i + 1) * self.d].iter().enumerate() {
            if cell != NO_CELL {
                let cell = cell as usize;
                self.weighted[cell * self.k + l] = weights.omega(r, l) * T::from_count(table.count_at(cell) as usize);
            }
        }
    }

    /// Unnormalized weighted sums of row `i` against every slot, added in
    /// the same order as [`lane_sum`].
    fn sweep(&mut self, i: usize) {
        let (k, d) = (self.k, self.d);
        let row = &self.cells[i * d..(i + 1) * d];
        self.lanes.fill(T::zero());
        let split = d - d % 4;
        for (r, &cell) in row[..split].iter().enumerate() {
            if cell != NO_CELL {
                let src = &self.weighted[cell as usize * k..(cell as usize + 1) * k];
                let lane = &mut self.lanes[(r % 4) * k..(r % 4 + 1) * k];
                for (a, &w) in lane.iter_mut().zip(src) {
                    *a += w;
                }
            }
        }
        for l in 0..k {
            let acc = |j: usize| self.lanes[j * k + l];
            self.sums[l] = (acc(0) + acc(1)) + (acc(2) + acc(3));
        }
        for &cell in &row[split..] {
            if cell != NO_CELL {
                for (s, &w) in self.sums.iter_mut().zip(&self.weighted[cell as usize * k..(cell as usize + 1) * k]) {
                    *s += w;
                }
            }
        }
    }

    /// Similarity of row `i` to slot `l` from the last sweep.
    fn swept(&self, x: &[u32], model: &ClusterModel, state: &LearnerState<T>, l: usize) -> T {
        let table = model.table(l);
        if !table.is_complete() {
            return state.similarity(x, model, l);
        }
        if table.is_empty() {
            return T::zero();
        }
        self.sums[l] / T::from_count(table.member_count()) * state.similarity_scale
    }

    fn similarity(&self, x: &[u32], i: usize, model: &ClusterModel, state: &LearnerState<T>, l: usize) -> T {
        let table = model.table(l);
        if !table.is_complete() {
            return state.similarity(x, model, l);
        }
        if table.is_empty() {
            return T::zero();
        }
        let row = &self.cells[i * self.d..(i + 1) * self.d];
        let s =
            lane_sum(
                self.d,
                |r| {
                    if row[r] == NO_CELL {
                        T::zero()
                    } else {
                        self.weighted[row[r] as usize * self.k + l]
                    }
                },
            );
        s / T::from_count(table.member_count()) * state.similarity_scale
    }
}

/// Awards the winner (`g_v += 1`, `δ_v += η`) and, if present, penalizes the
/// rival by `η·s_h`, where `s_h` is the rival's similarity to the object.
pub fn apply_award_penalty<T: Scalar>(state: &mut LearnerState<T>, v: usize, rival: Option<(usize, T)>) {
    state.record_win(v);
    let eta = state.eta;
    state.set_delta(v, state.delta[v] + eta);
    if let Some((h, s_h)) = rival {
        state.set_delta(h, state.delta[h] - eta * s_h);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochOutcome {
    /// A full pass left every assignment unchanged.
    pub converged: bool,
    pub passes: usize,
    /// Non-empty clusters at the end of the epoch.
    pub live: usize,
}

/// Repeats online passes over the data in order until a pass changes no
/// assignment or `max_passes` is reached. Feature weights are refreshed
/// after every pass.
pub fn run_epoch<T: Scalar>(
    ds: &Dataset,
    state: &mut LearnerState<T>,
    model: &mut ClusterModel,
    max_passes: usize,
) -> Result<EpochOutcome> {
    run_passes(ds, state, model, max_passes, true)
}

fn run_passes<T: Scalar>(
    ds: &Dataset,
    state: &mut LearnerState<T>,
    model: &mut ClusterModel,
    max_passes: usize,
    stop_when_stable: bool,
) -> Result<EpochOutcome> {
    if model.live_count() == 0 {
        return Err(Error::NoLiveClusters);
    }
    let mut kernel = Kernel::new(ds, model, &state.weights);
    let mut passes = 0;
    let mut converged = false;
    while passes < max_passes {
        passes += 1;
        let mut changed = false;
        for i in 0..ds.n() {
            let x = ds.row(i);
            let current = state.assignment[i];
            let detached = match current {
                Some(c)
                    if state.dynamics.exclude_self && (model.table(c).member_count() > 1 || model.live_count() > 1) =>
                {
                    model.remove(c, x)?;
                    kernel.refresh(c, i, model, &state.weights);
                    true
                }
                _ => false,
            };
            kernel.sweep(i);
            let scores = model.live_ids().map(|l| (l, state.compete(l, kernel.swept(x, model, state, l))));
            let (v, h) = top_two(scores).ok_or(Error::NoLiveClusters)?;
            if detached {
                model.add(v, x);
                kernel.refresh(v, i, model, &state.weights);
                state.assignment[i] = Some(v);
                changed |= current != Some(v);
            } else if current != Some(v) {
                if let Some(c) = current {
                    model.remove(c, x)?;
                    kernel.refresh(c, i, model, &state.weights);
                }
                model.add(v, x);
                kernel.refresh(v, i, model, &state.weights);
                state.assignment[i] = Some(v);
                changed = true;
            }
            if state.dynamics.competition {
                let rival = if state.dynamics.rival_penalty {
                    // The rival may have been emptied by the move above.
                    h.filter(|&h| model.is_live(h)).map(|h| (h, kernel.similarity(x, i, model, state, h)))
                } else {
                    None
                };
                apply_award_penalty(state, v, rival);
            }
        }
        if state.dynamics.feature_weighting {
            state.weights = update_feature_weights(model);
            kernel.rebuild(model, &state.weights);
        }
        if !changed {
            converged = true;
            if stop_when_stable {
                break;
            }
        }
    }
    Ok(EpochOutcome { converged, passes, live: model.live_count() })
}

/// `Σ_i u_{q(i)} · s(x_i, C_{q(i)})` over assigned objects.
pub fn overall_similarity<T: Scalar>(ds: &Dataset, state: &LearnerState<T>, model: &ClusterModel) -> T {
    state
        .assignment
        .iter()
        .enumerate()
        .filter_map(|(i, a)| a.map(|l| state.cluster_weight(l) * state.similarity(ds.row(i), model, l)))
        .sum()
}

/// Seeds `k` singleton clusters from distinct random objects.
pub fn seed_clusters(ds: &Dataset, k: usize, rng: &mut ChaCha8Rng) -> Result<(ClusterModel, Vec<Option<usize>>)> {
    if k == 0 || k > ds.n() {
        return Err(Error::InvalidArgument(format!("cannot seed {k} clusters from {} objects", ds.n())));
    }
    let mut model = ClusterModel::new(&ds.cardinalities(), k);
    let mut assignment = vec![None; ds.n()];
    for (l, i) in sample(rng, ds.n(), k).into_iter().enumerate() {
        model.add(l, ds.row(i));
        assignment[i] = Some(l);
    }
    Ok((model, assignment))
}

/// Converged partitions at every granularity, finest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiGranularResult<T> {
    /// Strictly decreasing cluster counts.
    pub kappa: Vec<usize>,
    /// One label vector per level, level `j` using labels `0..kappa[j]`.
    pub levels: Vec<Vec<usize>>,
    /// Converged feature weights per level, one row per cluster.
    pub weights: Vec<Vec<Vec<T>>>,
    /// Outcome of every epoch run, including the final confirming one.
    pub epochs: Vec<EpochOutcome>,
    /// Terminated by the stop rule rather than the epoch cap.
    pub converged: bool,
}

impl<T> MultiGranularResult<T> {
    pub fn sigma(&self) -> usize {
        self.kappa.len()
    }

    /// Coarsest learned cluster count `k_σ`.
    pub fn final_k(&self) -> usize {
        *self.kappa.last().expect("at least one level")
    }

    pub fn final_labels(&self) -> &[usize] {
        self.levels.last().expect("at least one level")
    }

    /// The `n × σ` encoding whose column `j` holds level `j`'s labels.
    pub fn gamma(&self) -> CodeMatrix {
        let n = self.levels[0].len();
        let sigma = self.levels.len();
        let mut codes = Vec::with_capacity(n * sigma);
        for i in 0..n {
            codes.extend(self.levels.iter().map(|y| y[i] as u32));
        }
        CodeMatrix::new(n, sigma, codes, self.kappa.clone()).expect("levels are well formed")
    }
}

/// Drops empty slots and renumbers survivors in slot order.
fn compact<T: Scalar>(
    ds: &Dataset,
    state: &LearnerState<T>,
    model: &ClusterModel,
) -> (Vec<usize>, ClusterModel, FeatureWeights<T>) {
    let survivors: Vec<usize> = model.live_ids().collect();
    let mut remap = vec![usize::MAX; model.k()];
    for (new, &old) in survivors.iter().enumerate() {
        remap[old] = new;
    }
    let labels: Vec<usize> =
        state.assignment.iter().map(|a| remap[a.expect("every object assigned after a pass")]).collect();
    let assignment: Vec<Option<usize>> = labels.iter().map(|&l| Some(l)).collect();
    let model = ClusterModel::from_assignment(&ds.cardinalities(), survivors.len(), ds.rows(), &assignment);
    (labels, model, state.weights.select(&survivors))
}

/// Relabels a partition by order of first appearance.
pub(crate) fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

fn fresh_state<T: Scalar>(
    k: usize,
    d: usize,
    config: &MgcplConfig<T>,
    assignment: Vec<Option<usize>>,
    epoch: usize,
) -> LearnerState<T> {
    let mut s = LearnerState::new(k, d, config.eta, assignment)
        .with_dynamics(config.dynamics)
        .with_literal_similarity(config.literal_similarity);
    s.epoch = epoch;
    s
}

fn validate<T: Scalar>(ds: &Dataset, config: &MgcplConfig<T>, k0: usize) -> Result<()> {
    if k0 < 1 {
        return Err(Error::InvalidArgument("k0 must be at least 1".into()));
    }
    if k0 > ds.n() {
        return Err(Error::InvalidArgument(format!("k0 ({k0}) exceeds the number of objects ({})", ds.n())));
    }
    if !(config.eta > T::zero()) || !config.eta.is_finite() {
        return Err(Error::InvalidArgument(format!("learning rate must be positive, got {}", config.eta)));
    }
    if config.max_passes == 0 || config.max_epochs == 0 {
        return Err(Error::InvalidArgument("pass and epoch caps must be at least 1".into()));
    }
    Ok(())
}

/// Runs epochs from `k0` seeds until the stop rule fires, recording every
/// distinct converged cluster count.
pub fn run_mgcpl<T: Scalar>(ds: &Dataset, config: &MgcplConfig<T>) -> Result<MultiGranularResult<T>> {
    let k0 = config.k0.unwrap_or_else(|| default_k0(ds.n()));
    validate(ds, config, k0)?;
    let d = ds.d();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mut model, assignment) = seed_clusters(ds, k0, &mut rng)?;
    let mut state = fresh_state(k0, d, config, assignment, 0);

    let mut result = MultiGranularResult {
        kappa: Vec::new(),
        levels: Vec::new(),
        weights: Vec::new(),
        epochs: Vec::new(),
        converged: false,
    };
    let mut k_old = k0;
    let mut previous: Option<Vec<usize>> = None;

    for epoch in 0..config.max_epochs {
        let outcome = run_passes(ds, &mut state, &mut model, config.max_passes, !config.fixed_passes)?;
        result.epochs.push(outcome);
        let (labels, compacted, weights) = compact(ds, &state, &model);
        let k_new = compacted.k();

        let stop = match config.stop {
            StopRule::ClusterCount => k_new == k_old,
            StopRule::Partition => previous.as_ref().is_some_and(|p| canonical(p) == canonical(&labels)),
        };
        let rows = weights.as_rows();
        if result.kappa.last() == Some(&k_new) {
            *result.levels.last_mut().unwrap() = labels.clone();
            *result.weights.last_mut().unwrap() = rows;
        } else {
            result.kappa.push(k_new);
            result.levels.push(labels.clone());
            result.weights.push(rows);
        }
        if stop {
            result.converged = true;
            break;
        }
        k_old = k_new;

        let (next_model, next_assignment) = match config.reseed {
            Reseed::Carry => (compacted, labels.iter().map(|&l| Some(l)).collect()),
            Reseed::Random => seed_clusters(ds, k_new, &mut rng)?,
        };
        model = next_model;
        state = fresh_state(k_new, d, config, next_assignment, epoch + 1);
        previous = Some(labels);
    }
    Ok(result)
}

/// Labels of a single competitive-learning epoch started from `k_initial`
/// random seeds, renumbered `0..k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleGranularity {
    pub labels: Vec<usize>,
    pub k: usize,
    pub outcome: EpochOutcome,
}

/// One epoch of competitive learning without the granularity ladder.
pub fn run_single_granularity<T: Scalar>(
    ds: &Dataset,
    k_initial: usize,
    config: &MgcplConfig<T>,
) -> Result<SingleGranularity> {
    validate(ds, config, k_initial)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mut model, assignment) = seed_clusters(ds, k_initial, &mut rng)?;
    let mut state = fresh_state(k_initial, ds.d(), config, assignment, 0);
    let outcome = run_epoch(ds, &mut state, &mut model, config.max_passes)?;
    let (labels, compacted, _) = compact(ds, &state, &model);
    Ok(SingleGranularity { labels, k: compacted.k(), outcome })
}
