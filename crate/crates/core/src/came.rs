//! Weighted k-modes aggregation over a label-code matrix.
//!
//! Fed the multi-granular encoding (one column per granularity level), this
//! fuses the levels into a final partition while learning how much each
//! level matters. With weighting switched off and the raw data matrix as
//! input it is plain k-modes.

use rand::seq::index::sample;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, MISSING};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const UNASSIGNED: usize = usize::MAX;

/// Dense `n × cols` matrix of codes, column `r` using codes `0..cardinality(r)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMatrix {
    n: usize,
    cols: usize,
    codes: Vec<u32>,
    cardinalities: Vec<usize>,
}

impl CodeMatrix {
    pub fn new(n: usize, cols: usize, codes: Vec<u32>, cardinalities: Vec<usize>) -> Result<Self> {
        if n == 0 || cols == 0 {
            return Err(Error::EmptyDataset("code matrix needs at least one row and column".into()));
        }
        if codes.len() != n * cols {
            return Err(Error::LengthMismatch { left: codes.len(), right: n * cols });
        }
        if cardinalities.len() != cols {
            return Err(Error::LengthMismatch { left: cardinalities.len(), right: cols });
        }
        if let Some((idx, c)) = codes.iter().enumerate().find(|(idx, &c)| c as usize >= cardinalities[idx % cols]) {
            return Err(Error::InvalidArgument(format!("code {c} out of range in column {}", idx % cols)));
        }
        Ok(Self { n, cols, codes, cardinalities })
    }

    /// Raw data as codes; a missing cell becomes the extra code `m_r`.
    pub fn from_dataset(ds: &Dataset) -> Self {
        let cards: Vec<usize> = ds.cardinalities();
        let has_missing: Vec<bool> = (0..ds.d()).map(|r| ds.rows().any(|x| x[r] == MISSING)).collect();
        let codes = ds
            .values()
            .iter()
            .enumerate()
            .map(|(idx, &c)| if c == MISSING { cards[idx % ds.d()] as u32 } else { c })
            .collect();
        let cardinalities = cards.iter().zip(&has_missing).map(|(&m, &h)| m + usize::from(h)).collect();
        Self { n: ds.n(), cols: ds.d(), codes, cardinalities }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.codes[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.codes.chunks_exact(self.cols)
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    /// Indices of the first occurrence of every distinct row, in row order.
    pub fn distinct_rows(&self) -> Vec<usize> {
        let mut seen = FxHashSet::default();
        (0..self.n).filter(|&i| seen.insert(self.row(i))).collect()
    }
}

/// `Σ_r Θ_r · [row_r ≠ mode_r]`.
pub fn weighted_distance<T: Scalar>(row: &[u32], mode: &[u32], theta: &[T]) -> Result<T> {
    if row.len() != mode.len() {
        return Err(Error::LengthMismatch { left: row.len(), right: mode.len() });
    }
    if row.len() != theta.len() {
        return Err(Error::LengthMismatch { left: row.len(), right: theta.len() });
    }
    Ok(distance(row, mode, theta))
}

#[inline]
fn distance<T: Scalar>(row: &[u32], mode: &[u32], theta: &[T]) -> T {
    let mut s = T::zero();
    for ((&a, &b), &w) in row.iter().zip(mode).zip(theta) {
        if a != b {
            s += w;
        }
    }
    s
}

/// Modes, weights and partition of a weighted k-modes run.
#[derive(Debug, Clone, PartialEq)]
pub struct CameState<T> {
    k: usize,
    cols: usize,
    theta: Vec<T>,
    modes: Vec<u32>,
    assignment: Vec<usize>,
    similarity_mass: Vec<T>,
    iterations: usize,
    // code counts per cluster, block `l` holding column `r` at `offsets[r]..offsets[r + 1]`
    offsets: Vec<usize>,
    tally: Vec<u32>,
    sizes: Vec<usize>,
    // objective under the current modes and weights, set by assignment
    cost: Option<T>,
}

impl<T: Scalar> CameState<T> {
    fn empty(data: &CodeMatrix, modes: Vec<u32>, theta: Vec<T>) -> Self {
        let cols = data.cols();
        let k = modes.len() / cols;
        let mut offsets = Vec::with_capacity(cols + 1);
        offsets.push(0usize);
        for &m in data.cardinalities() {
            offsets.push(offsets[offsets.len() - 1] + m);
        }
        Self {
            k,
            cols,
            theta,
            modes,
            assignment: vec![UNASSIGNED; data.n()],
            similarity_mass: vec![T::zero(); cols],
            iterations: 0,
            tally: vec![0; k * offsets[cols]],
            offsets,
            sizes: vec![0; k],
            cost: None,
        }
    }

    /// Uniform weights, modes copied from the given rows, nobody assigned.
    pub fn from_seeds(data: &CodeMatrix, seeds: &[usize]) -> Self {
        let cols = data.cols();
        let modes = seeds.iter().flat_map(|&i| data.row(i).iter().copied()).collect();
        Self::empty(data, modes, vec![T::one() / T::from_count(cols); cols])
    }

    /// State with explicit modes and weights, used to evaluate arbitrary
    /// configurations.
    pub fn with_modes(data: &CodeMatrix, modes: Vec<Vec<u32>>, theta: Vec<T>) -> Result<Self> {
        let cols = data.cols();
        if theta.len() != cols || modes.iter().any(|m| m.len() != cols) || modes.is_empty() {
            return Err(Error::InvalidArgument("mode or weight width does not match data".into()));
        }
        if modes.iter().any(|m| m.iter().zip(data.cardinalities()).any(|(&z, &c)| z as usize >= c)) {
            return Err(Error::InvalidArgument("mode code out of range".into()));
        }
        Ok(Self::empty(data, modes.concat(), theta))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn mode(&self, l: usize) -> &[u32] {
        &self.modes[l * self.cols..(l + 1) * self.cols]
    }

    pub fn modes(&self) -> Vec<Vec<u32>> {
        self.modes.chunks(self.cols).map(<[u32]>::to_vec).collect()
    }

    /// Cluster of every object; `None` before the first assignment.
    pub fn assignment(&self) -> Vec<Option<usize>> {
        self.assignment.iter().map(|&a| (a != UNASSIGNED).then_some(a)).collect()
    }

    pub fn set_assignment(&mut self, data: &CodeMatrix, labels: &[usize]) -> Result<()> {
        if labels.len() != self.assignment.len() {
            return Err(Error::LengthMismatch { left: labels.len(), right: self.assignment.len() });
        }
        if labels.iter().any(|&l| l >= self.k) {
            return Err(Error::InvalidArgument("label out of range".into()));
        }
        self.tally.fill(0);
        self.sizes.fill(0);
        self.assignment.fill(UNASSIGNED);
        for (i, &l) in labels.iter().enumerate() {
            self.relocate(data.row(i), i, l);
        }
        self.cost = None;
        Ok(())
    }

    /// Per-column match counts from the last weight update.
    pub fn similarity_mass(&self) -> &[T] {
        &self.similarity_mass
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn nearest(&self, row: &[u32]) -> (usize, T) {
        let mut best = 0;
        let mut best_d = distance(row, self.mode(0), &self.theta);
        for l in 1..self.k {
            let d = distance(row, self.mode(l), &self.theta);
            if d < best_d {
                best = l;
                best_d = d;
            }
        }
        (best, best_d)
    }

    fn relocate(&mut self, row: &[u32], i: usize, to: usize) {
        let width = self.offsets[self.cols];
        let from = self.assignment[i];
        if from != UNASSIGNED {
            let block = &mut self.tally[from * width..(from + 1) * width];
            for (&off, &c) in self.offsets.iter().zip(row) {
                block[off + c as usize] -= 1;
            }
            self.sizes[from] -= 1;
        }
        let block = &mut self.tally[to * width..(to + 1) * width];
        for (&off, &c) in self.offsets.iter().zip(row) {
            block[off + c as usize] += 1;
        }
        self.sizes[to] += 1;
        self.assignment[i] = to;
    }
}

/// Moves every object to its nearest mode (lowest id on ties). Returns
/// whether any assignment changed.
pub fn assign_objects<T: Scalar>(data: &CodeMatrix, state: &mut CameState<T>) -> bool {
    let mut changed = false;
    let mut cost = T::zero();
    for (i, row) in data.rows().enumerate() {
        let (l, d) = state.nearest(row);
        cost += d;
        if state.assignment[i] != l {
            state.relocate(row, i, l);
            changed = true;
        }
    }
    state.cost = Some(cost);
    changed
}

/// Sets every mode to the per-column majority code of its members (smallest
/// code on ties). An empty cluster first takes over the object that fits
/// its own cluster worst, drawn from clusters with more than one member.
pub fn update_modes<T: Scalar>(data: &CodeMatrix, state: &mut CameState<T>) {
    state.cost = None;
    for l in 0..state.k {
        if state.sizes[l] != 0 {
            continue;
        }
        let mut worst: Option<(usize, T)> = None;
        for (i, row) in data.rows().enumerate() {
            let a = state.assignment[i];
            if a == UNASSIGNED || state.sizes[a] < 2 {
                continue;
            }
            let d = distance(row, state.mode(a), &state.theta);
            if worst.is_none_or(|(_, w)| d > w) {
                worst = Some((i, d));
            }
        }
        if let Some((i, _)) = worst {
            state.relocate(data.row(i), i, l);
        }
    }

    let width = state.offsets[state.cols];
    for l in 0..state.k {
        if state.sizes[l] == 0 {
            continue;
        }
        let block = &state.tally[l * width..(l + 1) * width];
        for r in 0..state.cols {
            let slice = &block[state.offsets[r]..state.offsets[r + 1]];
            let mut best = 0usize;
            for (c, &cnt) in slice.iter().enumerate() {
                if cnt > slice[best] {
                    best = c;
                }
            }
            state.modes[l * state.cols + r] = best as u32;
        }
    }
}

/// `I_r` = number of objects matching their cluster's mode in column `r`;
/// `Θ_r = I_r / Σ I`, uniform when nothing matches.
pub fn update_theta<T: Scalar>(state: &mut CameState<T>) {
    state.cost = None;
    let width = state.offsets[state.cols];
    let mut matches = vec![0usize; state.cols];
    for l in 0..state.k {
        let block = &state.tally[l * width..(l + 1) * width];
        for (r, &z) in state.mode(l).iter().enumerate() {
            matches[r] += block[state.offsets[r] + z as usize] as usize;
        }
    }
    let total: usize = matches.iter().sum();
    state.similarity_mass = matches.iter().map(|&m| T::from_count(m)).collect();
    state.theta = if total == 0 {
        vec![T::one() / T::from_count(state.cols); state.cols]
    } else {
        let t = T::from_count(total);
        matches.iter().map(|&m| T::from_count(m) / t).collect()
    };
}

/// `P = Σ_i d_Θ(x_i, Z_{q(i)})` over assigned objects.
pub fn objective<T: Scalar>(data: &CodeMatrix, state: &CameState<T>) -> T {
    state
        .assignment
        .iter()
        .enumerate()
        .filter(|(_, &a)| a != UNASSIGNED)
        .map(|(i, &a)| distance(data.row(i), state.mode(a), &state.theta))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CameConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Learn column weights; off keeps them uniform.
    pub weighting: bool,
    /// Recompute modes each iteration; off keeps the seed rows as modes.
    pub update_modes: bool,
    /// Run exactly `max_iter` iterations even after the partition settles.
    pub fixed_iterations: bool,
    /// Independent seedings; the run with the lowest objective is kept.
    pub restarts: usize,
}

impl CameConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, seed, max_iter: 100, weighting: true, update_modes: true, fixed_iterations: false, restarts: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameResult<T> {
    pub labels: Vec<usize>,
    pub theta: Vec<T>,
    pub modes: Vec<Vec<u32>>,
    pub iterations: usize,
    pub converged: bool,
    pub objective: T,
}

/// Samples `k` seeds among the distinct rows.
pub fn choose_seeds(data: &CodeMatrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    let distinct = data.distinct_rows();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > distinct.len() {
        return Err(Error::InsufficientDistinct { requested: k, available: distinct.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample(&mut rng, distinct.len(), k).into_iter().map(|j| distinct[j]).collect())
}

/// Alternates assignment, mode update and weight update until the
/// partition stops changing or `max_iter` iterations have run. With several
/// restarts, the first seeding uses `seed` and the rest draw their seeds from
/// a generator keyed by it.
pub fn run_came<T: Scalar>(data: &CodeMatrix, config: &CameConfig) -> Result<CameResult<T>> {
    if config.k > data.n() {
        return Err(Error::InvalidArgument(format!("k ({}) exceeds the number of objects ({})", config.k, data.n())));
    }
    if config.max_iter == 0 || config.restarts == 0 {
        return Err(Error::InvalidArgument("iteration cap and restarts must be at least 1".into()));
    }
    let mut seeds = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best = run_came_once(data, config, config.seed)?;
    for _ in 1..config.restarts {
        let candidate = run_came_once(data, config, seeds.next_u64())?;
        if candidate.objective < best.objective {
            best = candidate;
        }
    }
    Ok(best)
}

fn run_came_once<T: Scalar>(data: &CodeMatrix, config: &CameConfig, seed: u64) -> Result<CameResult<T>> {
    let seeds = choose_seeds(data, config.k, seed)?;
    let mut state = CameState::<T>::from_seeds(data, &seeds);
    let mut converged = false;
    while state.iterations < config.max_iter {
        state.iterations += 1;
        let changed = assign_objects(data, &mut state);
        if !changed {
            converged = true;
            if !config.fixed_iterations {
                break;
            }
        }
        if config.update_modes {
            update_modes(data, &mut state);
        }
        if config.weighting {
            update_theta(&mut state);
        }
    }
    if config.fixed_iterations {
        assign_objects(data, &mut state);
    }
    let objective = state.cost.unwrap_or_else(|| objective(data, &state));
    Ok(CameResult {
        labels: state.assignment.clone(),
        theta: state.theta.clone(),
        modes: state.modes(),
        iterations: state.iterations,
        converged,
        objective,
    })
}
