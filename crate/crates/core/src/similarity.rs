//! Per-cluster value-frequency statistics and the frequency-based
//! object-cluster similarity with learned per-cluster feature weights.

use crate::data::MISSING;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Counts of every value of every feature among a cluster's members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    offsets: Vec<usize>,
    counts: Vec<u32>,
    non_null: Vec<u32>,
    members: usize,
    missing: usize,
}

impl FrequencyTable {
    /// Empty table over features with the given domain sizes.
    pub fn new(cardinalities: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(cardinalities.len() + 1);
        offsets.push(0);
        for &m in cardinalities {
            offsets.push(offsets.last().unwrap() + m);
        }
        let total = *offsets.last().unwrap();
        Self { offsets, counts: vec![0; total], non_null: vec![0; cardinalities.len()], members: 0, missing: 0 }
    }

    pub fn from_rows<'a>(cardinalities: &[usize], rows: impl IntoIterator<Item = &'a [u32]>) -> Self {
        let mut t = Self::new(cardinalities);
        for x in rows {
            t.add(x);
        }
        t
    }

    pub fn d(&self) -> usize {
        self.non_null.len()
    }

    pub fn member_count(&self) -> usize {
        self.members
    }

    pub fn is_empty(&self) -> bool {
        self.members == 0
    }

    /// Number of members with `code` in feature `r`.
    #[inline]
    pub fn count(&self, r: usize, code: u32) -> u32 {
        if code == MISSING {
            return 0;
        }
        self.counts[self.offsets[r] + code as usize]
    }

    /// Number of members whose feature `r` is not NULL.
    #[inline]
    pub fn non_null(&self, r: usize) -> u32 {
        self.non_null[r]
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Count stored at a flat cell index `offsets[r] + code`.
    #[inline]
    pub(crate) fn count_at(&self, cell: usize) -> u32 {
        self.counts[cell]
    }

    /// True when no member has a missing cell.
    #[inline]
    pub(crate) fn is_complete(&self) -> bool {
        self.missing == 0
    }

    pub fn feature_counts(&self, r: usize) -> &[u32] {
        &self.counts[self.offsets[r]..self.offsets[r + 1]]
    }

    pub fn add(&mut self, x: &[u32]) {
        debug_assert_eq!(x.len(), self.d());
        for (r, &c) in x.iter().enumerate() {
            if c != MISSING {
                self.counts[self.offsets[r] + c as usize] += 1;
                self.non_null[r] += 1;
            } else {
                self.missing += 1;
            }
        }
        self.members += 1;
    }

    /// Removes a previously added row. The table is left untouched on error.
    pub fn remove(&mut self, x: &[u32]) -> Result<()> {
        if self.members == 0 {
            return Err(Error::Inconsistent("remove from empty table".into()));
        }
        for (r, &c) in x.iter().enumerate() {
            if c == MISSING {
                continue;
            }
            let cell = &mut self.counts[self.offsets[r] + c as usize];
            if *cell == 0 {
                for (q, &c) in x[..r].iter().enumerate() {
                    if c != MISSING {
                        self.counts[self.offsets[q] + c as usize] += 1;
                        self.non_null[q] += 1;
                    }
                }
                return Err(Error::Inconsistent(format!("count of code {c} in feature {r} would go negative")));
            }
            *cell -= 1;
            self.non_null[r] -= 1;
        }
        self.missing -= x.iter().filter(|&&c| c == MISSING).count();
        self.members -= 1;
        Ok(())
    }

    /// Adds every count of `other` into `self`.
    pub fn merge(&mut self, other: &Self) {
        debug_assert_eq!(self.offsets, other.offsets);
        for (a, &b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, &b) in self.non_null.iter_mut().zip(&other.non_null) {
            *a += b;
        }
        self.members += other.members;
        self.missing += other.missing;
    }

    /// `self − other`, where `other` must be a sub-table of `self`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.offsets != other.offsets || other.members > self.members {
            return Err(Error::Inconsistent("table difference over mismatched tables".into()));
        }
        let sub = |a: &[u32], b: &[u32]| -> Result<Vec<u32>> {
            a.iter()
                .zip(b)
                .map(|(&x, &y)| x.checked_sub(y).ok_or_else(|| Error::Inconsistent("negative difference".into())))
                .collect()
        };
        Ok(Self {
            offsets: self.offsets.clone(),
            counts: sub(&self.counts, &other.counts)?,
            non_null: sub(&self.non_null, &other.non_null)?,
            members: self.members - other.members,
            missing: self
                .missing
                .checked_sub(other.missing)
                .ok_or_else(|| Error::Inconsistent("negative difference".into()))?,
        })
    }
}

/// Frequency ratio of `code` among the non-null members of the cluster.
/// NULL queries and all-NULL features contribute 0.
pub fn value_similarity<T: Scalar>(code: u32, r: usize, t: &FrequencyTable) -> Result<T> {
    if t.is_empty() {
        return Err(Error::EmptyCluster);
    }
    Ok(ratio(t.count(r, code), t.non_null(r)))
}

#[inline]
fn ratio<T: Scalar>(num: u32, den: u32) -> T {
    if den == 0 {
        T::zero()
    } else {
        T::from_count(num as usize) / T::from_count(den as usize)
    }
}

/// Weighted sum of per-feature value similarities. With uniform weights
/// `1/d` this is the plain average over features.
pub fn object_cluster_similarity<T: Scalar>(x: &[u32], t: &FrequencyTable, w: &[T]) -> Result<T> {
    if t.is_empty() {
        return Err(Error::EmptyCluster);
    }
    Ok(weighted_similarity_unchecked(x, t, w))
}

/// `Σ_{r<d} term(r)` accumulated in four interleaved partial sums.
#[inline]
pub(crate) fn lane_sum<T: Scalar>(d: usize, term: impl Fn(usize) -> T) -> T {
    let split = d - d % 4;
    let mut acc = [T::zero(); 4];
    for base in (0..split).step_by(4) {
        for (j, a) in acc.iter_mut().enumerate() {
            *a += term(base + j);
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for r in split..d {
        s += term(r);
    }
    s
}

#[inline]
pub(crate) fn weighted_similarity_unchecked<T: Scalar>(x: &[u32], t: &FrequencyTable, w: &[T]) -> T {
    if t.missing == 0 {
        // every feature has the same non-null count
        if t.members == 0 {
            return T::zero();
        }
        let s = lane_sum(x.len(), |r| {
            let c = x[r];
            if c == MISSING {
                T::zero()
            } else {
                w[r] * T::from_count(t.counts[t.offsets[r] + c as usize] as usize)
            }
        });
        return s / T::from_count(t.members);
    }
    let mut s = T::zero();
    for (r, (&c, &wr)) in x.iter().zip(w).enumerate() {
        if c == MISSING {
            continue;
        }
        let nn = t.non_null[r];
        if nn != 0 {
            let cnt = t.counts[t.offsets[r] + c as usize];
            if cnt != 0 {
                s += wr * T::from_count(cnt as usize) / T::from_count(nn as usize);
            }
        }
    }
    s
}

/// Distance between the in-cluster and rest-of-data value distributions of
/// feature `r`, scaled by `1/√2` into `[0, 1]`.
pub fn inter_cluster_difference<T: Scalar>(r: usize, cluster: &FrequencyTable, rest: &FrequencyTable) -> T {
    let (np, nq) = (cluster.non_null(r), rest.non_null(r));
    if np == 0 || nq == 0 {
        return T::zero();
    }
    let sq: T = cluster
        .feature_counts(r)
        .iter()
        .zip(rest.feature_counts(r))
        .map(|(&a, &b)| {
            let diff = ratio::<T>(a, np) - ratio::<T>(b, nq);
            diff * diff
        })
        .sum();
    (sq / T::lit(2.0)).sqrt()
}

/// Mean, over the cluster's members, of the frequency ratio of each member's
/// own value in feature `r`. Members with a NULL cell contribute 0.
pub fn intra_cluster_similarity<'a, T: Scalar>(
    r: usize,
    members: impl IntoIterator<Item = &'a [u32]>,
    t: &FrequencyTable,
) -> T {
    if t.is_empty() {
        return T::zero();
    }
    let sum: T = members.into_iter().map(|x| ratio::<T>(t.count(r, x[r]), t.non_null(r))).sum();
    sum / T::from_count(t.member_count())
}

/// Same quantity as [`intra_cluster_similarity`] computed from the counts
/// alone: `Σ_t c_t² / (nn · n_l)`.
pub fn intra_cluster_similarity_from_counts<T: Scalar>(r: usize, t: &FrequencyTable) -> T {
    let nn = t.non_null(r);
    if t.is_empty() || nn == 0 {
        return T::zero();
    }
    let sq: u64 = t.feature_counts(r).iter().map(|&c| (c as u64) * (c as u64)).sum();
    T::from_f64(sq as f64).unwrap() / (T::from_count(nn as usize) * T::from_count(t.member_count()))
}

/// Frequency tables of a set of cluster slots plus their union.
///
/// Slots are never removed, an empty slot is simply not live.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    cardinalities: Vec<usize>,
    tables: Vec<FrequencyTable>,
}

impl ClusterModel {
    pub fn new(cardinalities: &[usize], k: usize) -> Self {
        let empty = FrequencyTable::new(cardinalities);
        Self { cardinalities: cardinalities.to_vec(), tables: vec![empty; k] }
    }

    /// Rebuilds every table from an assignment vector (`None` = unassigned).
    pub fn from_assignment<'a>(
        cardinalities: &[usize],
        k: usize,
        rows: impl IntoIterator<Item = &'a [u32]>,
        assignment: &[Option<usize>],
    ) -> Self {
        let mut model = Self::new(cardinalities, k);
        for (x, a) in rows.into_iter().zip(assignment) {
            if let Some(l) = *a {
                model.add(l, x);
            }
        }
        model
    }

    pub fn k(&self) -> usize {
        self.tables.len()
    }

    pub fn d(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn table(&self, l: usize) -> &FrequencyTable {
        &self.tables[l]
    }

    pub fn tables(&self) -> &[FrequencyTable] {
        &self.tables
    }

    /// Union of all cluster tables.
    pub fn global(&self) -> FrequencyTable {
        let mut total = FrequencyTable::new(&self.cardinalities);
        for t in &self.tables {
            total.merge(t);
        }
        total
    }

    pub fn is_live(&self, l: usize) -> bool {
        !self.tables[l].is_empty()
    }

    pub fn live_ids(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.tables.len()).filter(move |&l| self.is_live(l))
    }

    pub fn live_count(&self) -> usize {
        self.tables.iter().filter(|t| !t.is_empty()).count()
    }

    pub fn add(&mut self, l: usize, x: &[u32]) {
        self.tables[l].add(x);
    }

    pub fn remove(&mut self, l: usize, x: &[u32]) -> Result<()> {
        self.tables[l].remove(x)
    }

    /// Table of all assigned objects outside cluster `l`.
    pub fn rest_table(&self, l: usize) -> FrequencyTable {
        self.global().difference(&self.tables[l]).expect("cluster table is a sub-table of the global table")
    }
}

/// Per-cluster feature weights with the two statistics they are built from.
/// Rows are cluster slots, columns are features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWeights<T> {
    k: usize,
    d: usize,
    omega: Vec<T>,
    alpha: Vec<T>,
    beta: Vec<T>,
}

impl<T: Scalar> FeatureWeights<T> {
    pub fn uniform(k: usize, d: usize) -> Self {
        let w = T::one() / T::from_count(d);
        Self { k, d, omega: vec![w; k * d], alpha: vec![T::zero(); k * d], beta: vec![T::zero(); k * d] }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Weights `ω_·l` of cluster `l`, summing to one.
    pub fn cluster(&self, l: usize) -> &[T] {
        &self.omega[l * self.d..(l + 1) * self.d]
    }

    pub fn omega(&self, r: usize, l: usize) -> T {
        self.omega[l * self.d + r]
    }

    pub fn alpha(&self, r: usize, l: usize) -> T {
        self.alpha[l * self.d + r]
    }

    pub fn beta(&self, r: usize, l: usize) -> T {
        self.beta[l * self.d + r]
    }

    /// Feature contribution `α·β`.
    pub fn contribution(&self, r: usize, l: usize) -> T {
        self.alpha(r, l) * self.beta(r, l)
    }

    /// Keeps only the given slots, in order.
    pub fn select(&self, slots: &[usize]) -> Self {
        let pick = |v: &[T]| slots.iter().flat_map(|&l| v[l * self.d..(l + 1) * self.d].iter().copied()).collect();
        Self { k: slots.len(), d: self.d, omega: pick(&self.omega), alpha: pick(&self.alpha), beta: pick(&self.beta) }
    }

    pub fn as_rows(&self) -> Vec<Vec<T>> {
        self.omega.chunks(self.d).map(<[T]>::to_vec).collect()
    }
}

/// Recomputes `α`, `β` and the normalized weights `ω ∝ α·β` for every live
/// cluster. Clusters whose contributions are all zero, and dead slots, get
/// uniform weights.
pub fn update_feature_weights<T: Scalar>(model: &ClusterModel) -> FeatureWeights<T> {
    let (k, d) = (model.k(), model.d());
    let mut fw = FeatureWeights::uniform(k, d);
    let uniform = T::one() / T::from_count(d);
    let global = model.global();
    for l in model.live_ids() {
        let table = model.table(l);
        let rest = global.difference(table).expect("cluster table is a sub-table of the global table");
        let base = l * d;
        let mut total = T::zero();
        for r in 0..d {
            let a = inter_cluster_difference::<T>(r, table, &rest);
            let b = intra_cluster_similarity_from_counts::<T>(r, table);
            fw.alpha[base + r] = a;
            fw.beta[base + r] = b;
            total += a * b;
        }
        for r in 0..d {
            fw.omega[base + r] =
                if total > T::zero() { fw.alpha[base + r] * fw.beta[base + r] / total } else { uniform };
        }
    }
    fw
}

/// Normalizes a contribution column into weights; all-zero falls back to uniform.
pub fn normalize_contributions<T: Scalar>(h: &[T]) -> Vec<T> {
    let total: T = h.iter().copied().sum();
    if total > T::zero() {
        h.iter().map(|&x| x / total).collect()
    } else {
        vec![T::one() / T::from_count(h.len()); h.len()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(cards: &[usize], rows: &[&[u32]]) -> FrequencyTable {
        FrequencyTable::from_rows(cards, rows.iter().copied())
    }

    #[test]
    fn add_counts_each_cell() {
        let mut t = FrequencyTable::new(&[2, 2]);
        t.add(&[0, 1]);
        assert_eq!(t.count(0, 0), 1);
        assert_eq!(t.count(1, 1), 1);
        assert_eq!(t.member_count(), 1);
    }

    #[test]
    fn add_then_remove_restores() {
        let base = table(&[3, 2], &[&[0, 1], &[2, 0]]);
        let mut t = base.clone();
        t.add(&[1, 1]);
        t.remove(&[1, 1]).unwrap();
        assert_eq!(t, base);
    }

    #[test]
    fn missing_cells_are_excluded() {
        let mut t = FrequencyTable::new(&[2, 2]);
        t.add(&[1, MISSING]);
        assert_eq!(t.non_null(1), 0);
        assert_eq!(t.non_null(0), 1);
        assert_eq!(t.member_count(), 1);
    }

    #[test]
    fn remove_unknown_row_is_rejected_without_mutation() {
        let mut t = table(&[2, 2], &[&[0, 0]]);
        let before = t.clone();
        assert!(matches!(t.remove(&[0, 1]), Err(Error::Inconsistent(_))));
        assert_eq!(t, before);
    }

    #[test]
    fn value_similarity_is_frequency_ratio() {
        let t = table(&[3], &[&[0], &[0], &[0], &[1]]);
        assert_eq!(value_similarity::<f64>(0, 0, &t).unwrap(), 0.75);
        assert_eq!(value_similarity::<f64>(2, 0, &t).unwrap(), 0.0);
        assert_eq!(value_similarity::<f64>(MISSING, 0, &t).unwrap(), 0.0);
    }

    #[test]
    fn all_null_feature_gives_zero() {
        let t = table(&[2, 2], &[&[0, MISSING], &[1, MISSING]]);
        assert_eq!(value_similarity::<f64>(0, 1, &t).unwrap(), 0.0);
    }

    #[test]
    fn empty_cluster_similarity_is_error() {
        let t = FrequencyTable::new(&[2]);
        assert!(matches!(value_similarity::<f64>(0, 0, &t), Err(Error::EmptyCluster)));
        assert!(matches!(object_cluster_similarity::<f64>(&[0], &t, &[1.0]), Err(Error::EmptyCluster)));
    }

    #[test]
    fn object_similarity_examples() {
        let single = table(&[3, 3], &[&[1, 2]]);
        let w = [0.5, 0.5];
        assert_eq!(object_cluster_similarity(&[1, 2], &single, &w).unwrap(), 1.0);
        assert_eq!(object_cluster_similarity(&[0, 0], &single, &w).unwrap(), 0.0);

        // Feature ratios 3/4 and 1/4.
        let t = table(&[2, 2], &[&[0, 0], &[0, 1], &[0, 1], &[1, 1]]);
        let s: f64 = object_cluster_similarity(&[0, 0], &t, &w).unwrap();
        assert!((s - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inter_cluster_difference_examples() {
        let a = table(&[2], &[&[0], &[0]]);
        let b = table(&[2], &[&[1], &[1], &[1]]);
        let v: f64 = inter_cluster_difference(0, &a, &b);
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(inter_cluster_difference::<f64>(0, &a, &a), 0.0);

        let half = table(&[2], &[&[0], &[1]]);
        let v: f64 = inter_cluster_difference(0, &half, &a);
        assert!((v - 0.5).abs() < 1e-12);

        let empty = FrequencyTable::new(&[2]);
        assert_eq!(inter_cluster_difference::<f64>(0, &a, &empty), 0.0);
    }

    #[test]
    fn intra_cluster_similarity_examples() {
        let rows: [&[u32]; 3] = [&[1], &[1], &[1]];
        let t = table(&[2], &rows);
        assert_eq!(intra_cluster_similarity::<f64>(0, rows, &t), 1.0);

        let rows: [&[u32]; 2] = [&[0], &[1]];
        let t = table(&[2], &rows);
        assert_eq!(intra_cluster_similarity::<f64>(0, rows, &t), 0.5);

        let rows: [&[u32]; 4] = [&[0], &[0], &[0], &[1]];
        let t = table(&[2], &rows);
        assert!((intra_cluster_similarity::<f64>(0, rows, &t) - 0.625).abs() < 1e-15);
        assert!((intra_cluster_similarity_from_counts::<f64>(0, &t) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn weight_normalization_examples() {
        assert_eq!(normalize_contributions(&[2.0, 2.0]), vec![0.5, 0.5]);
        assert_eq!(normalize_contributions(&[1.0, 3.0]), vec![0.25, 0.75]);
        assert_eq!(normalize_contributions(&[0.0, 0.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn feature_weights_favor_discriminative_compact_features() {
        // Feature 0 separates the two clusters perfectly, feature 1 is noise.
        let rows: Vec<Vec<u32>> = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
        let assign = [Some(0), Some(0), Some(1), Some(1)];
        let model = ClusterModel::from_assignment(&[2, 2], 2, rows.iter().map(Vec::as_slice), &assign);
        let fw = update_feature_weights::<f64>(&model);
        for l in 0..2 {
            assert!((fw.omega(0, l) - 1.0).abs() < 1e-12);
            assert_eq!(fw.omega(1, l), 0.0);
            assert!((fw.alpha(0, l) - 1.0).abs() < 1e-12);
            assert_eq!(fw.beta(0, l), 1.0);
        }
    }

    #[test]
    fn single_cluster_weights_fall_back_to_uniform() {
        let rows: Vec<Vec<u32>> = vec![vec![0, 0, 1], vec![0, 1, 1]];
        let model = ClusterModel::from_assignment(&[2, 2, 2], 1, rows.iter().map(Vec::as_slice), &[Some(0), Some(0)]);
        let fw = update_feature_weights::<f32>(&model);
        assert_eq!(fw.cluster(0), &[1.0 / 3.0; 3]);
    }

    fn rows_strategy() -> impl Strategy<Value = (Vec<usize>, Vec<Vec<u32>>)> {
        (1usize..5, 1usize..5).prop_flat_map(|(d, m)| {
            let cards = vec![m; d];
            let cell = prop_oneof![9 => 0..m as u32, 1 => Just(MISSING)];
            (Just(cards), prop::collection::vec(prop::collection::vec(cell, d), 1..30))
        })
    }

    proptest! {
        #[test]
        fn incremental_table_matches_rebuild(
            (cards, rows) in rows_strategy(),
            ops in prop::collection::vec((any::<bool>(), any::<prop::sample::Index>()), 0..60),
        ) {
            let mut t = FrequencyTable::new(&cards);
            let mut present: Vec<usize> = Vec::new();
            for (add, idx) in ops {
                if add || present.is_empty() {
                    let i = idx.index(rows.len());
                    t.add(&rows[i]);
                    present.push(i);
                } else {
                    let j = idx.index(present.len());
                    let i = present.swap_remove(j);
                    t.remove(&rows[i]).unwrap();
                }
            }
            let rebuilt = FrequencyTable::from_rows(&cards, present.iter().map(|&i| rows[i].as_slice()));
            prop_assert_eq!(t.clone(), rebuilt);
            for r in 0..cards.len() {
                let s: u32 = t.feature_counts(r).iter().sum();
                prop_assert_eq!(s, t.non_null(r));
                prop_assert!(t.non_null(r) as usize <= t.member_count());
            }
        }

        #[test]
        fn similarities_and_weights_stay_in_unit_range(
            (cards, rows) in rows_strategy(),
            k in 1usize..4,
            seed in any::<u64>(),
        ) {
            let assign: Vec<Option<usize>> = (0..rows.len()).map(|i| Some(((i as u64 ^ seed) % k as u64) as usize)).collect();
            let model = ClusterModel::from_assignment(&cards, k, rows.iter().map(Vec::as_slice), &assign);
            let fw = update_feature_weights::<f64>(&model);
            for l in model.live_ids() {
                let total: f64 = fw.cluster(l).iter().sum();
                prop_assert!((total - 1.0).abs() <= 1e-9);
                for r in 0..cards.len() {
                    prop_assert!((0.0..=1.0).contains(&fw.omega(r, l)));
                    prop_assert!((0.0..=1.0 + 1e-12).contains(&fw.alpha(r, l)));
                    prop_assert!((0.0..=1.0).contains(&fw.beta(r, l)));
                    let members = rows.iter().zip(&assign).filter(|(_, a)| **a == Some(l)).map(|(x, _)| x.as_slice());
                    let direct: f64 = intra_cluster_similarity(r, members, model.table(l));
                    prop_assert!((direct - fw.beta(r, l)).abs() < 1e-12);
                }
                for x in &rows {
                    let s = object_cluster_similarity(x, model.table(l), fw.cluster(l)).unwrap();
                    prop_assert!((0.0..=1.0 + 1e-12).contains(&s));
                    let v = value_similarity::<f64>(x[0], 0, model.table(l)).unwrap();
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }

        #[test]
        fn argmax_is_scale_invariant(
            (cards, rows) in rows_strategy(),
            scale_exp in -8i32..8,
        ) {
            // Powers of two keep the scaled sums exact, so ties stay ties.
            let scale = 2f64.powi(scale_exp);
            let k = rows.len().min(3);
            let assign: Vec<Option<usize>> = (0..rows.len()).map(|i| Some(i % k)).collect();
            let model = ClusterModel::from_assignment(&cards, k, rows.iter().map(Vec::as_slice), &assign);
            let w: Vec<f64> = vec![1.0 / cards.len() as f64; cards.len()];
            let ws: Vec<f64> = w.iter().map(|x| x * scale).collect();
            for x in &rows {
                let best = |w: &[f64]| crate::scalar::argmax_first(
                    (0..k).map(|l| (l, object_cluster_similarity(x, model.table(l), w).unwrap())));
                prop_assert_eq!(best(&w), best(&ws));
            }
        }
    }
}
