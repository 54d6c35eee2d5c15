//! External validity indices: clustering accuracy, adjusted Rand index,
//! adjusted mutual information and the Fowlkes-Mallows score.
//!
//! All four are computed from a contingency table and are invariant under
//! relabeling of either argument. Entropies use natural logarithms and AMI
//! is normalized by the arithmetic mean of the two entropies.

use std::collections::HashMap;

use pathfinding::prelude::{kuhn_munkres, Matrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Co-occurrence counts of predicted clusters (rows) and true classes (columns).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    cells: Vec<Vec<u64>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    n: u64,
}

fn densify(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let dense = labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (dense, map.len())
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::LengthMismatch { left: pred.len(), right: truth.len() });
        }
        if pred.is_empty() {
            return Err(Error::InvalidArgument("cannot score an empty labeling".into()));
        }
        let (p, rows) = densify(pred);
        let (t, cols) = densify(truth);
        let mut cells = vec![vec![0u64; cols]; rows];
        for (&a, &b) in p.iter().zip(&t) {
            cells[a][b] += 1;
        }
        let row_sums = cells.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..cols).map(|j| cells.iter().map(|r| r[j]).sum()).collect();
        Ok(Self { cells, row_sums, col_sums, n: pred.len() as u64 })
    }

    pub fn cells(&self) -> &[Vec<u64>] {
        &self.cells
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Both labelings describe the same partition.
    pub fn is_identity(&self) -> bool {
        self.cells.len() == self.col_sums.len() && self.cells.iter().all(|r| r.iter().filter(|&&c| c > 0).count() == 1)
    }

    fn nonzero(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().filter(|(_, &c)| c > 0).map(move |(j, &c)| (i, j, c)))
    }
}

fn comb2(x: u64) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Fraction of objects on the diagonal under the best one-to-one matching of
/// clusters to classes.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let size = table.cells.len().max(table.col_sums.len());
    let mut weights = Matrix::new(size, size, 0i64);
    for (i, j, c) in table.nonzero() {
        weights[(i, j)] = c as i64;
    }
    let (total, _) = kuhn_munkres(&weights);
    Ok(total as f64 / table.n as f64)
}

/// Adjusted Rand index. When the expected index equals its maximum the
/// result is 1 for identical partitions and 0 otherwise.
pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    Ok(ari_from_table(&table))
}

pub fn ari_from_table(table: &ContingencyTable) -> f64 {
    let index: f64 = table.nonzero().map(|(_, _, c)| comb2(c)).sum();
    let a: f64 = table.row_sums.iter().map(|&x| comb2(x)).sum();
    let b: f64 = table.col_sums.iter().map(|&x| comb2(x)).sum();
    let pairs = comb2(table.n);
    let expected = if pairs > 0.0 { a * b / pairs } else { 0.0 };
    let max = 0.5 * (a + b);
    if max == expected {
        return if table.is_identity() { 1.0 } else { 0.0 };
    }
    (index - expected) / (max - expected)
}

fn entropy(sums: &[u64], n: u64) -> f64 {
    let n = n as f64;
    -sums
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

pub fn mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.n as f64;
    table
        .nonzero()
        .map(|(i, j, c)| {
            let c = c as f64;
            c / n * (n * c / (table.row_sums[i] as f64 * table.col_sums[j] as f64)).ln()
        })
        .sum()
}

/// Expected mutual information of two random labelings with the table's
/// marginals under the hypergeometric model.
pub fn expected_mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.n as usize;
    let mut ln_fact = vec![0.0f64; n + 1];
    for i in 1..=n {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let nf = n as f64;
    let mut emi = 0.0;
    for &a in &table.row_sums {
        let a = a as usize;
        for &b in &table.col_sums {
            let b = b as usize;
            let lo = (a + b).saturating_sub(n).max(1);
            let hi = a.min(b);
            let fixed = ln_fact[a] + ln_fact[b] + ln_fact[n - a] + ln_fact[n - b] - ln_fact[n];
            for nij in lo..=hi {
                let x = nij as f64;
                let term = x / nf * (nf * x / (a as f64 * b as f64)).ln();
                let log_p = fixed - ln_fact[nij] - ln_fact[a - nij] - ln_fact[b - nij] - ln_fact[n + nij - a - b];
                emi += term * log_p.exp();
            }
        }
    }
    emi
}

/// Adjusted mutual information. Identical partitions score 1; a vanishing
/// denominator otherwise scores 0.
pub fn ami(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    Ok(ami_from_table(&table))
}

pub fn ami_from_table(table: &ContingencyTable) -> f64 {
    if table.is_identity() {
        return 1.0;
    }
    let mi = mutual_information(table);
    let emi = expected_mutual_information(table);
    let mean_h = 0.5 * (entropy(&table.row_sums, table.n) + entropy(&table.col_sums, table.n));
    let denom = mean_h - emi;
    if denom == 0.0 {
        return 0.0;
    }
    (mi - emi) / denom
}

/// Geometric mean of pairwise precision and recall; 0 when either side has
/// no same-cluster pairs.
pub fn fm(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    Ok(fm_from_table(&table))
}

pub fn fm_from_table(table: &ContingencyTable) -> f64 {
    let tp: f64 = table.nonzero().map(|(_, _, c)| comb2(c)).sum();
    let pred_pairs: f64 = table.row_sums.iter().map(|&x| comb2(x)).sum();
    let true_pairs: f64 = table.col_sums.iter().map(|&x| comb2(x)).sum();
    if pred_pairs == 0.0 || true_pairs == 0.0 {
        return 0.0;
    }
    tp / (pred_pairs * true_pairs).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub acc: f64,
    pub ari: f64,
    pub ami: f64,
    pub fm: f64,
}

pub fn evaluate(pred: &[usize], truth: &[usize]) -> Result<Scores> {
    let table = ContingencyTable::new(pred, truth)?;
    Ok(Scores {
        acc: accuracy(pred, truth)?,
        ari: ari_from_table(&table),
        ami: ami_from_table(&table),
        fm: fm_from_table(&table),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn identity_and_relabeling_score_one() {
        let truth = [0, 0, 1, 1, 2, 2, 2];
        let relabeled = [5, 5, 9, 9, 1, 1, 1];
        for pred in [&truth[..], &relabeled[..]] {
            let s = evaluate(pred, &truth).unwrap();
            assert!((s.acc - 1.0).abs() < EPS);
            assert!((s.ari - 1.0).abs() < EPS);
            assert!((s.ami - 1.0).abs() < EPS);
            assert!((s.fm - 1.0).abs() < EPS);
        }
    }

    #[test]
    fn small_example() {
        let pred = [0, 0, 1, 1];
        let truth = [0, 1, 1, 1];
        assert!((accuracy(&pred, &truth).unwrap() - 0.75).abs() < EPS);
        // Same-cluster pairs: pred {01, 23}, truth {12, 13, 23}; shared {23}.
        assert!((fm(&pred, &truth).unwrap() - 1.0 / 6f64.sqrt()).abs() < EPS);
    }

    #[test]
    fn one_cluster_versus_balanced_truth() {
        let truth = [0, 0, 1, 1, 2, 2];
        let pred = [0; 6];
        assert_eq!(ari(&pred, &truth).unwrap(), 0.0);
        assert!(ami(&pred, &truth).unwrap().abs() < EPS);
    }

    #[test]
    fn singletons_have_zero_fm() {
        assert_eq!(fm(&[0, 1, 2, 3], &[0, 0, 0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch_is_error() {
        assert!(matches!(accuracy(&[0, 1], &[0]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(ari(&[0, 1], &[0]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(ami(&[0], &[0, 1]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(fm(&[], &[0]), Err(Error::LengthMismatch { .. })));
        assert!(evaluate(&[], &[]).is_err());
    }

    #[test]
    fn accuracy_with_more_clusters_than_classes() {
        let pred = [0, 1, 2, 3, 3, 3];
        let truth = [0, 0, 0, 1, 1, 1];
        assert!((accuracy(&pred, &truth).unwrap() - 4.0 / 6.0).abs() < EPS);
    }

    #[test]
    fn ami_independent_labels_near_zero() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 4000;
        let a: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let v = ami(&a, &b).unwrap();
        assert!(v.abs() <= 0.05, "ami {v}");
    }

    #[test]
    fn ari_matches_known_value() {
        // Reference value from the standard pair-counting definition.
        let pred = [0, 0, 1, 1, 1, 2];
        let truth = [0, 0, 0, 1, 1, 1];
        let v = ari(&pred, &truth).unwrap();
        // index = 1 + 1 = 2, a = 1 + 3 = 4, b = 3 + 3 = 6, pairs = 15
        let expected = (2.0 - 24.0 / 15.0) / (5.0 - 24.0 / 15.0);
        assert!((v - expected).abs() < EPS);
    }

    proptest! {
        #[test]
        fn indices_are_relabeling_invariant(
            pairs in prop::collection::vec((0usize..4, 0usize..3), 1..40),
            perm in Just([3usize, 0, 2, 1]).prop_shuffle(),
        ) {
            let pred: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let truth: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let relabeled: Vec<usize> = pred.iter().map(|&p| perm[p] + 10).collect();
            let a = evaluate(&pred, &truth).unwrap();
            let b = evaluate(&relabeled, &truth).unwrap();
            let c = evaluate(&truth, &pred).unwrap();
            prop_assert!((a.acc - b.acc).abs() < 1e-12);
            prop_assert!((a.ari - b.ari).abs() < 1e-12);
            prop_assert!((a.ami - b.ami).abs() < 1e-9);
            prop_assert!((a.fm - b.fm).abs() < 1e-12);
            prop_assert!((a.ari - c.ari).abs() < 1e-12);
            prop_assert!((a.acc - c.acc).abs() < 1e-12);
            // The matching can always keep the single largest cell.
            let table = ContingencyTable::new(&pred, &truth).unwrap();
            let best_cell = table.cells().iter().flatten().copied().max().unwrap();
            prop_assert!(a.acc + 1e-12 >= best_cell as f64 / truth.len() as f64);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&a.acc));
            prop_assert!((0.0..=1.0 + 1e-12).contains(&a.fm));
            prop_assert!(a.ari <= 1.0 + 1e-12 && a.ami <= 1.0 + 1e-9);
        }
    }
}
