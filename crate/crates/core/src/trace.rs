//! Eligibility traces and weighted sparse vectors.

use crate::features::SparseFeatures;

/// Trace entries whose magnitude falls below this after decay are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-8;

/// A sparse real vector stored as sorted `(index, coefficient)` pairs.
///
/// Used for the score `psi(s,a)`, whose support is the union of the active
/// indices of `phi_{s,b}` over all actions `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedIndices {
    entries: Vec<(usize, f64)>,
    dimension: usize,
}

impl WeightedIndices {
    /// Merges duplicate indices by summing their coefficients.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>, dimension: usize) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, c) in pairs {
            match entries.last_mut() {
                Some((j, acc)) if *j == i => *acc += c,
                _ => entries.push((i, c)),
            }
        }
        Self { entries, dimension }
    }

    /// Wraps entries already strictly increasing by index.
    pub(crate) fn from_sorted(entries: Vec<(usize, f64)>, dimension: usize) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        Self { entries, dimension }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Coefficient at `index` (zero when absent).
    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |k| self.entries[k].1)
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, c)| c * weights[i]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        for &(i, c) in &self.entries {
            out[i] += c;
        }
        out
    }
}

/// Eligibility trace with O(support) updates.
///
/// Coefficients live in a dense backing array so random access is O(1);
/// `support` lists the indices that may be non-zero, in insertion order.
#[derive(Debug, Clone)]
pub struct SparseTrace {
    values: Vec<f64>,
    active: Vec<bool>,
    support: Vec<usize>,
}

impl SparseTrace {
    pub fn new(dimension: usize) -> Self {
        Self {
            values: vec![0.0; dimension],
            active: vec![false; dimension],
            support: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Whether `index` is currently in the support.
    #[inline]
    pub fn contains(&self, index: usize) -> bool {
        self.active[index]
    }

    #[inline]
    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().map(move |&i| (i, self.values[i]))
    }

    pub fn clear(&mut self) {
        for &i in &self.support {
            self.values[i] = 0.0;
            self.active[i] = false;
        }
        self.support.clear();
    }

    pub fn is_zero(&self) -> bool {
        self.support.iter().all(|&i| self.values[i] == 0.0)
    }

    /// Multiplies every entry by `factor` and drops entries that become
    /// smaller than [`PRUNE_THRESHOLD`].
    pub fn decay(&mut self, factor: f64) {
        if factor == 0.0 {
            self.clear();
            return;
        }
        let values = &mut self.values;
        let active = &mut self.active;
        self.support.retain(|&i| {
            let x = factor * values[i];
            if x.abs() < PRUNE_THRESHOLD {
                values[i] = 0.0;
                active[i] = false;
                false
            } else {
                values[i] = x;
                true
            }
        });
    }

    /// Multiplies every entry by `factor` without pruning.
    pub fn scale(&mut self, factor: f64) {
        if factor == 0.0 {
            self.clear();
            return;
        }
        for &i in &self.support {
            self.values[i] *= factor;
        }
    }

    #[inline]
    fn add_at(&mut self, index: usize, amount: f64) {
        if !self.active[index] {
            self.active[index] = true;
            self.support.push(index);
        }
        self.values[index] += amount;
    }

    /// Adds `amount` at every active index of `features`.
    pub fn add_features(&mut self, features: &SparseFeatures, amount: f64) {
        for &i in features.indices() {
            self.add_at(i, amount);
        }
    }

    pub fn add_weighted(&mut self, v: &WeightedIndices) {
        for &(i, c) in v.entries() {
            self.add_at(i, c);
        }
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.support.iter().map(|&i| self.values[i] * weights[i]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        self.values.clone()
    }
}
