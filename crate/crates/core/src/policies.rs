//! Behaviour and target policies over discrete actions.
//!
//! All policies read the state only through the state-action features
//! `phi_{s,a}` of every action, passed as a slice indexed by action id.

use rand::Rng;

use crate::error::{Error, Result};
use crate::features::SparseFeatures;
use crate::trace::WeightedIndices;

/// Numerically safe softmax (the largest logit is subtracted first).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(logits.len());
    softmax_into(logits, &mut out);
    out
}

pub fn softmax_into(logits: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend_from_slice(logits);
    softmax_in_place(out);
}

fn softmax_in_place(x: &mut [f64]) {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for v in x.iter_mut() {
        *v = (*v - max).exp();
    }
    let z: f64 = x.iter().sum();
    for p in x.iter_mut() {
        *p /= z;
    }
}

/// Draws an index from a probability vector.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (a, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return a;
        }
    }
    // Round-off left `acc` slightly below 1; fall back to the last action
    // with positive mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Linear action values `Q(s,a) = v . phi_{s,a}`.
pub fn action_values(weights: &[f64], phis: &[SparseFeatures]) -> Vec<f64> {
    phis.iter().map(|f| f.dot(weights)).collect()
}

/// Lowest action id among the maximisers.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (a, &q) in values.iter().enumerate().skip(1) {
        if q > values[best] {
            best = a;
        }
    }
    best
}

/// `rho = pi(a|s) / b(a|s)`.
pub fn importance_ratio(pi_prob: f64, b_prob: f64) -> Result<f64> {
    if !(b_prob > 0.0 && b_prob <= 1.0) {
        return Err(Error::InvalidProbability {
            value: b_prob,
            context: "behaviour probability must lie in (0, 1]",
        });
    }
    if !(0.0..=1.0).contains(&pi_prob) {
        return Err(Error::InvalidProbability {
            value: pi_prob,
            context: "target probability must lie in [0, 1]",
        });
    }
    Ok(pi_prob / b_prob)
}

/// Gibbs (softmax-in-features) policy `pi_u(a|s) ∝ exp(u . phi_{s,a})`.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsPolicy {
    weights: Vec<f64>,
}

impl GibbsPolicy {
    pub fn new(dimension: usize) -> Self {
        Self { weights: vec![0.0; dimension] }
    }

    pub fn from_weights(weights: Vec<f64>) -> Self {
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    pub fn probs(&self, phis: &[SparseFeatures]) -> Vec<f64> {
        let mut out = Vec::with_capacity(phis.len());
        self.probs_into(phis, &mut out);
        out
    }

    pub fn probs_into(&self, phis: &[SparseFeatures], out: &mut Vec<f64>) {
        out.clear();
        out.extend(phis.iter().map(|f| f.dot(&self.weights)));
        softmax_in_place(out);
    }

    /// `psi(s,a) = phi_{s,a} - sum_b pi(b|s) phi_{s,b}` for the given
    /// probabilities.
    pub fn score_with_probs(phis: &[SparseFeatures], probs: &[f64], action: usize) -> WeightedIndices {
        let dimension = phis[action].dimension();
        // Runs in accumulation order: `+1` over `phi_a`, then `-pi(b)` over
        // each `phi_b`. Equal indices are summed in that order.
        let run = |r: usize| if r == 0 { phis[action].indices() } else { phis[r - 1].indices() };
        let coef = |r: usize| if r == 0 { 1.0 } else { -probs[r - 1] };
        let num_runs = phis.len() + 1;
        let mut cursor = vec![0usize; num_runs];
        let total = (0..num_runs).map(|r| run(r).len()).sum();
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(total);
        loop {
            let mut head = usize::MAX;
            for (r, &c) in cursor.iter().enumerate() {
                if let Some(&i) = run(r).get(c) {
                    head = head.min(i);
                }
            }
            if head == usize::MAX {
                break;
            }
            let mut acc = f64::NAN;
            let mut first = true;
            for (r, c) in cursor.iter_mut().enumerate() {
                if run(r).get(*c) == Some(&head) {
                    acc = if first { coef(r) } else { acc + coef(r) };
                    first = false;
                    *c += 1;
                }
            }
            entries.push((head, acc));
        }
        WeightedIndices::from_sorted(entries, dimension)
    }

    /// Score function `grad_u ln pi(a|s)`.
    pub fn score(&self, phis: &[SparseFeatures], action: usize) -> WeightedIndices {
        Self::score_with_probs(phis, &self.probs(phis), action)
    }

    pub fn sample<R: Rng + ?Sized>(&self, phis: &[SparseFeatures], rng: &mut R) -> usize {
        sample_categorical(&self.probs(phis), rng)
    }
}

/// Uniform behaviour policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformBehavior {
    num_actions: usize,
}

impl UniformBehavior {
    pub fn new(num_actions: usize) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::Config("behaviour needs at least one action".into()));
        }
        Ok(Self { num_actions })
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn prob(&self, _action: usize) -> f64 {
        1.0 / self.num_actions as f64
    }

    pub fn probs(&self) -> Vec<f64> {
        vec![self.prob(0); self.num_actions]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(0..self.num_actions)
    }
}

/// Softmax over action values with temperature `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftmaxTarget {
    tau: f64,
}

impl SoftmaxTarget {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Config(format!("softmax temperature must be positive, got {tau}")));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn probs(&self, q: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = q.iter().map(|&x| x / self.tau).collect();
        softmax(&scaled)
    }
}

/// Greedy policy over action values, ties broken towards the lowest id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GreedyTarget;

impl GreedyTarget {
    pub fn action(&self, q: &[f64]) -> usize {
        argmax_lowest(q)
    }

    pub fn probs(&self, q: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; q.len()];
        p[self.action(q)] = 1.0;
        p
    }
}
