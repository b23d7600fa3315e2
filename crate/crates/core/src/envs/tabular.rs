//! Finite MDPs with explicit transition and reward tables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::policies::sample_categorical;

/// `P(s'|s,a)`, `R(s,a,s')`, per-state continuation `gamma(s)` and a
/// behaviour distribution `b(a|s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMDP {
    num_states: usize,
    num_actions: usize,
    p: Vec<f64>,
    r: Vec<f64>,
    gamma: Vec<f64>,
    behavior: Vec<f64>,
}

impl TabularMDP {
    /// `p` and `r` are flattened as `[s][a][s']`, `behavior` as `[s][a]`.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        p: Vec<f64>,
        r: Vec<f64>,
        gamma: Vec<f64>,
        behavior: Vec<f64>,
    ) -> Result<Self> {
        let n = num_states * num_actions * num_states;
        for (len, want) in [(p.len(), n), (r.len(), n), (gamma.len(), num_states), (behavior.len(), num_states * num_actions)] {
            if len != want {
                return Err(Error::DimensionMismatch { expected: want, actual: len });
            }
        }
        if num_states == 0 || num_actions == 0 {
            return Err(Error::Config("MDP needs at least one state and one action".into()));
        }
        for row in p.chunks(num_states) {
            if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("transition row {row:?} is not a distribution")));
            }
        }
        for row in behavior.chunks(num_actions) {
            if row.iter().any(|&x| x <= 0.0) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("behaviour row {row:?} must be positive and sum to 1")));
            }
        }
        if gamma.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::Config("gamma(s) must lie in [0, 1]".into()));
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("rewards must be finite".into()));
        }
        Ok(Self { num_states, num_actions, p, r, gamma, behavior })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    fn idx(&self, s: usize, a: usize, sp: usize) -> usize {
        (s * self.num_actions + a) * self.num_states + sp
    }

    pub fn p(&self, s: usize, a: usize, sp: usize) -> f64 {
        self.p[self.idx(s, a, sp)]
    }

    pub fn r(&self, s: usize, a: usize, sp: usize) -> f64 {
        self.r[self.idx(s, a, sp)]
    }

    pub fn gamma(&self, s: usize) -> f64 {
        self.gamma[s]
    }

    pub fn behavior(&self, s: usize, a: usize) -> f64 {
        self.behavior[s * self.num_actions + a]
    }

    pub fn behavior_row(&self, s: usize) -> &[f64] {
        &self.behavior[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = self.idx(s, a, 0);
        &self.p[start..start + self.num_states]
    }

    /// `sum_{s'} P(s'|s,a) R(s,a,s')`.
    pub fn expected_reward(&self, s: usize, a: usize) -> f64 {
        (0..self.num_states).map(|sp| self.p(s, a, sp) * self.r(s, a, sp)).sum()
    }

    fn check_ids(&self, s: usize, a: usize) -> Result<()> {
        if s >= self.num_states {
            return Err(Error::InvalidId { id: s, bound: self.num_states });
        }
        if a >= self.num_actions {
            return Err(Error::InvalidId { id: a, bound: self.num_actions });
        }
        Ok(())
    }

    /// Samples `s' ~ P(.|s,a)` and returns it with `R(s,a,s')`.
    pub fn step<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> Result<(usize, f64)> {
        self.check_ids(s, a)?;
        let sp = sample_categorical(self.transition_row(s, a), rng);
        Ok((sp, self.r(s, a, sp)))
    }

    pub fn sample_behavior<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        sample_categorical(self.behavior_row(s), rng)
    }

    /// State-to-state matrix `P_pi[s][s'] = sum_a pi(a|s) P(s'|s,a)`, row major.
    pub fn state_transitions(&self, pi: &[f64]) -> Vec<f64> {
        let n = self.num_states;
        let mut out = vec![0.0; n * n];
        for s in 0..n {
            for a in 0..self.num_actions {
                let w = pi[s * self.num_actions + a];
                for sp in 0..n {
                    out[s * n + sp] += w * self.p(s, a, sp);
                }
            }
        }
        out
    }

    /// Two states, two actions: action 0 stays, action 1 switches.
    /// The chain continues with `gamma = 0.5` everywhere.
    pub fn two_state_chain() -> Self {
        let p = vec![
            1.0, 0.0, 0.0, 1.0, // s = 0: stay, switch
            0.0, 1.0, 1.0, 0.0, // s = 1: stay, switch
        ];
        // Rewards depend only on (s, a).
        let r = vec![1.0, 1.0, -1.0, -1.0, 0.5, 0.5, 0.0, 0.0];
        Self::new(2, 2, p, r, vec![0.5; 2], vec![0.5; 4]).expect("valid chain")
    }

    /// Three states on a ring; action 0 moves clockwise, action 1
    /// anticlockwise, each succeeding with probability 0.7 and otherwise
    /// staying put.
    pub fn three_state_ring() -> Self {
        let n = 3;
        let mut p = vec![0.0; n * 2 * n];
        let mut r = vec![0.0; n * 2 * n];
        let state_reward = [1.0, -0.5, 0.25];
        for s in 0..n {
            for (a, target) in [(0, (s + 1) % n), (1, (s + n - 1) % n)] {
                let base = (s * 2 + a) * n;
                p[base + target] += 0.7;
                p[base + s] += 0.3;
                for sp in 0..n {
                    r[base + sp] = state_reward[sp] + if a == 1 { 0.2 } else { 0.0 };
                }
            }
        }
        Self::new(n, 2, p, r, vec![0.9; n], vec![0.5; n * 2]).expect("valid ring")
    }

    /// Random dense MDP with uniform behaviour, reproducible from `seed`.
    pub fn random(num_states: usize, num_actions: usize, gamma: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = num_states * num_actions * num_states;
        let mut p = Vec::with_capacity(n);
        for _ in 0..num_states * num_actions {
            let raw: Vec<f64> = (0..num_states).map(|_| rng.gen_range(0.05..1.0)).collect();
            let z: f64 = raw.iter().sum();
            let mut row: Vec<f64> = raw.iter().map(|x| x / z).collect();
            // Push the rounding residue into the largest entry.
            let residue = 1.0 - row.iter().sum::<f64>();
            let k = crate::policies::argmax_lowest(&row);
            row[k] += residue;
            p.extend(row);
        }
        let r = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = vec![1.0 / num_actions as f64; num_states * num_actions];
        Self::new(num_states, num_actions, p, r, vec![gamma; num_states], b).expect("valid random MDP")
    }

    /// The fixed 4-state, 3-action MDP used by the policy-gradient checks.
    pub fn random_four_state() -> Self {
        Self::random(4, 3, 0.9, 0x5EED_0004)
    }

    /// All in-repo fixtures.
    pub fn fixtures() -> Vec<(&'static str, Self)> {
        vec![
            ("two_state_chain", Self::two_state_chain()),
            ("three_state_ring", Self::three_state_ring()),
            ("random_four_state", Self::random_four_state()),
        ]
    }
}
