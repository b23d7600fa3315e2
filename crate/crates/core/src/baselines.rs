//! Action-value baselines: Watkins's Q(λ) and GQ(λ) with a greedy or
//! softmax target policy, over linear values `Q(s,a) = v . phi_{s,a}`.

use crate::error::{check_weight, Diverged, Error, Result};
use crate::features::SparseFeatures;
use crate::policies::{action_values, argmax_lowest, GreedyTarget, SoftmaxTarget};
use crate::trace::{SparseTrace, WeightedIndices};

/// A behaviour sample with state-action features for every action in both
/// `s` and `s'`.
#[derive(Debug, Clone, Copy)]
pub struct ActionTransition<'a> {
    pub phi_s: &'a [SparseFeatures],
    pub action: usize,
    pub b_prob: f64,
    pub reward: f64,
    pub phi_sp: &'a [SparseFeatures],
    pub gamma_s: f64,
    pub gamma_sp: f64,
}

fn check_step(alpha: &[(&str, f64)], lambda: f64) -> Result<()> {
    for &(name, a) in alpha {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::Config(format!("{name} must be a non-negative finite number, got {a}")));
        }
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    Ok(())
}

/// Watkins's Q(λ): the trace is cut whenever the behaviour action is not
/// greedy.
#[derive(Debug, Clone)]
pub struct QLambda {
    pub v: Vec<f64>,
    trace: SparseTrace,
    pub lambda: f64,
    pub alpha_v: f64,
}

impl QLambda {
    pub fn new(dimension: usize, lambda: f64, alpha_v: f64) -> Result<Self> {
        check_step(&[("alpha_v", alpha_v)], lambda)?;
        Ok(Self { v: vec![0.0; dimension], trace: SparseTrace::new(dimension), lambda, alpha_v })
    }

    pub fn trace(&self) -> &SparseTrace {
        &self.trace
    }

    pub fn reset_traces(&mut self) {
        self.trace.clear();
    }

    pub fn greedy_action(&self, phis: &[SparseFeatures]) -> usize {
        argmax_lowest(&action_values(&self.v, phis))
    }

    /// Returns the TD error.
    pub fn step(&mut self, t: &ActionTransition<'_>) -> std::result::Result<f64, Diverged> {
        let q_s = action_values(&self.v, t.phi_s);
        let q_sp = if t.gamma_sp == 0.0 {
            0.0
        } else {
            action_values(&self.v, t.phi_sp).into_iter().fold(f64::NEG_INFINITY, f64::max)
        };
        let delta = t.reward + t.gamma_sp * q_sp - q_s[t.action];

        let max_s = q_s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if q_s[t.action] == max_s {
            self.trace.decay(t.gamma_s * self.lambda);
        } else {
            self.trace.clear();
        }
        self.trace.add_features(&t.phi_s[t.action], 1.0);

        let step = self.alpha_v * delta;
        let mut ok = true;
        for (i, e) in self.trace.iter() {
            self.v[i] += step * e;
            ok &= check_weight(self.v[i]).is_ok();
        }
        if ok {
            Ok(delta)
        } else {
            Err(Diverged)
        }
    }
}

/// Target policy of a GQ(λ) learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetPolicy {
    Greedy,
    Softmax(SoftmaxTarget),
}

impl TargetPolicy {
    pub fn probs(&self, q: &[f64]) -> Vec<f64> {
        match self {
            TargetPolicy::Greedy => GreedyTarget.probs(q),
            TargetPolicy::Softmax(t) => t.probs(q),
        }
    }
}

/// GQ(λ) with main weights `v`, correction weights `w` and trace `e`.
#[derive(Debug, Clone)]
pub struct GqState {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    trace: SparseTrace,
    pub target: TargetPolicy,
    pub lambda: f64,
    pub alpha_v: f64,
    pub alpha_w: f64,
}

impl GqState {
    pub fn new(dimension: usize, target: TargetPolicy, lambda: f64, alpha_v: f64, alpha_w: f64) -> Result<Self> {
        check_step(&[("alpha_v", alpha_v), ("alpha_w", alpha_w)], lambda)?;
        Ok(Self {
            v: vec![0.0; dimension],
            w: vec![0.0; dimension],
            trace: SparseTrace::new(dimension),
            target,
            lambda,
            alpha_v,
            alpha_w,
        })
    }

    pub fn trace(&self) -> &SparseTrace {
        &self.trace
    }

    pub fn reset_traces(&mut self) {
        self.trace.clear();
    }

    pub fn target_probs(&self, phis: &[SparseFeatures]) -> Vec<f64> {
        self.target.probs(&action_values(&self.v, phis))
    }

    /// Expected next features `sum_a pi(a|s') phi_{s',a}` under the target.
    pub fn expected_features(&self, phis: &[SparseFeatures]) -> WeightedIndices {
        let probs = self.target_probs(phis);
        let dimension = phis.first().map_or(self.v.len(), |f| f.dimension());
        let pairs = phis
            .iter()
            .zip(&probs)
            .filter(|(_, &p)| p != 0.0)
            .flat_map(|(f, &p)| f.indices().iter().map(move |&i| (i, p)))
            .collect();
        WeightedIndices::from_pairs(pairs, dimension)
    }

    /// Returns the TD error.
    pub fn step(&mut self, t: &ActionTransition<'_>) -> std::result::Result<f64, Diverged> {
        let phi_sa = &t.phi_s[t.action];
        let phi_bar = if t.gamma_sp == 0.0 {
            WeightedIndices::from_pairs(Vec::new(), phi_sa.dimension())
        } else {
            self.expected_features(t.phi_sp)
        };
        let delta = t.reward + t.gamma_sp * phi_bar.dot(&self.v) - phi_sa.dot(&self.v);
        let rho = self.target_probs(t.phi_s)[t.action] / t.b_prob;

        self.trace.decay(t.gamma_s * self.lambda * rho);
        self.trace.add_features(phi_sa, 1.0);

        let we = self.trace.dot(&self.w);
        let wx = phi_sa.dot(&self.w);
        let correction = t.gamma_sp * (1.0 - self.lambda) * we;
        let use_bar = correction != 0.0;

        let mut ok = true;
        for &i in self.trace.support() {
            let e = self.trace.get(i);
            let bar = if use_bar { phi_bar.get(i) } else { 0.0 };
            let x = if phi_sa.contains(i) { 1.0 } else { 0.0 };
            self.v[i] += self.alpha_v * (delta * e - correction * bar);
            self.w[i] += self.alpha_w * (delta * e - wx * x);
            ok &= check_weight(self.v[i]).is_ok() && check_weight(self.w[i]).is_ok();
        }
        if use_bar {
            for &(i, bar) in phi_bar.entries() {
                if !self.trace.contains(i) {
                    self.v[i] += self.alpha_v * (delta * 0.0 - correction * bar);
                    ok &= check_weight(self.v[i]).is_ok();
                }
            }
        }
        if ok {
            Ok(delta)
        } else {
            Err(Diverged)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::TabularEncoding;

    fn table() -> Vec<Vec<SparseFeatures>> {
        TabularEncoding::new(2, 3).state_action_table()
    }

    fn tr<'a>(phis: &'a [Vec<SparseFeatures>], s: usize, a: usize, r: f64, sp: usize) -> ActionTransition<'a> {
        ActionTransition { phi_s: &phis[s], action: a, b_prob: 1.0 / 3.0, reward: r, phi_sp: &phis[sp], gamma_s: 0.9, gamma_sp: 0.9 }
    }

    #[test]
    fn q_learning_from_zero() {
        let phis = table();
        let mut q = QLambda::new(6, 0.0, 0.5).unwrap();
        q.step(&tr(&phis, 0, 1, 2.0, 1)).unwrap();
        assert_eq!(q.v, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn watkins_cut_on_exploratory_action() {
        let phis = table();
        let mut q = QLambda::new(6, 0.9, 0.1).unwrap();
        q.v[0] = 5.0;
        q.step(&tr(&phis, 0, 0, 0.0, 1)).unwrap();
        q.step(&tr(&phis, 1, 0, 0.0, 0)).unwrap();
        assert!(q.trace().get(0) > 0.0);
        q.step(&tr(&phis, 0, 2, 0.0, 1)).unwrap();
        let support: Vec<usize> = q.trace().iter().filter(|&(_, e)| e != 0.0).map(|(i, _)| i).collect();
        assert_eq!(support, vec![2]);
    }

    #[test]
    fn greedy_gq_matches_q_learning_from_zero() {
        let phis = table();
        let mut gq = GqState::new(6, TargetPolicy::Greedy, 0.0, 0.25, 0.1).unwrap();
        let mut q = QLambda::new(6, 0.0, 0.25).unwrap();
        let t = tr(&phis, 1, 0, -1.5, 0);
        let d1 = gq.step(&t).unwrap();
        let d2 = q.step(&t).unwrap();
        assert_eq!(d1, d2);
        assert_eq!(gq.v, q.v);
    }

    #[test]
    fn greedy_gq_ratio_is_zero_off_greedy() {
        let phis = table();
        let mut gq = GqState::new(6, TargetPolicy::Greedy, 0.5, 0.1, 0.1).unwrap();
        gq.v[3] = 1.0;
        gq.step(&tr(&phis, 1, 0, 1.0, 0)).unwrap();
        gq.step(&tr(&phis, 1, 2, 1.0, 0)).unwrap();
        // Only the fresh phi_sa survives: the earlier trace was multiplied by rho = 0.
        assert_eq!(gq.trace().get(3), 0.0);
        assert_eq!(gq.trace().get(5), 1.0);
    }

    #[test]
    fn hot_softmax_averages_next_features() {
        let phis = table();
        let mut gq = GqState::new(6, TargetPolicy::Softmax(SoftmaxTarget::new(100.0).unwrap()), 0.0, 0.1, 0.1).unwrap();
        gq.v = vec![0.0, 0.0, 0.0, 1.0, 0.0, -0.5];
        let bar = gq.expected_features(&phis[1]);
        for i in 3..6 {
            assert!((bar.get(i) - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn cold_softmax_matches_greedy_delta() {
        let phis = table();
        let v = vec![0.3, -0.2, 0.1, 0.5, 0.502, -1.0];
        let mut greedy = GqState::new(6, TargetPolicy::Greedy, 0.0, 0.1, 0.1).unwrap();
        let mut soft = GqState::new(6, TargetPolicy::Softmax(SoftmaxTarget::new(1e-6).unwrap()), 0.0, 0.1, 0.1).unwrap();
        greedy.v = v.clone();
        soft.v = v;
        let t = tr(&phis, 0, 0, 1.0, 1);
        let a = greedy.step(&t).unwrap();
        let b = soft.step(&t).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn zero_alpha_w_is_importance_weighted_td() {
        let phis = table();
        let target = TargetPolicy::Softmax(SoftmaxTarget::new(0.5).unwrap());
        let mut gq = GqState::new(6, target, 0.0, 0.2, 0.0).unwrap();
        gq.v = vec![0.1, 0.2, 0.3, -0.1, 0.0, 0.4];
        let t = tr(&phis, 0, 1, 0.5, 1);
        let bar = gq.expected_features(&phis[1]).to_dense();
        let delta = 0.5 + 0.9 * bar.iter().zip(&gq.v).map(|(a, b)| a * b).sum::<f64>() - gq.v[1];
        let mut expected = gq.v.clone();
        expected[1] += 0.2 * delta;
        gq.step(&t).unwrap();
        for (a, b) in gq.v.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(gq.w.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn invalid_configuration() {
        assert!(QLambda::new(2, 1.2, 0.1).is_err());
        assert!(GqState::new(2, TargetPolicy::Greedy, 0.0, 0.1, -0.1).is_err());
    }
}
