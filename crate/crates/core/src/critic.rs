//! GTD(λ) off-policy linear state-value learner.

use crate::error::{check_weight, Diverged, Error, Result};
use crate::features::SparseFeatures;
use crate::trace::SparseTrace;

/// One behaviour-policy sample `(x_s, a, r, x_s', gamma(s), gamma(s'), b(a|s))`.
#[derive(Debug, Clone, Copy)]
pub struct Transition<'a> {
    pub x_s: &'a SparseFeatures,
    pub action: usize,
    pub b_prob: f64,
    pub reward: f64,
    pub x_sp: &'a SparseFeatures,
    pub gamma_s: f64,
    /// Zero on terminal transitions.
    pub gamma_sp: f64,
}

impl Transition<'_> {
    pub fn validate(&self) -> Result<()> {
        if !(self.b_prob > 0.0 && self.b_prob <= 1.0) {
            return Err(Error::InvalidProbability {
                value: self.b_prob,
                context: "behaviour probability must lie in (0, 1]",
            });
        }
        for g in [self.gamma_s, self.gamma_sp] {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::Config(format!("discount {g} outside [0, 1]")));
            }
        }
        if self.x_s.dimension() != self.x_sp.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.x_s.dimension(),
                actual: self.x_sp.dimension(),
            });
        }
        Ok(())
    }
}

/// `delta = r + gamma(s') v.x_s' - v.x_s`.
#[inline]
pub fn td_error(v: &[f64], t: &Transition<'_>) -> f64 {
    t.reward + t.gamma_sp * t.x_sp.dot(v) - t.x_s.dot(v)
}

/// Critic weights `v`, correction weights `w` and trace `e_v`.
#[derive(Debug, Clone)]
pub struct CriticState {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    trace: SparseTrace,
}

impl CriticState {
    pub fn new(dimension: usize) -> Self {
        Self {
            v: vec![0.0; dimension],
            w: vec![0.0; dimension],
            trace: SparseTrace::new(dimension),
        }
    }

    pub fn dimension(&self) -> usize {
        self.v.len()
    }

    pub fn trace(&self) -> &SparseTrace {
        &self.trace
    }

    pub fn value(&self, x: &SparseFeatures) -> f64 {
        x.dot(&self.v)
    }

    pub fn reset_traces(&mut self) {
        self.trace.clear();
    }

    /// One GTD(λ) update. Returns the TD error computed from the
    /// pre-update weights.
    ///
    /// The trace is updated first, then `v` and `w` are moved using the
    /// old `w` for both corrections.
    pub fn step(
        &mut self,
        t: &Transition<'_>,
        rho: f64,
        lambda: f64,
        alpha_v: f64,
        alpha_w: f64,
    ) -> std::result::Result<f64, Diverged> {
        debug_assert_eq!(t.x_s.dimension(), self.dimension());
        let delta = td_error(&self.v, t);

        self.trace.decay(t.gamma_s * lambda);
        self.trace.add_features(t.x_s, 1.0);
        self.trace.scale(rho);

        let we = self.trace.dot(&self.w);
        let wx = t.x_s.dot(&self.w);
        let correction = t.gamma_sp * (1.0 - lambda) * we;

        let mut ok = true;
        for &i in self.trace.support() {
            let e = self.trace.get(i);
            let x = if t.x_s.contains(i) { 1.0 } else { 0.0 };
            self.v[i] += alpha_v * (delta * e - correction * x);
            self.w[i] += alpha_w * (delta * e - wx * x);
            ok &= check_weight(self.v[i]).is_ok() && check_weight(self.w[i]).is_ok();
        }
        // With rho = 0 the trace is empty but x_s still drives both corrections.
        for &i in t.x_s.indices() {
            if !self.trace.contains(i) {
                self.v[i] += alpha_v * (delta * 0.0 - correction);
                self.w[i] += alpha_w * (delta * 0.0 - wx);
                ok &= check_weight(self.v[i]).is_ok() && check_weight(self.w[i]).is_ok();
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

    fn feats(idx: &[usize], dim: usize) -> SparseFeatures {
        SparseFeatures::new(idx.to_vec(), dim).unwrap()
    }

    fn transition<'a>(x: &'a SparseFeatures, xp: &'a SparseFeatures, r: f64, gp: f64) -> Transition<'a> {
        Transition { x_s: x, action: 0, b_prob: 0.5, reward: r, x_sp: xp, gamma_s: 0.99, gamma_sp: gp }
    }

    #[test]
    fn td_error_examples() {
        let x = feats(&[0], 2);
        let xp = feats(&[1], 2);
        assert_eq!(td_error(&[0.0, 0.0], &transition(&x, &xp, 1.5, 0.99)), 1.5);
        assert_eq!(td_error(&[2.0, 3.0], &transition(&x, &xp, 1.0, 0.0)), -1.0);
        let d = td_error(&[2.0, 3.0], &transition(&x, &xp, -1.0, 0.99));
        assert!((d + 0.03).abs() < 1e-12);
    }

    #[test]
    fn zero_reward_from_zero_weights() {
        let x = feats(&[0, 2], 4);
        let xp = feats(&[1, 3], 4);
        let mut c = CriticState::new(4);
        let d = c.step(&transition(&x, &xp, 0.0, 0.99), 1.7, 0.5, 0.1, 0.1).unwrap();
        assert_eq!(d, 0.0);
        assert!(c.v.iter().chain(&c.w).all(|&x| x == 0.0));
        assert_eq!(c.trace().to_dense(), vec![1.7, 0.0, 1.7, 0.0]);
    }

    #[test]
    fn reduces_to_td0() {
        let x = feats(&[0, 2], 4);
        let xp = feats(&[1, 3], 4);
        let mut c = CriticState::new(4);
        c.v = vec![0.5, -0.25, 1.0, 2.0];
        let t = transition(&x, &xp, -1.0, 0.9);
        let d = td_error(&c.v, &t);
        let mut expected = c.v.clone();
        for &i in x.indices() {
            expected[i] += 0.1 * d;
        }
        c.step(&t, 1.0, 0.0, 0.1, 0.05).unwrap();
        for (a, b) in c.v.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_ratio_leaves_v_and_shrinks_w() {
        let x = feats(&[1], 3);
        let xp = feats(&[2], 3);
        let mut c = CriticState::new(3);
        c.v = vec![0.1, 0.2, 0.3];
        c.w = vec![0.0, 0.5, 0.0];
        c.step(&transition(&x, &xp, 3.0, 0.99), 0.0, 0.5, 0.1, 0.1).unwrap();
        assert_eq!(c.v, vec![0.1, 0.2, 0.3]);
        assert!((c.w[1] - 0.45).abs() < 1e-15);
        assert!(c.trace().is_zero());
    }

    #[test]
    fn reset_makes_next_step_look_like_lambda_zero() {
        let x = feats(&[0], 3);
        let xp = feats(&[1], 3);
        let t = transition(&x, &xp, 1.0, 0.99);
        let mut a = CriticState::new(3);
        a.step(&t, 1.0, 1.0, 0.1, 0.1).unwrap();
        let mut b = a.clone();
        a.reset_traces();
        a.reset_traces();
        b.reset_traces();
        let va = a.v.clone();
        a.step(&t, 1.0, 1.0, 0.1, 0.1).unwrap();
        b.step(&t, 1.0, 0.0, 0.1, 0.1).unwrap();
        assert_eq!(a.trace().to_dense(), b.trace().to_dense());
        assert_ne!(a.v, va);
    }

    #[test]
    fn huge_step_reports_divergence() {
        let x = feats(&[0], 2);
        let xp = feats(&[1], 2);
        let mut c = CriticState::new(2);
        assert_eq!(c.step(&transition(&x, &xp, 1e12, 0.0), 1.0, 0.0, 1.0, 0.0), Err(Diverged));
    }

    #[test]
    fn transition_validation() {
        let x = feats(&[0], 2);
        let mut t = transition(&x, &x, 0.0, 0.5);
        assert!(t.validate().is_ok());
        t.b_prob = 0.0;
        assert!(t.validate().is_err());
        t.b_prob = 0.5;
        t.gamma_sp = 1.5;
        assert!(t.validate().is_err());
    }
}
