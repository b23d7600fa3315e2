//! The Off-PAC actor and the composed agent.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::critic::{CriticState, Transition};
use crate::error::{check_weight, Diverged, Error, Result};
use crate::features::SparseFeatures;
use crate::policies::GibbsPolicy;
use crate::trace::{SparseTrace, WeightedIndices};

/// Policy weights `u` (inside a Gibbs policy) and the score trace `e_u`.
#[derive(Debug, Clone)]
pub struct ActorState {
    pub policy: GibbsPolicy,
    trace: SparseTrace,
}

impl ActorState {
    pub fn new(dimension: usize) -> Self {
        Self {
            policy: GibbsPolicy::new(dimension),
            trace: SparseTrace::new(dimension),
        }
    }

    pub fn trace(&self) -> &SparseTrace {
        &self.trace
    }

    pub fn reset_traces(&mut self) {
        self.trace.clear();
    }

    /// `e_u <- rho (psi + gamma(s) lambda e_u)`, then `u <- u + alpha_u delta e_u`.
    pub fn step(
        &mut self,
        psi: &WeightedIndices,
        rho: f64,
        delta: f64,
        gamma_s: f64,
        lambda: f64,
        alpha_u: f64,
    ) -> std::result::Result<(), Diverged> {
        self.trace.decay(gamma_s * lambda);
        self.trace.add_weighted(psi);
        self.trace.scale(rho);

        let step = alpha_u * delta;
        let u = self.policy.weights_mut();
        let mut ok = true;
        for (i, e) in self.trace.iter() {
            u[i] += step * e;
            ok &= check_weight(u[i]).is_ok();
        }
        if ok {
            Ok(())
        } else {
            Err(Diverged)
        }
    }
}

/// Step sizes and trace decay, already divided by any feature-count factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffPacParams {
    pub alpha_v: f64,
    pub alpha_w: f64,
    pub alpha_u: f64,
    pub lambda: f64,
}

impl OffPacParams {
    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("alpha_v", self.alpha_v), ("alpha_w", self.alpha_w), ("alpha_u", self.alpha_u)] {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::Config(format!("{name} must be a non-negative finite number, got {a}")));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub delta: f64,
    pub rho: f64,
}

/// Gibbs actor plus GTD(λ) critic.
#[derive(Debug, Clone)]
pub struct OffPacAgent {
    pub actor: ActorState,
    pub critic: CriticState,
    pub params: OffPacParams,
    probs: Vec<f64>,
}

impl OffPacAgent {
    /// `state_dim` is the size of `x_s`, `action_dim` the size of `phi_{s,a}`.
    pub fn new(state_dim: usize, action_dim: usize, params: OffPacParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            actor: ActorState::new(action_dim),
            critic: CriticState::new(state_dim),
            params,
            probs: Vec::new(),
        })
    }

    pub fn policy(&self) -> &GibbsPolicy {
        &self.actor.policy
    }

    /// Full per-step sequence: TD error and importance ratio, critic update,
    /// then actor update. `phis` holds `phi_{s,b}` for every action `b`.
    pub fn step(&mut self, t: &Transition<'_>, phis: &[SparseFeatures]) -> std::result::Result<StepInfo, Diverged> {
        let p = self.params;
        self.actor.policy.probs_into(phis, &mut self.probs);
        let rho = self.probs[t.action] / t.b_prob;
        let delta = self.critic.step(t, rho, p.lambda, p.alpha_v, p.alpha_w)?;
        let psi = GibbsPolicy::score_with_probs(phis, &self.probs, t.action);
        self.actor.step(&psi, rho, delta, t.gamma_s, p.lambda, p.alpha_u)?;
        Ok(StepInfo { delta, rho })
    }

    pub fn episode_reset(&mut self) {
        self.actor.reset_traces();
        self.critic.reset_traces();
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightRow {
    index: usize,
    value: f64,
}

/// Writes the non-zero entries of `weights` as `index,value` CSV rows.
pub fn write_weights_csv<W: Write>(weights: &[f64], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for (index, &value) in weights.iter().enumerate() {
        if value != 0.0 {
            out.serialize(WeightRow { index, value })?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Inverse of [`write_weights_csv`].
pub fn read_weights_csv<R: Read>(reader: R, dimension: usize) -> Result<Vec<f64>> {
    let mut weights = vec![0.0; dimension];
    for row in csv::Reader::from_reader(reader).deserialize() {
        let row: WeightRow = row?;
        if row.index >= dimension {
            return Err(Error::InvalidId { id: row.index, bound: dimension });
        }
        weights[row.index] = row.value;
    }
    Ok(weights)
}
