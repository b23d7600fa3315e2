//! Exact computations on tabular MDPs: stationary distributions, values,
//! the off-policy objective and its gradients, projected Bellman error and
//! off-policy λ-returns.
//!
//! Policies are flattened `[s][a]` probability tables. Feature tables are
//! indexed `phis[s][a]` for state-action features and `xs[s]` for state
//! features.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::envs::TabularMDP;
use crate::error::{Error, Result};
use crate::features::SparseFeatures;
use crate::policies::GibbsPolicy;

const STATIONARY_TOL: f64 = 1e-12;
const STATIONARY_MAX_ITERS: usize = 1_000_000;

/// Step used for the central-difference gradient of the objective.
pub const FD_STEP: f64 = 1e-6;

fn identity_minus(m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::identity(m.nrows(), m.ncols()) - m
}

fn p_pi_matrix(m: &TabularMDP, pi: &[f64]) -> DMatrix<f64> {
    let n = m.num_states();
    DMatrix::from_row_slice(n, n, &m.state_transitions(pi))
}

/// `P_pi Gamma`, i.e. `P_pi[s][s'] gamma(s')`.
fn discounted_transitions(m: &TabularMDP, pi: &[f64]) -> DMatrix<f64> {
    let mut p = p_pi_matrix(m, pi);
    for sp in 0..m.num_states() {
        let g = m.gamma(sp);
        p.column_mut(sp).scale_mut(g);
    }
    p
}

fn expected_rewards(m: &TabularMDP, pi: &[f64]) -> DVector<f64> {
    let a_n = m.num_actions();
    DVector::from_fn(m.num_states(), |s, _| {
        (0..a_n).map(|a| pi[s * a_n + a] * m.expected_reward(s, a)).sum()
    })
}

fn check_policy(m: &TabularMDP, pi: &[f64]) -> Result<()> {
    let want = m.num_states() * m.num_actions();
    if pi.len() != want {
        return Err(Error::DimensionMismatch { expected: want, actual: pi.len() });
    }
    Ok(())
}

fn is_irreducible(p: &[f64], n: usize) -> bool {
    // Every state must reach every other through positive-probability edges.
    (0..n).all(|start| {
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(s) = stack.pop() {
            for sp in 0..n {
                if p[s * n + sp] > 0.0 && !seen[sp] {
                    seen[sp] = true;
                    stack.push(sp);
                }
            }
        }
        seen.into_iter().all(|x| x)
    })
}

/// Limiting state distribution under the behaviour policy, by power
/// iteration from state 0.
pub fn stationary_distribution(m: &TabularMDP) -> Result<Vec<f64>> {
    let n = m.num_states();
    let b: Vec<f64> = (0..n).flat_map(|s| m.behavior_row(s).to_vec()).collect();
    let p = m.state_transitions(&b);
    if !is_irreducible(&p, n) {
        return Err(Error::Oracle("behaviour chain is reducible".into()));
    }
    let mut d = vec![0.0; n];
    d[0] = 1.0;
    let mut next = vec![0.0; n];
    for _ in 0..STATIONARY_MAX_ITERS {
        next.iter_mut().for_each(|x| *x = 0.0);
        for s in 0..n {
            for sp in 0..n {
                next[sp] += d[s] * p[s * n + sp];
            }
        }
        let gap = d.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut d, &mut next);
        if gap < STATIONARY_TOL {
            let z: f64 = d.iter().sum();
            return Ok(d.into_iter().map(|x| x / z).collect());
        }
    }
    Err(Error::Oracle("power iteration did not converge (periodic chain?)".into()))
}

/// Exact `V^{pi,gamma}` and `Q^{pi,gamma}` (the latter flattened `[s][a]`).
pub fn exact_values(m: &TabularMDP, pi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_policy(m, pi)?;
    let n = m.num_states();
    let a_n = m.num_actions();
    let a = identity_minus(&discounted_transitions(m, pi));
    let r = expected_rewards(m, pi);
    let v = a
        .clone()
        .lu()
        .solve(&r)
        .ok_or_else(|| Error::Oracle("Bellman system is singular".into()))?;
    let residual = (&a * &v - &r).amax();
    if !residual.is_finite() || residual > 1e-12 * (1.0 + v.amax()) {
        return Err(Error::Oracle(format!("Bellman residual {residual} too large")));
    }
    let v: Vec<f64> = v.iter().copied().collect();
    let mut q = vec![0.0; n * a_n];
    for s in 0..n {
        for act in 0..a_n {
            q[s * a_n + act] = (0..n)
                .map(|sp| m.p(s, act, sp) * (m.r(s, act, sp) + m.gamma(sp) * v[sp]))
                .sum();
        }
    }
    Ok((v, q))
}

/// Optimal action values by value iteration.
pub fn optimal_q(m: &TabularMDP, sweeps: usize) -> Vec<f64> {
    let n = m.num_states();
    let a_n = m.num_actions();
    let mut q = vec![0.0; n * a_n];
    for _ in 0..sweeps {
        let vmax: Vec<f64> = (0..n)
            .map(|s| q[s * a_n..(s + 1) * a_n].iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        for s in 0..n {
            for a in 0..a_n {
                q[s * a_n + a] = (0..n)
                    .map(|sp| m.p(s, a, sp) * (m.r(s, a, sp) + m.gamma(sp) * vmax[sp]))
                    .sum();
            }
        }
    }
    q
}

/// Gibbs policy table for weights `u` over features `phis[s][a]`.
pub fn gibbs_table(u: &[f64], phis: &[Vec<SparseFeatures>]) -> Vec<f64> {
    let pol = GibbsPolicy::from_weights(u.to_vec());
    phis.iter().flat_map(|row| pol.probs(row)).collect()
}

/// Everything the policy-gradient checks need at one parameter vector.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub d_b: Vec<f64>,
    pub v: Vec<f64>,
    pub q: Vec<f64>,
    pub j: f64,
    pub g: Vec<f64>,
    pub grad_j: Vec<f64>,
}

/// `J(u) = sum_s d_b(s) V^{pi_u}(s)`.
pub fn objective(m: &TabularMDP, d_b: &[f64], u: &[f64], phis: &[Vec<SparseFeatures>]) -> Result<f64> {
    let (v, _) = exact_values(m, &gibbs_table(u, phis))?;
    Ok(d_b.iter().zip(&v).map(|(d, v)| d * v).sum())
}

/// `g(u) = sum_s d_b(s) sum_a grad pi(a|s) Q(s,a)` with the analytic
/// Gibbs gradient `grad pi = pi psi`.
pub fn approximate_gradient(
    m: &TabularMDP,
    d_b: &[f64],
    u: &[f64],
    phis: &[Vec<SparseFeatures>],
) -> Result<Vec<f64>> {
    let pol = GibbsPolicy::from_weights(u.to_vec());
    let pi = gibbs_table(u, phis);
    let (_, q) = exact_values(m, &pi)?;
    let a_n = m.num_actions();
    let mut g = vec![0.0; u.len()];
    for (s, row) in phis.iter().enumerate() {
        let probs = &pi[s * a_n..(s + 1) * a_n];
        for a in 0..a_n {
            let coef = d_b[s] * probs[a] * q[s * a_n + a];
            for &(i, c) in GibbsPolicy::score_with_probs(row, probs, a).entries() {
                g[i] += coef * c;
            }
        }
        debug_assert_eq!(pol.probs(row), probs);
    }
    Ok(g)
}

/// Central finite differences of `J` with step [`FD_STEP`].
pub fn finite_difference_gradient(
    m: &TabularMDP,
    d_b: &[f64],
    u: &[f64],
    phis: &[Vec<SparseFeatures>],
) -> Result<Vec<f64>> {
    let mut probe = u.to_vec();
    let mut grad = vec![0.0; u.len()];
    for k in 0..u.len() {
        probe[k] = u[k] + FD_STEP;
        let up = objective(m, d_b, &probe, phis)?;
        probe[k] = u[k] - FD_STEP;
        let down = objective(m, d_b, &probe, phis)?;
        probe[k] = u[k];
        grad[k] = (up - down) / (2.0 * FD_STEP);
    }
    Ok(grad)
}

pub fn objective_and_gradients(m: &TabularMDP, u: &[f64], phis: &[Vec<SparseFeatures>]) -> Result<OracleSolution> {
    if phis.len() != m.num_states() || phis.iter().any(|row| row.len() != m.num_actions()) {
        return Err(Error::Config("feature table does not match the MDP".into()));
    }
    let d_b = stationary_distribution(m)?;
    let pi = gibbs_table(u, phis);
    let (v, q) = exact_values(m, &pi)?;
    let j = d_b.iter().zip(&v).map(|(d, v)| d * v).sum();
    let g = approximate_gradient(m, &d_b, u, phis)?;
    let grad_j = finite_difference_gradient(m, &d_b, u, phis)?;
    Ok(OracleSolution { d_b, v, q, j, g, grad_j })
}

fn feature_matrix(xs: &[SparseFeatures]) -> DMatrix<f64> {
    let k = xs.first().map_or(0, |x| x.dimension());
    let mut x = DMatrix::zeros(xs.len(), k);
    for (s, f) in xs.iter().enumerate() {
        for &i in f.indices() {
            x[(s, i)] = 1.0;
        }
    }
    x
}

struct Projection {
    x: DMatrix<f64>,
    d: DMatrix<f64>,
    /// `(I - lambda P Gamma)^{-1}`
    m_inv: DMatrix<f64>,
    p_gamma: DMatrix<f64>,
    r: DVector<f64>,
}

fn projection_parts(m: &TabularMDP, pi: &[f64], xs: &[SparseFeatures], lambda: f64) -> Result<Projection> {
    check_policy(m, pi)?;
    if xs.len() != m.num_states() {
        return Err(Error::DimensionMismatch { expected: m.num_states(), actual: xs.len() });
    }
    let d_b = stationary_distribution(m)?;
    let x = feature_matrix(xs);
    let d = DMatrix::from_diagonal(&DVector::from_vec(d_b));
    let p_gamma = discounted_transitions(m, pi);
    let m_inv = identity_minus(&(&p_gamma * lambda))
        .try_inverse()
        .ok_or_else(|| Error::Oracle("I - lambda P Gamma is singular".into()))?;
    Ok(Projection { x, d, m_inv, p_gamma, r: expected_rewards(m, pi) })
}

fn gram_inverse(p: &Projection) -> Result<DMatrix<f64>> {
    let gram = p.x.transpose() * &p.d * &p.x;
    let rank = gram.rank(1e-12);
    if rank < gram.ncols() {
        return Err(Error::Oracle(format!("feature matrix is rank deficient ({rank} < {})", gram.ncols())));
    }
    gram.try_inverse().ok_or_else(|| Error::Oracle("singular Gram matrix".into()))
}

/// `T^lambda V = (I - lambda P Gamma)^{-1} (r + (1 - lambda) P Gamma V)`.
pub fn lambda_bellman(m: &TabularMDP, pi: &[f64], values: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_policy(m, pi)?;
    let p_gamma = discounted_transitions(m, pi);
    let m_inv = identity_minus(&(&p_gamma * lambda))
        .try_inverse()
        .ok_or_else(|| Error::Oracle("I - lambda P Gamma is singular".into()))?;
    let out = m_inv * (expected_rewards(m, pi) + (1.0 - lambda) * &p_gamma * DVector::from_column_slice(values));
    Ok(out.iter().copied().collect())
}

/// `|| V - Pi T^lambda V ||^2_D` with `D = diag(d_b)` and `V = X v`.
pub fn mspbe(m: &TabularMDP, pi: &[f64], v: &[f64], xs: &[SparseFeatures], lambda: f64) -> Result<f64> {
    let p = projection_parts(m, pi, xs, lambda)?;
    if v.len() != p.x.ncols() {
        return Err(Error::DimensionMismatch { expected: p.x.ncols(), actual: v.len() });
    }
    let vhat = &p.x * DVector::from_column_slice(v);
    let t = &p.m_inv * (&p.r + (1.0 - lambda) * &p.p_gamma * &vhat);
    let proj = &p.x * gram_inverse(&p)? * p.x.transpose() * &p.d * t;
    let diff = vhat - proj;
    Ok((diff.transpose() * &p.d * &diff)[(0, 0)])
}

/// Weights solving the projected λ-Bellman equation `X v = Pi T^lambda X v`.
pub fn td_fixed_point(m: &TabularMDP, pi: &[f64], xs: &[SparseFeatures], lambda: f64) -> Result<Vec<f64>> {
    let p = projection_parts(m, pi, xs, lambda)?;
    gram_inverse(&p)?;
    let xtd = p.x.transpose() * &p.d;
    let k = p.x.nrows();
    let a = &xtd * (DMatrix::identity(k, k) - (1.0 - lambda) * &p.m_inv * &p.p_gamma) * &p.x;
    let b = &xtd * &p.m_inv * &p.r;
    let v = a.lu().solve(&b).ok_or_else(|| Error::Oracle("TD system is singular".into()))?;
    Ok(v.iter().copied().collect())
}

/// One step of a trajectory as seen from time `t`: the reward `r_{t+1}`,
/// `gamma(s_{t+1})`, `V(s_{t+1})` and `rho_{t+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnStep {
    pub reward: f64,
    pub gamma_next: f64,
    pub value_next: f64,
    pub rho_next: f64,
}

/// Off-policy λ-returns
/// `R_t = r_{t+1} + (1 - lambda) gamma_{t+1} V(s_{t+1}) + lambda gamma_{t+1} rho_{t+1} R_{t+1}`,
/// computed backwards from a terminal step (`gamma_next == 0`).
pub fn forward_lambda_returns(trajectory: &[ReturnStep], lambda: f64) -> Result<Vec<f64>> {
    match trajectory.last() {
        Some(last) if last.gamma_next == 0.0 => {}
        Some(_) => return Err(Error::Oracle("trajectory does not end in a terminal step".into())),
        None => return Err(Error::Empty("trajectory")),
    }
    Ok(lambda_returns_from(trajectory, lambda, 0.0))
}

fn lambda_returns_from(trajectory: &[ReturnStep], lambda: f64, tail: f64) -> Vec<f64> {
    let mut out = vec![0.0; trajectory.len()];
    let mut next = tail;
    for (t, st) in trajectory.iter().enumerate().rev() {
        next = st.reward + (1.0 - lambda) * st.gamma_next * st.value_next + lambda * st.gamma_next * st.rho_next * next;
        out[t] = next;
    }
    out
}

/// Empirical forward- and backward-view actor directions over one
/// behaviour stream.
#[derive(Debug, Clone)]
pub struct ForwardBackward {
    pub mean_forward: Vec<f64>,
    pub mean_backward: Vec<f64>,
    pub stderr_forward: Vec<f64>,
    pub stderr_backward: Vec<f64>,
    /// Batch-means standard error of the per-step difference.
    pub stderr_difference: Vec<f64>,
}

impl ForwardBackward {
    /// Largest `|forward - backward| / stderr_difference` over components
    /// (0 when the two means coincide exactly).
    pub fn max_z(&self) -> f64 {
        self.mean_forward
            .iter()
            .zip(&self.mean_backward)
            .zip(&self.stderr_difference)
            .map(|((f, b), se)| if f == b { 0.0 } else { (f - b).abs() / se })
            .fold(0.0, f64::max)
    }
}

/// Settings for [`check_forward_backward`].
#[derive(Debug, Clone, Copy)]
pub struct StreamSettings {
    pub burn_in: usize,
    pub num_steps: usize,
    /// Steps appended after the averaging window so the truncated
    /// λ-return recursion has decayed.
    pub tail: usize,
    pub batches: usize,
    pub seed: u64,
}

impl StreamSettings {
    pub fn new(num_steps: usize, seed: u64) -> Self {
        Self { burn_in: 10_000, num_steps, tail: 500, batches: 100, seed }
    }
}

fn batch_stats(series: &[Vec<f64>], dim: usize, batches: usize) -> (Vec<f64>, Vec<f64>) {
    let n = series.len();
    let per = n / batches;
    let mut mean = vec![0.0; dim];
    let mut batch_means = vec![vec![0.0; dim]; batches];
    for (t, row) in series.iter().enumerate() {
        for k in 0..dim {
            mean[k] += row[k];
        }
        let b = (t / per).min(batches - 1);
        for k in 0..dim {
            batch_means[b][k] += row[k];
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut se = vec![0.0; dim];
    for (b, bm) in batch_means.iter().enumerate() {
        let len = if b == batches - 1 { n - per * (batches - 1) } else { per };
        for k in 0..dim {
            let x = bm[k] / len as f64 - mean[k];
            se[k] += x * x;
        }
    }
    for s in se.iter_mut() {
        *s = (*s / (batches * (batches - 1)) as f64).sqrt();
    }
    (mean, se)
}

/// Runs the behaviour policy for `settings.num_steps` steps (after burn-in)
/// with fixed actor weights `u` and critic weights `v`, and averages
/// `rho_t psi_t (R_t - V(s_t))` and `delta_t e_t`, where
/// `e_t = rho_t (psi_t + lambda gamma(s_t) e_{t-1})`.
pub fn check_forward_backward(
    m: &TabularMDP,
    u: &[f64],
    v: &[f64],
    phis: &[Vec<SparseFeatures>],
    xs: &[SparseFeatures],
    lambda: f64,
    settings: StreamSettings,
) -> Result<ForwardBackward> {
    let n = m.num_states();
    let a_n = m.num_actions();
    if settings.batches < 2 || settings.num_steps < settings.batches {
        return Err(Error::Config("need at least two batches of one step".into()));
    }
    let pi = gibbs_table(u, phis);
    let dim = u.len();
    let values: Vec<f64> = xs.iter().map(|x| x.dot(v)).collect();
    let mut psi = vec![vec![0.0; dim]; n * a_n];
    let mut rho = vec![0.0; n * a_n];
    for s in 0..n {
        let probs = &pi[s * a_n..(s + 1) * a_n];
        for a in 0..a_n {
            psi[s * a_n + a] = GibbsPolicy::score_with_probs(&phis[s], probs, a).to_dense();
            rho[s * a_n + a] = probs[a] / m.behavior(s, a);
        }
    }

    let total = settings.burn_in + settings.num_steps + settings.tail;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut states = Vec::with_capacity(total + 1);
    let mut actions = Vec::with_capacity(total + 1);
    let mut rewards = Vec::with_capacity(total);
    let mut s = 0;
    for _ in 0..total {
        let a = m.sample_behavior(s, &mut rng);
        let (sp, r) = m.step(s, a, &mut rng)?;
        states.push(s);
        actions.push(a);
        rewards.push(r);
        s = sp;
    }
    states.push(s);
    actions.push(m.sample_behavior(s, &mut rng));

    // Forward view, truncated at the end of the tail by bootstrapping.
    let steps: Vec<ReturnStep> = (0..total)
        .map(|t| {
            let sp = states[t + 1];
            ReturnStep {
                reward: rewards[t],
                gamma_next: m.gamma(sp),
                value_next: values[sp],
                rho_next: rho[sp * a_n + actions[t + 1]],
            }
        })
        .collect();
    let returns = lambda_returns_from(&steps, lambda, values[states[total]]);

    let window = settings.burn_in..settings.burn_in + settings.num_steps;
    let mut forward = Vec::with_capacity(settings.num_steps);
    let mut backward = Vec::with_capacity(settings.num_steps);
    let mut diff = Vec::with_capacity(settings.num_steps);
    let mut e = vec![0.0; dim];
    for t in 0..settings.burn_in + settings.num_steps {
        let (st, at) = (states[t], actions[t]);
        let sa = st * a_n + at;
        let r_t = rho[sa];
        let decay = lambda * m.gamma(st);
        for k in 0..dim {
            e[k] = r_t * (psi[sa][k] + decay * e[k]);
        }
        if window.contains(&t) {
            let sp = states[t + 1];
            let delta = rewards[t] + m.gamma(sp) * values[sp] - values[st];
            let err = returns[t] - values[st];
            let f: Vec<f64> = (0..dim).map(|k| (r_t * psi[sa][k]) * err).collect();
            let b: Vec<f64> = (0..dim).map(|k| e[k] * delta).collect();
            diff.push(f.iter().zip(&b).map(|(x, y)| x - y).collect());
            forward.push(f);
            backward.push(b);
        }
    }
    let (mean_forward, stderr_forward) = batch_stats(&forward, dim, settings.batches);
    let (mean_backward, stderr_backward) = batch_stats(&backward, dim, settings.batches);
    let (_, stderr_difference) = batch_stats(&diff, dim, settings.batches);
    Ok(ForwardBackward { mean_forward, mean_backward, stderr_forward, stderr_backward, stderr_difference })
}

/// `sum_{s,a,s'} d_b(s) b(a|s) rho(s,a) psi(s,a) P(s'|s,a) gamma(s')
/// (1 - sum_{a'} b(a'|s') rho(s',a')) V(s')`, which vanishes because the
/// importance-weighted next-action mass is one.
pub fn next_ratio_expectation(
    m: &TabularMDP,
    d_b: &[f64],
    u: &[f64],
    phis: &[Vec<SparseFeatures>],
    values: &[f64],
) -> Vec<f64> {
    let a_n = m.num_actions();
    let pi = gibbs_table(u, phis);
    let mass: Vec<f64> = (0..m.num_states())
        .map(|s| (0..a_n).map(|a| m.behavior(s, a) * (pi[s * a_n + a] / m.behavior(s, a))).sum())
        .collect();
    let mut out = vec![0.0; u.len()];
    for s in 0..m.num_states() {
        let probs = &pi[s * a_n..(s + 1) * a_n];
        for a in 0..a_n {
            let b = m.behavior(s, a);
            let rho = probs[a] / b;
            let tail: f64 = (0..m.num_states())
                .map(|sp| m.p(s, a, sp) * m.gamma(sp) * (1.0 - mass[sp]) * values[sp])
                .sum();
            let coef = d_b[s] * b * rho * tail;
            for &(i, c) in GibbsPolicy::score_with_probs(&phis[s], probs, a).entries() {
                out[i] += coef * c;
            }
        }
    }
    out
}

/// `sum_s d_b(s) c(s) sum_a b(a|s) rho(s,a) psi(s,a)`: a state-dependent
/// baseline adds nothing to the expected actor direction.
pub fn baseline_expectation(
    m: &TabularMDP,
    d_b: &[f64],
    u: &[f64],
    phis: &[Vec<SparseFeatures>],
    baseline: &[f64],
) -> Vec<f64> {
    let a_n = m.num_actions();
    let pi = gibbs_table(u, phis);
    let mut out = vec![0.0; u.len()];
    for s in 0..m.num_states() {
        let probs = &pi[s * a_n..(s + 1) * a_n];
        for a in 0..a_n {
            let b = m.behavior(s, a);
            let coef = d_b[s] * baseline[s] * b * (probs[a] / b);
            for &(i, c) in GibbsPolicy::score_with_probs(&phis[s], probs, a).entries() {
                out[i] += coef * c;
            }
        }
    }
    out
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Result of [`ascend`].
#[derive(Debug, Clone)]
pub struct Ascent {
    pub u: Vec<f64>,
    pub g_norm: f64,
    pub iterations: usize,
}

/// Gradient ascent on `J` along `g(u)` with a backtracking (Armijo) step
/// that grows after every accepted move, until `||g|| < tol`.
pub fn ascend(
    m: &TabularMDP,
    u0: &[f64],
    phis: &[Vec<SparseFeatures>],
    tol: f64,
    max_iters: usize,
) -> Result<Ascent> {
    let d_b = stationary_distribution(m)?;
    let mut u = u0.to_vec();
    let mut j = objective(m, &d_b, &u, phis)?;
    let mut g = approximate_gradient(m, &d_b, &u, phis)?;
    let mut step = 1.0;
    for it in 0..max_iters {
        let gn = norm(&g);
        if gn < tol {
            return Ok(Ascent { u, g_norm: gn, iterations: it });
        }
        loop {
            let cand: Vec<f64> = u.iter().zip(&g).map(|(x, d)| x + step * d).collect();
            let jc = objective(m, &d_b, &cand, phis)?;
            if jc >= j + 1e-4 * step * gn * gn {
                u = cand;
                j = jc;
                step *= 2.0;
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                return Err(Error::Oracle("line search failed".into()));
            }
        }
        g = approximate_gradient(m, &d_b, &u, phis)?;
    }
    Err(Error::Oracle(format!("ascent did not reach ||g|| < {tol} in {max_iters} iterations")))
}
