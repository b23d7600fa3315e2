use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig};
use crate::actor::{OffPacAgent, OffPacParams};
use crate::baselines::{ActionTransition, GqState, QLambda, TargetPolicy};
use crate::critic::Transition;
use crate::envs::Environment;
use crate::error::{Diverged, Result};
use crate::features::{hash_words, SparseFeatures, TileCoder, TileCoordinates};
use crate::policies::{action_values, argmax_lowest, sample_categorical, SoftmaxTarget, UniformBehavior};

const STREAM_BEHAVIOR: u64 = 0;
const STREAM_TRAIN_ENV: u64 = 1;
const STREAM_EVAL_ENV: u64 = 2;
const STREAM_EVAL_POLICY: u64 = 3;

/// Seed of run `run` of cell `config_id`, a pure function of its inputs.
pub fn run_seed(base_seed: u64, config_id: usize, run: usize) -> u64 {
    hash_words(&[base_seed, config_id as u64, run as u64])
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Evaluation result at one checkpoint of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_id: usize,
    pub run: usize,
    pub seed: u64,
    /// 1-based checkpoint index.
    pub checkpoint: usize,
    /// Training episodes completed before this evaluation.
    pub episode: usize,
    pub mean_return: f64,
    pub returns: Vec<f64>,
    /// Set once learning has diverged; later checkpoints repeat the last
    /// recorded return.
    pub diverged: bool,
}

impl RunRecord {
    /// Standard error of the per-episode evaluation returns.
    pub fn stderr_return(&self) -> f64 {
        stderr(&self.returns)
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation over `sqrt(n)`; 0 for fewer than two values.
pub(crate) fn stderr(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Features of one visited state.
struct Encoded {
    coords: TileCoordinates,
    x: Option<SparseFeatures>,
    phis: Vec<SparseFeatures>,
}

struct Featurizer {
    coder: TileCoder,
    num_actions: usize,
    with_state: bool,
}

impl Featurizer {
    fn encode(&self, obs: &[f64]) -> Result<Encoded> {
        let coords = self.coder.coordinates(obs)?;
        let x = self.with_state.then(|| self.coder.encode_coordinates(&coords, None));
        let phis = (0..self.num_actions).map(|a| self.coder.encode_coordinates(&coords, Some(a))).collect();
        Ok(Encoded { coords, x, phis })
    }

    /// Re-encodes into existing buffers.
    fn encode_into(&self, obs: &[f64], out: &mut Encoded) -> Result<()> {
        self.coder.coordinates_into(obs, &mut out.coords)?;
        if let Some(x) = out.x.as_mut() {
            self.coder.encode_into(&out.coords, None, x);
        }
        for (a, phi) in out.phis.iter_mut().enumerate() {
            self.coder.encode_into(&out.coords, Some(a), phi);
        }
        Ok(())
    }
}

enum Learner {
    Behavior,
    QLambda(QLambda),
    Gq(GqState),
    OffPac(OffPacAgent),
}

impl Learner {
    fn new(cfg: &ExperimentConfig, dimension: usize) -> Result<Self> {
        let (alpha_v, alpha_w, alpha_u) = cfg.effective_alphas();
        Ok(match cfg.algorithm {
            Algorithm::Behavior => Learner::Behavior,
            Algorithm::QLambda => Learner::QLambda(QLambda::new(dimension, cfg.lambda, alpha_v)?),
            Algorithm::GreedyGq => Learner::Gq(GqState::new(dimension, TargetPolicy::Greedy, cfg.lambda, alpha_v, alpha_w)?),
            Algorithm::SoftmaxGq => {
                let target = TargetPolicy::Softmax(SoftmaxTarget::new(cfg.tau)?);
                Learner::Gq(GqState::new(dimension, target, cfg.lambda, alpha_v, alpha_w)?)
            }
            Algorithm::Offpac => {
                let params = OffPacParams { alpha_v, alpha_w, alpha_u, lambda: cfg.lambda };
                Learner::OffPac(OffPacAgent::new(dimension, dimension, params)?)
            }
        })
    }

    fn reset_traces(&mut self) {
        match self {
            Learner::Behavior => {}
            Learner::QLambda(q) => q.reset_traces(),
            Learner::Gq(g) => g.reset_traces(),
            Learner::OffPac(a) => a.episode_reset(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn update(
        &mut self,
        cur: &Encoded,
        action: usize,
        b_prob: f64,
        reward: f64,
        next: &Encoded,
        gamma_s: f64,
        gamma_sp: f64,
    ) -> std::result::Result<(), Diverged> {
        let at = || ActionTransition {
            phi_s: &cur.phis,
            action,
            b_prob,
            reward,
            phi_sp: &next.phis,
            gamma_s,
            gamma_sp,
        };
        match self {
            Learner::Behavior => Ok(()),
            Learner::QLambda(q) => q.step(&at()).map(|_| ()),
            Learner::Gq(g) => g.step(&at()).map(|_| ()),
            Learner::OffPac(agent) => {
                let (x_s, x_sp) = (cur.x.as_ref().expect("state features"), next.x.as_ref().expect("state features"));
                let t = Transition { x_s, action, b_prob, reward, x_sp, gamma_s, gamma_sp };
                agent.step(&t, &cur.phis).map(|_| ())
            }
        }
    }

    /// Action of the learned target policy; never mutates the learner.
    fn eval_action(&self, phis: &[SparseFeatures], behavior: &UniformBehavior, rng: &mut ChaCha8Rng) -> usize {
        match self {
            Learner::Behavior => behavior.sample(rng),
            Learner::QLambda(q) => argmax_lowest(&action_values(&q.v, phis)),
            Learner::Gq(g) => match g.target {
                TargetPolicy::Greedy => argmax_lowest(&action_values(&g.v, phis)),
                TargetPolicy::Softmax(t) => sample_categorical(&t.probs(&action_values(&g.v, phis)), rng),
            },
            Learner::OffPac(agent) => agent.policy().sample(phis, rng),
        }
    }

    /// Order-sensitive digest of every weight vector, for purity checks.
    fn weight_digest(&self) -> u64 {
        let vecs: Vec<&[f64]> = match self {
            Learner::Behavior => vec![],
            Learner::QLambda(q) => vec![&q.v],
            Learner::Gq(g) => vec![&g.v, &g.w],
            Learner::OffPac(a) => vec![&a.critic.v, &a.critic.w, a.policy().weights()],
        };
        let words: Vec<u64> = vecs.iter().flat_map(|v| v.iter().map(|x| x.to_bits())).collect();
        hash_words(&words)
    }
}

fn evaluate(
    learner: &Learner,
    env: &mut dyn Environment,
    featurizer: &Featurizer,
    behavior: &UniformBehavior,
    episodes: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let mut returns = Vec::with_capacity(episodes);
    let mut enc = featurizer.encode(env.observation())?;
    for _ in 0..episodes {
        env.reset();
        let mut total = 0.0;
        loop {
            featurizer.encode_into(env.observation(), &mut enc)?;
            let step = env.step(learner.eval_action(&enc.phis, behavior, rng));
            total += step.reward;
            if step.done() {
                break;
            }
        }
        returns.push(total);
    }
    Ok(returns)
}

/// Outcome of [`run_single_traced`]: records plus the learner-weight
/// digests taken immediately before and after each evaluation block.
#[derive(Debug, Clone)]
pub struct TracedRun {
    pub records: Vec<RunRecord>,
    pub digests: Vec<(u64, u64)>,
}

/// Trains on behaviour data for `num_episodes` and evaluates the target
/// policy at every checkpoint.
pub fn run_single(cfg: &ExperimentConfig, run: usize) -> Result<Vec<RunRecord>> {
    Ok(execute(cfg, run, false)?.records)
}

pub fn run_single_traced(cfg: &ExperimentConfig, run: usize) -> Result<TracedRun> {
    execute(cfg, run, true)
}

fn execute(cfg: &ExperimentConfig, run: usize, traced: bool) -> Result<TracedRun> {
    cfg.validate()?;
    let seed = run_seed(cfg.seed, cfg.config_id, run);
    let coder = TileCoder::new(cfg.resolved_tile_coder())?;
    let num_actions = cfg.env.num_actions();
    let featurizer = Featurizer {
        coder,
        num_actions,
        with_state: cfg.algorithm == Algorithm::Offpac,
    };
    let behavior = UniformBehavior::new(num_actions)?;
    let b_prob = behavior.prob(0);

    let mut learner = Learner::new(cfg, featurizer.coder.dimension())?;
    let mut env = cfg.env.build(cfg.max_steps, stream(seed, STREAM_TRAIN_ENV));
    let mut eval_env = cfg.env.build(cfg.max_steps, stream(seed, STREAM_EVAL_ENV));
    let mut behavior_rng = stream(seed, STREAM_BEHAVIOR);
    let mut eval_rng = stream(seed, STREAM_EVAL_POLICY);

    let checkpoints = cfg.checkpoints();
    let mut records = Vec::with_capacity(checkpoints.len());
    let mut digests = Vec::with_capacity(checkpoints.len());
    let mut diverged = false;
    let mut last_return = f64::NAN;
    let mut episode = 0;

    for (k, &until) in checkpoints.iter().enumerate() {
        while episode < until {
            episode += 1;
            if diverged || !cfg.algorithm.learns() {
                continue;
            }
            if train_episode(&mut learner, env.as_mut(), &featurizer, b_prob, cfg.gamma, &behavior, &mut behavior_rng)?.is_err() {
                diverged = true;
            }
        }
        let (mean_return, returns) = if diverged {
            (last_return, Vec::new())
        } else {
            let before = traced.then(|| learner.weight_digest());
            let returns = evaluate(&learner, eval_env.as_mut(), &featurizer, &behavior, cfg.eval_episodes, &mut eval_rng)?;
            if let Some(before) = before {
                digests.push((before, learner.weight_digest()));
            }
            (mean(&returns), returns)
        };
        last_return = mean_return;
        records.push(RunRecord {
            config_id: cfg.config_id,
            run,
            seed,
            checkpoint: k + 1,
            episode: until,
            mean_return,
            returns,
            diverged,
        });
    }
    Ok(TracedRun { records, digests })
}

/// One behaviour episode with learning. The outer `Result` carries
/// feature errors, the inner one divergence.
fn train_episode(
    learner: &mut Learner,
    env: &mut dyn Environment,
    featurizer: &Featurizer,
    b_prob: f64,
    gamma: f64,
    behavior: &UniformBehavior,
    rng: &mut impl Rng,
) -> Result<std::result::Result<(), Diverged>> {
    env.reset();
    learner.reset_traces();
    let mut cur = featurizer.encode(env.observation())?;
    let mut next = featurizer.encode(env.observation())?;
    loop {
        let action = behavior.sample(rng);
        let step = env.step(action);
        featurizer.encode_into(env.observation(), &mut next)?;
        let gamma_sp = if step.terminal { 0.0 } else { gamma };
        if let Err(d) = learner.update(&cur, action, b_prob, step.reward, &next, gamma, gamma_sp) {
            return Ok(Err(d));
        }
        if step.done() {
            return Ok(Ok(()));
        }
        std::mem::swap(&mut cur, &mut next);
    }
}
