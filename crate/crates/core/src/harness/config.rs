use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envs::{EnvKind, MAX_EPISODE_STEPS};
use crate::error::{Error, Result};
use crate::features::TileCoderConfig;

/// Step-size grid used by the original sweep.
pub const STEP_SIZE_GRID: [f64; 9] = [1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2, 0.1, 0.5, 1.0];
pub const LAMBDA_GRID: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 0.99];
pub const TAU_GRID: [f64; 9] = [0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Behavior,
    QLambda,
    GreedyGq,
    SoftmaxGq,
    Offpac,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Behavior,
        Algorithm::QLambda,
        Algorithm::GreedyGq,
        Algorithm::SoftmaxGq,
        Algorithm::Offpac,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Behavior => "behavior",
            Algorithm::QLambda => "q_lambda",
            Algorithm::GreedyGq => "greedy_gq",
            Algorithm::SoftmaxGq => "softmax_gq",
            Algorithm::Offpac => "offpac",
        }
    }

    pub fn uses_alpha_w(&self) -> bool {
        matches!(self, Algorithm::GreedyGq | Algorithm::SoftmaxGq | Algorithm::Offpac)
    }

    pub fn uses_alpha_u(&self) -> bool {
        matches!(self, Algorithm::Offpac)
    }

    pub fn uses_tau(&self) -> bool {
        matches!(self, Algorithm::SoftmaxGq)
    }

    pub fn learns(&self) -> bool {
        !matches!(self, Algorithm::Behavior)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
    }
}

/// One experiment cell. Step sizes are raw values; the learners receive
/// them divided by the number of active features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub config_id: usize,
    pub env: EnvKind,
    pub algorithm: Algorithm,
    pub alpha_v: f64,
    pub alpha_w: f64,
    pub alpha_u: f64,
    pub tau: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub num_episodes: usize,
    pub num_runs: usize,
    pub eval_points: usize,
    pub eval_episodes: usize,
    pub max_steps: usize,
    pub seed: u64,
    /// Empty state bounds are filled in from the environment.
    pub tile_coder: TileCoderConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            config_id: 0,
            env: EnvKind::MountainCar,
            algorithm: Algorithm::Offpac,
            alpha_v: 0.1,
            alpha_w: 0.0,
            alpha_u: 0.1,
            tau: 1.0,
            lambda: 0.0,
            gamma: 0.99,
            num_episodes: 5000,
            num_runs: 30,
            eval_points: 20,
            eval_episodes: 5,
            max_steps: MAX_EPISODE_STEPS,
            seed: 0,
            tile_coder: TileCoderConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("alpha_v", self.alpha_v), ("alpha_w", self.alpha_w), ("alpha_u", self.alpha_u)] {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::Config(format!("{name} must be a non-negative finite number, got {a}")));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if self.algorithm.uses_tau() && !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if self.num_episodes == 0 || self.num_runs == 0 || self.eval_episodes == 0 || self.max_steps == 0 {
            return Err(Error::Config("episode, run and step counts must be positive".into()));
        }
        if self.eval_points == 0 || self.eval_points > self.num_episodes {
            return Err(Error::Config(format!(
                "eval_points must lie in 1..={} (num_episodes)",
                self.num_episodes
            )));
        }
        self.resolved_tile_coder().validate()
    }

    /// Tile coder with the environment's bounds filled in when missing.
    pub fn resolved_tile_coder(&self) -> TileCoderConfig {
        let mut tc = self.tile_coder.clone();
        if tc.state_lows.is_empty() && tc.state_highs.is_empty() {
            let (lo, hi) = self.env.build(1, rand::SeedableRng::seed_from_u64(0)).bounds();
            tc.state_lows = lo;
            tc.state_highs = hi;
        }
        tc
    }

    /// The divisor applied to every raw step size (active features per
    /// encoding, i.e. tilings plus the bias).
    pub fn step_size_divisor(&self) -> f64 {
        self.tile_coder.active_features() as f64
    }

    /// `(alpha_v, alpha_w, alpha_u)` after division.
    pub fn effective_alphas(&self) -> (f64, f64, f64) {
        let k = self.step_size_divisor();
        (self.alpha_v / k, self.alpha_w / k, self.alpha_u / k)
    }

    /// Episodes after which evaluation happens: `ceil(k E / P)` for
    /// `k = 1..=P`.
    pub fn checkpoints(&self) -> Vec<usize> {
        let (e, p) = (self.num_episodes, self.eval_points);
        (1..=p).map(|k| (k * e).div_ceil(p)).collect()
    }
}

/// Hyperparameter grid over a base configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ExperimentConfig,
    pub algorithms: Vec<Algorithm>,
    pub alpha_v: Vec<f64>,
    pub alpha_w: Vec<f64>,
    pub alpha_u: Vec<f64>,
    pub tau: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let mut alpha_w = vec![0.0];
        alpha_w.extend(STEP_SIZE_GRID);
        Self {
            base: ExperimentConfig::default(),
            algorithms: vec![Algorithm::Offpac],
            alpha_v: STEP_SIZE_GRID.to_vec(),
            alpha_w,
            alpha_u: STEP_SIZE_GRID.to_vec(),
            tau: TAU_GRID.to_vec(),
            lambda: LAMBDA_GRID.to_vec(),
        }
    }
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::Empty("sweep algorithms"));
        }
        for cell in self.cells() {
            cell.validate()?;
        }
        Ok(())
    }

    /// Cartesian product over the values each algorithm actually uses.
    /// Parameters an algorithm ignores are set to 0; ids count up from 0
    /// in a fixed nested order.
    pub fn cells(&self) -> Vec<ExperimentConfig> {
        let or_zero = |used: bool, xs: &[f64]| if used { xs.to_vec() } else { vec![0.0] };
        let mut out = Vec::new();
        for &alg in &self.algorithms {
            let learns = alg.learns();
            for &alpha_v in &or_zero(learns, &self.alpha_v) {
                for &alpha_w in &or_zero(alg.uses_alpha_w(), &self.alpha_w) {
                    for &alpha_u in &or_zero(alg.uses_alpha_u(), &self.alpha_u) {
                        for &tau in &or_zero(alg.uses_tau(), &self.tau) {
                            for &lambda in &or_zero(learns, &self.lambda) {
                                out.push(ExperimentConfig {
                                    config_id: out.len(),
                                    algorithm: alg,
                                    alpha_v,
                                    alpha_w,
                                    alpha_u,
                                    tau,
                                    lambda,
                                    ..self.base.clone()
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoints_are_evenly_spaced() {
        let cfg = ExperimentConfig { num_episodes: 5000, eval_points: 20, ..Default::default() };
        let cps = cfg.checkpoints();
        assert_eq!(cps.len(), 20);
        assert_eq!(cps[0], 250);
        assert_eq!(cps[1], 500);
        assert_eq!(*cps.last().unwrap(), 5000);
        let odd = ExperimentConfig { num_episodes: 10, eval_points: 3, ..Default::default() };
        assert_eq!(odd.checkpoints(), vec![4, 7, 10]);
    }

    #[test]
    fn step_sizes_are_divided_by_eleven() {
        let cfg = ExperimentConfig { alpha_v: 1.1, alpha_w: 0.0, alpha_u: 0.55, ..Default::default() };
        let (v, w, u) = cfg.effective_alphas();
        assert!((v - 0.1).abs() < 1e-15 && w == 0.0 && (u - 0.05).abs() < 1e-15);
    }

    #[test]
    fn toml_round_trip_and_defaults() {
        let cfg = ExperimentConfig::from_toml_str("env = \"grid_world\"\nalgorithm = \"greedy_gq\"\nlambda = 0.2\n").unwrap();
        assert_eq!(cfg.env, EnvKind::GridWorld);
        assert_eq!(cfg.gamma, 0.99);
        assert_eq!(cfg.tile_coder.num_tilings, 10);
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("lambda = 1.5").is_err());
        assert!(ExperimentConfig::from_toml_str("algorithm = \"softmax_gq\"\ntau = 0.0").is_err());
    }

    #[test]
    fn resolved_bounds_follow_the_environment() {
        let cfg = ExperimentConfig { env: EnvKind::MountainCar, ..Default::default() };
        let tc = cfg.resolved_tile_coder();
        assert_eq!(tc.state_lows, vec![-1.2, -0.07]);
        assert_eq!(tc.state_highs, vec![0.6, 0.07]);
    }

    #[test]
    fn sweep_grid_sizes() {
        let spec = SweepSpec {
            algorithms: vec![Algorithm::Behavior, Algorithm::QLambda, Algorithm::SoftmaxGq],
            alpha_v: vec![0.1, 0.5],
            alpha_w: vec![0.0, 0.01],
            alpha_u: vec![1.0],
            tau: vec![0.1, 1.0, 10.0],
            lambda: vec![0.0, 0.4],
            ..Default::default()
        };
        let cells = spec.cells();
        // 1 + 2*2 + 2*2*3*2
        assert_eq!(cells.len(), 1 + 4 + 24);
        assert!(cells.iter().enumerate().all(|(i, c)| c.config_id == i));
        assert_eq!(cells[0].alpha_v, 0.0);
        assert!(cells[1..5].iter().all(|c| c.tau == 0.0 && c.alpha_w == 0.0));
    }

    #[test]
    fn paper_grids() {
        assert_eq!(LAMBDA_GRID, [0.0, 0.2, 0.4, 0.6, 0.8, 0.99]);
        assert_eq!(TAU_GRID, [0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0]);
        assert_eq!(STEP_SIZE_GRID[0], 1e-4);
        assert_eq!(STEP_SIZE_GRID[1], 5e-4);
        assert_eq!(*STEP_SIZE_GRID.last().unwrap(), 1.0);
    }
}
