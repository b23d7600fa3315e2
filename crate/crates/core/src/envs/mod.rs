//! Benchmark environments and small tabular MDPs.

mod gridworld;
mod mountain_car;
mod pendulum;
pub mod tabular;

pub use gridworld::{gridworld_reward, gridworld_step, GridWorld, GridWorldState, GRID_ACTIONS};
pub use mountain_car::{mc_step, MountainCar, MountainCarState, MC_ACTIONS};
pub use pendulum::{pendulum_step, wrap_angle, Pendulum, PendulumParams, PendulumState, PENDULUM_TORQUES};
pub use tabular::TabularMDP;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Default episode length cap.
pub const MAX_EPISODE_STEPS: usize = 5000;

/// Outcome of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvStep {
    pub reward: f64,
    /// A true terminal state was reached; the continuation `gamma(s')` is 0.
    pub terminal: bool,
    /// The step cap ended the episode without termination.
    pub truncated: bool,
}

impl EnvStep {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

/// Episodic environment with a continuous observation and discrete actions.
pub trait Environment: Send {
    fn num_actions(&self) -> usize;

    /// Per-dimension `(lows, highs)` of the observation.
    fn bounds(&self) -> (Vec<f64>, Vec<f64>);

    fn reset(&mut self);

    fn observation(&self) -> &[f64];

    /// Applies `action`. Panics on an out-of-range action id.
    fn step(&mut self, action: usize) -> EnvStep;

    /// Steps taken in the current episode.
    fn steps(&self) -> usize;
}

/// Environment selector used by experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    MountainCar,
    Pendulum,
    #[serde(alias = "gridworld")]
    GridWorld,
}

impl EnvKind {
    pub fn name(&self) -> &'static str {
        match self {
            EnvKind::MountainCar => "mountain_car",
            EnvKind::Pendulum => "pendulum",
            EnvKind::GridWorld => "grid_world",
        }
    }

    pub fn num_actions(&self) -> usize {
        match self {
            EnvKind::MountainCar => MC_ACTIONS.len(),
            EnvKind::Pendulum => PENDULUM_TORQUES.len(),
            EnvKind::GridWorld => GRID_ACTIONS.len(),
        }
    }

    /// `rng` drives environment noise only.
    pub fn build(&self, max_steps: usize, rng: ChaCha8Rng) -> Box<dyn Environment> {
        match self {
            EnvKind::MountainCar => Box::new(MountainCar::new(max_steps)),
            EnvKind::Pendulum => Box::new(Pendulum::new(PendulumParams::default(), max_steps)),
            EnvKind::GridWorld => Box::new(GridWorld::new(max_steps, rng)),
        }
    }
}

impl std::str::FromStr for EnvKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "mountain_car" | "mountaincar" => Ok(EnvKind::MountainCar),
            "pendulum" => Ok(EnvKind::Pendulum),
            "grid_world" | "gridworld" => Ok(EnvKind::GridWorld),
            _ => Err(crate::Error::Config(format!("unknown environment '{s}'"))),
        }
    }
}

impl std::fmt::Display for EnvKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn trajectory(kind: EnvKind, seed: u64) -> Vec<(Vec<f64>, f64)> {
        let mut env = kind.build(200, ChaCha8Rng::seed_from_u64(seed));
        let mut actions = ChaCha8Rng::seed_from_u64(seed + 1);
        env.reset();
        let mut out = Vec::new();
        loop {
            let step = env.step(actions.gen_range(0..env.num_actions()));
            out.push((env.observation().to_vec(), step.reward));
            if step.done() {
                break;
            }
        }
        out
    }

    #[test]
    fn same_seed_same_trajectory() {
        for kind in [EnvKind::MountainCar, EnvKind::Pendulum, EnvKind::GridWorld] {
            assert_eq!(trajectory(kind, 9), trajectory(kind, 9));
        }
        assert_ne!(trajectory(EnvKind::GridWorld, 9), trajectory(EnvKind::GridWorld, 10));
    }

    #[test]
    fn observations_stay_in_bounds_and_cap_holds() {
        for kind in [EnvKind::MountainCar, EnvKind::Pendulum, EnvKind::GridWorld] {
            let env = kind.build(200, ChaCha8Rng::seed_from_u64(0));
            let (lo, hi) = env.bounds();
            let traj = trajectory(kind, 4);
            assert!(traj.len() <= 200);
            for (obs, _) in traj {
                for ((x, l), h) in obs.iter().zip(&lo).zip(&hi) {
                    assert!(x >= l && x <= h, "{kind}: {x} outside [{l}, {h}]");
                }
            }
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("gridworld".parse::<EnvKind>().unwrap(), EnvKind::GridWorld);
        assert_eq!(EnvKind::Pendulum.to_string().parse::<EnvKind>().unwrap(), EnvKind::Pendulum);
        assert!("cartpole".parse::<EnvKind>().is_err());
    }
}
