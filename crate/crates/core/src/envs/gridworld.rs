use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{EnvStep, Environment};

/// Displacement for each action id.
pub const GRID_ACTIONS: [(f64, f64); 5] = [(0.0, 0.0), (-0.05, 0.0), (0.05, 0.0), (0.0, -0.05), (0.0, 0.05)];

const NOISE: f64 = 0.025;
const START: (f64, f64) = (0.2, 0.4);
const GOAL_RADIUS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridWorldState {
    pub x: f64,
    pub y: f64,
}

fn normal_pdf(p: f64, mu: f64, sigma: f64) -> f64 {
    let z = (p - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Reward for arriving at `(px, py)`: -1 minus a penalty from three
/// Gaussian ridges.
pub fn gridworld_reward(px: f64, py: f64) -> f64 {
    let ridges = normal_pdf(px, 0.3, 0.1) * normal_pdf(py, 0.6, 0.03)
        + normal_pdf(px, 0.4, 0.03) * normal_pdf(py, 0.5, 0.1)
        + normal_pdf(px, 0.8, 0.03) * normal_pdf(py, 0.9, 0.1);
    -1.0 - 2.0 * ridges
}

pub fn is_goal(s: GridWorldState) -> bool {
    (1.0 - s.x).abs() + (1.0 - s.y).abs() < GOAL_RADIUS
}

/// Moves by `delta` plus per-component uniform noise, clipped to the unit
/// square. Returns the arrival state, its reward and whether it is a goal.
pub fn gridworld_step<R: Rng + ?Sized>(s: GridWorldState, delta: (f64, f64), rng: &mut R) -> (GridWorldState, f64, bool) {
    let nx = rng.gen_range(-NOISE..=NOISE);
    let ny = rng.gen_range(-NOISE..=NOISE);
    let next = GridWorldState {
        x: (s.x + delta.0 + nx).clamp(0.0, 1.0),
        y: (s.y + delta.1 + ny).clamp(0.0, 1.0),
    };
    (next, gridworld_reward(next.x, next.y), is_goal(next))
}

#[derive(Debug, Clone)]
pub struct GridWorld {
    state: GridWorldState,
    obs: [f64; 2],
    steps: usize,
    max_steps: usize,
    rng: ChaCha8Rng,
}

impl GridWorld {
    pub fn new(max_steps: usize, rng: ChaCha8Rng) -> Self {
        Self {
            state: GridWorldState { x: START.0, y: START.1 },
            obs: [START.0, START.1],
            steps: 0,
            max_steps,
            rng,
        }
    }

    pub fn state(&self) -> GridWorldState {
        self.state
    }
}

impl Environment for GridWorld {
    fn num_actions(&self) -> usize {
        GRID_ACTIONS.len()
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0, 0.0], vec![1.0, 1.0])
    }

    fn reset(&mut self) {
        self.state = GridWorldState { x: START.0, y: START.1 };
        self.obs = [START.0, START.1];
        self.steps = 0;
    }

    fn observation(&self) -> &[f64] {
        &self.obs
    }

    fn step(&mut self, action: usize) -> EnvStep {
        let (next, reward, terminal) = gridworld_step(self.state, GRID_ACTIONS[action], &mut self.rng);
        self.state = next;
        self.obs = [next.x, next.y];
        self.steps += 1;
        EnvStep { reward, terminal, truncated: !terminal && self.steps >= self.max_steps }
    }

    fn steps(&self) -> usize {
        self.steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn reward_on_the_first_ridge() {
        let peak = 1.0 / (0.1 * (2.0 * std::f64::consts::PI).sqrt()) / (0.03 * (2.0 * std::f64::consts::PI).sqrt());
        assert!((peak - 3.989_422_804 * 13.298_076_01).abs() < 1e-6);
        // The second ridge still contributes about 0.124 at this point.
        let r = gridworld_reward(0.3, 0.6);
        assert!((r + 107.352_086_305_359).abs() < 1e-9, "{r}");
        assert!((r - (-1.0 - 2.0 * peak)).abs() < 0.3);
    }

    #[test]
    fn reward_far_from_ridges() {
        assert!((gridworld_reward(0.05, 0.05) + 1.0).abs() < 1e-3);
    }

    #[test]
    fn reward_never_exceeds_minus_one() {
        for i in 0..=50 {
            for j in 0..=50 {
                assert!(gridworld_reward(i as f64 / 50.0, j as f64 / 50.0) <= -1.0);
            }
        }
    }

    #[test]
    fn goal_region() {
        assert!(is_goal(GridWorldState { x: 0.95, y: 0.96 }));
        assert!(!is_goal(GridWorldState { x: 0.9, y: 0.9 }));
    }

    #[test]
    fn noise_is_bounded_and_clipped() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let s = GridWorldState { x: 0.5, y: 0.5 };
            let (n, _, _) = gridworld_step(s, GRID_ACTIONS[2], &mut rng);
            assert!((n.x - 0.55).abs() <= NOISE + 1e-15 && (n.y - 0.5).abs() <= NOISE + 1e-15);
            let (c, _, _) = gridworld_step(GridWorldState { x: 0.0, y: 1.0 }, GRID_ACTIONS[1], &mut rng);
            assert_eq!(c.x, 0.0);
            assert!(c.y <= 1.0);
        }
    }

    #[test]
    fn walking_to_the_corner_terminates() {
        let mut env = GridWorld::new(5000, ChaCha8Rng::seed_from_u64(3));
        let mut k = 0;
        loop {
            let a = if k % 2 == 0 { 2 } else { 4 };
            let st = env.step(a);
            k += 1;
            if st.done() {
                assert!(st.terminal);
                break;
            }
        }
        assert!(k < 100);
    }
}
