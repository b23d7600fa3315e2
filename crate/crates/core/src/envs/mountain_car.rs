use super::{EnvStep, Environment};

pub const MC_POSITION: (f64, f64) = (-1.2, 0.6);
pub const MC_VELOCITY: (f64, f64) = (-0.07, 0.07);

/// Throttle for each action id.
pub const MC_ACTIONS: [f64; 3] = [-1.0, 0.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MountainCarState {
    pub position: f64,
    pub velocity: f64,
}

impl Default for MountainCarState {
    fn default() -> Self {
        Self { position: -0.5, velocity: 0.0 }
    }
}

/// One step of the classic dynamics. Returns the next state, the reward
/// (always -1) and whether the goal was reached.
pub fn mc_step(s: MountainCarState, throttle: f64) -> (MountainCarState, f64, bool) {
    let velocity = (s.velocity + 0.001 * throttle - 0.0025 * (3.0 * s.position).cos()).clamp(MC_VELOCITY.0, MC_VELOCITY.1);
    let position = (s.position + velocity).clamp(MC_POSITION.0, MC_POSITION.1);
    let velocity = if position <= MC_POSITION.0 && velocity < 0.0 { 0.0 } else { velocity };
    let next = MountainCarState { position, velocity };
    (next, -1.0, position >= MC_POSITION.1)
}

#[derive(Debug, Clone)]
pub struct MountainCar {
    state: MountainCarState,
    obs: [f64; 2],
    steps: usize,
    max_steps: usize,
}

impl MountainCar {
    pub fn new(max_steps: usize) -> Self {
        let state = MountainCarState::default();
        Self { state, obs: [state.position, state.velocity], steps: 0, max_steps }
    }

    pub fn state(&self) -> MountainCarState {
        self.state
    }
}

impl Environment for MountainCar {
    fn num_actions(&self) -> usize {
        MC_ACTIONS.len()
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![MC_POSITION.0, MC_VELOCITY.0], vec![MC_POSITION.1, MC_VELOCITY.1])
    }

    fn reset(&mut self) {
        self.state = MountainCarState::default();
        self.obs = [self.state.position, self.state.velocity];
        self.steps = 0;
    }

    fn observation(&self) -> &[f64] {
        &self.obs
    }

    fn step(&mut self, action: usize) -> EnvStep {
        let (next, reward, terminal) = mc_step(self.state, MC_ACTIONS[action]);
        self.state = next;
        self.obs = [next.position, next.velocity];
        self.steps += 1;
        EnvStep { reward, terminal, truncated: !terminal && self.steps >= self.max_steps }
    }

    fn steps(&self) -> usize {
        self.steps
    }
}
