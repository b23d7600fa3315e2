use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::{EnvStep, Environment};

/// Torque for each action id.
pub const PENDULUM_TORQUES: [f64; 3] = [-2.0, 0.0, 2.0];

/// Angle is measured from upright, so `cos(angle)` is 1 at the top.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumState {
    pub angle: f64,
    pub velocity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PendulumParams {
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    pub friction: f64,
    pub dt: f64,
    pub max_velocity: f64,
    pub initial_angle: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            length: 1.0,
            gravity: 9.8,
            friction: 0.01,
            dt: 0.01,
            max_velocity: 78.54,
            initial_angle: FRAC_PI_2,
        }
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let x = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if x <= -PI {
        x + 2.0 * PI
    } else {
        x
    }
}

/// Semi-implicit Euler step of `ml^2 theta'' = -mu theta' + mgl sin(theta) + torque`.
/// Returns the next state and the reward `cos(angle')`; the pendulum never
/// terminates on its own.
pub fn pendulum_step(s: PendulumState, torque: f64, p: &PendulumParams) -> (PendulumState, f64) {
    let inertia = p.mass * p.length * p.length;
    let accel = (-p.friction * s.velocity + p.mass * p.gravity * p.length * s.angle.sin() + torque) / inertia;
    let velocity = (s.velocity + p.dt * accel).clamp(-p.max_velocity, p.max_velocity);
    let angle = wrap_angle(s.angle + p.dt * velocity);
    (PendulumState { angle, velocity }, angle.cos())
}

#[derive(Debug, Clone)]
pub struct Pendulum {
    params: PendulumParams,
    state: PendulumState,
    obs: [f64; 2],
    steps: usize,
    max_steps: usize,
}

impl Pendulum {
    pub fn new(params: PendulumParams, max_steps: usize) -> Self {
        let state = PendulumState { angle: params.initial_angle, velocity: 0.0 };
        Self { params, state, obs: [state.angle, state.velocity], steps: 0, max_steps }
    }

    pub fn state(&self) -> PendulumState {
        self.state
    }
}

impl Environment for Pendulum {
    fn num_actions(&self) -> usize {
        PENDULUM_TORQUES.len()
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![-PI, -self.params.max_velocity], vec![PI, self.params.max_velocity])
    }

    fn reset(&mut self) {
        self.state = PendulumState { angle: self.params.initial_angle, velocity: 0.0 };
        self.obs = [self.state.angle, self.state.velocity];
        self.steps = 0;
    }

    fn observation(&self) -> &[f64] {
        &self.obs
    }

    fn step(&mut self, action: usize) -> EnvStep {
        let (next, reward) = pendulum_step(self.state, PENDULUM_TORQUES[action], &self.params);
        self.state = next;
        self.obs = [next.angle, next.velocity];
        self.steps += 1;
        EnvStep { reward, terminal: false, truncated: self.steps >= self.max_steps }
    }

    fn steps(&self) -> usize {
        self.steps
    }
}
