//! Layer-switch triggering, back-off arbitration and switch kinematics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Ceiling on the back-off window.
pub const TR_CEILING: u32 = 32;

pub fn switch_probability(d_front: f64, d_rear: f64, d_safe: f64, p_ls: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&p_ls) {
        return Err(Error::domain(format!("p_ls must lie in [0, 0.5], got {p_ls}")));
    }
    let violated = u8::from(d_front < d_safe) + u8::from(d_rear < d_safe);
    Ok(match violated {
        0 => 0.0,
        1 => p_ls,
        _ => (2.0 * p_ls).min(1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SwitchPhase {
    Idle,
    Pending,
    Accel,
    Decel,
    Capture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Up => 1.0,
            Direction::Down => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchKinematics {
    pub ax: f64,
    pub ay: f64,
    pub t_ls: f64,
}

/// Time-optimal switch between layers `spacing` apart under `‖a‖ = a_max`.
pub fn optimal_switch_acceleration(v_from: f64, v_to: f64, spacing: f64, a_max: f64) -> SwitchKinematics {
    let dv = v_to - v_from;
    let dv2 = dv * dv;
    let ay = ((dv2 * dv2 + 64.0 * spacing * spacing * a_max * a_max).sqrt() - dv2) / (8.0 * spacing);
    let ax = dv * (ay * spacing).sqrt() / (2.0 * spacing);
    let t_ls = (4.0 * spacing / ay).sqrt();
    SwitchKinematics { ax, ay, t_ls }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackoffEvents {
    pub separation_restored: bool,
    pub foreign_request_heard: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchAutomaton {
    pub tr_max: u32,
    pub tr: u32,
    pub phase: SwitchPhase,
    pub origin_layer: u8,
    pub target_layer: u8,
    pub kinematics: SwitchKinematics,
    /// Horizontal speed the switch ends at.
    pub v_target: f64,
    initial_tr_max: u32,
    rng: ChaCha8Rng,
}

impl SwitchAutomaton {
    pub fn new(tr_max: u32, seed: u64) -> Result<Self> {
        if !(1..=TR_CEILING).contains(&tr_max) {
            return Err(Error::config(format!("back-off window must lie in [1, {TR_CEILING}], got {tr_max}")));
        }
        Ok(SwitchAutomaton {
            tr_max,
            tr: tr_max,
            phase: SwitchPhase::Idle,
            origin_layer: 0,
            target_layer: 0,
            kinematics: SwitchKinematics { ax: 0.0, ay: 0.0, t_ls: 0.0 },
            v_target: 0.0,
            initial_tr_max: tr_max,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Uniform draw in [0, 1) from this automaton's stream.
    pub fn draw(&mut self) -> f64 {
        self.rng.gen()
    }

    pub fn direction(&self) -> Direction {
        if self.target_layer > self.origin_layer {
            Direction::Up
        } else {
            Direction::Down
        }
    }

    /// Start contending for a switch; the first countdown is drawn from the window.
    pub fn trigger(&mut self) -> Result<()> {
        if self.phase != SwitchPhase::Idle {
            return Err(Error::Contract(format!("trigger in phase {:?}", self.phase)));
        }
        self.phase = SwitchPhase::Pending;
        self.tr = self.rng.gen_range(1..=self.tr_max);
        Ok(())
    }

    /// One back-off tick. Returns true when the countdown expires and the
    /// automaton moves to `Accel` (the caller broadcasts the request).
    pub fn backoff_step(&mut self, events: BackoffEvents) -> Result<bool> {
        if self.phase != SwitchPhase::Pending {
            return Err(Error::Contract(format!("back-off step in phase {:?}", self.phase)));
        }
        if events.separation_restored {
            self.phase = SwitchPhase::Idle;
            self.tr = self.tr_max;
            return Ok(false);
        }
        if events.foreign_request_heard {
            self.tr_max = (2 * self.tr_max).min(TR_CEILING);
            self.tr = self.rng.gen_range(1..=self.tr_max);
            return Ok(false);
        }
        self.tr -= 1;
        if self.tr == 0 {
            self.phase = SwitchPhase::Accel;
            self.tr = self.tr_max;
            return Ok(true);
        }
        Ok(false)
    }

    /// Fix the manoeuvre once the request is out.
    pub fn begin_maneuver(&mut self, origin: u8, target: u8, v_from: f64, v_to: f64, spacing: f64, a_max: f64) {
        self.origin_layer = origin;
        self.target_layer = target;
        self.v_target = v_to;
        self.kinematics = optimal_switch_acceleration(v_from, v_to, spacing, a_max);
        self.phase = SwitchPhase::Accel;
    }

    /// Altitude where vertical acceleration reverses.
    pub fn midpoint(&self, spacing: f64) -> f64 {
        0.5 * (f64::from(self.origin_layer) + f64::from(self.target_layer)) * spacing
    }

    /// Bang-bang vertical profile with constant horizontal acceleration.
    /// Advances `Accel` to `Decel` once the midpoint is crossed.
    pub fn profile(&mut self, h: f64, spacing: f64) -> Result<Vec2> {
        if !matches!(self.phase, SwitchPhase::Accel | SwitchPhase::Decel) {
            return Err(Error::Contract(format!("switch profile in phase {:?}", self.phase)));
        }
        let a = switch_acceleration_profile(&self.kinematics, h, self.midpoint(spacing), self.direction());
        if a.y * self.direction().sign() < 0.0 {
            self.phase = SwitchPhase::Decel;
        }
        Ok(a)
    }

    pub fn enter_capture(&mut self) {
        self.phase = SwitchPhase::Capture;
    }

    /// Manoeuvre finished: back to idle with the initial back-off window.
    pub fn complete(&mut self) {
        self.phase = SwitchPhase::Idle;
        self.tr_max = self.initial_tr_max;
        self.tr = self.tr_max;
    }
}

/// Acceleration at altitude `h` for a switch reversing at `midpoint`.
pub fn switch_acceleration_profile(k: &SwitchKinematics, h: f64, midpoint: f64, direction: Direction) -> Vec2 {
    let before_mid = match direction {
        Direction::Up => h < midpoint,
        Direction::Down => h > midpoint,
    };
    let ay = if before_mid { k.ay } else { -k.ay } * direction.sign();
    Vec2::new(k.ax, ay)
}
