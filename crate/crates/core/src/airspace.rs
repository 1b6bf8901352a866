//! Layer geometry, aircraft state and separation predicates.

use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Number of flight layers (ground, low, high).
pub const LAYER_COUNT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlightMode {
    Cruise,
    Switching,
    BackingOff,
}

impl FlightMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FlightMode::Cruise => "Cruise",
            FlightMode::Switching => "Switching",
            FlightMode::BackingOff => "BackingOff",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AircraftState {
    pub id: u32,
    pub pos: Vec2,
    pub vel: Vec2,
    pub acc: Vec2,
    pub layer: u8,
    pub mode: FlightMode,
}

impl AircraftState {
    /// Aircraft cruising at the altitude of `layer`.
    pub fn cruising(id: u32, layer: u8, x: f64, vx: f64, cfg: &AirspaceConfig) -> Self {
        AircraftState {
            id,
            pos: Vec2::new(x, cfg.layer_altitude(layer)),
            vel: Vec2::new(vx, 0.0),
            acc: Vec2::ZERO,
            layer,
            mode: FlightMode::Cruise,
        }
    }

    pub fn speed(&self) -> f64 {
        self.vel.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AirspaceConfig {
    /// Inter-layer spacing H.
    pub layer_spacing: f64,
    /// Reference cruise speed of each layer.
    pub expected_speed: [f64; LAYER_COUNT],
    pub v_max: f64,
    pub a_max: f64,
    /// Leader deceleration B.
    pub leader_brake: f64,
    /// Follower deceleration b.
    pub follower_brake: f64,
    /// Perception delay t1.
    pub perception_delay: f64,
    /// Reaction delay t2.
    pub reaction_delay: f64,
    pub vertical_coeff: f64,
}

impl Default for AirspaceConfig {
    fn default() -> Self {
        AirspaceConfig {
            layer_spacing: 100.0,
            expected_speed: [30.0, 45.0, 60.0],
            v_max: 70.0,
            a_max: 5.0,
            leader_brake: 8.0,
            follower_brake: 4.0,
            perception_delay: 0.2,
            reaction_delay: 0.3,
            vertical_coeff: 1.0,
        }
    }
}

impl AirspaceConfig {
    pub fn validate(&self) -> Result<()> {
        let [v0, v1, v2] = self.expected_speed;
        if !(v2 > v1 && v1 > v0 && v0 >= 0.0) {
            return Err(Error::config("layer speeds must satisfy v2 > v1 > v0 >= 0"));
        }
        if !(self.layer_spacing > 0.0) {
            return Err(Error::config("layer spacing must be positive"));
        }
        if !(self.a_max > 0.0) {
            return Err(Error::config("a_max must be positive"));
        }
        if !(self.follower_brake > 0.0 && self.leader_brake >= self.follower_brake) {
            return Err(Error::config("brake rates must satisfy B >= b > 0"));
        }
        if !(self.v_max >= v2) {
            return Err(Error::config("v_max must not be below the top layer speed"));
        }
        if self.perception_delay < 0.0 || self.reaction_delay < 0.0 || self.vertical_coeff < 0.0 {
            return Err(Error::config("delays and vertical coefficient must be non-negative"));
        }
        Ok(())
    }

    pub fn layer_altitude(&self, layer: u8) -> f64 {
        f64::from(layer) * self.layer_spacing
    }

    pub fn reference_speed(&self, layer: u8) -> f64 {
        self.expected_speed[usize::from(layer).min(LAYER_COUNT - 1)]
    }

    /// Layer whose cruise band contains altitude `h`.
    pub fn layer_of_altitude(&self, h: f64) -> u8 {
        let n = (h / self.layer_spacing).round();
        n.clamp(0.0, (LAYER_COUNT - 1) as f64) as u8
    }
}

/// Braking-distance separation between a follower at speed `v` and its leader.
pub fn horizontal_safe_separation(v: f64, cfg: &AirspaceConfig) -> Result<f64> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::domain(format!("speed must be finite and non-negative, got {v}")));
    }
    let (bl, bf) = (cfg.leader_brake, cfg.follower_brake);
    if !(bl > 0.0 && bf > 0.0) {
        return Err(Error::domain("brake rates must be positive"));
    }
    let quad = (bl - bf) / (2.0 * bl * bf);
    Ok(quad * v * v + v * (cfg.perception_delay + cfg.reaction_delay))
}

/// Separation `i` must keep from `j` when the two sit in different layers.
pub fn vertical_safe_separation(
    i: &AircraftState,
    j: &AircraftState,
    cfg: &AirspaceConfig,
) -> Result<f64> {
    let s = j.pos - i.pos;
    let ds = s.norm();
    if ds == 0.0 {
        return Err(Error::domain(format!("aircraft {} and {} coincide", i.id, j.id)));
    }
    let v = i.vel - j.vel;
    let dv = v.norm();
    if dv == 0.0 {
        return Ok(0.0);
    }
    // s_ij points from j to i in the approach convention.
    let s_ij = -s;
    let cos_gamma = -s_ij.dot(v) / (ds * dv);
    Ok(cfg.vertical_coeff * i.speed() * cos_gamma.max(0.0))
}

/// Whether a same-layer gap is below the separation owed by a follower at `follower_speed`.
pub fn gap_in_conflict(gap: f64, follower_speed: f64, cfg: &AirspaceConfig) -> bool {
    match horizontal_safe_separation(follower_speed, cfg) {
        Ok(sep) => gap < sep,
        Err(_) => true,
    }
}

/// Pairwise conflict predicate. Coincident aircraft are always in conflict.
pub fn conflict(i: &AircraftState, j: &AircraftState, cfg: &AirspaceConfig) -> bool {
    if i.layer == j.layer {
        let gap = (j.pos.x - i.pos.x).abs();
        let follower = if i.pos.x < j.pos.x {
            i
        } else if j.pos.x < i.pos.x {
            j
        } else if i.speed() >= j.speed() {
            i
        } else {
            j
        };
        gap_in_conflict(gap, follower.speed(), cfg)
    } else {
        let dist = i.pos.distance(j.pos);
        match vertical_safe_separation(i, j, cfg) {
            Ok(sep) => dist < sep,
            Err(_) => true,
        }
    }
}
