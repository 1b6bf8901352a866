//! Composite potential field controller with velocity consensus.

use crate::airspace::AircraftState;
use crate::error::{Error, Result};
use crate::geom::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialWeights {
    pub w_attr: f64,
    pub w_stab: f64,
    pub w_repu: f64,
    pub w_layer: f64,
    pub w_goal: f64,
    pub consensus_gain: f64,
    pub neighbor_radius: f64,
}

impl Default for PotentialWeights {
    fn default() -> Self {
        PotentialWeights {
            w_attr: 2e-5,
            w_stab: 0.5,
            w_repu: 1e4,
            w_layer: 0.05,
            w_goal: 0.015,
            consensus_gain: 0.5,
            neighbor_radius: 300.0,
        }
    }
}

impl PotentialWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.w_attr,
            self.w_stab,
            self.w_repu,
            self.w_layer,
            self.w_goal,
            self.consensus_gain,
            self.neighbor_radius,
        ];
        if all.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::config("potential weights must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn weight(&self, kind: FieldKind) -> f64 {
        match kind {
            FieldKind::Attr => self.w_attr,
            FieldKind::Stab => self.w_stab,
            FieldKind::Repu => self.w_repu,
            FieldKind::Layer => self.w_layer,
            FieldKind::Goal => self.w_goal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Attr,
    Stab,
    Repu,
    Layer,
    Goal,
}

impl FieldKind {
    pub const ALL: [FieldKind; 5] = [FieldKind::Attr, FieldKind::Stab, FieldKind::Repu, FieldKind::Layer, FieldKind::Goal];
}

/// Surroundings of one aircraft as seen by the controller.
#[derive(Debug, Clone, Default)]
pub struct FieldContext {
    /// Position of the preceding same-layer aircraft, if it is close enough to follow.
    pub predecessor: Option<Vec2>,
    /// Positions of same-layer neighbours within the neighbour radius.
    pub neighbors: Vec<Vec2>,
    pub d_safe: f64,
    /// Reference speed of the layer being flown.
    pub v_ref: f64,
    pub layer_spacing: f64,
    pub goal: Option<Vec2>,
}

fn layer_center(h: f64, spacing: f64) -> f64 {
    if h > 1.5 * spacing {
        2.0 * spacing
    } else if h > 0.5 * spacing {
        spacing
    } else {
        0.0
    }
}

fn check_distance(d: f64) -> Result<()> {
    if d == 0.0 {
        Err(Error::domain("aircraft coincide with a neighbour"))
    } else {
        Ok(())
    }
}

pub fn field_value(kind: FieldKind, i: &AircraftState, ctx: &FieldContext) -> Result<f64> {
    let s = i.pos;
    Ok(match kind {
        FieldKind::Attr => match ctx.predecessor {
            Some(pre) => {
                let d = s.distance(pre);
                if d >= ctx.d_safe {
                    (d - ctx.d_safe).powi(2)
                } else {
                    0.0
                }
            }
            None => 0.0,
        },
        FieldKind::Stab => (i.vel.x - ctx.v_ref).powi(2) + i.vel.y.powi(2),
        FieldKind::Repu => {
            let mut total = 0.0;
            for &n in &ctx.neighbors {
                let d = s.distance(n);
                check_distance(d)?;
                if d < ctx.d_safe {
                    total += (1.0 / d - 1.0 / ctx.d_safe).powi(2);
                }
            }
            total
        }
        FieldKind::Layer => (s.y - layer_center(s.y, ctx.layer_spacing)).powi(2),
        FieldKind::Goal => match ctx.goal {
            Some(g) => (s - g).dot(s - g),
            None => 0.0,
        },
    })
}

/// Gradient of a field. Position gradient for every kind except `Stab`,
/// whose gradient is taken with respect to velocity.
pub fn field_gradient(kind: FieldKind, i: &AircraftState, ctx: &FieldContext) -> Result<Vec2> {
    let s = i.pos;
    Ok(match kind {
        FieldKind::Attr => match ctx.predecessor {
            Some(pre) => {
                let r = s - pre;
                let d = r.norm();
                if d >= ctx.d_safe && d > 0.0 {
                    r * (2.0 * (d - ctx.d_safe) / d)
                } else {
                    Vec2::ZERO
                }
            }
            None => Vec2::ZERO,
        },
        FieldKind::Stab => Vec2::new(2.0 * (i.vel.x - ctx.v_ref), 2.0 * i.vel.y),
        FieldKind::Repu => {
            let mut g = Vec2::ZERO;
            for &n in &ctx.neighbors {
                let r = s - n;
                let d = r.norm();
                check_distance(d)?;
                if d < ctx.d_safe {
                    let k = 2.0 * (1.0 / d - 1.0 / ctx.d_safe) * (-1.0 / (d * d * d));
                    g += r * k;
                }
            }
            g
        }
        FieldKind::Layer => Vec2::new(0.0, 2.0 * (s.y - layer_center(s.y, ctx.layer_spacing))),
        FieldKind::Goal => match ctx.goal {
            Some(g) => (s - g) * 2.0,
            None => Vec2::ZERO,
        },
    })
}

/// Weighted sum of the five fields.
pub fn total_field(i: &AircraftState, weights: &PotentialWeights, ctx: &FieldContext) -> Result<f64> {
    let mut total = 0.0;
    for kind in FieldKind::ALL {
        let w = weights.weight(kind);
        if w != 0.0 {
            total += w * field_value(kind, i, ctx)?;
        }
    }
    Ok(total)
}

/// Joined force of the composite field, `−Σ w_k ∇F_k`.
pub fn joined_force(i: &AircraftState, weights: &PotentialWeights, ctx: &FieldContext) -> Result<Vec2> {
    let mut a = Vec2::ZERO;
    for kind in FieldKind::ALL {
        let w = weights.weight(kind);
        if w != 0.0 {
            a -= field_gradient(kind, i, ctx)? * w;
        }
    }
    Ok(a)
}

/// Controller output: descent on the composite field plus velocity consensus,
/// clipped to `a_max`.
pub fn acceleration(
    i: &AircraftState,
    neighbor_velocities: &[Vec2],
    weights: &PotentialWeights,
    ctx: &FieldContext,
    a_max: f64,
) -> Result<Vec2> {
    let mut a = joined_force(i, weights, ctx)?;
    for &v in neighbor_velocities {
        a -= (i.vel - v) * weights.consensus_gain;
    }
    Ok(a.clamp_norm(a_max))
}
