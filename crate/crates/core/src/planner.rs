//! Large-time-scale communication planning: particle swarm search over the
//! positions of one (low-layer RIS carrier, high-layer receiver) pair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::ris::{array_side, cosine_gap, Resolution};

#[derive(Debug, Clone, PartialEq)]
pub struct PsoParams {
    pub swarm_size: usize,
    pub max_iter: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity limit as a fraction of each box side.
    pub v_clamp: f64,
    pub seed: u64,
}

impl Default for PsoParams {
    fn default() -> Self {
        PsoParams { swarm_size: 30, max_iter: 100, inertia: 0.7, cognitive: 1.5, social: 1.5, v_clamp: 0.2, seed: 0 }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 || self.max_iter < 1 {
            return Err(Error::config("PSO needs at least 2 particles and 1 iteration"));
        }
        if !(0.0..=1.0).contains(&self.inertia) || self.cognitive < 0.0 || self.social < 0.0 {
            return Err(Error::config("PSO inertia must be in [0,1] and coefficients non-negative"));
        }
        if !(self.v_clamp > 0.0) {
            return Err(Error::config("PSO velocity clamp must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningQuery {
    pub bs_pos: Vec2,
    pub low_pos: Vec2,
    pub high_pos: Vec2,
    pub low_altitude: f64,
    pub high_altitude: f64,
    pub xi: Resolution,
    pub elements: usize,
    /// Planning horizon q·Δt.
    pub horizon: f64,
    pub v_max: f64,
}

impl PlanningQuery {
    /// Reachable forward range along x for an aircraft currently at `pos`
    /// that must end at altitude `alt`.
    fn reach(&self, pos: Vec2, alt: f64) -> Result<(f64, f64)> {
        let radius = self.v_max * self.horizon;
        let dh = alt - pos.y;
        let dx2 = radius * radius - dh * dh;
        if !(dx2 > 0.0) {
            return Err(Error::config("layer altitude unreachable within the planning horizon"));
        }
        // Shrink slightly so the far corner stays feasible after rounding.
        Ok((pos.x, pos.x + dx2.sqrt() * (1.0 - 1e-12)))
    }

    /// Search box `[(lo, hi); 2]` for (x_low, x_high). Lower ends are exclusive.
    pub fn feasible_box(&self) -> Result<[(f64, f64); 2]> {
        if !(self.horizon > 0.0) || !(self.v_max > 0.0) {
            return Err(Error::config("planning horizon and v_max must be positive"));
        }
        Ok([self.reach(self.low_pos, self.low_altitude)?, self.reach(self.high_pos, self.high_altitude)?])
    }

    pub fn candidate_positions(&self, x_low: f64, x_high: f64) -> (Vec2, Vec2) {
        (Vec2::new(x_low, self.low_altitude), Vec2::new(x_high, self.high_altitude))
    }

    fn feasible(&self, x_low: f64, x_high: f64) -> bool {
        let radius = self.v_max * self.horizon;
        let (lo, hi) = self.candidate_positions(x_low, x_high);
        x_low > self.low_pos.x
            && x_high > self.high_pos.x
            && lo.distance(self.low_pos) <= radius
            && hi.distance(self.high_pos) <= radius
    }
}

/// Distance from `value` to the nearest multiple of `xi` (ties to the lower one).
fn grid_residual(value: f64, xi: f64) -> f64 {
    let m = (value / xi - 0.5).ceil();
    value - m * xi
}

/// Mean squared distance of the optimal phase slopes from the discrete grid.
pub fn p4_fitness(x_low: f64, x_high: f64, query: &PlanningQuery) -> f64 {
    if !query.feasible(x_low, x_high) {
        return f64::INFINITY;
    }
    let Ok(side) = array_side(query.elements) else {
        return f64::INFINITY;
    };
    let (low, high) = query.candidate_positions(x_low, x_high);
    let Ok(gap) = cosine_gap(query.bs_pos, low, high) else {
        return f64::INFINITY;
    };
    let xi = match query.xi {
        Resolution::Continuous => return 0.0,
        Resolution::Discrete(xi) => xi,
    };
    let total: f64 = (0..query.elements)
        .map(|l| {
            let r = grid_residual((l % side) as f64 * gap, xi);
            r * r
        })
        .sum();
    total / query.elements as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoOutcome {
    pub best: Vec<f64>,
    pub fitness: f64,
    /// Global-best fitness after initialisation and after each iteration.
    pub history: Vec<f64>,
}

/// Canonical global-best PSO over an axis-aligned box.
pub fn pso_minimize<F>(bounds: &[(f64, f64)], params: &PsoParams, fitness: F) -> Result<PsoOutcome>
where
    F: Fn(&[f64]) -> f64,
{
    params.validate()?;
    if bounds.is_empty() || bounds.iter().any(|(lo, hi)| !(hi > lo) || !lo.is_finite() || !hi.is_finite()) {
        return Err(Error::config("PSO search box is empty"));
    }
    let dim = bounds.len();
    let vmax: Vec<f64> = bounds.iter().map(|(lo, hi)| params.v_clamp * (hi - lo)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut pos: Vec<Vec<f64>> = (0..params.swarm_size)
        .map(|_| bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect())
        .collect();
    let mut vel: Vec<Vec<f64>> = (0..params.swarm_size)
        .map(|_| vmax.iter().map(|&m| rng.gen_range(-m..=m)).collect())
        .collect();
    let mut pbest = pos.clone();
    let mut pbest_f: Vec<f64> = pos.iter().map(|p| fitness(p)).collect();

    let mut gbest_idx = 0;
    for i in 1..params.swarm_size {
        if pbest_f[i] < pbest_f[gbest_idx] {
            gbest_idx = i;
        }
    }
    let mut gbest = pbest[gbest_idx].clone();
    let mut gbest_f = pbest_f[gbest_idx];
    let mut history = Vec::with_capacity(params.max_iter + 1);
    history.push(gbest_f);

    for _ in 0..params.max_iter {
        for i in 0..params.swarm_size {
            for d in 0..dim {
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                let v = params.inertia * vel[i][d]
                    + params.cognitive * r1 * (pbest[i][d] - pos[i][d])
                    + params.social * r2 * (gbest[d] - pos[i][d]);
                vel[i][d] = v.clamp(-vmax[d], vmax[d]);
                pos[i][d] = (pos[i][d] + vel[i][d]).clamp(bounds[d].0, bounds[d].1);
            }
        }
        for i in 0..params.swarm_size {
            let f = fitness(&pos[i]);
            if f < pbest_f[i] {
                pbest_f[i] = f;
                pbest[i].clone_from(&pos[i]);
            }
            if f < gbest_f {
                gbest_f = f;
                gbest.clone_from(&pos[i]);
            }
        }
        history.push(gbest_f);
    }
    Ok(PsoOutcome { best: gbest, fitness: gbest_f, history })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanResult {
    pub x_low: f64,
    pub x_high: f64,
    pub fitness: f64,
}

impl PlanResult {
    pub fn goals(&self, query: &PlanningQuery) -> (Vec2, Vec2) {
        query.candidate_positions(self.x_low, self.x_high)
    }
}

pub fn pso_optimize(query: &PlanningQuery, params: &PsoParams) -> Result<PlanResult> {
    let bounds = query.feasible_box()?;
    let outcome = pso_minimize(&bounds, params, |c| p4_fitness(c[0], c[1], query))?;
    if !outcome.fitness.is_finite() {
        return Err(Error::config("no feasible planning candidate found"));
    }
    Ok(PlanResult { x_low: outcome.best[0], x_high: outcome.best[1], fitness: outcome.fitness })
}
