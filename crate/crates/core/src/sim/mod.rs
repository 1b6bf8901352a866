//! Dual-time-scale simulation loop.

pub mod metrics;
pub mod trace;

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::airspace::{
    horizontal_safe_separation, vertical_safe_separation, AircraftState, FlightMode, LAYER_COUNT,
};
use crate::error::{Error, Result};
use crate::field::{acceleration, joined_force, total_field, FieldContext};
use crate::geom::Vec2;
use crate::planner::{pso_optimize, PlanningQuery, PsoParams};
use crate::ris::{self, ChannelParams, PhaseShiftConfig, Resolution};
use crate::scenario::{derive_seed, RisMode, Scenario};
use crate::switching::{optimal_switch_acceleration, switch_probability, BackoffEvents, SwitchAutomaton, SwitchPhase};

pub use metrics::{ipr, ipr_threshold, Episode, EpisodeTracker};
pub use trace::{EventKind, EventRow, RisTag, SimTrace, TraceRow};

/// Phase configuration evaluated alongside the flown one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseProbe {
    Quantized(Resolution),
    FixedZero,
}

impl PhaseProbe {
    pub fn label(self) -> String {
        match self {
            PhaseProbe::Quantized(r) => crate::scenario::format_resolution(r),
            PhaseProbe::FixedZero => "fixed-zero".into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub phase_probes: Vec<PhaseProbe>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub t: f64,
    /// Σ F_total.
    pub potential: f64,
    /// Σ ‖−∇F_total‖, the joined force.
    pub force: f64,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub trace: SimTrace,
    pub episodes: Vec<Episode>,
    /// Composite field summed over cruising aircraft, per tick.
    pub field_series: Vec<FieldSample>,
    /// Mean served capacity for each probe, sampled at planning ticks.
    pub probe_series: Vec<(f64, Vec<f64>)>,
    pub dt: f64,
}

impl SimOutput {
    pub fn switch_completions(&self) -> usize {
        self.trace.count_events(|k| matches!(k, EventKind::SwitchDone { .. }))
    }

    pub fn ls_requests(&self) -> usize {
        self.trace.count_events(|k| matches!(k, EventKind::LsReq { .. }))
    }

    pub fn ipr(&self, t_dur: f64) -> f64 {
        ipr(&self.episodes, t_dur, self.dt)
    }

    pub fn ipr_threshold(&self) -> f64 {
        ipr_threshold(&self.episodes, self.dt)
    }
}

#[derive(Debug, Clone)]
struct Link {
    ris: RisTag,
    phases: PhaseShiftConfig,
}

/// Mutable simulation state.
#[derive(Debug, Clone)]
pub struct World {
    pub tick: u64,
    pub time: f64,
    pub aircraft: Vec<AircraftState>,
    pub automata: Vec<SwitchAutomaton>,
    pub goals: Vec<Option<Vec2>>,
    next_sample: Vec<f64>,
    inbox: Vec<u32>,
    links: BTreeMap<u32, Link>,
    episodes: EpisodeTracker,
}

/// Same-layer ordering used for neighbour queries.
struct Lanes {
    /// For each layer, indices of aircraft flying in it, sorted by x.
    members: [Vec<usize>; LAYER_COUNT],
}

fn forward_gap(from: f64, to: f64, course: f64) -> f64 {
    (to - from).rem_euclid(course)
}

fn ring_distance(a: f64, b: f64, course: f64) -> f64 {
    let d = forward_gap(a, b, course);
    d.min(course - d)
}

/// `b.x` shifted by a multiple of the course so it lies closest to `a`.
fn unwrap_near(a: f64, b: f64, course: f64) -> f64 {
    let d = forward_gap(a, b, course);
    if d <= course / 2.0 {
        a + d
    } else {
        a - (course - d)
    }
}

impl Lanes {
    fn build(aircraft: &[AircraftState]) -> Self {
        let mut members: [Vec<usize>; LAYER_COUNT] = Default::default();
        for (i, a) in aircraft.iter().enumerate() {
            if a.mode != FlightMode::Switching {
                members[usize::from(a.layer)].push(i);
            }
        }
        for m in &mut members {
            m.sort_by(|&a, &b| aircraft[a].pos.x.total_cmp(&aircraft[b].pos.x).then(a.cmp(&b)));
        }
        Lanes { members }
    }

    /// Nearest lane members ahead and behind `i` in `layer`: (index, gap).
    fn around(&self, aircraft: &[AircraftState], i: usize, layer: u8, course: f64) -> (Option<(usize, f64)>, Option<(usize, f64)>) {
        let x = aircraft[i].pos.x;
        let mut ahead: Option<(usize, f64)> = None;
        let mut behind: Option<(usize, f64)> = None;
        for &j in &self.members[usize::from(layer)] {
            if j == i {
                continue;
            }
            let fa = forward_gap(x, aircraft[j].pos.x, course);
            let fb = forward_gap(aircraft[j].pos.x, x, course);
            // Coincident x counts as ahead for the lower index.
            let (fa, fb) = if fa == 0.0 && j < i { (course, 0.0) } else { (fa, fb) };
            if ahead.is_none_or(|(_, g)| fa < g) {
                ahead = Some((j, fa));
            }
            if behind.is_none_or(|(_, g)| fb < g) {
                behind = Some((j, fb));
            }
        }
        (ahead, behind)
    }
}

/// Everything the per-aircraft controller derives from the frozen snapshot.
struct Assessment {
    acc: Vec2,
    field: f64,
    force: f64,
    front_violated: bool,
    rear_violated: bool,
}

impl World {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let aircraft = scenario.initial_aircraft()?;
        let automata = aircraft
            .iter()
            .map(|a| SwitchAutomaton::new(scenario.switching.tr_max, derive_seed(scenario.seed, u64::from(a.id) + 1)))
            .collect::<Result<Vec<_>>>()?;
        let n = aircraft.len();
        Ok(World {
            tick: 0,
            time: 0.0,
            aircraft,
            automata,
            goals: vec![None; n],
            next_sample: vec![0.0; n],
            inbox: Vec::new(),
            links: BTreeMap::new(),
            episodes: EpisodeTracker::new((1.0 / scenario.dt).round() as u64),
        })
    }

    fn context(&self, s: &Scenario, lanes: &Lanes, i: usize, layer: u8) -> Result<(FieldContext, Vec<Vec2>)> {
        let a = &self.aircraft[i];
        let cfg = &s.airspace;
        let course = s.course_length;
        let radius = s.weights.neighbor_radius;
        let (ahead, _) = lanes.around(&self.aircraft, i, layer, course);
        let predecessor = ahead
            .filter(|&(_, g)| g <= radius)
            .map(|(j, g)| Vec2::new(a.pos.x + g, self.aircraft[j].pos.y));
        let mut neighbors = Vec::new();
        let mut velocities = Vec::new();
        for &j in &lanes.members[usize::from(layer)] {
            if j == i {
                continue;
            }
            let b = &self.aircraft[j];
            if ring_distance(a.pos.x, b.pos.x, course) <= radius {
                neighbors.push(Vec2::new(unwrap_near(a.pos.x, b.pos.x, course), b.pos.y));
                velocities.push(b.vel);
            }
        }
        let v_ref = cfg.reference_speed(layer);
        let ctx = FieldContext {
            predecessor,
            neighbors,
            d_safe: horizontal_safe_separation(a.speed(), cfg)?,
            v_ref,
            layer_spacing: cfg.layer_spacing,
            goal: self.goals[i].map(|g| Vec2::new(unwrap_near(a.pos.x, g.x, course), g.y)),
        };
        Ok((ctx, velocities))
    }

    fn assess(&self, s: &Scenario, lanes: &Lanes, i: usize) -> Result<Assessment> {
        let a = &self.aircraft[i];
        let cfg = &s.airspace;
        let (ctx, velocities) = self.context(s, lanes, i, a.layer)?;
        let acc = acceleration(a, &velocities, &s.weights, &ctx, cfg.a_max)?;
        let field = total_field(a, &s.weights, &ctx)?;
        let force = joined_force(a, &s.weights, &ctx)?.norm();
        let (mut front_violated, mut rear_violated) = (false, false);
        if a.mode != FlightMode::Switching {
            let (ahead, behind) = lanes.around(&self.aircraft, i, a.layer, s.course_length);
            if let Some((_, g)) = ahead {
                front_violated = g < horizontal_safe_separation(a.speed(), cfg)?;
            }
            if let Some((j, g)) = behind {
                rear_violated = g < horizontal_safe_separation(self.aircraft[j].speed(), cfg)?;
            }
        }
        Ok(Assessment { acc, field, force, front_violated, rear_violated })
    }

    /// Adjacent allowed layer with the lighter local traffic; ties go up.
    fn choose_target(&self, s: &Scenario, i: usize) -> Option<u8> {
        let a = &self.aircraft[i];
        let allowed = |l: i32| l >= 0 && (l as usize) < LAYER_COUNT && s.switching.layers.contains(&(l as u8));
        let count = |l: u8| {
            self.aircraft
                .iter()
                .filter(|b| b.id != a.id && b.layer == l)
                .filter(|b| ring_distance(a.pos.x, b.pos.x, s.course_length) <= s.switching.density_window)
                .count()
        };
        let up = i32::from(a.layer) + 1;
        let down = i32::from(a.layer) - 1;
        let target = match (allowed(up), allowed(down)) {
            (true, true) => {
                if count(down as u8) < count(up as u8) {
                    down as u8
                } else {
                    up as u8
                }
            }
            (true, false) => up as u8,
            (false, true) => down as u8,
            (false, false) => return None,
        };
        self.landing_clear(s, i, target).then_some(target)
    }

    /// Whether the predicted arrival point in `target` keeps the scaled
    /// separation to every aircraft that will be flying there.
    fn landing_clear(&self, s: &Scenario, i: usize, target: u8) -> bool {
        let factor = s.switching.landing_clearance;
        if factor <= 0.0 {
            return true;
        }
        let cfg = &s.airspace;
        let course = s.course_length;
        let a = &self.aircraft[i];
        let v_to = cfg.reference_speed(target);
        let t_ls = optimal_switch_acceleration(a.vel.x, v_to, cfg.layer_spacing, cfg.a_max).t_ls;
        let x_i = a.pos.x + 0.5 * (a.vel.x + v_to) * t_ls;
        let sep = |v: f64| factor * horizontal_safe_separation(v, cfg).unwrap_or(f64::INFINITY);
        self.aircraft.iter().enumerate().all(|(j, b)| {
            let bound_there = if b.mode == FlightMode::Switching {
                self.automata[j].target_layer == target
            } else {
                b.layer == target
            };
            if j == i || !bound_there {
                return true;
            }
            let x_j = b.pos.x + b.vel.x * t_ls;
            let ahead = forward_gap(x_i, x_j, course);
            let behind = forward_gap(x_j, x_i, course);
            ahead >= sep(v_to) && behind >= sep(b.vel.x)
        })
    }

    fn plan(&mut self, s: &Scenario) -> Result<()> {
        for g in &mut self.goals {
            *g = None;
        }
        self.links.clear();
        let cfg = &s.airspace;
        let course = s.course_length;
        let cruising = |a: &AircraftState, layer: u8| a.layer == layer && a.mode != FlightMode::Switching;
        let highs: Vec<usize> = (0..self.aircraft.len()).filter(|&k| cruising(&self.aircraft[k], 2)).collect();
        let lows: Vec<usize> = (0..self.aircraft.len()).filter(|&i| cruising(&self.aircraft[i], 1)).collect();
        let nearest_low = |k: usize| {
            lows.iter().copied().min_by(|&a, &b| {
                let da = ring_distance(self.aircraft[a].pos.x, self.aircraft[k].pos.x, course);
                let db = ring_distance(self.aircraft[b].pos.x, self.aircraft[k].pos.x, course);
                da.total_cmp(&db).then(a.cmp(&b))
            })
        };

        if s.ris_mode.planner_enabled() {
            let primary = highs.iter().copied().min_by(|&a, &b| {
                let da = self.aircraft[a].pos.distance(s.bs_pos);
                let db = self.aircraft[b].pos.distance(s.bs_pos);
                da.total_cmp(&db).then(a.cmp(&b))
            });
            if let (Some(k), Some(i)) = (primary, primary.and_then(nearest_low)) {
                let high = self.aircraft[k].pos;
                let low = Vec2::new(unwrap_near(high.x, self.aircraft[i].pos.x, course), self.aircraft[i].pos.y);
                let query = PlanningQuery {
                    bs_pos: s.bs_pos,
                    low_pos: low,
                    high_pos: high,
                    low_altitude: cfg.layer_altitude(1),
                    high_altitude: cfg.layer_altitude(2),
                    xi: s.xi,
                    elements: s.ris_elements,
                    horizon: s.horizon(),
                    v_max: cfg.v_max,
                };
                let params = PsoParams { seed: derive_seed(s.pso.seed ^ s.seed, self.tick), ..s.pso.clone() };
                let plan = pso_optimize(&query, &params)?;
                let (gl, gh) = plan.goals(&query);
                self.goals[i] = Some(gl);
                self.goals[k] = Some(gh);
            }
        }

        for &k in &highs {
            let ris_tag = match s.ris_mode {
                RisMode::StationaryRis(_) => Some(RisTag::Stationary),
                _ => nearest_low(k).map(|i| RisTag::Aircraft(self.aircraft[i].id)),
            };
            let Some(tag) = ris_tag else { continue };
            let ris_pos = self.ris_position(s, tag, self.aircraft[k].pos.x);
            let opt = ris::optimal_phase_shift(s.bs_pos, ris_pos, self.aircraft[k].pos, s.ris_elements)?;
            let phases = opt.quantized(s.xi);
            self.links.insert(self.aircraft[k].id, Link { ris: tag, phases });
        }
        Ok(())
    }

    fn ris_position(&self, s: &Scenario, tag: RisTag, near_x: f64) -> Vec2 {
        match (tag, s.ris_mode) {
            (RisTag::Stationary, RisMode::StationaryRis(p)) => p,
            (RisTag::Aircraft(id), _) => {
                let p = self.aircraft[id as usize].pos;
                Vec2::new(unwrap_near(near_x, p.x, s.course_length), p.y)
            }
            (RisTag::Stationary, _) => unreachable!("stationary tag outside stationary mode"),
        }
    }

    /// Capacity of aircraft `k` under its current link (direct path otherwise).
    fn capacity_of(&self, s: &Scenario, channel: &ChannelParams, k: usize) -> Result<(f64, Option<RisTag>)> {
        let a = &self.aircraft[k];
        if let Some(link) = self.links.get(&a.id) {
            let usable = a.layer == 2
                && a.mode != FlightMode::Switching
                && match link.ris {
                    RisTag::Aircraft(id) => {
                        let r = &self.aircraft[id as usize];
                        r.layer == 1 && r.mode != FlightMode::Switching
                    }
                    RisTag::Stationary => true,
                };
            if usable {
                let ris_pos = self.ris_position(s, link.ris, a.pos.x);
                let snr = ris::snr(s.bs_pos, ris_pos, a.pos, &link.phases, channel)?;
                return Ok((ris::capacity(snr, channel)?, Some(link.ris)));
            }
        }
        let snr = ris::direct_snr(s.bs_pos, a.pos, channel)?;
        Ok((ris::capacity(snr, channel)?, None))
    }

    /// Mean capacity over current links for each probe.
    fn probe(&self, s: &Scenario, channel: &ChannelParams, probes: &[PhaseProbe]) -> Result<Vec<f64>> {
        let mut sums = vec![0.0; probes.len()];
        let mut n = 0usize;
        for (&kid, link) in &self.links {
            let k = self.aircraft[kid as usize].pos;
            let ris_pos = self.ris_position(s, link.ris, k.x);
            let opt = ris::optimal_phase_shift(s.bs_pos, ris_pos, k, s.ris_elements)?;
            for (sum, probe) in sums.iter_mut().zip(probes) {
                let phases = match *probe {
                    PhaseProbe::Quantized(r) => opt.quantized(r),
                    PhaseProbe::FixedZero => PhaseShiftConfig::zeros(s.ris_elements)?,
                };
                *sum += ris::capacity(ris::snr(s.bs_pos, ris_pos, k, &phases, channel)?, channel)?;
            }
            n += 1;
        }
        Ok(sums.into_iter().map(|v| if n == 0 { 0.0 } else { v / n as f64 }).collect())
    }

    /// Pairs currently closer than their separation, sorted.
    fn conflicts(&self, s: &Scenario) -> Vec<(u32, u32)> {
        let cfg = &s.airspace;
        let course = s.course_length;
        let lanes = Lanes::build(&self.aircraft);
        let mut pairs = Vec::new();
        for lane in &lanes.members {
            if lane.len() < 2 {
                continue;
            }
            for (n, &follower) in lane.iter().enumerate() {
                let leader = lane[(n + 1) % lane.len()];
                let (f, l) = (&self.aircraft[follower], &self.aircraft[leader]);
                let gap = forward_gap(f.pos.x, l.pos.x, course);
                let sep = horizontal_safe_separation(f.speed(), cfg).unwrap_or(f64::INFINITY);
                if gap < sep {
                    pairs.push(metrics::pair_key(f.id, l.id));
                }
            }
        }
        let n = self.aircraft.len();
        let reach = 2.0 * cfg.layer_spacing;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&self.aircraft[i], &self.aircraft[j]);
                let same_lane = a.layer == b.layer && a.mode != FlightMode::Switching && b.mode != FlightMode::Switching;
                if same_lane || (a.pos.y - b.pos.y).abs() > reach {
                    continue;
                }
                if ring_distance(a.pos.x, b.pos.x, course) > reach {
                    continue;
                }
                let mut b_near = b.clone();
                b_near.pos.x = unwrap_near(a.pos.x, b.pos.x, course);
                let dist = a.pos.distance(b_near.pos);
                let sep = match (vertical_safe_separation(a, &b_near, cfg), vertical_safe_separation(&b_near, a, cfg)) {
                    (Ok(x), Ok(y)) => x.max(y),
                    _ => f64::INFINITY,
                };
                if dist < sep {
                    pairs.push(metrics::pair_key(a.id, b.id));
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }
}

/// Advance the world by one tick, appending rows to `trace`.
pub fn step(
    world: &mut World,
    s: &Scenario,
    trace: &mut SimTrace,
    options: &RunOptions,
    probe_series: &mut Vec<(f64, Vec<f64>)>,
    field_series: &mut Vec<FieldSample>,
) -> Result<()> {
    let channel = s.effective_channel();
    let cfg = &s.airspace;
    let dt = s.dt;
    let t_now = world.time;
    let t_next = (world.tick + 1) as f64 * dt;

    if world.tick % u64::from(s.q) == 0 {
        world.plan(s)?;
        if !options.phase_probes.is_empty() {
            probe_series.push((t_now, world.probe(s, &channel, &options.phase_probes)?));
        }
    }

    let lanes = Lanes::build(&world.aircraft);
    let frozen: &World = world;
    let assessments: Vec<Assessment> = (0..frozen.aircraft.len())
        .into_par_iter()
        .map(|i| frozen.assess(s, &lanes, i))
        .collect::<Result<Vec<_>>>()?;
    let cruising = || {
        assessments
            .iter()
            .zip(&frozen.aircraft)
            .filter(|(_, a)| a.mode != FlightMode::Switching)
            .map(|(x, _)| x)
    };
    field_series.push(FieldSample {
        t: t_now,
        potential: cruising().map(|a| a.field).sum(),
        force: cruising().map(|a| a.force).sum(),
    });

    let inbox = std::mem::take(&mut world.inbox);
    // Countdowns that would expire together hear each other's request.
    let expiring: Vec<usize> = (0..world.aircraft.len())
        .filter(|&i| {
            let a = &world.automata[i];
            let assess = &assessments[i];
            a.phase == SwitchPhase::Pending
                && a.tr == 1
                && (assess.front_violated || assess.rear_violated)
                && !inbox.iter().any(|&other| other != world.aircraft[i].id)
        })
        .collect();
    let collided = |i: usize| expiring.len() > 1 && expiring.contains(&i);
    let mut outbox = Vec::new();
    let mut accs = Vec::with_capacity(world.aircraft.len());
    for (i, assess) in assessments.iter().enumerate() {
        let id = world.aircraft[i].id;
        let mut acc = assess.acc;
        match world.automata[i].phase {
            SwitchPhase::Idle => {
                let violated = assess.front_violated || assess.rear_violated;
                if world.aircraft[i].mode == FlightMode::Cruise && violated && t_now + 1e-9 >= world.next_sample[i] {
                    world.next_sample[i] = t_now + s.switching.trigger_interval;
                    let p = switch_probability(
                        if assess.front_violated { 0.0 } else { 1.0 },
                        if assess.rear_violated { 0.0 } else { 1.0 },
                        0.5,
                        s.p_ls,
                    )?;
                    let u = world.automata[i].draw();
                    if u < p && world.choose_target(s, i).is_some() {
                        world.automata[i].trigger()?;
                        world.aircraft[i].mode = FlightMode::BackingOff;
                    }
                }
            }
            SwitchPhase::Pending => {
                let events = BackoffEvents {
                    separation_restored: !(assess.front_violated || assess.rear_violated),
                    foreign_request_heard: inbox.iter().any(|&other| other != id) || collided(i),
                };
                let expired = world.automata[i].backoff_step(events)?;
                if world.automata[i].phase == SwitchPhase::Idle {
                    world.aircraft[i].mode = FlightMode::Cruise;
                    trace.events.push(EventRow { t: t_next, id, kind: EventKind::SwitchCancel });
                } else if expired {
                    match world.choose_target(s, i) {
                        Some(target) => {
                            let a = &world.aircraft[i];
                            let (origin, vx) = (a.layer, a.vel.x);
                            world.automata[i].begin_maneuver(origin, target, vx, cfg.reference_speed(target), cfg.layer_spacing, cfg.a_max);
                            world.aircraft[i].mode = FlightMode::Switching;
                            world.goals[i] = None;
                            outbox.push(id);
                            trace.events.push(EventRow { t: t_next, id, kind: EventKind::LsReq { target_layer: target } });
                        }
                        None => {
                            world.automata[i].complete();
                            world.aircraft[i].mode = FlightMode::Cruise;
                        }
                    }
                }
            }
            _ => {}
        }

        let automaton = &mut world.automata[i];
        if matches!(automaton.phase, SwitchPhase::Accel | SwitchPhase::Decel) {
            let a = &world.aircraft[i];
            let mut p = automaton.profile(a.pos.y, cfg.layer_spacing)?;
            let remaining = automaton.v_target - a.vel.x;
            if p.x.abs() * dt >= remaining.abs() {
                p.x = remaining / dt;
            }
            if automaton.phase == SwitchPhase::Decel {
                let sign = automaton.direction().sign();
                if (a.vel.y + p.y * dt) * sign < 0.0 {
                    p.y = -a.vel.y / dt;
                }
                world.aircraft[i].layer = automaton.target_layer;
            }
            acc = p;
        }
        accs.push(acc);
    }

    for (i, acc) in accs.into_iter().enumerate() {
        let a = &mut world.aircraft[i];
        a.acc = acc;
        a.vel = (a.vel + acc * dt).clamp_norm(cfg.v_max);
        a.pos += a.vel * dt;
        if a.pos.x >= s.course_length || a.pos.x < 0.0 {
            let shift = s.course_length * (a.pos.x / s.course_length).floor();
            a.pos.x -= shift;
            if let Some(g) = &mut world.goals[i] {
                g.x -= shift;
            }
        }
        if !(a.pos.is_finite() && a.vel.is_finite()) {
            return Err(Error::Numerical { tick: world.tick, id: a.id, what: "non-finite state".into() });
        }
    }

    for i in 0..world.aircraft.len() {
        let automaton = &mut world.automata[i];
        let a = &mut world.aircraft[i];
        let target_h = cfg.layer_altitude(automaton.target_layer);
        if automaton.phase == SwitchPhase::Decel && a.vel.y * automaton.direction().sign() <= 0.0 {
            automaton.enter_capture();
        }
        if automaton.phase == SwitchPhase::Capture
            && (a.pos.y - target_h).abs() <= s.switching.capture_height
            && a.vel.y.abs() <= s.switching.capture_speed
        {
            automaton.complete();
            a.layer = automaton.target_layer;
            a.mode = FlightMode::Cruise;
            world.next_sample[i] = t_next + s.switching.trigger_interval;
            trace.events.push(EventRow { t: t_next, id: a.id, kind: EventKind::SwitchDone { layer: a.layer } });
        }
    }
    world.inbox = outbox;
    world.tick += 1;
    world.time = t_next;

    let conflicts = world.conflicts(s);
    let changes = world.episodes.observe(world.tick, &conflicts);
    for (a, b) in changes.started {
        trace.events.push(EventRow { t: t_next, id: a, kind: EventKind::ConflictStart { other: b } });
    }
    for (a, b) in changes.ended {
        trace.events.push(EventRow { t: t_next, id: a, kind: EventKind::ConflictEnd { other: b } });
    }

    for i in 0..world.aircraft.len() {
        let (capacity_bps, active_ris) = world.capacity_of(s, &channel, i)?;
        let a = &world.aircraft[i];
        trace.rows.push(TraceRow {
            t: t_next,
            id: a.id,
            x: a.pos.x,
            h: a.pos.y,
            vx: a.vel.x,
            vy: a.vel.y,
            layer: a.layer,
            mode: a.mode,
            capacity_bps,
            active_ris,
        });
    }
    Ok(())
}

pub fn run_with(scenario: &Scenario, options: &RunOptions) -> Result<SimOutput> {
    let mut world = World::new(scenario)?;
    let mut trace = SimTrace::default();
    let mut probe_series = Vec::new();
    let mut field_series = Vec::new();
    for _ in 0..scenario.ticks() {
        step(&mut world, scenario, &mut trace, options, &mut probe_series, &mut field_series)?;
    }
    let episodes = world.episodes.finish(world.tick);
    Ok(SimOutput { trace, episodes, field_series, probe_series, dt: scenario.dt })
}

pub fn run(scenario: &Scenario) -> Result<SimOutput> {
    run_with(scenario, &RunOptions::default())
}
