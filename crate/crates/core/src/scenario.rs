//! Scenario configuration: defaults, validation, roster generation and the
//! flat `key = value` text format.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::airspace::{horizontal_safe_separation, AircraftState, AirspaceConfig, LAYER_COUNT};
use crate::error::{Error, Result};
use crate::field::PotentialWeights;
use crate::geom::Vec2;
use crate::netcalc::{ProtocolParams, DEFAULT_GRID_STEP};
use crate::planner::PsoParams;
use crate::ris::{array_side, db_to_linear, dbm_to_watts, ChannelParams, Interference, Resolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RisMode {
    AirborneRis,
    AirborneRisWithInterference,
    StationaryRis(Vec2),
}

impl RisMode {
    pub fn planner_enabled(self) -> bool {
        !matches!(self, RisMode::StationaryRis(_))
    }

    pub fn label(self) -> String {
        match self {
            RisMode::AirborneRis => "AirborneRis".into(),
            RisMode::AirborneRisWithInterference => "AirborneRisWithInterference".into(),
            RisMode::StationaryRis(p) => format!("StationaryRis({},{})", p.x, p.y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AircraftInit {
    pub layer: u8,
    pub x: f64,
    pub v: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Roster {
    Explicit(Vec<AircraftInit>),
    /// Each layer holds a platoon spaced at `gap_factor` times the layer's
    /// safe separation, widened by a random factor in `[0, gap_jitter]`.
    Platoon { per_layer: usize, layers: Vec<u8>, gap_factor: f64, gap_jitter: f64, speed_jitter: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingParams {
    /// Initial back-off window.
    pub tr_max: u32,
    /// Minimum time between two trigger draws of one aircraft.
    pub trigger_interval: f64,
    pub capture_height: f64,
    pub capture_speed: f64,
    /// Half-width of the window used to compare layer densities.
    pub density_window: f64,
    /// Layers that may be switched into.
    pub layers: Vec<u8>,
    /// Required free slot at the predicted arrival point, as a fraction
    /// of the separation; 0 disables the check.
    pub landing_clearance: f64,
}

impl Default for SwitchingParams {
    fn default() -> Self {
        SwitchingParams {
            tr_max: 2,
            trigger_interval: 0.1,
            capture_height: 2.0,
            capture_speed: 1.0,
            density_window: 500.0,
            layers: vec![0, 1, 2],
            landing_clearance: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetcalcParams {
    /// Deadline of the failure-probability series.
    pub t: f64,
    pub grid_step: f64,
    pub load_min: f64,
    pub load_max: f64,
    pub load_step: f64,
    /// Violation probability for reported delay bounds.
    pub epsilon: f64,
    /// Horizon for delay-bound search.
    pub t_max: f64,
}

impl Default for NetcalcParams {
    fn default() -> Self {
        NetcalcParams { t: 1.5, grid_step: DEFAULT_GRID_STEP, load_min: 0.0, load_max: 60.0, load_step: 0.5, epsilon: 0.01, t_max: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepParams {
    /// Number of consecutive seeds averaged by multi-seed experiments.
    pub seeds: u64,
    pub rosters: Vec<usize>,
    /// IPR curve sampling.
    pub t_dur_step: f64,
    pub t_dur_max: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams { seeds: 10, rosters: vec![5, 20, 30, 50], t_dur_step: 0.1, t_dur_max: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub airspace: AirspaceConfig,
    pub channel: ChannelParams,
    pub interferer: Interference,
    pub protocol: ProtocolParams,
    pub netcalc: NetcalcParams,
    pub weights: PotentialWeights,
    pub pso: PsoParams,
    pub switching: SwitchingParams,
    pub sweep: SweepParams,
    pub roster: Roster,
    pub bs_pos: Vec2,
    pub ris_mode: RisMode,
    pub xi: Resolution,
    pub ris_elements: usize,
    pub dt: f64,
    pub q: u32,
    pub duration: f64,
    pub seed: u64,
    pub p_ls: f64,
    pub course_length: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        let channel = ChannelParams::default();
        let interferer = channel.table_interferer();
        Scenario {
            name: "default".into(),
            airspace: AirspaceConfig::default(),
            channel,
            interferer,
            protocol: ProtocolParams::default(),
            netcalc: NetcalcParams::default(),
            weights: PotentialWeights::default(),
            pso: PsoParams::default(),
            switching: SwitchingParams::default(),
            sweep: SweepParams::default(),
            roster: Roster::Platoon {
                per_layer: 5,
                layers: vec![1, 2],
                gap_factor: 1.01,
                gap_jitter: 0.02,
                speed_jitter: 0.2,
            },
            bs_pos: Vec2::new(0.0, 0.0),
            ris_mode: RisMode::AirborneRis,
            xi: Resolution::Discrete(1.0 / 6.0),
            ris_elements: 256,
            dt: 0.1,
            q: 5,
            duration: 40.0,
            seed: 1,
            p_ls: 0.4,
            course_length: 2000.0,
        }
    }
}

/// Mixes a scenario seed with a stream index.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Scenario {
    /// Channel with the interferer attached when the RIS mode calls for it.
    pub fn effective_channel(&self) -> ChannelParams {
        let mut c = self.channel.clone();
        c.interference = match self.ris_mode {
            RisMode::AirborneRisWithInterference => Some(self.interferer),
            _ => None,
        };
        c
    }

    pub fn ticks(&self) -> u64 {
        (self.duration / self.dt).round() as u64
    }

    pub fn horizon(&self) -> f64 {
        f64::from(self.q) * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        self.airspace.validate()?;
        self.channel.validate()?;
        self.protocol.validate()?;
        self.weights.validate()?;
        self.pso.validate()?;
        self.xi.validate()?;
        array_side(self.ris_elements).map_err(|e| Error::config(e.to_string()))?;
        if !(self.dt > 0.0) {
            return Err(Error::config("dt must be positive"));
        }
        if self.q < 1 {
            return Err(Error::config("q must be at least 1"));
        }
        if !(self.duration >= self.dt) {
            return Err(Error::config("duration must be at least one time step"));
        }
        if !(0.0..=0.5).contains(&self.p_ls) {
            return Err(Error::config("p_ls must lie in [0, 0.5]"));
        }
        if !(self.course_length > 0.0) {
            return Err(Error::config("course length must be positive"));
        }
        if !(1..=crate::switching::TR_CEILING).contains(&self.switching.tr_max) {
            return Err(Error::config("switching.tr_max must lie in [1, 32]"));
        }
        if !(self.switching.trigger_interval >= 0.0) {
            return Err(Error::config("switching.trigger_interval must be non-negative"));
        }
        if !(self.switching.landing_clearance >= 0.0) {
            return Err(Error::config("switching.landing_clearance must be non-negative"));
        }
        if self.switching.layers.iter().any(|&l| usize::from(l) >= LAYER_COUNT) {
            return Err(Error::config("switching.layers must name existing layers"));
        }
        if !(self.netcalc.grid_step > 0.0 && self.netcalc.load_step > 0.0 && self.netcalc.load_max >= self.netcalc.load_min) {
            return Err(Error::config("netcalc sweep needs positive steps and an ordered load range"));
        }
        if self.sweep.seeds == 0 || self.sweep.rosters.is_empty() || !(self.sweep.t_dur_step > 0.0) {
            return Err(Error::config("sweep needs at least one seed, one roster and a positive t_dur step"));
        }
        match &self.roster {
            Roster::Explicit(list) => {
                for a in list {
                    if usize::from(a.layer) >= LAYER_COUNT || !a.x.is_finite() {
                        return Err(Error::config("explicit aircraft must sit in an existing layer at a finite x"));
                    }
                    if let Some(v) = a.v {
                        if !(v >= 0.0 && v <= self.airspace.v_max) {
                            return Err(Error::config("explicit aircraft speed outside [0, v_max]"));
                        }
                    }
                }
            }
            Roster::Platoon { layers, gap_factor, gap_jitter, speed_jitter, .. } => {
                if layers.iter().any(|&l| usize::from(l) >= LAYER_COUNT) {
                    return Err(Error::config("roster.layers must name existing layers"));
                }
                let mut seen = HashSet::new();
                if !layers.iter().all(|l| seen.insert(*l)) {
                    return Err(Error::config("roster.layers lists a layer twice"));
                }
                if !(*gap_factor > 0.0 && *gap_jitter >= 0.0 && *speed_jitter >= 0.0) {
                    return Err(Error::config("roster gap factor must be positive, jitters non-negative"));
                }
            }
        }
        Ok(())
    }

    /// Initial aircraft, sorted by id. Generated rosters depend on the seed.
    pub fn initial_aircraft(&self) -> Result<Vec<AircraftState>> {
        let cfg = &self.airspace;
        let mut out = Vec::new();
        match &self.roster {
            Roster::Explicit(list) => {
                for (id, a) in list.iter().enumerate() {
                    let v = a.v.unwrap_or_else(|| cfg.reference_speed(a.layer));
                    let x = a.x.rem_euclid(self.course_length);
                    out.push(AircraftState::cruising(id as u32, a.layer, x, v, cfg));
                }
            }
            Roster::Platoon { per_layer, layers, gap_factor, gap_jitter, speed_jitter } => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, 0x726f_7374));
                let mut id = 0u32;
                for &layer in layers {
                    if *per_layer == 0 {
                        continue;
                    }
                    let v_ref = cfg.reference_speed(layer);
                    let nominal = gap_factor * horizontal_safe_separation(v_ref, cfg)?;
                    let gaps: Vec<f64> = (0..*per_layer)
                        .map(|_| nominal * (1.0 + gap_jitter * rng.gen::<f64>()))
                        .collect();
                    // Crowded layers are spread evenly over the whole course.
                    let span: f64 = gaps.iter().sum();
                    let scale = if span > self.course_length { self.course_length / span } else { 1.0 };
                    let mut x = rng.gen::<f64>() * self.course_length;
                    for g in gaps {
                        let v = v_ref + speed_jitter * (2.0 * rng.gen::<f64>() - 1.0);
                        let v = v.clamp(0.0, cfg.v_max);
                        out.push(AircraftState::cruising(id, layer, x.rem_euclid(self.course_length), v, cfg));
                        id += 1;
                        x += g * scale;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let err = |message: String| Error::Scenario { location: key.to_string(), message };
        let num = |v: &str| parse_f64(v).map_err(err);
        let int = |v: &str| v.trim().parse::<u64>().map_err(|e| err(format!("expected an integer: {e}")));
        let a = &mut self.airspace;
        let c = &mut self.channel;
        let p = &mut self.protocol;
        let w = &mut self.weights;
        match key {
            "name" => self.name = value.trim().to_string(),
            "seed" => self.seed = int(value)?,
            "dt" => self.dt = num(value)?,
            "q" => self.q = int(value)? as u32,
            "duration" => self.duration = num(value)?,
            "p_ls" => self.p_ls = num(value)?,
            "xi" => self.xi = parse_resolution(value).map_err(err)?,
            "ris_mode" => self.ris_mode = parse_ris_mode(value).map_err(err)?,
            "ris_elements" => self.ris_elements = int(value)? as usize,
            "bs_pos" => self.bs_pos = parse_point(value).map_err(err)?,
            "course_length" => self.course_length = num(value)?,

            "airspace.layer_spacing" => a.layer_spacing = num(value)?,
            "airspace.expected_speed" => {
                let v = parse_list(value).map_err(err)?;
                if v.len() != LAYER_COUNT {
                    return Err(err(format!("expected {LAYER_COUNT} speeds, got {}", v.len())));
                }
                a.expected_speed = [v[0], v[1], v[2]];
            }
            "airspace.v_max" => a.v_max = num(value)?,
            "airspace.a_max" => a.a_max = num(value)?,
            "airspace.leader_brake" => a.leader_brake = num(value)?,
            "airspace.follower_brake" => a.follower_brake = num(value)?,
            "airspace.perception_delay" => a.perception_delay = num(value)?,
            "airspace.reaction_delay" => a.reaction_delay = num(value)?,
            "airspace.vertical_coeff" => a.vertical_coeff = num(value)?,

            "channel.beta_ref_db" => c.beta_ref = db_to_linear(num(value)?),
            "channel.alpha_bs_k" => c.alpha_bs_k = num(value)?,
            "channel.alpha_bs_i" => c.alpha_bs_i = num(value)?,
            "channel.alpha_i_k" => c.alpha_i_k = num(value)?,
            "channel.p_bs_dbm" => c.p_bs = dbm_to_watts(num(value)?),
            "channel.sigma2_dbm" => c.sigma2 = dbm_to_watts(num(value)?),
            "channel.bandwidth" => c.bandwidth = num(value)?,
            "channel.interference_pos" => self.interferer.pos = parse_point(value).map_err(err)?,
            "channel.interference_dbm" => self.interferer.power = dbm_to_watts(num(value)?),
            "channel.interference_alpha" => self.interferer.alpha = num(value)?,

            "protocol.r_omni" => p.r_omni = num(value)?,
            "protocol.r_direct" => p.r_direct = num(value)?,
            "protocol.r_ris1" => p.r_ris1 = num(value)?,
            "protocol.r_ris2" => p.r_ris2 = num(value)?,
            "protocol.l_rts" => p.l_rts = num(value)?,
            "protocol.l_cts" => p.l_cts = num(value)?,
            "protocol.l_rtr" => p.l_rtr = num(value)?,
            "protocol.l_data" => p.l_data = num(value)?,
            "protocol.zeta" => p.zeta = num(value)?,
            "protocol.p_loss" => p.p_loss = num(value)?,
            "protocol.ttl_rts" => p.ttl_rts = num(value)?,
            "protocol.ttl_cts" => p.ttl_cts = num(value)?,
            "protocol.ttl_rtr" => p.ttl_rtr = num(value)?,
            "protocol.lambda" => p.lambda = num(value)?,
            "protocol.arrivals_per_load" => p.arrivals_per_load = num(value)?,
            "protocol.packet_size" => p.packet_size = num(value)?,

            "netcalc.t" => self.netcalc.t = num(value)?,
            "netcalc.grid_step" => self.netcalc.grid_step = num(value)?,
            "netcalc.load_min" => self.netcalc.load_min = num(value)?,
            "netcalc.load_max" => self.netcalc.load_max = num(value)?,
            "netcalc.load_step" => self.netcalc.load_step = num(value)?,
            "netcalc.epsilon" => self.netcalc.epsilon = num(value)?,
            "netcalc.t_max" => self.netcalc.t_max = num(value)?,

            "weights.attr" => w.w_attr = num(value)?,
            "weights.stab" => w.w_stab = num(value)?,
            "weights.repu" => w.w_repu = num(value)?,
            "weights.layer" => w.w_layer = num(value)?,
            "weights.goal" => w.w_goal = num(value)?,
            "weights.consensus_gain" => w.consensus_gain = num(value)?,
            "weights.neighbor_radius" => w.neighbor_radius = num(value)?,

            "pso.swarm_size" => self.pso.swarm_size = int(value)? as usize,
            "pso.max_iter" => self.pso.max_iter = int(value)? as usize,
            "pso.inertia" => self.pso.inertia = num(value)?,
            "pso.cognitive" => self.pso.cognitive = num(value)?,
            "pso.social" => self.pso.social = num(value)?,
            "pso.v_clamp" => self.pso.v_clamp = num(value)?,
            "pso.seed" => self.pso.seed = int(value)?,

            "switching.tr_max" => self.switching.tr_max = int(value)? as u32,
            "switching.trigger_interval" => self.switching.trigger_interval = num(value)?,
            "switching.capture_height" => self.switching.capture_height = num(value)?,
            "switching.capture_speed" => self.switching.capture_speed = num(value)?,
            "switching.density_window" => self.switching.density_window = num(value)?,
            "switching.layers" => self.switching.layers = parse_layers(value).map_err(err)?,
            "switching.landing_clearance" => self.switching.landing_clearance = num(value)?,

            "sweep.seeds" => self.sweep.seeds = int(value)?,
            "sweep.rosters" => {
                self.sweep.rosters = parse_list(value)
                    .map_err(err)?
                    .into_iter()
                    .map(|v| v as usize)
                    .collect()
            }
            "sweep.t_dur_step" => self.sweep.t_dur_step = num(value)?,
            "sweep.t_dur_max" => self.sweep.t_dur_max = num(value)?,

            "roster.per_layer" | "roster.layers" | "roster.gap_factor" | "roster.gap_jitter" | "roster.speed_jitter" => {
                self.set_platoon(key, value)?
            }
            _ => {
                if let Some(idx) = key.strip_prefix("aircraft.") {
                    let idx: usize = idx.parse().map_err(|_| err("aircraft keys are aircraft.<index>".into()))?;
                    let init = parse_aircraft(value).map_err(err)?;
                    let list = match &mut self.roster {
                        Roster::Explicit(list) => list,
                        roster => {
                            *roster = Roster::Explicit(Vec::new());
                            match roster {
                                Roster::Explicit(list) => list,
                                _ => unreachable!(),
                            }
                        }
                    };
                    if idx != list.len() {
                        return Err(err(format!("aircraft must be listed in order; expected index {}", list.len())));
                    }
                    list.push(init);
                } else {
                    return Err(err("unknown key".into()));
                }
            }
        }
        Ok(())
    }

    fn set_platoon(&mut self, key: &str, value: &str) -> Result<()> {
        let err = |message: String| Error::Scenario { location: key.to_string(), message };
        if let Roster::Explicit(_) = self.roster {
            self.roster = Roster::Platoon { per_layer: 0, layers: vec![1, 2], gap_factor: 1.0, gap_jitter: 0.0, speed_jitter: 0.0 };
        }
        let Roster::Platoon { per_layer, layers, gap_factor, gap_jitter, speed_jitter } = &mut self.roster else {
            unreachable!()
        };
        match key {
            "roster.per_layer" => {
                *per_layer = value.trim().parse().map_err(|e| err(format!("expected an integer: {e}")))?
            }
            "roster.layers" => *layers = parse_layers(value).map_err(err)?,
            "roster.gap_factor" => *gap_factor = parse_f64(value).map_err(err)?,
            "roster.gap_jitter" => *gap_jitter = parse_f64(value).map_err(err)?,
            "roster.speed_jitter" => *speed_jitter = parse_f64(value).map_err(err)?,
            _ => unreachable!(),
        }
        Ok(())
    }

    /// Apply a whole scenario document. Blank lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str, source: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Scenario {
                location: format!("{source}:{}", n + 1),
                message: "expected `key = value`".into(),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| match e {
                Error::Scenario { location, message } => Error::Scenario {
                    location: format!("{source}:{} ({location})", n + 1),
                    message,
                },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let mut s = Scenario::default();
        s.apply_text(text, source)?;
        s.validate()?;
        Ok(s)
    }
}

fn parse_f64(v: &str) -> std::result::Result<f64, String> {
    let v = v.trim();
    v.parse::<f64>().map_err(|_| format!("expected a number, got `{v}`")).and_then(|x| {
        if x.is_finite() {
            Ok(x)
        } else {
            Err(format!("expected a finite number, got `{v}`"))
        }
    })
}

fn parse_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',').map(parse_f64).collect()
}

fn parse_layers(v: &str) -> std::result::Result<Vec<u8>, String> {
    v.split(',')
        .map(|s| s.trim().parse::<u8>().map_err(|_| format!("expected a layer index, got `{}`", s.trim())))
        .collect()
}

fn parse_point(v: &str) -> std::result::Result<Vec2, String> {
    let inner = v.trim().trim_start_matches('(').trim_end_matches(')');
    let xs = parse_list(inner)?;
    if xs.len() != 2 {
        return Err(format!("expected a point `(x, h)`, got `{v}`"));
    }
    Ok(Vec2::new(xs[0], xs[1]))
}

fn parse_aircraft(v: &str) -> std::result::Result<AircraftInit, String> {
    let xs = parse_list(v)?;
    match xs.as_slice() {
        [layer, x] => Ok(AircraftInit { layer: *layer as u8, x: *x, v: None }),
        [layer, x, speed] => Ok(AircraftInit { layer: *layer as u8, x: *x, v: Some(*speed) }),
        _ => Err(format!("expected `layer, x[, v]`, got `{v}`")),
    }
}

/// `continuous`, `pi/6`, `1/6` or a decimal fraction of π.
pub fn parse_resolution(v: &str) -> std::result::Result<Resolution, String> {
    let s = v.trim().to_ascii_lowercase().replace(' ', "");
    if s == "continuous" {
        return Ok(Resolution::Continuous);
    }
    let frac = s.strip_prefix("pi").map(|rest| {
        if rest.is_empty() {
            "1".to_string()
        } else {
            format!("1{rest}")
        }
    });
    let body = frac.unwrap_or(s);
    let value = match body.split_once('/') {
        Some((n, d)) => parse_f64(n)? / parse_f64(d)?,
        None => parse_f64(&body)?,
    };
    if !(value > 0.0) || !value.is_finite() {
        return Err(format!("resolution must be positive, got `{v}`"));
    }
    Ok(Resolution::Discrete(value))
}

pub fn format_resolution(r: Resolution) -> String {
    match r {
        Resolution::Continuous => "continuous".into(),
        Resolution::Discrete(xi) => {
            let inv = 1.0 / xi;
            if (inv - inv.round()).abs() < 1e-9 {
                if inv.round() == 1.0 {
                    "pi".into()
                } else {
                    format!("pi/{}", inv.round() as u64)
                }
            } else {
                format!("{}pi", xi)
            }
        }
    }
}

pub fn parse_ris_mode(v: &str) -> std::result::Result<RisMode, String> {
    let s = v.trim();
    match s {
        "AirborneRis" => Ok(RisMode::AirborneRis),
        "AirborneRisWithInterference" => Ok(RisMode::AirborneRisWithInterference),
        _ => {
            if let Some(rest) = s.strip_prefix("StationaryRis") {
                let pos = if rest.trim().is_empty() { Vec2::new(400.0, 100.0) } else { parse_point(rest)? };
                Ok(RisMode::StationaryRis(pos))
            } else {
                Err(format!("unknown RIS mode `{s}`"))
            }
        }
    }
}
