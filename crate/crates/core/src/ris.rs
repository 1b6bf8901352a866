//! BS → RIS → aircraft channel model, SNR, capacity and RIS phase design.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geom::Vec2;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interference {
    pub pos: Vec2,
    /// Transmit power of the interferer (W).
    pub power: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    /// Linear power gain at 1 m.
    pub beta_ref: f64,
    pub alpha_bs_k: f64,
    pub alpha_bs_i: f64,
    pub alpha_i_k: f64,
    /// BS transmit power (W).
    pub p_bs: f64,
    /// Noise power (W).
    pub sigma2: f64,
    pub bandwidth: f64,
    pub interference: Option<Interference>,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            beta_ref: db_to_linear(-30.0),
            alpha_bs_k: 2.5,
            alpha_bs_i: 2.0,
            alpha_i_k: 2.2,
            p_bs: dbm_to_watts(30.0),
            sigma2: dbm_to_watts(-169.0),
            bandwidth: 1.0,
            interference: None,
        }
    }
}

impl ChannelParams {
    /// Interferer used by the interference scenarios: 1 dBm at (800, 100).
    pub fn table_interferer(&self) -> Interference {
        Interference {
            pos: Vec2::new(800.0, 100.0),
            power: dbm_to_watts(1.0),
            alpha: self.alpha_i_k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.beta_ref, self.p_bs, self.sigma2, self.bandwidth];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::config("beta, transmit power, noise and bandwidth must be positive"));
        }
        if [self.alpha_bs_k, self.alpha_bs_i, self.alpha_i_k].iter().any(|a| !(*a >= 1.0)) {
            return Err(Error::config("path-loss exponents must be at least 1"));
        }
        if let Some(int) = self.interference {
            if !(int.power > 0.0) || !(int.alpha >= 1.0) {
                return Err(Error::config("interference power must be positive, exponent >= 1"));
            }
        }
        Ok(())
    }

    /// Interference power received at `k`.
    pub fn interference_at(&self, k: Vec2) -> Result<f64> {
        match self.interference {
            None => Ok(0.0),
            Some(int) => {
                let d = k.distance(int.pos);
                if d <= 0.0 {
                    return Err(Error::domain("receiver coincides with interferer"));
                }
                Ok(int.power * self.beta_ref / d.powf(int.alpha))
            }
        }
    }
}

/// Phase-shift resolution. `Discrete(xi)` allows multiples of `xi·π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolution {
    Continuous,
    Discrete(f64),
}

impl Resolution {
    pub fn validate(self) -> Result<()> {
        match self {
            Resolution::Continuous => Ok(()),
            Resolution::Discrete(xi) if xi > 0.0 && xi.is_finite() => Ok(()),
            Resolution::Discrete(xi) => Err(Error::config(format!("resolution must be positive, got {xi}"))),
        }
    }

    /// Round a phase to this resolution.
    pub fn apply(self, theta: f64) -> f64 {
        match self {
            Resolution::Continuous => theta,
            Resolution::Discrete(xi) => quantize_phase(theta, xi),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftConfig {
    pub phases: Vec<f64>,
    pub resolution: Resolution,
}

impl PhaseShiftConfig {
    pub fn zeros(elements: usize) -> Result<Self> {
        array_side(elements)?;
        Ok(PhaseShiftConfig { phases: vec![0.0; elements], resolution: Resolution::Continuous })
    }

    pub fn elements(&self) -> usize {
        self.phases.len()
    }

    /// Round every phase to `xi·π` multiples, wrapped into [0, 2π).
    pub fn quantized(&self, resolution: Resolution) -> PhaseShiftConfig {
        let phases = self.phases.iter().map(|&t| normalize_angle(resolution.apply(t))).collect();
        PhaseShiftConfig { phases, resolution }
    }
}

/// Side length of a square array of `elements`.
pub fn array_side(elements: usize) -> Result<usize> {
    if elements == 0 {
        return Err(Error::domain("RIS must have at least one element"));
    }
    let side = (elements as f64).sqrt().round() as usize;
    if side * side != elements {
        return Err(Error::domain(format!("element count {elements} is not a perfect square")));
    }
    Ok(side)
}

pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

pub fn direct_gain(d: f64, alpha: f64, p: &ChannelParams) -> Result<Complex64> {
    if !(d > 0.0) {
        return Err(Error::domain(format!("link distance must be positive, got {d}")));
    }
    Ok(Complex64::new((p.beta_ref / d.powf(alpha)).sqrt(), 0.0))
}

/// Cosines of the BS→RIS and RIS→aircraft incidence angles.
fn incidence_cosines(bs: Vec2, ris: Vec2, k: Vec2) -> Result<(f64, f64, f64, f64)> {
    let d1 = bs.distance(ris);
    let d2 = ris.distance(k);
    if d1 == 0.0 || d2 == 0.0 || bs.distance(k) == 0.0 {
        return Err(Error::domain("BS, RIS and receiver must be distinct"));
    }
    Ok(((ris.x - bs.x) / d1, (k.x - ris.x) / d2, d1, d2))
}

/// Difference of incidence cosines that drives the per-element phase slope.
pub fn cosine_gap(bs: Vec2, ris: Vec2, k: Vec2) -> Result<f64> {
    let (c1, c2, _, _) = incidence_cosines(bs, ris, k)?;
    Ok(c1 - c2)
}

/// Upper bound on the cascaded amplitude, reached when all elements add in phase.
pub fn cascaded_bound(bs: Vec2, ris: Vec2, k: Vec2, elements: usize, p: &ChannelParams) -> Result<f64> {
    let (_, _, d1, d2) = incidence_cosines(bs, ris, k)?;
    Ok(elements as f64 * p.beta_ref / (d1.powf(p.alpha_bs_i) * d2.powf(p.alpha_i_k)).sqrt())
}

pub fn cascaded_gain(
    bs: Vec2,
    ris: Vec2,
    k: Vec2,
    phases: &PhaseShiftConfig,
    p: &ChannelParams,
) -> Result<Complex64> {
    let side = array_side(phases.elements())?;
    let (c1, c2, d1, d2) = incidence_cosines(bs, ris, k)?;
    let amp = p.beta_ref / (d1.powf(p.alpha_bs_i) * d2.powf(p.alpha_i_k)).sqrt();
    let gap = c1 - c2;
    let sum: Complex64 = phases
        .phases
        .iter()
        .enumerate()
        .map(|(l, &theta)| {
            let u = (l % side) as f64;
            Complex64::from_polar(1.0, PI * u * gap + theta)
        })
        .sum();
    Ok(sum * amp)
}

pub fn snr(bs: Vec2, ris: Vec2, k: Vec2, phases: &PhaseShiftConfig, p: &ChannelParams) -> Result<f64> {
    let h_d = direct_gain(bs.distance(k), p.alpha_bs_k, p)?;
    let h_c = cascaded_gain(bs, ris, k, phases, p)?;
    Ok((h_d + h_c).norm_sqr() * p.p_bs / (p.sigma2 + p.interference_at(k)?))
}

/// SNR of the BS → aircraft link without any RIS contribution.
pub fn direct_snr(bs: Vec2, k: Vec2, p: &ChannelParams) -> Result<f64> {
    let h_d = direct_gain(bs.distance(k), p.alpha_bs_k, p)?;
    Ok(h_d.norm_sqr() * p.p_bs / (p.sigma2 + p.interference_at(k)?))
}

pub fn capacity(snr_value: f64, p: &ChannelParams) -> Result<f64> {
    if !(snr_value >= 0.0) {
        return Err(Error::domain(format!("SNR must be non-negative, got {snr_value}")));
    }
    Ok(p.bandwidth * snr_value.ln_1p() / std::f64::consts::LN_2)
}

/// Element phases that align the cascade internally and with the direct path.
pub fn optimal_phase_shift(bs: Vec2, ris: Vec2, k: Vec2, elements: usize) -> Result<PhaseShiftConfig> {
    let side = array_side(elements)?;
    let gap = cosine_gap(bs, ris, k)?;
    if bs.distance(k) == 0.0 {
        return Err(Error::domain("BS and receiver coincide"));
    }
    // Aligned cascade summands come out real and positive like the LoS
    // direct term, so no common offset is needed to co-phase the two paths.
    let phases = (0..elements)
        .map(|l| normalize_angle(-PI * (l % side) as f64 * gap))
        .collect();
    Ok(PhaseShiftConfig { phases, resolution: Resolution::Continuous })
}

/// Nearest multiple `m·xi·π` to `theta`; ties go to the smaller `m`.
pub fn quantize_phase(theta: f64, xi: f64) -> f64 {
    let step = xi * PI;
    let m = (theta / step - 0.5).ceil();
    m * step
}
