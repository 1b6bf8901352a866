//! Stochastic network-calculus delay bounds for the three transmission stacks.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Default grid step for tabulated CCDFs.
pub const DEFAULT_GRID_STEP: f64 = 0.005;

/// Slack used when taking ceilings of ratios that should be exact integers.
const CEIL_SLACK: f64 = 1e-9;

const TAIL_TOLERANCE: f64 = 1e-12;

fn ceil_tol(x: f64) -> f64 {
    (x - CEIL_SLACK).ceil()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyRateCurve {
    pub rate: f64,
    pub latency: f64,
}

impl LatencyRateCurve {
    pub fn new(rate: f64, latency: f64) -> Result<Self> {
        if !(rate > 0.0) || !(latency >= 0.0) {
            return Err(Error::domain(format!("invalid latency-rate curve ({rate}, {latency})")));
        }
        Ok(LatencyRateCurve { rate, latency })
    }

    /// Neutral element of the min-plus convolution.
    pub fn identity() -> Self {
        LatencyRateCurve { rate: f64::INFINITY, latency: 0.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.latency {
            0.0
        } else {
            self.rate * (t - self.latency)
        }
    }

    pub fn tabulate(&self, step: f64, points: usize) -> Vec<f64> {
        (0..points).map(|i| self.eval(i as f64 * step)).collect()
    }
}

/// Complementary CDF tabulated on `[0, (n-1)·step]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ccdf {
    pub step: f64,
    pub values: Vec<f64>,
}

impl Ccdf {
    pub fn new(step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || values.is_empty() {
            return Err(Error::domain("CCDF needs a positive step and at least one point"));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::domain("CCDF values must lie in [0, 1]"));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::domain("CCDF values must be non-increasing"));
        }
        Ok(Ccdf { step, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    /// Value at the grid point nearest to `t` (clamped to the grid).
    pub fn at(&self, t: f64) -> f64 {
        let i = (t / self.step).round().max(0.0) as usize;
        self.values[i.min(self.values.len() - 1)]
    }

    fn same_grid(&self, other: &Ccdf) -> Result<()> {
        if self.values.len() != other.values.len() || (self.step - other.step).abs() > 1e-15 * self.step {
            return Err(Error::config("CCDFs are tabulated on different grids"));
        }
        Ok(())
    }
}

/// Min-plus convolution `(a⊗b)(x) = inf_{y∈[0,x]} a(y) + b(x−y)`.
pub trait MinPlus: Sized {
    fn min_plus(&self, other: &Self) -> Result<Self>;
}

impl MinPlus for LatencyRateCurve {
    fn min_plus(&self, other: &Self) -> Result<Self> {
        Ok(LatencyRateCurve {
            rate: self.rate.min(other.rate),
            latency: self.latency + other.latency,
        })
    }
}

impl MinPlus for Ccdf {
    fn min_plus(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        let values = grid_min_plus(&self.values, &other.values)?
            .into_iter()
            .map(|v| v.min(1.0))
            .collect();
        Ok(Ccdf { step: self.step, values })
    }
}

pub fn min_plus_convolve<T: MinPlus>(a: &T, b: &T) -> Result<T> {
    a.min_plus(b)
}

/// Grid min-plus convolution of two equally long tabulations.
pub fn grid_min_plus(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::config("tabulations have different lengths"));
    }
    let out = (0..a.len())
        .map(|x| {
            (0..=x)
                .map(|y| a[y] + b[x - y])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransmissionKind {
    Control,
    Direct,
    Ris,
}

impl TransmissionKind {
    pub const ALL: [TransmissionKind; 3] = [TransmissionKind::Control, TransmissionKind::Direct, TransmissionKind::Ris];

    pub fn as_str(self) -> &'static str {
        match self {
            TransmissionKind::Control => "control",
            TransmissionKind::Direct => "direct",
            TransmissionKind::Ris => "ris",
        }
    }
}

/// Dual-plane protocol constants. Volumes in Mb, rates in Mb/s.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    pub r_omni: f64,
    pub r_direct: f64,
    pub r_ris1: f64,
    pub r_ris2: f64,
    pub l_rts: f64,
    pub l_cts: f64,
    pub l_rtr: f64,
    pub l_data: f64,
    pub zeta: f64,
    pub p_loss: f64,
    pub ttl_rts: f64,
    pub ttl_cts: f64,
    pub ttl_rtr: f64,
    /// Poisson arrival rate of packets (1/s).
    pub lambda: f64,
    /// Arrival rate per unit of offered load; `lambda = arrivals_per_load · load`.
    pub arrivals_per_load: f64,
    /// Size of one arriving packet (Mb).
    pub packet_size: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            r_omni: 20.0,
            r_direct: 40.0,
            r_ris1: 100.0,
            r_ris2: 100.0,
            l_rts: 3.0,
            l_cts: 3.0,
            l_rtr: 3.0,
            l_data: 10.0,
            zeta: 0.9,
            p_loss: 0.1,
            ttl_rts: 0.05,
            ttl_cts: 0.05,
            ttl_rtr: 0.05,
            lambda: 3.5,
            arrivals_per_load: 0.35,
            packet_size: 0.25,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [self.r_omni, self.r_direct, self.r_ris1, self.r_ris2];
        if rates.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::config("rates must be positive"));
        }
        let volumes = [self.l_rts, self.l_cts, self.l_rtr, self.l_data];
        if volumes.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::config("message volumes must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.p_loss) {
            return Err(Error::config("p_loss must lie in [0, 1)"));
        }
        if !(self.zeta >= 0.0) || !(self.lambda >= 0.0) || !(self.arrivals_per_load >= 0.0) {
            return Err(Error::config("zeta, lambda and arrivals_per_load must be non-negative"));
        }
        if [self.ttl_rts, self.ttl_cts, self.ttl_rtr].iter().any(|t| !(*t > 0.0)) {
            return Err(Error::config("TTL thresholds must be positive"));
        }
        if !(self.packet_size > 0.0) {
            return Err(Error::config("packet size must be positive"));
        }
        Ok(())
    }

    /// Parameters for an offered `load`: data volume and arrival rate follow the load.
    pub fn with_load(&self, load: f64) -> ProtocolParams {
        ProtocolParams { l_data: load, lambda: self.arrivals_per_load * load, ..self.clone() }
    }

    fn retransmission_ttls(&self, kind: TransmissionKind) -> Vec<f64> {
        match kind {
            TransmissionKind::Control => vec![],
            TransmissionKind::Direct => vec![self.ttl_rts, self.ttl_cts],
            TransmissionKind::Ris => vec![self.ttl_rts, self.ttl_cts, self.ttl_rtr],
        }
    }
}

/// Cascaded latency-rate service of a transmission stack.
pub fn service_curve_stack(kind: TransmissionKind, p: &ProtocolParams) -> LatencyRateCurve {
    let z = p.zeta;
    match kind {
        TransmissionKind::Control => LatencyRateCurve { rate: p.r_omni, latency: z * p.l_data / p.r_omni },
        TransmissionKind::Direct => LatencyRateCurve {
            rate: p.r_omni.min(p.r_direct),
            latency: z * (p.l_rts / p.r_omni + p.l_cts / p.r_omni + p.l_data / p.r_direct),
        },
        TransmissionKind::Ris => LatencyRateCurve {
            rate: (3.0 * p.r_omni).min(p.r_ris1).min(p.r_ris2),
            latency: z
                * (p.l_rts / p.r_omni + p.l_cts / p.r_omni + p.l_rtr / p.r_omni + p.l_data / p.r_ris1
                    + p.l_data / p.r_ris2),
        },
    }
}

/// Service seen by the data packets: the stack latency with the rate of the
/// segment that carries the payload.
pub fn data_plane_curve(kind: TransmissionKind, p: &ProtocolParams) -> LatencyRateCurve {
    let stack = service_curve_stack(kind, p);
    let rate = match kind {
        TransmissionKind::Control => p.r_omni,
        TransmissionKind::Direct => p.r_direct,
        TransmissionKind::Ris => p.r_ris1.min(p.r_ris2),
    };
    LatencyRateCurve { rate, latency: stack.latency }
}

/// `P{N ≥ start}` for `N ~ Poisson(mean)`, absolute error below 1e-12.
pub fn poisson_upper_tail(mean: f64, start: u64) -> Result<f64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::domain(format!("Poisson mean must be finite and non-negative, got {mean}")));
    }
    if start == 0 {
        return Ok(1.0);
    }
    if mean == 0.0 {
        return Ok(0.0);
    }
    let log_pmf = |k: u64| -mean + k as f64 * mean.ln() - ln_gamma(k as f64 + 1.0);
    let k0 = start as f64;
    if k0 > mean {
        // Terms decrease geometrically with ratio mean/(k+1) < 1.
        let mut k = start;
        let mut term = log_pmf(k).exp();
        let mut sum = 0.0;
        loop {
            sum += term;
            let ratio = mean / (k as f64 + 1.0);
            let remainder_bound = term * ratio / (1.0 - ratio);
            if remainder_bound < TAIL_TOLERANCE * 1e-3 || term == 0.0 {
                break;
            }
            k += 1;
            term *= ratio;
        }
        Ok(sum.clamp(0.0, 1.0))
    } else {
        // Complement of the lower sum, summed downward from start-1.
        let mut k = start - 1;
        let mut term = log_pmf(k).exp();
        let mut lower = 0.0;
        loop {
            lower += term;
            if k == 0 {
                break;
            }
            let ratio = k as f64 / mean;
            term *= ratio;
            k -= 1;
            // Below the mean the ratio k/mean < 1, so the rest is bounded geometrically.
            if term * ratio / (1.0 - ratio).max(f64::EPSILON) < TAIL_TOLERANCE * 1e-3 {
                break;
            }
        }
        Ok((1.0 - lower).clamp(0.0, 1.0))
    }
}

/// Statistical delay tail: Poisson upper tail starting at `⌈threshold + λt⌉`.
pub fn poisson_delay_tail(lambda_t: f64, threshold: f64) -> Result<f64> {
    if !(lambda_t >= 0.0) || !(threshold >= 0.0) {
        return Err(Error::domain("Poisson tail inputs must be non-negative"));
    }
    let start = ceil_tol(threshold + lambda_t).max(0.0);
    poisson_upper_tail(lambda_t, start as u64)
}

/// `p_loss^⌈t/ttl + 1⌉` on a grid of `points` with spacing `step`.
pub fn retransmission_ccdf(p_loss: f64, ttl: f64, step: f64, points: usize) -> Result<Ccdf> {
    if !(0.0..1.0).contains(&p_loss) {
        return Err(Error::domain("p_loss must lie in [0, 1)"));
    }
    if !(ttl > 0.0) {
        return Err(Error::domain("TTL must be positive"));
    }
    let values = (0..points)
        .map(|i| {
            let t = i as f64 * step;
            p_loss.powf(ceil_tol(t / ttl + 1.0))
        })
        .collect();
    Ccdf::new(step, values)
}

/// Tail of the success-path delay: probability that the arrivals within the
/// budget exceed what the stack serves in it, made non-increasing.
pub fn success_tail_ccdf(kind: TransmissionKind, p: &ProtocolParams, step: f64, points: usize) -> Result<Ccdf> {
    let curve = data_plane_curve(kind, p);
    let mut values = Vec::with_capacity(points);
    let mut running = 1.0f64;
    for i in 0..points {
        let t = i as f64 * step;
        let served = curve.eval(t) / p.packet_size;
        let mean = p.lambda * t / p.packet_size;
        let start = ceil_tol(served).max(0.0) as u64;
        let v = if start == 0 { 1.0 } else { poisson_upper_tail(mean, start)? };
        running = running.min(v);
        values.push(running);
    }
    Ccdf::new(step, values)
}

/// Bound on `P{D > t}` as a function of `t` on `[0, t_max]`.
pub fn failure_ccdf(
    kind: TransmissionKind,
    load: f64,
    t_max: f64,
    step: f64,
    p: &ProtocolParams,
) -> Result<Ccdf> {
    if !(load >= 0.0) || !load.is_finite() {
        return Err(Error::domain(format!("load must be non-negative, got {load}")));
    }
    if !(t_max >= 0.0) || !(step > 0.0) {
        return Err(Error::domain("time horizon must be non-negative and the step positive"));
    }
    let pl = p.with_load(load);
    pl.validate()?;
    let points = (t_max / step).round() as usize + 1;
    let mut acc = success_tail_ccdf(kind, &pl, step, points)?;
    for ttl in pl.retransmission_ttls(kind) {
        let retx = retransmission_ccdf(pl.p_loss, ttl, step, points)?;
        acc = acc.min_plus(&retx)?;
    }
    for v in &mut acc.values {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(acc)
}

/// Bound on `P{D > t}` for one transmission of `load` Mb.
pub fn failure_probability(
    kind: TransmissionKind,
    load: f64,
    t: f64,
    p: &ProtocolParams,
    step: f64,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be non-negative, got {t}")));
    }
    if t > 0.0 && step > t / 10.0 {
        return Err(Error::config(format!("grid step {step} too coarse for t = {t}")));
    }
    let ccdf = failure_ccdf(kind, load, t, step, p)?;
    Ok(*ccdf.values.last().expect("non-empty grid"))
}

/// Smallest grid time at which the failure bound drops to `epsilon`, if any.
pub fn delay_bound(
    kind: TransmissionKind,
    load: f64,
    epsilon: f64,
    t_max: f64,
    step: f64,
    p: &ProtocolParams,
) -> Result<Option<f64>> {
    let ccdf = failure_ccdf(kind, load, t_max, step, p)?;
    Ok(ccdf.values.iter().position(|&v| v <= epsilon).map(|i| i as f64 * step))
}
