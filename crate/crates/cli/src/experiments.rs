//! Multi-run experiments behind the sweep subcommands.

use rayon::prelude::*;

use uam_core::netcalc::{delay_bound, failure_ccdf, TransmissionKind};
use uam_core::ris::Resolution;
use uam_core::scenario::Roster;
use uam_core::sim::{run, run_with, PhaseProbe, RunOptions, SimOutput};
use uam_core::{Result, Scenario};

/// Failure probability at the deadline for one stack over the load sweep.
#[derive(Debug, Clone)]
pub struct DelayCurve {
    pub kind: TransmissionKind,
    pub loads: Vec<f64>,
    pub failure: Vec<f64>,
    pub delay_bound: Vec<Option<f64>>,
}

impl DelayCurve {
    /// First load at which the failure bound reaches `1 − tol`.
    pub fn saturation_load(&self, tol: f64) -> Option<f64> {
        self.loads.iter().zip(&self.failure).find(|(_, &f)| f >= 1.0 - tol).map(|(l, _)| *l)
    }

    /// Load at which the failure bound first reaches `level`, interpolated linearly.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        for i in 1..self.loads.len() {
            let (f0, f1) = (self.failure[i - 1], self.failure[i]);
            if f0 < level && f1 >= level {
                let (l0, l1) = (self.loads[i - 1], self.loads[i]);
                return Some(l0 + (level - f0) / (f1 - f0) * (l1 - l0));
            }
        }
        None
    }
}

pub fn sweep_loads(s: &Scenario) -> Vec<f64> {
    let n = ((s.netcalc.load_max - s.netcalc.load_min) / s.netcalc.load_step).round() as usize;
    (0..=n).map(|i| s.netcalc.load_min + i as f64 * s.netcalc.load_step).collect()
}

pub fn delay_sweep(s: &Scenario) -> Result<Vec<DelayCurve>> {
    let loads = sweep_loads(s);
    let nc = &s.netcalc;
    TransmissionKind::ALL
        .iter()
        .map(|&kind| {
            let points: Vec<(f64, Option<f64>)> = loads
                .par_iter()
                .map(|&load| {
                    let ccdf = failure_ccdf(kind, load, nc.t, nc.grid_step, &s.protocol)?;
                    let f = *ccdf.values.last().expect("non-empty grid");
                    let bound = delay_bound(kind, load, nc.epsilon, nc.t_max, nc.grid_step, &s.protocol)?;
                    Ok((f, bound))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(DelayCurve {
                kind,
                loads: loads.clone(),
                failure: points.iter().map(|p| p.0).collect(),
                delay_bound: points.iter().map(|p| p.1).collect(),
            })
        })
        .collect()
}

pub fn phase_probes() -> Vec<PhaseProbe> {
    vec![
        PhaseProbe::Quantized(Resolution::Continuous),
        PhaseProbe::Quantized(Resolution::Discrete(1.0)),
        PhaseProbe::Quantized(Resolution::Discrete(1.0 / 3.0)),
        PhaseProbe::Quantized(Resolution::Discrete(1.0 / 4.0)),
        PhaseProbe::Quantized(Resolution::Discrete(1.0 / 6.0)),
        PhaseProbe::Quantized(Resolution::Discrete(1.0 / 12.0)),
        PhaseProbe::FixedZero,
    ]
}

#[derive(Debug, Clone)]
pub struct PhaseSweep {
    pub probes: Vec<PhaseProbe>,
    pub times: Vec<f64>,
    /// `series[p][n]`: mean capacity of probe `p` at sample `n`.
    pub series: Vec<Vec<f64>>,
}

impl PhaseSweep {
    pub fn mean(&self, probe: usize) -> f64 {
        let s = &self.series[probe];
        if s.is_empty() {
            0.0
        } else {
            s.iter().sum::<f64>() / s.len() as f64
        }
    }

    pub fn index_of(&self, probe: PhaseProbe) -> Option<usize> {
        self.probes.iter().position(|p| *p == probe)
    }
}

pub fn phase_sweep(s: &Scenario) -> Result<PhaseSweep> {
    let probes = phase_probes();
    let out = run_with(s, &RunOptions { phase_probes: probes.clone() })?;
    let times = out.probe_series.iter().map(|(t, _)| *t).collect();
    let series = (0..probes.len()).map(|p| out.probe_series.iter().map(|(_, v)| v[p]).collect()).collect();
    Ok(PhaseSweep { probes, times, series })
}

/// Scenario with `per_layer` aircraft in every populated layer.
pub fn with_roster(s: &Scenario, per_layer: usize) -> Scenario {
    let mut out = s.clone();
    out.roster = match &s.roster {
        Roster::Platoon { layers, gap_factor, gap_jitter, speed_jitter, .. } => Roster::Platoon {
            per_layer,
            layers: layers.clone(),
            gap_factor: *gap_factor,
            gap_jitter: *gap_jitter,
            speed_jitter: *speed_jitter,
        },
        Roster::Explicit(_) => {
            Roster::Platoon { per_layer, layers: vec![1, 2], gap_factor: 1.0, gap_jitter: 0.0, speed_jitter: 0.0 }
        }
    };
    out
}

/// Runs of `s` over `s.sweep.seeds` consecutive seeds starting at `s.seed`.
pub fn seed_runs(s: &Scenario) -> Result<Vec<SimOutput>> {
    (0..s.sweep.seeds)
        .into_par_iter()
        .map(|k| run(&Scenario { seed: s.seed + k, ..s.clone() }))
        .collect()
}

#[derive(Debug, Clone)]
pub struct IprCurve {
    pub per_layer: usize,
    pub switching: bool,
    /// Smallest t_dur with IPR = 1, per seed.
    pub thresholds: Vec<f64>,
    pub t_dur: Vec<f64>,
    /// IPR averaged over seeds at each `t_dur`.
    pub ipr: Vec<f64>,
    pub conflicts: Vec<usize>,
}

impl IprCurve {
    pub fn mean_threshold(&self) -> f64 {
        self.thresholds.iter().sum::<f64>() / self.thresholds.len() as f64
    }

    pub fn label(&self) -> String {
        format!("{}_{}", self.per_layer, if self.switching { "on" } else { "off" })
    }
}

pub fn ipr_curve(s: &Scenario, per_layer: usize, switching: bool) -> Result<IprCurve> {
    let mut base = with_roster(s, per_layer);
    if !switching {
        base.p_ls = 0.0;
    }
    let runs = seed_runs(&base)?;
    let n = (s.sweep.t_dur_max / s.sweep.t_dur_step).round() as usize;
    let t_dur: Vec<f64> = (0..=n).map(|i| i as f64 * s.sweep.t_dur_step).collect();
    let ipr = t_dur
        .iter()
        .map(|&t| runs.iter().map(|r| r.ipr(t)).sum::<f64>() / runs.len() as f64)
        .collect();
    Ok(IprCurve {
        per_layer,
        switching,
        thresholds: runs.iter().map(|r| r.ipr_threshold()).collect(),
        t_dur,
        ipr,
        conflicts: runs.iter().map(|r| r.episodes.len()).collect(),
    })
}

pub fn ipr_sweep(s: &Scenario) -> Result<Vec<IprCurve>> {
    let mut out = Vec::new();
    for &n in &s.sweep.rosters {
        for switching in [true, false] {
            out.push(ipr_curve(s, n, switching)?);
        }
    }
    Ok(out)
}
