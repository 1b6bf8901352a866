//! Trace rows and their delimited-text form.

use std::fmt::Write as _;

use crate::airspace::FlightMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RisTag {
    Aircraft(u32),
    Stationary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub id: u32,
    pub x: f64,
    pub h: f64,
    pub vx: f64,
    pub vy: f64,
    pub layer: u8,
    pub mode: FlightMode,
    pub capacity_bps: f64,
    pub active_ris: Option<RisTag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    ConflictStart { other: u32 },
    ConflictEnd { other: u32 },
    LsReq { target_layer: u8 },
    SwitchDone { layer: u8 },
    SwitchCancel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRow {
    pub t: f64,
    pub id: u32,
    pub kind: EventKind,
}

impl EventRow {
    pub fn label(&self) -> &'static str {
        match self.kind {
            EventKind::ConflictStart { .. } => "CONFLICT_START",
            EventKind::ConflictEnd { .. } => "CONFLICT_END",
            EventKind::LsReq { .. } => "LS_REQ",
            EventKind::SwitchDone { .. } => "SWITCH_DONE",
            EventKind::SwitchCancel => "SWITCH_CANCEL",
        }
    }

    pub fn value(&self) -> String {
        match self.kind {
            EventKind::ConflictStart { other } | EventKind::ConflictEnd { other } => other.to_string(),
            EventKind::LsReq { target_layer } => target_layer.to_string(),
            EventKind::SwitchDone { layer } => layer.to_string(),
            EventKind::SwitchCancel => String::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub rows: Vec<TraceRow>,
    pub events: Vec<EventRow>,
}

pub const TRACE_HEADER: &str = "t,id,x,h,vx,vy,layer,mode,capacity_bps,active_ris_id";
pub const EVENT_HEADER: &str = "t,id,event,value";

impl SimTrace {
    pub fn count_events(&self, pred: impl Fn(&EventKind) -> bool) -> usize {
        self.events.iter().filter(|e| pred(&e.kind)).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.rows.len() * 80);
        s.push_str(TRACE_HEADER);
        s.push('\n');
        for r in &self.rows {
            let ris = match r.active_ris {
                Some(RisTag::Aircraft(id)) => id.to_string(),
                Some(RisTag::Stationary) => "S".to_string(),
                None => String::new(),
            };
            let _ = writeln!(
                s,
                "{:.3},{},{:.6},{:.6},{:.6},{:.6},{},{},{:.6},{}",
                r.t,
                r.id,
                r.x,
                r.h,
                r.vx,
                r.vy,
                r.layer,
                r.mode.as_str(),
                r.capacity_bps,
                ris
            );
        }
        s
    }

    pub fn events_csv(&self) -> String {
        let mut s = String::from(EVENT_HEADER);
        s.push('\n');
        for e in &self.events {
            let _ = writeln!(s, "{:.3},{},{},{}", e.t, e.id, e.label(), e.value());
        }
        s
    }
}
