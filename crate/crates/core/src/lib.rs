//! Layered urban air mobility simulation.
//!
//! The crate models a stack of flight layers in the vertical plane, a
//! base station that reaches high-layer aircraft through low-layer aircraft
//! carrying reconfigurable intelligent surfaces, and the flight controller
//! that keeps aircraft separated while the network is being served.

pub mod airspace;
pub mod error;
pub mod field;
pub mod geom;
pub mod netcalc;
pub mod planner;
pub mod ris;
pub mod scenario;
pub mod sim;
pub mod switching;

pub use airspace::{AircraftState, AirspaceConfig, FlightMode};
pub use error::{Error, Result};
pub use geom::Vec2;
pub use netcalc::{Ccdf, LatencyRateCurve, ProtocolParams, TransmissionKind};
pub use planner::{PlanningQuery, PsoParams};
pub use ris::{ChannelParams, PhaseShiftConfig, Resolution};
pub use scenario::{RisMode, Roster, Scenario};
pub use sim::{SimOutput, SimTrace};
