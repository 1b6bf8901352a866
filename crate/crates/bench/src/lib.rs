//! Fixtures shared by the benchmarks.

use uam_core::geom::Vec2;
use uam_core::planner::PlanningQuery;
use uam_core::ris::Resolution;
use uam_core::scenario::Scenario;

pub fn planning_query(elements: usize) -> PlanningQuery {
    PlanningQuery {
        bs_pos: Vec2::new(0.0, 0.0),
        low_pos: Vec2::new(380.0, 100.0),
        high_pos: Vec2::new(450.0, 200.0),
        low_altitude: 100.0,
        high_altitude: 200.0,
        xi: Resolution::Discrete(1.0 / 6.0),
        elements,
        horizon: 0.5,
        v_max: 70.0,
    }
}

/// Default scenario shortened to `seconds` of flight.
pub fn short_scenario(seconds: f64) -> Scenario {
    Scenario { duration: seconds, ..Scenario::default() }
}
