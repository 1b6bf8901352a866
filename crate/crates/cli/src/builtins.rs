//! Scenarios shipped with the binary, one per reproduced figure or table.

use uam_core::{Result, Scenario};

pub const BUILTINS: &[(&str, &str)] = &[
    ("table1-5perlayer", "name = table1-5perlayer\n"),
    ("fig5-delay-bounds", "name = fig5-delay-bounds\n"),
    ("fig6a-airborne-ris", "name = fig6a-airborne-ris\nris_mode = AirborneRis\n"),
    (
        "fig6b-airborne-ris-interference",
        "name = fig6b-airborne-ris-interference\nris_mode = AirborneRisWithInterference\n",
    ),
    ("fig6c-stationary-ris", "name = fig6c-stationary-ris\nris_mode = StationaryRis(400,100)\n"),
    ("fig9-phase-resolution", "name = fig9-phase-resolution\n"),
    ("fig10-velocity", "name = fig10-velocity\n"),
    ("fig11-cpf-no-goal", "name = fig11-cpf-no-goal\nweights.goal = 0\n"),
    ("fig12-ipr", "name = fig12-ipr\nsweep.rosters = 5, 20, 30, 50\nsweep.seeds = 10\n"),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

pub fn text(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn builtin(name: &str) -> Option<Result<Scenario>> {
    text(name).map(|t| Scenario::from_text(t, &format!("builtin:{name}")))
}
