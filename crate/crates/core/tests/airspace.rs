use approx::assert_relative_eq;
use proptest::prelude::*;
use uam_core::airspace::{conflict, gap_in_conflict, horizontal_safe_separation, vertical_safe_separation};
use uam_core::{AircraftState, AirspaceConfig, FlightMode, Vec2};

fn aircraft(id: u32, layer: u8, pos: (f64, f64), vel: (f64, f64)) -> AircraftState {
    AircraftState {
        id,
        pos: Vec2::new(pos.0, pos.1),
        vel: Vec2::new(vel.0, vel.1),
        acc: Vec2::ZERO,
        layer,
        mode: FlightMode::Cruise,
    }
}

#[test]
fn horizontal_separation_at_low_layer_speed() {
    let cfg = AirspaceConfig::default();
    let d = horizontal_safe_separation(45.0, &cfg).unwrap();
    assert_relative_eq!(d, 0.0625 * 2025.0 + 22.5, max_relative = 1e-12);
    assert_relative_eq!(d, 149.0625, max_relative = 1e-12);
}

#[test]
fn horizontal_separation_degenerate_cases() {
    let cfg = AirspaceConfig::default();
    assert_eq!(horizontal_safe_separation(0.0, &cfg).unwrap(), 0.0);
    let equal = AirspaceConfig { leader_brake: 4.0, follower_brake: 4.0, ..cfg.clone() };
    for v in [1.0, 30.0, 60.0] {
        assert_relative_eq!(horizontal_safe_separation(v, &equal).unwrap(), 0.5 * v, max_relative = 1e-12);
    }
}

#[test]
fn horizontal_separation_rejects_bad_input() {
    let cfg = AirspaceConfig::default();
    assert!(horizontal_safe_separation(f64::NAN, &cfg).is_err());
    assert!(horizontal_safe_separation(-1.0, &cfg).is_err());
    let broken = AirspaceConfig { follower_brake: 0.0, ..cfg };
    assert!(horizontal_safe_separation(10.0, &broken).is_err());
}

#[test]
fn vertical_separation_worked_example() {
    let cfg = AirspaceConfig::default();
    let i = aircraft(0, 1, (0.0, 100.0), (60.0, 0.0));
    let j = aircraft(1, 2, (100.0, 200.0), (45.0, 0.0));
    let got = vertical_safe_separation(&i, &j, &cfg).unwrap();
    // Angle between line of sight and closing velocity from atan2.
    let s = j.pos - i.pos;
    let v = i.vel - j.vel;
    let gamma = s.y.atan2(s.x) - v.y.atan2(v.x);
    let expected = i.speed() * gamma.cos().max(0.0);
    assert_relative_eq!(got, expected, max_relative = 1e-12);
    assert!((got - 42.43).abs() < 5e-3);
}

#[test]
fn vertical_separation_perpendicular_and_receding() {
    let cfg = AirspaceConfig::default();
    let i = aircraft(0, 1, (0.0, 100.0), (50.0, 0.0));
    let above = aircraft(1, 2, (0.0, 200.0), (40.0, 0.0));
    assert!(vertical_safe_separation(&i, &above, &cfg).unwrap().abs() < 1e-12);
    let behind = aircraft(1, 2, (-100.0, 200.0), (40.0, 0.0));
    assert_eq!(vertical_safe_separation(&i, &behind, &cfg).unwrap(), 0.0);
    let same_vel = aircraft(1, 2, (100.0, 200.0), (50.0, 0.0));
    assert_eq!(vertical_safe_separation(&i, &same_vel, &cfg).unwrap(), 0.0);
    let coincident = aircraft(1, 2, (0.0, 100.0), (40.0, 0.0));
    assert!(vertical_safe_separation(&i, &coincident, &cfg).is_err());
}

#[test]
fn same_layer_conflict_boundary() {
    let cfg = AirspaceConfig::default();
    let sep = horizontal_safe_separation(45.0, &cfg).unwrap();
    assert!(gap_in_conflict(120.0, 45.0, &cfg));
    assert!(!gap_in_conflict(sep, 45.0, &cfg));
    let follower = aircraft(0, 1, (0.0, 100.0), (45.0, 0.0));
    let leader = aircraft(1, 1, (120.0, 100.0), (45.0, 0.0));
    assert!(conflict(&follower, &leader, &cfg));
    assert!(conflict(&leader, &follower, &cfg));
    let far = aircraft(1, 1, (sep, 100.0), (45.0, 0.0));
    assert!(!conflict(&follower, &far, &cfg));
}

#[test]
fn cross_layer_receding_is_clear() {
    let cfg = AirspaceConfig::default();
    let i = aircraft(0, 1, (0.0, 100.0), (45.0, 0.0));
    let j = aircraft(1, 2, (-30.0, 200.0), (30.0, 0.0));
    assert!(!conflict(&i, &j, &cfg));
}

#[test]
fn layer_lookup() {
    let cfg = AirspaceConfig::default();
    assert_eq!(cfg.layer_altitude(2), 200.0);
    assert_eq!(cfg.layer_of_altitude(149.0), 1);
    assert_eq!(cfg.layer_of_altitude(151.0), 2);
    assert_eq!(cfg.layer_of_altitude(-20.0), 0);
    assert_eq!(cfg.reference_speed(1), 45.0);
    assert!(cfg.validate().is_ok());
    assert!(AirspaceConfig { v_max: 50.0, ..cfg }.validate().is_err());
}

proptest! {
    #[test]
    fn vertical_separation_invariant_under_translation_and_common_velocity(
        px in -500.0..500.0f64, ph in 0.0..250.0f64,
        dx in -300.0..300.0f64, dh in 20.0..150.0f64,
        vi in (0.0..70.0f64, -5.0..5.0f64), vj in (0.0..70.0f64, -5.0..5.0f64),
        shift in (-1000.0..1000.0f64, -100.0..100.0f64),
        turn in -3.0..3.0f64,
    ) {
        let cfg = AirspaceConfig::default();
        let i = aircraft(0, 1, (px, ph), vi);
        let j = aircraft(1, 2, (px + dx, ph + dh), vj);
        let base = vertical_safe_separation(&i, &j, &cfg).unwrap();

        let mut ti = i.clone();
        let mut tj = j.clone();
        ti.pos += Vec2::new(shift.0, shift.1);
        tj.pos += Vec2::new(shift.0, shift.1);
        let moved = vertical_safe_separation(&ti, &tj, &cfg).unwrap();
        prop_assert!((moved - base).abs() <= 1e-9 * base.abs().max(1.0));

        // Common velocity chosen so that ‖v_i‖ is unchanged: rotate v_i.
        let (c, s) = (turn.cos(), turn.sin());
        let vi_new = Vec2::new(c * i.vel.x - s * i.vel.y, s * i.vel.x + c * i.vel.y);
        let w = vi_new - i.vel;
        let mut ci = i.clone();
        let mut cj = j.clone();
        ci.vel += w;
        cj.vel += w;
        prop_assert!((ci.speed() - i.speed()).abs() < 1e-9);
        let boosted = vertical_safe_separation(&ci, &cj, &cfg).unwrap();
        prop_assert!((boosted - base).abs() <= 1e-9 * base.abs().max(1.0));
    }

    #[test]
    fn horizontal_separation_increases_with_speed(v in 0.0..70.0f64, dv in 0.01..10.0f64) {
        let cfg = AirspaceConfig::default();
        let a = horizontal_safe_separation(v, &cfg).unwrap();
        let b = horizontal_safe_separation(v + dv, &cfg).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn same_layer_conflict_is_symmetric(x1 in 0.0..2000.0f64, x2 in 0.0..2000.0f64, v1 in 30.0..60.0f64, v2 in 30.0..60.0f64) {
        let cfg = AirspaceConfig::default();
        let a = aircraft(0, 1, (x1, 100.0), (v1, 0.0));
        let b = aircraft(1, 1, (x2, 100.0), (v2, 0.0));
        prop_assert_eq!(conflict(&a, &b, &cfg), conflict(&b, &a, &cfg));
    }
}
