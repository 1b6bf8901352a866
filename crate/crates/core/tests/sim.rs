use uam_core::scenario::AircraftInit;
use uam_core::sim::metrics::ipr_from_durations;
use uam_core::sim::{run, step, EventKind, EpisodeTracker, FieldSample, RunOptions, World};
use uam_core::{FlightMode, RisMode, Roster, Scenario, SimTrace, Vec2};

fn short(duration: f64, seed: u64) -> Scenario {
    Scenario { duration, seed, ..Scenario::default() }
}

fn tick(world: &mut World, s: &Scenario, trace: &mut SimTrace) {
    let mut probes = Vec::new();
    let mut field: Vec<FieldSample> = Vec::new();
    step(world, s, trace, &RunOptions::default(), &mut probes, &mut field).unwrap();
}

#[test]
fn empty_roster_only_advances_time() {
    let s = Scenario { roster: Roster::Explicit(vec![]), ..short(1.0, 1) };
    let mut world = World::new(&s).unwrap();
    let mut trace = SimTrace::default();
    for _ in 0..3 {
        tick(&mut world, &s, &mut trace);
    }
    assert!(world.aircraft.is_empty());
    assert_eq!(world.tick, 3);
    assert!((world.time - 0.3).abs() < 1e-12);
    assert!(trace.rows.is_empty() && trace.events.is_empty());
}

#[test]
fn lone_aircraft_at_equilibrium_coasts() {
    let s = Scenario {
        roster: Roster::Explicit(vec![AircraftInit { layer: 1, x: 100.0, v: None }]),
        ..short(1.0, 1)
    };
    let mut world = World::new(&s).unwrap();
    let mut trace = SimTrace::default();
    for n in 1..=5 {
        tick(&mut world, &s, &mut trace);
        let a = &world.aircraft[0];
        assert!((a.pos.x - (100.0 + 4.5 * n as f64)).abs() < 1e-9);
        assert_eq!(a.pos.y, 100.0);
        assert_eq!(a.vel, Vec2::new(45.0, 0.0));
        assert_eq!(a.mode, FlightMode::Cruise);
    }
}

#[test]
fn one_tick_gives_one_row_per_aircraft() {
    let s = short(0.1, 1);
    let out = run(&s).unwrap();
    let n = s.initial_aircraft().unwrap().len();
    assert_eq!(n, 10);
    assert_eq!(out.trace.rows.len(), n);
    assert!(out.trace.rows.iter().all(|r| (r.t - 0.1).abs() < 1e-12));
}

#[test]
fn same_seed_same_bytes() {
    let s = short(20.0, 3);
    let a = run(&s).unwrap();
    let b = run(&s).unwrap();
    assert_eq!(a.trace.to_csv(), b.trace.to_csv());
    assert_eq!(a.trace.events_csv(), b.trace.events_csv());
}

#[test]
fn thread_count_does_not_change_trace() {
    let s = short(15.0, 4);
    let with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run(&s).unwrap())
    };
    let one = with(1);
    let four = with(4);
    assert_eq!(one.trace.to_csv(), four.trace.to_csv());
    assert_eq!(one.trace.events_csv(), four.trace.events_csv());
}

#[test]
fn episode_tracker_merges_short_gaps() {
    let mut t = EpisodeTracker::new(10);
    let c = t.observe(0, &[(0, 1)]);
    assert_eq!(c.started, vec![(0, 1)]);
    let c = t.observe(1, &[]);
    assert_eq!(c.ended, vec![(0, 1)]);
    let c = t.observe(5, &[(0, 1)]);
    assert_eq!(c.started, vec![(0, 1)]);
    t.observe(6, &[]);
    t.observe(30, &[(0, 1)]);
    let eps = t.finish(32);
    assert_eq!(eps.len(), 2);
    assert_eq!((eps[0].start_tick, eps[0].end_tick), (0, 6));
    assert_eq!((eps[1].start_tick, eps[1].end_tick), (30, 32));
}

#[test]
fn ipr_examples() {
    let mut d = vec![0.1; 8];
    d.extend([2.0, 3.0]);
    assert!((ipr_from_durations(&d, 1.0) - 0.8).abs() < 1e-12);
    assert_eq!(ipr_from_durations(&d, 5.0), 1.0);
    assert_eq!(ipr_from_durations(&[], 0.0), 1.0);
}

#[test]
fn stationary_ris_never_switches() {
    for seed in 1..=3 {
        let s = Scenario { ris_mode: RisMode::StationaryRis(Vec2::new(400.0, 100.0)), ..short(40.0, seed) };
        let out = run(&s).unwrap();
        assert_eq!(out.switch_completions(), 0);
        assert_eq!(out.ls_requests(), 0);
    }
}

#[test]
fn trace_invariants() {
    for seed in 1..=3 {
        let s = short(40.0, seed);
        let out = run(&s).unwrap();
        let h = s.airspace.layer_spacing;
        for r in &out.trace.rows {
            assert!(r.vx.hypot(r.vy) <= s.airspace.v_max + 1e-9);
            if r.mode == FlightMode::Cruise {
                assert!((r.h - f64::from(r.layer) * h).abs() <= h / 2.0, "{r:?}");
            }
        }
        let mut prev = 0.0;
        for k in 0..=100 {
            let v = out.ipr(k as f64 * 0.1);
            assert!(v + 1e-12 >= prev);
            prev = v;
        }
        assert_eq!(out.ipr(out.ipr_threshold()), 1.0);
        let starts = out.trace.count_events(|k| matches!(k, EventKind::ConflictStart { .. }));
        let ends = out.trace.count_events(|k| matches!(k, EventKind::ConflictEnd { .. }));
        assert!(starts >= ends && starts - ends <= out.episodes.len());
    }
}

#[test]
fn completed_switch_lands_in_target_layer() {
    let mut checked = 0;
    for seed in 1..=5 {
        let s = short(40.0, seed);
        let out = run(&s).unwrap();
        for e in &out.trace.events {
            let EventKind::SwitchDone { layer } = e.kind else { continue };
            let row = out
                .trace
                .rows
                .iter()
                .find(|r| r.id == e.id && (r.t - e.t).abs() < 1e-9)
                .expect("row at completion");
            assert_eq!(row.layer, layer);
            assert!((row.h - s.airspace.layer_altitude(layer)).abs() <= s.switching.capture_height);
            assert!(row.vy.abs() <= s.switching.capture_speed);
            assert!((row.vx - s.airspace.reference_speed(layer)).abs() < 1.0);
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn consensus_settles_a_single_layer() {
    let s = Scenario {
        roster: Roster::Platoon { per_layer: 6, layers: vec![1], gap_factor: 1.5, gap_jitter: 0.0, speed_jitter: 3.0 },
        p_ls: 0.0,
        ..short(10.0, 2)
    };
    let out = run(&s).unwrap();
    let last = out.trace.rows.iter().map(|r| r.t).fold(0.0, f64::max);
    let worst = out
        .trace
        .rows
        .iter()
        .filter(|r| (r.t - last).abs() < 1e-9)
        .map(|r| (r.vx - 45.0).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.5, "{worst}");
}
