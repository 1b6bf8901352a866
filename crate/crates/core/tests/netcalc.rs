use approx::assert_relative_eq;
use proptest::prelude::*;
use uam_core::netcalc::{
    failure_ccdf, failure_probability, min_plus_convolve, poisson_delay_tail, poisson_upper_tail,
    retransmission_ccdf, service_curve_stack, success_tail_ccdf,
};
use uam_core::{Ccdf, Error, LatencyRateCurve, ProtocolParams, TransmissionKind};

#[test]
fn latency_rate_convolution_against_grid() {
    let a = LatencyRateCurve::new(5.0, 1.0).unwrap();
    let b = LatencyRateCurve::new(3.0, 2.0).unwrap();
    let c = min_plus_convolve(&a, &b).unwrap();
    assert_eq!(c, LatencyRateCurve { rate: 3.0, latency: 3.0 });

    let delta = 0.01;
    let n = 1001;
    let (ta, tb) = (a.tabulate(delta, n), b.tabulate(delta, n));
    for x in 0..n {
        let inf = (0..=x).map(|y| ta[y] + tb[x - y]).fold(f64::INFINITY, f64::min);
        assert!((inf - c.eval(x as f64 * delta)).abs() <= 3.0 * delta + 1e-9);
    }
}

#[test]
fn identity_curve_is_neutral() {
    let a = LatencyRateCurve::new(7.0, 0.4).unwrap();
    assert_eq!(min_plus_convolve(&a, &LatencyRateCurve::identity()).unwrap(), a);
    assert!(LatencyRateCurve::new(0.0, 1.0).is_err());
    assert!(LatencyRateCurve::new(1.0, -1.0).is_err());
}

#[test]
fn ccdf_convolution_and_grid_checks() {
    let a = Ccdf::new(0.1, vec![1.0, 0.5, 0.2, 0.1]).unwrap();
    let b = Ccdf::new(0.1, vec![0.3, 0.2, 0.1, 0.0]).unwrap();
    let c = min_plus_convolve(&a, &b).unwrap();
    // Capped at 1 after the infimum.
    let expected = [1.0, 0.8, 0.5, 0.4];
    for (got, want) in c.values.iter().zip(expected) {
        assert!((got - want).abs() < 1e-12);
    }
    let other = Ccdf::new(0.2, vec![1.0, 0.5, 0.2, 0.1]).unwrap();
    assert!(min_plus_convolve(&a, &other).is_err());
    assert!(Ccdf::new(0.1, vec![0.5, 0.6]).is_err());
    assert!(Ccdf::new(0.1, vec![1.5]).is_err());
    assert!(Ccdf::new(0.0, vec![1.0]).is_err());
}

#[test]
fn direct_stack_with_reference_rates() {
    let p = ProtocolParams { zeta: 1.0, r_ris1: 80.0, r_ris2: 80.0, ..ProtocolParams::default() };
    let d = service_curve_stack(TransmissionKind::Direct, &p);
    assert_relative_eq!(d.latency, 3.0 / 20.0 + 3.0 / 20.0 + 10.0 / 40.0, max_relative = 1e-12);
    assert_relative_eq!(d.latency, 0.55, max_relative = 1e-12);
    assert_eq!(d.rate, 20.0);
    let c = service_curve_stack(TransmissionKind::Control, &p);
    assert_relative_eq!(c.latency, 0.5, max_relative = 1e-12);
}

#[test]
fn ris_stack_without_data() {
    let p = ProtocolParams { l_data: 0.0, ..ProtocolParams::default() };
    let r = service_curve_stack(TransmissionKind::Ris, &p);
    assert_relative_eq!(r.latency, p.zeta * 9.0 / p.r_omni, max_relative = 1e-12);
}

#[test]
fn equal_rates_give_equal_stack_rates() {
    let p = ProtocolParams { r_omni: 50.0, r_direct: 50.0, r_ris1: 50.0, r_ris2: 50.0, ..ProtocolParams::default() };
    for kind in TransmissionKind::ALL {
        assert_eq!(service_curve_stack(kind, &p).rate, 50.0);
    }
}

fn naive_upper_tail(mean: f64, start: u64) -> f64 {
    let mut term = (-mean).exp();
    let mut lower = 0.0;
    for k in 0..start {
        lower += term;
        term *= mean / (k as f64 + 1.0);
    }
    1.0 - lower
}

#[test]
fn poisson_tail_examples() {
    assert_relative_eq!(poisson_upper_tail(1.0, 2).unwrap(), 1.0 - 2.0 / std::f64::consts::E, max_relative = 1e-12);
    assert!((poisson_upper_tail(1.0, 2).unwrap() - 0.26424).abs() < 1e-5);
    assert_eq!(poisson_upper_tail(3.0, 0).unwrap(), 1.0);
    assert_eq!(poisson_upper_tail(0.0, 1).unwrap(), 0.0);
    assert!(poisson_upper_tail(-1.0, 1).is_err());
    assert!(poisson_delay_tail(-1.0, 0.0).is_err());
    assert!(poisson_delay_tail(1.0, -1.0).is_err());
}

#[test]
fn retransmission_examples() {
    let c = retransmission_ccdf(0.5, 1.0, 1.0, 3).unwrap();
    assert_relative_eq!(c.values[0], 0.5, max_relative = 1e-12);
    assert_relative_eq!(c.values[2], 0.125, max_relative = 1e-12);
    let none = retransmission_ccdf(0.0, 0.05, 0.01, 50).unwrap();
    assert!(none.values.iter().all(|&v| v == 0.0));
    assert!(retransmission_ccdf(1.0, 1.0, 1.0, 3).is_err());
    assert!(retransmission_ccdf(0.5, 0.0, 1.0, 3).is_err());
}

#[test]
fn failure_vanishes_without_load() {
    let p = ProtocolParams::default();
    assert_eq!(failure_probability(TransmissionKind::Control, 0.0, 1.5, &p, 0.005).unwrap(), 0.0);
    assert!(failure_probability(TransmissionKind::Direct, 0.0, 1.5, &p, 0.005).unwrap() < 1e-9);
    // Three lossy control messages leave a p_loss^9 residue at 1.5 s.
    let ris = failure_probability(TransmissionKind::Ris, 0.0, 1.5, &p, 0.005).unwrap();
    assert!((ris - 3e-9).abs() < 1e-12, "{ris:e}");
    assert!(failure_probability(TransmissionKind::Ris, 0.0, 2.5, &p, 0.005).unwrap() < 1e-9);
}

#[test]
fn lossless_failure_is_the_pure_tail() {
    let p = ProtocolParams { p_loss: 0.0, ..ProtocolParams::default() };
    let step = 0.005;
    let points = (1.5 / step) as usize + 1;
    for kind in TransmissionKind::ALL {
        let full = failure_ccdf(kind, 20.0, 1.5, step, &p).unwrap();
        let pure = success_tail_ccdf(kind, &p.with_load(20.0), step, points).unwrap();
        assert_eq!(full.values, pure.values);
    }
}

#[test]
fn coarse_grid_is_a_config_error() {
    let p = ProtocolParams::default();
    let err = failure_probability(TransmissionKind::Ris, 10.0, 1.0, &p, 0.2).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert!(failure_probability(TransmissionKind::Ris, -1.0, 1.0, &p, 0.01).is_err());
}

#[test]
fn failure_grows_with_load() {
    let p = ProtocolParams::default();
    for kind in TransmissionKind::ALL {
        let mut prev = 0.0;
        for load in [0.0, 10.0, 20.0, 30.0, 40.0, 50.0] {
            let f = failure_probability(kind, load, 1.5, &p, 0.005).unwrap();
            assert!(f + 1e-12 >= prev, "{kind:?} at {load}");
            prev = f;
        }
    }
}

proptest! {
    #[test]
    fn poisson_tail_matches_direct_sum(mean in 0.0..30.0f64, start in 0u64..60) {
        let got = poisson_upper_tail(mean, start).unwrap();
        let want = naive_upper_tail(mean, start).clamp(0.0, 1.0);
        prop_assert!((got - want).abs() < 1e-10, "{} vs {}", got, want);
    }

    #[test]
    fn latency_rate_convolution_is_commutative(r1 in 0.1..100.0f64, t1 in 0.0..5.0f64, r2 in 0.1..100.0f64, t2 in 0.0..5.0f64) {
        let a = LatencyRateCurve::new(r1, t1).unwrap();
        let b = LatencyRateCurve::new(r2, t2).unwrap();
        prop_assert_eq!(min_plus_convolve(&a, &b).unwrap(), min_plus_convolve(&b, &a).unwrap());
    }

    #[test]
    fn failure_ccdf_is_a_ccdf(load in 0.0..60.0f64, k in 0usize..3) {
        let kind = TransmissionKind::ALL[k];
        let c = failure_ccdf(kind, load, 1.5, 0.01, &ProtocolParams::default()).unwrap();
        prop_assert!(c.values.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(c.values.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
