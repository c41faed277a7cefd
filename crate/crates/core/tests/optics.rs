use std::f64::consts::PI;

use franson_core::emission::{simulate_pair_stream, EmitterConfig, PairStream};
use franson_core::optics::{
    apply_detector, delay_difference, direct_detect, franson_route_and_detect, michelson_fringe_scan, DetectorModel,
    FransonSetup, MichelsonScan, TimeTag, UnbalancedMZI, CHANNEL_X, CHANNEL_XX,
};
use franson_core::physics::{Basis, DriveParams, QuantumDotParams};
use franson_core::rng::seeded;

fn setup(phase_sum: f64) -> FransonSetup {
    FransonSetup {
        mzi1: UnbalancedMZI::default().with_phase(phase_sum),
        mzi2: UnbalancedMZI::default(),
        det1: DetectorModel::ideal(),
        det2: DetectorModel::ideal(),
        basis: Basis::Horizontal,
        fss: 28e-6,
        pump_coherence_time: f64::INFINITY,
        lock_phase_sigma: 0.0,
    }
}

fn stream(c0: f64, seed: u64) -> PairStream {
    let mut qd = QuantumDotParams::default();
    qd.t1_x = 50.0;
    qd.t1_xx = 30.0;
    let mut c = EmitterConfig::for_dot(&qd, 1e-6, 2e11, seed);
    c.pair_contrast_c0 = c0;
    simulate_pair_stream(&c, &DriveParams::default()).unwrap()
}

/// Central coincidences and detected singles from one routed stream.
fn central_and_singles(tags: &[TimeTag]) -> (usize, usize, usize) {
    let xx: Vec<u64> = tags.iter().filter(|t| t.channel == CHANNEL_XX).map(|t| t.time).collect();
    let x: Vec<u64> = tags.iter().filter(|t| t.channel == CHANNEL_X).map(|t| t.time).collect();
    let mut j = 0;
    let mut central = 0;
    for &a in &xx {
        while j < x.len() && x[j] < a {
            j += 1;
        }
        if j < x.len() && x[j] - a < 600 {
            central += 1;
        }
    }
    (central, xx.len(), x.len())
}

#[test]
fn arm_delay_difference() {
    let mzi = UnbalancedMZI::default();
    assert!((delay_difference(&mzi) - 2.0 * 0.215 / 2.99792458e8 * 1e12).abs() < 1e-9);
    assert!((delay_difference(&mzi) - 1434.3).abs() < 0.1);
}

#[test]
fn central_coincidences_follow_the_phase_sum() {
    let pairs = stream(1.0, 11);
    let n = pairs.events.len() as f64;
    for (phase, expected) in [(0.0, 0.25), (PI, 0.0), (0.5 * PI, 0.125)] {
        let tags = franson_route_and_detect(&pairs, &setup(phase), &mut seeded(1, 2)).unwrap();
        let (central, _, _) = central_and_singles(&tags);
        // Half of all pairs take equal arms; p11 of those pass both.
        let rate = central as f64 / n;
        assert!((rate - expected).abs() < 0.01, "phase {phase}: central fraction {rate}, expected {expected}");
    }
}

#[test]
fn singles_do_not_depend_on_phase() {
    let pairs = stream(0.9, 12);
    let n = pairs.events.len() as f64;
    for phase in [0.0, 1.0, 2.0, PI] {
        let tags = franson_route_and_detect(&pairs, &setup(phase), &mut seeded(3, 4)).unwrap();
        let (_, xx, x) = central_and_singles(&tags);
        for count in [xx, x] {
            let f = count as f64 / n;
            assert!((f - 0.5).abs() < 4.0 * (0.25 / n).sqrt(), "phase {phase}: singles fraction {f}");
        }
    }
}

#[test]
fn mismatched_delays_are_rejected() {
    let mut s = setup(0.0);
    s.mzi2.long_arm += 0.01;
    assert!(franson_route_and_detect(&stream(1.0, 13), &s, &mut seeded(1, 1)).is_err());
}

#[test]
fn detector_efficiency_and_dead_time() {
    let tags: Vec<TimeTag> = (0..100_000).map(|k| TimeTag::new(0, k * 1000)).collect();
    let lossy = DetectorModel { jitter_sigma: 0.0, efficiency: 0.6, dead_time: 0.0 };
    let kept = apply_detector(&tags, &lossy, &mut seeded(5, 5)).len() as f64;
    assert!((kept / 1e5 - 0.6).abs() < 4.0 * (0.24f64 / 1e5).sqrt());

    let dead = DetectorModel { jitter_sigma: 0.0, efficiency: 1.0, dead_time: 1500.0 };
    let out = apply_detector(&tags, &dead, &mut seeded(5, 6));
    assert_eq!(out.len(), 50_000);
    assert!(out.windows(2).all(|w| w[1].time - w[0].time >= 1500));
}

#[test]
fn jitter_has_the_configured_width() {
    let tags: Vec<TimeTag> = (0..50_000).map(|k| TimeTag::new(0, 1_000_000 + k * 100_000)).collect();
    let model = DetectorModel { jitter_sigma: 30.0, efficiency: 1.0, dead_time: 0.0 };
    let out = apply_detector(&tags, &model, &mut seeded(6, 6));
    let shifts: Vec<f64> = out.iter().zip(&tags).map(|(a, b)| a.time as f64 - b.time as f64).collect();
    let mean = shifts.iter().sum::<f64>() / shifts.len() as f64;
    let sd = (shifts.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / shifts.len() as f64).sqrt();
    assert!(mean.abs() < 1.0 && (sd - 30.0).abs() < 1.0, "mean {mean}, sd {sd}");
}

#[test]
fn direct_detection_keeps_channel_order() {
    let pairs = stream(1.0, 14);
    let tags = direct_detect(&pairs, &DetectorModel::ideal(), &DetectorModel::ideal(), &mut seeded(7, 7));
    assert_eq!(tags.len(), 2 * pairs.events.len());
    assert!(tags.windows(2).all(|w| (w[0].time, w[0].channel) <= (w[1].time, w[1].channel)));
}

#[test]
fn noiseless_michelson_intensity_is_exact() {
    let scan = MichelsonScan {
        t2: 508.0,
        fss: 28e-6,
        basis: Basis::Horizontal,
        delays: vec![0.0, 508.0],
        piezo_steps: 8,
        noise_sigma: 0.0,
        mean_intensity: 2.0,
    };
    let records = michelson_fringe_scan(&scan, &mut seeded(8, 8)).unwrap();
    assert!((records[0].intensities[0] - 4.0).abs() < 1e-12);
    assert!((records[1].intensities[0] - 2.0 * (1.0 + (-1.0f64).exp())).abs() < 1e-12);
}
