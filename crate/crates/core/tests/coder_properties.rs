use std::f64::consts::{FRAC_PI_2, PI};

use phasecoder::coder::phase_distance;
use phasecoder::{
    angle_to_phase, angular_distance, decode, decode_dual, decode_dual_to_angle, encode,
    encode_dual, phase_to_angle, Branch, Phase, PhaseCode, SymmetryConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRID: usize = 10_000;

fn phase_grid() -> impl Iterator<Item = f64> {
    (0..GRID).map(|i| -PI + 2.0 * PI * i as f64 / GRID as f64)
}

fn angle_grid() -> impl Iterator<Item = f64> {
    (0..GRID).map(|i| -FRAC_PI_2 + PI * i as f64 / GRID as f64)
}

fn perturbed(code: &PhaseCode, mut f: impl FnMut(usize, f64) -> f64) -> PhaseCode {
    PhaseCode::new(
        code.values()
            .iter()
            .enumerate()
            .map(|(i, &x)| f(i, x))
            .collect(),
    )
    .unwrap()
}

#[test]
fn round_trip_on_dense_grid() {
    for n in [3, 4, 5, 8] {
        let worst = phase_grid()
            .map(|phi| {
                let phi = Phase::new(phi).unwrap();
                phase_distance(decode(&encode(phi, n).unwrap()).unwrap(), phi)
            })
            .fold(0.0, f64::max);
        assert!(worst <= 1e-9, "n = {n}: {worst}");
    }
}

#[test]
fn decode_matches_closed_form_sums() {
    // numerator = -(N/2) sin(phi), denominator = (N/2) cos(phi)
    for n in [3usize, 4, 5] {
        for phi in [-3.0, -1.5, 0.7, 2.9] {
            let code = encode(Phase::new(phi).unwrap(), n).unwrap();
            let (mut num, mut den) = (0.0, 0.0);
            for (i, x) in code.values().iter().enumerate() {
                let a = 2.0 * PI * (i + 1) as f64 / n as f64;
                num += x * a.sin();
                den += x * a.cos();
            }
            let half = n as f64 / 2.0;
            assert!((num + half * phi.sin()).abs() < 1e-12);
            assert!((den - half * phi.cos()).abs() < 1e-12);
        }
    }
}

#[test]
fn noise_robustness_on_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for n in [3, 4, 5, 8] {
        let mut worst: f64 = 0.0;
        for phi in phase_grid().step_by(7) {
            let phi = Phase::new(phi).unwrap();
            let code = encode(phi, n).unwrap();
            let noisy = perturbed(&code, |_, x| x + rng.random_range(-0.05..=0.05));
            worst = worst.max(phase_distance(decode(&noisy).unwrap(), phi));
        }
        assert!(worst <= 0.15, "n = {n}: {worst}");
    }
}

#[test]
fn dual_round_trip_on_dense_grid() {
    let rect = SymmetryConfig::rectangle();
    let edges = (3..=12).flat_map(|k| {
        let e = 10f64.powi(-k);
        [FRAC_PI_2 - e, -FRAC_PI_2 + e]
    });
    for n in [3, 4, 5] {
        for theta in angle_grid().chain(edges.clone()) {
            let back = decode_dual_to_angle(&encode_dual(theta, n).unwrap()).unwrap();
            let err = angular_distance(back, theta, &rect);
            assert!(err <= 1e-9, "n = {n}, theta = {theta}: {err}");
            assert!(rect.contains(back));
        }
    }
}

#[test]
fn frequency_two_phase_is_authoritative() {
    for n in [3, 4, 5] {
        for theta in angle_grid().step_by(3) {
            let code = encode_dual(theta, n).unwrap();
            let unwrapped = decode_dual(&code).unwrap();
            let phi2 = decode(code.x2()).unwrap();
            let doubled = Phase::new(2.0 * unwrapped.phi.radians()).unwrap();
            assert!(phase_distance(doubled, phi2) <= 1e-9, "theta = {theta}");
            assert!((unwrapped.delta.abs() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn branch_survives_frequency_one_noise() {
    let square = SymmetryConfig::square();
    let rect = SymmetryConfig::rectangle();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [3, 4, 5] {
        for theta in angle_grid().step_by(5) {
            let clean = encode_dual(theta, n).unwrap();
            let expected = decode_dual(&clean).unwrap();
            let x1 = perturbed(clean.x1(), |_, x| x + rng.random_range(-0.2..=0.2));
            let noisy = phasecoder::DualPhaseCode::new(x1, clean.x2().clone()).unwrap();
            let got = decode_dual(&noisy).unwrap();
            if got.delta.abs() > 0.5 {
                assert_eq!(got.branch, expected.branch, "theta = {theta}");
                let back = decode_dual_to_angle(&noisy).unwrap();
                assert!(angular_distance(back, theta, &square) <= 1e-9);
                assert!(angular_distance(back, theta, &rect) <= 1e-9);
            }
        }
    }
}

#[test]
fn dual_branch_examples() {
    assert_eq!(
        decode_dual(&encode_dual(0.6, 3).unwrap()).unwrap().branch,
        Branch::Direct
    );
    assert_eq!(
        decode_dual(&encode_dual(-1.0, 3).unwrap()).unwrap().branch,
        Branch::Shifted
    );
}

#[test]
fn boundary_codes_converge() {
    let rect = SymmetryConfig::rectangle();
    let at_lower = encode(angle_to_phase(-FRAC_PI_2, &rect).unwrap(), 3).unwrap();
    let dual_lower = encode_dual(-FRAC_PI_2, 3).unwrap().to_vec();
    for k in 3..=9 {
        let eps = 10f64.powi(-k);
        let near_upper = encode(angle_to_phase(FRAC_PI_2 - eps, &rect).unwrap(), 3).unwrap();
        let gap = near_upper
            .values()
            .iter()
            .zip(at_lower.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap <= 2.0 * 2.0 * eps, "k = {k}: {gap}");

        let dual_upper = encode_dual(FRAC_PI_2 - eps, 3).unwrap().to_vec();
        let gap = dual_upper
            .iter()
            .zip(&dual_lower)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap <= 2.0 * 4.0 * eps, "dual k = {k}: {gap}");
    }
}

fn sup_norm(a: &PhaseCode, b: &PhaseCode) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn symmetry() -> impl Strategy<Value = SymmetryConfig> {
    prop_oneof![
        Just(SymmetryConfig::rectangle()),
        Just(SymmetryConfig::square()),
        Just(SymmetryConfig::heading()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn round_trip(phi in -PI..PI, n in 3usize..=12) {
        let phi = Phase::new(phi).unwrap();
        let back = decode(&encode(phi, n).unwrap()).unwrap();
        prop_assert!(phase_distance(back, phi) <= 1e-9);
    }

    #[test]
    fn dc_offset_invariance(phi in -PI..PI, n in prop::sample::select(vec![3usize, 4, 5, 8]), c in -10.0..=10.0f64) {
        let code = encode(Phase::new(phi).unwrap(), n).unwrap();
        let reference = decode(&code).unwrap();
        let shifted = decode(&perturbed(&code, |_, x| x + c)).unwrap();
        prop_assert!(phase_distance(shifted, reference) <= 1e-9);
    }

    #[test]
    fn positive_scale_invariance(phi in -PI..PI, n in prop::sample::select(vec![3usize, 4, 5, 8]), a in 0.1..=10.0f64) {
        let phi = Phase::new(phi).unwrap();
        let code = encode(phi, n).unwrap();
        let scaled = decode(&perturbed(&code, |_, x| a * x)).unwrap();
        prop_assert!(phase_distance(scaled, phi) <= 1e-9);
    }

    #[test]
    fn encode_stays_in_unit_range(phi in -PI..PI, n in 3usize..=16) {
        let code = encode(Phase::new(phi).unwrap(), n).unwrap();
        prop_assert!(code.values().iter().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn codes_are_lipschitz_in_angle(cfg in symmetry(), u in 0.0..1.0f64, v in 0.0..1.0f64, n in 3usize..=8) {
        let (lo, hi) = cfg.range();
        let t1 = lo + u * (hi - lo);
        let t2 = lo + v * (hi - lo);
        let c1 = encode(angle_to_phase(t1, &cfg).unwrap(), n).unwrap();
        let c2 = encode(angle_to_phase(t2, &cfg).unwrap(), n).unwrap();
        let bound = cfg.frequency() * angular_distance(t1, t2, &cfg);
        prop_assert!(sup_norm(&c1, &c2) <= bound + 1e-12);
    }

    #[test]
    fn angle_phase_round_trip(cfg in symmetry(), u in 0.0..1.0f64) {
        let (lo, hi) = cfg.range();
        let theta = lo + u * (hi - lo);
        let back = phase_to_angle(angle_to_phase(theta, &cfg).unwrap(), &cfg);
        prop_assert!(angular_distance(back, theta, &cfg) <= 1e-12);
        prop_assert!(back >= lo && back < hi);
    }

    #[test]
    fn angular_distance_is_a_bounded_symmetric_metric(cfg in symmetry(), a in -3.0..3.0f64, b in -3.0..3.0f64, m in -3i32..=3) {
        let d = angular_distance(a, b, &cfg);
        prop_assert!(d >= 0.0 && d <= cfg.period() / 2.0);
        prop_assert!((d - angular_distance(b, a, &cfg)).abs() <= 1e-12);
        let shifted = angular_distance(a + m as f64 * cfg.period(), b, &cfg);
        prop_assert!((d - shifted).abs() <= 1e-9);
    }

    #[test]
    fn square_like_invariance_of_x2(theta in -FRAC_PI_2..FRAC_PI_2, quarter_turns in 1i32..=3, n in 3usize..=5) {
        let rect = SymmetryConfig::rectangle();
        let turned = rect.wrap_angle(theta + quarter_turns as f64 * FRAC_PI_2).unwrap();
        prop_assert!(angular_distance(theta, turned, &SymmetryConfig::square()) <= 1e-12);
        let a = encode_dual(theta, n).unwrap();
        let b = encode_dual(turned, n).unwrap();
        prop_assert!(sup_norm(a.x2(), b.x2()) <= 1e-9);
    }

    #[test]
    fn wrap_phase_lands_in_half_open_interval(raw in -1e6..1e6f64, period in 0.01..100.0f64) {
        let w = phasecoder::wrap_phase(raw, period).unwrap();
        prop_assert!(w >= -period / 2.0 && w < period / 2.0);
        let k = ((raw - w) / period).round();
        prop_assert!((raw - w - k * period).abs() <= 1e-9 * raw.abs().max(1.0));
    }
}
